//! Adding a vertex can lower the intrinsic rotation of a spherical polygon.

use std::f64::consts::FRAC_PI_4;

use sphere_pcurv::experiments::{first_edge_midpoint_time, monotonicity_counterexample};

fn main() -> sphere_pcurv::Result<()> {
    for n in [6, 12, 24, 48] {
        let r = monotonicity_counterexample(FRAC_PI_4, n, first_edge_midpoint_time(FRAC_PI_4, n))?;
        println!(
            "n {n:>3}: k*(P) {:.6}  k*(P') {:.6}  ∫|k| {:.6}  holds {}",
            r.k_star_p, r.k_star_p_prime, r.integral_k1, r.holds()
        );
    }
    Ok(())
}
