//! Relaxation estimate of F_p on a smooth parallel and on a curve with a corner.

use std::f64::consts::FRAC_PI_2;

use sphere_pcurv::curve_model::{make_corner_curve, make_parallel};
use sphere_pcurv::experiments::relaxation_estimate;

fn main() -> sphere_pcurv::Result<()> {
    let eps = [0.4, 0.2, 0.1, 0.05, 0.025];
    for c in [make_parallel(1.0, 1.0)?, make_corner_curve(FRAC_PI_2, 1.0)?] {
        let r = relaxation_estimate(&c, 2.0, &eps)?;
        println!("{}: F_2 ~ {:.6} (diverging: {})", r.curve, r.value, r.diverging);
        for row in &r.rows {
            println!("  eps {:<6} min k_p {:.6} over {} inscriptions", row.eps, row.min_k_p, row.candidates);
        }
    }
    Ok(())
}
