//! F_p of a single corner three ways, plus the glued curve's junctions.

use sphere_pcurv::bend_construction::{build_gamma, fp_closed_form, single_corner};

fn main() -> sphere_pcurv::Result<()> {
    println!("{:>6} {:>6} {:>4} {:>22} {:>22} {:>22}", "ell", "theta", "p", "closed form", "exact arcs", "quadrature");
    for (ell, theta) in [(0.5, 0.5), (0.1, 1.0), (0.02, 2.0)] {
        let gamma = build_gamma(&single_corner(ell, theta)?)?;
        for p in [1.0, 2.0, 3.0] {
            println!(
                "{ell:>6} {theta:>6} {p:>4} {:>22.15e} {:>22.15e} {:>22.15e}",
                fp_closed_form(ell, theta, p)?,
                gamma.kp(p),
                gamma.kp_quadrature(p, 8)
            );
        }
        println!("  pieces {}, max tangent mismatch {:.2e}", gamma.pieces().len(), gamma.max_tangent_mismatch());
    }
    Ok(())
}
