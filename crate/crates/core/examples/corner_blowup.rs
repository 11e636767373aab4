//! k_p grows like h^{p-1} on a curve with a right-angle corner.

use std::f64::consts::FRAC_PI_2;

use sphere_pcurv::experiments::corner_blowup_study;

fn main() -> sphere_pcurv::Result<()> {
    let rep = corner_blowup_study(FRAC_PI_2, 2.0, &[8, 16, 32, 64, 128, 256])?;
    for r in &rep.rows {
        println!("h {:>4}  k_p {:>14.6}  lower bound {:>14.6}", r.h, r.k_p, r.lower_bound);
    }
    println!("growth ratios {:.4?}", rep.growth_ratios());
    Ok(())
}
