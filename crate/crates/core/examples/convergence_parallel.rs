//! k_p of equilateral inscriptions of a parallel converging to ∫|k|^p.

use std::f64::consts::FRAC_PI_3;

use sphere_pcurv::curve_model::make_parallel;
use sphere_pcurv::experiments::convergence_study;
use sphere_pcurv::report::Report;

fn main() -> sphere_pcurv::Result<()> {
    let c = make_parallel(FRAC_PI_3, 1.0)?;
    let ells: Vec<f64> = (0..5).map(|j| 0.2 / f64::from(1 << j)).collect();
    let rep = convergence_study(&c, 2.0, &ells)?;
    print!("{}", rep.to_csv_string()?);
    println!("strictly decreasing errors: {}", rep.errors_strictly_decreasing());
    Ok(())
}
