//! Curvature of planar curves pushed to the sphere by the chart.

use sphere_pcurv::conformal::{pstima_constant, PlanarCurve, Vec2};
use sphere_pcurv::experiments::{conformal_check, conformal_test_curves};

fn main() -> sphere_pcurv::Result<()> {
    let rep = conformal_check(&conformal_test_curves()?, 50)?;
    println!("formula vs finite differences: max rel error {:.2e}", rep.max_rel_error());

    let circle = PlanarCurve::circle(Vec2::zeros(), 2.0, 1.0)?;
    println!("radius-2 circle maps to a curve of curvature {:.2e}", circle.image_curvature(0.3));
    let small = PlanarCurve::circle(Vec2::zeros(), 1.0, 1.0)?;
    let colatitude = 2.0 * 0.5f64.atan();
    println!(
        "radius-1 circle: k = {:.12}, cot of its colatitude = {:.12}",
        small.image_curvature(0.0),
        1.0 / colatitude.tan()
    );

    for p in [1.5, 2.0, 3.0] {
        println!("C({p}) = {:.10}", pstima_constant(p)?);
    }
    Ok(())
}
