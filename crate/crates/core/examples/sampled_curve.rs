//! A curve read from `t,x,y,z` samples, then the usual convergence study.

use std::f64::consts::TAU;

use sphere_pcurv::curve_model::{integral_kp, read_sampled_curve};
use sphere_pcurv::experiments::convergence_study;

fn main() -> sphere_pcurv::Result<()> {
    // A wobbly loop around the north pole.
    let mut text = String::from("t,x,y,z\n");
    for i in 0..=500 {
        let t = f64::from(i) / 500.0;
        let phi = 0.8 + 0.1 * (3.0 * TAU * t).sin();
        let a = TAU * t;
        text.push_str(&format!("{t},{},{},{}\n", phi.sin() * a.cos(), phi.sin() * a.sin(), phi.cos()));
    }
    let c = read_sampled_curve(text.as_bytes(), "wobble")?;
    println!("length {:.6}, ∫k² {:.6}", c.length(), integral_kp(&c, 2.0, 256)?.value);
    let rep = convergence_study(&c, 2.0, &[0.2, 0.1, 0.05])?;
    for r in &rep.rows {
        println!("ell {:<6} h {:>4} k_2 {:.6} rel error {:.2e}", r.ell, r.h, r.k_p, r.rel_error);
    }
    Ok(())
}
