//! Uniform-time and equilateral inscriptions: mesh, modulus, rotations.

use sphere_pcurv::bend_construction::p_rotation;
use sphere_pcurv::curve_model::make_parallel;
use sphere_pcurv::polygonal::{inscribe_at_times, inscribe_equilateral_with, intrinsic_rotation, polygonal_stats, Closing};

fn main() -> sphere_pcurv::Result<()> {
    let c = make_parallel(1.2, 1.0)?;
    let times: Vec<f64> = (0..=20).map(|i| c.domain() * f64::from(i) / 20.0).collect();
    let uniform = inscribe_at_times(&c, &times)?;
    println!("uniform: {:?}", polygonal_stats(&c, &uniform, 64));

    for closing in [Closing::ShortLastEdge, Closing::Exact] {
        let poly = inscribe_equilateral_with(&c, 0.1, closing)?;
        println!(
            "{closing:?}: {} edges, last edge {:.6}, rotation {:.6}, k_2 {:.6}",
            poly.num_edges(),
            poly.edge_lengths().last().unwrap(),
            intrinsic_rotation(&poly),
            p_rotation(&poly, 2.0)?
        );
    }
    let mut out = std::io::stdout().lock();
    inscribe_equilateral_with(&c, 0.5, Closing::Exact)?.write_csv(&mut out)
}
