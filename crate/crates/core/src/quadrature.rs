//! Composite Gauss-Legendre quadrature (8 nodes per panel).

const NODES: [f64; 4] = [
    0.183_434_642_495_649_78,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const WEIGHTS: [f64; 4] = [
    0.362_683_783_378_361_77,
    0.313_706_645_877_887_05,
    0.222_381_034_453_374_34,
    0.101_228_536_290_376_69,
];

/// Gauss-Legendre rule of order 8 on a single interval.
pub fn gauss_legendre_8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// The same rule on `panels` equal sub-intervals of [a, b].
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            gauss_legendre_8(&f, lo, hi)
        })
        .sum()
}

/// Result of an adaptive run: the finest value, the change from the previous
/// level (used as the error estimate) and the panel count reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Doubles the panel count from `panels` until the relative change drops
/// below `rel_tol` (absolute when the value is below 1), or `max_panels` is hit.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    rel_tol: f64,
    max_panels: usize,
) -> QuadratureEstimate {
    let mut n = panels.max(1);
    let mut prev = composite(&f, a, b, n);
    loop {
        let next_n = n * 2;
        let next = composite(&f, a, b, next_n);
        let err = (next - prev).abs();
        if err <= rel_tol * next.abs().max(1.0) || next_n >= max_panels {
            return QuadratureEstimate {
                value: next,
                error: err,
                panels: next_n,
            };
        }
        n = next_n;
        prev = next;
    }
}
