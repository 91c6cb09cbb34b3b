//! Deterministic quasi-random sample clouds over `(t, x, xdot)`.

use serde::{Deserialize, Serialize};

use crate::expr::EvalPoint;

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let inv = 1.0 / f64::from(base);
    let mut factor = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % b) as f64 * factor;
        index /= b;
        factor *= inv;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub count: usize,
    pub seed: u64,
    /// Time window the `t` coordinate is mapped into.
    pub t0: f64,
    pub t1: f64,
    /// Half-width of the box for positions and velocities.
    pub radius: f64,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self { count: 20, seed: 0, t0: 0.0, t1: 1.0, radius: 1.0 }
    }
}

/// Halton points in `[t0, t1] × [-r, r]^(2n)`; the seed offsets the sequence.
pub fn sample_cloud(n: usize, spec: &CloudSpec) -> Vec<EvalPoint> {
    assert!(2 * n < PRIMES.len(), "sample cloud supports n < {}", PRIMES.len() / 2);
    let start = 1 + spec.seed * 7919;
    (0..spec.count as u64)
        .map(|k| {
            let idx = start + k;
            let coord = |d: usize| radical_inverse(idx, PRIMES[d]);
            let t = spec.t0 + (spec.t1 - spec.t0) * coord(0);
            let x = (0..n).map(|i| spec.radius * (2.0 * coord(1 + i) - 1.0)).collect();
            let xdot = (0..n).map(|i| spec.radius * (2.0 * coord(1 + n + i) - 1.0)).collect();
            EvalPoint::new(t, x, xdot)
        })
        .collect()
}
