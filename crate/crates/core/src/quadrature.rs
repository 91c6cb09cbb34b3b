//! Gauss–Legendre rules on `[0, 1]` (generic over [`Scalar`]) and adaptive
//! Simpson integration for real integrands.

use std::sync::LazyLock;

use crate::expr::Scalar;

/// Nodes and weights of an `n`-point Gauss–Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

static GL16: LazyLock<(Vec<f64>, Vec<f64>)> = LazyLock::new(|| gauss_legendre_unit(16));

fn gl16_on<S: Scalar, E>(
    f: &mut impl FnMut(f64) -> Result<S, E>,
    a: f64,
    b: f64,
) -> Result<S, E> {
    let (nodes, weights) = &*GL16;
    let width = b - a;
    let mut acc = S::constant(0.0);
    for (s, w) in nodes.iter().zip(weights) {
        acc = acc + f(a + width * s)?.scale(w * width);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonConvergence {
    pub estimate: f64,
    pub error: f64,
}

const UNIT_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 12;

/// `∫₀¹ f(s) ds` by 16-point Gauss–Legendre, which is exact for polynomial
/// integrands of degree ≤ 31. When halving the interval changes the real
/// part, falls back to adaptive bisection.
pub fn integrate_unit<S: Scalar, E: From<NonConvergence>>(
    mut f: impl FnMut(f64) -> Result<S, E>,
) -> Result<S, E> {
    adaptive_gl(&mut f, 0.0, 1.0, None, 0)
}

fn adaptive_gl<S: Scalar, E: From<NonConvergence>>(
    f: &mut impl FnMut(f64) -> Result<S, E>,
    a: f64,
    b: f64,
    whole: Option<S>,
    depth: u32,
) -> Result<S, E> {
    let whole = match whole {
        Some(w) => w,
        None => gl16_on(f, a, b)?,
    };
    let mid = 0.5 * (a + b);
    let left = gl16_on(f, a, mid)?;
    let right = gl16_on(f, mid, b)?;
    let halves = left + right;
    let err = (halves.re() - whole.re()).abs();
    if err <= UNIT_TOL * (b - a) * (1.0 + halves.re().abs()) {
        return Ok(halves);
    }
    if depth >= MAX_DEPTH {
        return Err(NonConvergence { estimate: halves.re(), error: err }.into());
    }
    Ok(adaptive_gl(f, a, mid, Some(left), depth + 1)?
        + adaptive_gl(f, mid, b, Some(right), depth + 1)?)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<E: From<NonConvergence>>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, E> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<E: From<NonConvergence>>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, E> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= 48 {
        return Err(NonConvergence { estimate: left + right, error: delta.abs() }.into());
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_degree_31_exactly() {
        let (x, w) = gauss_legendre_unit(16);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for k in [0, 1, 7, 20, 31] {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn unit_integral_falls_back_for_rough_integrands() {
        let v: f64 =
            integrate_unit::<f64, NonConvergence>(|s| Ok(1.0 / ((s - 0.3).powi(2) + 1e-4))).unwrap();
        let exact = 100.0 * (70f64.atan() + 30f64.atan());
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn simpson_matches_closed_form() {
        let v = adaptive_simpson::<NonConvergence>(|t| Ok(t.cos()), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.0f64.sin()).abs() < 1e-11);
        let back = adaptive_simpson::<NonConvergence>(|t| Ok(t.cos()), 2.0, 0.0, 1e-12).unwrap();
        assert!((back + 2.0f64.sin()).abs() < 1e-11);
    }
}
