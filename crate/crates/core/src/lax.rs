//! The multiplier equation `ġ = gΓ − Γg` as an isospectral flow.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_abs, rk4_matrix, skewness_defect, step_count, symmetric_eigenvalues};
use crate::path::MatrixPath;

const SKEW_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-10;
/// Sorted eigenvalue gaps below this are treated as crossings.
pub const CROSSING_GAP: f64 = 1e-10;

/// Integrates `ġ = gΓ(t) − Γ(t)g` with classical RK4 from `g(t0) = g0`.
///
/// The step is adjusted to divide `[t0, t1]` evenly. `Γ` is checked for
/// skew-symmetry at every evaluation.
pub fn solve_lax(
    gamma: impl Fn(f64) -> Result<DMatrix<f64>>,
    g0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<MatrixPath> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::BadStep(h));
    }
    if !g0.is_square() {
        return Err(Error::Dimension("initial multiplier must be square".into()));
    }
    let defect = asymmetry(g0);
    if defect > SYMMETRY_TOL * (1.0 + max_abs(g0)) {
        return Err(Error::NotSymmetric { what: "initial multiplier", defect });
    }
    let steps = step_count(t0, t1, h);
    let step = (t1 - t0) / steps as f64;
    let samples = rk4_matrix(
        |t, g| {
            let gm = gamma(t)?;
            if gm.shape() != g.shape() {
                return Err(Error::Dimension("connection and multiplier differ in shape".into()));
            }
            let defect = skewness_defect(&gm);
            if defect > SKEW_TOL * (1.0 + max_abs(&gm)) {
                return Err(Error::NotSkew { what: "connection", t, defect });
            }
            Ok(g * &gm - &gm * g)
        },
        t0,
        g0.clone(),
        step,
        steps,
    )?;
    MatrixPath::new(t0, step, samples)
}

/// Spectral diagnostics of a matrix path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted eigenvalues at the first node.
    pub initial: Vec<f64>,
    /// `max_t max_i |λ_i(t) − λ_i(t0)|`
    pub drift: f64,
    /// `max_t |tr g(t) − tr g(t0)|`
    pub trace_drift: f64,
    pub symmetry_defect: f64,
    /// Smallest gap between sorted eigenvalues belonging to distinct
    /// clusters, with the time it occurs.
    pub min_gap: Option<(f64, f64)>,
    /// Times where two sorted eigenvalues that start apart come within
    /// [`CROSSING_GAP`] of each other.
    pub crossing: Option<f64>,
}

pub fn eigen_drift(path: &MatrixPath) -> f64 {
    spectrum_report(path).drift
}

pub fn spectrum_report(path: &MatrixPath) -> SpectrumReport {
    let first = symmetric_eigenvalues(path.sample(0));
    let tr0 = path.sample(0).trace();
    let mut drift = 0.0f64;
    let mut trace_drift = 0.0f64;
    let mut symmetry_defect = 0.0f64;
    let mut min_gap: Option<(f64, f64)> = None;
    let mut crossing = None;
    let n = first.len();
    for (i, m) in path.samples().iter().enumerate() {
        let t = path.time(i);
        let ev = symmetric_eigenvalues(m);
        for k in 0..n {
            drift = drift.max((ev[k] - first[k]).abs());
        }
        trace_drift = trace_drift.max((m.trace() - tr0).abs());
        symmetry_defect = symmetry_defect.max(asymmetry(m));
        for k in 1..n {
            if first[k] - first[k - 1] > CROSSING_GAP {
                let gap = ev[k] - ev[k - 1];
                if min_gap.is_none_or(|(g, _)| gap < g) {
                    min_gap = Some((gap, t));
                }
                if gap < CROSSING_GAP && crossing.is_none() {
                    crossing = Some(t);
                }
            }
        }
    }
    SpectrumReport {
        initial: first.iter().copied().collect(),
        drift,
        trace_drift,
        symmetry_defect,
        min_gap,
        crossing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_connection_keeps_initial_value() {
        let g0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = solve_lax(|_| Ok(DMatrix::zeros(2, 2)), &g0, 0.0, 1.0, 0.1).unwrap();
        assert!(p.samples().iter().all(|m| *m == g0));
    }

    #[test]
    fn non_lax_path_drifts_by_window_length() {
        let p = MatrixPath::from_fn(0.0, 2.0, 0.1, |t| {
            Ok(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0 + t]))
        })
        .unwrap();
        assert!((eigen_drift(&p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g0 = DMatrix::identity(2, 2);
        let not_skew = |_| Ok(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(matches!(solve_lax(not_skew, &g0, 0.0, 1.0, 0.1), Err(Error::NotSkew { .. })));
        assert!(matches!(
            solve_lax(|_| Ok(DMatrix::zeros(2, 2)), &g0, 0.0, 1.0, 0.0),
            Err(Error::BadStep(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            solve_lax(|_| Ok(DMatrix::zeros(2, 2)), &asym, 0.0, 1.0, 0.1),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn rotation_flow_conserves_spectrum() {
        let gamma = |t: f64| {
            let s = 1.0 + 0.5 * t.sin();
            Ok(DMatrix::from_row_slice(2, 2, &[0.0, s, -s, 0.0]))
        };
        let g0 = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
        let p = solve_lax(gamma, &g0, 0.0, 1.0, 1e-3).unwrap();
        let r = spectrum_report(&p);
        assert!(r.drift < 1e-10 && r.trace_drift < 1e-12 && r.crossing.is_none());
        assert!(r.symmetry_defect < 1e-12);
    }

    #[test]
    fn crossing_is_detected() {
        let p = MatrixPath::from_fn(0.0, 2.0, 0.25, |t| {
            Ok(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0 - t]))
        })
        .unwrap();
        assert_eq!(spectrum_report(&p).crossing, Some(1.0));
    }
}
