//! Conditions for a time-dependent alternative multiplier `g(t)`.
//!
//! Each check returns the max-norm residual over its evaluation set
//! together with the worst point. [`verify_all`] runs all of them and adds
//! the structural flags (symmetry, non-singularity, multiple of identity).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::EvalPoint;
use crate::linalg::{asymmetry, max_abs, symmetric_eigenvalues};
use crate::model::{connection_from, connection_gradient_from, curvature_from, EmSystem};
use crate::path::{ExprMatrix, MatrixPath, TimeMatrix};

/// A candidate multiplier, a matrix function of time only.
#[derive(Clone, Debug)]
pub struct MultiplierCandidate {
    pub matrix: TimeMatrix,
    pub claims_constant: bool,
}

impl MultiplierCandidate {
    pub fn new(matrix: TimeMatrix) -> Self {
        Self { matrix, claims_constant: false }
    }

    pub fn constant(m: &DMatrix<f64>) -> Self {
        Self { matrix: TimeMatrix::constant(m), claims_constant: true }
    }

    pub fn from_exprs(m: ExprMatrix) -> Self {
        Self::new(TimeMatrix::Exprs(m))
    }

    pub fn from_path(p: MatrixPath) -> Self {
        Self::new(TimeMatrix::Path(p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape().0
    }

    pub fn value(&self, t: f64) -> Result<DMatrix<f64>> {
        self.matrix.value(t)
    }

    /// `(g, ġ)`; a candidate claiming to be constant has `ġ = 0`.
    pub fn value_and_rate(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if self.claims_constant {
            let g = self.value(t)?;
            let z = DMatrix::zeros(g.nrows(), g.ncols());
            return Ok((g, z));
        }
        let [g, dg, _] = self.matrix.jet(t)?;
        Ok((g, dg))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Condition residuals when all derivatives are exact.
    pub expr: f64,
    /// Condition residuals when a sampled path is involved.
    pub path: f64,
    pub symmetry: f64,
    pub singular: f64,
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { expr: 1e-8, path: 1e-5, symmetry: 1e-10, singular: 1e-8, identity: 1e-8 }
    }
}

impl Tolerances {
    /// Overrides both condition tolerances.
    pub fn with_condition_tol(self, tol: f64) -> Self {
        Self { expr: tol, path: tol, ..self }
    }
}

/// Uniform grid of sample times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, points: usize) -> Self {
        Self { t0, t1, points }
    }

    /// Grid of step close to `h`.
    pub fn with_step(t0: f64, t1: f64, h: f64) -> Result<Self> {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::BadStep(h));
        }
        Ok(Self::new(t0, t1, crate::linalg::step_count(t0, t1, h) + 1))
    }

    pub fn times(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.t0];
        }
        let step = (self.t1 - self.t0) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.t0 + k as f64 * step).collect()
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::new(0.0, 1.0, 101)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub worst_point: Option<WorstPoint>,
}

impl Residual {
    fn zero() -> Self {
        Self { value: 0.0, worst_point: None }
    }

    fn update(&mut self, value: f64, t: f64, x: &[f64]) {
        if value > self.value || (self.worst_point.is_none() && value >= self.value) {
            self.value = value;
            self.worst_point = Some(WorstPoint { t, x: x.to_vec() });
        }
    }
}

/// One row of a [`ConditionReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst_point: Option<WorstPoint>,
}

impl ConditionResult {
    fn new(condition: &str, r: Residual, tol: f64) -> Self {
        Self {
            condition: condition.to_string(),
            pass: r.value <= tol,
            residual: r.value,
            tol,
            worst_point: r.worst_point,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureFlags {
    pub symmetric: bool,
    pub symmetry_defect: f64,
    pub nonsingular: bool,
    /// Smallest eigenvalue magnitude over the grid.
    pub min_abs_eigenvalue: f64,
    pub multiple_of_identity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub conditions: Vec<ConditionResult>,
    pub flags: StructureFlags,
    pub warnings: Vec<String>,
    pub pass: bool,
    pub grid: TimeGrid,
    pub samples: usize,
    pub tolerances: Tolerances,
    /// Whether the path tolerance was applied.
    pub path_based: bool,
}

impl ConditionReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.condition == name)
    }

    pub fn max_residual(&self) -> f64 {
        self.conditions.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

pub const DOTG: &str = "g_dot";
pub const SKEW_DERIVATIVE: &str = "skew_derivative";
pub const CYCLIC_GAMMA: &str = "cyclic_gamma";
pub const CURVATURE: &str = "curvature";
pub const POTENTIAL: &str = "potential_symmetry";

const MIN_GRID_POINTS: usize = 5;

fn check_dims(sys: &EmSystem, g: &MultiplierCandidate) -> Result<()> {
    let (r, c) = g.matrix.shape();
    if r != c || r != sys.dim() {
        return Err(Error::Dimension(format!(
            "multiplier is {r}×{c} but the system has dimension {}",
            sys.dim()
        )));
    }
    Ok(())
}

/// `max ‖ġ − gΓ − (gΓ)ᵀ‖` over grid times and the positions of `points`.
pub fn check_dotg(
    sys: &EmSystem,
    g: &MultiplierCandidate,
    grid: &TimeGrid,
    points: &[EvalPoint],
) -> Result<Residual> {
    check_dims(sys, g)?;
    if grid.points < MIN_GRID_POINTS {
        return Err(Error::GridTooCoarse { points: grid.points, min: MIN_GRID_POINTS });
    }
    let origin = [vec![0.0; sys.dim()]];
    let xs: Vec<&[f64]> = if points.is_empty() {
        origin.iter().map(Vec::as_slice).collect()
    } else {
        points.iter().map(|p| p.x.as_slice()).collect()
    };
    let mut res = Residual::zero();
    for t in grid.times() {
        let (gv, dg) = g.value_and_rate(t)?;
        for x in &xs {
            let gamma = sys.connection(t, x)?;
            let gg = &gv * &gamma;
            res.update(max_abs(&(&dg - &gg - gg.transpose())), t, x);
        }
    }
    Ok(res)
}

/// `max ‖g ∂Γ/∂xʳ + (g ∂Γ/∂xʳ)ᵀ‖` over points and `r`.
pub fn check_skewderiv(
    sys: &EmSystem,
    g: &MultiplierCandidate,
    points: &[EvalPoint],
) -> Result<Residual> {
    check_dims(sys, g)?;
    let mut res = Residual::zero();
    for p in points {
        let gv = g.value(p.t)?;
        let jet = sys.jet(p.t, &p.x)?;
        for dg in connection_gradient_from(&jet) {
            let m = &gv * dg;
            res.update(max_abs(&(&m + m.transpose())), p.t, &p.x);
        }
    }
    Ok(res)
}

/// Cyclic sum `∂γ_ar/∂xᵇ + ∂γ_rb/∂xᵃ + ∂γ_ba/∂xʳ` with `γ = gΓ`.
pub fn check_curv(sys: &EmSystem, g: &MultiplierCandidate, points: &[EvalPoint]) -> Result<Residual> {
    check_dims(sys, g)?;
    let n = sys.dim();
    let mut res = Residual::zero();
    for p in points {
        let gv = g.value(p.t)?;
        let jet = sys.jet(p.t, &p.x)?;
        // dgamma[k][(i, j)] = ∂γ_ij/∂xᵏ
        let dgamma: Vec<DMatrix<f64>> =
            connection_gradient_from(&jet).iter().map(|d| &gv * d).collect();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for r in 0..n {
                    let s = dgamma[b][(a, r)] + dgamma[a][(r, b)] + dgamma[r][(b, a)];
                    worst = worst.max(s.abs());
                }
            }
        }
        res.update(worst, p.t, &p.x);
    }
    Ok(res)
}

/// `max |g_ar Rʳ_bc + g_br Rʳ_ca + g_cr Rʳ_ab|` over points and index triples.
pub fn check_r_condition(
    sys: &EmSystem,
    g: &MultiplierCandidate,
    points: &[EvalPoint],
) -> Result<Residual> {
    check_dims(sys, g)?;
    let n = sys.dim();
    let mut res = Residual::zero();
    for p in points {
        let gv = g.value(p.t)?;
        let jet = sys.jet(p.t, &p.x)?;
        let r = curvature_from(&connection_gradient_from(&jet));
        let lowered = |a: usize, b: usize, c: usize| (0..n).map(|k| gv[(a, k)] * r.get(k, b, c)).sum::<f64>();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let s = lowered(a, b, c) + lowered(b, c, a) + lowered(c, a, b);
                    worst = worst.max(s.abs());
                }
            }
        }
        res.update(worst, p.t, &p.x);
    }
    Ok(res)
}

/// Asymmetry of `g [Hess V + sym ∂²A/∂t∂x − Γ²]`.
pub fn check_veqn(sys: &EmSystem, g: &MultiplierCandidate, points: &[EvalPoint]) -> Result<Residual> {
    check_dims(sys, g)?;
    let mut res = Residual::zero();
    for p in points {
        let gv = g.value(p.t)?;
        let jet = sys.jet(p.t, &p.x)?;
        let gamma = connection_from(&jet.first);
        let bracket = &jet.hess_v + (&jet.dtda + jet.dtda.transpose()) * 0.5 - &gamma * &gamma;
        res.update(asymmetry(&(&gv * bracket)), p.t, &p.x);
    }
    Ok(res)
}

fn structure_flags(g: &MultiplierCandidate, grid: &TimeGrid, tol: &Tolerances) -> Result<StructureFlags> {
    let mut symmetry_defect = 0.0f64;
    let mut min_abs_eigenvalue = f64::INFINITY;
    let mut off_identity = 0.0f64;
    for t in grid.times() {
        let gv = g.value(t)?;
        let n = gv.nrows();
        symmetry_defect = symmetry_defect.max(asymmetry(&gv));
        let ev = symmetric_eigenvalues(&gv);
        min_abs_eigenvalue = ev.iter().fold(min_abs_eigenvalue, |m, v| m.min(v.abs()));
        let scalar = gv.trace() / n as f64;
        off_identity = off_identity.max(max_abs(&(&gv - DMatrix::identity(n, n) * scalar)));
    }
    Ok(StructureFlags {
        symmetric: symmetry_defect <= tol.symmetry,
        symmetry_defect,
        nonsingular: min_abs_eigenvalue > tol.singular,
        min_abs_eigenvalue,
        multiple_of_identity: off_identity <= tol.identity,
    })
}

/// Runs every condition plus the structural checks.
///
/// The path tolerance applies when either the multiplier or the system
/// involves sampled data. Singularity and being a multiple of the identity
/// are reported as warnings and do not fail the report.
pub fn verify_all(
    sys: &EmSystem,
    g: &MultiplierCandidate,
    grid: &TimeGrid,
    points: &[EvalPoint],
    tol: &Tolerances,
) -> Result<ConditionReport> {
    check_dims(sys, g)?;
    let path_based = !g.matrix.is_exact() || !sys.is_exact();
    let ctol = if path_based { tol.path } else { tol.expr };
    let conditions = vec![
        ConditionResult::new(DOTG, check_dotg(sys, g, grid, points)?, ctol),
        ConditionResult::new(SKEW_DERIVATIVE, check_skewderiv(sys, g, points)?, ctol),
        ConditionResult::new(CYCLIC_GAMMA, check_curv(sys, g, points)?, ctol),
        ConditionResult::new(CURVATURE, check_r_condition(sys, g, points)?, ctol),
        ConditionResult::new(POTENTIAL, check_veqn(sys, g, points)?, ctol),
    ];
    let flags = structure_flags(g, grid, tol)?;
    let mut warnings = Vec::new();
    if !flags.nonsingular {
        warnings.push(format!(
            "multiplier is singular or nearly so (min |eigenvalue| = {:e})",
            flags.min_abs_eigenvalue
        ));
    }
    if flags.multiple_of_identity {
        warnings.push("multiplier is a multiple of the identity".to_string());
    }
    if !flags.symmetric {
        warnings.push(format!("multiplier is not symmetric (defect {:e})", flags.symmetry_defect));
    }
    let pass = flags.symmetric && conditions.iter().all(|c| c.pass);
    Ok(ConditionReport {
        conditions,
        flags,
        warnings,
        pass,
        grid: *grid,
        samples: points.len(),
        tolerances: *tol,
        path_based,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_cloud, CloudSpec};

    fn cloud(n: usize) -> Vec<EvalPoint> {
        sample_cloud(n, &CloudSpec::default())
    }

    #[test]
    fn identity_passes_for_any_system() {
        let s = EmSystem::parse(
            3,
            "x1^2*x2 + sin(t*x3)",
            &["x2*x3^2 + t*x1", "cos(x1)*t - x3", "x1*x2*exp(0.1*t)"],
        )
        .unwrap();
        let g = MultiplierCandidate::constant(&DMatrix::identity(3, 3));
        let r = verify_all(&s, &g, &TimeGrid::default(), &cloud(3), &Tolerances::default()).unwrap();
        assert!(r.pass, "{r:#?}");
        assert!(r.flags.multiple_of_identity);
    }

    #[test]
    fn constant_diagonal_against_rotation_connection() {
        let s = EmSystem::parse(2, "0", &["x2", "-x1"]).unwrap();
        let g = MultiplierCandidate::constant(&DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0]));
        let r = check_dotg(&s, &g, &TimeGrid::default(), &cloud(2)).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let s = EmSystem::parse(1, "0", &["0"]).unwrap();
        let g = MultiplierCandidate::constant(&DMatrix::identity(1, 1));
        assert!(matches!(
            check_dotg(&s, &g, &TimeGrid::new(0.0, 1.0, 4), &[]),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn x_dependent_connection_breaks_non_identity_multipliers() {
        // Γ¹₂ = x₃ from A = (x₃x₂, −x₃x₁, 0) → ∂Γ¹₂/∂x₃ = 1
        let s = EmSystem::parse(3, "0", &["x3*x2", "-x3*x1", "0"]).unwrap();
        let g = MultiplierCandidate::constant(&DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0, 3.0]));
        let r = check_skewderiv(&s, &g, &cloud(3)).unwrap();
        assert!(r.value > 0.5);
        let id = MultiplierCandidate::constant(&DMatrix::identity(3, 3));
        assert!(check_curv(&s, &id, &cloud(3)).unwrap().value < 1e-14);
        let g = MultiplierCandidate::constant(&DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 2.0]));
        assert!((check_curv(&s, &g, &cloud(3)).unwrap().value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn report_serializes_with_expected_fields() {
        let s = EmSystem::parse(1, "0.5*x1^2", &["0"]).unwrap();
        let g = MultiplierCandidate::constant(&(DMatrix::identity(1, 1) * 2.0));
        let r = verify_all(&s, &g, &TimeGrid::default(), &cloud(1), &Tolerances::default()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        let first = &json["conditions"][0];
        for key in ["condition", "residual", "tol", "pass", "worst_point"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert!(r.warnings.iter().any(|w| w.contains("multiple of the identity")));
    }
}
