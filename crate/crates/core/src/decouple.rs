//! Diagonalisation of a multiplier path and decoupling of the system.
//!
//! A multiplier satisfying the Lax equation has constant eigenvalues. An
//! orthogonal `P(t)` diagonalising it turns the system, in coordinates
//! `x = P y`, into independent subsystems, one per eigenspace. The reverse
//! direction, [`compose_coupled`], assembles a coupled system from
//! decoupled pieces.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{sum, EvalPoint, Expression, HyperDual, Scalar};
use crate::helmholtz::{MultiplierCandidate, TimeGrid};
use crate::lax::spectrum_report;
use crate::linalg::{orthogonality_defect, symmetric_eigen};
use crate::model::{connection_from, EmSystem, FnPotentials};
use crate::path::{lifted_mul, lifted_transpose, ExprMatrix, FnMatrix, MatrixPath, TimeMatrix};

/// Relative gap below which eigenvalues share a block.
pub const BLOCK_GAP: f64 = 1e-6;
/// Largest eigenvalue drift accepted before diagonalising.
pub const MAX_DRIFT: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub eigenvalue: f64,
    /// Zero-based coordinate indices.
    pub indices: Vec<usize>,
}

/// Partition of the coordinates by eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    pub blocks: Vec<Block>,
}

fn same_eigenvalue(a: f64, b: f64) -> bool {
    (a - b).abs() <= BLOCK_GAP * a.abs().max(b.abs()).max(1.0)
}

impl BlockStructure {
    /// Groups consecutive entries of an ascending list.
    pub fn from_sorted(values: &[f64]) -> Self {
        let mut blocks: Vec<Block> = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            match blocks.last_mut() {
                Some(b) if same_eigenvalue(values[i - 1], v) => b.indices.push(i),
                _ => blocks.push(Block { eigenvalue: v, indices: vec![i] }),
            }
        }
        for b in &mut blocks {
            b.eigenvalue = b.indices.iter().map(|&i| values[i]).sum::<f64>() / b.indices.len() as f64;
        }
        Self { blocks }
    }

    /// Consecutive blocks of the given sizes.
    pub fn from_sizes(sizes: &[usize], eigenvalues: &[f64]) -> Self {
        let mut offset = 0;
        let blocks = sizes
            .iter()
            .zip(eigenvalues)
            .map(|(&m, &eigenvalue)| {
                let b = Block { eigenvalue, indices: (offset..offset + m).collect() };
                offset += m;
                b
            })
            .collect();
        Self { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.indices.len()).sum()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    fn labels(&self) -> Vec<usize> {
        let mut label = vec![0; self.dim()];
        for (k, b) in self.blocks.iter().enumerate() {
            for &i in &b.indices {
                label[i] = k;
            }
        }
        label
    }

    /// Largest entry of `m` coupling two different blocks.
    pub fn cross_max(&self, m: &DMatrix<f64>) -> f64 {
        let label = self.labels();
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if label[i] != label[j] {
                    worst = worst.max(m[(i, j)].abs());
                }
            }
        }
        worst
    }
}

/// Output of [`diagonalize_path`].
#[derive(Clone, Debug)]
pub struct Diagonalization {
    /// Orthogonal path with eigenvectors as columns.
    pub p: MatrixPath,
    /// Sorted eigenvalues at the first node.
    pub eigenvalues: Vec<f64>,
    pub blocks: BlockStructure,
    pub drift: f64,
    /// `max_t` of the off-diagonal part of `PᵀgP`.
    pub offdiag_defect: f64,
    pub orthogonality_defect: f64,
}

/// Orthogonal eigenvector path of a symmetric isospectral path.
///
/// Within each eigenspace the basis at a node is rotated to be as close as
/// possible to the basis at the previous node (polar factor of the overlap
/// matrix). For one-dimensional blocks this is the sign choice with
/// positive overlap.
pub fn diagonalize_path(g: &MatrixPath) -> Result<Diagonalization> {
    let report = spectrum_report(g);
    if report.drift > MAX_DRIFT {
        return Err(Error::NotIsospectral { drift: report.drift, limit: MAX_DRIFT });
    }
    let eigenvalues = report.initial.clone();
    let blocks = BlockStructure::from_sorted(&eigenvalues);
    // Crossings only matter between distinct blocks.
    for b in 1..blocks.len() {
        let (lo, hi) = (&blocks.blocks[b - 1], &blocks.blocks[b]);
        for (i, m) in g.samples().iter().enumerate() {
            let ev = symmetric_eigen(m).values;
            let gap = ev[hi.indices[0]] - ev[*lo.indices.last().unwrap()];
            if gap <= BLOCK_GAP * (1.0 + hi.eigenvalue.abs()) {
                return Err(Error::EigenvalueCrossing { t: g.time(i), gap });
            }
        }
    }
    let n = g.shape().0;
    let mut samples: Vec<DMatrix<f64>> = Vec::with_capacity(g.len());
    let mut offdiag_defect = 0.0f64;
    for m in g.samples() {
        let mut v = symmetric_eigen(m).vectors;
        match samples.last() {
            None => {
                // Deterministic sign: largest component of each column positive.
                for c in 0..n {
                    let col = v.column(c);
                    let k = col.iamax();
                    if col[k] < 0.0 {
                        v.column_mut(c).neg_mut();
                    }
                }
            }
            Some(prev) => {
                for b in &blocks.blocks {
                    let (start, width) = (b.indices[0], b.indices.len());
                    let cur = v.columns(start, width).into_owned();
                    let old = prev.columns(start, width);
                    let overlap = cur.transpose() * old;
                    let svd = overlap.svd(true, true);
                    let rot = svd.u.unwrap() * svd.v_t.unwrap();
                    v.columns_mut(start, width).copy_from(&(cur * rot));
                }
            }
        }
        let d = v.transpose() * m * &v;
        let off = d.clone() - DMatrix::from_diagonal(&d.diagonal());
        offdiag_defect = offdiag_defect.max(blocks.cross_max(&off).max(within_block_offdiag(&blocks, &off)));
        samples.push(v);
    }
    let p = MatrixPath::new(g.t0(), g.step(), samples)?;
    let orth = p.max_over_nodes(orthogonality_defect);
    Ok(Diagonalization {
        p,
        eigenvalues,
        blocks,
        drift: report.drift,
        offdiag_defect,
        orthogonality_defect: orth,
    })
}

fn within_block_offdiag(blocks: &BlockStructure, off: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for b in &blocks.blocks {
        for &i in &b.indices {
            for &j in &b.indices {
                worst = worst.max(off[(i, j)].abs());
            }
        }
    }
    worst
}

/// `Γ̃ = P⁻¹ΓP + P⁻¹Ṗ` node by node; both paths must share the grid.
pub fn transformed_connection(gamma: &MatrixPath, p: &MatrixPath) -> Result<MatrixPath> {
    if gamma.len() != p.len()
        || (gamma.t0() - p.t0()).abs() > 1e-12
        || (gamma.step() - p.step()).abs() > 1e-12 * p.step()
    {
        return Err(Error::Dimension("connection and transform paths use different grids".into()));
    }
    let (dp, _) = p.node_derivatives()?;
    let samples = (0..p.len())
        .map(|i| {
            let pi = p.sample(i);
            let inv = pi.clone().lu().try_inverse().ok_or(Error::Singular { t: p.time(i) })?;
            Ok(&inv * gamma.sample(i) * pi + &inv * &dp[i])
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixPath::new(p.t0(), p.step(), samples)
}

/// Jacobians `(∂F̃/∂y, ∂F̃/∂ẏ)` of the transformed forces
/// `F̃ = P⁻¹(F(t, Py, Ṗy + Pẏ) − P̈y − 2Ṗẏ)`.
pub fn transformed_jacobians(
    sys: &EmSystem,
    p_jet: &[DMatrix<f64>; 3],
    t: f64,
    y: &[f64],
    ydot: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = sys.dim();
    let [p, dp, ddp] = p_jet;
    let inv = p.clone().lu().try_inverse().ok_or(Error::Singular { t })?;
    let yv = nalgebra::DVector::from_column_slice(y);
    let ydv = nalgebra::DVector::from_column_slice(ydot);
    let x = p * &yv;
    let xdot = dp * &yv + p * &ydv;
    let jet = sys.jet(t, x.as_slice())?;
    let jv = connection_from(&jet.first) * -2.0;
    let jx = DMatrix::from_fn(n, n, |a, c| {
        let vel: f64 =
            (0..n).map(|b| (jet.d2a[b][(a, c)] - jet.d2a[a][(b, c)]) * xdot[b]).sum();
        vel - jet.hess_v[(a, c)] - jet.dtda[(a, c)]
    });
    let dy = &inv * (&jx * p + &jv * dp - ddp);
    let dydot = &inv * (&jv * p - dp * 2.0);
    Ok((dy, dydot))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub blocks: BlockStructure,
    /// `max |∂F̃ᴬ/∂yᴮ|` over cross-block pairs and points.
    pub position_cross: f64,
    /// `max |∂F̃ᴬ/∂ẏᴮ|` over cross-block pairs and points.
    pub velocity_cross: f64,
    pub samples: usize,
}

impl DecouplingReport {
    pub fn max_cross(&self) -> f64 {
        self.position_cross.max(self.velocity_cross)
    }
}

/// Cross-block residuals of the transformed system. Points are read as
/// `(t, y, ẏ)`.
pub fn check_decoupling(
    sys: &EmSystem,
    p: &TimeMatrix,
    blocks: &BlockStructure,
    points: &[EvalPoint],
) -> Result<DecouplingReport> {
    if blocks.dim() != sys.dim() || p.shape() != (sys.dim(), sys.dim()) {
        return Err(Error::Dimension("block structure, transform and system disagree".into()));
    }
    let mut position_cross = 0.0f64;
    let mut velocity_cross = 0.0f64;
    for pt in points {
        let jet = p.jet(pt.t)?;
        let (dy, dydot) = transformed_jacobians(sys, &jet, pt.t, &pt.x, &pt.xdot)?;
        position_cross = position_cross.max(blocks.cross_max(&dy));
        velocity_cross = velocity_cross.max(blocks.cross_max(&dydot));
    }
    Ok(DecouplingReport { blocks: blocks.clone(), position_cross, velocity_cross, samples: points.len() })
}

/// A coupled system assembled from decoupled pieces.
#[derive(Clone, Debug)]
pub struct Composition {
    pub system: EmSystem,
    pub multiplier: MultiplierCandidate,
    pub blocks: BlockStructure,
    /// True when the result is expressed in closed form.
    pub symbolic: bool,
    pub warnings: Vec<String>,
}

const ORTHOGONALITY_TOL: f64 = 1e-7;

/// Couples `subsystems` (in `y` coordinates) through `x = P(t) y`.
///
/// With `y = Pᵀx` the potentials become
/// `A = P A_y(t, Pᵀx) + PṖᵀx` and
/// `V = V_y(t, Pᵀx) − A_y·(Ṗᵀx) − ½|Ṗᵀx|²`,
/// and `g = P diag(λ) Pᵀ`. When every piece has expressions and `P` is an
/// expression matrix the result is symbolic; otherwise it is evaluated
/// through closures. `P` is checked for orthogonality on `grid`.
pub fn compose_coupled(
    subsystems: &[EmSystem],
    lambdas: &[f64],
    p: &TimeMatrix,
    grid: &TimeGrid,
) -> Result<Composition> {
    if subsystems.is_empty() || subsystems.len() != lambdas.len() {
        return Err(Error::Dimension("need one eigenvalue per subsystem".into()));
    }
    let sizes: Vec<usize> = subsystems.iter().map(EmSystem::dim).collect();
    let n: usize = sizes.iter().sum();
    if p.shape() != (n, n) {
        return Err(Error::Dimension(format!("transform is {:?}, expected {n}×{n}", p.shape())));
    }
    for i in 0..lambdas.len() {
        for j in 0..i {
            if same_eigenvalue(lambdas[i], lambdas[j]) {
                return Err(Error::Invalid(format!(
                    "eigenvalues {} and {} are not distinct",
                    lambdas[j], lambdas[i]
                )));
            }
        }
    }
    let mut warnings = Vec::new();
    if lambdas.contains(&0.0) {
        warnings.push("a zero eigenvalue makes the multiplier singular".to_string());
    }
    for t in grid.times() {
        let defect = orthogonality_defect(&p.value(t)?);
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::Invalid(format!("transform is not orthogonal at t = {t} (defect {defect:e})")));
        }
    }
    let diag: Vec<f64> = sizes.iter().zip(lambdas).flat_map(|(&m, &l)| std::iter::repeat_n(l, m)).collect();
    let blocks = BlockStructure::from_sizes(&sizes, lambdas);

    if let (TimeMatrix::Exprs(pe), Some(parts)) =
        (p, subsystems.iter().map(EmSystem::expressions).collect::<Option<Vec<_>>>())
    {
        let (system, g) = compose_symbolic(&parts, &sizes, pe, &diag)?;
        return Ok(Composition {
            system,
            multiplier: MultiplierCandidate::from_exprs(g),
            blocks,
            symbolic: true,
            warnings,
        });
    }
    let (system, g) = compose_field(subsystems, &sizes, p, &diag)?;
    Ok(Composition { system, multiplier: MultiplierCandidate::new(g), blocks, symbolic: false, warnings })
}

fn compose_symbolic(
    parts: &[(Expression, Vec<Expression>)],
    sizes: &[usize],
    p: &ExprMatrix,
    diag: &[f64],
) -> Result<(EmSystem, ExprMatrix)> {
    use crate::expr::product;
    let n = diag.len();
    let pdot = p.diff_t();
    let x: Vec<Expression> = (0..n).map(Expression::x).collect();
    // (Pᵀx)_k and (Ṗᵀx)_k
    let pt_x: Vec<Expression> =
        (0..n).map(|k| sum((0..n).map(|j| product(p.get(j, k).clone(), x[j].clone())))).collect();
    let pdt_x: Vec<Expression> =
        (0..n).map(|k| sum((0..n).map(|j| product(pdot.get(j, k).clone(), x[j].clone())))).collect();
    let mut v_terms = Vec::new();
    let mut a_y: Vec<Expression> = Vec::with_capacity(n);
    let mut offset = 0;
    for ((v, a), &m) in parts.iter().zip(sizes) {
        let local = &pt_x[offset..offset + m];
        let zeros = vec![Expression::Const(0.0); m];
        v_terms.push(v.substitute(&Expression::t(), local, &zeros));
        a_y.extend(a.iter().map(|e| e.substitute(&Expression::t(), local, &zeros)));
        offset += m;
    }
    for k in 0..n {
        v_terms.push(crate::expr::s_neg(product(a_y[k].clone(), pdt_x[k].clone())));
        v_terms.push(product(Expression::Const(-0.5), product(pdt_x[k].clone(), pdt_x[k].clone())));
    }
    let v = sum(v_terms);
    let a: Vec<Expression> = (0..n)
        .map(|i| {
            sum((0..n).map(|k| product(p.get(i, k).clone(), crate::expr::s_add(a_y[k].clone(), pdt_x[k].clone()))))
        })
        .collect();
    let system = EmSystem::from_expressions(n, v, a)?;
    let lam = ExprMatrix::from_constant(&DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)));
    let g = p.matmul(&lam)?.matmul(&p.transpose())?;
    Ok((system, g))
}

fn compose_field(
    subsystems: &[EmSystem],
    sizes: &[usize],
    p: &TimeMatrix,
    diag: &[f64],
) -> Result<(EmSystem, TimeMatrix)> {
    let n = diag.len();
    let pdot = p.derivative()?;
    let exact = p.is_exact() && subsystems.iter().all(EmSystem::is_exact);
    let p = Arc::new(p.clone());
    let pdot = Arc::new(pdot);
    let subs: Arc<Vec<EmSystem>> = Arc::new(subsystems.to_vec());
    let sizes: Arc<Vec<usize>> = Arc::new(sizes.to_vec());

    // Shared pieces at a hyper-dual point: (P, Ṗᵀx, V_y, A_y).
    type Pieces = (Vec<HyperDual>, Vec<HyperDual>, HyperDual, Vec<HyperDual>);
    let pieces = {
        let (p, pdot, subs, sizes) = (p.clone(), pdot.clone(), subs.clone(), sizes.clone());
        move |t: HyperDual, x: &[HyperDual]| -> Result<Pieces> {
            let pm = p.eval_lifted(t)?;
            let pd = pdot.eval_lifted(t)?;
            let y = lifted_mul(&lifted_transpose(&pm, n, n), x, n, n, 1);
            let pdt_x = lifted_mul(&lifted_transpose(&pd, n, n), x, n, n, 1);
            let mut v = HyperDual::real(0.0);
            let mut a_y = Vec::with_capacity(n);
            let mut offset = 0;
            for (s, &m) in subs.iter().zip(sizes.iter()) {
                let local = &y[offset..offset + m];
                v = v + s.potentials().scalar(t, local)?;
                a_y.extend(s.potentials().vector(t, local)?);
                offset += m;
            }
            Ok((pm, pdt_x, v, a_y))
        }
    };
    let pieces = Arc::new(pieces);
    let pv = pieces.clone();
    let v = move |t: HyperDual, x: &[HyperDual]| {
        let (_, pdt_x, mut v, a_y) = pv(t, x)?;
        for k in 0..n {
            v = v - a_y[k] * pdt_x[k] - (pdt_x[k] * pdt_x[k]).scale(0.5);
        }
        Ok(v)
    };
    let a = move |t: HyperDual, x: &[HyperDual]| {
        let (pm, pdt_x, _, a_y) = pieces(t, x)?;
        let inner: Vec<HyperDual> = (0..n).map(|k| a_y[k] + pdt_x[k]).collect();
        Ok(lifted_mul(&pm, &inner, n, n, 1))
    };
    let mut pots = FnPotentials::new(n, "composition", v, a);
    if !exact {
        pots = pots.inexact();
    }
    let diag = diag.to_vec();
    let gp = p.clone();
    let g = move |t: HyperDual| {
        let pm = gp.eval_lifted(t)?;
        let scaled: Vec<HyperDual> = (0..n * n).map(|idx| pm[idx].scale(diag[idx % n])).collect();
        Ok(lifted_mul(&scaled, &lifted_transpose(&pm, n, n), n, n, n))
    };
    let mut gm = FnMatrix::new(n, n, g);
    if !exact {
        gm = gm.inexact();
    }
    Ok((EmSystem::new(Arc::new(pots)), TimeMatrix::Func(gm)))
}

/// `max_t ‖PᵀgP − diag‖` restricted to cross-block entries, sampled on a grid.
pub fn cross_block_max(g: &TimeMatrix, p: &TimeMatrix, blocks: &BlockStructure, grid: &TimeGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in grid.times() {
        let pv = p.value(t)?;
        worst = worst.max(blocks.cross_max(&(pv.transpose() * g.value(t)? * &pv)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helmholtz::{verify_all, Tolerances};
    use crate::sampling::{sample_cloud, CloudSpec};

    fn rotation_exprs() -> ExprMatrix {
        ExprMatrix::parse(&[vec!["cos(t)", "-sin(t)"], vec!["sin(t)", "cos(t)"]]).unwrap()
    }

    #[test]
    fn block_grouping() {
        let b = BlockStructure::from_sorted(&[1.0, 1.0 + 1e-9, 2.0, 5.0]);
        assert_eq!(b.sizes(), vec![2, 1, 1]);
        assert_eq!(b.dim(), 4);
    }

    #[test]
    fn constant_diagonal_path_gives_identity() {
        let g = MatrixPath::from_fn(0.0, 1.0, 0.1, |_| {
            Ok(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 3.0]))
        })
        .unwrap();
        let d = diagonalize_path(&g).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 3.0]);
        assert!(d.p.samples().iter().all(|m| *m == DMatrix::identity(2, 2)));
    }

    #[test]
    fn drifting_path_is_rejected() {
        let g = MatrixPath::from_fn(0.0, 1.0, 0.1, |t| {
            Ok(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 3.0 + t]))
        })
        .unwrap();
        assert!(matches!(diagonalize_path(&g), Err(Error::NotIsospectral { .. })));
    }

    #[test]
    fn rotation_generator_from_transformed_connection() {
        let p = TimeMatrix::Exprs(rotation_exprs()).sample(0.0, 1.0, 1e-2).unwrap();
        let zero = p.map(|_, _| DMatrix::zeros(2, 2)).unwrap();
        let gt = transformed_connection(&zero, &p).unwrap();
        let gen = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(gt.max_over_nodes(|m| crate::linalg::max_abs(&(m - &gen))) < 1e-7);
    }

    #[test]
    fn two_oscillators_through_a_rotation() {
        let a = EmSystem::parse(1, "0.5*x1^2", &["0"]).unwrap();
        let b = EmSystem::parse(1, "2*x1^2 + 0.1*x1^3", &["0"]).unwrap();
        let p = TimeMatrix::Exprs(rotation_exprs());
        let grid = TimeGrid::default();
        let c = compose_coupled(&[a.clone(), b.clone()], &[1.0, 2.0], &p, &grid).unwrap();
        assert!(c.symbolic);
        let cloud = sample_cloud(2, &CloudSpec::default());
        let r = verify_all(&c.system, &c.multiplier, &grid, &cloud, &Tolerances::default()).unwrap();
        assert!(r.pass && r.max_residual() < 1e-6, "{r:#?}");
        let d = check_decoupling(&c.system, &p, &c.blocks, &cloud).unwrap();
        assert!(d.max_cross() < 1e-12);

        // The closure route agrees with the symbolic one.
        let pf = {
            let (e, d) = (rotation_exprs(), rotation_exprs().diff_t());
            let fd = FnMatrix::new(2, 2, move |t| d.eval_with(t));
            TimeMatrix::Func(FnMatrix::new(2, 2, move |t| e.eval_with(t)).with_derivative(fd))
        };
        let cf = compose_coupled(&[a, b], &[1.0, 2.0], &pf, &grid).unwrap();
        assert!(!cf.symbolic);
        for pt in &cloud {
            let fs = c.system.forces(pt).unwrap();
            let ff = cf.system.forces(pt).unwrap();
            assert!((fs - ff).amax() < 1e-12);
        }
    }

    #[test]
    fn compose_rejects_repeated_eigenvalues() {
        let a = EmSystem::parse(1, "x1^2", &["0"]).unwrap();
        let p = TimeMatrix::Exprs(rotation_exprs());
        assert!(compose_coupled(&[a.clone(), a], &[1.0, 1.0], &p, &TimeGrid::default()).is_err());
    }

    #[test]
    fn round_trip_recovers_blocks() {
        let a = EmSystem::parse(1, "0.5*x1^2", &["0"]).unwrap();
        let b = EmSystem::parse(1, "x1^4", &["0"]).unwrap();
        let p = TimeMatrix::Exprs(rotation_exprs());
        let c = compose_coupled(&[a, b], &[1.0, 2.0], &p, &TimeGrid::default()).unwrap();
        let gpath = c.multiplier.matrix.sample(0.0, 1.0, 1e-2).unwrap();
        let d = diagonalize_path(&gpath).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-12 && (d.eigenvalues[1] - 2.0).abs() < 1e-12);
        let cloud = sample_cloud(2, &CloudSpec::default());
        let r = check_decoupling(&c.system, &TimeMatrix::Path(d.p), &d.blocks, &cloud).unwrap();
        assert!(r.max_cross() < 1e-5, "{r:?}");
    }
}
