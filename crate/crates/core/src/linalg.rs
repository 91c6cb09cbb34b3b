//! Small dense helpers on top of nalgebra: cyclic Jacobi eigen-solver for
//! symmetric matrices, residual norms, fixed-step RK4.

use nalgebra::{DMatrix, DVector};

/// Eigen-decomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal mass is at round-off level.
/// Only the symmetric part of `m` is used.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "symmetric_eigen needs a square matrix");
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-20 * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

/// Sorted eigenvalues of the symmetric part of `m`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    symmetric_eigen(m).values
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// `max |m - mᵀ|`
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// `max |m + mᵀ|`
pub fn skewness_defect(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m + m.transpose()))
}

/// `max |mᵀm - I|`
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    max_abs(&(m.transpose() * m - DMatrix::identity(n, n)))
}

/// Classical RK4 for `y' = f(t, y)` on matrices; returns every step.
pub fn rk4_matrix<E>(
    mut f: impl FnMut(f64, &DMatrix<f64>) -> Result<DMatrix<f64>, E>,
    t0: f64,
    y0: DMatrix<f64>,
    h: f64,
    steps: usize,
) -> Result<Vec<DMatrix<f64>>, E> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y.clone());
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &(&y + &k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(&y + &k2 * (0.5 * h)))?;
        let k4 = f(t + h, &(&y + &k3 * h))?;
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push(y.clone());
    }
    Ok(out)
}

/// Classical RK4 for `y' = f(t, y)` on vectors; returns the final state.
pub fn rk4_vector<E>(
    mut f: impl FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, E>,
    t0: f64,
    y0: DVector<f64>,
    h: f64,
    steps: usize,
) -> Result<DVector<f64>, E> {
    let mut y = y0;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &(&y + &k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(&y + &k2 * (0.5 * h)))?;
        let k4 = f(t + h, &(&y + &k3 * h))?;
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(y)
}

/// Number of steps of size close to `h` covering `[t0, t1]`.
pub fn step_count(t0: f64, t1: f64, h: f64) -> usize {
    (((t1 - t0) / h).round() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym_strategy(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-5.0f64..5.0, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    }

    proptest! {
        #[test]
        fn jacobi_agrees_with_nalgebra(m in (2usize..7).prop_flat_map(sym_strategy)) {
            let ours = symmetric_eigen(&m);
            let mut reference: Vec<f64> =
                nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            for (a, b) in ours.values.iter().zip(reference) {
                prop_assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()));
            }
            prop_assert!(orthogonality_defect(&ours.vectors) < 1e-12);
            let recon = &ours.vectors * DMatrix::from_diagonal(&ours.values) * ours.vectors.transpose();
            prop_assert!(max_abs(&(recon - &m)) < 1e-11 * (1.0 + max_abs(&m)));
        }
    }

    #[test]
    fn diagonal_input_gives_identity_vectors() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 5.0]));
        let e = symmetric_eigen(&m);
        assert_eq!(e.values.as_slice(), &[1.0, 2.0, 5.0]);
        assert_eq!(e.vectors, DMatrix::identity(3, 3));
    }

    #[test]
    fn rk4_matrix_exponential_growth() {
        // Y' = Y, Y(0) = I → Y(1) = e I
        let out = rk4_matrix::<()>(|_, y| Ok(y.clone()), 0.0, DMatrix::identity(2, 2), 1e-3, 1000)
            .unwrap();
        let last = out.last().unwrap();
        assert!((last[(0, 0)] - std::f64::consts::E).abs() < 1e-12);
        assert_eq!(out.len(), 1001);
    }
}
