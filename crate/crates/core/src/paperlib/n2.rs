//! Two-dimensional family with `A = (σx₂, −σx₁)` and a quadratic potential.
//!
//! With `α(t) = A − 2∫₀ᵗ σ`, the multiplier
//! `g = ½[[C + B cos α, −B sin α], [−B sin α, C − B cos α]]` is admissible
//! whenever `V = ½k x₁² + l x₁x₂ + ½m x₂²` has `l = (m − k) ρ`, `ρ = ½ tan α`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::decouple::BlockStructure;
use crate::error::{Error, Result};
use crate::expr::{Expression, HyperDual, Scalar};
use crate::helmholtz::MultiplierCandidate;
use crate::model::{EmSystem, FnPotentials};
use crate::path::{FnMatrix, TimeMatrix};
use crate::quadrature::adaptive_simpson;

const ALPHA_TOL: f64 = 1e-10;
/// `|cos α|` below this is treated as a pole of `ρ`.
pub const POLE_MARGIN: f64 = 1e-3;
const SCAN_POINTS: usize = 2001;

#[derive(Clone, Debug, PartialEq)]
pub struct N2Family {
    pub sigma: Expression,
    pub k: Expression,
    pub m: Expression,
    /// Value of `α` at `t = 0`.
    pub phase: f64,
    pub b: f64,
    /// Trace of `g`.
    pub c: f64,
    /// Added to the admissible coupling `l`; nonzero values break admissibility.
    pub l_offset: f64,
}

fn time_only(e: &Expression, name: &str) -> Result<()> {
    if e.max_index() > 0 || e.mentions_velocity() {
        return Err(Error::Invalid(format!("{name} must depend on t only")));
    }
    Ok(())
}

impl N2Family {
    pub fn new(sigma: Expression, k: Expression, m: Expression, phase: f64, b: f64, c: f64) -> Result<Self> {
        for (e, name) in [(&sigma, "sigma"), (&k, "k"), (&m, "m")] {
            time_only(e, name)?;
        }
        if ![phase, b, c].iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("family constants must be finite".into()));
        }
        Ok(Self { sigma, k, m, phase, b, c, l_offset: 0.0 })
    }

    pub fn with_l_offset(mut self, delta: f64) -> Self {
        self.l_offset = delta;
        self
    }

    /// `α(t) = A − 2∫₀ᵗ σ(s) ds`.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        let integral = adaptive_simpson::<Error>(|s| Ok(self.sigma.eval_t(s)?), 0.0, t, ALPHA_TOL)?;
        Ok(self.phase - 2.0 * integral)
    }

    /// `α` lifted to a hyper-dual time, using `α̇ = −2σ` and `α̈ = −2σ̇`.
    fn alpha_lifted(&self, t: HyperDual) -> Result<HyperDual> {
        let alpha = self.alpha(t.re)?;
        if t.is_real() {
            return Ok(HyperDual::real(alpha));
        }
        let s = self.sigma.eval_with(HyperDual::new(t.re, 1.0, 0.0, 0.0), &[], &[])?;
        Ok(t.chain(alpha, -2.0 * s.re, -2.0 * s.e1))
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        let a = self.alpha(t)?;
        if a.cos().abs() < POLE_MARGIN {
            return Err(Error::Pole { t, cos_alpha: a.cos() });
        }
        Ok(0.5 * a.tan())
    }

    /// Closed-form multiplier at `t`.
    pub fn multiplier_at(&self, t: f64) -> Result<DMatrix<f64>> {
        let a = self.alpha(t)?;
        Ok(closed_form(self.b, self.c, a))
    }

    /// `(½(C − B), ½(C + B))`, the eigenvalues along `(sin α, cos α + 1)`
    /// and `(sin α, cos α − 1)` respectively.
    pub fn eigenvalues(&self) -> [f64; 2] {
        [0.5 * (self.c - self.b), 0.5 * (self.c + self.b)]
    }

    /// Largest `[t0, t1']` with `t1' ≤ t1` on which `ρ` stays away from its
    /// poles. Errors when `t0` itself is too close to a pole.
    pub fn pole_free_window(&self, t0: f64, t1: f64) -> Result<(f64, f64)> {
        let h = (t1 - t0) / (SCAN_POINTS - 1) as f64;
        let mut last_good = t0;
        let mut prev_sign = 0.0;
        for i in 0..SCAN_POINTS {
            let t = t0 + h * i as f64;
            let ca = self.alpha(t)?.cos();
            if ca.abs() < POLE_MARGIN || (i > 0 && ca.signum() != prev_sign) {
                if i == 0 {
                    return Err(Error::Pole { t, cos_alpha: ca });
                }
                // stay a few scan steps clear of the pole
                let back = last_good - 4.0 * h;
                if back <= t0 {
                    return Err(Error::Pole { t, cos_alpha: ca });
                }
                return Ok((t0, back));
            }
            prev_sign = ca.signum();
            last_good = t;
        }
        Ok((t0, t1))
    }

    /// Builds the system, multiplier and decoupling transforms on `[t0, t1]`,
    /// shrinking the window to avoid poles of `ρ`.
    pub fn build(&self, t0: f64, t1: f64) -> Result<N2Build> {
        let window = self.pole_free_window(t0, t1)?;
        let mut warnings = Vec::new();
        if window.1 < t1 {
            warnings.push(format!(
                "window restricted to [{}, {}] to avoid a pole of tan(alpha)",
                window.0, window.1
            ));
        }
        if self.b == 0.0 {
            warnings.push("B = 0: the multiplier is a multiple of the identity".into());
        }
        let mut isotropic = true;
        for i in 0..=20 {
            let t = window.0 + (window.1 - window.0) * i as f64 / 20.0;
            if (self.m.eval_t(t)? - self.k.eval_t(t)?).abs() > 1e-12 {
                isotropic = false;
            }
        }
        if isotropic {
            warnings.push("m = k: the coupling l vanishes and the potential is isotropic".into());
        }

        let fam = Arc::new(self.clone());
        let v = {
            let fam = fam.clone();
            move |t: HyperDual, x: &[HyperDual]| {
                let alpha = fam.alpha_lifted(t)?;
                let ca = alpha.re.cos();
                if ca.abs() < POLE_MARGIN {
                    return Err(Error::Pole { t: t.re, cos_alpha: ca });
                }
                let tn = alpha.re.tan();
                let sec2 = 1.0 + tn * tn;
                let rho = alpha.chain(tn, sec2, 2.0 * tn * sec2).scale(0.5);
                let k = fam.k.eval_with(t, &[], &[])?;
                let m = fam.m.eval_with(t, &[], &[])?;
                let l = (m - k) * rho + HyperDual::real(fam.l_offset);
                Ok((k * x[0] * x[0] + m * x[1] * x[1]).scale(0.5) + l * x[0] * x[1])
            }
        };
        let a = {
            let fam = fam.clone();
            move |t: HyperDual, x: &[HyperDual]| {
                let s = fam.sigma.eval_with(t, &[], &[])?;
                Ok(vec![s * x[1], -(s * x[0])])
            }
        };
        let system = EmSystem::new(Arc::new(FnPotentials::new(2, "n2 family", v, a)));

        let multiplier = {
            let (f1, f2) = (fam.clone(), fam.clone());
            let g = FnMatrix::new(2, 2, move |t| {
                let al = f1.alpha_lifted(t)?;
                let (c, s) = (cos_l(al), sin_l(al));
                let half = |v: HyperDual| v.scale(0.5);
                let off = half(-(s.scale(f1.b)));
                Ok(vec![
                    half(HyperDual::real(f1.c) + c.scale(f1.b)),
                    off,
                    off,
                    half(HyperDual::real(f1.c) - c.scale(f1.b)),
                ])
            });
            // ġ = ½ B α̇ [[−sin α, −cos α], [−cos α, sin α]]
            let dg = FnMatrix::new(2, 2, move |t| {
                let al = f2.alpha_lifted(t)?;
                let rate = f2.sigma.eval_with(t, &[], &[])?.scale(-f2.b);
                let (c, s) = (cos_l(al), sin_l(al));
                Ok(vec![-(rate * s), -(rate * c), -(rate * c), rate * s])
            });
            MultiplierCandidate::new(TimeMatrix::Func(g.with_derivative(dg)))
        };

        let eigenvector_transform = {
            let fam = fam.clone();
            TimeMatrix::Func(FnMatrix::new(2, 2, move |t| {
                let al = fam.alpha_lifted(t)?;
                let (c, s) = (cos_l(al), sin_l(al));
                let one = HyperDual::real(1.0);
                // inverse of the rows (sin α, cos α + 1), (sin α, cos α − 1)
                let det = (s * (c - one) - s * (c + one)).re;
                if det.abs() < 1e-12 {
                    return Err(Error::Singular { t: t.re });
                }
                let inv_det = one / (s * (c - one) - s * (c + one));
                Ok(vec![(c - one) * inv_det, -((c + one) * inv_det), -(s * inv_det), s * inv_det])
            }))
        };
        let orthogonal_transform = {
            let fam = fam.clone();
            TimeMatrix::Func(FnMatrix::new(2, 2, move |t| {
                let half = fam.alpha_lifted(t)?.scale(0.5);
                let (c, s) = (cos_l(half), sin_l(half));
                Ok(vec![s, c, c, -s])
            }))
        };
        let ev = self.eigenvalues();
        Ok(N2Build {
            system,
            multiplier,
            eigenvector_transform,
            orthogonal_transform,
            blocks: BlockStructure::from_sizes(&[1, 1], &ev),
            eigenvalues: ev,
            window,
            warnings,
        })
    }
}

fn sin_l(a: HyperDual) -> HyperDual {
    let (s, c) = a.re.sin_cos();
    a.chain(s, c, -s)
}

fn cos_l(a: HyperDual) -> HyperDual {
    let (s, c) = a.re.sin_cos();
    a.chain(c, -s, -c)
}

/// `½[[C + B cos α, −B sin α], [−B sin α, C − B cos α]]`
pub fn closed_form(b: f64, c: f64, alpha: f64) -> DMatrix<f64> {
    let (s, co) = alpha.sin_cos();
    DMatrix::from_row_slice(2, 2, &[0.5 * (c + b * co), -0.5 * b * s, -0.5 * b * s, 0.5 * (c - b * co)])
}

#[derive(Clone, Debug)]
pub struct N2Build {
    pub system: EmSystem,
    pub multiplier: MultiplierCandidate,
    /// `x = P y` for `y₁ = sin α x₁ + (cos α + 1) x₂`, `y₂ = sin α x₁ + (cos α − 1) x₂`.
    pub eigenvector_transform: TimeMatrix,
    /// Orthonormal eigenvectors of `g`, a reflection through angle `α/2`.
    pub orthogonal_transform: TimeMatrix,
    pub blocks: BlockStructure,
    pub eigenvalues: [f64; 2],
    pub window: (f64, f64),
    pub warnings: Vec<String>,
}
