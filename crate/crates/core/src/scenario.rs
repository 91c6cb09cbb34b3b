//! JSON scenario files.
//!
//! A scenario names a system in exactly one of three ways: explicit
//! potentials (`system`), a built-in `family`, or a `construct` recipe.
//! Expressions are strings in the expression grammar; matrices of time are
//! `{"exprs": [[..]]}`, `{"constant": [[..]]}` or `{"csv": "path"}`, with
//! CSV paths relative to the scenario file.

use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decouple::{compose_coupled, BlockStructure};
use crate::error::{Error, Result};
use crate::expr::{parse, EvalPoint};
use crate::helmholtz::{MultiplierCandidate, TimeGrid, Tolerances};
use crate::model::EmSystem;
use crate::paperlib::{sec5_build_with, N2Family, N3Family, PotentialMode, Sec5Params};
use crate::path::{ExprMatrix, MatrixPath, TimeMatrix};
use crate::sampling::{sample_cloud, CloudSpec};
use crate::timeonly::construct_system;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construct: Option<ConstructSpec>,
    /// Candidate multiplier; overrides the one a family or recipe provides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<MatrixSpec>,
    #[serde(default)]
    pub claims_constant: bool,
    /// Decoupling transform `x = P(t) y`, used with `blocks`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<MatrixSpec>,
    /// Block sizes for `transform`, in column order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lax: Option<LaxSpec>,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub samples: SampleSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n: usize,
    pub v: String,
    pub a: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSpec {
    Exprs(Vec<Vec<String>>),
    Constant(Vec<Vec<f64>>),
    Csv(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    N2 {
        sigma: String,
        k: String,
        m: String,
        /// `α(0)`
        phase: f64,
        b: f64,
        c: f64,
        #[serde(default)]
        l_offset: f64,
    },
    N3 {
        a: String,
        c1: f64,
        c2: f64,
        /// `f(t, u, v)` over `t, x1, x2`.
        f: String,
        /// `U(t, u, v)` over `t, x1, x2`.
        u: String,
        /// `Z(t, z)` over `t, x1`.
        z: String,
        #[serde(default)]
        mode: PotentialMode,
    },
    Sec5 {
        a: String,
        theta: String,
        #[serde(default)]
        params: Sec5Params,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstructSpec {
    /// `W(t, y)` with a constant multiplier `s` coupled through the
    /// orthogonal `u`.
    Prop3 {
        w: String,
        s: Vec<Vec<f64>>,
        u: MatrixSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<Vec<Vec<String>>>,
    },
    /// Decoupled subsystems with distinct eigenvalues coupled through `p`.
    Compose { subsystems: Vec<SystemSpec>, lambdas: Vec<f64>, p: MatrixSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaxSpec {
    /// `Γ(t)`; defaults to the system's connection at `x = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<String>>>,
    /// `g(t0)`; defaults to the candidate multiplier at `t0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_lax_step")]
    pub h: f64,
}

fn default_lax_step() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSpec {
    pub t0: f64,
    pub t1: f64,
    /// Step of the time grid used by the checks.
    pub h: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { t0: 0.0, t1: 1.0, h: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    pub radius: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        let c = CloudSpec::default();
        Self { count: c.count, seed: c.seed, radius: c.radius }
    }
}

/// Everything a command needs, built from a scenario.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub system: EmSystem,
    pub multiplier: Option<MultiplierCandidate>,
    pub transform: Option<TimeMatrix>,
    pub blocks: Option<BlockStructure>,
    /// Connection known to depend on time only.
    pub gamma: Option<TimeMatrix>,
    pub window: WindowSpec,
    pub grid: TimeGrid,
    pub points: Vec<EvalPoint>,
    pub warnings: Vec<String>,
    /// Whether the system and multiplier are closed-form expressions.
    pub symbolic: bool,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension("ragged or empty matrix".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl MatrixSpec {
    pub fn resolve(&self, base: &Path) -> Result<TimeMatrix> {
        Ok(match self {
            MatrixSpec::Exprs(rows) => TimeMatrix::Exprs(ExprMatrix::parse(rows)?),
            MatrixSpec::Constant(rows) => TimeMatrix::constant(&matrix_from_rows(rows)?),
            MatrixSpec::Csv(path) => {
                TimeMatrix::Path(MatrixPath::read_csv(File::open(base.join(path))?)?)
            }
        })
    }

    pub fn from_exprs(m: &ExprMatrix) -> Self {
        MatrixSpec::Exprs(m.to_strings())
    }
}

impl SystemSpec {
    pub fn build(&self) -> Result<EmSystem> {
        if self.a.len() != self.n {
            return Err(Error::Dimension(format!(
                "{} vector potential components for n = {}",
                self.a.len(),
                self.n
            )));
        }
        EmSystem::parse(self.n, &self.v, &self.a)
    }

    pub fn from_system(sys: &EmSystem) -> Option<Self> {
        let (v, a) = sys.expressions()?;
        Some(Self { n: sys.dim(), v: v.to_string(), a: a.iter().map(ToString::to_string).collect() })
    }
}

impl Scenario {
    pub fn new(system: SystemSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: None,
            system: Some(system),
            family: None,
            construct: None,
            multiplier: None,
            claims_constant: false,
            transform: None,
            blocks: None,
            lax: None,
            window: WindowSpec::default(),
            tolerances: Tolerances::default(),
            samples: SampleSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                s.schema_version
            )));
        }
        Ok(s)
    }

    /// Reads a scenario; returns it with the directory CSV paths are relative to.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolve(&self, base: &Path) -> Result<Resolved> {
        let w = self.window;
        if w.t0.is_nan() || w.t1.is_nan() || w.t1 <= w.t0 {
            return Err(Error::Invalid(format!("empty window [{}, {}]", w.t0, w.t1)));
        }
        let sources =
            usize::from(self.system.is_some()) + usize::from(self.family.is_some()) + usize::from(self.construct.is_some());
        if sources != 1 {
            return Err(Error::Invalid("give exactly one of system, family, construct".into()));
        }
        let mut r = if let Some(spec) = &self.system {
            let system = spec.build()?;
            Resolved {
                system,
                multiplier: None,
                transform: None,
                blocks: None,
                gamma: None,
                window: w,
                grid: TimeGrid::with_step(w.t0, w.t1, w.h)?,
                points: Vec::new(),
                warnings: Vec::new(),
                symbolic: true,
            }
        } else if let Some(f) = &self.family {
            self.resolve_family(f)?
        } else {
            self.resolve_construct(self.construct.as_ref().expect("checked"), base)?
        };
        let n = r.system.dim();
        r.points = self.cloud(n, &r.window);
        r.grid = TimeGrid::with_step(r.window.t0, r.window.t1, w.h)?;

        if let Some(m) = &self.multiplier {
            let tm = m.resolve(base)?;
            if tm.shape() != (n, n) {
                return Err(Error::Dimension(format!("multiplier is {:?}, system has n = {n}", tm.shape())));
            }
            r.symbolic &= matches!(tm, TimeMatrix::Exprs(_));
            r.multiplier = Some(MultiplierCandidate { matrix: tm, claims_constant: self.claims_constant });
        } else if let Some(g) = &mut r.multiplier {
            g.claims_constant |= self.claims_constant;
        }
        if let Some(p) = &self.transform {
            let p = p.resolve(base)?;
            if p.shape() != (n, n) {
                return Err(Error::Dimension("transform must be n×n".into()));
            }
            r.transform = Some(p);
            r.blocks = None;
        }
        if let Some(sizes) = &self.blocks {
            let (Some(p), Some(g)) = (&r.transform, &r.multiplier) else {
                return Err(Error::Invalid("blocks need a transform and a multiplier".into()));
            };
            if sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
                return Err(Error::Dimension("block sizes must be positive and sum to n".into()));
            }
            let pm = p.value(r.window.t0)?;
            let inv = pm.clone().lu().try_inverse().ok_or(Error::Singular { t: r.window.t0 })?;
            let d = inv * g.value(r.window.t0)? * pm;
            let mut offset = 0;
            let ev: Vec<f64> = sizes
                .iter()
                .map(|&m| {
                    let mean = (offset..offset + m).map(|i| d[(i, i)]).sum::<f64>() / m as f64;
                    offset += m;
                    mean
                })
                .collect();
            r.blocks = Some(BlockStructure::from_sizes(sizes, &ev));
        }
        Ok(r)
    }

    fn cloud(&self, n: usize, w: &WindowSpec) -> Vec<EvalPoint> {
        let s = self.samples;
        sample_cloud(n, &CloudSpec { count: s.count, seed: s.seed, t0: w.t0, t1: w.t1, radius: s.radius })
    }

    fn empty(&self, system: EmSystem, window: WindowSpec) -> Result<Resolved> {
        Ok(Resolved {
            system,
            multiplier: None,
            transform: None,
            blocks: None,
            gamma: None,
            window,
            grid: TimeGrid::with_step(window.t0, window.t1, window.h)?,
            points: Vec::new(),
            warnings: Vec::new(),
            symbolic: false,
        })
    }

    fn resolve_family(&self, f: &FamilySpec) -> Result<Resolved> {
        let w = self.window;
        match f {
            FamilySpec::N2 { sigma, k, m, phase, b, c, l_offset } => {
                let fam = N2Family::new(parse(sigma, 0)?, parse(k, 0)?, parse(m, 0)?, *phase, *b, *c)?
                    .with_l_offset(*l_offset);
                let built = fam.build(w.t0, w.t1)?;
                let window = WindowSpec { t0: built.window.0, t1: built.window.1, h: w.h };
                let mut r = self.empty(built.system, window)?;
                r.multiplier = Some(built.multiplier);
                r.transform = Some(built.eigenvector_transform);
                r.blocks = Some(built.blocks);
                r.warnings = built.warnings;
                Ok(r)
            }
            FamilySpec::N3 { a, c1, c2, f, u, z, mode } => {
                let fam = N3Family::new(parse(a, 0)?, *c1, *c2, parse(f, 2)?, parse(u, 2)?, parse(z, 1)?)?
                    .with_mode(*mode);
                let built = fam.build(w.t0, w.t1)?;
                let mut r = self.empty(built.system, w)?;
                r.multiplier = Some(built.multiplier);
                r.transform = Some(built.transform);
                r.blocks = Some(built.blocks);
                r.warnings = built.warnings;
                Ok(r)
            }
            FamilySpec::Sec5 { a, theta, params } => {
                let pts = self.cloud(3, &w);
                let c = sec5_build_with(&parse(a, 0)?, &parse(theta, 0)?, params, &pts)?;
                let mut r = self.empty(c.system, w)?;
                r.symbolic = matches!(c.multiplier.matrix, TimeMatrix::Exprs(_)) && r.system.expressions().is_some();
                r.multiplier = Some(c.multiplier);
                r.gamma = Some(c.gamma);
                r.warnings = c.warnings;
                Ok(r)
            }
        }
    }

    fn resolve_construct(&self, spec: &ConstructSpec, base: &Path) -> Result<Resolved> {
        let w = self.window;
        match spec {
            ConstructSpec::Prop3 { w: w_text, s, u, gamma } => {
                let s = matrix_from_rows(s)?;
                let n = s.nrows();
                let w_expr = parse(w_text, n)?;
                let u = u.resolve(base)?;
                let gamma = gamma.as_ref().map(|g| ExprMatrix::parse(g)).transpose()?;
                let pts = self.cloud(n, &w);
                let c = construct_system(&w_expr, &s, &u, gamma.as_ref(), &pts)?;
                let mut r = self.empty(c.system, w)?;
                r.symbolic = r.system.expressions().is_some() && matches!(c.multiplier.matrix, TimeMatrix::Exprs(_));
                r.multiplier = Some(c.multiplier);
                r.gamma = Some(c.gamma);
                r.warnings = c.warnings;
                r.warnings.push(format!("connection source: {:?}", c.source).to_lowercase());
                Ok(r)
            }
            ConstructSpec::Compose { subsystems, lambdas, p } => {
                let subs = subsystems.iter().map(SystemSpec::build).collect::<Result<Vec<_>>>()?;
                let p = p.resolve(base)?;
                let grid = TimeGrid::with_step(w.t0, w.t1, w.h)?;
                let c = compose_coupled(&subs, lambdas, &p, &grid)?;
                let mut r = self.empty(c.system, w)?;
                r.symbolic = c.symbolic;
                r.multiplier = Some(c.multiplier);
                r.transform = Some(p);
                r.blocks = Some(c.blocks);
                r.warnings = c.warnings;
                Ok(r)
            }
        }
    }

    /// Scenario describing a resolved system: explicit expressions when
    /// available, otherwise this scenario's recipe.
    pub fn export(&self, r: &Resolved) -> Scenario {
        let mut out = self.clone();
        out.window = r.window;
        if let (Some(sys), Some(MultiplierCandidate { matrix: TimeMatrix::Exprs(g), .. })) =
            (SystemSpec::from_system(&r.system), &r.multiplier)
        {
            out.system = Some(sys);
            out.family = None;
            out.construct = None;
            out.multiplier = Some(MatrixSpec::from_exprs(g));
            if let Some(TimeMatrix::Exprs(p)) = &r.transform {
                out.transform = Some(MatrixSpec::from_exprs(p));
                out.blocks = r.blocks.as_ref().map(BlockStructure::sizes);
            }
        }
        out
    }
}

/// `{"constant": ...}` for a fixed matrix.
pub fn constant_spec(m: &DMatrix<f64>) -> MatrixSpec {
    MatrixSpec::Constant(rows_of(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_version_and_fields() {
        let bad = r#"{"schema_version": 2, "system": {"n": 1, "v": "x1^2", "a": ["0"]}}"#;
        assert!(Scenario::from_json(bad).is_err());
        let extra = r#"{"schema_version": 1, "sytem": {}}"#;
        assert!(Scenario::from_json(extra).is_err());
    }

    #[test]
    fn explicit_system_round_trips() {
        let text = r#"{
            "schema_version": 1,
            "system": {"n": 2, "v": "0.5*(x1^2 + x2^2)", "a": ["x2", "-x1"]},
            "multiplier": {"constant": [[1, 0], [0, 2]]}
        }"#;
        let s = Scenario::from_json(text).unwrap();
        let r = s.resolve(Path::new(".")).unwrap();
        assert_eq!(r.points.len(), 20);
        assert_eq!(r.grid.points, 101);
        let again = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn sec5_family_exports_expressions() {
        let text = r#"{"schema_version": 1, "family": {"name": "sec5", "a": "1", "theta": "t"}}"#;
        let s = Scenario::from_json(text).unwrap();
        let r = s.resolve(Path::new(".")).unwrap();
        assert!(r.symbolic);
        let e = s.export(&r);
        assert!(e.system.is_some() && e.family.is_none());
        let r2 = e.resolve(Path::new(".")).unwrap();
        let p = &r.points[3];
        let v1 = r.system.scalar_potential(p.t, &p.x).unwrap();
        let v2 = r2.system.scalar_potential(p.t, &p.x).unwrap();
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn needs_exactly_one_source() {
        let none = r#"{"schema_version": 1}"#;
        assert!(Scenario::from_json(none).unwrap().resolve(Path::new(".")).is_err());
    }
}
