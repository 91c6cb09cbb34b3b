use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use emtype::decouple::{check_decoupling, diagonalize_path};
use emtype::helmholtz::verify_all;
use emtype::lax::{solve_lax, spectrum_report};
use emtype::linalg::max_abs;
use emtype::paperlib::{default_n2, default_n3};
use emtype::path::{MatrixPath, TimeMatrix};
use emtype::scenario::{ConstructSpec, FamilySpec, LaxSpec, Resolved, Scenario, SystemSpec};
use nalgebra::DMatrix;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "emtype", version, about = "Alternative multipliers for systems of electromagnetic type")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every multiplier condition for the scenario's candidate.
    Verify(Common),
    /// Integrate the multiplier equation as a Lax flow.
    Lax(Common),
    /// Diagonalise the multiplier and measure cross-block coupling.
    Decouple(Common),
    /// Build a system from a recipe and write it as a scenario.
    Construct {
        mode: ConstructMode,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in example end to end.
    Demo {
        name: DemoName,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructMode {
    Prop3,
    Compose,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoName {
    N2,
    N3,
    Sec5,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Write the JSON output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time step (grid step for checks, integration step for `lax`).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    /// Tolerance for every condition residual.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed of the sample cloud.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sample points.
    #[arg(long)]
    samples: Option<usize>,
    /// Write the computed matrix path here as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Failure of a check, as opposed to bad input.
struct Outcome {
    pass: bool,
    output: Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<bool> {
    let (common, outcome) = match command {
        Command::Verify(c) => {
            let (s, base) = load(&c)?;
            let o = verify(&s, &base)?;
            (c, o)
        }
        Command::Lax(c) => {
            let (s, base) = load(&c)?;
            let o = lax(&s, &base, &c)?;
            (c, o)
        }
        Command::Decouple(c) => {
            let (s, base) = load(&c)?;
            let o = decouple(&s, &base, c.csv.as_deref())?;
            (c, o)
        }
        Command::Construct { mode, common } => {
            let (s, base) = load(&common)?;
            let o = construct(&s, &base, mode, common.out.as_deref())?;
            // the scenario goes to --out, the report to stdout
            print_json(&o.output, None)?;
            return Ok(o.pass);
        }
        Command::Demo { name, common } => {
            let s = apply_overrides(demo_scenario(name)?, &common);
            let o = demo(&s, &common)?;
            (common, o)
        }
    };
    print_json(&outcome.output, common.out.as_deref())?;
    Ok(outcome.pass)
}

fn load(c: &Common) -> Result<(Scenario, PathBuf)> {
    let path = c.scenario.as_ref().ok_or_else(|| anyhow!("--scenario is required"))?;
    let (s, base) = Scenario::load(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((apply_overrides(s, c), base))
}

fn apply_overrides(mut s: Scenario, c: &Common) -> Scenario {
    if let Some(t0) = c.t0 {
        s.window.t0 = t0;
    }
    if let Some(t1) = c.t1 {
        s.window.t1 = t1;
    }
    if let Some(h) = c.h {
        s.window.h = h;
        if let Some(l) = &mut s.lax {
            l.h = h;
        }
    }
    if let Some(tol) = c.tol {
        s.tolerances = s.tolerances.with_condition_tol(tol);
    }
    if let Some(seed) = c.seed {
        s.samples.seed = seed;
    }
    if let Some(n) = c.samples {
        s.samples.count = n;
    }
    s
}

fn print_json(v: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn header(command: &str, s: &Scenario) -> Value {
    json!({
        "tool": "emtype",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "scenario": s.name,
    })
}

fn with_fields(mut base: Value, fields: Value) -> Value {
    if let (Value::Object(b), Value::Object(f)) = (&mut base, fields) {
        b.extend(f);
    }
    base
}

fn verify(s: &Scenario, base: &Path) -> Result<Outcome> {
    let r = s.resolve(base)?;
    let g = r.multiplier.as_ref().ok_or_else(|| anyhow!("scenario has no multiplier to verify"))?;
    let report = verify_all(&r.system, g, &r.grid, &r.points, &s.tolerances)?;
    let mut warnings = r.warnings.clone();
    warnings.extend(report.warnings.iter().cloned());
    let pass = report.pass;
    let output = with_fields(
        header("verify", s),
        json!({ "pass": pass, "window": r.window, "warnings": warnings, "report": report }),
    );
    Ok(Outcome { pass, output })
}

/// `Γ(t)` for the Lax flow: given, known to be time-only, or the system's
/// connection at `x = 0` after checking it does not depend on `x`.
type Connection = Box<dyn Fn(f64) -> emtype::Result<DMatrix<f64>>>;

fn lax_connection(spec: Option<&LaxSpec>, r: &Resolved) -> Result<Connection> {
    if let Some(rows) = spec.and_then(|l| l.gamma.as_ref()) {
        let m = TimeMatrix::Exprs(emtype::path::ExprMatrix::parse(rows)?);
        return Ok(Box::new(move |t| m.value(t)));
    }
    if let Some(g) = r.gamma.clone() {
        return Ok(Box::new(move |t| g.value(t)));
    }
    let n = r.system.dim();
    let zero = vec![0.0; n];
    for p in &r.points {
        let at_x = r.system.connection(p.t, &p.x)?;
        let at_0 = r.system.connection(p.t, &zero)?;
        let d = max_abs(&(at_x - &at_0));
        if d > 1e-10 * (1.0 + max_abs(&at_0)) {
            bail!("the connection depends on x (difference {d:e} at t = {}); give lax.gamma", p.t);
        }
    }
    let sys = r.system.clone();
    Ok(Box::new(move |t| sys.connection(t, &zero)))
}

fn lax(s: &Scenario, base: &Path, c: &Common) -> Result<Outcome> {
    let r = s.resolve(base)?;
    let spec = s.lax.as_ref();
    let h = spec.map_or(1e-3, |l| l.h);
    let gamma = lax_connection(spec, &r)?;
    let g0 = match spec.and_then(|l| l.g0.as_ref()) {
        Some(rows) => DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]),
        None => r
            .multiplier
            .as_ref()
            .ok_or_else(|| anyhow!("give lax.g0 or a multiplier"))?
            .value(r.window.t0)?,
    };
    let path = solve_lax(gamma, &g0, r.window.t0, r.window.t1, h)?;
    let spectrum = spectrum_report(&path);
    let tol = s.tolerances.path;
    let deviation = match &r.multiplier {
        Some(g) => Some(max_deviation(&path, |t| g.value(t))?),
        None => None,
    };
    if let Some(p) = &c.csv {
        path.write_csv(File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
    }
    let pass = spectrum.drift <= tol && spectrum.crossing.is_none() && deviation.is_none_or(|d| d <= tol);
    let output = with_fields(
        header("lax", s),
        json!({
            "pass": pass,
            "tol": tol,
            "step": path.step(),
            "nodes": path.len(),
            "window": [path.t0(), path.t1()],
            "spectrum": spectrum,
            "max_deviation_from_candidate": deviation,
            "warnings": r.warnings,
        }),
    );
    Ok(Outcome { pass, output })
}

fn max_deviation(path: &MatrixPath, f: impl Fn(f64) -> emtype::Result<DMatrix<f64>>) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, m) in path.samples().iter().enumerate() {
        worst = worst.max(max_abs(&(m - f(path.time(i))?)));
    }
    Ok(worst)
}

fn decouple_value(s: &Scenario, r: &Resolved, csv: Option<&Path>) -> Result<(bool, Value)> {
    let tol = s.tolerances.path;
    let (p, blocks, diag) = match (&r.transform, &r.blocks) {
        (Some(p), Some(b)) => (p.clone(), b.clone(), None),
        _ => {
            let g = r.multiplier.as_ref().ok_or_else(|| anyhow!("decoupling needs a multiplier or a transform"))?;
            let path = g.matrix.sample(r.window.t0, r.window.t1, r.window.h)?;
            let d = diagonalize_path(&path)?;
            let info = json!({
                "eigenvalues": d.eigenvalues,
                "eigenvalue_drift": d.drift,
                "offdiag_defect": d.offdiag_defect,
                "orthogonality_defect": d.orthogonality_defect,
            });
            (TimeMatrix::Path(d.p.clone()), d.blocks.clone(), Some(info))
        }
    };
    if let Some(path) = csv {
        let sampled = match &p {
            TimeMatrix::Path(mp) => mp.clone(),
            other => other.sample(r.window.t0, r.window.t1, r.window.h)?,
        };
        sampled.write_csv(File::create(path).with_context(|| format!("creating {}", path.display()))?)?;
    }
    let report = check_decoupling(&r.system, &p, &blocks, &r.points)?;
    let pass = report.max_cross() <= tol;
    Ok((
        pass,
        json!({ "pass": pass, "tol": tol, "diagonalization": diag, "report": report }),
    ))
}

fn decouple(s: &Scenario, base: &Path, csv: Option<&Path>) -> Result<Outcome> {
    let r = s.resolve(base)?;
    let (pass, v) = decouple_value(s, &r, csv)?;
    let output = with_fields(header("decouple", s), with_fields(v, json!({ "warnings": r.warnings })));
    Ok(Outcome { pass, output })
}

fn construct(s: &Scenario, base: &Path, mode: ConstructMode, out: Option<&Path>) -> Result<Outcome> {
    match (&s.construct, mode) {
        (Some(ConstructSpec::Prop3 { .. }), ConstructMode::Prop3)
        | (Some(ConstructSpec::Compose { .. }), ConstructMode::Compose) => {}
        (Some(_), _) => bail!("the scenario's construct recipe has a different mode"),
        (None, _) => bail!("scenario has no construct recipe"),
    }
    let r = s.resolve(base)?;
    let g = r.multiplier.as_ref().expect("recipes provide a multiplier");
    let report = verify_all(&r.system, g, &r.grid, &r.points, &s.tolerances)?;
    let exported = s.export(&r);
    if let Some(p) = out {
        std::fs::write(p, exported.to_json()? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let mut warnings = r.warnings.clone();
    warnings.extend(report.warnings.iter().cloned());
    let pass = report.pass;
    let output = with_fields(
        header("construct", s),
        json!({
            "pass": pass,
            "symbolic": r.symbolic,
            "warnings": warnings,
            "report": report,
            "constructed": exported,
        }),
    );
    Ok(Outcome { pass, output })
}

fn demo_scenario(name: DemoName) -> Result<Scenario> {
    let placeholder = SystemSpec { n: 1, v: "0".into(), a: vec!["0".into()] };
    let mut s = Scenario::new(placeholder);
    s.system = None;
    let (label, family) = match name {
        DemoName::N2 => {
            let f = default_n2()?;
            (
                "n2",
                FamilySpec::N2 {
                    sigma: f.sigma.to_string(),
                    k: f.k.to_string(),
                    m: f.m.to_string(),
                    phase: f.phase,
                    b: f.b,
                    c: f.c,
                    l_offset: 0.0,
                },
            )
        }
        DemoName::N3 => {
            let f = default_n3()?;
            (
                "n3",
                FamilySpec::N3 {
                    a: f.a.to_string(),
                    c1: f.c1,
                    c2: f.c2,
                    f: f.f.to_string(),
                    u: f.u_pot.to_string(),
                    z: f.z_pot.to_string(),
                    mode: f.mode,
                },
            )
        }
        DemoName::Sec5 => {
            ("sec5", FamilySpec::Sec5 { a: "1".into(), theta: "t".into(), params: Default::default() })
        }
    };
    s.name = Some(format!("demo-{label}"));
    s.family = Some(family);
    Ok(s)
}

fn demo(s: &Scenario, c: &Common) -> Result<Outcome> {
    let r = s.resolve(Path::new("."))?;
    let g = r.multiplier.as_ref().expect("families provide a multiplier");
    let report = verify_all(&r.system, g, &r.grid, &r.points, &s.tolerances)?;
    let (dpass, dvalue) = decouple_value(s, &r, c.csv.as_deref())?;
    let mut warnings = r.warnings.clone();
    warnings.extend(report.warnings.iter().cloned());
    let pass = report.pass && dpass;
    let output = with_fields(
        header("demo", s),
        json!({
            "pass": pass,
            "window": r.window,
            "warnings": warnings,
            "verify": report,
            "decouple": dvalue,
            "scenario_file": s,
        }),
    );
    Ok(Outcome { pass, output })
}
