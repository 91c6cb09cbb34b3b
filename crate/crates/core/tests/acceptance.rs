//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::time::Instant;

use common::*;
use emtype::decouple::{check_decoupling, diagonalize_path};
use emtype::expr::{parse, EvalPoint};
use emtype::helmholtz::{verify_all, TimeGrid, Tolerances, POTENTIAL};
use emtype::lax::{solve_lax, spectrum_report};
use emtype::linalg::orthogonality_defect;
use emtype::model::EmSystem;
use emtype::paperlib::n2::closed_form;
use emtype::paperlib::sec5::{expected_multiplier, rotation_x};
use emtype::paperlib::{default_n2, sec5_build, N2Family, N3Family};
use emtype::path::TimeMatrix;
use emtype::sampling::{sample_cloud, CloudSpec};
use emtype::timeonly::{multiplier_from_s, solve_u};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn lax_isospectrality() -> Outcome {
    let mut r = rng(1);
    let (mut drift, mut trace) = (0.0f64, 0.0f64);
    for run in 0..50 {
        let n = [2, 3, 4, 6][run % 4];
        let k0 = random_skew(&mut r, n, 1.0);
        let k1 = random_skew(&mut r, n, 1.0);
        let w = r.gen_range(0.5..3.0);
        let g0 = random_symmetric(&mut r, n, 2.0);
        let path = solve_lax(|t| Ok(&k0 + &k1 * (w * t).cos()), &g0, 0.0, 1.0, 1e-3).map_err(e)?;
        let s = spectrum_report(&path);
        drift = drift.max(s.drift);
        trace = trace.max(s.trace_drift);
    }
    check(drift <= 1e-7 && trace <= 1e-9, format!("eigen drift {drift:.1e}, trace drift {trace:.1e}"))
}

fn n2_closed_form() -> Outcome {
    let mut r = rng(2);
    let (mut worst, mut ev_err, mut done) = (0.0f64, 0.0f64, 0);
    while done < 10 {
        let (s0, s1, s2) = (r.gen_range(-0.4..0.4), r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3));
        let phase = r.gen_range(-3.0..3.0f64);
        let (b, c) = (r.gen_range(0.2..2.0), r.gen_range(2.5..5.0));
        if phase.cos().abs() < 0.2 || phase.sin().abs() < 0.05 {
            continue;
        }
        let sigma = parse(&format!("{s0} + {s1}*sin(t) + {s2}*cos(2*t)"), 0).map_err(e)?;
        let fam = N2Family::new(sigma, parse("1", 0).unwrap(), parse("2 + 0.5*cos(t)", 0).unwrap(), phase, b, c)
            .map_err(e)?;
        let Ok(build) = fam.build(0.0, 1.0) else { continue };
        let (t0, t1) = build.window;
        let alpha = |t: f64| phase - 2.0 * (s0 * t + s1 * (1.0 - t.cos()) + 0.5 * s2 * (2.0 * t).sin());
        let sys = build.system.clone();
        let path = solve_lax(|t| sys.connection(t, &[0.0, 0.0]), &closed_form(b, c, alpha(t0)), t0, t1, 1e-3)
            .map_err(e)?;
        for (i, g) in path.samples().iter().enumerate() {
            worst = worst.max((g - closed_form(b, c, alpha(path.time(i)))).amax());
            let ev = sorted_eigenvalues(g);
            ev_err = ev_err.max((ev[0] - 0.5 * (c - b)).abs()).max((ev[1] - 0.5 * (c + b)).abs());
        }
        done += 1;
    }
    check(worst <= 1e-8 && ev_err <= 1e-9, format!("max entry error {worst:.1e}, eigenvalue error {ev_err:.1e}"))
}

fn n2_eigenvector_transform() -> Outcome {
    let b = default_n2().map_err(e)?.build(0.0, 1.0).map_err(e)?;
    let spec = CloudSpec { count: 50, t0: b.window.0, t1: b.window.1, ..CloudSpec::default() };
    let d = check_decoupling(&b.system, &b.eigenvector_transform, &b.blocks, &sample_cloud(2, &spec)).map_err(e)?;
    check(d.max_cross() <= 1e-5, format!("cross-block residual {:.1e} at 50 points", d.max_cross()))
}

fn n3_family() -> Outcome {
    let mut r = rng(4);
    let (mut gdot, mut curl, mut ev_err) = (0.0f64, 0.0f64, 0.0f64);
    let pts = sample_cloud(3, &CloudSpec::default());
    for _ in 0..5 {
        let a0 = r.gen_range(-0.3..0.3);
        let a1 = r.gen_range(-0.4..0.4);
        let w = r.gen_range(0.5..2.0);
        let c1 = r.gen_range(1.0..2.0);
        let c2 = r.gen_range(2.0..4.0);
        let q: Vec<f64> = (0..8).map(|_| r.gen_range(-1.0..1.0)).collect();
        let fam = N3Family::new(
            parse(&format!("{a0} + {a1}*sin({w}*t)"), 0).map_err(e)?,
            c1,
            c2,
            parse(&format!("{}*x1*x2 + {}*sin(t)*x1 + {}*x2^2", q[0], q[1], q[2]), 2).map_err(e)?,
            parse(&format!("{}*x1^2 + {}*x2^2 + {}*sin(t)*x1*x2", q[3], q[4], q[5]), 2).map_err(e)?,
            parse(&format!("{}*x1^2 + {}*cos(t)*x1^3", q[6], q[7]), 1).map_err(e)?,
        )
        .map_err(e)?;
        let b = fam.build(0.0, 1.0).map_err(e)?;
        for t in TimeGrid::default().times() {
            gdot = gdot.max(b.gdot_residuals(t).map_err(e)?.into_iter().fold(0.0, f64::max));
            let ev = sorted_eigenvalues(&b.multiplier.value(t).map_err(e)?);
            let want = [c2 - c1 - 1.0, c2, c2];
            ev_err = ev.iter().zip(want).fold(ev_err, |m, (x, y)| m.max((x - y).abs()));
        }
        for p in &pts {
            curl = curl.max(b.curl_residuals(p.t, &p.x).map_err(e)?.into_iter().fold(0.0, f64::max));
        }
        let rep = verify_all(&b.system, &b.multiplier, &TimeGrid::default(), &pts, &Tolerances::default())
            .map_err(e)?;
        if !rep.pass {
            return Err(format!("verify_all failed, max residual {:.1e}", rep.max_residual()));
        }
    }
    check(
        gdot <= 1e-8 && curl <= 1e-8 && ev_err <= 1e-7,
        format!("g-dot {gdot:.1e}, curl {curl:.1e}, eigenvalues {ev_err:.1e}, verify_all pass x5"),
    )
}

fn sec5_example() -> Outcome {
    let pts = sample_cloud(3, &CloudSpec::default());
    let c = sec5_build(&parse("1", 0).unwrap(), &parse("t", 0).unwrap(), &pts).map_err(e)?;
    let (mut g_err, mut ev_err) = (0.0f64, 0.0f64);
    for t in TimeGrid::default().times() {
        let g = c.multiplier.value(t).map_err(e)?;
        g_err = g_err.max((&g - expected_multiplier(t)).amax());
        let ev = sorted_eigenvalues(&g);
        ev_err = ev.iter().zip([0.0, 1.0, 2.0]).fold(ev_err, |m, (x, y)| m.max((x - y).abs()));
    }
    let rep = verify_all(&c.system, &c.multiplier, &TimeGrid::default(), &pts, &Tolerances::default()).map_err(e)?;
    let warned = rep.warnings.iter().chain(&c.warnings).any(|w| w.contains("singular"));
    let gpath = c.multiplier.matrix.sample(0.0, 1.0, 1e-2).map_err(e)?;
    let diag = diagonalize_path(&gpath).map_err(e)?;
    let d = check_decoupling(&c.system, &TimeMatrix::Path(diag.p.clone()), &diag.blocks, &pts).map_err(e)?;
    check(
        g_err <= 1e-6 && ev_err <= 1e-7 && warned && rep.pass && d.blocks.sizes() == [1, 1, 1] && d.max_cross() <= 1e-5,
        format!(
            "g {g_err:.1e}, eigenvalues {ev_err:.1e}, singular warning {warned}, verify {}, blocks {:?}, cross {:.1e}",
            rep.pass,
            d.blocks.sizes(),
            d.max_cross()
        ),
    )
}

fn two_routes() -> Outcome {
    let mut r = rng(6);
    let (mut diff, mut orth) = (0.0f64, 0.0f64);
    for run in 0..10 {
        let n = [2, 3, 4][run % 3];
        let k0 = random_skew(&mut r, n, 1.0);
        let k1 = random_skew(&mut r, n, 1.0);
        let w = r.gen_range(0.5..3.0);
        let gamma = move |t: f64| Ok(&k0 + &k1 * (w * t).sin());
        let s = random_symmetric(&mut r, n, 2.0);
        let u = solve_u(&gamma, n, 0.0, 1.0, 1e-3).map_err(e)?;
        orth = orth.max(u.max_over_nodes(orthogonality_defect));
        let g1 = multiplier_from_s(&u, &s).map_err(e)?;
        let g2 = solve_lax(&gamma, &s, 0.0, 1.0, 1e-3).map_err(e)?;
        diff = g1.samples().iter().zip(g2.samples()).fold(diff, |m, (a, b)| m.max((a - b).amax()));
    }
    check(diff <= 1e-6 && orth <= 1e-7, format!("path difference {diff:.1e}, orthogonality {orth:.1e}"))
}

fn trajectories() -> Outcome {
    let pts = sample_cloud(3, &CloudSpec::default());
    let c = sec5_build(&parse("1", 0).unwrap(), &parse("t", 0).unwrap(), &pts).map_err(e)?;
    let direct = EmSystem::parse(3, "(x1 - x2)^3", &["0", "0", "0"]).map_err(e)?;
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let x0: Vec<f64> = (0..3).map(|_| r.gen_range(-0.4..0.4)).collect();
        let v0: Vec<f64> = (0..3).map(|_| r.gen_range(-0.4..0.4)).collect();
        let (x1, _) = c.system.integrate(0.0, &x0, &v0, 1.0, 1e-3).map_err(e)?;
        // U(0) = I and ẏ = Uᵀ(ẋ + Γx)
        let gamma0 = c.gamma.value(0.0).map_err(e)?;
        let y_dot0 = nalgebra::DVector::from_column_slice(&v0) + &gamma0 * nalgebra::DVector::from_column_slice(&x0);
        let (y1, _) = direct.integrate(0.0, &x0, y_dot0.as_slice(), 1.0, 1e-3).map_err(e)?;
        let u1 = TimeMatrix::Exprs(rotation_x(&parse("t", 0).unwrap())).value(1.0).map_err(e)?;
        worst = worst.max((u1.transpose() * x1 - y1).amax());
    }
    check(worst <= 1e-6, format!("max |Uᵀx − y| at t = 1: {worst:.1e}"))
}

fn autodiff() -> Outcome {
    let mut r = rng(8);
    let (mut first, mut second, mut mixed) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let ex = random_expression(&mut r, 2, 4);
        let p = random_point(&mut r, 2);
        let f = |q: &EvalPoint| ex.eval(q).unwrap();
        let vs = vars(2);
        for &u in &vs {
            let fd = fd1(f, &p, u, 1e-5);
            first = first.max((ex.deriv(&p, &[u]).map_err(e)? - fd).abs() / (1.0 + fd.abs()));
            for &v in &vs {
                let ad = ex.deriv(&p, &[u, v]).map_err(e)?;
                let fd = fd2(f, &p, u, v, 1e-4);
                second = second.max((ad - fd).abs() / (1.0 + fd.abs()));
                mixed = mixed.max((ad - ex.deriv(&p, &[v, u]).map_err(e)?).abs());
            }
        }
    }
    check(
        first <= 1e-6 && second <= 1e-6 && mixed <= 1e-12,
        format!("first {first:.1e}, second {second:.1e}, mixed symmetry {mixed:.1e}"),
    )
}

fn falsification() -> Outcome {
    let b = default_n2().map_err(e)?.with_l_offset(1e-2).build(0.0, 1.0).map_err(e)?;
    let pts = sample_cloud(2, &CloudSpec::default());
    let rep = verify_all(&b.system, &b.multiplier, &TimeGrid::default(), &pts, &Tolerances::default()).map_err(e)?;
    let res = rep.condition(POTENTIAL).map(|c| c.residual).unwrap_or(0.0);
    check(res >= 1e-3 && !rep.pass, format!("potential residual {res:.1e}, verify fails {}", !rep.pass))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Lax isospectrality", lax_isospectrality),
        ("n=2 closed form", n2_closed_form),
        ("n=2 decoupling transform", n2_eigenvector_transform),
        ("n=3 family", n3_family),
        ("rotation-coupled cubic example", sec5_example),
        ("two routes to g = U S Uᵀ", two_routes),
        ("trajectory equivalence", trajectories),
        ("automatic differentiation", autodiff),
        ("falsification sensitivity", falsification),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("acceptance {} {name}: PASS ({d}; {secs:.2}s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("acceptance {} {name}: FAIL ({d}; {secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
