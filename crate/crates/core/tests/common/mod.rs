#![allow(dead_code)]

use emtype::expr::{BinOp, EvalPoint, Expression, Func, Var};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn leaf(r: &mut ChaCha8Rng, n: usize) -> Expression {
    match r.gen_range(0..4) {
        0 => Expression::Const(r.gen_range(-2.0..2.0)),
        1 => Expression::t(),
        2 => Expression::x(r.gen_range(0..n)),
        _ => Expression::xdot(r.gen_range(0..n)),
    }
}

fn c(v: f64) -> Expression {
    Expression::Const(v)
}

/// Random smooth expression over `(t, x, xdot)` of dimension `n`.
///
/// Domain-restricted functions only see arguments bounded away from their
/// singularities, so the result is smooth everywhere.
pub fn random_expression(r: &mut ChaCha8Rng, n: usize, depth: u32) -> Expression {
    if depth == 0 || r.gen_bool(0.2) {
        return leaf(r, n);
    }
    let sub = |r: &mut ChaCha8Rng| random_expression(r, n, depth - 1);
    match r.gen_range(0..11) {
        0 => Expression::add(sub(r), sub(r)),
        1 => Expression::sub(sub(r), sub(r)),
        2 | 3 => Expression::mul(sub(r), sub(r)),
        4 => Expression::unary(Func::Sin, sub(r)),
        5 => Expression::unary(Func::Cos, sub(r)),
        6 => {
            // exp(sin(e)) stays bounded
            Expression::unary(Func::Exp, Expression::unary(Func::Sin, sub(r)))
        }
        7 => {
            let den = Expression::add(c(2.0), Expression::unary(Func::Cos, sub(r)));
            Expression::div(sub(r), den)
        }
        8 => Expression::unary(Func::Log, Expression::add(c(2.5), Expression::unary(Func::Sin, sub(r)))),
        9 => Expression::unary(Func::Sqrt, Expression::add(c(1.5), Expression::unary(Func::Cos, sub(r)))),
        _ => {
            let k = r.gen_range(2..4);
            Expression::binary(BinOp::Pow, sub(r), c(f64::from(k)))
        }
    }
}

pub fn random_point(r: &mut ChaCha8Rng, n: usize) -> EvalPoint {
    EvalPoint::new(
        r.gen_range(0.0..1.0),
        (0..n).map(|_| r.gen_range(-1.0..1.0)).collect(),
        (0..n).map(|_| r.gen_range(-1.0..1.0)).collect(),
    )
}

pub fn vars(n: usize) -> Vec<Var> {
    std::iter::once(Var::T).chain((0..n).map(Var::X)).chain((0..n).map(Var::XDot)).collect()
}

pub fn shifted(p: &EvalPoint, v: Var, dh: f64) -> EvalPoint {
    let mut q = p.clone();
    match v {
        Var::T => q.t += dh,
        Var::X(i) => q.x[i] += dh,
        Var::XDot(i) => q.xdot[i] += dh,
    }
    q
}

/// Central difference of `f` in `v`.
pub fn fd1(f: impl Fn(&EvalPoint) -> f64, p: &EvalPoint, v: Var, h: f64) -> f64 {
    (f(&shifted(p, v, h)) - f(&shifted(p, v, -h))) / (2.0 * h)
}

/// Central second difference of `f` in `(u, v)`.
pub fn fd2(f: impl Fn(&EvalPoint) -> f64, p: &EvalPoint, u: Var, v: Var, h: f64) -> f64 {
    if u == v {
        return (f(&shifted(p, u, h)) - 2.0 * f(p) + f(&shifted(p, u, -h))) / (h * h);
    }
    let at = |a: f64, b: f64| f(&shifted(&shifted(p, u, a), v, b));
    (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
}

pub fn random_skew(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = r.gen_range(-scale..scale);
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
    m
}

pub fn random_symmetric(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

/// `exp(m)` by scaling and squaring a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.amax() * n as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m / 2f64.powi(s);
    let mut term = DMatrix::identity(n, n);
    let mut out = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &a / k as f64;
        out += &term;
    }
    for _ in 0..s {
        out = &out * &out;
    }
    out
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
