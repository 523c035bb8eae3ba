//! Static operation counts.
//!
//! Each kind's forward and derivative computation is written out as an
//! [`Expr`] tree mirroring the kernel source (same shared subexpressions,
//! same overflow branches). Counting walks the tree; evaluating the tree
//! must reproduce the kernel, which is what keeps the counts honest.

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationSpec, Kind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Gt,
    Ge,
    Lt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    X,
    Const(f64),
    /// Reference to a `Let`-bound value.
    Var(u8),
    /// Bind `value` to the id, evaluate `body`; `value` is counted once.
    Let(u8, Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Tanh(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    /// Only one branch runs per element; counting takes the costlier one.
    Select {
        cmp: Cmp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

/// Per-element operation counts. Negation is counted as an addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub tanh: u32,
    pub exp: u32,
    pub log: u32,
    pub divisions: u32,
    pub multiplications: u32,
    pub additions: u32,
    pub comparisons: u32,
}

impl OpCounts {
    pub fn transcendental(&self) -> u32 {
        self.tanh + self.exp + self.log
    }

    pub fn arithmetic(&self) -> u32 {
        self.divisions + self.multiplications + self.additions
    }

    fn plus(self, o: Self) -> Self {
        Self {
            tanh: self.tanh + o.tanh,
            exp: self.exp + o.exp,
            log: self.log + o.log,
            divisions: self.divisions + o.divisions,
            multiplications: self.multiplications + o.multiplications,
            additions: self.additions + o.additions,
            comparisons: self.comparisons + o.comparisons,
        }
    }

    fn max(self, o: Self) -> Self {
        Self {
            tanh: self.tanh.max(o.tanh),
            exp: self.exp.max(o.exp),
            log: self.log.max(o.log),
            divisions: self.divisions.max(o.divisions),
            multiplications: self.multiplications.max(o.multiplications),
            additions: self.additions.max(o.additions),
            comparisons: self.comparisons.max(o.comparisons),
        }
    }
}

impl Expr {
    pub fn count(&self) -> OpCounts {
        use Expr::*;
        let one = |f: fn(&mut OpCounts)| {
            let mut c = OpCounts::default();
            f(&mut c);
            c
        };
        match self {
            X | Const(_) | Var(_) => OpCounts::default(),
            Let(_, v, body) => v.count().plus(body.count()),
            Add(a, b) | Sub(a, b) => a.count().plus(b.count()).plus(one(|c| c.additions = 1)),
            Mul(a, b) => a
                .count()
                .plus(b.count())
                .plus(one(|c| c.multiplications = 1)),
            Div(a, b) => a.count().plus(b.count()).plus(one(|c| c.divisions = 1)),
            Neg(a) => a.count().plus(one(|c| c.additions = 1)),
            Tanh(a) => a.count().plus(one(|c| c.tanh = 1)),
            Exp(a) => a.count().plus(one(|c| c.exp = 1)),
            Ln(a) => a.count().plus(one(|c| c.log = 1)),
            Select {
                lhs,
                rhs,
                then,
                otherwise,
                ..
            } => lhs
                .count()
                .plus(rhs.count())
                .plus(one(|c| c.comparisons = 1))
                .plus(then.count().max(otherwise.count())),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_in(x, &mut Vec::new())
    }

    fn eval_in(&self, x: f64, env: &mut Vec<(u8, f64)>) -> f64 {
        use Expr::*;
        match self {
            X => x,
            Const(c) => *c,
            Var(id) => env
                .iter()
                .rev()
                .find(|(k, _)| k == id)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("unbound variable {id}")),
            Let(id, v, body) => {
                let v = v.eval_in(x, env);
                env.push((*id, v));
                let out = body.eval_in(x, env);
                env.pop();
                out
            }
            Add(a, b) => a.eval_in(x, env) + b.eval_in(x, env),
            Sub(a, b) => a.eval_in(x, env) - b.eval_in(x, env),
            Mul(a, b) => a.eval_in(x, env) * b.eval_in(x, env),
            Div(a, b) => a.eval_in(x, env) / b.eval_in(x, env),
            Neg(a) => -a.eval_in(x, env),
            Tanh(a) => a.eval_in(x, env).tanh(),
            Exp(a) => a.eval_in(x, env).exp(),
            Ln(a) => a.eval_in(x, env).ln(),
            Select {
                cmp,
                lhs,
                rhs,
                then,
                otherwise,
            } => {
                let (l, r) = (lhs.eval_in(x, env), rhs.eval_in(x, env));
                let taken = match cmp {
                    Cmp::Gt => l > r,
                    Cmp::Ge => l >= r,
                    Cmp::Lt => l < r,
                };
                if taken {
                    then.eval_in(x, env)
                } else {
                    otherwise.eval_in(x, env)
                }
            }
        }
    }
}

// Small builders. `mul`/`add` drop multiplications by one and additions of
// zero, the same way the expressions read once parameters are fixed.

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn x() -> Expr {
    Expr::X
}

fn k(v: f64) -> Expr {
    Expr::Const(v)
}

fn var(id: u8) -> Expr {
    Expr::Var(id)
}

fn bind(id: u8, value: Expr, body: Expr) -> Expr {
    Expr::Let(id, b(value), b(body))
}

fn add(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Const(c), _) if *c == 0.0 => r,
        (_, Expr::Const(c)) if *c == 0.0 => l,
        _ => Expr::Add(b(l), b(r)),
    }
}

fn sub(l: Expr, r: Expr) -> Expr {
    Expr::Sub(b(l), b(r))
}

fn mul(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Const(c), _) if *c == 1.0 => r,
        (_, Expr::Const(c)) if *c == 1.0 => l,
        _ => Expr::Mul(b(l), b(r)),
    }
}

fn div(l: Expr, r: Expr) -> Expr {
    Expr::Div(b(l), b(r))
}

fn select(cmp: Cmp, lhs: Expr, rhs: Expr, then: Expr, otherwise: Expr) -> Expr {
    Expr::Select {
        cmp,
        lhs: b(lhs),
        rhs: b(rhs),
        then: b(then),
        otherwise: b(otherwise),
    }
}

/// Stable sigmoid of `z`, using variable ids from `tmp` upward.
fn sigmoid(z: Expr, tmp: u8) -> Expr {
    bind(
        tmp,
        z,
        select(
            Cmp::Ge,
            var(tmp),
            k(0.0),
            div(k(1.0), add(k(1.0), Expr::Exp(b(Expr::Neg(b(var(tmp))))))),
            bind(
                tmp + 1,
                Expr::Exp(b(var(tmp))),
                div(var(tmp + 1), add(k(1.0), var(tmp + 1))),
            ),
        ),
    )
}

const SOFTPLUS_SWITCH: f64 = 20.0;

/// Mish, as `finish(softplus, sigmoid)` on each side of the overflow switch.
fn mish_with(finish: impl Fn(Expr, Expr) -> Expr) -> Expr {
    // e = exp(-x); softplus = x + ln(1 + e); sigmoid = 1 / (1 + e)
    let high = bind(
        0,
        Expr::Exp(b(Expr::Neg(b(x())))),
        finish(
            add(x(), Expr::Ln(b(add(k(1.0), var(0))))),
            div(k(1.0), add(k(1.0), var(0))),
        ),
    );
    // e = exp(x); softplus = ln(1 + e); sigmoid = e / (1 + e)
    let low = bind(
        0,
        Expr::Exp(b(x())),
        bind(
            1,
            add(k(1.0), var(0)),
            finish(Expr::Ln(b(var(1))), div(var(0), var(1))),
        ),
    );
    select(Cmp::Gt, x(), k(SOFTPLUS_SWITCH), high, low)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pass {
    Forward,
    Derivative,
}

/// The expression tree for one pass of `spec`'s kernel.
pub fn expression(spec: &ActivationSpec, pass: Pass) -> Expr {
    use Pass::*;
    match (spec.kind, pass) {
        (Kind::Sigmoid, Forward) => sigmoid(x(), 0),
        (Kind::Sigmoid, Derivative) => bind(9, sigmoid(x(), 0), mul(var(9), sub(k(1.0), var(9)))),
        (Kind::Tanh, Forward) => Expr::Tanh(b(x())),
        (Kind::Tanh, Derivative) => bind(0, Expr::Tanh(b(x())), sub(k(1.0), mul(var(0), var(0)))),
        (Kind::Relu, Forward) => select(Cmp::Gt, x(), k(0.0), x(), k(0.0)),
        (Kind::Relu, Derivative) => select(Cmp::Gt, x(), k(0.0), k(1.0), k(0.0)),
        (Kind::LeakyRelu, Forward) => {
            select(Cmp::Gt, x(), k(0.0), x(), mul(k(spec.leak_alpha), x()))
        }
        (Kind::LeakyRelu, Derivative) => select(Cmp::Gt, x(), k(0.0), k(1.0), k(spec.leak_alpha)),
        (Kind::Elu, Forward) => select(
            Cmp::Gt,
            x(),
            k(0.0),
            x(),
            mul(k(spec.elu_alpha), sub(Expr::Exp(b(x())), k(1.0))),
        ),
        (Kind::Elu, Derivative) => select(
            Cmp::Gt,
            x(),
            k(0.0),
            k(1.0),
            mul(k(spec.elu_alpha), Expr::Exp(b(x()))),
        ),
        (Kind::Swish, Forward) => mul(x(), sigmoid(mul(k(spec.swish_rho), x()), 0)),
        (Kind::Swish, Derivative) => bind(
            8,
            mul(k(spec.swish_rho), x()),
            bind(
                9,
                sigmoid(var(8), 0),
                add(var(9), mul(var(8), mul(var(9), sub(k(1.0), var(9))))),
            ),
        ),
        (Kind::Mish, Forward) => mish_with(|sp, _| mul(x(), Expr::Tanh(b(sp)))),
        (Kind::Mish, Derivative) => mish_with(|sp, s| {
            bind(
                7,
                Expr::Tanh(b(sp)),
                add(var(7), mul(mul(x(), s), sub(k(1.0), mul(var(7), var(7))))),
            )
        }),
        (Kind::Aptx, Forward) => mul(
            add(
                k(spec.aptx_alpha),
                Expr::Tanh(b(mul(k(spec.aptx_beta), x()))),
            ),
            mul(k(spec.aptx_gamma), x()),
        ),
        (Kind::Aptx, Derivative) => bind(
            0,
            mul(k(spec.aptx_beta), x()),
            bind(
                1,
                Expr::Tanh(b(var(0))),
                mul(
                    k(spec.aptx_gamma),
                    add(
                        add(k(spec.aptx_alpha), var(1)),
                        mul(var(0), sub(k(1.0), mul(var(1), var(1)))),
                    ),
                ),
            ),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub spec: ActivationSpec,
    pub forward: OpCounts,
    pub derivative: OpCounts,
}

impl CostProfile {
    pub fn pass(&self, pass: Pass) -> &OpCounts {
        match pass {
            Pass::Forward => &self.forward,
            Pass::Derivative => &self.derivative,
        }
    }
}

pub fn count_ops(spec: &ActivationSpec) -> CostProfile {
    CostProfile {
        spec: *spec,
        forward: expression(spec, Pass::Forward).count(),
        derivative: expression(spec, Pass::Derivative).count(),
    }
}
