//! The self-check suite behind `aptx verify`.
//!
//! Every check resolves activations through a [`Registry`], so a registry
//! carrying a deliberately broken strategy (see [`GradOffset`]) exercises the
//! same code paths as the built-in one.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{
    mish_grad_closed_form, Activation, ActivationSpec, Kind, Registry, ValueGrad,
};
use crate::analysis::{compare, compare_grads, derivative_diagnostics, Grid};
use crate::calculus::{central_diff, find_min, DiffConfig, DEFAULT_TOL};
use crate::perf::{count_ops, Pass};
use crate::Result;

pub const GRADIENT_POINTS: usize = 1000;
pub const GRADIENT_SEED: u64 = 0x00C0_FFEE;
pub const GRADIENT_RANGE: f64 = 20.0;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const CLOSED_FORM_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const MIN_TOL: f64 = 1e-6;

/// Minimum of APTx(1, 1, 0.5), computed to 40 digits with mpmath.
pub const APTX_ARGMIN: f64 = -0.639_232_271_380_536_8;
pub const APTX_MIN: f64 = -0.139_232_271_380_536_9;
/// Minimum of MISH, computed to 40 digits with mpmath.
pub const MISH_ARGMIN: f64 = -1.192_431_214_515_495_2;
pub const MISH_MIN: f64 = -0.308_843_413_017_250_4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `measured <= threshold`.
    fn at_most(name: impl Into<String>, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail,
        }
    }

    /// Passes when `measured > threshold`.
    fn above(name: impl Into<String>, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: measured > threshold,
            measured,
            threshold,
            detail,
        }
    }

    fn error(name: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            threshold: f64::NAN,
            detail: err.to_string(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {} measured={:e} threshold={:e} {}",
            self.name, self.measured, self.threshold, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

type CheckFn = fn(&Registry) -> Vec<CheckResult>;

/// Check groups and the name prefix each one produces.
const GROUPS: &[(&str, CheckFn)] = &[
    ("gradient/", gradient_checks),
    ("mish-closed-form/", mish_closed_form_checks),
    ("swish-identity/", swish_identity_checks),
    ("domain-split/", domain_split_checks),
    ("piecewise-continuity", piecewise_continuity_checks),
    ("bounded-below/", bounded_below_checks),
    ("derivative-range/", derivative_range_checks),
    ("cost-dominance/", cost_dominance_checks),
];

/// Every check name the suite can produce.
pub fn check_names() -> Vec<String> {
    run_verify(Registry::builtin(), None)
        .checks
        .into_iter()
        .map(|c| c.name)
        .collect()
}

/// Run all checks whose name starts with `filter` (all of them for `None`).
pub fn run_verify(registry: &Registry, filter: Option<&str>) -> VerifyReport {
    let filter = filter.unwrap_or("");
    let mut checks = Vec::new();
    for (prefix, group) in GROUPS {
        // skip groups that cannot contain a match
        if !(prefix.starts_with(filter) || filter.starts_with(prefix)) {
            continue;
        }
        checks.extend(
            group(registry)
                .into_iter()
                .filter(|c| c.name.starts_with(filter)),
        );
    }
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Seeded sample points in `[-range, range]`.
pub fn gradient_points(n: usize, range: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-range..=range)).collect()
}

/// Worst relative error between `act`'s analytic derivative and central
/// differences of its value, over `xs`. Points within `max(1e-6, 2h)` of a
/// kink are skipped. The fused and slice derivative paths are held to the
/// same oracle.
pub fn gradient_error(
    act: &dyn Activation,
    kinked: bool,
    xs: &[f64],
    cfg: &DiffConfig,
) -> Result<(f64, f64, usize)> {
    let exclusion = 1e-6f64.max(2.0 * cfg.step);
    let xs: Vec<f64> = xs
        .iter()
        .copied()
        .filter(|x| !kinked || x.abs() > exclusion)
        .collect();
    let mut slice = vec![0.0; xs.len()];
    act.derivative_f64(&xs, &mut slice);
    let mut worst = (0.0, f64::NAN);
    for (&x, &g_slice) in xs.iter().zip(&slice) {
        let numeric = central_diff(|t| act.value(t), x, cfg)?;
        let ValueGrad { grad: g_fused, .. } = act.value_grad(x);
        for g in [act.grad(x), g_fused, g_slice] {
            let e = cfg.rel_err(g, numeric);
            if e > worst.0 || e.is_nan() {
                worst = (e, x);
            }
        }
    }
    Ok((worst.0, worst.1, xs.len()))
}

fn gradient_checks(registry: &Registry) -> Vec<CheckResult> {
    let xs = gradient_points(GRADIENT_POINTS, GRADIENT_RANGE, GRADIENT_SEED);
    let cfg = DiffConfig::default();
    Kind::ALL
        .iter()
        .map(|&kind| {
            let name = format!("gradient/{kind}");
            let spec = ActivationSpec::new(kind);
            match registry
                .resolve(&spec)
                .and_then(|act| gradient_error(act.as_ref(), kind.has_kink(), &xs, &cfg))
            {
                Ok((err, at, n)) => CheckResult::at_most(
                    name,
                    err,
                    GRADIENT_TOL,
                    format!("{spec}: worst relative error at x = {at} over {n} points"),
                ),
                Err(e) => CheckResult::error(name, &e),
            }
        })
        .collect()
}

fn mish_closed_form_checks(registry: &Registry) -> Vec<CheckResult> {
    let run = || -> Result<Vec<CheckResult>> {
        let mish = registry.resolve(&ActivationSpec::new(Kind::Mish))?;
        let grid = Grid::new(-20.0, 20.0, 1e-2)?;
        let cfg = DiffConfig::default();
        let (mut impl_err, mut fd_err) = ((0.0, 0.0), (0.0, 0.0));
        for x in grid.points() {
            let closed = mish_grad_closed_form(x)?;
            let e = (closed - mish.grad(x)).abs();
            if e > impl_err.0 || e.is_nan() {
                impl_err = (e, x);
            }
            let e = cfg.rel_err(closed, central_diff(|t| mish.value(t), x, &cfg)?);
            if e > fd_err.0 || e.is_nan() {
                fd_err = (e, x);
            }
        }
        Ok(vec![
            CheckResult::at_most(
                "mish-closed-form/implementation",
                impl_err.0,
                CLOSED_FORM_TOL,
                format!(
                    "max |closed form - mish'| on [-20, 20] step 0.01, at x = {}",
                    impl_err.1
                ),
            ),
            CheckResult::at_most(
                "mish-closed-form/finite-difference",
                fd_err.0,
                GRADIENT_TOL,
                format!(
                    "max relative error vs central differences, at x = {}",
                    fd_err.1
                ),
            ),
        ])
    };
    run().unwrap_or_else(|e| vec![CheckResult::error("mish-closed-form/implementation", &e)])
}

fn swish_identity_checks(registry: &Registry) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for rho in [1.0, 2.0] {
        let prefix = format!("swish-identity/rho-{rho}");
        let pair = registry
            .resolve(&ActivationSpec::aptx(1.0, rho / 2.0, 0.5))
            .and_then(|a| Ok((a, registry.resolve(&ActivationSpec::swish(rho))?)))
            .and_then(|pair| Ok((pair, Grid::new(-20.0, 20.0, 1e-3)?)));
        match pair {
            Ok(((aptx, swish), grid)) => {
                let v = compare(aptx.as_ref(), swish.as_ref(), &grid);
                let g = compare_grads(aptx.as_ref(), swish.as_ref(), &grid);
                out.push(CheckResult::at_most(
                    format!("{prefix}/value"),
                    v.max_abs_err,
                    IDENTITY_TOL,
                    format!(
                        "APTx(1, {}, 0.5) vs SWISH({rho}) on [-20, 20] step 1e-3",
                        rho / 2.0
                    ),
                ));
                out.push(CheckResult::at_most(
                    format!("{prefix}/grad"),
                    g.max_abs_err,
                    IDENTITY_TOL,
                    format!("derivatives, worst at x = {}", g.arg_max_err),
                ));
            }
            Err(e) => out.push(CheckResult::error(prefix, &e)),
        }
    }
    out
}

/// Max |a - MISH| on `[lo, hi]` step 1e-3 for the two single-β APTx variants
/// and the piecewise approximant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSplit {
    pub beta_1: f64,
    pub beta_half: f64,
    pub piecewise: f64,
}

pub fn domain_split_errors(registry: &Registry, lo: f64, hi: f64) -> Result<DomainSplit> {
    let grid = Grid::new(lo, hi, 1e-3)?;
    let mish = registry.resolve(&ActivationSpec::new(Kind::Mish))?;
    let steep = registry.resolve(&ActivationSpec::aptx(1.0, 1.0, 0.5))?;
    let shallow = registry.resolve(&ActivationSpec::aptx(1.0, 0.5, 0.5))?;
    let piecewise = Piecewise {
        negative: shallow.clone(),
        positive: steep.clone(),
    };
    Ok(DomainSplit {
        beta_1: compare(steep.as_ref(), mish.as_ref(), &grid).max_abs_err,
        beta_half: compare(shallow.as_ref(), mish.as_ref(), &grid).max_abs_err,
        piecewise: compare(&piecewise, mish.as_ref(), &grid).max_abs_err,
    })
}

fn domain_split_checks(registry: &Registry) -> Vec<CheckResult> {
    let run = || -> Result<Vec<CheckResult>> {
        let pos = domain_split_errors(registry, 0.0, 10.0)?;
        let neg = domain_split_errors(registry, -10.0, 0.0)?;
        let all = domain_split_errors(registry, -10.0, 10.0)?;
        Ok(vec![
            CheckResult::above(
                "domain-split/positive",
                pos.beta_half - pos.beta_1,
                0.0,
                format!(
                    "[0, 10]: beta=1 err {:.6e} < beta=0.5 err {:.6e}",
                    pos.beta_1, pos.beta_half
                ),
            ),
            CheckResult::above(
                "domain-split/negative",
                neg.beta_1 - neg.beta_half,
                0.0,
                format!(
                    "[-10, 0]: beta=0.5 err {:.6e} < beta=1 err {:.6e}",
                    neg.beta_half, neg.beta_1
                ),
            ),
            CheckResult::above(
                "domain-split/piecewise",
                all.beta_1.min(all.beta_half) - all.piecewise,
                0.0,
                format!(
                    "[-10, 10]: piecewise err {:.6e} < min(beta=1 {:.6e}, beta=0.5 {:.6e})",
                    all.piecewise, all.beta_1, all.beta_half
                ),
            ),
        ])
    };
    run().unwrap_or_else(|e| vec![CheckResult::error("domain-split/positive", &e)])
}

fn piecewise_continuity_checks(registry: &Registry) -> Vec<CheckResult> {
    let run = || -> Result<CheckResult> {
        let left = registry
            .resolve(&ActivationSpec::aptx(1.0, 0.5, 0.5))?
            .value_grad(0.0);
        let right = registry
            .resolve(&ActivationSpec::aptx(1.0, 1.0, 0.5))?
            .value_grad(0.0);
        let jump = (left.value - right.value)
            .abs()
            .max((left.grad - right.grad).abs());
        Ok(CheckResult::at_most(
            "piecewise-continuity",
            jump,
            IDENTITY_TOL,
            format!(
                "at 0: left ({}, {}), right ({}, {})",
                left.value, left.grad, right.value, right.grad
            ),
        ))
    };
    vec![run().unwrap_or_else(|e| CheckResult::error("piecewise-continuity", &e))]
}

fn bounded_below_checks(registry: &Registry) -> Vec<CheckResult> {
    let cases = [
        (
            "bounded-below/aptx",
            ActivationSpec::aptx(1.0, 1.0, 0.5),
            APTX_ARGMIN,
            APTX_MIN,
        ),
        (
            "bounded-below/mish",
            ActivationSpec::new(Kind::Mish),
            MISH_ARGMIN,
            MISH_MIN,
        ),
    ];
    cases
        .iter()
        .map(|(name, spec, argmin, min)| {
            let run = || -> Result<CheckResult> {
                let act = registry.resolve(spec)?;
                let m = find_min(|x| act.value(x), -10.0, 0.0, DEFAULT_TOL)?;
                let at_100 = act.value(100.0);
                let err = (m.argmin - argmin).abs().max((m.min_value - min).abs());
                let mut check = CheckResult::at_most(
                    *name,
                    err,
                    MIN_TOL,
                    format!(
                        "min {:.12} at x = {:.12}; f(100) = {at_100}",
                        m.min_value, m.argmin
                    ),
                );
                check.passed &= at_100 > 99.0;
                Ok(check)
            };
            run().unwrap_or_else(|e| CheckResult::error(*name, &e))
        })
        .collect()
}

fn derivative_range_checks(registry: &Registry) -> Vec<CheckResult> {
    let run = || -> Result<Vec<CheckResult>> {
        let grid = Grid::new(-10.0, 10.0, 0.01)?;
        let sig = derivative_diagnostics(
            registry
                .resolve(&ActivationSpec::new(Kind::Sigmoid))?
                .as_ref(),
            &grid,
        );
        let tanh = derivative_diagnostics(
            registry.resolve(&ActivationSpec::new(Kind::Tanh))?.as_ref(),
            &grid,
        );
        let dead = derivative_diagnostics(
            registry.resolve(&ActivationSpec::new(Kind::Relu))?.as_ref(),
            &Grid::new(-10.0, -0.01, 0.01)?,
        );
        let containment = (tanh.grad_max - sig.grad_max).min(sig.grad_min - tanh.grad_min);
        Ok(vec![
            CheckResult::at_most(
                "derivative-range/sigmoid-peak",
                (sig.grad_max - 0.25).abs(),
                1e-9,
                format!("max sigmoid' {} at x = {}", sig.grad_max, sig.arg_grad_max),
            ),
            CheckResult::at_most(
                "derivative-range/tanh-peak",
                (tanh.grad_max - 1.0).abs(),
                1e-9,
                format!("max tanh' {} at x = {}", tanh.grad_max, tanh.arg_grad_max),
            ),
            CheckResult::above(
                "derivative-range/tanh-contains-sigmoid",
                containment,
                0.0,
                format!(
                    "tanh' in [{:e}, {}], sigmoid' in [{:e}, {}]",
                    tanh.grad_min, tanh.grad_max, sig.grad_min, sig.grad_max
                ),
            ),
            CheckResult::at_most(
                "derivative-range/relu-dead",
                1.0 - dead.fraction_below,
                0.0,
                format!(
                    "share of [-10, -0.01] with |relu'| < 1e-3: {}",
                    dead.fraction_below
                ),
            ),
        ])
    };
    run().unwrap_or_else(|e| vec![CheckResult::error("derivative-range/sigmoid-peak", &e)])
}

fn cost_dominance_checks(_: &Registry) -> Vec<CheckResult> {
    let aptx = count_ops(&ActivationSpec::aptx(1.0, 1.0, 0.5));
    let mish = count_ops(&ActivationSpec::new(Kind::Mish));
    [(Pass::Forward, "forward"), (Pass::Derivative, "derivative")]
        .into_iter()
        .map(|(pass, label)| {
            let (a, m) = (
                aptx.pass(pass).transcendental(),
                mish.pass(pass).transcendental(),
            );
            CheckResult::above(
                format!("cost-dominance/{label}"),
                f64::from(m) - f64::from(a),
                0.0,
                format!("transcendentals: aptx {a}, mish {m}"),
            )
        })
        .collect()
}

/// Piecewise approximant assembled from two resolved strategies, so a
/// mutated registry reaches it too.
#[derive(Debug)]
struct Piecewise {
    negative: Arc<dyn Activation>,
    positive: Arc<dyn Activation>,
}

impl Piecewise {
    fn pick(&self, x: f64) -> &dyn Activation {
        if x < 0.0 {
            self.negative.as_ref()
        } else {
            self.positive.as_ref()
        }
    }
}

impl Activation for Piecewise {
    fn name(&self) -> String {
        "aptx_piecewise".into()
    }

    fn value(&self, x: f64) -> f64 {
        self.pick(x).value(x)
    }

    fn grad(&self, x: f64) -> f64 {
        self.pick(x).grad(x)
    }

    fn value_grad(&self, x: f64) -> ValueGrad {
        self.pick(x).value_grad(x)
    }

    fn forward_f32(&self, xs: &[f32], out: &mut [f32]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.value(f64::from(x)) as f32;
        }
    }

    fn derivative_f32(&self, xs: &[f32], out: &mut [f32]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.grad(f64::from(x)) as f32;
        }
    }

    fn fused_f32(&self, xs: &[f32], values: &mut [f32], grads: &mut [f32]) {
        self.forward_f32(xs, values);
        self.derivative_f32(xs, grads);
    }
}

/// Wraps a strategy and adds a constant to every derivative it reports.
/// Used to confirm the suite notices a corrupted derivative.
#[derive(Debug)]
pub struct GradOffset {
    pub inner: Arc<dyn Activation>,
    pub offset: f64,
}

impl Activation for GradOffset {
    fn name(&self) -> String {
        format!("{}+grad_offset({})", self.inner.name(), self.offset)
    }

    fn value(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    fn grad(&self, x: f64) -> f64 {
        self.inner.grad(x) + self.offset
    }

    fn value_grad(&self, x: f64) -> ValueGrad {
        let vg = self.inner.value_grad(x);
        ValueGrad {
            value: vg.value,
            grad: vg.grad + self.offset,
        }
    }

    fn derivative_f64(&self, xs: &[f64], out: &mut [f64]) {
        self.inner.derivative_f64(xs, out);
        out.iter_mut().for_each(|g| *g += self.offset);
    }

    fn fused_f64(&self, xs: &[f64], values: &mut [f64], grads: &mut [f64]) {
        self.inner.fused_f64(xs, values, grads);
        grads.iter_mut().for_each(|g| *g += self.offset);
    }

    fn forward_f32(&self, xs: &[f32], out: &mut [f32]) {
        self.inner.forward_f32(xs, out);
    }

    fn derivative_f32(&self, xs: &[f32], out: &mut [f32]) {
        self.inner.derivative_f32(xs, out);
        out.iter_mut().for_each(|g| *g += self.offset as f32);
    }

    fn fused_f32(&self, xs: &[f32], values: &mut [f32], grads: &mut [f32]) {
        self.inner.fused_f32(xs, values, grads);
        grads.iter_mut().for_each(|g| *g += self.offset as f32);
    }
}

/// A copy of the built-in registry whose `kind` strategy reports
/// `f'(x) + offset`.
pub fn mutated_registry(kind: Kind, offset: f64) -> Registry {
    let base = Registry::with_builtins();
    let factory = base
        .factory(kind.name())
        .expect("every kind is built in")
        .clone();
    let mut registry = base;
    registry.register(
        kind.name(),
        move |spec: &ActivationSpec| -> Arc<dyn Activation> {
            Arc::new(GradOffset {
                inner: factory(spec),
                offset,
            })
        },
    );
    registry
}
