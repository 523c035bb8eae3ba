//! Grid sampling, approximation-error reports and derivative diagnostics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::activation::{Activation, ActivationSpec, PiecewiseMishApproximant, Registry};
use crate::{Error, Result};

/// Refuse grids larger than this many points.
pub const MAX_GRID_POINTS: usize = 100_000_000;

/// Uniform grid `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config(format!(
                "need finite lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::config(format!("step must be positive, got {step}")));
        }
        let grid = Self { lo, hi, step };
        if grid.len() > MAX_GRID_POINTS {
            return Err(Error::config(format!("grid has {} points", grid.len())));
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        // the 1e-9 slack keeps `hi` when (hi - lo) / step lands just under an integer
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.at(i))
    }
}

/// `(x, f(x), f'(x))` samples over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSeries {
    pub label: String,
    /// `None` for activations that are not described by a spec, such as the
    /// piecewise approximant.
    pub spec: Option<ActivationSpec>,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
}

impl EvalSeries {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn min_value(&self) -> Option<(f64, f64)> {
        self.xs
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub fn resolve(spec: &ActivationSpec) -> Result<Arc<dyn Activation>> {
    Registry::builtin().resolve(spec)
}

pub fn sample(act: &dyn Activation, grid: &Grid) -> EvalSeries {
    let xs: Vec<f64> = grid.points().collect();
    let mut values = vec![0.0; xs.len()];
    let mut grads = vec![0.0; xs.len()];
    act.fused_f64(&xs, &mut values, &mut grads);
    EvalSeries {
        label: act.name(),
        spec: None,
        xs,
        values,
        grads,
    }
}

pub fn sample_series(spec: &ActivationSpec, lo: f64, hi: f64, step: f64) -> Result<EvalSeries> {
    let grid = Grid::new(lo, hi, step)?;
    let act = resolve(spec)?;
    let mut series = sample(act.as_ref(), &grid);
    series.spec = Some(*spec);
    Ok(series)
}

/// Error metrics over one part of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainMetrics {
    pub n_samples: usize,
    pub max_abs_err: f64,
    pub arg_max_err: f64,
    pub rmse: f64,
}

impl DomainMetrics {
    fn from_errors(xs: &[f64], errs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let (arg, max) =
            xs.iter().zip(errs).fold(
                (xs[0], errs[0]),
                |best, (&x, &e)| if e > best.1 { (x, e) } else { best },
            );
        let squares: Vec<f64> = errs.iter().map(|e| e * e).collect();
        let rmse = (pairwise_sum(&squares) / xs.len() as f64).sqrt();
        Some(Self {
            n_samples: xs.len(),
            max_abs_err: max,
            arg_max_err: arg,
            // rounding in the sum must not push rmse past the maximum
            rmse: rmse.min(max),
        })
    }
}

/// Error between two functions over a grid, with the negative (`x < 0`) and
/// non-negative (`x >= 0`) halves also reported separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub a: String,
    pub b: String,
    pub domain: (f64, f64),
    pub step: f64,
    pub n_samples: usize,
    pub max_abs_err: f64,
    pub arg_max_err: f64,
    pub rmse: f64,
    pub negative: Option<DomainMetrics>,
    pub positive: Option<DomainMetrics>,
}

/// Fixed-order pairwise summation; the result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let (l, r) = xs.split_at(xs.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

fn report(a: String, b: String, grid: &Grid, xs: &[f64], errs: &[f64]) -> ErrorReport {
    let split = xs.partition_point(|&x| x < 0.0);
    let all = DomainMetrics::from_errors(xs, errs).expect("grid is never empty");
    ErrorReport {
        a,
        b,
        domain: (grid.lo, grid.hi),
        step: grid.step,
        n_samples: all.n_samples,
        max_abs_err: all.max_abs_err,
        arg_max_err: all.arg_max_err,
        rmse: all.rmse,
        negative: DomainMetrics::from_errors(&xs[..split], &errs[..split]),
        positive: DomainMetrics::from_errors(&xs[split..], &errs[split..]),
    }
}

/// Metrics over `|a(x) - b(x)|`.
pub fn compare(a: &dyn Activation, b: &dyn Activation, grid: &Grid) -> ErrorReport {
    let xs: Vec<f64> = grid.points().collect();
    let errs: Vec<f64> = xs
        .iter()
        .map(|&x| (a.value(x) - b.value(x)).abs())
        .collect();
    report(a.name(), b.name(), grid, &xs, &errs)
}

/// Metrics over `|a'(x) - b'(x)|`.
pub fn compare_grads(a: &dyn Activation, b: &dyn Activation, grid: &Grid) -> ErrorReport {
    let xs: Vec<f64> = grid.points().collect();
    let errs: Vec<f64> = xs.iter().map(|&x| (a.grad(x) - b.grad(x)).abs()).collect();
    report(a.name(), b.name(), grid, &xs, &errs)
}

pub fn compare_specs(
    a: &ActivationSpec,
    b: &ActivationSpec,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<ErrorReport> {
    let grid = Grid::new(lo, hi, step)?;
    Ok(compare(resolve(a)?.as_ref(), resolve(b)?.as_ref(), &grid))
}

pub fn compare_grad_specs(
    a: &ActivationSpec,
    b: &ActivationSpec,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<ErrorReport> {
    let grid = Grid::new(lo, hi, step)?;
    Ok(compare_grads(
        resolve(a)?.as_ref(),
        resolve(b)?.as_ref(),
        &grid,
    ))
}

/// The split-parameter MISH approximant: APTx(1, 1/2, 1/2) for `x < 0`,
/// APTx(1, 1, 1/2) for `x >= 0`.
pub fn piecewise_aptx_mish_approximant(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("input must be finite, got {x}")));
    }
    Ok(Activation::value(&PiecewiseMishApproximant, x))
}

/// Gradient magnitude summary over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeDiagnostics {
    pub label: String,
    pub domain: (f64, f64),
    pub grad_min: f64,
    pub arg_grad_min: f64,
    pub grad_max: f64,
    pub arg_grad_max: f64,
    /// `epsilon` used by `fraction_below`.
    pub threshold: f64,
    /// Share of grid points with `|f'(x)| < threshold`.
    pub fraction_below: f64,
}

pub const VANISHING_GRAD_THRESHOLD: f64 = 1e-3;

pub fn derivative_diagnostics(act: &dyn Activation, grid: &Grid) -> DerivativeDiagnostics {
    let series = sample(act, grid);
    let mut min = (series.xs[0], series.grads[0]);
    let mut max = min;
    let mut below = 0usize;
    for (&x, &g) in series.xs.iter().zip(&series.grads) {
        if g < min.1 {
            min = (x, g);
        }
        if g > max.1 {
            max = (x, g);
        }
        if g.abs() < VANISHING_GRAD_THRESHOLD {
            below += 1;
        }
    }
    let n = series.len();
    DerivativeDiagnostics {
        label: series.label,
        domain: (grid.lo, grid.hi),
        grad_min: min.1,
        arg_grad_min: min.0,
        grad_max: max.1,
        arg_grad_max: max.0,
        threshold: VANISHING_GRAD_THRESHOLD,
        fraction_below: below as f64 / n as f64,
    }
}

pub fn derivative_diagnostics_spec(
    spec: &ActivationSpec,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<DerivativeDiagnostics> {
    let grid = Grid::new(lo, hi, step)?;
    Ok(derivative_diagnostics(resolve(spec)?.as_ref(), &grid))
}
