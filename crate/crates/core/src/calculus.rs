//! Numerical oracles used to check the analytic code paths: central finite
//! differences and a bracketing 1-D minimizer. Neither looks at analytic
//! derivatives.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    /// Central-difference half step `h`.
    pub step: f64,
    /// Floor on the denominator of [`DiffConfig::rel_err`].
    pub rel_floor: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            rel_floor: 1.0,
        }
    }
}

impl DiffConfig {
    pub fn new(step: f64, rel_floor: f64) -> Result<Self> {
        let cfg = Self { step, rel_floor };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.rel_floor > 0.0 && self.rel_floor.is_finite()) {
            return Err(Error::config(format!(
                "rel_floor must be positive, got {}",
                self.rel_floor
            )));
        }
        Ok(())
    }

    /// `|analytic - numeric| / max(rel_floor, |analytic|)`.
    pub fn rel_err(&self, analytic: f64, numeric: f64) -> f64 {
        (analytic - numeric).abs() / analytic.abs().max(self.rel_floor)
    }
}

/// `(f(x + h) - f(x - h)) / 2h`.
///
/// The denominator is the spacing of the sample points as actually
/// represented, `(x + h) - (x - h)`, rather than the nominal `2h`.
pub fn central_diff<F>(f: F, x: f64, cfg: &DiffConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let (xp, xm) = (x + cfg.step, x - cfg.step);
    let (hi, lo) = (f(xp), f(xm));
    if !hi.is_finite() || !lo.is_finite() {
        return Err(Error::Oracle(format!(
            "non-finite sample near x = {x}: f(x+h) = {hi}, f(x-h) = {lo}"
        )));
    }
    Ok((hi - lo) / (xp - xm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinResult {
    pub argmin: f64,
    pub min_value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Number of samples in the bracketing scan.
pub const SCAN_POINTS: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 500;

/// Locate the minimum of `f` on `[lo, hi]`.
///
/// A uniform scan of [`SCAN_POINTS`] samples picks the best sample, its two
/// neighbours become the bracket, and golden-section search shrinks the
/// bracket to width `tol`. This finds the global minimum only when the
/// scan lands in the right basin, which holds for the single-lobe
/// activations it is used on.
pub fn find_min<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<MinResult>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::config(format!(
            "need finite lo < hi, got [{lo}, {hi}]"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::config(format!("tol must be positive, got {tol}")));
    }

    let n = SCAN_POINTS;
    let dx = (hi - lo) / (n - 1) as f64;
    let grid = |i: usize| if i == n - 1 { hi } else { lo + i as f64 * dx };
    let mut best = (0, f64::INFINITY);
    for i in 0..n {
        let x = grid(i);
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::Oracle(format!(
                "non-finite f({x}) = {y} during scan"
            )));
        }
        if y < best.1 {
            best = (i, y);
        }
    }

    let (mut a, mut b) = (
        grid(best.0.saturating_sub(1)),
        grid((best.0 + 1).min(n - 1)),
    );
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while b - a > tol && iterations < MAX_ITERATIONS {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if !(fc.is_finite() && fd.is_finite()) {
            return Err(Error::Oracle(
                "non-finite value during golden-section refinement".into(),
            ));
        }
        // The interior points can no longer be separated in floating point.
        if !(a < c && c <= d && d < b) {
            break;
        }
    }

    // The scan sample can still win when the bracket was clamped to an endpoint.
    let mut candidates = [(c, fc), (d, fd), (grid(best.0), best.1)];
    candidates.sort_by(|p, q| p.1.total_cmp(&q.1));
    let (argmin, min_value) = candidates
        .into_iter()
        .find(|&(x, _)| a <= x && x <= b)
        .unwrap_or((c, fc));

    Ok(MinResult {
        argmin,
        min_value,
        iterations,
        bracket: (a, b),
    })
}
