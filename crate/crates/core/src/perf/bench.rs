//! Elementwise throughput measurement.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cost::{count_ops, Pass};
use crate::activation::{Activation, ActivationSpec, Kind, Registry};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Forward,
    Derivative,
    /// Value and derivative in one pass.
    Fused,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Forward, Mode::Derivative, Mode::Fused];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Derivative => "derivative",
            Mode::Fused => "fused",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub mode: Mode,
    pub array_len: usize,
    pub reps: usize,
    pub warmup: usize,
    pub precision: Precision,
    pub seed: u64,
    /// Workers for the data-parallel mode; 1 is the single-threaded default.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Forward,
            array_len: 10_000_000,
            reps: MIN_REPS,
            warmup: MIN_WARMUP,
            precision: Precision::F32,
            seed: 0x5EED,
            threads: 1,
        }
    }
}

pub const MIN_ARRAY_LEN: usize = 10_000;
pub const MIN_REPS: usize = 11;
pub const MIN_WARMUP: usize = 3;
/// Inputs are drawn uniformly from `[-INPUT_RANGE, INPUT_RANGE]`.
pub const INPUT_RANGE: f64 = 5.0;
/// A timed rep must last at least this many timer ticks.
const MIN_TICKS_PER_REP: u32 = 100;

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.array_len < MIN_ARRAY_LEN {
            return Err(Error::config(format!(
                "array_len {} is below the minimum of {MIN_ARRAY_LEN}; use a larger array",
                self.array_len
            )));
        }
        if self.reps < MIN_REPS || self.warmup < MIN_WARMUP {
            return Err(Error::config(format!(
                "need at least {MIN_REPS} reps and {MIN_WARMUP} warm-up reps, got {} and {}",
                self.reps, self.warmup
            )));
        }
        if self.threads == 0 {
            return Err(Error::config("threads must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub label: String,
    pub spec: ActivationSpec,
    pub mode: Mode,
    pub precision: Precision,
    pub array_len: usize,
    pub reps: usize,
    pub threads: usize,
    /// Median over the timed reps.
    pub elements_per_second: f64,
    pub median_seconds: f64,
    pub relative_to_mish: f64,
    pub transcendental_count: u32,
    /// FNV-1a over the output bits; identical for every rep.
    pub checksum: u64,
}

/// Seeded inputs shared by every activation in a run.
#[derive(Debug, Clone)]
pub struct BenchInputs {
    pub f64s: Vec<f64>,
    pub f32s: Vec<f32>,
}

impl BenchInputs {
    pub fn generate(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f64s: Vec<f64> = (0..len)
            .map(|_| rng.gen_range(-INPUT_RANGE..=INPUT_RANGE))
            .collect();
        let f32s = f64s.iter().map(|&x| x as f32).collect();
        Self { f64s, f32s }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut h: u64, word: u64) -> u64 {
    for byte in word.to_le_bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub(crate) fn fnv_words(words: impl IntoIterator<Item = u64>) -> u64 {
    words.into_iter().fold(FNV_OFFSET, fnv)
}

trait Lane: Copy + Default + Send + Sync {
    fn bits(self) -> u64;
    fn forward(act: &dyn Activation, xs: &[Self], out: &mut [Self]);
    fn derivative(act: &dyn Activation, xs: &[Self], out: &mut [Self]);
    fn fused(act: &dyn Activation, xs: &[Self], v: &mut [Self], g: &mut [Self]);
}

impl Lane for f32 {
    fn bits(self) -> u64 {
        u64::from(self.to_bits())
    }
    fn forward(act: &dyn Activation, xs: &[Self], out: &mut [Self]) {
        act.forward_f32(xs, out)
    }
    fn derivative(act: &dyn Activation, xs: &[Self], out: &mut [Self]) {
        act.derivative_f32(xs, out)
    }
    fn fused(act: &dyn Activation, xs: &[Self], v: &mut [Self], g: &mut [Self]) {
        act.fused_f32(xs, v, g)
    }
}

impl Lane for f64 {
    fn bits(self) -> u64 {
        self.to_bits()
    }
    fn forward(act: &dyn Activation, xs: &[Self], out: &mut [Self]) {
        act.forward_f64(xs, out)
    }
    fn derivative(act: &dyn Activation, xs: &[Self], out: &mut [Self]) {
        act.derivative_f64(xs, out)
    }
    fn fused(act: &dyn Activation, xs: &[Self], v: &mut [Self], g: &mut [Self]) {
        act.fused_f64(xs, v, g)
    }
}

fn run_once<T: Lane>(act: &dyn Activation, mode: Mode, xs: &[T], a: &mut [T], b: &mut [T]) {
    match mode {
        Mode::Forward => T::forward(act, xs, a),
        Mode::Derivative => T::derivative(act, xs, a),
        Mode::Fused => T::fused(act, xs, a, b),
    }
}

fn run_partitioned<T: Lane>(
    act: &dyn Activation,
    mode: Mode,
    threads: usize,
    xs: &[T],
    a: &mut [T],
    b: &mut [T],
) {
    if threads <= 1 {
        run_once(act, mode, xs, a, b);
        return;
    }
    let chunk = xs.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let (mut a, mut b) = (a, b);
        for x in xs.chunks(chunk) {
            let (a_head, a_tail) = std::mem::take(&mut a).split_at_mut(x.len());
            // `b` is empty unless the mode is fused
            let b_len = x.len().min(b.len());
            let (b_head, b_tail) = std::mem::take(&mut b).split_at_mut(b_len);
            a = a_tail;
            b = b_tail;
            scope.spawn(move || run_once(act, mode, x, a_head, b_head));
        }
    });
}

fn checksum<T: Lane>(mode: Mode, a: &[T], b: &[T]) -> u64 {
    let b = if mode == Mode::Fused { b } else { &[] };
    fnv_words(a.iter().chain(b).map(|v| v.bits()))
}

/// Smallest observable step of the monotonic clock.
fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

#[derive(Debug, Clone, Copy)]
struct Measurement {
    median_seconds: f64,
    checksum: u64,
}

fn measure_lane<T: Lane>(act: &dyn Activation, xs: &[T], cfg: &BenchConfig) -> Result<Measurement> {
    let mut a = vec![T::default(); xs.len()];
    let mut b = vec![T::default(); if cfg.mode == Mode::Fused { xs.len() } else { 0 }];
    let b_slice: &mut [T] = if cfg.mode == Mode::Fused {
        &mut b
    } else {
        &mut []
    };
    for _ in 0..cfg.warmup {
        run_partitioned(act, cfg.mode, cfg.threads, black_box(xs), &mut a, b_slice);
    }
    let mut times = Vec::with_capacity(cfg.reps);
    let mut sum: Option<u64> = None;
    for rep in 0..cfg.reps {
        let t0 = Instant::now();
        run_partitioned(act, cfg.mode, cfg.threads, black_box(xs), &mut a, b_slice);
        let dt = t0.elapsed();
        black_box(&a);
        times.push(dt);
        let h = checksum(cfg.mode, &a, b_slice);
        match sum {
            None => sum = Some(h),
            Some(prev) if prev != h => {
                return Err(Error::Benchmark(format!(
                    "{}: output checksum changed between reps (rep {rep})",
                    act.name()
                )))
            }
            _ => {}
        }
    }
    times.sort();
    let median = times[times.len() / 2];
    let res = timer_resolution();
    if median < res * MIN_TICKS_PER_REP || median.is_zero() {
        return Err(Error::Benchmark(format!(
            "median rep took {median:?}, under {MIN_TICKS_PER_REP} timer ticks of {res:?}; \
             increase array_len"
        )));
    }
    Ok(Measurement {
        median_seconds: median.as_secs_f64(),
        checksum: sum.unwrap_or(FNV_OFFSET),
    })
}

fn measure(act: &dyn Activation, inputs: &BenchInputs, cfg: &BenchConfig) -> Result<Measurement> {
    match cfg.precision {
        Precision::F32 => measure_lane(act, &inputs.f32s, cfg),
        Precision::F64 => measure_lane(act, &inputs.f64s, cfg),
    }
}

fn transcendentals(spec: &ActivationSpec, mode: Mode) -> u32 {
    let c = count_ops(spec);
    match mode {
        Mode::Forward => c.pass(Pass::Forward).transcendental(),
        Mode::Derivative => c.pass(Pass::Derivative).transcendental(),
        // the fused kernels share every transcendental between the two passes
        Mode::Fused => c
            .forward
            .transcendental()
            .max(c.derivative.transcendental()),
    }
}

/// Benchmark several activations on identical input data. MISH is always
/// measured (once) as the reference for `relative_to_mish`.
pub fn bench_suite(
    registry: &Registry,
    specs: &[ActivationSpec],
    cfg: &BenchConfig,
) -> Result<Vec<ThroughputReport>> {
    cfg.validate()?;
    let inputs = BenchInputs::generate(cfg.array_len, cfg.seed);
    let mish_spec = ActivationSpec::new(Kind::Mish);
    let mish = measure(registry.resolve(&mish_spec)?.as_ref(), &inputs, cfg)?;

    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let act = registry.resolve(spec)?;
        let m = if *spec == mish_spec {
            mish
        } else {
            measure(act.as_ref(), &inputs, cfg)?
        };
        out.push(ThroughputReport {
            label: act.name(),
            spec: *spec,
            mode: cfg.mode,
            precision: cfg.precision,
            array_len: cfg.array_len,
            reps: cfg.reps,
            threads: cfg.threads,
            elements_per_second: cfg.array_len as f64 / m.median_seconds,
            median_seconds: m.median_seconds,
            relative_to_mish: mish.median_seconds / m.median_seconds,
            transcendental_count: transcendentals(spec, cfg.mode),
            checksum: m.checksum,
        });
    }
    Ok(out)
}

pub fn bench_throughput(spec: &ActivationSpec, cfg: &BenchConfig) -> Result<ThroughputReport> {
    let mut reports = bench_suite(Registry::builtin(), std::slice::from_ref(spec), cfg)?;
    Ok(reports.remove(0))
}

/// Fixed-width text table: kind, mode, transcendental count, elements/sec,
/// ratio vs MISH.
pub fn render_table(reports: &[ThroughputReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<34} {:<10} {:>6} {:>14} {:>10}",
        "kind", "mode", "transc", "elements/sec", "vs mish"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<34} {:<10} {:>6} {:>14.4e} {:>10.3}",
            r.label,
            r.mode.name(),
            r.transcendental_count,
            r.elements_per_second,
            r.relative_to_mish
        );
    }
    s
}
