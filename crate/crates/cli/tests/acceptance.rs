//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.
//!
//! Run with `cargo test -p aptx-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use aptx_core::activation::{ActivationSpec, Kind, Registry};
use aptx_core::analysis::{compare_grad_specs, compare_specs, Grid};
use aptx_core::calculus::{central_diff, find_min, DiffConfig, DEFAULT_TOL};
use aptx_core::mish_grad_closed_form;
use aptx_core::nn::{
    batch_loss_and_grads, generate_dataset, train, Batch, DatasetName, Loss, MLPModel, TrainConfig,
};
use aptx_core::perf::{bench_suite, count_ops, BenchConfig, Mode, Pass, Precision};
use aptx_core::verify::{domain_split_errors, gradient_error, gradient_points, GRADIENT_SEED};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(started: Instant, budget: Duration) -> Result<(), String> {
    let spent = started.elapsed();
    ensure(spent < budget, || {
        format!("took {spent:.2?}, budget {budget:?}")
    })
}

fn aptx() -> ActivationSpec {
    ActivationSpec::aptx(1.0, 1.0, 0.5)
}

fn mish() -> ActivationSpec {
    ActivationSpec::new(Kind::Mish)
}

fn swish_identity() -> Outcome {
    let t0 = Instant::now();
    let mut detail = Vec::new();
    for rho in [1.0, 2.0] {
        let a = ActivationSpec::aptx(1.0, rho / 2.0, 0.5);
        let s = ActivationSpec::swish(rho);
        let v = compare_specs(&a, &s, -20.0, 20.0, 1e-3).map_err(|e| e.to_string())?;
        let g = compare_grad_specs(&a, &s, -20.0, 20.0, 1e-3).map_err(|e| e.to_string())?;
        ensure(v.max_abs_err <= 1e-12 && g.max_abs_err <= 1e-12, || {
            format!(
                "rho={rho}: value err {:e}, grad err {:e}",
                v.max_abs_err, g.max_abs_err
            )
        })?;
        detail.push(format!(
            "rho={rho}: value {:.1e}, grad {:.1e}",
            v.max_abs_err, g.max_abs_err
        ));
    }
    within(t0, Duration::from_secs(1))?;
    Ok(detail.join("; "))
}

fn gradient_fidelity() -> Outcome {
    let t0 = Instant::now();
    let xs = gradient_points(1000, 20.0, GRADIENT_SEED);
    let cfg = DiffConfig::default();
    let mut worst = (0.0, Kind::Sigmoid);
    for kind in Kind::ALL {
        let act = Registry::builtin()
            .resolve(&ActivationSpec::new(kind))
            .map_err(|e| e.to_string())?;
        let (err, at, _) =
            gradient_error(act.as_ref(), kind.has_kink(), &xs, &cfg).map_err(|e| e.to_string())?;
        ensure(err <= 1e-6, || {
            format!("{kind}: relative error {err:e} at x = {at}")
        })?;
        if err > worst.0 {
            worst = (err, kind);
        }
    }
    within(t0, Duration::from_secs(1))?;
    Ok(format!(
        "8 kinds x 1000 points, worst {:.2e} ({})",
        worst.0, worst.1
    ))
}

fn mish_closed_form() -> Outcome {
    let act = Registry::builtin()
        .resolve(&mish())
        .map_err(|e| e.to_string())?;
    let cfg = DiffConfig::default();
    let (mut vs_impl, mut vs_fd) = (0.0f64, 0.0f64);
    for x in Grid::new(-20.0, 20.0, 1e-2)
        .map_err(|e| e.to_string())?
        .points()
    {
        let closed = mish_grad_closed_form(x).map_err(|e| e.to_string())?;
        vs_impl = vs_impl.max((closed - act.grad(x)).abs());
        let fd = central_diff(|t| act.value(t), x, &cfg).map_err(|e| e.to_string())?;
        vs_fd = vs_fd.max(cfg.rel_err(closed, fd));
    }
    ensure(vs_impl <= 1e-9, || {
        format!("closed form vs implementation {vs_impl:e}")
    })?;
    ensure(vs_fd <= 1e-6, || {
        format!("closed form vs finite differences {vs_fd:e}")
    })?;
    Ok(format!(
        "vs implementation {vs_impl:.1e}, vs finite differences {vs_fd:.1e}"
    ))
}

fn domain_split() -> Outcome {
    let t0 = Instant::now();
    let r = Registry::builtin();
    let pos = domain_split_errors(r, 0.0, 10.0).map_err(|e| e.to_string())?;
    let neg = domain_split_errors(r, -10.0, 0.0).map_err(|e| e.to_string())?;
    let all = domain_split_errors(r, -10.0, 10.0).map_err(|e| e.to_string())?;
    ensure(pos.beta_1 < pos.beta_half, || format!("[0, 10]: {pos:?}"))?;
    ensure(neg.beta_half < neg.beta_1, || format!("[-10, 0]: {neg:?}"))?;
    ensure(all.piecewise < all.beta_1.min(all.beta_half), || {
        format!("[-10, 10]: {all:?}")
    })?;
    within(t0, Duration::from_secs(1))?;
    Ok(format!(
        "[0,10] b=1 {:.5} < b=.5 {:.5}; [-10,0] b=.5 {:.5} < b=1 {:.5}; [-10,10] piecewise {:.5}",
        pos.beta_1, pos.beta_half, neg.beta_half, neg.beta_1, all.piecewise
    ))
}

fn bounded_below() -> Outcome {
    let mut detail = Vec::new();
    for spec in [aptx(), mish()] {
        let act = Registry::builtin()
            .resolve(&spec)
            .map_err(|e| e.to_string())?;
        // step-1e-6 grid oracle over [-2, 0]
        let grid = Grid::new(-2.0, 0.0, 1e-6).map_err(|e| e.to_string())?;
        let (ox, oy) = grid
            .points()
            .map(|x| (x, act.value(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty grid");
        let m = find_min(|x| act.value(x), -10.0, 0.0, DEFAULT_TOL).map_err(|e| e.to_string())?;
        ensure(
            (m.argmin - ox).abs() <= 1e-6 && (m.min_value - oy).abs() <= 1e-6,
            || {
                format!(
                    "{spec}: find_min ({}, {}) vs oracle ({ox}, {oy})",
                    m.argmin, m.min_value
                )
            },
        )?;
        let at_100 = act.value(100.0);
        ensure(at_100 > 99.0, || format!("{spec}: f(100) = {at_100}"))?;
        detail.push(format!(
            "{}: min {:.6} at {:.6}",
            spec.kind, m.min_value, m.argmin
        ));
    }
    Ok(detail.join("; "))
}

fn cost_dominance() -> Outcome {
    let (a, m) = (count_ops(&aptx()), count_ops(&mish()));
    let mut detail = Vec::new();
    for (pass, label) in [(Pass::Forward, "forward"), (Pass::Derivative, "derivative")] {
        let (ta, tm) = (a.pass(pass).transcendental(), m.pass(pass).transcendental());
        ensure(ta < tm, || format!("{label}: aptx {ta} vs mish {tm}"))?;
        detail.push(format!("{label} {ta} vs {tm}"));
    }
    Ok(detail.join("; "))
}

fn measured_direction() -> Outcome {
    let t0 = Instant::now();
    let mut detail = Vec::new();
    for mode in [Mode::Forward, Mode::Derivative] {
        let cfg = BenchConfig {
            mode,
            array_len: 10_000_000,
            precision: Precision::F32,
            threads: 1,
            ..BenchConfig::default()
        };
        let reports =
            bench_suite(Registry::builtin(), &[aptx()], &cfg).map_err(|e| e.to_string())?;
        let ratio = reports[0].relative_to_mish;
        ensure(ratio > 1.0, || {
            format!("{}: aptx/mish throughput ratio {ratio:.3}", mode.name())
        })?;
        detail.push(format!("{} x{ratio:.2}", mode.name()));
    }
    within(t0, Duration::from_secs(30))?;
    Ok(format!("aptx vs mish throughput: {}", detail.join(", ")))
}

fn moons(activation: ActivationSpec) -> TrainConfig {
    TrainConfig {
        dataset: DatasetName::TwoMoons,
        n_samples: 200,
        noise: 0.1,
        hidden: vec![16],
        epochs: 2000,
        learning_rate: 0.5,
        batch: Batch::Full,
        loss: Loss::CrossEntropy,
        seed: 7,
        activation,
    }
}

fn xor(activation: ActivationSpec) -> TrainConfig {
    TrainConfig {
        dataset: DatasetName::Xor,
        n_samples: 4,
        noise: 0.0,
        hidden: vec![8],
        epochs: 5000,
        learning_rate: 0.5,
        batch: Batch::Full,
        loss: Loss::Mse,
        seed: 42,
        activation,
    }
}

/// Worst relative gap between backprop and central differences of the batch
/// loss, over every parameter of a small model.
fn end_to_end_gradient_error(spec: &ActivationSpec) -> Result<f64, String> {
    let data = generate_dataset(DatasetName::TwoMoons, 8, 0.1, 13).map_err(|e| e.to_string())?;
    let model = MLPModel::new(&[2, 3, 2], spec, 13).map_err(|e| e.to_string())?;
    let loss =
        |m: &MLPModel| batch_loss_and_grads(m, &data.inputs, &data.targets, Loss::CrossEntropy);
    let (_, grads, _) = loss(&model).map_err(|e| e.to_string())?;
    let analytic: Vec<f64> = grads.iter().collect();
    let cfg = DiffConfig::default();
    let mut worst = 0.0f64;
    for (i, &g) in analytic.iter().enumerate() {
        let base = model.parameters().nth(i).expect("index in range");
        let probe = |p: f64| {
            let mut m = model.clone();
            *m.parameter_mut(i).expect("index in range") = p;
            loss(&m).map_or(f64::NAN, |r| r.0)
        };
        let numeric = central_diff(probe, base, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(cfg.rel_err(g, numeric));
    }
    Ok(worst)
}

fn desk_scale_training() -> Outcome {
    let t0 = Instant::now();
    let mut detail = Vec::new();
    let mut epoch_ms = Vec::new();
    for spec in [aptx(), mish(), ActivationSpec::swish(1.0)] {
        let name = spec.kind.name();
        let x = train(&xor(spec)).map_err(|e| format!("{name} xor: {e}"))?;
        let xe = x
            .epochs_to_loss(0.05)
            .ok_or_else(|| format!("{name} xor: best loss {}", x.best_loss()))?;
        let m = train(&moons(spec)).map_err(|e| format!("{name} two_moons: {e}"))?;
        let me = m
            .epochs_to_accuracy(0.95)
            .ok_or_else(|| format!("{name} two_moons: best accuracy {:?}", m.best_accuracy()))?;
        epoch_ms.push(m.median_epoch_ms());
        let grad_err = end_to_end_gradient_error(&spec)?;
        ensure(grad_err <= 1e-5, || {
            format!("{name}: end-to-end gradient error {grad_err:e}")
        })?;
        detail.push(format!("{name} xor@{xe} moons@{me} grad {grad_err:.0e}"));
    }
    ensure(epoch_ms[0] <= epoch_ms[1], || {
        format!(
            "median epoch: aptx {:.4} ms > mish {:.4} ms",
            epoch_ms[0], epoch_ms[1]
        )
    })?;
    within(t0, Duration::from_secs(120))?;
    Ok(format!(
        "{}; epoch ms aptx {:.3} <= mish {:.3}",
        detail.join(", "),
        epoch_ms[0],
        epoch_ms[1]
    ))
}

fn aptx_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aptx"))
}

fn csv_value(dir: &Path, fig: &str, column: &str, x: f64) -> Result<f64, String> {
    let path = dir.join(format!("{fig}.csv"));
    let mut reader =
        csv::Reader::from_path(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| format!("{fig} has no column {column}"))?;
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let rx: f64 = record[0].parse().map_err(|e| format!("{e}"))?;
        if (rx - x).abs() < 1e-9 {
            return record[col].parse().map_err(|e| format!("{e}"));
        }
    }
    Err(format!("{fig} has no row at x = {x}"))
}

fn figure_reproduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = aptx_bin()
        .args(["figures", "--out-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        String::from_utf8_lossy(&status.stderr).into_owned()
    })?;
    for i in 1..=6 {
        ensure(dir.path().join(format!("fig{i}.csv")).exists(), || {
            format!("fig{i}.csv missing")
        })?;
        ensure(
            dir.path().join(format!("fig{i}.manifest.json")).exists(),
            || format!("fig{i}.manifest.json missing"),
        )?;
    }
    let elu = 2.0 * ((-2.0f64).exp() - 1.0);
    let spots = [
        ("fig1", "aptx", 0.0, 0.0),
        ("fig2", "aptx_grad", 0.0, 0.5),
        ("fig3", "tanh_grad", 0.0, 1.0),
        ("fig3", "sigmoid_grad", 0.0, 0.25),
        ("fig4", "relu", -2.0, 0.0),
        ("fig4", "leaky_relu", -2.0, -0.1),
        ("fig4", "elu", -2.0, elu),
        ("fig5", "mish_grad", 0.0, 0.6),
        ("fig5", "swish_grad", 0.0, 0.5),
        ("fig6", "mish_grad", 0.0, 0.6),
        ("fig6", "aptx_grad", 0.0, 0.5),
    ];
    for (fig, col, x, want) in spots {
        let got = csv_value(dir.path(), fig, col, x)?;
        ensure((got - want).abs() <= 1e-6, || {
            format!("{fig} {col} at {x}: {got} != {want}")
        })?;
    }
    Ok(format!(
        "6 CSVs with manifests, {} spot values within 1e-6",
        spots.len()
    ))
}

fn mutation_sensitivity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let clean = aptx_bin()
        .args(["verify", "--out-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(clean.status.code() == Some(0), || {
        format!(
            "clean verify exited {:?}: {}",
            clean.status.code(),
            String::from_utf8_lossy(&clean.stdout)
        )
    })?;
    for kind in Kind::ALL {
        let out = aptx_bin()
            .args(["verify", "--mutate", kind.name(), "--out-dir"])
            .arg(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        let stderr = String::from_utf8_lossy(&out.stderr);
        let check = format!("gradient/{kind}");
        ensure(out.status.code() == Some(2), || {
            format!("--mutate {kind} exited {:?}", out.status.code())
        })?;
        ensure(
            stdout.contains(&format!("FAIL {check} ")) && stderr.contains(&check),
            || format!("--mutate {kind}: {check} not named"),
        )?;
    }
    Ok("clean run exits 0; each of 8 mutated derivatives exits 2 naming gradient/<kind>".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("swish generation identity", swish_identity),
        ("gradient fidelity", gradient_fidelity),
        ("mish closed-form derivative", mish_closed_form),
        ("domain-split dominance", domain_split),
        ("bounded below, unbounded above", bounded_below),
        ("cost dominance", cost_dominance),
        ("measured throughput direction", measured_direction),
        ("desk-scale training", desk_scale_training),
        ("figure reproduction", figure_reproduction),
        ("mutation sensitivity", mutation_sensitivity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
