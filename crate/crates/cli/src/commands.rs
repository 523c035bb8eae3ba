use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::{Context, Result};
use aptx_core::activation::{Activation, PiecewiseMishApproximant};
use aptx_core::analysis::{compare, compare_grads, Grid};
use aptx_core::calculus::find_min;
use aptx_core::figures::{figure_specs, fmt_real};
use aptx_core::nn::{train, DatasetName, Loss, TrainConfig};
use aptx_core::perf::{bench_suite, count_ops, render_table, BenchConfig, Pass};
use aptx_core::verify::{mutated_registry, run_verify};
use aptx_core::{eval_grad, ActivationSpec, Kind, Registry};
use serde_json::json;

use crate::args::{
    BenchArgs, Cli, Command, CompareArgs, CostArgs, EvalArgs, FiguresArgs, MinArgs, TrainArgs,
    VerifyArgs,
};
use crate::manifest::Outputs;
use crate::{UsageError, VerifyFailed};

pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    let out = |name: &'static str| Outputs::new(&cli.out_dir, name, argv);
    match &cli.command {
        Command::Eval(args) => eval(args),
        Command::Figures(args) => figures(args, out("figures")?),
        Command::Verify(args) => verify(args, out("verify")?),
        Command::Compare(args) => compare_cmd(args, out("compare")?),
        Command::Min(args) => min(args, out("min")?),
        Command::Cost(args) => cost(args, out("cost")?),
        Command::Bench(args) => bench(args, out("bench")?),
        Command::Train(args) => train_cmd(args, out("train")?),
    }
}

fn parse_specs(texts: &[String]) -> Result<Vec<ActivationSpec>> {
    if texts.is_empty() {
        return Ok(Kind::ALL.iter().map(|&k| ActivationSpec::new(k)).collect());
    }
    texts
        .iter()
        .map(|t| {
            t.parse()
                .with_context(|| format!("parsing activation `{t}`"))
        })
        .collect()
}

/// A spec string, or `aptx_piecewise` for the split MISH approximant.
fn resolve_named(text: &str) -> Result<(Arc<dyn Activation>, Option<ActivationSpec>)> {
    if matches!(text, "aptx_piecewise" | "piecewise") {
        return Ok((Arc::new(PiecewiseMishApproximant), None));
    }
    let spec: ActivationSpec = text
        .parse()
        .with_context(|| format!("parsing activation `{text}`"))?;
    Ok((Registry::builtin().resolve(&spec)?, Some(spec)))
}

fn eval(args: &EvalArgs) -> Result<()> {
    let spec = args.spec.spec()?;
    let rows = args
        .x
        .iter()
        .map(|&x| eval_grad(&spec, x).map(|vg| (x, vg)))
        .collect::<aptx_core::Result<Vec<_>>>()?;
    if args.json {
        let rows: Vec<_> = rows
            .iter()
            .map(|(x, vg)| json!({ "x": x, "value": vg.value, "grad": vg.grad }))
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "spec": spec, "points": rows }))?
        );
    } else {
        println!("# {spec}");
        println!("x,value,grad");
        for (x, vg) in rows {
            println!(
                "{},{},{}",
                fmt_real(x),
                fmt_real(vg.value),
                fmt_real(vg.grad)
            );
        }
    }
    Ok(())
}

fn figures(args: &FiguresArgs, mut out: Outputs) -> Result<()> {
    let known: Vec<String> = figure_specs().into_iter().map(|f| f.id).collect();
    if let Some(bad) = args.only.iter().find(|id| !known.contains(id)) {
        return Err(UsageError(format!(
            "unknown figure `{bad}`; expected one of {}",
            known.join(", ")
        ))
        .into());
    }
    let selected: Vec<_> = figure_specs()
        .into_iter()
        .filter(|f| args.only.is_empty() || args.only.contains(&f.id))
        .map(|f| {
            let (lo, hi) = (f.lo, f.hi);
            f.with_grid(lo, hi, args.step)
        })
        .collect();
    for fig in &selected {
        let table = fig.render(Registry::builtin())?;
        let path = out.write(&format!("{}.csv", fig.id), table.to_csv_string())?;
        println!(
            "{}: {} rows on [{}, {}] step {} -> {}",
            fig.id,
            table.xs.len(),
            fig.lo,
            fig.hi,
            fig.step,
            path.display()
        );
    }
    out.finish(&json!({ "args": args, "figures": selected }))?;
    Ok(())
}

fn verify(args: &VerifyArgs, mut out: Outputs) -> Result<()> {
    let registry = match args.mutate {
        Some(kind) => mutated_registry(kind, args.offset),
        None => Registry::with_builtins(),
    };
    let report = run_verify(&registry, args.filter.as_deref());
    if report.checks.is_empty() {
        return Err(UsageError(format!(
            "no checks match filter `{}`",
            args.filter.as_deref().unwrap_or_default()
        ))
        .into());
    }
    for check in &report.checks {
        println!("{check}");
    }
    let path = out.write_json("verify.json", &report)?;
    out.finish(&json!({ "args": args }))?;
    let failed: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
    println!(
        "{} of {} checks passed; report in {}",
        report.checks.len() - failed.len(),
        report.checks.len(),
        path.display()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(VerifyFailed(failed).into())
    }
}

fn compare_cmd(args: &CompareArgs, mut out: Outputs) -> Result<()> {
    let (a, a_spec) = resolve_named(&args.a)?;
    let (b, b_spec) = resolve_named(&args.b)?;
    let grid = Grid::new(args.lo, args.hi, args.step)?;
    let report = if args.grads {
        compare_grads(a.as_ref(), b.as_ref(), &grid)
    } else {
        compare(a.as_ref(), b.as_ref(), &grid)
    };
    let what = if args.grads { "derivatives" } else { "values" };
    println!(
        "{} vs {} ({what}) on [{}, {}] step {}",
        report.a, report.b, args.lo, args.hi, args.step
    );
    println!(
        "  all:      n={} max_abs_err={} at x={} rmse={}",
        report.n_samples,
        fmt_real(report.max_abs_err),
        report.arg_max_err,
        fmt_real(report.rmse)
    );
    for (label, part) in [("x < 0", &report.negative), ("x >= 0", &report.positive)] {
        if let Some(m) = part {
            println!(
                "  {label:<8} n={} max_abs_err={} at x={} rmse={}",
                m.n_samples,
                fmt_real(m.max_abs_err),
                m.arg_max_err,
                fmt_real(m.rmse)
            );
        }
    }
    out.write_json("compare.json", &report)?;
    out.finish(&json!({ "args": args, "a": a_spec, "b": b_spec }))?;
    Ok(())
}

fn min(args: &MinArgs, mut out: Outputs) -> Result<()> {
    let spec = args.spec.spec()?;
    let act = Registry::builtin().resolve(&spec)?;
    let result = find_min(|x| act.value(x), args.lo, args.hi, args.tol)?;
    println!("{spec} on [{}, {}]", args.lo, args.hi);
    println!("argmin = {}", fmt_real(result.argmin));
    println!("min    = {}", fmt_real(result.min_value));
    out.write_json("min.json", &json!({ "spec": spec, "result": result }))?;
    out.finish(&json!({ "args": args, "spec": spec }))?;
    Ok(())
}

fn cost(args: &CostArgs, mut out: Outputs) -> Result<()> {
    let specs = parse_specs(&args.kind)?;
    let profiles: Vec<_> = specs.iter().map(count_ops).collect();
    println!(
        "{:<34} {:<10} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>7}",
        "kind", "pass", "tanh", "exp", "log", "div", "mul", "add", "cmp", "transc"
    );
    for p in &profiles {
        for (pass, label) in [(Pass::Forward, "forward"), (Pass::Derivative, "derivative")] {
            let c = p.pass(pass);
            println!(
                "{:<34} {:<10} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>7}",
                p.spec.to_string(),
                label,
                c.tanh,
                c.exp,
                c.log,
                c.divisions,
                c.multiplications,
                c.additions,
                c.comparisons,
                c.transcendental()
            );
        }
    }
    out.write_json("cost.json", &profiles)?;
    out.finish(&json!({ "args": args, "specs": specs }))?;
    Ok(())
}

fn bench(args: &BenchArgs, mut out: Outputs) -> Result<()> {
    let specs = parse_specs(&args.kind)?;
    let mut reports = Vec::new();
    let mut configs = Vec::new();
    for mode in args.mode.modes() {
        let cfg = BenchConfig {
            mode,
            array_len: args.len,
            reps: args.reps,
            warmup: args.warmup,
            precision: args.precision.into(),
            seed: args.seed,
            threads: args.threads,
        };
        reports.extend(bench_suite(Registry::builtin(), &specs, &cfg)?);
        configs.push(cfg);
    }
    print!("{}", render_table(&reports));
    let mut csv = String::from(
        "kind,mode,precision,array_len,reps,threads,elements_per_second,median_seconds,relative_to_mish,transcendental_count,checksum\n",
    );
    for r in &reports {
        let _ = writeln!(
            csv,
            "\"{}\",{},{},{},{},{},{},{},{},{},{:016x}",
            r.spec,
            r.mode.name(),
            serde_json::to_value(r.precision)?
                .as_str()
                .unwrap_or_default(),
            r.array_len,
            r.reps,
            r.threads,
            fmt_real(r.elements_per_second),
            fmt_real(r.median_seconds),
            fmt_real(r.relative_to_mish),
            r.transcendental_count,
            r.checksum
        );
    }
    out.write_json("bench.json", &reports)?;
    out.write("bench.csv", csv)?;
    out.finish(&json!({ "args": args, "configs": configs }))?;
    Ok(())
}

fn default_loss(dataset: DatasetName) -> Loss {
    match dataset {
        DatasetName::TwoMoons | DatasetName::Spiral => Loss::CrossEntropy,
        DatasetName::Xor | DatasetName::SineRegression => Loss::Mse,
    }
}

fn train_cmd(args: &TrainArgs, mut out: Outputs) -> Result<()> {
    let activation: ActivationSpec = args
        .activation
        .parse()
        .with_context(|| format!("parsing activation `{}`", args.activation))?;
    let config = TrainConfig {
        dataset: args.dataset,
        n_samples: args.n_samples,
        noise: args.noise,
        hidden: args.hidden.clone(),
        epochs: args.epochs,
        learning_rate: args.lr,
        batch: args.batch,
        loss: args.loss.unwrap_or_else(|| default_loss(args.dataset)),
        seed: args.seed,
        activation,
    };
    let report = train(&config)?;
    let every = (config.epochs / 10).max(1);
    for e in report
        .epochs
        .iter()
        .filter(|e| e.epoch == 1 || e.epoch % every == 0)
    {
        match e.accuracy {
            Some(acc) => println!(
                "epoch {:>6}  loss {:.6e}  accuracy {:.4}",
                e.epoch, e.loss, acc
            ),
            None => println!("epoch {:>6}  loss {:.6e}", e.epoch, e.loss),
        }
    }
    println!(
        "layers {:?}; final loss {:.6e}; median epoch {:.4} ms; checksum {:016x}",
        report.layer_sizes,
        report.final_loss(),
        report.median_epoch_ms(),
        report.checksum
    );
    let mut csv = String::from("epoch,loss,accuracy,ms\n");
    for e in &report.epochs {
        let acc = e.accuracy.map(fmt_real).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            e.epoch,
            fmt_real(e.loss),
            acc,
            fmt_real(e.ms)
        );
    }
    out.write_json("train.json", &report)?;
    out.write("train_epochs.csv", csv)?;
    out.finish(&json!({ "args": args, "config": config }))?;
    Ok(())
}
