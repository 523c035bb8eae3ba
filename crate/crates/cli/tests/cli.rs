use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aptx_core::{eval, ActivationSpec, Kind};
use serde_json::Value;

fn aptx(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aptx"))
        .env_remove("APTX_OUT_DIR")
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// `x,value,grad` rows printed by `eval`.
fn eval_rows(o: &Output) -> Vec<[f64; 3]> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn eval_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = aptx(
        dir.path(),
        &[
            "eval", "--kind", "aptx", "--alpha", "1", "--beta", "1", "--gamma", "0.5", "--x", "0",
        ],
    );
    assert!(o.status.success());
    assert_eq!(eval_rows(&o), [[0.0, 0.0, 0.5]]);

    let o = aptx(dir.path(), &["eval", "--kind", "mish", "--x", "0"]);
    let row = eval_rows(&o)[0];
    assert_eq!(row[1], 0.0);
    assert!((row[2] - 0.6).abs() < 1e-15);

    let o = aptx(dir.path(), &["eval", "--kind", "relu", "--x", "-3"]);
    assert_eq!(eval_rows(&o), [[-3.0, 0.0, 0.0]]);
    // eval writes nothing
    assert_eq!(fs::read_dir(dir.path()).map(|d| d.count()).unwrap_or(0), 0);
}

#[test]
fn eval_prints_17_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let o = aptx(
        dir.path(),
        &["eval", "--kind", "mish", "--x", "1", "-1.5", "2.25"],
    );
    let rows = eval_rows(&o);
    assert_eq!(rows.len(), 3);
    let spec = ActivationSpec::new(Kind::Mish);
    for [x, v, _] in rows {
        assert_eq!(v.to_bits(), eval(&spec, x).unwrap().to_bits());
    }
    let line = stdout(&o).lines().nth(2).unwrap().to_owned();
    assert_eq!(
        line,
        "1.0000000000000000e0,8.6509838826731034e-1,1.0490362200997922e0"
    );
}

#[test]
fn eval_json_and_spec_strings() {
    let dir = tempfile::tempdir().unwrap();
    let o = aptx(
        dir.path(),
        &["eval", "--kind", "swish:rho=2", "--x", "1", "--json"],
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["spec"]["swish_rho"], 2.0);
    let want = 1.0 / (1.0 + (-2.0f64).exp());
    assert!((v["points"][0]["value"].as_f64().unwrap() - want).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["eval", "--kind", "gelu", "--x", "0"][..],
        &["eval", "--kind", "relu"],
        &["eval", "--kind", "relu", "--x", "abc"],
        &["eval", "--kind", "aptx", "--beta", "0", "--x", "1"],
        &["eval", "--kind", "relu", "--gamma", "2", "--x", "1"],
        &["eval", "--kind", "relu", "--x", "inf"],
        &["frobnicate"],
        &["figures", "--only", "fig9"],
        &["verify", "--filter", "no-such-check"],
        &[
            "compare", "--a", "mish", "--b", "mish", "--lo", "1", "--hi", "-1",
        ],
        &["bench", "--len", "10"],
        &["train", "--epochs", "0"],
        &[
            "train",
            "--dataset",
            "sine",
            "--loss",
            "cross_entropy",
            "--epochs",
            "1",
        ],
    ] {
        let o = aptx(dir.path(), args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["verify", "--help"]] {
        assert_eq!(aptx(dir.path(), args).status.code(), Some(0));
    }
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = aptx(&blocker, &["figures"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_aptx"))
        .env("APTX_OUT_DIR", &target)
        .args(["cost", "--kind", "aptx"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("cost.json").exists());
    assert!(target.join("cost.manifest.json").exists());
}

#[test]
fn figures_round_trip_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert!(aptx(dir.path(), &["figures"]).status.success());
    let headers = [
        ("fig1", vec!["x", "aptx"]),
        ("fig2", vec!["x", "aptx_grad"]),
        ("fig3", vec!["x", "tanh_grad", "sigmoid_grad"]),
        ("fig4", vec!["x", "relu", "leaky_relu", "elu"]),
        ("fig5", vec!["x", "swish_grad", "mish_grad"]),
        ("fig6", vec!["x", "mish_grad", "aptx_grad"]),
    ];
    for (fig, cols) in &headers {
        let mut r = csv::Reader::from_path(dir.path().join(format!("{fig}.csv"))).unwrap();
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), *cols);
        let manifest = read_json(&dir.path().join(format!("{fig}.manifest.json")));
        assert_eq!(manifest["command"], "figures");
        assert_eq!(manifest["outputs"].as_array().unwrap().len(), 6);
        let figs = manifest["params"]["figures"].as_array().unwrap();
        assert!(figs.iter().any(|f| f["id"] == *fig && f["step"] == 0.01));
    }

    // re-evaluate fig4 at the printed xs
    let specs = [
        ActivationSpec::new(Kind::Relu),
        ActivationSpec::leaky_relu(0.05),
        ActivationSpec::elu(2.0),
    ];
    let mut r = csv::Reader::from_path(dir.path().join("fig4.csv")).unwrap();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let x: f64 = rec[0].parse().unwrap();
        for (i, spec) in specs.iter().enumerate() {
            let v: f64 = rec[i + 1].parse().unwrap();
            assert!((v - eval(spec, x).unwrap()).abs() <= 1e-15, "{spec} at {x}");
        }
        rows += 1;
    }
    assert_eq!(rows, 1001);
}

#[test]
fn rerunning_a_manifest_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &[&str]); 4] = [
        (
            &["figures", "--only", "fig2", "--step", "0.05"],
            &["fig2.csv"],
        ),
        (
            &["compare", "--a", "aptx_piecewise", "--b", "mish"],
            &["compare.json"],
        ),
        (&["min", "--kind", "mish"], &["min.json"]),
        (&["verify", "--filter", "domain-split"], &["verify.json"]),
    ];
    for (args, files) in cases {
        assert!(aptx(first.path(), args).status.success(), "{args:?}");
        let stem = Path::new(files[0]).file_stem().unwrap().to_str().unwrap();
        let manifest = read_json(&first.path().join(format!("{stem}.manifest.json")));
        let argv: Vec<String> = manifest["argv"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a.as_str().unwrap().to_owned())
            .collect();
        // replay the recorded argv with only the output directory changed
        let mut replay = Vec::new();
        let mut it = argv.iter().skip(1);
        while let Some(a) = it.next() {
            if a == "--out-dir" {
                it.next();
            } else {
                replay.push(a.as_str());
            }
        }
        assert!(aptx(second.path(), &replay).status.success());
        for f in files {
            assert_eq!(
                fs::read(first.path().join(f)).unwrap(),
                fs::read(second.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }
}

#[test]
fn verify_clean_filter_and_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let o = aptx(dir.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = read_json(&dir.path().join("verify.json"));
    assert_eq!(report["passed"], true);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["measured"].is_number()));

    let o = aptx(dir.path(), &["verify", "--filter", "swish-identity"]);
    let out = stdout(&o);
    let names: Vec<&str> = out
        .lines()
        .filter_map(|l| l.strip_prefix("PASS "))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(names.len(), 4);
    assert!(names.iter().all(|n| n.starts_with("swish-identity/")));

    let o = aptx(dir.path(), &["verify", "--mutate", "aptx"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL gradient/aptx "));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gradient/aptx"));
    let report = read_json(&dir.path().join("verify.json"));
    assert_eq!(report["passed"], false);
}

#[test]
fn compare_and_min_examples() {
    let dir = tempfile::tempdir().unwrap();
    assert!(aptx(dir.path(), &["compare", "--a", "mish", "--b", "mish"])
        .status
        .success());
    let r = read_json(&dir.path().join("compare.json"));
    assert_eq!(r["max_abs_err"], 0.0);
    assert_eq!(r["rmse"], 0.0);
    assert_eq!(r["n_samples"], 20001);

    let o = aptx(
        dir.path(),
        &[
            "compare",
            "--a",
            "aptx:alpha=1,beta=0.5,gamma=0.5",
            "--b",
            "swish",
            "--lo",
            "-20",
            "--hi",
            "20",
            "--grads",
        ],
    );
    assert!(o.status.success());
    assert!(
        read_json(&dir.path().join("compare.json"))["max_abs_err"]
            .as_f64()
            .unwrap()
            <= 1e-12
    );

    let o = aptx(
        dir.path(),
        &[
            "min", "--kind", "aptx", "--alpha", "1", "--beta", "1", "--gamma", "0.5", "--lo",
            "-10", "--hi", "0",
        ],
    );
    assert!(o.status.success());
    let m = read_json(&dir.path().join("min.json"));
    assert!((m["result"]["argmin"].as_f64().unwrap() + 0.64).abs() < 0.01);
    assert!((m["result"]["min_value"].as_f64().unwrap() + 0.139).abs() < 1e-3);
}

#[test]
fn cost_reports_transcendentals() {
    let dir = tempfile::tempdir().unwrap();
    assert!(aptx(dir.path(), &["cost"]).status.success());
    let profiles = read_json(&dir.path().join("cost.json"));
    let profiles = profiles.as_array().unwrap();
    assert_eq!(profiles.len(), 8);
    let by_kind = |k: &str| profiles.iter().find(|p| p["spec"]["kind"] == k).unwrap();
    assert_eq!(by_kind("aptx")["forward"]["tanh"], 1);
    assert_eq!(by_kind("mish")["forward"]["log"], 1);
    assert_eq!(by_kind("relu")["derivative"]["exp"], 0);
}

#[test]
fn bench_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = aptx(
        dir.path(),
        &[
            "bench",
            "--kind",
            "aptx",
            "--kind",
            "relu",
            "--len",
            "20000",
            "--mode",
            "all",
            "--precision",
            "f64",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = read_json(&dir.path().join("bench.json"));
    assert_eq!(reports.as_array().unwrap().len(), 6);
    let mut r = csv::Reader::from_path(dir.path().join("bench.csv")).unwrap();
    let rows: Vec<_> = r.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[0][0], "aptx:alpha=1,beta=1,gamma=0.5");
    assert!(rows.iter().all(|r| r[6].parse::<f64>().unwrap() > 0.0));
    assert!(dir.path().join("bench.manifest.json").exists());
}

#[test]
fn train_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "train",
        "--dataset",
        "xor",
        "--activation",
        "aptx",
        "--seed",
        "42",
        "--epochs",
        "300",
    ];
    assert!(aptx(a.path(), &args).status.success());
    assert!(aptx(b.path(), &args).status.success());
    let (ra, rb) = (
        read_json(&a.path().join("train.json")),
        read_json(&b.path().join("train.json")),
    );
    assert_eq!(ra["checksum"], rb["checksum"]);
    assert_eq!(ra["layer_sizes"], serde_json::json!([2, 8, 1]));
    let losses = |r: &Value| -> Vec<Value> {
        r["epochs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["loss"].clone())
            .collect()
    };
    assert_eq!(losses(&ra), losses(&rb));

    let mut r = csv::Reader::from_path(a.path().join("train_epochs.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["epoch", "loss", "accuracy", "ms"]
    );
    assert_eq!(r.records().count(), 300);
    assert!(a.path().join("train_epochs.manifest.json").exists());
}

#[test]
fn train_two_moons_defaults_to_cross_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let o = aptx(
        dir.path(),
        &[
            "train",
            "--dataset",
            "two_moons",
            "--hidden",
            "16",
            "--epochs",
            "400",
            "--activation",
            "mish",
            "--seed",
            "7",
        ],
    );
    assert!(o.status.success());
    let r = read_json(&dir.path().join("train.json"));
    assert_eq!(r["config"]["loss"], "cross_entropy");
    assert_eq!(r["layer_sizes"], serde_json::json!([2, 16, 2]));
    let last = r["epochs"].as_array().unwrap().last().unwrap().clone();
    assert!(last["accuracy"].as_f64().unwrap() > 0.9);
}
