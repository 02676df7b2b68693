use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const TINY: &str = r#"{"n_a":2,"n_b":3,"n_iterations":160,"n_warmup":80,"n_chains":2,"seed":11}"#;

fn barx(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_barx"));
    cmd.current_dir(dir).args(args);
    match threads {
        Some(t) => cmd.env("BARX_THREADS", t),
        None => cmd.env_remove("BARX_THREADS"),
    };
    cmd.output().expect("spawn barx")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.json"), TINY).unwrap();
    ok(&barx(
        dir.path(),
        &[
            "simulate",
            "--experiment",
            "1",
            "--T",
            "240",
            "--seed",
            "5",
            "--out",
            "d.csv",
        ],
        None,
    ));
    dir
}

#[test]
fn simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for out in ["a.csv", "b.csv"] {
        ok(&barx(
            p,
            &[
                "simulate",
                "--experiment",
                "2",
                "--t",
                "300",
                "--seed",
                "9",
                "--out",
                out,
            ],
            None,
        ));
    }
    ok(&barx(
        p,
        &[
            "simulate",
            "--experiment",
            "2",
            "--T",
            "300",
            "--seed",
            "10",
            "--out",
            "c.csv",
        ],
        None,
    ));
    let a = fs::read(p.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(p.join("b.csv")).unwrap());
    assert_ne!(a, fs::read(p.join("c.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 301);

    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(p.join("a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["t"], 300);
    assert!(meta["rng"].as_str().unwrap().contains("ChaCha20"));
}

#[test]
fn bad_input_exits_with_2() {
    let dir = setup();
    let p = dir.path();
    fs::write(p.join("bad.json"), r#"{"n_a":2,"bogus":true}"#).unwrap();
    let out = barx(
        p,
        &[
            "fit", "--data", "d.csv", "--config", "bad.json", "--out", "r",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    fs::write(p.join("nan.csv"), "y,u\n1.0,1\n2.0,x\n").unwrap();
    let out = barx(p, &["fit", "--data", "nan.csv", "--out", "r"], None);
    assert_eq!(out.status.code(), Some(2));

    let out = barx(p, &["fit", "--data", "missing.csv", "--out", "r"], None);
    assert_eq!(out.status.code(), Some(2));

    // n_b > 0 needs an input column
    let y_only: String = std::iter::once("y".to_string())
        .chain((0..100).map(|i| format!("{}", (i as f64 * 0.3).sin())))
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(p.join("y.csv"), y_only).unwrap();
    let out = barx(
        p,
        &[
            "fit",
            "--data",
            "y.csv",
            "--config",
            "tiny.json",
            "--out",
            "r",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!p.join("r").join("summary.json").exists());
}

#[test]
fn sampler_abort_exits_with_3() {
    let dir = setup();
    let p = dir.path();
    let mut csv = String::from("y,u\n");
    for i in 0..200 {
        let sign = if i % 3 == 0 { -1.0 } else { 1.0 };
        csv.push_str(&format!("{:e},{}\n", sign * 1e200 * (1.0 + i as f64), sign));
    }
    fs::write(p.join("huge.csv"), csv).unwrap();
    let out = barx(
        p,
        &[
            "fit",
            "--data",
            "huge.csv",
            "--config",
            "tiny.json",
            "--out",
            "r",
        ],
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_pipeline() {
    let dir = setup();
    let p = dir.path();
    ok(&barx(
        p,
        &[
            "fit",
            "--data",
            "d.csv",
            "--config",
            "tiny.json",
            "--out",
            "run",
        ],
        None,
    ));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(p.join("run/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["data"]["boundary"], 160);
    assert_eq!(summary["coefficients"].as_array().unwrap().len(), 5);
    let ndjson = fs::read_to_string(p.join("run/draws.ndjson")).unwrap();
    assert_eq!(ndjson.lines().count(), 2 * 80);

    ok(&barx(
        p,
        &[
            "predict",
            "--run",
            "run",
            "--data",
            "d.csv",
            "--out",
            "pred",
            "--grid-points",
            "801",
        ],
        None,
    ));
    let pred = fs::read_to_string(p.join("pred/predictive.csv")).unwrap();
    let mut lines = pred.lines();
    assert_eq!(lines.next(), Some("t,mean,hpd"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 80);
    assert!(rows[0].starts_with("160,"));
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        let mean: f64 = cols[1].parse().unwrap();
        let hpd: Vec<f64> = cols[2]
            .split([':', ';'])
            .map(|v| v.parse().unwrap())
            .collect();
        assert!(hpd.len() >= 2 && hpd.len().is_multiple_of(2));
        assert!(hpd[0] < mean && mean < hpd[hpd.len() - 1], "{row}");
    }
    let noise = fs::read_to_string(p.join("pred/noise_density.csv")).unwrap();
    assert_eq!(noise.lines().count(), 802);

    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(p.join("pred/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["validation_points"], 80);
    let mf = metrics["mf_barx"].as_f64().unwrap();
    assert!(mf > 80.0 && mf <= 100.0, "MF {mf}");
    assert_eq!(metrics["mf_barx"], summary["model_fit"]["barx"]);

    let out = barx(p, &["report", "--run", "run", "--pred", "pred"], None);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    for key in [
        "MF (BARX)",
        "MF (least squares)",
        "R-hat max",
        "ESS min",
        "divergences",
        "a1",
        "b3",
    ] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn serial_and_parallel_runs_match() {
    let dir = setup();
    let p = dir.path();
    ok(&barx(
        p,
        &[
            "fit",
            "--data",
            "d.csv",
            "--config",
            "tiny.json",
            "--out",
            "serial",
        ],
        Some("1"),
    ));
    ok(&barx(
        p,
        &[
            "fit",
            "--data",
            "d.csv",
            "--config",
            "tiny.json",
            "--out",
            "par",
        ],
        None,
    ));
    for file in ["draws.ndjson", "summary.json"] {
        let a = fs::read(p.join("serial").join(file)).unwrap();
        let b = fs::read(p.join("par").join(file)).unwrap();
        assert!(a == b, "{file} differs between serial and parallel runs");
    }
}
