use std::path::Path;
use std::process::{Command, Output};

use sieve_roc::data::{self, CsvOptions};
use sieve_roc::pipeline::{self, SieveSettings};
use sieve_roc::{estimators, SieveFit};
use tempfile::TempDir;

fn sieve_roc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sieve-roc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sieve_roc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn simulate(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let out = path(dir, name);
    let mut args = vec!["simulate", "--out", &out];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn auc_rows(stdout: &str) -> Vec<(f64, f64)> {
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("t,auc"));
    lines
        .map(|l| {
            let (t, a) = l.split_once(',').unwrap();
            (t.parse().unwrap(), a.parse().unwrap())
        })
        .collect()
}

#[test]
fn fit_then_auc_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let data = simulate(
        &dir,
        "d.csv",
        &["--n", "150", "--tau", "0.6", "--seed", "3"],
    );
    let model = path(&dir, "m.json");
    ok(&["fit", "--data", &data, "--out", &model]);
    let rows = auc_rows(&ok(&["auc", "--model", &model, "--t", "12,28"]));

    let dataset = data::read_csv(&data, &CsvOptions::default())
        .unwrap()
        .dataset;
    let fit = pipeline::fit_dataset(&dataset, &SieveSettings::default(), None).unwrap();
    let saved = SieveFit::<f64>::from_json(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved, fit);
    assert_eq!(rows.len(), 2);
    for (t, a) in rows {
        assert_eq!(a, estimators::auc(&fit, t, 1001).unwrap());
    }
}

#[test]
fn independent_marker_gives_chance_auc() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", &["--n", "500", "--tau", "0", "--seed", "8"]);
    let model = path(&dir, "m.json");
    ok(&["fit", "--data", &data, "--out", &model]);
    let (_, auc) = auc_rows(&ok(&["auc", "--model", &model, "--t", "12"]))[0];
    assert!((0.45..=0.55).contains(&auc), "{auc}");
}

#[test]
fn roc_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", &["--n", "120", "--seed", "5"]);
    let model = path(&dir, "m.json");
    ok(&["fit", "--data", &data, "--out", &model]);
    let (csv, svg_a, svg_b) = (
        path(&dir, "r.csv"),
        path(&dir, "a.svg"),
        path(&dir, "b.svg"),
    );
    ok(&[
        "roc", "--model", &model, "--t", "12", "--grid", "201", "--out", &csv, "--svg", &svg_a,
    ]);
    ok(&[
        "roc", "--model", &model, "--t", "12", "--grid", "201", "--svg", &svg_b,
    ]);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# t=12 auc="));
    assert_eq!(lines.next(), Some("p,roc"));
    let points: Vec<(f64, f64)> = lines
        .map(|l| {
            let (p, r) = l.split_once(',').unwrap();
            (p.parse().unwrap(), r.parse().unwrap())
        })
        .collect();
    assert_eq!(points.len(), 201);
    assert_eq!(points[0], (0.0, 0.0));
    assert_eq!(points[200], (1.0, 1.0));
    assert!(points.windows(2).all(|w| w[1].1 >= w[0].1));

    let a = std::fs::read(&svg_a).unwrap();
    assert_eq!(a, std::fs::read(&svg_b).unwrap());
    assert!(String::from_utf8(a).unwrap().contains("stroke-dasharray"));
}

#[test]
fn ci_rows_bracket_the_estimate() {
    let dir = TempDir::new().unwrap();
    let data = simulate(
        &dir,
        "d.csv",
        &["--n", "100", "--tau", "0.6", "--seed", "2"],
    );
    let out = ok(&[
        "ci", "--data", &data, "--t", "12,28", "--B", "100", "--seed", "4",
    ]);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("t,estimate,lower,upper,level,B,z0,a,failures")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row[2] <= row[1] && row[1] <= row[3]);
        assert_eq!((row[4], row[5]), (0.95, 100.0));
    }
}

#[test]
fn config_file_and_flags_agree() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("model.toml");
    std::fs::write(&config, "tau = 0.6\nrho = 0.3\n").unwrap();
    let config = config.to_string_lossy().into_owned();
    assert_eq!(
        ok(&["oracle", "--config", &config, "--t", "12,28"]),
        ok(&["oracle", "--tau", "0.6", "--rho", "0.3", "--t", "12,28"])
    );
    let a = simulate(&dir, "a.csv", &["--config", &config, "--n", "50"]);
    let b = simulate(
        &dir,
        "b.csv",
        &["--tau", "0.6", "--rho", "0.3", "--n", "50"],
    );
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn latent_file_matches_the_dataset() {
    let dir = TempDir::new().unwrap();
    let latent = path(&dir, "l.csv");
    let data = simulate(&dir, "d.csv", &["--n", "40", "--latent", &latent]);
    let truth = std::fs::read_to_string(&latent).unwrap();
    assert!(truth.starts_with("t_true,m\n"));
    assert_eq!(truth.lines().count(), 41);
    assert_eq!(std::fs::read_to_string(data).unwrap().lines().count(), 41);
}

#[test]
fn histogram_counts_every_subject() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", &["--n", "300", "--seed", "6"]);
    let out = ok(&["histogram", "--data", &data, "--bins", "12"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("lower,upper,count,fraction"));
    let counts: Vec<usize> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(counts.len(), 12);
    assert_eq!(counts.iter().sum::<usize>(), 300);
}

fn failure(args: &[&str]) -> (i32, String) {
    let out = sieve_roc(args);
    let stderr = String::from_utf8(out.stderr).unwrap();
    (out.status.code().unwrap(), stderr)
}

fn assert_one_line_error(stderr: &str, code: &str) {
    let line = stderr
        .lines()
        .find(|l| l.starts_with("error: "))
        .expect("error line");
    assert!(line.starts_with(&format!("error: {code}: ")), "{line}");
    assert_eq!(stderr.lines().filter(|l| l.starts_with("error")).count(), 1);
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();

    let (code, err) = failure(&["fit"]);
    assert_eq!(code, 2);
    assert_one_line_error(&err, "usage");

    let (code, err) = failure(&["oracle", "--tau", "1.5", "--t", "12"]);
    assert_eq!(code, 2);
    assert_one_line_error(&err, "usage");

    let missing = path(&dir, "absent.csv");
    let (code, err) = failure(&["fit", "--data", &missing]);
    assert_eq!(code, 3);
    assert_one_line_error(&err, "data");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "u,v,marker,status\n6,12,3.4,left\n").unwrap();
    let (code, err) = failure(&["fit", "--data", &bad.to_string_lossy()]);
    assert_eq!(code, 3);
    assert_one_line_error(&err, "data");

    let config = dir.path().join("c.toml");
    std::fs::write(&config, "kappa = 2\n").unwrap();
    let (code, err) = failure(&["oracle", "--config", &config.to_string_lossy(), "--t", "12"]);
    assert_eq!(code, 2);
    assert_one_line_error(&err, "usage");

    let out = Command::new(env!("CARGO_BIN_EXE_sieve-roc"))
        .args(["oracle", "--t", "12"])
        .env("SIEVE_ROC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let out = sieve_roc(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in [
        "simulate",
        "fit",
        "roc",
        "auc",
        "ci",
        "oracle",
        "replicate-table1",
        "histogram",
    ] {
        assert!(text.contains(sub), "{sub}");
    }
    assert!(Path::new(env!("CARGO_BIN_EXE_sieve-roc")).exists());
}
