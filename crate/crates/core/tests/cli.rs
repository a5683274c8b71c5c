use std::path::Path;
use std::process::{Command, Output};

use pls::eval::separation_bound;
use pls::instance::Family;

fn pls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pls"))
        .args(args)
        .env("PLS_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = pls(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["instance", "algo", "adversary", "mode", "trials", "seed", "mean", "std_error"]
    );
    r.records().map(Result::unwrap).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn separation_mc_from_generated_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sep_k4_h6.json");
    stdout(&["instance", "gen", "--family", "separation", "--k", "4", "--h", "6", "--out", path(&file)]);
    let out = stdout(&[
        "eval", "mc", "--algo", "separation", "--adversary", "bernoulli", "--instance", path(&file),
        "--trials", "4000", "--seed", "1",
    ]);
    let rec = &rows(&out)[0];
    assert_eq!(&rec[0], "sep_k4_h6");
    assert_eq!(&rec[3], "mc");
    let mean: f64 = rec[6].parse().unwrap();
    let se: f64 = rec[7].parse().unwrap();

    let b = Family::Separation { k: 4, h: 6 }.build().unwrap();
    let n = b.total() as f64;
    let phi = 0.25 - b.lengths().iter().map(|&l| (l as f64 / n).powi(2)).sum::<f64>() / 4.0;
    let bound = 4.0 / 6.0 * phi + 4.0 / 4.0;
    assert!(mean <= bound + 3.0 * se, "{mean} +- {se} vs {bound}");
    assert!(mean <= separation_bound(4, 6, 0.5).unwrap() + 3.0 * se);
}

#[test]
fn exact_curve_decreases() {
    let out = stdout(&[
        "experiment", "curve", "--family", "ones", "--m-list", "16,64,256,1024", "--algo", "uniform",
        "--adversary", "bernoulli", "--exact",
    ]);
    let means: Vec<f64> = rows(&out).iter().map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(means.len(), 4);
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    // ones(2^k) with the uniform forecaster: (1/k)(1 - 2^-k)
    assert!((means[0] - 0.25 * (1.0 - 1.0 / 16.0)).abs() < 1e-12);
}

#[test]
fn avgcase_rows() {
    let out = stdout(&["experiment", "avgcase", "--n", "2048", "--const-p", "0.1", "--trials", "200", "--seed", "1"]);
    let recs = rows(&out);
    assert!(!recs.is_empty());
    assert!(recs.iter().all(|r| &r[1] == "avgcase" && &r[4] == "200" && &r[5] == "1"));
    assert_eq!(out, stdout(&["experiment", "avgcase", "--n", "2048", "--const-p", "0.1", "--trials", "200", "--seed", "1"]));
}

#[test]
fn uniformity_of_a_stopping_time_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.json");
    std::fs::write(&file, r#"{"n": 14, "stopping_times": [0, 5]}"#).unwrap();
    let out = stdout(&["uniformity", "--instance", path(&file)]);
    assert!(out.starts_with("14/9 "), "{out}");
}

#[test]
fn out_file_gets_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    for _ in 0..2 {
        stdout(&[
            "eval", "exact", "--family", "ones", "--m", "4", "--algo", "uniform", "--adversary", "tree",
            "--out", path(&csv),
        ]);
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    let recs = rows(&text);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0], recs[1]);
    assert_eq!(&recs[0][4], "");
}

#[test]
fn predict_reports_one_decision() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("x.txt");
    let xs = [1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0];
    std::fs::write(&seq, "1 1 0 0 1 0 1 1").unwrap();
    for seed in ["1", "2", "3"] {
        let out = stdout(&["predict", "--family", "ones", "--m", "8", "--algo", "uniform", "--sequence", path(&seq), "--seed", seed]);
        assert_eq!(out.lines().count(), 1);
        let field = |name: &str| -> f64 {
            let tok = out.split_whitespace().find_map(|t| t.strip_prefix(name)).unwrap();
            tok.parse().unwrap()
        };
        let (t, w) = (field("t=") as usize, field("w=") as usize);
        assert!(w >= 1 && t + w <= 8, "{out}");
        let mu = xs[t..t + w].iter().sum::<f64>() / w as f64;
        assert!((field("mu=") - mu).abs() < 1e-12, "{out}");
        let err = (field("mu_hat=") - mu).powi(2);
        assert!((field("squared_error=") - err).abs() < 1e-9, "{out}");
    }
}

#[test]
fn bad_invocations() {
    let exact_with_seed = pls(&["eval", "exact", "--family", "ones", "--m", "4", "--algo", "uniform", "--adversary", "tree", "--seed", "1"]);
    assert_eq!(exact_with_seed.status.code(), Some(2));
    let unknown_algo = pls(&["eval", "mc", "--family", "ones", "--m", "4", "--algo", "oracle", "--adversary", "tree", "--trials", "5", "--seed", "1"]);
    assert_eq!(unknown_algo.status.code(), Some(2));
    let missing = pls(&["uniformity", "--instance", "/nonexistent/instance.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());
}
