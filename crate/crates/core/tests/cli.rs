use std::io::Write;
use std::process::{Command, Output};

use plinar::series::{ingest_csv, ColumnSelector};
use plinar::PoissonLindley;
use serde_json::Value;

fn plinar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plinar"))
        .args(args)
        .env_remove("RUST_BACKTRACE")
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = plinar(args);
    assert!(
        out.status.success(),
        "plinar {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    serde_json::from_str(&stdout_ok(args)).expect("valid JSON")
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

const SIMULATE: [&str; 9] = [
    "simulate", "--alpha", "0.5", "--theta", "2", "--n", "1000", "--seed", "7",
];

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = stdout_ok(&SIMULATE);
    let b = stdout_ok(&SIMULATE);
    assert_eq!(a, b);
    assert!(a.starts_with('#'));
    assert_eq!(data_rows(&a).len(), 1000);
}

#[test]
fn simulate_output_round_trips_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let text = stdout_ok(&SIMULATE);
    std::fs::write(&path, &text).unwrap();
    let series = ingest_csv(&path, &ColumnSelector::Last).unwrap();
    let expected: Vec<u64> = data_rows(&text)
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(series.values(), expected.as_slice());

    // a different seed gives a different path
    let mut other = SIMULATE;
    other[8] = "8";
    assert_ne!(stdout_ok(&other), text);
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let mut args = SIMULATE.to_vec();
    let p = path.to_str().unwrap();
    args.extend(["--output", p]);
    stdout_ok(&args);
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        stdout_ok(&SIMULATE)
    );
}

#[test]
fn simulate_demands_a_seed() {
    let out = plinar(&["simulate", "--alpha", "0.5", "--theta", "2", "--n", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn fit_reproduces_the_estimates_on_141_points() {
    let v = json_ok(&["fit", "--first", "141", "--methods", "cls,yw,ml"]);
    for key in ["config", "results", "diagnostics"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["config"]["n"], 141);
    let est = v["results"]["estimates"].as_array().unwrap();
    let expect = [
        ("CLS", 0.2297, 2.1671),
        ("YW", 0.2291, 2.1804),
        ("ML", 0.1028, 2.1900),
    ];
    for (row, (name, a, t)) in est.iter().zip(expect) {
        assert_eq!(row["method"], name);
        assert!((row["alpha_hat"].as_f64().unwrap() - a).abs() < 1e-3);
        assert!((row["theta_hat"].as_f64().unwrap() - t).abs() < 1e-3);
    }
    let ml = &est[2];
    assert!(ml["loglik"].as_f64().unwrap() < 0.0);
    assert_eq!(ml["diagnostics"]["converged"], true);
    assert!(ml["diagnostics"]["iterations"].as_u64().unwrap() > 0);
}

#[test]
fn fit_with_order_selection() {
    let v = json_ok(&["fit", "--methods", "cls", "--ar-max", "3"]);
    let sel = &v["results"]["ar_order_selection"];
    assert_eq!(sel["best_aic"], 1);
    assert_eq!(sel["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn fit_on_a_constant_series_reports_a_structured_error() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "count").unwrap();
    for _ in 0..20 {
        writeln!(f, "3").unwrap();
    }
    let v = json_ok(&[
        "fit",
        "--input",
        f.path().to_str().unwrap(),
        "--methods",
        "yw",
    ]);
    let row = &v["results"]["estimates"][0];
    assert_eq!(row["method"], "YW");
    assert!(!row["error"].as_str().unwrap().is_empty());
    assert_eq!(v["diagnostics"]["failed_methods"], 1);
}

#[test]
fn bad_input_names_the_line() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, "count\n1\n-2\n").unwrap();
    let out = plinar(&["fit", "--input", f.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('3'), "{err}");
}

#[test]
fn forecast_inf_is_the_marginal_law() {
    let csv = stdout_ok(&[
        "forecast", "--xn", "4", "--k", "inf", "--alpha", "0.3", "--theta", "1.5", "--y-max", "10",
    ]);
    let pl = PoissonLindley::new(1.5).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 11);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[1], "inf");
        let y: u64 = f[3].parse().unwrap();
        let p: f64 = f[4].parse().unwrap();
        assert!((p - pl.pmf(y)).abs() < 1e-15);
    }
}

#[test]
fn forecast_marginal_method_matches_printed_probabilities() {
    let csv = stdout_ok(&[
        "forecast",
        "--xn",
        "0",
        "--k",
        "1",
        "--model",
        "marginal",
        "--estimates",
        "cls",
        "--first",
        "141",
        "--y-max",
        "4",
    ]);
    let pmf: Vec<f64> = data_rows(&csv)
        .iter()
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!((pmf[0] - 0.309).abs() < 5e-4);
    assert!((pmf[1] - 0.405).abs() < 5e-4);
}

#[test]
fn forecast_json_format() {
    let v = json_ok(&[
        "forecast", "--xn", "1", "--k", "1,2", "--alpha", "0.4", "--theta", "2", "--format", "json",
    ]);
    assert!(v.get("config").is_some());
    assert!(v.get("results").is_some());
}

#[test]
fn traditional_forecast_needs_fitted_estimates() {
    let out = plinar(&[
        "forecast",
        "--xn",
        "0",
        "--model",
        "traditional",
        "--alpha",
        "0.4",
        "--theta",
        "2",
    ]);
    assert!(!out.status.success());
}

#[test]
fn sweep_record_counts() {
    let csv = stdout_ok(&[
        "sweep", "--vary", "alpha", "--theta", "0.5", "--xn", "0,15,30",
    ]);
    assert_eq!(data_rows(&csv).len(), 273);
    let csv = stdout_ok(&[
        "sweep", "--vary", "xn", "--alpha", "0.1", "--theta", "2", "--xn-max", "5",
    ]);
    assert_eq!(data_rows(&csv).len(), 6);
}

#[test]
fn theta_sweep_at_high_alpha_is_finite() {
    let csv = stdout_ok(&["sweep", "--vary", "theta", "--alpha", "0.9", "--xn", "30"]);
    let skipped = csv.lines().filter(|l| l.starts_with("# skipped")).count();
    let rows = data_rows(&csv);
    assert_eq!(rows.len() + skipped, 496);
    for row in rows {
        for v in row.split(',').skip(5) {
            let v: f64 = v.parse().unwrap();
            assert!(v.is_finite() && v >= 0.0, "{row}");
        }
    }
}

#[test]
fn evaluate_defaults_use_115_training_points() {
    let v = json_ok(&["evaluate", "--estimators", "cls"]);
    assert_eq!(v["diagnostics"]["train_len"], 115);
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 4 * 3);
    for r in rows {
        for key in ["ptp_median", "ptp_mode", "ptp_mean_rounded"] {
            let p = r[key].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn evaluate_rejects_a_too_short_test_window() {
    let out = plinar(&["evaluate", "--train-fraction", "0.99"]);
    assert!(!out.status.success());
}

#[test]
fn invalid_parameters_are_rejected() {
    for args in [
        ["forecast", "--xn", "0", "--alpha", "1.0", "--theta", "2"],
        ["forecast", "--xn", "0", "--alpha", "0.5", "--theta", "-1"],
        ["forecast", "--xn", "0", "--alpha", "0.45", "--theta", "0.1"],
    ] {
        assert!(!plinar(&args).status.success(), "{args:?}");
    }
}
