use std::path::PathBuf;
use std::process::{Command, Output};

use serde::de::DeserializeOwned;
use serde::Serialize;

use momsos_cli::schema::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn momsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momsos")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = momsos(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_of(args: &[&str]) -> (i32, ErrorReport) {
    let out = momsos(args);
    let code = out.status.code().expect("exit code");
    let report: ErrorReport = serde_json::from_slice(&out.stderr).expect("error JSON on stderr");
    (code, report)
}

/// Parses into the typed schema and checks nothing is lost on re-serialization.
fn round_trip<T: DeserializeOwned + Serialize>(text: &str) -> T {
    let typed: T = serde_json::from_str(text).expect("matches schema");
    let original: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(serde_json::to_value(&typed).unwrap(), original);
    typed
}

fn path(name: &str) -> String {
    data(name).to_string_lossy().into_owned()
}

#[test]
fn lowerbound_reports_each_order() {
    let out = run_ok(&["lowerbound", "--input", &path("min_x.json")]);
    let report: LowerBoundReport = round_trip(&out);
    assert_eq!(report.meta.command, "lowerbound");
    assert_eq!(report.meta.schema_version, SCHEMA_VERSION);
    let orders: Vec<usize> = report.result.iter().map(|r| r.t).collect();
    assert_eq!(orders, vec![1, 2, 3]);
    for r in &report.result {
        assert!((r.rho_t + 1.0).abs() <= 1e-6);
        assert!(r.flat && r.extraction_verified);
        assert!((r.minimizers[0][0] + 1.0).abs() <= 1e-6);
        assert_eq!(r.sos_certificate.len(), 2);
    }
}

#[test]
fn order_flags_override_the_input_range() {
    let out = run_ok(&["lowerbound", "--input", &path("min_x.json"), "--t", "2", "--tol-gap", "1e-10"]);
    let report: LowerBoundReport = round_trip(&out);
    assert_eq!(report.result.len(), 1);
    assert_eq!(report.result[0].t, 2);
    assert_eq!(report.meta.tolerances.sdp_gap, 1e-10);
    let out = run_ok(&["upperbound", "--input", &path("upper_uniform.json"), "--t-max", "2"]);
    let report: UpperBoundReport = round_trip(&out);
    assert_eq!(report.result.iter().map(|r| r.t).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn upperbound_modes() {
    let report: UpperBoundReport = round_trip(&run_ok(&["upperbound", "--input", &path("upper_uniform.json")]));
    assert!((report.result[1].value + 1.0 / 3f64.sqrt()).abs() <= 1e-9);
    for w in report.result.windows(2) {
        assert!(w[1].value <= w[0].value + 1e-9);
    }
    let report: UpperBoundReport = round_trip(&run_ok(&["upperbound", "--input", &path("pushforward.json")]));
    let delta1 = (15.0 - 2.0 * 30f64.sqrt()) / 35.0;
    assert!((report.result[0].value - delta1).abs() <= 1e-6);
    assert_eq!(report.result[0].matrix_order, 2);
}

#[test]
fn pell_check_table() {
    let report: PellCheckReport = round_trip(&run_ok(&["pell-check", "--input", &path("pell_chebyshev.json")]));
    assert_eq!(report.result.len(), 8);
    for r in &report.result {
        assert!(r.residual <= 1e-8, "t={}: {}", r.t, r.residual);
    }
}

#[test]
fn christoffel_rep_and_equilibrium() {
    let report: ChristoffelRepReport = round_trip(&run_ok(&["christoffel-rep", "--input", &path("rep_ball.json")]));
    assert!(report.result.residual <= 1e-6);
    assert!(report.result.duality_gap <= 1e-6);
    assert_eq!(report.result.gram_blocks.len(), 2);

    let report: EquilibriumRunReport =
        round_trip(&run_ok(&["equilibrium", "--input", &path("equilibrium_interval.json")]));
    let last = report.result.steps.last().unwrap();
    assert_eq!(last.t, 3);
    for (a, b) in last.phi.values().iter().zip([1.0, 0.0, 0.5, 0.0, 0.375, 0.0, 0.3125]) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn disintegrate_per_point() {
    let report: DisintegrateReport =
        round_trip(&run_ok(&["disintegrate", "--input", &path("disintegrate_square.json")]));
    assert_eq!(report.result.len(), 3);
    let first = &report.result[0];
    for (a, b) in first.nu_moments.values().iter().zip([1.0, 0.0, 1.0 / 3.0]) {
        assert!((a - b).abs() <= 1e-6);
    }
    assert!(report.result.iter().all(|r| r.factor_residual <= 1e-6));
}

#[test]
fn cf_points_as_json() {
    let report: CfReport = round_trip(&run_ok(&["cf", "--input", &path("cf_points.json")]));
    let p = &report.result.points;
    assert_eq!(p.len(), 2);
    assert!(p[1].lambda / p[0].lambda <= 1e-4);
    assert!(p[0].inside && !p[1].inside);
    assert!(!report.result.regularized);
}

#[test]
fn support_score_grid_as_csv() {
    let out = run_ok(&["support-score", "--input", &path("cloud.json"), "--grid", "7,5"]);
    let mut lines = out.lines();
    let meta_line = lines.next().unwrap();
    let meta: Meta = serde_json::from_str(meta_line.strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(meta.command, "support-score");
    assert_eq!(lines.next().unwrap(), "x1,x2,lambda,scaled_lambda,inside_flag");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 35);
    assert_eq!(rows[0][..2], [-3.0, -3.0]);
    assert_eq!(rows[1][..2], [-3.0, -1.5]);
    let center = rows.iter().find(|r| r[0] == 0.0 && r[1] == 0.0).unwrap();
    assert_eq!(center[4], 1.0);
    let corner = &rows[34];
    assert_eq!(corner[4], 0.0);
    for r in &rows {
        assert!((r[3] - 15.0 * r[2]).abs() <= 1e-12 * r[3].abs().max(1e-300));
    }
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let cases: [(&str, &str, &[&str]); 5] = [
        ("lowerbound", "min_x.json", &[]),
        ("pell-check", "pell_chebyshev.json", &[]),
        ("disintegrate", "disintegrate_square.json", &[]),
        ("support-score", "cloud.json", &["--grid", "9"]),
        ("upperbound", "upper_uniform.json", &[]),
    ];
    for (cmd, file, extra) in cases {
        let input = path(file);
        let mut base = vec![cmd, "--input", input.as_str()];
        base.extend_from_slice(extra);
        let one = [base.clone(), vec!["--threads", "1"]].concat();
        let four = [base.clone(), vec!["--threads", "4"]].concat();
        let a = run_ok(&one);
        assert_eq!(a, run_ok(&one), "{cmd}: repeated run differs");
        assert_eq!(a, run_ok(&four), "{cmd}: thread count changes output");
    }
}

#[test]
fn seed_is_recorded() {
    let out = run_ok(&["lowerbound", "--input", &path("min_x.json"), "--t", "1", "--seed", "42"]);
    let report: LowerBoundReport = round_trip(&out);
    assert_eq!(report.meta.seed, 42);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("pell.json");
    let input = path("pell_chebyshev.json");
    let out = momsos(&["pell-check", "--input", &input, "--output", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert_eq!(written, run_ok(&["pell-check", "--input", &input]));
}

#[test]
fn validation_errors_exit_with_one() {
    let (code, report) = error_of(&["cf", "--input", &path("does_not_exist.json")]);
    assert_eq!(code, 1);
    assert_eq!(report.error.kind, ErrorKind::Validation);
    assert_eq!(report.command.as_deref(), Some("cf"));

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    };
    let bad_version = write("v.json", r#"{"schema_version": 7, "set": "interval"}"#);
    let (code, report) = error_of(&["equilibrium", "--input", &bad_version]);
    assert_eq!(code, 1);
    assert!(report.error.message.contains("schema_version"));

    let unknown_field = write("u.json", r#"{"set": "interval", "colour": 3}"#);
    assert_eq!(error_of(&["equilibrium", "--input", &unknown_field]).0, 1);

    let mismatched = write(
        "m.json",
        r#"{"f": {"n": 2, "terms": [{"exp": [1, 0], "coef": 1.0}]},
            "measure": {"kind": "uniform_interval", "params": {}}}"#,
    );
    let (code, report) = error_of(&["upperbound", "--input", &mismatched]);
    assert_eq!(code, 1, "{report:?}");

    assert_eq!(error_of(&["lowerbound", "--input", &path("min_x.json"), "--t", "0"]).0, 1);
    assert_eq!(error_of(&["cf", "--input", &path("cf_points.json"), "--t", "x"]).0, 1);
    assert_eq!(error_of(&["lowerbound"]).0, 1);
}

#[test]
fn numerical_errors_exit_with_two() {
    let (code, report) = error_of(&["christoffel-rep", "--input", &path("rep_boundary.json")]);
    assert_eq!(code, 2);
    assert_eq!(report.error.kind, ErrorKind::Numerical);
}
