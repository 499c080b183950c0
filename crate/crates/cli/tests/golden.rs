//! Exit codes, report schemas and determinism of the installed binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use nonclassical::{LandscapeResult, StatsReport};
use nonclassical_cli::{ClassicalityReport, G2Report, ProcessReport};

fn nonclassical(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonclassical"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-golden");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const TELEGRAPH: &str = r#"{"kind":"random-telegraph","low":0.0,"high":2.0,"rate":1.0}"#;

#[test]
fn single_photon_stats() {
    let out = nonclassical(&["stats", "--state", r#"{"kind":"fock","n":1,"dim":8}"#]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: StatsReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report.k + 1.0).abs() < 1e-12);
    assert!(report.sub_poisson);
}

#[test]
fn two_point_landscape() {
    let out = nonclassical(&["k-landscape", "--support", "1,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let result: LandscapeResult = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(result.min_k, -2.0);
    assert_eq!(result.argmin, [0.0, 1.0]);
    for method in ["grid", "pgd"] {
        let out = nonclassical(&["k-landscape", "--support", "1,2", "--method", method]);
        let result: LandscapeResult = serde_json::from_str(&stdout(&out)).unwrap();
        assert!((result.min_k + 2.0).abs() < 1e-8, "{method}: {}", result.min_k);
    }
}

#[test]
fn out_of_range_level_is_a_precondition_error() {
    let out = nonclassical(&["stats", "--state", r#"{"kind":"fock","n":9,"dim":8}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("out of range"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn truncation_error_names_the_dimension_needed() {
    let out = nonclassical(&["stats", "--state", r#"{"kind":"coherent","alpha_re":2,"alpha_im":0,"dim":6}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("need dim >="), "{}", stderr(&out));
}

#[test]
fn parse_errors_exit_3() {
    for state in [
        r#"{"kind":"squeezed","dim":10}"#,
        r#"{"kind":"fock","dim":8}"#,
        r#"{"kind":"fock","n":1,"dim":8"#,
    ] {
        let out = nonclassical(&["stats", "--state", state]);
        assert_eq!(out.status.code(), Some(3), "{state}: {}", stderr(&out));
    }
    let out = nonclassical(&["stats", "--state", r#"{"kind":"squeezed","dim":10}"#]);
    assert!(stderr(&out).contains("unknown state kind `squeezed`"));
    let out = nonclassical(&["stats", "--state", r#"{"kind":"fock","dim":8}"#]);
    assert!(stderr(&out).contains("`n`: missing"));
    let out = nonclassical(&["g2", "--model", r#"{"kind":"laser"}"#, "--tau-max", "1", "--tau-points", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let out = nonclassical(&["k-landscape", "--support", "1,two"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["squeeze"][..],
        &[][..],
        &["stats"][..],
        &["k-landscape", "--support", "1,2", "--method", "newton"][..],
        &["g2", "--model", "{}", "--tau-max", "ten", "--tau-points", "3"][..],
    ] {
        let out = nonclassical(args);
        assert_eq!(out.status.code(), Some(64), "{args:?}");
        let err = stderr(&out);
        assert!(err.contains("Usage") || err.contains("--help"), "{args:?}: {err}");
    }
}

#[test]
fn precondition_errors_exit_2() {
    let cases: [&[&str]; 4] = [
        &["classical-process", "--model", TELEGRAPH, "--samples", "10"],
        &["g2", "--model", r#"{"kind":"two-level-driven","omega_r":1,"gamma":-1}"#, "--tau-max", "1", "--tau-points", "3"],
        &["k-landscape", "--support", "0,1,2,3", "--method", "grid"],
        &["classicality", "--moments", "/nonexistent/moments.json"],
    ];
    for args in cases {
        assert_eq!(nonclassical(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn classicality_reports_round_trip() {
    let out = nonclassical(&["classicality", "--state", r#"{"kind":"fock","n":2,"dim":10}"#]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: ClassicalityReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(!report.classical);
    assert!((report.witness.cb_margin + 2.0).abs() < 1e-10);

    let path = scratch("thermal_moments.json");
    // Thermal factorial moments k! n̄ᵏ for n̄ = 0.5.
    std::fs::write(&path, "[1, 0.5, 0.5, 0.75, 1.5]").unwrap();
    let out = nonclassical(&["classicality", "--moments", path.to_str().unwrap(), "--grid", "512"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: ClassicalityReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report.classical);
    assert_eq!(report.fit.grid.len(), report.fit.weights.len());

    std::fs::write(&path, "[0.5, 0.5, 0.5]").unwrap();
    let out = nonclassical(&["classicality", "--moments", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "m0 = 0.5 is well formed but not a moment sequence");
    std::fs::write(&path, "[1, 0.5,").unwrap();
    let out = nonclassical(&["classicality", "--moments", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn g2_report_and_series() {
    let model = r#"{"kind":"two-level-driven","omega_r":0.05,"gamma":1.0}"#;
    let out = nonclassical(&["g2", "--model", model, "--tau-max", "10", "--tau-points", "21"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: G2Report = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report.antibunching.antibunched);
    assert_eq!(report.series.p_raw[0], 0.0);

    let out = nonclassical(&["g2", "--model", model, "--tau-max", "10", "--tau-points", "21", "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,p_raw,g2,stderr"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 21);
    for (row, (&p, g)) in rows.iter().zip(report.series.p_raw.iter().zip(report.series.g2.unwrap())) {
        assert_eq!(row[1].parse::<f64>().unwrap(), p);
        assert_eq!(row[2].parse::<f64>().unwrap(), g);
        assert_eq!(row[3], "");
    }
}

#[test]
fn classical_process_output_is_byte_identical_for_a_seed() {
    let args = ["classical-process", "--model", TELEGRAPH, "--samples", "20000", "--seed", "7"];
    let first = nonclassical(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, nonclassical(&args).stdout);
    let report: ProcessReport = serde_json::from_str(&stdout(&first)).unwrap();
    assert!(!report.schwarz_violation);
    assert_eq!((report.samples, report.seed), (20000, 7));
    assert_ne!(first.stdout, nonclassical(&args[..6]).stdout, "seed defaults to 0, not 7");

    let (a, b) = (scratch("process_a.csv"), scratch("process_b.csv"));
    for path in [&a, &b] {
        let mut with_out = args.to_vec();
        with_out.extend(["--format", "csv", "--out", path.to_str().unwrap()]);
        let out = nonclassical(&with_out);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn landscape_scan_csv() {
    let out = nonclassical(&["k-landscape", "--support", "0,1,2", "--resolution", "5", "--format", "csv"]);
    let text = stdout(&out);
    assert!(text.starts_with("x_0,x_1,x_2,k\n"));
    assert_eq!(text.lines().count(), 1 + 15);
}

#[test]
fn state_can_be_read_from_a_file() {
    let path = scratch("thermal.json");
    std::fs::write(&path, r#"{"kind":"thermal","nbar":1.0,"dim":60}"#).unwrap();
    let out = nonclassical(&["stats", "--state", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: StatsReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report.k - 1.0).abs() < 1e-8);
}
