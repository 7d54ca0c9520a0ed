use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn frameless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frameless"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["theta", "variance", "gain", "scheme", "n", "p", "degenerate"]
    );
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn sweep_theta_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    let args = ["sweep-theta", "--model", "oat:N=100", "--p", "0.95", "--count", "200", "--seed", "3"];
    for (path, fmt) in [(&a, "csv"), (&b, "json"), (&c, "json")] {
        let mut full = args.to_vec();
        full.extend(["--format", fmt, "--out", path.to_str().unwrap()]);
        let out = frameless(&full);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(fs::read(&b).unwrap(), fs::read(&c).unwrap());
    let again = dir.path().join("a2.csv");
    let mut full = args.to_vec();
    full.extend(["--out", again.to_str().unwrap()]);
    assert!(frameless(&full).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&again).unwrap());

    let json: Value = serde_json::from_slice(&fs::read(&b).unwrap()).unwrap();
    assert_eq!(json["metadata"]["seed"], 3);
    assert_eq!(json["metadata"]["command"], "sweep-theta");
    assert_eq!(json["rows"].as_array().unwrap().len(), 200);
}

#[test]
fn sweep_theta_reproduces_small_angle_gain_and_interior_maximum() {
    let clean = frameless(&["sweep-theta", "--model", "oat:N=100"]);
    let rows = parse_csv(&stdout(&clean));
    assert_eq!(rows.len(), 1000);
    let g0: f64 = rows[0][2].parse().unwrap();
    assert!((g0 - 24.75).abs() < 0.01, "{g0}");

    let noisy = frameless(&["sweep-theta", "--model", "oat:N=100", "--p", "0.95"]);
    let gains: Vec<f64> = parse_csv(&stdout(&noisy)).iter().map(|r| r[2].parse().unwrap()).collect();
    let best = gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    assert!(best > 0 && best < gains.len() - 1, "argmax at {best}");
}

#[test]
fn csv_values_round_trip_exactly() {
    let out = frameless(&["sweep-theta", "--model", "mermin2:N=4", "--scheme", "four-copy", "--count", "17", "--spacing", "linear", "--start", "0.01", "--stop", "0.5"]);
    for row in parse_csv(&stdout(&out)) {
        for field in &row[0..3] {
            let x: f64 = field.parse().unwrap();
            assert_eq!(&frameless::report::format_float(x), field);
        }
        assert_eq!(row[3], "four-copy");
        assert_eq!(row[4], "4");
    }
}

#[test]
fn full_depolarization_gives_zero_gain_and_inf() {
    let out = frameless(&["sweep-theta", "--model", "oat:N=10", "--p", "0", "--count", "5"]);
    for row in parse_csv(&stdout(&out)) {
        assert_eq!(row[1], "inf");
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[6], "true");
    }
}

#[test]
fn sweep_n_accepts_spec_without_n_and_is_increasing() {
    let out = frameless(&["sweep-n", "--model", "oat:", "--n-min", "10", "--n-max", "200", "--n-step", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 20);
    let gains: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(gains.windows(2).all(|w| w[1] > w[0]));
    for r in &rows {
        let n: f64 = r[4].parse().unwrap();
        let theta: f64 = r[0].parse().unwrap();
        assert_eq!(theta, 1.0 / n);
    }
}

#[test]
fn sweep_n_fixed_theta_rule() {
    let out = frameless(&["sweep-n", "--model", "oat:N=2", "--n-min", "2", "--n-max", "2", "--theta-rule", "0.5", "--format", "json"]);
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &json["rows"][0];
    assert_eq!(row["theta"], 0.5);
    let g = row["gain"].as_f64().unwrap();
    assert!(g.is_finite() && g > 0.0);
}

#[test]
fn invalid_model_is_a_usage_error() {
    let out = frameless(&["sweep-theta", "--model", "oat:N=1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("oat needs N >= 2"), "{err}");

    let out = frameless(&["sweep-theta", "--model", "oat:N=10", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = frameless(&["sweep-theta", "--model", "oat:N=10", "--count", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn twirl_mc_emits_json_with_deviation() {
    let out = frameless(&["twirl-mc", "--k", "2", "--samples", "20000", "--seed", "7"]);
    assert!(out.status.success());
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["dim"], 4);
    assert!(json["max_sigma_deviation"].as_f64().unwrap() < 5.0);
    assert!(json["max_abs_deviation"].as_f64().unwrap() < 0.05);

    let again = frameless(&["twirl-mc", "--k", "2", "--samples", "20000", "--seed", "7"]);
    assert_eq!(out.stdout, again.stdout);

    let coll = frameless(&["twirl-mc", "--k", "2", "--samples", "4000", "--collective", "--n", "2"]);
    let json: Value = serde_json::from_slice(&coll.stdout).unwrap();
    assert_eq!(json["dim"], 16);
    assert_eq!(json["collective"], true);
}

#[test]
fn validate_twirl_passes() {
    let out = frameless(&["validate", "twirl", "--seed", "7", "--samples", "20000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["seed"], 7);
}

#[test]
fn validate_reports_failures_and_exits_nonzero() {
    // The quoted Mermin four-copy limit is off by a factor of two, so the
    // limits suite cannot pass; the report must say so.
    let out = frameless(&["validate", "limits"]);
    assert_eq!(out.status.code(), Some(1));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["passed"], false);
    let checks = json["checks"].as_array().unwrap();
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(json["failures"].as_u64().unwrap() as usize, failed.len());
    assert!(failed.iter().all(|name| name.starts_with("Mermin")), "{failed:?}");
    assert!(checks.iter().any(|c| c["name"].as_str().unwrap().starts_with("OAT") && c["passed"] == true));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks failed"));
}

#[test]
fn invariants_command_prints_sector_lengths() {
    let out = frameless(&["invariants", "--model", "product:N=3,b=0", "--theta", "0.2"]);
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["invariants"]["s1"], 3.0);
    assert_eq!(json["invariants"]["s2"], 3.0);

    let csv = frameless(&["invariants", "--model", "oat:N=4", "--theta", "0.3", "--p", "0.9", "--format", "csv"]);
    let text = stdout(&csv);
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("collective.b_theta,"));
}
