use std::path::Path;
use std::process::{Command, Output};

use crowdcast::series::{parse_hourly_csv, quartile_threshold, Target};

fn crowdcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdcast")).current_dir(dir).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_two_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = crowdcast(dir.path(), &["simulate", "--days", "365", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 1);
    for name in ["arrivals.csv", "occupancy.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 365 * 24 + 1);
    }
    let meta = std::fs::read_to_string(dir.path().join("simulation.toml")).unwrap();
    assert!(meta.contains("seed = 7"));
}

#[test]
fn threshold_prints_the_quantile() {
    let dir = tempfile::tempdir().unwrap();
    assert!(crowdcast(dir.path(), &["simulate", "--days", "60", "--seed", "1"]).status.success());
    let out = crowdcast(dir.path(), &["threshold", "--input", "occupancy.csv"]);
    assert!(out.status.success());

    let text = std::fs::read_to_string(dir.path().join("occupancy.csv")).unwrap();
    let mut values: Vec<f64> = parse_hourly_csv(&text, Target::Occupancy).unwrap().present().map(f64::from).collect();
    values.sort_by(f64::total_cmp);
    let rank = 0.75 * (values.len() - 1) as f64;
    let (lo, frac) = (rank.floor() as usize, rank.fract());
    let expected = (values[lo] + frac * (values[(lo + 1).min(values.len() - 1)] - values[lo]) + 0.5).floor() as u32;
    assert_eq!(stdout(&out).trim(), expected.to_string());
    assert_eq!(expected, quartile_threshold(&parse_hourly_csv(&text, Target::Occupancy).unwrap(), 0.75).unwrap());
}

#[test]
fn unknown_flag_exits_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = crowdcast(dir.path(), &["simulate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_input_fails_with_nonzero_status() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "timestamp,value\n2022-01-01T00:00:00Z,-4\n").unwrap();
    let out = crowdcast(dir.path(), &["threshold", "--input", "bad.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn replay_evaluate_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(crowdcast(d, &["simulate", "--days", "40", "--seed", "3", "--start", "2022-01-01T00:00:00Z"])
        .status
        .success());
    std::fs::write(
        d.join("crowdcast.toml"),
        r#"
arrivals = "arrivals.csv"
occupancy = "occupancy.csv"
store = "predictions.csv"
refit_cadence = 24
start = "2022-02-01T00:00:00Z"
end = "2022-02-04T00:00:00Z"
downtime = ["2022-02-02T00:00:00Z/2022-02-02T06:00:00Z"]
"#,
    )
    .unwrap();

    let replay = crowdcast(d, &["--config", "crowdcast.toml", "replay"]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    assert!(stdout(&replay).contains("396 records appended"), "{}", stdout(&replay));

    // flags win over the file
    let cycle = crowdcast(
        d,
        &[
            "--config",
            "crowdcast.toml",
            "--models",
            "AHWM",
            "--targets",
            "occupancy",
            "cycle",
            "--now",
            "2022-02-05T00:00:00Z",
        ],
    );
    assert!(cycle.status.success());
    assert!(stdout(&cycle).contains("1 appended"));
    let again = crowdcast(
        d,
        &[
            "--config",
            "crowdcast.toml",
            "--models",
            "AHWM",
            "--targets",
            "occupancy",
            "cycle",
            "--now",
            "2022-02-05T00:00:00Z",
        ],
    );
    assert_eq!(again.status.code(), Some(1));

    let eval = crowdcast(d, &["--config", "crowdcast.toml", "evaluate", "--out-dir", "report"]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    for name in crowdcast::crowding::REPORT_FILES {
        assert!(d.join("report").join(name).exists(), "{name}");
    }
    let report = crowdcast(d, &["report", "--dir", "report"]);
    assert!(report.status.success());
    assert!(d.join("report/report.txt").exists());
    assert_eq!(stdout(&report).lines().count(), 1);
}
