use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prefixwatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prefixwatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn fixture(dir: &Path, days: &str) {
    let out = prefixwatch(&[
        "fixture",
        "--days",
        days,
        "--peers",
        "5",
        "--base",
        "400",
        "--noise_sigma",
        "4",
        "--seed",
        "3",
        "--event",
        "30:15:0.4:step",
        "--event",
        "52:1:0.3:spike",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn stage_args<'a>(
    stage: &'a str,
    snaps: &'a str,
    delegation: &'a str,
    out: &'a str,
) -> Vec<&'a str> {
    vec![
        stage,
        "--snapshot_dir",
        snaps,
        "--delegation_file",
        delegation,
        "--output_dir",
        out,
    ]
}

#[test]
fn staged_run_matches_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let snaps = tmp.path().join("snaps");
    fixture(&snaps, "60");
    let snaps_s = snaps.to_str().unwrap().to_string();
    let deleg = snaps.join("delegated.txt").to_str().unwrap().to_string();
    let whole = tmp.path().join("whole").to_str().unwrap().to_string();
    let staged = tmp.path().join("staged").to_str().unwrap().to_string();

    let out = prefixwatch(&stage_args("run", &snaps_s, &deleg, &whole));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("long-term"));

    for stage in ["ingest", "segment", "detect", "report"] {
        let out = prefixwatch(&stage_args(stage, &snaps_s, &deleg, &staged));
        assert_eq!(
            code(&out),
            0,
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for file in [
        "measure.csv",
        "segments.csv",
        "forecasts.csv",
        "correlograms.csv",
        "events.csv",
    ] {
        let a = fs::read(Path::new(&whole).join(file)).unwrap();
        let b = fs::read(Path::new(&staged).join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between staged and single runs");
    }
    let events = fs::read_to_string(Path::new(&whole).join("events.csv")).unwrap();
    assert!(
        events.lines().any(|l| l.contains(",long_term,")),
        "{events}"
    );
}

#[test]
fn missing_delegation_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let snaps = tmp.path().join("snaps");
    fs::create_dir_all(&snaps).unwrap();
    let missing = tmp.path().join("nope.txt");
    let out_dir = tmp.path().join("out");
    let out = prefixwatch(&[
        "run",
        "--snapshot_dir",
        snaps.to_str().unwrap(),
        "--delegation_file",
        missing.to_str().unwrap(),
        "--output_dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delegation_file"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "x_treshold = 0.9\n").unwrap();
    let out = prefixwatch(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("x_treshold"));
}

#[test]
fn out_of_range_threshold_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = prefixwatch(&[
        "segment",
        "--output_dir",
        tmp.path().to_str().unwrap(),
        "--x_threshold",
        "1.5",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn too_few_snapshots_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let snaps = tmp.path().join("snaps");
    let out = prefixwatch(&[
        "fixture",
        "--days",
        "10",
        "--peers",
        "3",
        "--base",
        "50",
        "--out",
        snaps.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let deleg = snaps.join("delegated.txt");
    let out_dir = tmp.path().join("out");
    let out = prefixwatch(&[
        "run",
        "--snapshot_dir",
        snaps.to_str().unwrap(),
        "--delegation_file",
        deleg.to_str().unwrap(),
        "--output_dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fixture_requires_a_size() {
    let tmp = tempfile::tempdir().unwrap();
    let out = prefixwatch(&["fixture", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}
