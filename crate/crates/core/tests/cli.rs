use std::path::Path;
use std::process::{Command, Output};

fn nanotalbot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nanotalbot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["visibility", "--out", "v", "--scan", "grating.phi0=0:2pi:9", "--seed", "5"];
    assert!(nanotalbot(dir.path(), &args).status.success());
    let first = (read(dir.path(), "v/visibility.csv"), read(dir.path(), "v/visibility.meta.json"));
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "2"]);
    assert!(nanotalbot(dir.path(), &threaded).status.success());
    assert_eq!(first.0, read(dir.path(), "v/visibility.csv"));
    assert_eq!(first.1, read(dir.path(), "v/visibility.meta.json"));
}

#[test]
fn sidecar_records_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    assert!(nanotalbot(dir.path(), &["pattern", "--channels", "col,emi"]).status.success());
    let meta: serde_json::Value = serde_json::from_slice(&read(dir.path(), "pattern.meta.json")).unwrap();
    assert_eq!(meta["command"], "pattern");
    assert_eq!(meta["config"]["decoherence"]["collision"], true);
    assert_eq!(meta["config"]["decoherence"]["absorption"], false);
    assert_eq!(meta["config"]["grating"]["wavelength"], 355e-9);
    let csv = String::from_utf8(read(dir.path(), "pattern.csv")).unwrap();
    assert!(csv.starts_with("x_m,x_over_D,density_per_m\n"));
}

#[test]
fn pattern_without_grating_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"grating": {"phi0": 0.0}}"#).unwrap();
    let out = nanotalbot(dir.path(), &["pattern", "--config", "c.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("pattern.csv")).unwrap();
    let w: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(w.len(), 2048);
    let (lo, hi) = w.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi - lo <= 1e-12 * hi, "{lo} {hi}");
}

#[test]
fn csl_bound_from_half_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = nanotalbot(dir.path(), &["csl", "--visibility-ratio", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("e-11"), "{text}");
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"particle": {"mass": 1e-21, "radius": 5e-8}}"#).unwrap();
    std::fs::write(dir.path().join("typo.json"), r#"{"timeline": {"t3": 0.1}}"#).unwrap();
    let cases: [&[&str]; 5] = [
        &["pattern", "--config", "bad.json"],
        &["pattern", "--config", "typo.json"],
        &["visibility", "--scan", "grating.phi00=0:1:3"],
        &["pattern", "--channels", "col,xyz"],
        &["csl", "--visibility-ratio", "1.5"],
    ];
    let fields = ["particle", "timeline", "scan[0].variable", "--channels", "--visibility-ratio"];
    for (args, field) in cases.iter().zip(fields) {
        let out = nanotalbot(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(field), "{args:?}: {err}");
    }
    assert_eq!(nanotalbot(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(nanotalbot(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn validate_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = nanotalbot(dir.path(), &["validate"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{text}");
}
