use std::path::Path;
use std::process::{Command, Output};

fn spitgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spitgate"))
        .args(args)
        .output()
        .expect("spawn spitgate")
}

fn write_fixtures(dir: &Path) -> (String, String) {
    let db = dir.join("patterns.txt");
    std::fs::write(
        &db,
        "from_user|exact|anonymous\n\
         from_host|exact|anonymous.net\n\
         from_display|substring|summer offer\n",
    )
    .unwrap();
    let protos = dir.join("prototypes.txt");
    std::fs::write(
        &protos,
        "scale|1\n\
         genuine|4.078\ngenuine|5.613\ngenuine|6.446\ngenuine|2.599\n\
         spam|0.195\nspam|0.112\nspam|0.181\nspam|18.174\n",
    )
    .unwrap();
    (
        db.to_str().unwrap().to_string(),
        protos.to_str().unwrap().to_string(),
    )
}

/// synth a corpus from `spec_lines`, calibrate against a genuine-only corpus,
/// and return the analyze exit code for the first generated pcap.
fn synth_and_analyze(spec_lines: &str) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let (db, protos) = write_fixtures(dir.path());

    let spec = dir.path().join("spec.txt");
    std::fs::write(&spec, spec_lines).unwrap();
    let corpus = dir.path().join("corpus");
    let out = spitgate(&[
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--spec",
        spec.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "synth failed: {out:?}");

    // calibration corpus: genuine calls only
    let cal_spec = dir.path().join("cal.txt");
    std::fs::write(&cal_spec, "genuine|101\ngenuine|102\ngenuine|103\n").unwrap();
    let cal_corpus = dir.path().join("cal");
    let out = spitgate(&[
        "synth",
        "--out",
        cal_corpus.to_str().unwrap(),
        "--spec",
        cal_spec.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "cal synth failed: {out:?}");
    let out = spitgate(&[
        "calibrate",
        "--corpus",
        cal_corpus.to_str().unwrap(),
        "--prototypes",
        &protos,
        "--write",
    ]);
    assert!(out.status.success(), "calibrate failed: {out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("scale|"));

    let pcap = std::fs::read_dir(&corpus)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| p.extension().is_some_and(|e| e == "pcap"))
        .unwrap();
    let out = spitgate(&[
        "analyze",
        "--capture",
        pcap.to_str().unwrap(),
        "--db",
        &db,
        "--prototypes",
        &protos,
    ]);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).to_string(),
    )
}

#[test]
fn analyze_genuine_exits_zero() {
    let (code, stdout) = synth_and_analyze("genuine|1\n");
    assert_eq!(code, 0, "stdout:\n{stdout}");
    assert!(stdout.contains("genuine"));
}

#[test]
fn analyze_spam_exits_three() {
    let (code, stdout) = synth_and_analyze("spam_signaling|5\n");
    assert_eq!(code, 3, "stdout:\n{stdout}");
    assert!(stdout.contains("spam"));
}

#[test]
fn silent_spam_caught_at_layer_two() {
    let (code, stdout) = synth_and_analyze("spam_silent|9\n");
    assert_eq!(code, 3, "stdout:\n{stdout}");
}

#[test]
fn usage_error_exits_two() {
    let out = spitgate(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn version_prints_semver() {
    let out = spitgate(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let version = text.trim().rsplit(' ').next().unwrap();
    assert_eq!(version.split('.').count(), 3, "not semver: {text}");
}

#[test]
fn db_roundtrip_with_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.txt");
    std::fs::write(&db, "from_user|exact|anonymous\n").unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_spitgate"))
        .env("SPITGATE_DB", &db)
        .args(["db", "add", "subject", "substring", "free minutes"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");

    let out = Command::new(env!("CARGO_BIN_EXE_spitgate"))
        .env("SPITGATE_DB", &db)
        .args(["db", "list"])
        .output()
        .unwrap();
    let listing = String::from_utf8_lossy(&out.stdout);
    assert!(listing.contains("from_user|exact|anonymous"));
    assert!(listing.contains("subject|substring|free minutes"));

    let out = Command::new(env!("CARGO_BIN_EXE_spitgate"))
        .env("SPITGATE_DB", &db)
        .args(["db", "remove", "subject", "substring", "free minutes"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(&db).unwrap();
    assert!(!text.contains("free minutes"));
}

#[test]
fn features_prints_one_line_per_call() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    std::fs::write(&spec, "genuine|1\nspam_silent|2\n").unwrap();
    let corpus = dir.path().join("corpus");
    let out = spitgate(&[
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--spec",
        spec.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for entry in std::fs::read_dir(&corpus).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "pcap") {
            continue;
        }
        let out = spitgate(&["features", "--capture", path.to_str().unwrap()]);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1, "expected one call in {path:?}");
        assert_eq!(lines[0].split('\t').count(), 8);
    }
}
