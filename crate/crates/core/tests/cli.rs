use std::path::Path;
use std::process::{Command, Output};

fn amrmul(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amrmul"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn cells_design_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let o = amrmul(d, &["cells", "--out", "cells.json"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("FA_PN2 inputs=PPN mean=-1/2"));

    let o = amrmul(
        d,
        &[
            "design",
            "--digits",
            "2",
            "--border",
            "8",
            "--library",
            "cells.json",
            "--out",
            "d.json",
            "--stats-out",
            "stats.csv",
            "--format",
            "csv",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let stats = std::fs::read_to_string(d.join("stats.csv")).unwrap();
    assert!(stats.starts_with("# amrmul.stats/v1\n"));

    let o = amrmul(
        d,
        &[
            "eval",
            "--design",
            "d.json",
            "--samples",
            "5000",
            "--seed",
            "9",
            "--out",
            "r.csv",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.starts_with("config {"));
    assert!(out.contains("\"library_digest\""));
    let report = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(report.contains("\nsamples,5000\n"));
    assert!(report.contains("\nseed,9\n"));
    let hist = std::fs::read_to_string(d.join("r_hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 203);

    let o = amrmul(
        d,
        &[
            "eval",
            "--digits",
            "2",
            "--border",
            "8",
            "--samples",
            "5000",
            "--seed",
            "9",
            "--workers",
            "2",
            "--out",
            "again.csv",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let again = std::fs::read_to_string(d.join("again.csv")).unwrap();
    assert_eq!(again, report);
}

#[test]
fn json_report_and_exhaustive_mode() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = amrmul(
        d,
        &[
            "eval",
            "--digits",
            "1",
            "--border",
            "4",
            "--exhaustive",
            "--format",
            "json",
            "--out",
            "r.json",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], "amrmul.report/v1");
    assert_eq!(v["report"]["samples"], 1024);
    assert_eq!(v["report"]["mode"], "exhaustive");

    let o = amrmul(
        d,
        &["eval", "--digits", "2", "--border", "4", "--exhaustive"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn sweep_writes_a_metric_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = amrmul(
        dir.path(),
        &[
            "sweep",
            "--digits",
            "2",
            "--borders",
            "6..8",
            "--samples",
            "2000",
            "--out",
            "s.csv",
        ],
    );
    assert!(o.status.success(), "{o:?}");
    let table = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "# amrmul.sweep/v1");
    assert_eq!(lines[1], "digits,metric,b6,b7,b8");
    assert!(lines[3].starts_with("2,MARED,"));
}

#[test]
fn invalid_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = amrmul(d, &["design", "--digits", "2", "--border", "40"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("border"));

    std::fs::write(
        d.join("bad.json"),
        "{\"schema\": \"amrmul.cells/v9\", \"cells\": []}",
    )
    .unwrap();
    let o = amrmul(
        d,
        &[
            "design",
            "--digits",
            "2",
            "--border",
            "6",
            "--library",
            "bad.json",
        ],
    );
    assert_eq!(o.status.code(), Some(2));

    let o = amrmul(d, &["eval", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tampered_library_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(amrmul(d, &["cells", "--out", "cells.json"])
        .status
        .success());
    let text = std::fs::read_to_string(d.join("cells.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["cells"][0]["mean_error"] = "1/2".into();
    std::fs::write(d.join("cells.json"), v.to_string()).unwrap();
    let o = amrmul(d, &["verify", "--library", "cells.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("declared mean error"));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = amrmul(dir.path(), &["verify"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    for suite in ["cells", "exactness", "search", "bounds"] {
        assert!(out.contains(&format!("PASS {suite} ")), "{out}");
    }
}
