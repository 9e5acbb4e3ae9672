use std::path::Path;
use std::process::{Command, Output};

fn cdem(args: &[&str], cwd: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_cdem"))
        .args(args)
        .current_dir(cwd)
        .env("CDEM_THREADS", "2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "cdem {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn synth_run_baseline_and_selftest() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("spec.txt"), "n = 80\nseed = 2\n").unwrap();
    cdem(&["synth", "--spec", "spec.txt", "--out", "data"], root);
    for f in ["source.cdm", "source.labels", "target.cdm", "target.labels", "config.txt"] {
        assert!(root.join("data").join(f).exists(), "{f} missing");
    }

    cdem(
        &[
            "run", "--config", "data/config.txt", "--ablation", "erm", "da", "--out", "r1",
            "--dump-matrices", "dump",
        ],
        root,
    );
    let csv = std::fs::read_to_string(root.join("r1/report.csv")).unwrap();
    assert!(csv.starts_with("task,method,accuracy\n"));
    assert!(csv.contains("custom,erm+da,"), "{csv}");
    assert!(root.join("r1/report.json").exists());
    assert!(root.join("dump/iter01_omega.cdm").exists());

    let out = cdem(&["baseline", "--config", "data/config.txt"], root);
    assert!(String::from_utf8_lossy(&out.stdout).contains("source-only"));

    let out = cdem(&["selftest"], root);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 5 && !text.contains("FAIL"), "{text}");
}

#[test]
fn bad_inputs_exit_with_failure() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_cdem"))
        .args(["run", "--config", "missing.txt"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("error"));

    std::fs::write(dir.path().join("c.txt"), "beta = -1\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_cdem"))
        .args(["run", "--config", "c.txt"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!status.status.success());
}
