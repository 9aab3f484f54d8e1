use std::fs;
use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phaseret-bench"))
}

fn small_run(out: &std::path::Path, extra: &[&str]) -> std::process::Output {
    bench()
        .args([
            "--n",
            "4",
            "--m",
            "24",
            "--snr-start",
            "0",
            "--snr-stop",
            "40",
            "--snr-step",
            "20",
        ])
        .args(["--trials", "4", "--seed", "3", "--traces"])
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path(), &["--a0-restarts", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let trials = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(
        trials.lines().next().unwrap(),
        "snr_db,trial,status,iters,mse,crlb_trace,final_residual"
    );
    assert_eq!(trials.lines().count(), 1 + 3 * 4);
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(
        agg.lines().next().unwrap(),
        "snr_db,mse,bias_sq,variance,crlb_trace,mean_iters"
    );
    assert_eq!(agg.lines().count(), 4);
    assert!(dir.path().join("aggregate_db.csv").exists());
    for snr in ["0", "20", "40"] {
        assert!(dir.path().join(format!("traces/trace_snr_{snr}.csv")).exists());
    }

    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    for key in [
        "version=",
        "n=4",
        "m=24",
        "trials=4",
        "seed=3",
        "gamma=0.8",
        "a0_opt=",
        "A0=",
        "a0_restarts=3",
    ] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(small_run(a.path(), &["--threads", "1"]).status.success());
    assert!(small_run(b.path(), &["--threads", "2"]).status.success());
    for f in [
        "trials.csv",
        "aggregate.csv",
        "aggregate_db.csv",
        "traces/trace_snr_40.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn redundancy_sets_m() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args([
            "--n",
            "3",
            "--redundancy",
            "6",
            "--snr-start",
            "10",
            "--snr-stop",
            "10",
        ])
        .args(["--trials", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("m=18\n"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--n", "4", "--m", "2"],
        vec!["--n", "4", "--trials", "0"],
        vec!["--n", "4", "--gamma", "1.5"],
        vec!["--n", "4", "--snr-start", "10", "--snr-stop", "0"],
        vec!["--n", "4", "--stop", "sometimes"],
    ] {
        let out = bench().args(&args).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn degenerate_frame_exits_3() {
    // two vectors in C^2 give a projected Fisher matrix of rank at most 2 < 3
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args([
            "--n",
            "2",
            "--m",
            "2",
            "--trials",
            "1",
            "--snr-start",
            "0",
            "--snr-stop",
            "0",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
