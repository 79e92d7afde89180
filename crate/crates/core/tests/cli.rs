use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn btlcheck(args: &[&str], dir: &Path, stdin: Option<&[u8]>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_btlcheck"))
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    input.write_all(stdin.unwrap_or_default()).unwrap();
    drop(input);
    child.wait_with_output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn field(report: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    report.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no `{key}` in\n{report}")).parse().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_eq!(code(&btlcheck(&["--help"], root, None)), 0);
    assert_eq!(code(&btlcheck(&["--version"], root, None)), 0);
    assert_eq!(code(&btlcheck(&["frobnicate"], root, None)), 1);
    assert_eq!(code(&btlcheck(&["test", "missing.csv"], root, None)), 1);

    let bad = b"home,away,winner\nA,B,C\n";
    let out = btlcheck(&["test", "-"], root, Some(bad));
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let btl = btlcheck(&["generate", "btl", "--n", "8", "--k", "20", "--seed", "3"], root, None);
    assert_eq!(code(&btl), 0);
    let h0 = btlcheck(&["test", "-", "--seed", "1"], root, Some(&btl.stdout));
    assert_eq!(code(&h0), 0, "{}", String::from_utf8_lossy(&h0.stdout));

    let skewed = btlcheck(&["generate", "margin", "--n", "20", "--k", "20", "--delta", "0.3", "--seed", "3"], root, None);
    let h1 = btlcheck(&["test", "-", "--seed", "1"], root, Some(&skewed.stdout));
    assert_eq!(code(&h1), 2, "{}", String::from_utf8_lossy(&h1.stdout));
    assert!(String::from_utf8_lossy(&h1.stdout).contains("decision=H1"));
}

#[test]
fn repeated_test_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_eq!(code(&btlcheck(&["generate", "cyclic", "--n", "6", "--k", "8", "--seed", "5", "--output", "matches.csv"], root, None)), 0);
    let args = ["test", "matches.csv", "--threshold", "permutation", "--seed", "7"];
    let a = btlcheck(&args, root, None);
    let b = btlcheck(&args, root, None);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn lower_bound_pipeline_detects_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut detections = 0;
    for s in 0..100u64 {
        let seed = s.to_string();
        let data = btlcheck(&["generate", "lower-bound", "--n", "64", "--eta", "0.25", "--k", "12", "--seed", &seed], root, None);
        assert_eq!(code(&data), 0);
        let out = btlcheck(&["test", "--threshold", "quantile", "--seed", &seed], root, Some(&data.stdout));
        match code(&out) {
            2 => detections += 1,
            0 => {}
            c => panic!("exit {c}: {}", String::from_utf8_lossy(&out.stderr)),
        }
    }
    println!("lower-bound pipeline: H1 on {detections}/100 seeds");
    assert!(detections >= 90, "H1 on {detections}/100 seeds");
}

#[test]
fn diagnose_btl_data_has_small_separation() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let data = btlcheck(&["generate", "btl", "--n", "6", "--k", "10000", "--seed", "2", "--what", "aggregated"], root, None);
    assert_eq!(code(&data), 0);
    let out = btlcheck(&["diagnose"], root, Some(&data.stdout));
    assert_eq!(code(&out), 0);
    let report = String::from_utf8(out.stdout).unwrap();
    let eps = field(&report, "eps_hat");
    assert!(eps < 0.02, "eps_hat {eps}");
    assert!(field(&report, "sigma2") < 1.0);
}

#[test]
fn simulate_writes_requested_output() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("stab.spec"), "kind = stability_decay\nn = 100, 50, 30\noutput = stab.csv\n").unwrap();
    assert_eq!(code(&btlcheck(&["simulate", "stab.spec"], root, None)), 0);
    let csv = std::fs::read_to_string(root.join("stab.csv")).unwrap();
    assert!(csv.starts_with("n,D,"));
    assert!(csv.contains("# skipped n=30"));
    std::fs::write(root.join("bad.spec"), "kind = stability_decay\nwhat = 1\n").unwrap();
    assert_eq!(code(&btlcheck(&["simulate", "bad.spec"], root, None)), 1);
}
