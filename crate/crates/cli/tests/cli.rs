use std::path::Path;
use std::process::{Command, Output};

fn prc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PRC_OUT_DIR")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const QUICK: [&str; 4] = ["--stage1-iters", "60", "--stage2-iters", "20"];

fn generate(dir: &Path, out: &str, qubits: &str, depths: &str) {
    let mut args = vec!["generate", "--qubits", qubits, "--depths", depths, "--seed", "42", "--out", out];
    args.extend(QUICK);
    ok(&prc(&args, dir));
}

fn sorted_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_writes_grid_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "a", "2..4", "2..4");
    generate(dir.path(), "b", "2..4", "2..4");
    let a = sorted_files(&dir.path().join("a"));
    assert_eq!(a.len(), 9 + 1);
    assert!(a.iter().any(|(n, _)| n == "suite.json"));
    assert_eq!(a, sorted_files(&dir.path().join("b")));
}

#[test]
fn generate_rejects_bad_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = prc(&["generate", "--qubits", "2..3", "--depths", "1..3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("depth 1"));
    let out = prc(&["generate", "--qubits", "5..2", "--depths", "2..3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = prc(&["generate", "--depths", "2..3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("suite").exists());
}

#[test]
fn generate_uses_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_prc"))
        .args(["generate", "--qubits", "2", "--depths", "2"])
        .args(QUICK)
        .current_dir(dir.path())
        .env("PRC_OUT_DIR", &target)
        .output()
        .unwrap();
    ok(&out);
    assert!(target.join("suite.json").exists());
}

fn write_config(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

#[test]
fn bench_report_and_export_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "suite", "3,4", "2..8");
    let grid = "qubits = [3, 4]\ndepths = [2, 3, 4, 5, 6, 7, 8]\n";
    write_config(d, "clean.toml", &format!("{grid}[shots]\nfixed = 300\n"));
    write_config(
        d,
        "heavy.toml",
        &format!("{grid}[shots]\nfixed = 200\n[noise]\np2 = 0.9\nreadout_epsilon = 0.5\n"),
    );

    let stdout = ok(&prc(&["bench", "--suite", "suite/suite.json", "--config", "clean.toml", "--out", "clean.json"], d));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("n=")).count(), 2);
    let clean_csv = std::fs::read_to_string(d.join("clean.csv")).unwrap();
    assert!(!clean_csv.contains("skipped"));
    assert_eq!(clean_csv.lines().filter(|l| l.contains(",identified,")).count(), 14);

    ok(&prc(&["bench", "--suite", "suite/suite.json", "--config", "heavy.toml", "--out", "heavy.json"], d));
    let heavy_csv = std::fs::read_to_string(d.join("heavy.csv")).unwrap();
    assert!(heavy_csv.contains(",skipped,"), "{heavy_csv}");

    ok(&prc(&["report", "--mode", "heatmap", "clean.json"], d));
    let svg = std::fs::read_to_string(d.join("clean_heatmap.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("class=\"boundary\""));
    assert!(d.join("clean_heatmap.csv").exists());

    ok(&prc(&["report", "--mode", "delta", "heavy.json", "clean.json", "--out", "figs/delta.svg"], d));
    assert!(d.join("figs/delta.svg").exists());
    let delta_csv = std::fs::read_to_string(d.join("figs/delta.csv")).unwrap();
    assert!(delta_csv.starts_with("n,d,delta_f\n"));

    let out = prc(&["report", "--mode", "delta", "clean.json"], d);
    assert_eq!(out.status.code(), Some(2));
    let out = prc(&["report", "--mode", "delta", "clean.json", "heavy.json", "clean.json"], d);
    assert_eq!(out.status.code(), Some(2));

    ok(&prc(&["report", "--mode", "histogram", "clean.json", "--cell", "4,6", "--rep", "2"], d));
    let hist = std::fs::read_to_string(d.join("clean_hist_n4_d6_r2.svg")).unwrap();
    assert!(hist.contains("data-target=\"true\""));
    let out = prc(&["report", "--mode", "histogram", "clean.json"], d);
    assert_eq!(out.status.code(), Some(2));

    ok(&prc(&["export-qasm", "--suite", "suite/suite.json", "--out", "qasm"], d));
    let first = sorted_files(&d.join("qasm"));
    assert_eq!(first.len(), 14 + 1);
    let counts = std::fs::read_to_string(d.join("qasm/gate_counts.csv")).unwrap();
    assert!(counts.starts_with("n,d,file,two_qubit,single_qubit,generic_placements\n"));
    for line in counts.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let cx: usize = f[3].parse().unwrap();
        let generic: usize = f[5].parse().unwrap();
        assert_eq!(cx, 3 * generic, "{line}");
        assert!(f[2].starts_with(&format!("prc_n{}_d{}_s", f[0], f[1])));
    }
    ok(&prc(&["export-qasm", "--suite", "suite/suite.json", "--out", "qasm"], d));
    assert_eq!(sorted_files(&d.join("qasm")), first);
}

#[test]
fn bench_output_ignores_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "suite", "2..4", "2..4");
    write_config(
        d,
        "noisy.toml",
        "qubits = [2, 3, 4]\ndepths = [2, 3, 4]\n[noise]\np2 = 0.03\nreadout_epsilon = 0.02\ncoherent_delta = 0.02\n",
    );
    ok(&prc(&["--jobs", "1", "bench", "--suite", "suite/suite.json", "--config", "noisy.toml", "--out", "one.json"], d));
    ok(&prc(&["bench", "--jobs", "3", "--suite", "suite/suite.json", "--config", "noisy.toml", "--out", "three.json"], d));
    assert_eq!(std::fs::read(d.join("one.json")).unwrap(), std::fs::read(d.join("three.json")).unwrap());
    assert_eq!(prc(&["--jobs", "0", "bench", "--suite", "x", "--config", "y"], d).status.code(), Some(2));
}

#[test]
fn bench_errors_use_stable_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d, "suite", "2..3", "2..3");
    write_config(d, "bad.toml", "qubits = [2,\n");
    let out = prc(&["bench", "--suite", "suite/suite.json", "--config", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.toml"));

    write_config(d, "invalid.toml", "qubits = [2, 3]\ndepths = [2, 3]\nthreshold = 9\n");
    let out = prc(&["bench", "--suite", "suite/suite.json", "--config", "invalid.toml"], d);
    assert_eq!(out.status.code(), Some(2));

    write_config(d, "ok.toml", "qubits = [2, 3]\ndepths = [2, 3]\n");
    std::fs::remove_file(d.join("suite/circuit_n3_d2.json")).unwrap();
    let out = prc(&["bench", "--suite", "suite/suite.json", "--config", "ok.toml", "--out", "m.json"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("n=3, d=2"), "{}", stderr(&out));
    assert!(!d.join("m.json").exists());
}

#[test]
fn export_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = prc(&["export-qasm", "--suite", "missing/suite.json", "--out", "q"], d);
    assert_eq!(out.status.code(), Some(1));

    // A manifest with no entries exports only the header row.
    generate(d, "suite", "2", "2");
    let manifest = std::fs::read_to_string(d.join("suite/suite.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    v["entries"] = serde_json::json!([]);
    std::fs::write(d.join("suite/empty.json"), v.to_string()).unwrap();
    ok(&prc(&["export-qasm", "--suite", "suite/empty.json", "--out", "q"], d));
    assert_eq!(
        std::fs::read_to_string(d.join("q/gate_counts.csv")).unwrap(),
        "n,d,file,two_qubit,single_qubit,generic_placements\n"
    );
}
