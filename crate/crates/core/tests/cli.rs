use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lesionbatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lesionbatch"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    let o = lesionbatch(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["prep", "run", "bench", "project", "pareto"] {
        assert!(stdout(&o).contains(sub));
    }
    assert_eq!(lesionbatch(&["bench", "--bogus"]).status.code(), Some(2));
    assert_eq!(lesionbatch(&[]).status.code(), Some(2));
    assert_eq!(lesionbatch(&["run", "--mode", "v3"]).status.code(), Some(2));
    assert_eq!(lesionbatch(&["project", "--avg", "-1"]).status.code(), Some(2));
}

#[test]
fn bench_simulated_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = lesionbatch(&["bench", "--simulate-only", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let folder = out.lines().find(|l| l.starts_with("Folder Time (31 Images)")).unwrap();
    let cells: Vec<&str> = folder.split_whitespace().skip(4).filter(|c| *c != "s").collect();
    assert_eq!(cells, ["80", "75", "8.65", "1.96"]);
    let avg = out.lines().find(|l| l.starts_with("Avg Time per Image")).unwrap();
    let cells: Vec<&str> = avg.split_whitespace().skip(4).filter(|c| *c != "s").collect();
    assert_eq!(cells, ["2.58", "2.42", "0.28", "0.06"]);
    assert!(out.contains("6450.0 s"));
    assert!(out.contains("150.0 s"));
    assert!(out.contains("computed ratio 43x vs claimed 40x"));

    let report = fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    assert_eq!(report.lines().count(), 5);
    assert!(dir.path().join("pareto.tsv").exists());
    assert!(!dir.path().join("measured.tsv").exists());
}

#[test]
fn bench_single_mode_has_self_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let o = lesionbatch(&["bench", "--simulate-only", "--mode", "v2-singleton-batch", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    assert!(report.contains("v2-singleton-batch"));
    assert!(!report.contains("rpa-uipath-emulated"));
    assert!(!stdout(&o).contains("uipath / v2"));
}

#[test]
fn bench_projection_at_workload_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = lesionbatch(&[
        "bench", "--simulate-only", "--n", "2500", "--mode", "rpa-uipath-emulated,v2-singleton-batch",
        "--out", p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Folder Time (2500 Images)"));
    // load 0.4 + 79 batches x 0.01 + 2500 x 0.05
    assert!(out.contains("126.19 s"), "{out}");
    assert!(out.contains("2500 images × 2.58 s/image = 6450.0 s"), "{out}");
    assert!(out.contains("2500 images × 0.05 s/image = 125.0 s"), "{out}");
}

#[test]
fn project_defaults_and_explicit_averages() {
    let o = lesionbatch(&["project"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("2500 images × 2.58 s/image = 6450.0 s (107.5 min, 1.8 h)"), "{out}");
    assert!(out.contains("2500 images × 0.06 s/image = 150.0 s (2.5 min, 0.0 h)"));
    assert!(out.contains("computed ratio 43x vs claimed 40x"));

    let o = lesionbatch(&["project", "--avg", "1.5", "--n", "10"]);
    assert_eq!(stdout(&o).trim(), "10 images × 1.5 s/image = 15.0 s (0.2 min, 0.0 h)");
}

#[test]
fn pareto_lists_four_points() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sub/pareto.tsv");
    let o = lesionbatch(&["pareto", "--out", p(&file)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);
    assert_eq!(fs::read_to_string(file).unwrap(), stdout(&o));
}

#[test]
fn prep_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = lesionbatch(&["prep", "--counts", "0", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("manifest.tsv")).unwrap().lines().count(), 1);

    let o = lesionbatch(&["prep", "--counts", "OPMD-1=20", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = fs::read_to_string(dir.path().join("manifest.tsv")).unwrap();
    // 14/3/3 split; 14 train oversampled to 200, then 5 augmentations each
    assert_eq!(manifest.lines().count(), 1 + 200 * 6 + 6);

    let o = lesionbatch(&["prep", "--counts", "Nope-9=3", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Nope-9"));
}

#[test]
fn run_on_empty_and_unwritable_workspaces() {
    let root = tempfile::tempdir().unwrap();
    fs::create_dir_all(root.path().join("input")).unwrap();
    let o = lesionbatch(&["run", "--out", p(root.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(root.path().join("logs").is_dir());

    fs::remove_dir_all(root.path().join("processed")).unwrap();
    fs::write(root.path().join("processed"), "").unwrap();
    let o = lesionbatch(&["run", "--out", p(root.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("DirUnwritable"), "{}", stderr(&o));
}

#[test]
fn run_reports_dead_letters() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("input");
    fs::create_dir_all(&input).unwrap();
    fs::write(input.join("bad.png"), "nope").unwrap();
    let o = lesionbatch(&["run", "--out", p(root.path())]);
    assert_eq!(o.status.code(), Some(1));
    fs::rename(root.path().join("failed/bad.png"), input.join("bad.png")).unwrap();
    let o = lesionbatch(&["run", "--out", p(root.path()), "--allow-failures"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(root.path().join("failed/bad.png").exists());
}

#[test]
fn config_file_is_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "batchsize = 4\n").unwrap();
    let o = lesionbatch(&["--config", p(&cfg), "pareto"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("batchsize"));

    fs::write(&cfg, "preset = \"overhead-78\"\n").unwrap();
    let o = lesionbatch(&["--config", p(&cfg), "bench", "--simulate-only", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("preset overhead-78"));
}
