use std::path::Path;
use std::process::Command;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/critical_small.toml");

fn fractrans(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fractrans"))
        .args(args)
        .arg("--outdir")
        .arg(out)
        .env_remove("FRACTRANS_JOBS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn only_dir(root: &Path) -> std::path::PathBuf {
    let mut dirs: Vec<_> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

#[test]
fn simulate_critical_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fractrans(&["simulate", "--config", CONFIG, "--set", "solver.t_end=2.0"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = only_dir(tmp.path());
    let csv = std::fs::read_to_string(dir.join("series.csv")).unwrap();
    assert!(csv.starts_with("# schema = fractrans-series/1\n# config_hash = "));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let mp = summary["checks"].as_array().unwrap().iter().find(|c| c["name"] == "max_principle").unwrap();
    assert_eq!(mp["passed"], true);
    assert_eq!(summary["registry_version"], 1);
    let hash = summary["config_hash"].as_str().unwrap();
    assert!(csv.contains(hash));
    assert!(dir.join("registry.json").exists());
}

#[test]
fn verify_operators_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fractrans(&["verify-operators"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 6, "{text}");
}

#[test]
fn bad_alpha_exits_2_naming_alpha() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fractrans(&["simulate", "--config", CONFIG, "--set", "solver.alpha=3"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}

#[test]
fn malformed_file_reports_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "kind = \"simulate\"\n[solver]\nalpha = 1.0\nt_end = 1.0\ncolour = 2\n").unwrap();
    let o = fractrans(&["simulate", "--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("colour") && e.contains("line 5"), "{e}");
}

#[test]
fn empty_sweep_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/supercritical_sweep.toml");
    let o = fractrans(&["blowup-sweep", "--config", sweep, "--set", "sweep.alphas=[]"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn kind_mismatch_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fractrans(&["relaxation-study", "--config", CONFIG], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--config", CONFIG, "--set", "solver.t_end=1.0"];
    assert_eq!(fractrans(&args, a.path()).status.code(), Some(0));
    assert_eq!(fractrans(&args, b.path()).status.code(), Some(0));
    let (da, db) = (only_dir(a.path()), only_dir(b.path()));
    assert_eq!(da.file_name(), db.file_name());
    assert_eq!(
        std::fs::read(da.join("series.csv")).unwrap(),
        std::fs::read(db.join("series.csv")).unwrap()
    );
}
