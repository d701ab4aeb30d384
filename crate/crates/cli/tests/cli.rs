use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn feeder() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/feeder4.toml").canonicalize().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("cfg.toml");
    let text = format!(
        "grid = {:?}\nseeds = [0, 1, 2]\nepochs = 2\ndataset_size = 64\nartifacts = false\n{extra}",
        feeder().display().to_string()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn qpf_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpf-lab")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

#[test]
fn successful_run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "models = [\"nn\", \"qnn\"]\n");
    let out = dir.path().join("results");
    let run = qpf_lab(&[
        "generalization",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "4,9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));

    let csv = std::fs::read_to_string(out.join("generalization.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("experiment,seed,model"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.contains(",4,") || r.contains(",9,")));
    assert!(out.join("generalization.summary.json").is_file());

    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("generalization.csv") && stdout.contains("generalization.summary.json"));
}

#[test]
fn failed_sub_run_exits_one_but_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "models = [\"nn\"]\nlearning_rate = 1e300\n");
    let out = dir.path().join("results");
    let run = qpf_lab(&["generalization", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    let csv = std::fs::read_to_string(out.join("generalization.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|r| r.contains("failed")));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(qpf_lab(&["no_such_experiment", "--config", cfg]).status.code(), Some(2));
    assert_eq!(qpf_lab(&["generalization", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "grid = \"x.toml\"\nnot_a_field = 1\n").unwrap();
    assert_eq!(qpf_lab(&["generalization", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn relative_paths_resolve_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(feeder(), dir.path().join("grid.toml")).unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "grid = \"grid.toml\"\nout = \"res\"\nseeds = [1]\nepochs = 1\ndataset_size = 64\nmodels = [\"lr\"]\nartifacts = false\n").unwrap();
    let run = qpf_lab(&["pf_table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dir.path().join("res/pf_table.csv").is_file());
}
