use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polconv::counts::{read_csv_file, write_csv};
use polconv::report::Report;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn polconv(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polconv"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(output: Output) -> Output {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    output
}

#[test]
fn ideal_closed_loop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("ideal.toml");
    ok(polconv(&["simulate"], &cfg, dir.path()));
    ok(polconv(&["reconstruct-state"], &cfg, dir.path()));
    ok(polconv(&["reconstruct-process"], &cfg, dir.path()));
    ok(polconv(&["chsh"], &cfg, dir.path()));
    for name in ["state_in_report.txt", "state_out_report.txt"] {
        let r = Report::read_file(&dir.path().join(name)).unwrap();
        assert!((r.get_number("raw.fidelity").unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(r.get_text("raw.converged"), Some("true"));
        assert!(r.get_matrix("raw.rho").is_some());
    }
    let p = Report::read_file(&dir.path().join("process_report.txt")).unwrap();
    assert!(p.get_matrix("chi").unwrap()[(0, 0)].re > 1.0 - 1e-6);
    let c = Report::read_file(&dir.path().join("chsh_report.txt")).unwrap();
    assert!((c.get_number("s_value").unwrap() - 8f64.sqrt()).abs() < 1e-9);
}

#[test]
fn explicit_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("ideal.toml");
    ok(polconv(&["simulate"], &cfg, dir.path()));
    let input = dir.path().join("state_out.csv");
    let out = dir.path().join("external");
    ok(polconv(&["reconstruct-state", "--input", input.to_str().unwrap()], &cfg, &out));
    assert!(out.join("state_out_report.txt").exists());
}

#[test]
fn efficiency_report_lists_budget() {
    let dir = tempfile::tempdir().unwrap();
    ok(polconv(&["efficiency"], &config("experiment.toml"), dir.path()));
    let r = Report::read_file(&dir.path().join("efficiency_report.txt")).unwrap();
    assert!((r.get_number("theoretical_efficiency").unwrap() - 0.008).abs() < 1e-4);
    assert!((r.get_number("intrinsic_efficiency").unwrap() - 4.1e-4).abs() < 1e-5);
}

#[test]
fn summary_carries_literature_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("experiment.toml");
    ok(polconv(&["simulate"], &cfg, dir.path()));
    ok(polconv(&["report", "--mc-samples", "5"], &cfg, dir.path()));
    let r = Report::read_file(&dir.path().join("summary.txt")).unwrap();
    for key in ["chsh.s_value", "state_in.raw.fidelity", "state_out.corrected.fidelity", "state_out.corrected.tangle"] {
        assert!(r.get_number(key).is_some(), "{key}");
    }
    assert_eq!(r.get_number("literature.chsh.s_value"), Some(2.615));
    assert_eq!(r.get_number("literature.state_in.raw.fidelity"), Some(0.9591));
    assert_eq!(r.get_number("literature.state_out.corrected.purity"), Some(0.947));
}

#[test]
fn emitted_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("experiment.toml");
    ok(polconv(&["simulate", "--seed", "5"], &cfg, dir.path()));
    ok(polconv(&["reconstruct-state", "--mc-samples", "0"], &cfg, dir.path()));
    for name in ["state_in.csv", "state_out.csv", "process.csv", "chsh.csv"] {
        let path = dir.path().join(name);
        let mut again = Vec::new();
        write_csv(&mut again, &read_csv_file(&path).unwrap()).unwrap();
        assert_eq!(again, std::fs::read(&path).unwrap(), "{name}");
    }
    let text = std::fs::read_to_string(dir.path().join("state_out_report.txt")).unwrap();
    assert_eq!(Report::parse(&text).unwrap().emit(), text);
}

#[test]
fn seed_override_changes_counts() {
    let cfg = config("experiment.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(polconv(&["simulate", "--seed", "1"], &cfg, a.path()));
    ok(polconv(&["simulate", "--seed", "2"], &cfg, b.path()));
    let read = |d: &Path| std::fs::read(d.join("state_out.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn invalid_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("experiment.toml")).unwrap().replace("werner_p = 0.97317", "werner_p = 2.0");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(polconv(&["simulate"], &bad, dir.path()).status.code(), Some(2));
    std::fs::write(&bad, "not = [valid").unwrap();
    assert_eq!(polconv(&["simulate"], &bad, dir.path()).status.code(), Some(2));
}

#[test]
fn missing_input_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(polconv(&["chsh"], &config("experiment.toml"), dir.path()).status.code(), Some(4));
    let missing = dir.path().join("nope.toml");
    assert_eq!(polconv(&["chsh"], &missing, dir.path()).status.code(), Some(4));
}

#[test]
fn non_convergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    let text = std::fs::read_to_string(config("experiment.toml"))
        .unwrap()
        .replace("mc_samples = 100", "mc_samples = 0\nmax_iterations = 2");
    std::fs::write(&cfg, text).unwrap();
    ok(polconv(&["simulate"], &cfg, dir.path()));
    let out = polconv(&["reconstruct-state"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
