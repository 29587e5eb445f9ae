use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ssf_core::csv::CsvTable;
use ssf_lab::output::RunManifest;

fn ssf_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssf-lab")).args(args).output().unwrap()
}

fn run_dir(out: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const ZERO_1D: &str = "[domain]\ndim = 1\nside_length = 6.0\nspacing = 0.0625\n\n[experiment]\nn_energies = 50\n";

const SMALL_MC: &str = "[domain]\ndim = 1\nside_length = 6.0\nspacing = 0.0625\n\n\
[perturbation]\nkind = \"square_bump\"\namplitude = 10.0\nsupport_radius = 0.5\n\n\
[experiment]\nhorizons = [0.5, 1.0]\n\n[mc]\nn_paths = 4000\nn_steps = 64\nmaster_seed = 3\n";

#[test]
fn selftest_passes_without_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ssf_lab(&["selftest", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = CsvTable::parse(&std::fs::read_to_string(run_dir(&out).join("selftest.csv")).unwrap()).unwrap();
    assert!(table.rows.len() > 20);
    assert!(table.rows.iter().all(|r| r[1] == "true"));
}

#[test]
fn ssf_scan_with_zero_perturbation_is_all_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "zero.toml", ZERO_1D);
    let out = ssf_lab(&[
        "ssf-scan",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("runs").to_str().unwrap(),
        "--emit-svg",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let dir = run_dir(&out);
    let table = CsvTable::parse(&std::fs::read_to_string(dir.join("ssf.csv")).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 50);
    assert!(table.column_f64("xi_L").unwrap().iter().all(|&v| v == 0.0));
    assert!(dir.join("ssf.svg").exists());
}

#[test]
fn config_errors_exit_2_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    let bad = write(tmp.path(), "bad.toml", "[domain]\ndim = 7\n");
    let unknown = write(tmp.path(), "unknown.toml", "[domain]\ndim = 1\ncolour = 3\n");
    let kirsch_1d = write(tmp.path(), "k.toml", ZERO_1D);
    for args in [
        vec!["ssf-scan", "--config", bad.as_str()],
        vec!["ssf-scan", "--config", unknown.as_str()],
        vec!["vague"],
        vec!["bs-check", "--config", "/nonexistent/config.toml"],
        vec!["kirsch", "--config", kirsch_1d.as_str()],
    ] {
        let mut args = args.clone();
        args.extend(["--out", runs.to_str().unwrap()]);
        let out = ssf_lab(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!runs.exists(), "{args:?} wrote output");
    }
}

#[test]
fn bs_check_on_standard_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/standard_1d.toml");
    let out = ssf_lab(&["bs-check", "--config", cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(run_dir(&out).join("bs_check.csv")).unwrap();
    let diff: f64 = text.lines().last().unwrap().trim_end_matches(',').parse().unwrap();
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn manifest_snapshot_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mc.toml", SMALL_MC);
    let first = ssf_lab(&[
        "laplace-mc",
        "--config",
        &cfg,
        "--seed",
        "99",
        "--out",
        tmp.path().join("a").to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let dir = run_dir(&first);
    let manifest = RunManifest::from_toml(&std::fs::read_to_string(dir.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest.config_snapshot, SMALL_MC);
    assert_eq!(manifest.master_seed, 99);
    assert_eq!(manifest.subcommand, "laplace-mc");
    assert!(manifest.outputs.contains(&"laplace_mc.csv".to_string()));
    assert!(manifest.notes.iter().any(|n| n.contains("truncation bound")));

    let replay = write(tmp.path(), "replay.toml", &manifest.config_snapshot);
    let seed = manifest.master_seed.to_string();
    let second = ssf_lab(&[
        "laplace-mc",
        "--config",
        &replay,
        "--seed",
        &seed,
        "--out",
        tmp.path().join("b").to_str().unwrap(),
    ]);
    assert!(second.status.success());
    let other = run_dir(&second);
    for file in ["laplace_mc.csv", "laplace_spectral.csv"] {
        assert_eq!(
            std::fs::read(dir.join(file)).unwrap(),
            std::fs::read(other.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn repeated_runs_get_distinct_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "zero.toml", ZERO_1D);
    let dirs: Vec<PathBuf> = (0..3)
        .map(|_| {
            run_dir(&ssf_lab(&[
                "ssf-scan",
                "--config",
                &cfg,
                "--out",
                tmp.path().to_str().unwrap(),
            ]))
        })
        .collect();
    assert!(dirs[0] != dirs[1] && dirs[1] != dirs[2] && dirs[0] != dirs[2]);
}
