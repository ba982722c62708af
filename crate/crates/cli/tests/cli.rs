use std::path::Path;
use std::process::Command;

use confine::builtin::resolve;
use confine::scenario::{ConfigError, Scenario};
use confine::{run, RunError, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_confine"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn csv_bodies(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

#[test]
fn list_scenarios_names_every_builtin() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, _) in confine::builtin::BUILTIN {
        assert!(text.contains(name), "{name} missing from listing");
    }
}

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "min.toml", "name = \"min\"\nkind = \"veff-extract\"\nlambda = [1e3, 1e4, 1e5]\n");
    let out = bin().args(["validate", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("hbar = [1.0]"), "{text}");
    assert!(text.contains("n_s = 128") && text.contains("n_r = 96"), "{text}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(
        dir.path(),
        "typo.toml",
        "name = \"t\"\nkind = \"veff-extract\"\nlambda = [1e3, 1e4, 1e5]\n[confinment]\nomega0 = [1.0]\n",
    );
    let out = bin().args(["validate", &typo]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("did you mean `confinement`"), "{err}");

    let out = bin().args(["run", &typo, "--out"]).arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let missing = bin().args(["run", "no-such-scenario"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn parse_error_reports_line() {
    let text = "name = \"p\"\nkind = \"wkb-gap\"\n\nhbar = [0.5 1.0]\n";
    match Scenario::parse(text) {
        Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn coarse_grid_fails_the_convergence_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "coarse.toml",
        "name = \"coarse\"\nkind = \"veff-extract\"\nlambda = [1e4, 1e5, 1e6]\n\
         [curve]\nshape = \"ellipse\"\na = 1.2\nb = 0.8\n[grid]\nn_s = 16\nn_r = 32\n",
    );
    let sc = resolve(&path).unwrap();
    let err = run(
        &sc,
        &RunOptions {
            out: dir.path().join("out"),
            seed: None,
            threads: 1,
        },
    )
    .unwrap_err();
    assert!(matches!(
        err,
        RunError::Module {
            source: confine_core::Error::InsufficientResolution { .. },
            ..
        }
    ));
    assert_eq!(err.exit_code(), 1);

    let out = bin().args(["run", &path, "--out"]).arg(dir.path().join("cli")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tolerance_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "strict.toml",
        "name = \"strict\"\nkind = \"wkb-gap\"\nhbar = [0.25, 0.5, 1.0]\n\
         [well]\nquartic = 0.05\n[wkb]\nn_grid = 400\n[tolerance]\nslope_min = 2.1\n",
    );
    let out = bin().args(["run", &path, "--out"]).arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("result: FAIL"));
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let sc = resolve("decoupling-hardwall").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for (i, threads) in [1usize, 4, 4].into_iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let report = run(
            &sc,
            &RunOptions {
                out: out.clone(),
                seed: Some(7),
                threads,
            },
        )
        .unwrap();
        assert!(report.passed());
        bodies.push(csv_bodies(&out));
    }
    assert!(!bodies[0].is_empty());
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);
}

#[test]
fn csv_carries_meta_header_and_report_hash() {
    let sc = resolve("sphere-direct").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run(
        &sc,
        &RunOptions {
            out: dir.path().to_path_buf(),
            seed: None,
            threads: 1,
        },
    )
    .unwrap();
    let text = std::fs::read_to_string(dir.path().join("spectra.csv")).unwrap();
    let meta: Vec<&str> = text.lines().take_while(|l| l.starts_with("# meta: ")).collect();
    assert!(meta.iter().any(|l| l.starts_with("# meta: hbar=")));
    assert!(meta.iter().any(|l| l.contains(&report.hash)));
    assert_eq!(text.lines().nth(meta.len()), Some("hbar,alpha,level,energy"));
    assert_eq!(report.hash.len(), 64);

    let mut reseeded = sc.clone();
    reseeded.seed = 99;
    let other = run(
        &reseeded,
        &RunOptions {
            out: dir.path().join("b"),
            seed: None,
            threads: 1,
        },
    )
    .unwrap();
    assert_ne!(other.hash, report.hash);
    assert!(std::fs::read_to_string(&report.report_path).unwrap().contains("result: PASS"));
}
