use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use fbx::cli::{read_manifest, MANIFEST_FILE, SOLUTION_FILE};
use fbx::{build_grid, DomainSpec, ScalarField};

const HALFPLANE: &str = "[domain]\nR = 1\nh = 1/32\npreset = halfplane_trace\n[energy]\np = 0.5\n\
                         [analysis]\ngrowth_centers = 0 0\n[output]\ndir = out\n";

fn fbx(args: &[&Path], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fbx"));
    cmd.args(args).env_remove("FBX_THREADS");
    if let Some(t) = threads {
        cmd.env("FBX_THREADS", t);
    }
    cmd.output().expect("fbx runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_report_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.ini", HALFPLANE);
    let out = fbx(&[Path::new("solve"), &config], Some("2"));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let manifest = dir.path().join("out").join(MANIFEST_FILE);
    let m = read_manifest(&manifest).unwrap();
    assert!(m.success);
    for f in &m.files {
        assert!(dir.path().join("out").join(&f.name).exists(), "{}", f.name);
    }
    let rep = fbx(&[Path::new("report"), &manifest], None);
    assert_eq!(code(&rep), 0);
    assert!(String::from_utf8_lossy(&rep.stdout).contains(SOLUTION_FILE));

    let again = write(dir.path(), "again.ini", &HALFPLANE.replace("dir = out", "dir = again"));
    let field = dir.path().join("out").join(SOLUTION_FILE);
    let out = fbx(&[Path::new("analyze"), &again, &field], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let summary = dir.path().join("out").join("summary.json");
    let mut bytes = fs::read(&summary).unwrap();
    bytes.push(b' ');
    fs::write(&summary, bytes).unwrap();
    let rep = fbx(&[Path::new("report"), &manifest], None);
    assert_eq!(code(&rep), 3);
    assert!(String::from_utf8_lossy(&rep.stdout).contains("hash mismatch"));
}

#[test]
fn config_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.ini", &HALFPLANE.replace("p = 0.5", "p = 0.5\nq = 1"));
    let out = fbx(&[Path::new("solve"), &bad], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":7:"));

    let ok = write(dir.path(), "ok.ini", HALFPLANE);
    assert_eq!(code(&fbx(&[Path::new("solve"), &ok], Some("zero"))), 2);
    assert_eq!(code(&fbx(&[Path::new("solve"), &dir.path().join("missing.ini")], None)), 2);

    let junk = write(dir.path(), "junk.fbfield", "not a field");
    assert_eq!(code(&fbx(&[Path::new("analyze"), &ok, &junk], None)), 2);

    let coarse = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 16.0)).unwrap());
    let other = dir.path().join("coarse.fbfield");
    fs::write(&other, ScalarField::zeros(coarse).to_bytes()).unwrap();
    assert_eq!(code(&fbx(&[Path::new("analyze"), &ok, &other], None)), 2);
}

#[test]
fn failed_checks_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "zero.ini",
        "[domain]\nR = 1\nh = 1/16\npreset = zero\n[energy]\np = 0.5\n[analysis]\nnondeg_centers = 0.5 0\n[output]\ndir = out\n",
    );
    let out = fbx(&[Path::new("solve"), &config], None);
    assert_eq!(code(&out), 3);
    let m = read_manifest(&dir.path().join("out").join(MANIFEST_FILE)).unwrap();
    assert!(!m.success);
    assert!(m.failed_stages().any(|s| s.stage.starts_with("nondeg")));
}

#[test]
fn sweep_writes_one_run_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.ini", HALFPLANE);
    let out = Command::new(env!("CARGO_BIN_EXE_fbx"))
        .args(["sweep".as_ref(), config.as_os_str(), "--param".as_ref(), "p=0.3,0.7".as_ref()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for v in ["0.3", "0.7"] {
        let m = read_manifest(&dir.path().join("out").join(format!("p={v}")).join(MANIFEST_FILE)).unwrap();
        assert!((m.config.energy.p - v.parse::<f64>().unwrap()).abs() < 1e-15);
    }
}
