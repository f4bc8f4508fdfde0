mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use xrv::index::read_index;
use xrv::io::{read_image, read_volume};
use xrv::projection::project_y;

fn xrv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xrv")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = xrv(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty(), "data must not go to stdout");
}

fn phantom(dir: &Path, seed: u64, name: &str) {
    ok(dir, &["phantom", "--seed", &seed.to_string(), "--dims", "64", "64", "64", "--ellipsoids", "6", "--out", name]);
}

#[test]
fn phantom_is_reproducible_and_matches_library() {
    let t = tempfile::tempdir().unwrap();
    phantom(t.path(), 7, "a.xrv");
    phantom(t.path(), 7, "b.xrv");
    let a = fs::read(t.path().join("a.xrv")).unwrap();
    assert_eq!(a, fs::read(t.path().join("b.xrv")).unwrap());
    let v = read_volume(a.as_slice()).unwrap();
    assert_eq!(v, xrv::eval::gen_phantom(7, [64, 64, 64], 6).unwrap());
}

#[test]
fn validation_failures_exit_2_and_write_nothing() {
    let t = tempfile::tempdir().unwrap();
    phantom(t.path(), 1, "a.xrv");
    let out = xrv(t.path(), &["downsample", "--input", "a.xrv", "--factor", "3", "--out", "d.xrv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not divide"));
    assert!(!t.path().join("d.xrv").exists());

    let out = xrv(t.path(), &["phantom", "--dims", "4", "64", "64", "--out", "p.xrv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!t.path().join("p.xrv").exists());

    assert_eq!(xrv(t.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(xrv(t.path(), &["project", "--input", "a.xrv"]).status.code(), Some(2));

    fs::write(t.path().join("bad.cfg"), "wobble = 1\n").unwrap();
    let out = xrv(t.path(), &["--config", "bad.cfg", "project", "--input", "a.xrv", "--out", "p.xri"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!t.path().join("p.xri").exists());
}

#[test]
fn runtime_failures_exit_1() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("junk.xrv"), b"NOPE0000").unwrap();
    assert_eq!(xrv(t.path(), &["project", "--input", "junk.xrv", "--out", "p.xri"]).status.code(), Some(1));
    assert_eq!(xrv(t.path(), &["project", "--input", "missing.xrv", "--out", "p.xri"]).status.code(), Some(1));
    assert!(!t.path().join("p.xri").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let t = tempfile::tempdir().unwrap();
    phantom(t.path(), 2, "a.xrv");
    fs::write(t.path().join("run.cfg"), "# build settings\npatch = 4\nstride = 2\nk = 3\n").unwrap();
    ok(t.path(), &["--config", "run.cfg", "build-db", "--inputs", "a.xrv", "--stride", "3", "--out", "db.xrd"]);
    let db = read_index(fs::read(t.path().join("db.xrd")).unwrap().as_slice()).unwrap();
    let spec = db.spec();
    assert_eq!((spec.patch, spec.stride, spec.k, spec.height), (4, 3, 3, 4));
}

#[test]
fn project_scout_and_pgm_exports() {
    let t = tempfile::tempdir().unwrap();
    phantom(t.path(), 3, "a.xrv");
    ok(t.path(), &["project", "--input", "a.xrv", "--out", "a.xri"]);
    let v = read_volume(fs::read(t.path().join("a.xrv")).unwrap().as_slice()).unwrap();
    let img = read_image(fs::read(t.path().join("a.xri")).unwrap().as_slice()).unwrap();
    let want: Vec<f64> = project_y(&v).data().iter().map(|&p| p as f32 as f64).collect();
    assert_eq!(img.data(), want.as_slice());

    ok(t.path(), &["scout", "--input", "a.xri", "--factor", "4", "--out", "s.xri"]);
    let s = read_image(fs::read(t.path().join("s.xri")).unwrap().as_slice()).unwrap();
    assert_eq!(s.dims(), [16, 16]);

    ok(t.path(), &["downsample", "--input", "a.xrv", "--factor", "16", "--out", "d.xrv"]);
    ok(t.path(), &["export-pgm", "--input", "d.xrv", "--lo", "0", "--hi", "1000", "--out", "slices/d.pgm"]);
    for y in 0..4 {
        let pgm = fs::read(t.path().join(format!("slices/d_y{y}.pgm"))).unwrap();
        assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
        assert_eq!(pgm.len(), 13 + 64 * 64);
    }
    ok(t.path(), &["export-pgm", "--input", "a.xri", "--lo", "-10", "--hi", "900", "--out", "a.pgm"]);
    let out = xrv(t.path(), &["export-pgm", "--input", "a.xri", "--lo", "5", "--hi", "5", "--out", "z.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!t.path().join("z.pgm").exists());
}

#[test]
fn end_to_end_pipeline_matches_study_golden() {
    let t = tempfile::tempdir().unwrap();
    let dir = t.path();
    let train: Vec<String> = TRAIN_SEEDS.iter().map(|s| format!("train_{s}.xrv")).collect();
    let test: Vec<String> = TEST_SEEDS.iter().map(|s| format!("test_{s}.xrv")).collect();
    for (s, name) in TRAIN_SEEDS.iter().zip(&train).chain(TEST_SEEDS.iter().zip(&test)) {
        phantom(dir, *s, name);
    }

    let mut args = vec!["build-db", "--out", "db.xrd", "--inputs"];
    args.extend(train.iter().map(String::as_str));
    ok(dir, &args);
    ok(dir, &["project", "--input", &test[0], "--out", "test.xri"]);

    let vox = ["voxelize", "--input", "test.xri", "--db", "db.xrd", "--modes", "3", "--enforce", "true"];
    ok(dir, &[&vox[..], &["--out-dir", "run1"]].concat());
    ok(dir, &[&vox[..], &["--out-dir", "run2"]].concat());
    let img = read_image(fs::read(dir.join("test.xri")).unwrap().as_slice()).unwrap();
    let diag = fs::read_to_string(dir.join("run1/diagnostics.txt")).unwrap();
    assert!(diag.contains("modes = 3") && diag.contains("[mode_0]"));
    assert_eq!(diag, fs::read_to_string(dir.join("run2/diagnostics.txt")).unwrap());
    let mut j = 0;
    while dir.join(format!("run1/mode_{j}.xrv")).exists() {
        let a = fs::read(dir.join(format!("run1/mode_{j}.xrv"))).unwrap();
        assert_eq!(a, fs::read(dir.join(format!("run2/mode_{j}.xrv"))).unwrap());
        let v = read_volume(a.as_slice()).unwrap();
        assert_eq!(v.dims(), [64, 4, 64]);
        // The f32 container rounds intensities near 1000 by up to ~3e-5.
        assert!(xrv::projection::projection_residual(&v, &img).unwrap() <= 1e-3);
        j += 1;
    }
    assert!((1..=3).contains(&j));

    ok(dir, &["modes", "--input", "test.xri", "--db", "db.xrd", "--modes", "3", "--out", "modes.txt"]);
    let modes = fs::read_to_string(dir.join("modes.txt")).unwrap();
    assert_eq!(modes.lines().count(), j + 1);

    let mut args = vec!["evaluate", "--heights", "2", "4", "8", "--out", "report.csv", "--train"];
    args.extend(train.iter().map(String::as_str));
    args.push("--test");
    args.extend(test.iter().map(String::as_str));
    ok(dir, &args);
    let golden: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests/golden/study_8x3_64.csv"].iter().collect();
    assert_eq!(fs::read(dir.join("report.csv")).unwrap(), fs::read(golden).unwrap());
}
