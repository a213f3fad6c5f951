//! End-to-end checks of the `beamdt` binary: pipeline composition, exit
//! codes, determinism, and file-format behavior at tiny problem sizes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beamdt"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn beamdt");
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn beamdt");
    assert!(!out.status.success(), "command {args:?} unexpectedly passed");
    out
}

fn p(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

#[test]
fn phantom_simulate_reconstruct_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let truth = p(dir.path(), "truth.bdtg");
    let meas = p(dir.path(), "m.bdtm");
    let rec = p(dir.path(), "rec.bdtg");

    run_ok(&[
        "phantom",
        "--preset",
        "two-inclusion",
        "--M",
        "32",
        "--rs",
        "4",
        "-o",
        &s(&truth),
    ]);
    run_ok(&[
        "simulate",
        "--preset",
        "two-inclusion",
        "--M",
        "32",
        "--D",
        "20",
        "--beam",
        "gaussian",
        "--A",
        "80",
        "-o",
        &s(&meas),
    ]);
    let out = run_ok(&[
        "reconstruct",
        "--meas",
        &s(&meas),
        "--beam",
        "gaussian",
        "--A",
        "80",
        "--N",
        "4",
        "--rs",
        "4",
        "--truth",
        &s(&truth),
        "-o",
        &s(&rec),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("psnr,rmse,ssim"), "metrics line missing: {stdout}");
    assert!(rec.exists());

    let cmp = run_ok(&["compare", "--truth", &s(&truth), "--recon", &s(&rec)]);
    let cmp_out = String::from_utf8_lossy(&cmp.stdout);
    assert!(cmp_out.starts_with("psnr,rmse,ssim\n"));

    // conventional variant runs on the same data (D = 20 divisible by 4)
    let rec2 = p(dir.path(), "rec_conv.bdtg");
    run_ok(&[
        "reconstruct",
        "--meas",
        &s(&meas),
        "--beam",
        "gaussian",
        "--A",
        "80",
        "--conventional",
        "--rs",
        "4",
        "-o",
        &s(&rec2),
    ]);
    assert!(rec2.exists());
}

#[test]
fn simulate_is_deterministic_and_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path, threads: &str| {
        vec![
            "simulate".to_string(),
            "--preset".into(),
            "two-inclusion".into(),
            "--M".into(),
            "24".into(),
            "--D".into(),
            "12".into(),
            "--noise".into(),
            "5".into(),
            "--seed".into(),
            "42".into(),
            "--threads".into(),
            threads.into(),
            "-o".into(),
            s(out),
        ]
    };
    let a = p(dir.path(), "a.bdtm");
    let b = p(dir.path(), "b.bdtm");
    let c = p(dir.path(), "c.bdtm");
    for (path, threads) in [(&a, "1"), (&b, "1"), (&c, "3")] {
        let argv = args(path, threads);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        run_ok(&argv);
    }
    let bytes_a = fs::read(&a).unwrap();
    assert_eq!(bytes_a, fs::read(&b).unwrap(), "same seed must be bit-identical");
    assert_eq!(bytes_a, fs::read(&c).unwrap(), "thread count must not matter");

    // different seed differs
    let d = p(dir.path(), "d.bdtm");
    run_ok(&[
        "simulate",
        "--preset",
        "two-inclusion",
        "--M",
        "24",
        "--D",
        "12",
        "--noise",
        "5",
        "--seed",
        "43",
        "-o",
        &s(&d),
    ]);
    assert_ne!(bytes_a, fs::read(&d).unwrap());
}

#[test]
fn simulate_output_depends_on_beam_width() {
    let dir = tempfile::tempdir().unwrap();
    let a10 = p(dir.path(), "a10.bdtm");
    let a80 = p(dir.path(), "a80.bdtm");
    for (path, a) in [(&a10, "10"), (&a80, "80")] {
        run_ok(&[
            "simulate",
            "--preset",
            "two-inclusion",
            "--M",
            "24",
            "--D",
            "12",
            "--beam",
            "gaussian",
            "--A",
            a,
            "-o",
            &s(path),
        ]);
    }
    assert_ne!(fs::read(&a10).unwrap(), fs::read(&a80).unwrap());
}

#[test]
fn disk_phantom_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "f3.bdtg");
    let run = run_ok(&[
        "phantom",
        "--preset",
        "disk",
        "--d",
        "3",
        "--M",
        "64",
        "--rs",
        "4",
        "-o",
        &s(&out),
    ]);
    assert!(String::from_utf8_lossy(&run.stdout).contains("nonzero pixels"));
    let len = fs::metadata(&out).unwrap().len();
    assert_eq!(len, 17 + 16 * 64 * 64);
}

#[test]
fn phantom_support_violation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "bad.bdtg");
    let err = run_err(&[
        "phantom",
        "--preset",
        "disk",
        "--d",
        "5",
        "--M",
        "32",
        "--rs",
        "4",
        "-o",
        &s(&out),
    ]);
    let stderr = String::from_utf8_lossy(&err.stderr);
    assert!(stderr.contains("support"), "unexpected stderr: {stderr}");
    assert!(!out.exists());
}

#[test]
fn simulate_rejects_line_inside_support() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "m.bdtm");
    run_err(&[
        "simulate",
        "--preset",
        "two-inclusion",
        "--M",
        "24",
        "--D",
        "12",
        "--rM",
        "3",
        "-o",
        &s(&out),
    ]);
}

#[test]
fn reconstruct_warns_on_beam_mismatch_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let meas = p(dir.path(), "m.bdtm");
    let rec = p(dir.path(), "rec.bdtg");
    run_ok(&[
        "simulate",
        "--preset",
        "two-inclusion",
        "--M",
        "24",
        "--D",
        "12",
        "--beam",
        "gaussian",
        "--A",
        "10",
        "-o",
        &s(&meas),
    ]);
    let out = run_ok(&[
        "reconstruct",
        "--meas",
        &s(&meas),
        "--beam",
        "gaussian",
        "--A",
        "80",
        "--N",
        "2",
        "-o",
        &s(&rec),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("metadata mismatch"),
        "expected warning, got: {stderr}"
    );
    assert!(rec.exists());
}

#[test]
fn beamview_differs_between_beam_widths() {
    let dir = tempfile::tempdir().unwrap();
    let a10 = p(dir.path(), "a10.bdtg");
    let a80 = p(dir.path(), "a80.bdtg");
    for (path, a) in [(&a10, "10"), (&a80, "80")] {
        run_ok(&[
            "beamview",
            "--beam",
            "gaussian",
            "--A",
            a,
            "--M",
            "32",
            "--rs",
            "4",
            "--quad-d",
            "64",
            "-o",
            &s(path),
        ]);
    }
    assert_ne!(fs::read(&a10).unwrap(), fs::read(&a80).unwrap());
}

#[test]
fn picard_csv_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let meas = p(dir.path(), "m.bdtm");
    let csv = p(dir.path(), "picard.csv");
    run_ok(&[
        "simulate",
        "--preset",
        "two-inclusion",
        "--M",
        "24",
        "--D",
        "16",
        "--beam",
        "gaussian",
        "--A",
        "10",
        "--noise",
        "5",
        "--seed",
        "1",
        "-o",
        &s(&meas),
    ]);
    run_ok(&[
        "picard",
        "--meas",
        &s(&meas),
        "--beam",
        "gaussian",
        "--A",
        "10",
        "--k",
        "0",
        "--N",
        "3",
        "-o",
        &s(&csv),
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,abs_a,abs_m,abs_ratio"));
    assert_eq!(lines.count(), 7, "2N+1 rows for N = 3");
}

#[test]
fn fdt_check_and_forward_direct_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let fdt_csv = p(dir.path(), "fdt.csv");
    let out = run_ok(&[
        "fdt-check",
        "--M",
        "64",
        "--line-extent",
        "16",
        "--L",
        "128",
        "--quad-d",
        "128",
        "-o",
        &s(&fdt_csv),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("relative L2 discrepancy"));
    assert!(fs::read_to_string(&fdt_csv)
        .unwrap()
        .starts_with("k,line_re,line_im,predicted_re,predicted_im"));

    let line_csv = p(dir.path(), "line.csv");
    run_ok(&[
        "forward-direct",
        "--preset",
        "disk",
        "--d",
        "3",
        "--M",
        "64",
        "--beam",
        "gaussian",
        "--A",
        "10",
        "--L",
        "32",
        "--quad-d",
        "64",
        "-o",
        &s(&line_csv),
    ]);
    let text = fs::read_to_string(&line_csv).unwrap();
    assert!(text.starts_with("r1,re,im"));
    assert_eq!(text.lines().count(), 33);
}

/// The simulate defaults pin the standard experiment: M = 400, D = 200,
/// k0 = 2 pi (wavelength 1), r_M = 5, clamp 1e-3, oversample 2.
#[test]
fn simulate_defaults_match_standard_configuration() {
    use clap::Parser;
    let cli = beamdt::cli::Cli::try_parse_from([
        "beamdt",
        "simulate",
        "--preset",
        "two-inclusion",
        "-o",
        "out.bdtm",
    ])
    .unwrap();
    match cli.command {
        beamdt::cli::Command::Simulate(a) => {
            assert_eq!(a.m, 400);
            assert_eq!(a.big_d, 200);
            assert_eq!(a.k0, std::f64::consts::TAU);
            assert_eq!(a.r_m, 5.0);
            assert_eq!(a.eps_k, 1e-3);
            assert_eq!(a.oversample, 2);
            assert_eq!(a.r_s, 4.0);
        }
        _ => panic!("parsed into the wrong subcommand"),
    }
    let cli = beamdt::cli::Cli::try_parse_from([
        "beamdt",
        "reconstruct",
        "--meas",
        "m.bdtm",
        "-o",
        "r.bdtg",
    ])
    .unwrap();
    match cli.command {
        beamdt::cli::Command::Reconstruct(a) => {
            assert_eq!(a.n, 12);
            assert_eq!(a.min_singular, 1e-12);
        }
        _ => panic!("parsed into the wrong subcommand"),
    }
}

#[test]
fn thread_env_variable_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "m.bdtm");
    let status = bin()
        .env("BEAMDT_THREADS", "2")
        .args([
            "simulate",
            "--preset",
            "two-inclusion",
            "--M",
            "16",
            "--D",
            "8",
            "-o",
            &s(&out),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.exists());
}

#[test]
fn tabulated_beam_roundtrip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let csv = p(dir.path(), "beam.csv");
    // uniform-arc-like table on D = 16
    let mut text = String::from("phi,re,im\n");
    for t in 0..16 {
        let phi = -std::f64::consts::PI + t as f64 * std::f64::consts::TAU / 16.0;
        let v = if phi < 0.0 { 1.0 } else { 0.0 };
        text.push_str(&format!("{phi:.17e},{v:.1},0.0\n"));
    }
    fs::write(&csv, text).unwrap();
    let meas = p(dir.path(), "m.bdtm");
    run_ok(&[
        "simulate",
        "--preset",
        "two-inclusion",
        "--M",
        "24",
        "--D",
        "16",
        "--beam",
        "table",
        "--table",
        &s(&csv),
        "--oversample",
        "1",
        "-o",
        &s(&meas),
    ]);
    assert!(meas.exists());

    // malformed table is rejected
    fs::write(&csv, "phi,re,im\n0.0,1.0,0.0\n0.5,1.0,0.0\n").unwrap();
    run_err(&[
        "simulate",
        "--preset",
        "two-inclusion",
        "--M",
        "24",
        "--D",
        "16",
        "--beam",
        "table",
        "--table",
        &s(&csv),
        "-o",
        &s(&meas),
    ]);
}
