use std::path::Path;
use std::process::{Command, Output};

use lagwave::extrapolator::VelocityModel;
use lagwave::io::{load_grid, ricker, save_gather, save_model, save_traces, TraceSet};
use lagwave::migration::ShotGather;

fn lagwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagwave"))
        .args(args)
        .env("LAGWAVE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dispersion_writes_a_table() {
    let out = lagwave(&["dispersion", "--n", "5", "--fit", "--points", "50"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,exact,approx,error"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    let low = rows
        .iter()
        .filter(|r| r[0] <= 0.9)
        .map(|r| r[3].abs())
        .fold(0.0, f64::max);
    assert!(low < 1e-3);
}

#[test]
fn unknown_flag_is_rejected() {
    let out = lagwave(&["dispersion", "--bogus"]);
    assert!(!out.status.success());
    let out = lagwave(&["impulse", "--model", "/nonexistent/model.bin"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lagwave:"));
}

const SMALL_RUN: [&str; 8] = ["-N", "64", "-M", "128", "--dt", "0.004", "--taper", "6"];

#[test]
fn impulse_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.bin");
    let model = VelocityModel::from_fn(32, 1, 12, 10.0, 10.0, 10.0, |_, _, z| {
        if z < 60.0 {
            2000.0
        } else {
            2600.0
        }
    })
    .unwrap();
    save_model(&model_path, &model).unwrap();
    let out_dir = dir.path().join("out");
    let mut args = vec![
        "impulse",
        "--model",
        path(&model_path),
        "--time",
        "0.1",
        "--depths",
        "0,5",
        "--out",
        path(&out_dir),
    ];
    args.extend_from_slice(&SMALL_RUN);
    let out = lagwave(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "energy.csv",
        "section.csv",
        "section.pgm",
        "snapshot_z0.csv",
        "snapshot_z5.pgm",
    ] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let energy = std::fs::read_to_string(out_dir.join("energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 1 + 13);
}

#[test]
fn migrate_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.bin");
    let model = VelocityModel::from_fn(24, 1, 8, 10.0, 10.0, 10.0, |_, _, _| 2000.0).unwrap();
    save_model(&model_path, &model).unwrap();
    let gathers = dir.path().join("gathers");
    std::fs::create_dir(&gathers).unwrap();
    let wavelet = ricker(20.0, 0.075, 64, 0.004);
    let gather = ShotGather {
        source: (12, 0),
        wavelet: wavelet.clone(),
        receivers: (0..24).map(|ix| (ix, 0)).collect(),
        traces: (0..24)
            .map(|_| wavelet.iter().map(|v| 0.1 * v).collect())
            .collect(),
        window: 0.256,
    };
    save_gather(&gathers.join("shot0"), &gather, 10.0, 10.0).unwrap();
    let out_dir = dir.path().join("img");
    let mut args = vec![
        "migrate",
        "--model",
        path(&model_path),
        "--gathers",
        path(&gathers),
        "--out",
        path(&out_dir),
    ];
    args.extend_from_slice(&SMALL_RUN);
    let out = lagwave(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let image = load_grid(&out_dir.join("ic.img")).unwrap();
    assert_eq!((image.nx, image.nz), (24, 8));
    assert!(image.values.iter().any(|&v| v != 0.0));
    assert!(out_dir.join("id.pgm").exists());
}

#[test]
fn xform_reports_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("trace.trc");
    let set = TraceSet {
        dt: 0.002,
        coords: vec![(0.0, 0.0)],
        traces: vec![ricker(20.0, 0.075, 256, 0.002)],
    };
    save_traces(&input, &set).unwrap();
    let csv = dir.path().join("coeffs.csv");
    let out = lagwave(&[
        "xform",
        "--input",
        path(&input),
        "-M",
        "512",
        "--out",
        path(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 512);
    assert!(String::from_utf8_lossy(&out.stderr).contains("round-trip error"));
}
