//! End-to-end checks of the binary: exit codes, file contracts and manifest
//! reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vpint")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vpint-cli-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cfg: &Path, out: &Path) -> std::process::Output {
    Command::new(bin())
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

const SERIAL_CFG: &str = "\
mode = serial
scenario = landau
seed = 3
particles_per_cell = 10
time.end = 1.0
fine.scheme = pif_nudft
fine.modes = 8
fine.dt = 0.05
";

#[test]
fn serial_run_row_count_contract() {
    let dir = tmp_dir("serial");
    let cfg = write_cfg(&dir, "run.cfg", SERIAL_CFG);
    let out = dir.join("out");
    let result = run(&cfg, &out);
    assert!(result.status.success(), "{result:?}");

    let trace = std::fs::read_to_string(out.join("energy_trace.csv")).unwrap();
    // T / dt + 1 data rows plus the header.
    let rows = trace.lines().count();
    assert_eq!(rows, 1 + 20 + 1, "energy trace rows: {rows}");
    assert!(out.join("manifest.txt").exists());
    assert!(out.join("timings.csv").exists());
    assert!(out.join("final_state.csv").exists());
}

#[test]
fn invalid_step_exits_2_and_names_the_key() {
    let dir = tmp_dir("badstep");
    let cfg = write_cfg(
        &dir,
        "bad.cfg",
        "\
mode = parareal
scenario = landau
particles = 100
time.end = 1.0
time.subdomains = 8
fine.scheme = pif_nudft
fine.modes = 8
fine.dt = 0.125
coarse.scheme = pic
coarse.modes = 8
coarse.dt = 0.3
",
    );
    let result = run(&cfg, &dir.join("out"));
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("coarse.dt"), "stderr: {stderr}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tmp_dir("unknown");
    let cfg = write_cfg(&dir, "bad.cfg", "mode = serial\nfine.stepsize = 0.1\n");
    let result = run(&cfg, &dir.join("out"));
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("fine.stepsize"), "stderr: {stderr}");
}

#[test]
fn sweep_shape_contract() {
    let dir = tmp_dir("sweep");
    let cfg = write_cfg(
        &dir,
        "sweep.cfg",
        "\
mode = sweep
scenario = landau
seed = 2
particles_per_cell = 10
time.end = 0.8
time.subdomains = 4
fine.scheme = pif_nudft
fine.modes = 8
fine.dt = 0.05
coarse.scheme = pic
coarse.modes = 8
coarse.dt = 0.05
sweep.axis = pc
sweep.values = 10,20
sweep.iterations = 2
",
    );
    let out = dir.join("out");
    let result = run(&cfg, &out);
    assert!(result.status.success(), "{result:?}");
    let slopes = std::fs::read_to_string(out.join("slopes.csv")).unwrap();
    assert_eq!(slopes.lines().count(), 3, "header + one row per iteration");
    let errors = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(errors.starts_with("value,block,subdomain,iteration,err_x,err_v"));
    // One block of rows per sweep value.
    assert!(errors.lines().skip(1).any(|l| l.starts_with("10,")));
    assert!(errors.lines().skip(1).any(|l| l.starts_with("20,")));
}

#[test]
fn heatmap_cell_count() {
    let dir = tmp_dir("heatmap");
    let cfg = write_cfg(
        &dir,
        "heatmap.cfg",
        "\
mode = heatmap
scenario = landau
seed = 5
particles_per_cell = 5
time.end = 1.6
time.subdomains = 4
fine.scheme = pif_nufft
fine.epsilon = 1e-6
fine.modes = 8
fine.dt = 0.05
coarse.scheme = pic
coarse.modes = 8
coarse.dt = 0.05
parareal.tolerance = 1e-8
heatmap.schemes = pic,pif:1e-2,pif:1e-3
heatmap.coarsening = 1,2,4,8
",
    );
    let out = dir.join("out");
    let result = run(&cfg, &out);
    assert!(result.status.success(), "{result:?}");
    let heatmap = std::fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert_eq!(heatmap.lines().count(), 1 + 12, "12 timing cells");
}

#[test]
fn rerun_from_manifest_is_bitwise_identical() {
    let dir = tmp_dir("repro");
    let cfg = write_cfg(
        &dir,
        "run.cfg",
        "\
mode = parareal
scenario = two_stream
seed = 11
particles_per_cell = 8
time.end = 1.6
time.subdomains = 4
fine.scheme = pif_nudft
fine.modes = 8
fine.dt = 0.05
coarse.scheme = pic
coarse.modes = 8
coarse.dt = 0.1
",
    );
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    assert!(run(&cfg, &out1).status.success());
    // Re-run from the emitted manifest, which is itself a valid config.
    let manifest = out1.join("manifest.txt");
    assert!(run(&manifest, &out2).status.success());
    let a = std::fs::read(out1.join("errors.csv")).unwrap();
    let b = std::fs::read(out2.join("errors.csv")).unwrap();
    assert_eq!(a, b, "manifest re-run must reproduce errors.csv bitwise");
    let a = std::fs::read(out1.join("final_state.csv")).unwrap();
    let b = std::fs::read(out2.join("final_state.csv")).unwrap();
    assert_eq!(a, b);
}
