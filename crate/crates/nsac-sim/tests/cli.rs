//! End-to-end tests of the `nsac-sim` binary: subcommands, exit codes,
//! artifact layout, the `NSAC_OUT` override, run-to-run determinism and
//! sweep isolation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

const BIN: &str = env!("CARGO_BIN_EXE_nsac-sim");

const SMALL_CFG: &str = "\
[grid]
length = 1.0
n_cells = 32

[params]
nu = 0.1
eps = 0.05
theta = 0.9
rho_ref = 0.1

[step]
dt = 1e-3
t_end = 0.01

[scenario]
kind = sine
rho_mean = 1.0
amplitude = 0.1
chi = 0.5

[output]
snapshot_times = 0.0, 0.01
";

fn scratch_dir(tag: &str) -> PathBuf {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let dir = std::env::temp_dir().join(format!(
        "nsac_cli_{}_{}_{}",
        tag,
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn nsac(args: &[&str], out_dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .env("NSAC_OUT", out_dir)
        .output()
        .expect("binary should launch")
}

#[test]
fn run_produces_ledger_and_snapshots() {
    let dir = scratch_dir("run");
    let cfg = write_cfg(&dir, SMALL_CFG);
    let out = dir.join("artifacts");
    let res = nsac(&["run", cfg.to_str().unwrap()], &out);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let ledger = std::fs::read_to_string(out.join("ledger.csv")).unwrap();
    assert!(ledger.starts_with(
        "t,mass,kinetic,gradient,phi_pot,well,energy_total,dissipation_rate,\
         min_rho,max_rho,min_chi,max_chi,inv_rho_sup,grad_inv_rho"
    ));
    // 10 steps, a row per step, plus the initial row
    assert_eq!(ledger.lines().count(), 12);
    assert!(out.join("snapshot_t0.000000.csv").exists());
    assert!(out.join("snapshot_t0.010000.csv").exists());
    let snap = std::fs::read_to_string(out.join("snapshot_t0.000000.csv")).unwrap();
    assert!(snap.starts_with("x,rho,u,chi"));
}

#[test]
fn identical_configs_give_bit_identical_ledgers() {
    let dir = scratch_dir("det");
    let cfg = write_cfg(&dir, SMALL_CFG);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    assert!(nsac(&["run", cfg.to_str().unwrap()], &out_a)
        .status
        .success());
    assert!(nsac(&["run", cfg.to_str().unwrap()], &out_b)
        .status
        .success());
    let a = std::fs::read(out_a.join("ledger.csv")).unwrap();
    let b = std::fs::read(out_b.join("ledger.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_errors_name_the_key_and_exit_1() {
    let dir = scratch_dir("badcfg");
    let cfg = write_cfg(&dir, &SMALL_CFG.replace("theta = 0.9", "theta = -1"));
    let res = nsac(&["run", cfg.to_str().unwrap()], &dir);
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("theta"), "stderr: {stderr}");
}

#[test]
fn blow_up_exits_2() {
    let dir = scratch_dir("blowup");
    let text = "\
[grid]
length = 1.0
n_cells = 32

[params]
nu = 0.1
eps = 0.05
theta = 1.1
rho_ref = 1.0

[step]
dt = 1e-3
t_end = 0.01

[scenario]
kind = uniform
rho = 2.9999995
chi = 1.0
";
    let cfg = write_cfg(&dir, text);
    let res = nsac(&["run", cfg.to_str().unwrap()], &dir);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("blow-up"), "stderr: {stderr}");
}

#[test]
fn usage_errors_exit_1() {
    let dir = scratch_dir("usage");
    let res = nsac(&["frobnicate"], &dir);
    assert_eq!(res.status.code(), Some(1));
    let res = nsac(&["run"], &dir);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn sweep_points_match_solo_runs() {
    let dir = scratch_dir("sweep");
    let cfg = write_cfg(&dir, SMALL_CFG);
    let sweep_out = dir.join("sweep");
    let res = nsac(
        &["sweep", cfg.to_str().unwrap(), "--axis", "theta=0.9,0.95"],
        &sweep_out,
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    for theta in ["0.9", "0.95"] {
        let from_sweep =
            std::fs::read(sweep_out.join(format!("theta={theta}")).join("ledger.csv")).unwrap();
        let solo_dir = dir.join(format!("solo_{theta}"));
        let solo_cfg = write_cfg(
            &solo_dir.parent().map(|_| dir.clone()).unwrap(),
            &SMALL_CFG.replace("theta = 0.9", &format!("theta = {theta}")),
        );
        assert!(nsac(&["run", solo_cfg.to_str().unwrap()], &solo_dir)
            .status
            .success());
        let solo = std::fs::read(solo_dir.join("ledger.csv")).unwrap();
        assert_eq!(
            from_sweep, solo,
            "sweep point theta={theta} differs from solo run"
        );
    }
}

#[test]
fn convergence_on_steady_state_reports_exact() {
    let dir = scratch_dir("conv");
    let text = SMALL_CFG
        .replace(
            "kind = sine\nrho_mean = 1.0\namplitude = 0.1\nchi = 0.5",
            "kind = uniform\nrho = 0.1\nchi = 1.0",
        )
        .replace("snapshot_times = 0.0, 0.01", "");
    let cfg = write_cfg(&dir, &text);
    let res = nsac(
        &["convergence", cfg.to_str().unwrap(), "--levels", "2"],
        &dir,
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("exact"), "stdout: {stdout}");
}

#[test]
fn lagrange_runs_write_mass_coordinate_snapshots() {
    let dir = scratch_dir("lag");
    let text = SMALL_CFG.replace("t_end = 0.01", "t_end = 0.01\ncoordinates = lagrange");
    let cfg = write_cfg(&dir, &text);
    let out = dir.join("artifacts");
    let res = nsac(&["run", cfg.to_str().unwrap()], &out);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let snap = std::fs::read_to_string(out.join("snapshot_t0.000000.csv")).unwrap();
    assert!(snap.starts_with("y,rho,u,chi"));
}
