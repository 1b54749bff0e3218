//! Command-line front end and the sweep/convergence drivers.
//!
//! ```text
//! nsac-sim run <config>                    # one simulation, CSV artifacts
//! nsac-sim sweep <config> --axis k=v1,v2   # independent runs along one axis
//! nsac-sim convergence <config> --levels R # N, 2N, ..., 2^R N refinement
//! nsac-sim check                           # built-in verification suite
//! ```
//!
//! `NSAC_OUT` overrides the configured output directory. Exit codes:
//! 0 success, 1 usage/config error, 2 blow-up, 3 failed check.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::checks;
use crate::config::{parse_config, parse_config_with_override, Coordinates, SimConfig};
use crate::diagnostics::{assert_theorem_bounds, energy_budget, write_ledger_csv};
use crate::error::{Error, Result};
use crate::grid::write_snapshot;
use crate::solver_euler::{run, Trajectory};

const USAGE: &str = "usage:
  nsac-sim run <config>
  nsac-sim sweep <config> --axis key=v1,v2,...
  nsac-sim convergence <config> --levels <R>
  nsac-sim check

NSAC_OUT overrides the configured output directory.
exit codes: 0 ok, 1 usage/config error, 2 blow-up, 3 failed check";

/// Parse arguments (program name excluded), execute, return the exit code.
pub fn dispatch(args: &[String]) -> i32 {
    let result = match args.first().map(String::as_str) {
        Some("run") if args.len() == 2 => cmd_run(Path::new(&args[1])),
        Some("sweep") if args.len() == 4 && args[2] == "--axis" => {
            cmd_sweep(Path::new(&args[1]), &args[3])
        }
        Some("convergence") if args.len() == 4 && args[2] == "--levels" => {
            match args[3].parse::<usize>() {
                Ok(levels) if levels >= 1 => cmd_convergence(Path::new(&args[1]), levels),
                _ => Err(Error::Usage(format!(
                    "--levels takes a positive integer, got `{}`",
                    args[3]
                ))),
            }
        }
        Some("check") if args.len() == 1 => return cmd_check(),
        Some("help") | Some("--help") | Some("-h") => {
            println!("{USAGE}");
            return 0;
        }
        _ => Err(Error::Usage(USAGE.into())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Output directory for a config, honoring the `NSAC_OUT` override.
pub fn output_dir(cfg: &SimConfig) -> PathBuf {
    match std::env::var_os("NSAC_OUT") {
        Some(dir) => PathBuf::from(dir),
        None => cfg.output.dir.clone(),
    }
}

fn cmd_run(path: &Path) -> Result<()> {
    let cfg = parse_config(path)?;
    let dir = output_dir(&cfg);
    let traj = run(&cfg)?;
    write_run_outputs(&cfg, &traj, &dir)?;
    print_summary(&cfg, &traj);
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn print_summary(cfg: &SimConfig, traj: &Trajectory) {
    if let Ok(report) = assert_theorem_bounds(&traj.ledger) {
        println!(
            "bounds: rho in [{:.6}, {:.6}], chi in [{:.6}, {:.6}], mass drift {:.3e} -> {}",
            report.min_rho,
            report.max_rho,
            report.min_chi,
            report.max_chi,
            report.mass_drift_rel,
            if report.pass { "ok" } else { "VIOLATED" }
        );
    }
    if let Ok(budget) = energy_budget(&traj.ledger) {
        match budget.max_relative {
            Some(rel) => println!(
                "energy budget: E0 = {:.6e}, max |residual|/E0 = {:.3e}",
                budget.initial_energy, rel
            ),
            None => println!(
                "energy budget: E0 = 0, max |residual| = {:.3e}",
                budget.max_abs_residual
            ),
        }
    }
    let h = crate::diagnostics::higher_order_norms(&traj.final_state, &cfg.grid, &cfg.params);
    println!(
        "final higher-order norms: |chi_t| = {:.3e}, |chi_xx| = {:.3e}, |u_x| = {:.3e}",
        h.chi_t_l2, h.chi_xx_l2, h.u_x_l2
    );
    println!("fixed-point sweeps per step: <= {}", traj.max_picard_iters);
}

/// Write ledger, snapshots and (optionally) a gnuplot script for one run.
pub fn write_run_outputs(cfg: &SimConfig, traj: &Trajectory, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_ledger_csv(&dir.join("ledger.csv"), &traj.ledger)?;
    match cfg.coords {
        Coordinates::Euler => {
            let xs = cfg.grid.positions();
            for (t, state) in &traj.snapshots {
                let name = format!("snapshot_t{t:.6}.csv");
                write_snapshot(&dir.join(name), "x", &xs, &state.rho, &state.u, &state.chi)?;
            }
        }
        Coordinates::Lagrange => {
            for (t, lstate) in &traj.lagrange_snapshots {
                let n = lstate.v.len();
                let dy = lstate.dy();
                let ys: Vec<f64> = (0..n).map(|j| j as f64 * dy).collect();
                let rho: Vec<f64> = lstate.v.iter().map(|&v| 1.0 / v).collect();
                let name = format!("snapshot_t{t:.6}.csv");
                write_snapshot(&dir.join(name), "y", &ys, &rho, &lstate.u, &lstate.chi)?;
            }
        }
    }
    if cfg.output.plot {
        std::fs::write(dir.join("plot.gp"), PLOT_SCRIPT)?;
    }
    Ok(())
}

const PLOT_SCRIPT: &str = "set datafile separator ','
set terminal pngcairo size 1000,700
set output 'energy.png'
set xlabel 't'
plot 'ledger.csv' using 1:7 with lines title 'total energy', \\
     'ledger.csv' using 1:8 with lines title 'dissipation rate'
set output 'bounds.png'
plot 'ledger.csv' using 1:9 with lines title 'min rho', \\
     'ledger.csv' using 1:10 with lines title 'max rho', \\
     'ledger.csv' using 1:11 with lines title 'min chi', \\
     'ledger.csv' using 1:12 with lines title 'max chi'
";

fn cmd_sweep(path: &Path, axis: &str) -> Result<()> {
    let Some((key, values)) = axis.split_once('=') else {
        return Err(Error::Usage(format!(
            "--axis expects key=v1,v2,..., got `{axis}`"
        )));
    };
    let values: Vec<&str> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(Error::Usage("sweep axis has no values".into()));
    }
    let text = std::fs::read_to_string(path)?;
    let base = parse_config(path)?;
    let root = output_dir(&base);

    // independent points, one worker each; nothing is shared but the text
    let outcomes: Vec<(String, Result<()>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|value| {
                let text = &text;
                let root = &root;
                let label = format!("{key}={value}");
                scope.spawn(move || {
                    let res = (|| -> Result<()> {
                        let cfg = parse_config_with_override(text, key, value)?;
                        let traj = run(&cfg)?;
                        write_run_outputs(&cfg, &traj, &root.join(&label))
                    })();
                    (label, res)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut first_err = None;
    for (label, res) in outcomes {
        match res {
            Ok(()) => println!("{label}: ok"),
            Err(e) => {
                println!("{label}: FAILED ({e})");
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Sup-norm differences of the final `(rho, u, chi)` between one refinement
/// level and the next, plus the observed orders between successive pairs.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub cells: Vec<usize>,
    /// `diffs[l]` compares level `l` against level `l+1` (restricted).
    pub diffs: Vec<[f64; 3]>,
    /// `orders[l] = log2(diffs[l] / diffs[l+1])` per field.
    pub orders: Vec<[f64; 3]>,
}

impl ConvergenceStudy {
    pub fn min_order(&self) -> f64 {
        self.orders
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &o| m.min(o))
    }
}

impl fmt::Display for ConvergenceStudy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>12} {:>12} {:>12} {:>12}",
            "levels", "d_rho", "d_u", "d_chi"
        )?;
        for (l, d) in self.diffs.iter().enumerate() {
            writeln!(
                f,
                "{:>5}->{:<6} {:>12.4e} {:>12.4e} {:>12.4e}",
                self.cells[l],
                self.cells[l + 1],
                d[0],
                d[1],
                d[2]
            )?;
        }
        for (l, o) in self.orders.iter().enumerate() {
            let fmt_order = |v: f64| -> String {
                if v.is_infinite() {
                    "exact".into()
                } else {
                    format!("{v:.2}")
                }
            };
            writeln!(
                f,
                "order {:>5}: rho {} | u {} | chi {}",
                self.cells[l + 1],
                fmt_order(o[0]),
                fmt_order(o[1]),
                fmt_order(o[2])
            )?;
        }
        Ok(())
    }
}

/// Run `levels + 1` refinements (doubling cells, halving dt) and tabulate the
/// sup-norm distance of final states between successive levels. Node-centered
/// grids nest under doubling, so restriction is plain subsampling.
pub fn convergence_study(base: &SimConfig, levels: usize) -> Result<ConvergenceStudy> {
    use crate::grid::Grid;
    let mut cells = Vec::with_capacity(levels + 1);
    let mut finals = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let factor = 1usize << level;
        let mut cfg = base.clone();
        cfg.grid = Grid::new(base.grid.length, base.grid.n_cells * factor, base.grid.bc)?;
        cfg.ctl.dt = base.ctl.dt / factor as f64;
        cfg.output.ledger_interval = base.ctl.t_end.max(cfg.ctl.dt);
        cfg.output.snapshot_times = Vec::new();
        let traj = run(&cfg)?;
        cells.push(cfg.grid.n_cells);
        finals.push(traj.final_state);
    }

    let sup = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b.iter())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let mut diffs = Vec::with_capacity(levels);
    for l in 0..levels {
        let coarse = &finals[l];
        let fine = &finals[l + 1];
        let restrict = |f: &[f64]| -> Vec<f64> { f.iter().step_by(2).copied().collect() };
        diffs.push([
            sup(&coarse.rho, &restrict(&fine.rho)),
            sup(&coarse.u, &restrict(&fine.u)),
            sup(&coarse.chi, &restrict(&fine.chi)),
        ]);
    }
    let mut orders = Vec::new();
    for l in 0..levels.saturating_sub(1) {
        let mut o = [0.0; 3];
        for k in 0..3 {
            let (d1, d2) = (diffs[l][k], diffs[l + 1][k]);
            o[k] = if d1 < 1e-14 && d2 < 1e-14 {
                f64::INFINITY
            } else {
                (d1 / d2).log2()
            };
        }
        orders.push(o);
    }
    Ok(ConvergenceStudy {
        cells,
        diffs,
        orders,
    })
}

fn cmd_convergence(path: &Path, levels: usize) -> Result<()> {
    let cfg = parse_config(path)?;
    let study = convergence_study(&cfg, levels)?;
    print!("{study}");
    Ok(())
}

fn cmd_check() -> i32 {
    let results = checks::run_all();
    let mut all_ok = true;
    for r in &results {
        println!(
            "[{}] {} ... {}{}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            if r.detail.is_empty() {
                String::new()
            } else {
                format!(" ({})", r.detail)
            }
        );
        all_ok &= r.passed;
    }
    if all_ok {
        println!("all {} checks passed", results.len());
        0
    } else {
        println!("checks FAILED");
        3
    }
}
