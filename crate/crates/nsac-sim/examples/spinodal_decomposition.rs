//! Spinodal decomposition from seeded noise: a mean density inside the
//! unstable pressure interval separates into gas and liquid plateaus while
//! the phase field saturates into the wells, and the pointwise bounds
//! `0 < rho < 3`, `|chi| <= 1` hold the whole way.
//!
//! ```text
//! cargo run --release --example spinodal_decomposition
//! ```

use nsac_sim::checks::spinodal_config;
use nsac_sim::diagnostics::assert_theorem_bounds;
use nsac_sim::eos::critical_points;
use nsac_sim::solver_euler::run;

fn main() -> nsac_sim::Result<()> {
    let cfg = spinodal_config();
    let crit = critical_points(cfg.params.theta)?;
    println!(
        "Theta = {}: spinodal interval ({:.4}, {:.4}), mean density 1.0 inside it",
        cfg.params.theta, crit.alpha, crit.beta
    );

    let traj = run(&cfg)?;
    println!("\ndensity extremes while the mixture separates:");
    let every = traj.ledger.len() / 10;
    for row in traj.ledger.iter().step_by(every.max(1)) {
        println!(
            "  t = {:>4.1}  rho in [{:.4}, {:.4}]  chi in [{:+.4}, {:+.4}]",
            row.time, row.min_rho, row.max_rho, row.min_chi, row.max_chi
        );
    }

    // final density histogram
    let state = &traj.final_state;
    let n = state.rho.len();
    let (lo, hi) = (0.0, 2.0);
    let bins = 20;
    let mut hist = vec![0usize; bins];
    for &r in &state.rho {
        let b = (((r - lo) / (hi - lo)) * bins as f64) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    println!("\nfinal density histogram (t = {}):", state.time);
    let max_count = *hist.iter().max().unwrap();
    for (b, &count) in hist.iter().enumerate() {
        let center = lo + (b as f64 + 0.5) * (hi - lo) / bins as f64;
        let bar = "#".repeat(40 * count / max_count.max(1));
        let mark = if center > crit.alpha && center < crit.beta {
            "u" // inside the unstable interval
        } else {
            " "
        };
        println!("  {center:>5.2} {mark} |{bar}");
    }

    let outside = state
        .rho
        .iter()
        .filter(|&&r| r <= crit.alpha || r >= crit.beta)
        .count() as f64
        / n as f64;
    let saturated = state.chi.iter().filter(|&&c| c.abs() > 0.9).count() as f64 / n as f64;
    println!(
        "\n{:.1}% of cells left the unstable interval; {:.1}% of phase values are saturated",
        100.0 * outside,
        100.0 * saturated
    );

    let report = assert_theorem_bounds(&traj.ledger)?;
    println!(
        "bounds over the whole run: rho in [{:.4}, {:.4}], chi in [{:+.6}, {:+.6}] -> {}",
        report.min_rho,
        report.max_rho,
        report.min_chi,
        report.max_chi,
        if report.pass { "ok" } else { "VIOLATED" }
    );
    Ok(())
}
