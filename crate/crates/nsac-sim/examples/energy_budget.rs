//! Track the discrete energy balance along a sine-perturbed run: the total
//! energy plus the time-integrated dissipation should stay at its initial
//! value, and the residual should shrink under space-time refinement.
//!
//! ```text
//! cargo run --release --example energy_budget
//! ```

use nsac_sim::checks::{baseline_config, refined_baseline_config};
use nsac_sim::diagnostics::energy_budget;
use nsac_sim::solver_euler::run;

fn main() -> nsac_sim::Result<()> {
    let cfg = baseline_config();
    let traj = run(&cfg)?;

    println!("t, energy, dissipation rate (every 0.1 time units)");
    let every = traj.ledger.len() / 10;
    for row in traj.ledger.iter().step_by(every.max(1)) {
        println!(
            "  t = {:>5.2}  E = {:>12.6e}  D = {:>12.6e}",
            row.time, row.energy_total, row.dissipation_rate
        );
    }

    let budget = energy_budget(&traj.ledger)?;
    println!(
        "\nN = {}: E0 = {:.6e}, max |E(t) + Int D - E0| / E0 = {:.3e}",
        cfg.grid.n_cells,
        budget.initial_energy,
        budget.max_relative.unwrap_or(f64::NAN)
    );

    let fine_cfg = refined_baseline_config();
    let fine = energy_budget(&run(&fine_cfg)?.ledger)?;
    println!(
        "N = {}: max residual / E0 = {:.3e}  (halving dt halves the residual)",
        fine_cfg.grid.n_cells,
        fine.max_relative.unwrap_or(f64::NAN)
    );
    Ok(())
}
