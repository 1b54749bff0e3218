//! Self-convergence under grid doubling with proportional time steps:
//! successive sup-norm differences of the final fields shrink at first order
//! or better (upwind advection and backward Euler are the formal limiters).
//!
//! ```text
//! cargo run --release --example convergence_study
//! ```

use nsac_sim::checks::convergence_config;
use nsac_sim::cli::convergence_study;

fn main() -> nsac_sim::Result<()> {
    let base = convergence_config();
    println!(
        "sine perturbation to T = {}, base grid N = {}, dt halved with dx\n",
        base.ctl.t_end, base.grid.n_cells
    );
    let study = convergence_study(&base, 3)?;
    print!("{study}");
    println!("\nminimum observed order: {:.2}", study.min_order());
    Ok(())
}
