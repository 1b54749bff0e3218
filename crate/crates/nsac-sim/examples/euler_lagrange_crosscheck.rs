//! Cross-validate the two solvers: evolve the same initial data in
//! laboratory coordinates and in mass coordinates, map the latter back, and
//! watch the sup-norm discrepancy fall under refinement.
//!
//! ```text
//! cargo run --release --example euler_lagrange_crosscheck
//! ```

use nsac_sim::checks::crosscheck_config;
use nsac_sim::config::Coordinates;
use nsac_sim::solver_euler::run;
use nsac_sim::solver_lagrange::field_discrepancy;

fn main() -> nsac_sim::Result<()> {
    println!("same sine-perturbed data, two coordinate systems, T = 0.1");
    println!("{:>6} {:>14} {:>10}", "N", "discrepancy", "ratio");
    let mut prev: Option<f64> = None;
    for n in [64usize, 128, 256, 512] {
        let euler = run(&crosscheck_config(n, Coordinates::Euler))?;
        let lagrange = run(&crosscheck_config(n, Coordinates::Lagrange))?;
        let d = field_discrepancy(&euler.final_state, &lagrange.final_state);
        match prev {
            Some(p) => println!("{n:>6} {d:>14.6e} {:>10.2}", p / d),
            None => println!("{n:>6} {d:>14.6e} {:>10}", "-"),
        }
        prev = Some(d);
    }
    println!("\n(discrepancy = max over rho, u, chi of sup |difference| / max(sup |field|, 1))");
    Ok(())
}
