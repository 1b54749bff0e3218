//! Explore the van der Waals isotherms: where pressure loses monotonicity,
//! the spinodal densities `alpha < beta`, the matched density `gamma`, and
//! the quadratic trapping of the renormalized potential `Phi`.
//!
//! ```text
//! cargo run --release --example vdw_isotherms
//! ```

use nsac_sim::eos::{critical_points, phi, pressure, pressure_derivative, PhysParams};

fn main() -> nsac_sim::Result<()> {
    println!("spinodal structure per reduced temperature");
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>12} {:>12}",
        "Theta", "alpha", "beta", "gamma", "p(beta)", "p'(1.0)"
    );
    for theta in [0.85, 0.9, 0.95, 0.99, 1.0, 1.1] {
        let c = critical_points(theta)?;
        let dp1 = pressure_derivative(1.0, theta)?;
        if c.exists {
            let gamma = c
                .gamma
                .map(|g| format!("{g:>10.6}"))
                .unwrap_or_else(|| format!("{:>10}", "none"));
            println!(
                "{theta:>6.2} {:>10.6} {:>10.6} {gamma} {:>12.6} {dp1:>12.6}",
                c.alpha,
                c.beta,
                pressure(c.beta, theta)?,
            );
        } else {
            println!(
                "{theta:>6.2} {:>10} {:>10} {:>10} {:>12} {dp1:>12.6} (monotone)",
                "-", "-", "-", "-"
            );
        }
    }

    // sample one sub-critical isotherm across the density range
    let theta = 0.9;
    let c = critical_points(theta)?;
    println!("\nisotherm Theta = {theta}: p and p' on (0, 3)");
    println!("{:>8} {:>12} {:>12} {:>10}", "rho", "p", "p'", "branch");
    for i in 1..=14 {
        let rho = i as f64 * 0.2;
        let branch = if rho < c.alpha {
            "gas"
        } else if rho <= c.beta {
            "unstable"
        } else {
            "liquid"
        };
        println!(
            "{rho:>8.2} {:>12.6} {:>12.6} {branch:>10}",
            pressure(rho, theta)?,
            pressure_derivative(rho, theta)?
        );
    }

    // Phi is trapped between two parabolas around the reference density
    let params = PhysParams::new(0.1, 0.05, 0.9, 0.1)?;
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0_f64;
    for i in 0..=2000 {
        let rho = 1e-3 + (1.1 - 1e-3) * i as f64 / 2000.0;
        if (rho - params.rho_ref).abs() < 1e-3 {
            continue;
        }
        let ratio = phi(rho, &params)? / (rho - params.rho_ref).powi(2);
        c1 = c1.min(ratio);
        c2 = c2.max(ratio);
    }
    println!(
        "\nPhi(rho) / (rho - rho_ref)^2 on [0.001, 1.1]: c1 = {c1:.4}, c2 = {c2:.4} \
         (both finite and positive)"
    );
    Ok(())
}
