//! One-dimensional gas-liquid flow with a diffuse interface.
//!
//! This crate solves the isothermal compressible Navier-Stokes system coupled
//! to an Allen-Cahn phase equation and closed by the van der Waals equation
//! of state,
//!
//! ```text
//! rho_t + (rho u)_x          = 0
//! rho u_t + rho u u_x + p_x  = nu u_xx - (eps/2) (chi_x^2)_x
//! rho chi_t + rho u chi_x    = -(chi^3 - chi)/eps + (eps/rho) chi_xx
//! p(rho) = -3 rho^2 + 8 Theta rho / (3 - rho)
//! ```
//!
//! on a periodic interval or between solid walls (`u = 0`, `chi_x = 0`).
//! Below the critical temperature (`Theta < 1`) the pressure decreases on a
//! density interval, so homogeneous states there separate into gas and
//! liquid; the phase variable `chi` tracks the two components through a
//! double-well potential.
//!
//! The solution is known to keep `0 < rho < 3`, `|chi| <= 1`, conserve mass,
//! and dissipate the free energy
//! `E = Int( rho u^2/2 + eps chi_x^2/2 + Phi(rho) + rho (chi^2-1)^2/(4 eps) )`
//! at rate `Int( mu^2 + nu u_x^2 )`. Everything here is built to observe
//! those facts at the discrete level:
//!
//! - [`eos`] — pressure law, double-well potential, spinodal structure,
//!   renormalized potential `Phi`, chemical potential `mu`;
//! - [`grid`] — grids, states, initial data, snapshot CSV I/O;
//! - [`solver_euler`] — semi-implicit stepper in laboratory coordinates;
//! - [`solver_lagrange`] — independent stepper in mass coordinates, used for
//!   cross-validation;
//! - [`diagnostics`] — energy ledger, budget residuals, bound reports;
//! - [`config`] / [`cli`] — plain-text run configuration and the command
//!   line front end;
//! - [`checks`] — the built-in verification suite (`nsac-sim check`).
//!
//! The `examples/` directory exercises each capability end to end; start
//! with `cargo run --release --example vdw_isotherms`.

pub mod checks;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod eos;
pub mod error;
pub mod grid;
pub mod solver_euler;
pub mod solver_lagrange;
mod tridiag;

pub use config::{Coordinates, OutputConfig, SimConfig};
pub use diagnostics::EnergyLedger;
pub use eos::{EosCriticalPoints, PhysParams};
pub use error::{Error, Result};
pub use grid::{BcMode, FieldState, Grid, Scenario};
pub use solver_euler::{StepControl, Trajectory};
pub use solver_lagrange::LagrangeState;
