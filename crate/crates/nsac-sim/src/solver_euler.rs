//! Semi-implicit time stepper in Euler (laboratory) coordinates.
//!
//! One step advances the coupled system
//!
//! ```text
//! rho_t + (rho u)_x         = 0
//! rho u_t + rho u u_x + p_x = nu u_xx - (eps/2)(chi_x^2)_x
//! rho chi_t + rho u chi_x   = -(chi^3 - chi)/eps + (eps/rho) chi_xx
//! ```
//!
//! by backward Euler, resolved through a fixed-point (Picard) sweep that
//! freezes the transport velocity and the cubic reaction term at the previous
//! iterate. Each sweep solves, in order,
//!
//! 1. mass: implicit first-order upwind transport of the new density by the
//!    frozen velocity (a linear tridiagonal solve, then a conservative
//!    flux-form rebuild so the discrete mass telescopes exactly);
//! 2. momentum: implicit viscosity and upwind advection, with the pressure
//!    gradient taken on the fresh density iterate and the capillary force
//!    `(eps/2)(chi_x^2)_x` on the frozen phase iterate;
//! 3. phase: implicit diffusion and upwind advection with the double-well
//!    reaction frozen.
//!
//! At convergence the triple solves the fully implicit backward-Euler system.
//! Advection is limited by the usual CFL accuracy bound; the implicit
//! diffusion terms impose no step restriction.

use crate::config::{Coordinates, SimConfig};
use crate::diagnostics::{self, EnergyLedger};
use crate::eos::{pressure_raw, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{check_compatibility, make_initial, BcMode, FieldState, Grid};
use crate::solver_lagrange::{self, LagrangeState};
use crate::tridiag;

/// Density floor and distance-to-3 guard: excursions past these are reported
/// as blow-up rather than clamped, so under-resolved runs stay visible.
pub const RHO_FLOOR: f64 = 1e-6;
pub const RHO_CEIL_GUARD: f64 = 1e-6;

/// Velocity scale floor used in the advective CFL bound.
pub const CFL_U_FLOOR: f64 = 1e-8;

/// Time-step control shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Time step.
    pub dt: f64,
    /// Advective CFL target in (0, 0.9].
    pub cfl: f64,
    /// Fixed-point tolerance on the successive-iterate max norm.
    pub picard_tol: f64,
    /// Fixed-point iteration cap.
    pub picard_max: usize,
    /// Final time.
    pub t_end: f64,
}

pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_PICARD_TOL: f64 = 1e-10;
pub const DEFAULT_PICARD_MAX: usize = 50;

impl StepControl {
    /// Control with the default CFL target, tolerance and iteration cap.
    pub fn with_dt(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            cfl: DEFAULT_CFL,
            picard_tol: DEFAULT_PICARD_TOL,
            picard_max: DEFAULT_PICARD_MAX,
            t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Construction(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::Construction(format!(
                "cfl must lie in (0, 0.9], got {}",
                self.cfl
            )));
        }
        if !(self.picard_tol.is_finite() && self.picard_tol > 0.0) {
            return Err(Error::Construction("picard_tol must be positive".into()));
        }
        if self.picard_max < 1 {
            return Err(Error::Construction("picard_max must be at least 1".into()));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Construction(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    /// Fixed-point sweeps used (max over sub-steps when the step was halved).
    pub picard_iters: usize,
    /// Whether the step had to be retried as two half steps.
    pub halved: bool,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn check_cfl(state: &FieldState, grid: &Grid, ctl: &StepControl, dt: f64) -> Result<()> {
    let umax = state.max_abs_u().max(CFL_U_FLOOR);
    let limit = ctl.cfl * grid.dx / umax;
    if dt > limit * (1.0 + 1e-12) {
        let cell = state
            .u
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, _)| j)
            .unwrap_or(0);
        return Err(Error::BlowUp {
            time: state.time,
            cell,
            what: format!("advective CFL bound exceeded: dt = {dt:.3e} > {limit:.3e}"),
        });
    }
    Ok(())
}

/// Advance one time step of `ctl.dt`. On fixed-point non-convergence the step
/// is retried once as two half steps; a second failure is an error. Density
/// excursions outside `(RHO_FLOOR, 3 - RHO_CEIL_GUARD)` abort with a blow-up
/// report naming the offending cell.
pub fn step(
    state: &FieldState,
    grid: &Grid,
    params: &PhysParams,
    ctl: &StepControl,
) -> Result<FieldState> {
    step_with_stats(state, grid, params, ctl).map(|(s, _)| s)
}

/// [`step`] plus iteration statistics.
pub fn step_with_stats(
    state: &FieldState,
    grid: &Grid,
    params: &PhysParams,
    ctl: &StepControl,
) -> Result<(FieldState, StepStats)> {
    check_cfl(state, grid, ctl, ctl.dt)?;
    match attempt_step(state, grid, params, ctl, ctl.dt) {
        Ok((s, iters)) => Ok((
            s,
            StepStats {
                picard_iters: iters,
                halved: false,
            },
        )),
        Err(Error::PicardDiverged { .. }) => {
            let half = 0.5 * ctl.dt;
            let (s1, it1) = attempt_step(state, grid, params, ctl, half)?;
            let (s2, it2) = attempt_step(&s1, grid, params, ctl, half)?;
            Ok((
                s2,
                StepStats {
                    picard_iters: it1.max(it2),
                    halved: true,
                },
            ))
        }
        Err(e) => Err(e),
    }
}

/// One backward-Euler step of size `dt`, resolved by Picard sweeps.
fn attempt_step(
    state: &FieldState,
    grid: &Grid,
    params: &PhysParams,
    ctl: &StepControl,
    dt: f64,
) -> Result<(FieldState, usize)> {
    let new_time = state.time + dt;
    let mut rho_prev = state.rho.clone();
    let mut u_prev = state.u.clone();
    let mut chi_prev = state.chi.clone();

    for iter in 1..=ctl.picard_max {
        let rho_new = mass_update(&state.rho, &u_prev, grid, dt)?;
        check_density(&rho_new, new_time)?;
        let u_new = momentum_update(&state.u, &rho_new, &u_prev, &chi_prev, grid, params, dt)?;
        check_finite(&u_new, "velocity", new_time)?;
        let chi_new = phase_update(&state.chi, &rho_new, &u_prev, &chi_prev, grid, params, dt)?;
        check_finite(&chi_new, "phase field", new_time)?;

        let delta = max_abs_diff(&rho_new, &rho_prev)
            .max(max_abs_diff(&u_new, &u_prev))
            .max(max_abs_diff(&chi_new, &chi_prev));
        rho_prev = rho_new;
        u_prev = u_new;
        chi_prev = chi_new;
        if delta < ctl.picard_tol {
            return Ok((
                FieldState {
                    rho: rho_prev,
                    u: u_prev,
                    chi: chi_prev,
                    time: new_time,
                },
                iter,
            ));
        }
    }
    Err(Error::PicardDiverged {
        time: state.time,
        dt,
    })
}

fn check_density(rho: &[f64], time: f64) -> Result<()> {
    for (j, &r) in rho.iter().enumerate() {
        if !r.is_finite() || r <= RHO_FLOOR || r >= 3.0 - RHO_CEIL_GUARD {
            return Err(Error::BlowUp {
                time,
                cell: j,
                what: format!("density {r} left ({RHO_FLOOR}, {})", 3.0 - RHO_CEIL_GUARD),
            });
        }
    }
    Ok(())
}

fn check_finite(f: &[f64], name: &str, time: f64) -> Result<()> {
    for (j, &v) in f.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::BlowUp {
                time,
                cell: j,
                what: format!("non-finite {name}"),
            });
        }
    }
    Ok(())
}

/// Upwind face fluxes for the given face velocities and a density iterate.
fn face_fluxes(uf: &[f64], rho: &[f64], periodic: bool) -> Vec<f64> {
    let nf = uf.len();
    (0..nf)
        .map(|f| {
            let right = if f + 1 < rho.len() {
                rho[f + 1]
            } else if periodic {
                rho[0]
            } else {
                unreachable!("mixed grids have n+1 nodes for n faces")
            };
            if uf[f] >= 0.0 {
                uf[f] * rho[f]
            } else {
                uf[f] * right
            }
        })
        .collect()
}

/// Backward-Euler upwind transport `rho_t + (rho u*)_x = 0`, implicit in the
/// density. The tridiagonal solution is rebuilt from its own face fluxes so
/// the trapezoidal mass telescopes to machine precision; wall faces carry
/// zero flux in mixed mode (wall nodes are half cells).
fn mass_update(rho_old: &[f64], u_star: &[f64], grid: &Grid, dt: f64) -> Result<Vec<f64>> {
    let uf = grid.face_mean(u_star);
    let up: Vec<f64> = uf.iter().map(|&v| v.max(0.0)).collect();
    let um: Vec<f64> = uf.iter().map(|&v| v.min(0.0)).collect();
    let r = dt / grid.dx;
    let n = rho_old.len();

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];

    let rho_hat = match grid.bc {
        BcMode::Periodic => {
            for j in 0..n {
                let fl = (j + n - 1) % n; // left face index
                diag[j] = 1.0 + r * (up[j] - um[fl]);
                sup[j] = r * um[j];
                sub[j] = -r * up[fl];
            }
            tridiag::solve_cyclic(&sub, &diag, &sup, rho_old)?
        }
        BcMode::Mixed => {
            diag[0] = 1.0 + 2.0 * r * up[0];
            sup[0] = 2.0 * r * um[0];
            for j in 1..n - 1 {
                diag[j] = 1.0 + r * (up[j] - um[j - 1]);
                sub[j] = -r * up[j - 1];
                sup[j] = r * um[j];
            }
            diag[n - 1] = 1.0 - 2.0 * r * um[n - 2];
            sub[n - 1] = -2.0 * r * up[n - 2];
            tridiag::solve(&sub, &diag, &sup, rho_old)?
        }
    };

    let flux = face_fluxes(&uf, &rho_hat, grid.bc == BcMode::Periodic);
    let nf = flux.len();
    Ok(match grid.bc {
        BcMode::Periodic => (0..n)
            .map(|j| rho_old[j] - r * (flux[j] - flux[(j + nf - 1) % nf]))
            .collect(),
        BcMode::Mixed => (0..n)
            .map(|j| {
                if j == 0 {
                    rho_old[0] - 2.0 * r * flux[0]
                } else if j == n - 1 {
                    rho_old[n - 1] + 2.0 * r * flux[nf - 1]
                } else {
                    rho_old[j] - r * (flux[j] - flux[j - 1])
                }
            })
            .collect(),
    })
}

/// Implicit momentum update with frozen transport velocity and frozen
/// capillary stress; `p` is taken on the fresh density iterate.
fn momentum_update(
    u_old: &[f64],
    rho_new: &[f64],
    u_star: &[f64],
    chi_star: &[f64],
    grid: &Grid,
    params: &PhysParams,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = u_old.len();
    let dx = grid.dx;
    let visc = params.nu * dt / (dx * dx);
    let adv = dt / dx;

    // (eps/2) (chi_x^2)_x via squared face slopes
    let slopes = grid.face_diff(chi_star);
    let sq: Vec<f64> = slopes.iter().map(|g| g * g).collect();
    let nf = sq.len();

    let p: Vec<f64> = rho_new
        .iter()
        .map(|&r| pressure_raw(r, params.theta))
        .collect();

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let interior = |j: usize, jl: usize, jr: usize, fl: usize, fr: usize| {
        let a = rho_new[j] * u_star[j];
        let (mut b, mut lo, mut hi) = (rho_new[j] + 2.0 * visc, -visc, -visc);
        if a >= 0.0 {
            b += adv * a;
            lo -= adv * a;
        } else {
            b -= adv * a;
            hi += adv * a;
        }
        let px = (p[jr] - p[jl]) / (2.0 * dx);
        let cap = 0.5 * params.eps * (sq[fr] - sq[fl]) / dx;
        (b, lo, hi, rho_new[j] * u_old[j] - dt * (px + cap))
    };

    match grid.bc {
        BcMode::Periodic => {
            for j in 0..n {
                let jl = (j + n - 1) % n;
                let jr = (j + 1) % n;
                let fl = (j + nf - 1) % nf;
                let (b, lo, hi, r) = interior(j, jl, jr, fl, j);
                diag[j] = b;
                sub[j] = lo;
                sup[j] = hi;
                rhs[j] = r;
            }
            tridiag::solve_cyclic(&sub, &diag, &sup, &rhs)
        }
        BcMode::Mixed => {
            diag[0] = 1.0;
            rhs[0] = 0.0;
            for j in 1..n - 1 {
                let (b, lo, hi, r) = interior(j, j - 1, j + 1, j - 1, j);
                diag[j] = b;
                sub[j] = lo;
                sup[j] = hi;
                rhs[j] = r;
            }
            diag[n - 1] = 1.0;
            rhs[n - 1] = 0.0;
            tridiag::solve(&sub, &diag, &sup, &rhs)
        }
    }
}

/// Implicit phase update: upwind advection by the frozen velocity, implicit
/// diffusion `(eps/rho) chi_xx`, explicit double-well reaction on the frozen
/// iterate.
fn phase_update(
    chi_old: &[f64],
    rho_new: &[f64],
    u_star: &[f64],
    chi_star: &[f64],
    grid: &Grid,
    params: &PhysParams,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = chi_old.len();
    let dx = grid.dx;
    let adv = dt / dx;

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    for j in 0..n {
        let k = params.eps * dt / (rho_new[j] * dx * dx);
        let a = rho_new[j] * u_star[j];
        let mut b = rho_new[j] + 2.0 * k;
        let (mut lo, mut hi) = (-k, -k);
        if a >= 0.0 {
            b += adv * a;
            lo -= adv * a;
        } else {
            b -= adv * a;
            hi += adv * a;
        }
        let c = chi_star[j];
        diag[j] = b;
        sub[j] = lo;
        sup[j] = hi;
        rhs[j] = rho_new[j] * chi_old[j] - dt * (c * c * c - c) / params.eps;
    }

    match grid.bc {
        BcMode::Periodic => tridiag::solve_cyclic(&sub, &diag, &sup, &rhs),
        BcMode::Mixed => {
            // zero-slope walls: mirrored neighbor folds into the inner band
            let k0 = params.eps * dt / (rho_new[0] * dx * dx);
            diag[0] = rho_new[0] + 2.0 * k0;
            sup[0] = -2.0 * k0;
            sub[0] = 0.0;
            rhs[0] =
                rho_new[0] * chi_old[0] - dt * (chi_star[0].powi(3) - chi_star[0]) / params.eps;
            let kn = params.eps * dt / (rho_new[n - 1] * dx * dx);
            diag[n - 1] = rho_new[n - 1] + 2.0 * kn;
            sub[n - 1] = -2.0 * kn;
            sup[n - 1] = 0.0;
            rhs[n - 1] = rho_new[n - 1] * chi_old[n - 1]
                - dt * (chi_star[n - 1].powi(3) - chi_star[n - 1]) / params.eps;
            tridiag::solve(&sub, &diag, &sup, &rhs)
        }
    }
}

/// Everything a finished run hands back: the ledger series, the requested
/// snapshots (always in laboratory coordinates; mass-coordinate runs also
/// keep their native profiles), and the final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ledger: Vec<EnergyLedger>,
    pub snapshots: Vec<(f64, FieldState)>,
    pub lagrange_snapshots: Vec<(f64, LagrangeState)>,
    pub final_state: FieldState,
    pub max_picard_iters: usize,
}

/// Advance a configured simulation from `t = 0` to `t_end`.
///
/// The step is adjusted to `t_end / n_steps` (never above the configured
/// `dt`) so ledger rows land on a uniform cadence. A ledger row is emitted
/// every `ledger_interval` (every step when the interval is 0), snapshots at
/// the configured times, and the run stops early with the blow-up error if a
/// step fails.
pub fn run(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.ctl.validate()?;
    let state0 = make_initial(&cfg.scenario, &cfg.grid, &cfg.params)?;
    check_compatibility(&state0, &cfg.grid, &cfg.params)?;

    let (n_steps, dt) = if cfg.ctl.t_end <= 0.0 {
        (0usize, cfg.ctl.dt)
    } else {
        let n = (cfg.ctl.t_end / cfg.ctl.dt - 1e-9).ceil().max(1.0) as usize;
        (n, cfg.ctl.t_end / n as f64)
    };
    let out_every = if cfg.output.ledger_interval <= 0.0 {
        1
    } else {
        ((cfg.output.ledger_interval / dt).round() as usize).max(1)
    };
    let snap_steps: Vec<usize> = {
        let mut s: Vec<usize> = cfg
            .output
            .snapshot_times
            .iter()
            .map(|&t| ((t / dt).round() as isize).clamp(0, n_steps as isize) as usize)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let ctl = StepControl { dt, ..cfg.ctl };

    match cfg.coords {
        Coordinates::Euler => {
            let mut state = state0;
            let mut traj = Trajectory {
                ledger: Vec::new(),
                snapshots: Vec::new(),
                lagrange_snapshots: Vec::new(),
                final_state: state.clone(),
                max_picard_iters: 0,
            };
            record(
                &mut traj,
                &state,
                &cfg.grid,
                &cfg.params,
                0,
                out_every,
                &snap_steps,
            )?;
            for i in 0..n_steps {
                let (next, stats) = step_with_stats(&state, &cfg.grid, &cfg.params, &ctl)?;
                state = next;
                state.time = (i + 1) as f64 * dt;
                traj.max_picard_iters = traj.max_picard_iters.max(stats.picard_iters);
                record(
                    &mut traj,
                    &state,
                    &cfg.grid,
                    &cfg.params,
                    i + 1,
                    out_every,
                    &snap_steps,
                )?;
            }
            traj.final_state = state;
            Ok(traj)
        }
        Coordinates::Lagrange => {
            let mut lstate = solver_lagrange::to_lagrange(&state0, &cfg.grid)?;
            let mut traj = Trajectory {
                ledger: Vec::new(),
                snapshots: Vec::new(),
                lagrange_snapshots: Vec::new(),
                final_state: state0,
                max_picard_iters: 0,
            };
            record_lagrange(
                &mut traj,
                &lstate,
                &cfg.grid,
                &cfg.params,
                0,
                out_every,
                &snap_steps,
            )?;
            for i in 0..n_steps {
                let (next, stats) =
                    solver_lagrange::step_lagrange_with_stats(&lstate, &cfg.params, &ctl)?;
                lstate = next;
                lstate.time = (i + 1) as f64 * dt;
                traj.max_picard_iters = traj.max_picard_iters.max(stats.picard_iters);
                record_lagrange(
                    &mut traj,
                    &lstate,
                    &cfg.grid,
                    &cfg.params,
                    i + 1,
                    out_every,
                    &snap_steps,
                )?;
            }
            traj.final_state = solver_lagrange::to_euler(&lstate, &cfg.grid)?;
            Ok(traj)
        }
    }
}

fn record(
    traj: &mut Trajectory,
    state: &FieldState,
    grid: &Grid,
    params: &PhysParams,
    step_idx: usize,
    out_every: usize,
    snap_steps: &[usize],
) -> Result<()> {
    if step_idx.is_multiple_of(out_every) {
        traj.ledger.push(diagnostics::ledger(state, grid, params)?);
    }
    if snap_steps.binary_search(&step_idx).is_ok() {
        traj.snapshots.push((state.time, state.clone()));
    }
    Ok(())
}

fn record_lagrange(
    traj: &mut Trajectory,
    lstate: &LagrangeState,
    grid: &Grid,
    params: &PhysParams,
    step_idx: usize,
    out_every: usize,
    snap_steps: &[usize],
) -> Result<()> {
    if step_idx.is_multiple_of(out_every) || snap_steps.binary_search(&step_idx).is_ok() {
        let mapped = solver_lagrange::to_euler(lstate, grid)?;
        if step_idx.is_multiple_of(out_every) {
            traj.ledger
                .push(diagnostics::ledger(&mapped, grid, params)?);
        }
        if snap_steps.binary_search(&step_idx).is_ok() {
            traj.snapshots.push((lstate.time, mapped));
            traj.lagrange_snapshots.push((lstate.time, lstate.clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Scenario;

    fn params() -> PhysParams {
        PhysParams::new(0.1, 0.05, 0.9, 0.1).unwrap()
    }

    fn uniform(grid: &Grid, rho: f64, u: f64, chi: f64) -> FieldState {
        make_initial(&Scenario::Uniform { rho, u, chi }, grid, &params()).unwrap()
    }

    #[test]
    fn uniform_pure_phase_is_steady() {
        for bc in [BcMode::Periodic, BcMode::Mixed] {
            let grid = Grid::new(1.0, 32, bc).unwrap();
            let ctl = StepControl::with_dt(1e-3, 1.0);
            let mut state = uniform(&grid, 0.1, 0.0, 1.0);
            let first = state.clone();
            for _ in 0..20 {
                let next = step(&state, &grid, &params(), &ctl).unwrap();
                assert!(max_abs_diff(&next.rho, &state.rho) < 1e-13);
                assert!(max_abs_diff(&next.u, &state.u) < 1e-13);
                assert!(max_abs_diff(&next.chi, &state.chi) < 1e-13);
                state = next;
            }
            assert!(max_abs_diff(&state.rho, &first.rho) < 1e-12);
        }
    }

    #[test]
    fn chi_zero_is_unstable_equilibrium() {
        let grid = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let ctl = StepControl::with_dt(1e-3, 1.0);
        // exactly zero stays zero
        let state = uniform(&grid, 1.0, 0.0, 0.0);
        let next = step(&state, &grid, &params(), &ctl).unwrap();
        assert!(next.chi.iter().all(|&c| c.abs() < 1e-14));
        // a seeded perturbation departs toward the wells
        let seeded = make_initial(
            &Scenario::SeededRandom {
                rho_mean: 1.0,
                amplitude: 0.05,
                seed: 3,
            },
            &grid,
            &params(),
        )
        .unwrap();
        let mut state = seeded.clone();
        for _ in 0..400 {
            state = step(&state, &grid, &params(), &ctl).unwrap();
        }
        let mean_abs0 = seeded.chi.iter().map(|c| c.abs()).sum::<f64>() / seeded.chi.len() as f64;
        let mean_abs = state.chi.iter().map(|c| c.abs()).sum::<f64>() / state.chi.len() as f64;
        assert!(
            mean_abs > 10.0 * mean_abs0 && mean_abs > 0.5,
            "|chi| did not grow: {mean_abs0} -> {mean_abs}"
        );
    }

    #[test]
    fn mass_is_conserved_in_flux_form() {
        for bc in [BcMode::Periodic, BcMode::Mixed] {
            let grid = Grid::new(1.0, 64, bc).unwrap();
            let ctl = StepControl::with_dt(5e-4, 1.0);
            let mut state = make_initial(
                &Scenario::SinePerturb {
                    rho_mean: 1.0,
                    amplitude: 0.1,
                    wavenumber: 1,
                    chi: 0.5,
                },
                &grid,
                &params(),
            )
            .unwrap();
            let m0 = grid.integrate(&state.rho);
            for _ in 0..200 {
                state = step(&state, &grid, &params(), &ctl).unwrap();
            }
            let drift = (grid.integrate(&state.rho) - m0).abs() / m0;
            assert!(drift < 1e-13, "mass drift {drift} ({bc:?})");
        }
    }

    #[test]
    fn near_vacuum_and_near_three_densities_blow_up() {
        let grid = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let ctl = StepControl::with_dt(1e-4, 1.0);
        let n = grid.n_points();
        let mut rho = vec![1.0; n];
        rho[5] = 3.0 - 5e-7; // inside (0,3): a valid state, but past the ceiling guard
        let state = FieldState {
            rho,
            u: vec![0.0; n],
            chi: vec![1.0; n],
            time: 0.25,
        };
        match step(&state, &grid, &params(), &ctl) {
            Err(Error::BlowUp { cell, time, .. }) => {
                assert_eq!(cell, 5);
                assert!(time > 0.25);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn oversized_step_trips_the_cfl_guard() {
        let grid = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let n = grid.n_points();
        let state = FieldState {
            rho: vec![1.0; n],
            u: vec![0.8; n],
            chi: vec![1.0; n],
            time: 0.0,
        };
        // limit is cfl * dx / 0.8 ~ 0.0195; ask for far more
        let ctl = StepControl::with_dt(0.1, 1.0);
        match step(&state, &grid, &params(), &ctl) {
            Err(Error::BlowUp { what, .. }) => assert!(what.contains("CFL"), "{what}"),
            other => panic!("expected CFL violation, got {other:?}"),
        }
    }

    #[test]
    fn picard_count_drops_to_two_for_tiny_steps() {
        let grid = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let state = make_initial(
            &Scenario::SinePerturb {
                rho_mean: 1.0,
                amplitude: 0.1,
                wavenumber: 1,
                chi: 0.5,
            },
            &grid,
            &params(),
        )
        .unwrap();
        let ctl = StepControl::with_dt(1e-9, 1.0);
        let (_, stats) = step_with_stats(&state, &grid, &params(), &ctl).unwrap();
        assert!(stats.picard_iters <= 2, "iters = {}", stats.picard_iters);
    }

    #[test]
    fn picard_cap_of_one_fails_with_halving_report() {
        let grid = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let state = make_initial(
            &Scenario::SinePerturb {
                rho_mean: 1.0,
                amplitude: 0.1,
                wavenumber: 1,
                chi: 0.5,
            },
            &grid,
            &params(),
        )
        .unwrap();
        let ctl = StepControl {
            dt: 2e-3,
            cfl: 0.9,
            picard_tol: 1e-12,
            picard_max: 1,
            t_end: 1.0,
        };
        assert!(matches!(
            step(&state, &grid, &params(), &ctl),
            Err(Error::PicardDiverged { .. })
        ));
    }

    #[test]
    fn evolution_commutes_with_translation() {
        let grid = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let ctl = StepControl::with_dt(5e-4, 1.0);
        let state = make_initial(
            &Scenario::SeededRandom {
                rho_mean: 1.0,
                amplitude: 0.1,
                seed: 11,
            },
            &grid,
            &params(),
        )
        .unwrap();
        let n = grid.n_points();
        let shift = 17;
        let rotate = |f: &[f64]| -> Vec<f64> { (0..n).map(|j| f[(j + shift) % n]).collect() };
        let shifted = FieldState {
            rho: rotate(&state.rho),
            u: rotate(&state.u),
            chi: rotate(&state.chi),
            time: 0.0,
        };
        let mut a = state;
        let mut b = shifted;
        for _ in 0..10 {
            a = step(&a, &grid, &params(), &ctl).unwrap();
            b = step(&b, &grid, &params(), &ctl).unwrap();
        }
        let ra = rotate(&a.rho);
        let ua = rotate(&a.u);
        let ca = rotate(&a.chi);
        assert!(max_abs_diff(&ra, &b.rho) < 1e-12);
        assert!(max_abs_diff(&ua, &b.u) < 1e-12);
        assert!(max_abs_diff(&ca, &b.chi) < 1e-12);
    }

    #[test]
    fn self_convergence_under_refinement() {
        // L-infinity distance between successive refinements shrinks at
        // first order or better
        let run_to = |n: usize, t: f64| -> FieldState {
            let grid = Grid::new(1.0, n, BcMode::Periodic).unwrap();
            let dt = 1e-3 * 32.0 / n as f64;
            let steps = (t / dt).round() as usize;
            let mut state = make_initial(
                &Scenario::SinePerturb {
                    rho_mean: 1.0,
                    amplitude: 0.1,
                    wavenumber: 1,
                    chi: 0.5,
                },
                &grid,
                &params(),
            )
            .unwrap();
            let ctl = StepControl::with_dt(dt, t);
            for _ in 0..steps {
                state = step(&state, &grid, &params(), &ctl).unwrap();
            }
            state
        };
        let t = 0.05;
        let coarse = run_to(32, t);
        let mid = run_to(64, t);
        let fine = run_to(128, t);
        let restrict = |f: &[f64]| -> Vec<f64> { f.iter().step_by(2).copied().collect() };
        let d1 = max_abs_diff(&coarse.rho, &restrict(&mid.rho));
        let d2 = max_abs_diff(&mid.rho, &restrict(&fine.rho));
        let order = (d1 / d2).log2();
        assert!(order > 0.8, "observed order {order} ({d1} vs {d2})");
    }

    #[test]
    fn run_with_zero_horizon_returns_single_row() {
        let cfg = crate::config::SimConfig::builder_for_tests(0.0);
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.ledger.len(), 1);
        assert_eq!(traj.ledger[0].time, 0.0);
    }

    #[test]
    fn steady_run_has_constant_ledger() {
        let mut cfg = crate::config::SimConfig::builder_for_tests(0.05);
        cfg.scenario = Scenario::Uniform {
            rho: 0.1,
            u: 0.0,
            chi: 1.0,
        };
        let traj = run(&cfg).unwrap();
        assert!(traj.ledger.len() > 3);
        let first = &traj.ledger[0];
        for row in &traj.ledger {
            assert!((row.mass - first.mass).abs() < 1e-12);
            assert!((row.energy_total - first.energy_total).abs() < 1e-12);
        }
    }
}
