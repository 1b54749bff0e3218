//! Independent solver in Lagrangian mass coordinates, used to cross-validate
//! the laboratory-frame stepper.
//!
//! The change of variables `y = integral_0^x rho ds`, `v = 1/rho` removes
//! advection entirely and turns the system into
//!
//! ```text
//! v_t   = u_y
//! u_t + p(1/v)_y = nu (u_y / v)_y - (eps/2) (chi_y^2 / v^2)_y
//! chi_t = -(v/eps)(chi^3 - chi) + eps v (chi_y / v)_y
//! ```
//!
//! (each right-hand side being the exact transform of its laboratory-frame
//! counterpart, which is what the cross-validation in `checks` relies on).
//!
//! posed on a `rho_bar L`-periodic interval in `y` (`rho_bar` the mean
//! density). Only the periodic problem is treated here; wall-bounded runs are
//! validated in laboratory coordinates.
//!
//! The laboratory position of the `y = 0` particle is integrated alongside
//! the fields; without it the inverse map is only known up to a drift and
//! cross-solver comparisons would stall at a resolution-independent offset.

use crate::eos::{pressure_raw, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{BcMode, FieldState, Grid};
use crate::solver_euler::{StepControl, StepStats, CFL_U_FLOOR, RHO_CEIL_GUARD, RHO_FLOOR};
use crate::tridiag;

/// Discrete `(v, u, chi)` fields on a uniform mass-coordinate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeState {
    /// Specific volume `1/rho`; must stay above 1/3.
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
    /// Mass-coordinate period `rho_bar * L`.
    pub period: f64,
    pub time: f64,
    /// Laboratory position of the `y = 0` particle.
    pub x_origin: f64,
}

impl LagrangeState {
    pub fn dy(&self) -> f64 {
        self.period / self.v.len() as f64
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }
}

/// Map a periodic laboratory-frame state to mass coordinates: cumulative mass
/// by trapezoidal quadrature, then linear resampling of `(1/rho, u, chi)`
/// onto a uniform `y` grid with the same number of nodes.
pub fn to_lagrange(state: &FieldState, grid: &Grid) -> Result<LagrangeState> {
    if grid.bc != BcMode::Periodic {
        return Err(Error::NotApplicable(
            "mass-coordinate transform is defined for the periodic problem".into(),
        ));
    }
    state.validate(grid)?;
    let n = grid.n_points();
    let mut y = vec![0.0; n + 1];
    for j in 0..n {
        let right = state.rho[(j + 1) % n];
        let dm = 0.5 * grid.dx * (state.rho[j] + right);
        if !(dm.is_finite() && dm > 0.0) {
            return Err(Error::Numerical(format!(
                "cumulative mass not strictly increasing at cell {j}"
            )));
        }
        y[j + 1] = y[j] + dm;
    }
    let period = y[n];

    let v_nodes: Vec<f64> = state.rho.iter().map(|&r| 1.0 / r).collect();
    let sample = |f: &[f64], yt: f64, seg: usize| -> f64 {
        let right = f[(seg + 1) % n];
        let t = (yt - y[seg]) / (y[seg + 1] - y[seg]);
        (1.0 - t) * f[seg] + t * right
    };

    let dy = period / n as f64;
    let mut v = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut chi = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let yt = i as f64 * dy;
        while seg + 1 < n && y[seg + 1] < yt {
            seg += 1;
        }
        v.push(sample(&v_nodes, yt, seg));
        u.push(sample(&state.u, yt, seg));
        chi.push(sample(&state.chi, yt, seg));
    }
    Ok(LagrangeState {
        v,
        u,
        chi,
        period,
        time: state.time,
        x_origin: 0.0,
    })
}

/// Map a mass-coordinate state back onto the uniform laboratory grid:
/// cumulative volume gives the particle positions, fields are resampled
/// linearly with periodic wrapping.
pub fn to_euler(lstate: &LagrangeState, grid: &Grid) -> Result<FieldState> {
    if grid.bc != BcMode::Periodic {
        return Err(Error::NotApplicable(
            "mass-coordinate transform is defined for the periodic problem".into(),
        ));
    }
    let n = lstate.v.len();
    if n != grid.n_points() {
        return Err(Error::Usage(format!(
            "grid has {} points but the mass-coordinate state has {n}",
            grid.n_points()
        )));
    }
    let dy = lstate.dy();
    let mut x = vec![lstate.x_origin; n + 1];
    for j in 0..n {
        let right = lstate.v[(j + 1) % n];
        x[j + 1] = x[j] + 0.5 * dy * (lstate.v[j] + right);
    }
    let total = x[n] - x[0];
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numerical("non-positive total volume".into()));
    }

    let rho_nodes: Vec<f64> = lstate.v.iter().map(|&v| 1.0 / v).collect();
    let mut rho = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut chi = Vec::with_capacity(n);
    for i in 0..n {
        let target = i as f64 * grid.dx;
        let mut t = target - total * ((target - x[0]) / total).floor();
        if t < x[0] {
            t = x[0];
        }
        if t >= x[n] {
            t -= total;
        }
        let seg = x[1..=n].partition_point(|&xi| xi < t).min(n - 1);
        let w = (t - x[seg]) / (x[seg + 1] - x[seg]);
        let lerp = |f: &[f64]| -> f64 {
            let right = f[(seg + 1) % n];
            (1.0 - w) * f[seg] + w * right
        };
        rho.push(lerp(&rho_nodes));
        u.push(lerp(&lstate.u));
        chi.push(lerp(&lstate.chi));
    }
    Ok(FieldState {
        rho,
        u,
        chi,
        time: lstate.time,
    })
}

/// Flux-form volume update `v += dt * u_y` (face means differenced, which is
/// the centered derivative); total volume telescopes exactly.
pub(crate) fn volume_update(v: &[f64], u: &[f64], dy: f64, dt: f64) -> Vec<f64> {
    let n = v.len();
    let face: Vec<f64> = (0..n).map(|j| 0.5 * (u[j] + u[(j + 1) % n])).collect();
    (0..n)
        .map(|j| v[j] + dt / dy * (face[j] - face[(j + n - 1) % n]))
        .collect()
}

/// Advance one step of `ctl.dt`; same retry-once-with-half-steps policy as
/// the laboratory solver.
pub fn step_lagrange(
    state: &LagrangeState,
    params: &PhysParams,
    ctl: &StepControl,
) -> Result<LagrangeState> {
    step_lagrange_with_stats(state, params, ctl).map(|(s, _)| s)
}

pub fn step_lagrange_with_stats(
    state: &LagrangeState,
    params: &PhysParams,
    ctl: &StepControl,
) -> Result<(LagrangeState, StepStats)> {
    // accuracy-motivated bound; there is no advective stability limit here
    let umax = state.max_abs_u().max(CFL_U_FLOOR);
    let limit = ctl.cfl * state.dy() / umax;
    if ctl.dt > limit * (1.0 + 1e-12) {
        return Err(Error::BlowUp {
            time: state.time,
            cell: 0,
            what: format!("step bound exceeded: dt = {:.3e} > {limit:.3e}", ctl.dt),
        });
    }
    match attempt_step(state, params, ctl, ctl.dt) {
        Ok((s, iters)) => Ok((
            s,
            StepStats {
                picard_iters: iters,
                halved: false,
            },
        )),
        Err(Error::PicardDiverged { .. }) => {
            let half = 0.5 * ctl.dt;
            let (s1, it1) = attempt_step(state, params, ctl, half)?;
            let (s2, it2) = attempt_step(&s1, params, ctl, half)?;
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

fn attempt_step(
    state: &LagrangeState,
    params: &PhysParams,
    ctl: &StepControl,
    dt: f64,
) -> Result<(LagrangeState, usize)> {
    let n = state.v.len();
    let dy = state.dy();
    let new_time = state.time + dt;

    let mut v_prev = state.v.clone();
    let mut u_prev = state.u.clone();
    let mut chi_prev = state.chi.clone();

    for iter in 1..=ctl.picard_max {
        let v_new = volume_update(&state.v, &u_prev, dy, dt);
        check_volume(&v_new, new_time)?;
        let u_new = momentum_update(&state.u, &v_new, &chi_prev, params, dy, dt)?;
        let chi_new = phase_update(&state.chi, &v_new, &chi_prev, params, dy, dt)?;
        for (j, val) in u_new.iter().chain(chi_new.iter()).enumerate() {
            if !val.is_finite() {
                return Err(Error::BlowUp {
                    time: new_time,
                    cell: j % n,
                    what: "non-finite field in mass coordinates".into(),
                });
            }
        }

        let delta = max_abs_diff(&v_new, &v_prev)
            .max(max_abs_diff(&u_new, &u_prev))
            .max(max_abs_diff(&chi_new, &chi_prev));
        v_prev = v_new;
        u_prev = u_new;
        chi_prev = chi_new;
        if delta < ctl.picard_tol {
            return Ok((
                LagrangeState {
                    x_origin: state.x_origin + dt * u_prev[0],
                    v: v_prev,
                    u: u_prev,
                    chi: chi_prev,
                    period: state.period,
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

fn check_volume(v: &[f64], time: f64) -> Result<()> {
    let v_min = 1.0 / (3.0 - RHO_CEIL_GUARD);
    let v_max = 1.0 / RHO_FLOOR;
    for (j, &val) in v.iter().enumerate() {
        if !val.is_finite() || val <= v_min || val >= v_max {
            return Err(Error::BlowUp {
                time,
                cell: j,
                what: format!("specific volume {val} left ({v_min:.6}, {v_max:.0})"),
            });
        }
    }
    Ok(())
}

fn momentum_update(
    u_old: &[f64],
    v_new: &[f64],
    chi_star: &[f64],
    params: &PhysParams,
    dy: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = u_old.len();
    let vf: Vec<f64> = (0..n)
        .map(|j| 0.5 * (v_new[j] + v_new[(j + 1) % n]))
        .collect();
    let slope_sq_over_v2: Vec<f64> = (0..n)
        .map(|j| {
            let g = (chi_star[(j + 1) % n] - chi_star[j]) / dy;
            (g / vf[j]) * (g / vf[j])
        })
        .collect();
    let p: Vec<f64> = v_new
        .iter()
        .map(|&v| pressure_raw(1.0 / v, params.theta))
        .collect();

    let c = params.nu * dt / (dy * dy);
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for j in 0..n {
        let fl = (j + n - 1) % n;
        diag[j] = 1.0 + c * (1.0 / vf[j] + 1.0 / vf[fl]);
        sub[j] = -c / vf[fl];
        sup[j] = -c / vf[j];
        let py = (p[(j + 1) % n] - p[fl]) / (2.0 * dy);
        // (eps/2)(chi_x^2)_x transforms to (eps/2)(chi_y^2 / v^2)_y
        let cap = 0.5 * params.eps * (slope_sq_over_v2[j] - slope_sq_over_v2[fl]) / dy;
        rhs[j] = u_old[j] - dt * (py + cap);
    }
    tridiag::solve_cyclic(&sub, &diag, &sup, &rhs)
}

fn phase_update(
    chi_old: &[f64],
    v_new: &[f64],
    chi_star: &[f64],
    params: &PhysParams,
    dy: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = chi_old.len();
    let vf: Vec<f64> = (0..n)
        .map(|j| 0.5 * (v_new[j] + v_new[(j + 1) % n]))
        .collect();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for j in 0..n {
        let fl = (j + n - 1) % n;
        let c = params.eps * v_new[j] * dt / (dy * dy);
        diag[j] = 1.0 + c * (1.0 / vf[j] + 1.0 / vf[fl]);
        sub[j] = -c / vf[fl];
        sup[j] = -c / vf[j];
        let s = chi_star[j];
        rhs[j] = chi_old[j] - dt * v_new[j] / params.eps * (s * s * s - s);
    }
    tridiag::solve_cyclic(&sub, &diag, &sup, &rhs)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Largest per-field sup-norm distance between two states on the same grid,
/// each scaled by `max(sup |field|, 1)`. The unit floor keeps the metric
/// meaningful for fields that are still near zero (early-time velocity).
pub fn field_discrepancy(a: &FieldState, b: &FieldState) -> f64 {
    let rel = |x: &[f64], y: &[f64]| -> f64 {
        let sup = x
            .iter()
            .chain(y.iter())
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
            .max(1.0);
        max_abs_diff(x, y) / sup
    };
    rel(&a.rho, &b.rho)
        .max(rel(&a.u, &b.u))
        .max(rel(&a.chi, &b.chi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_initial, Scenario};
    use crate::solver_euler;

    fn params() -> PhysParams {
        PhysParams::new(0.1, 0.05, 0.9, 0.1).unwrap()
    }

    fn sine_state(n: usize) -> (Grid, FieldState) {
        let grid = Grid::new(1.0, n, BcMode::Periodic).unwrap();
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
        (grid, state)
    }

    #[test]
    fn uniform_transform_is_exact() {
        let grid = Grid::new(2.0, 32, BcMode::Periodic).unwrap();
        let state = make_initial(
            &Scenario::Uniform {
                rho: 0.8,
                u: 0.3,
                chi: -0.2,
            },
            &grid,
            &params(),
        )
        .unwrap();
        let l = to_lagrange(&state, &grid).unwrap();
        assert!((l.period - 0.8 * 2.0).abs() < 1e-14);
        for j in 0..32 {
            assert!((l.v[j] - 1.0 / 0.8).abs() < 1e-14);
            assert!((l.u[j] - 0.3).abs() < 1e-14);
            assert!((l.chi[j] + 0.2).abs() < 1e-14);
        }
    }

    #[test]
    fn transform_rejects_wall_grids() {
        let grid = Grid::new(1.0, 32, BcMode::Mixed).unwrap();
        let state = make_initial(
            &Scenario::Uniform {
                rho: 1.0,
                u: 0.0,
                chi: 1.0,
            },
            &grid,
            &params(),
        )
        .unwrap();
        assert!(matches!(
            to_lagrange(&state, &grid),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn round_trip_error_shrinks_at_second_order() {
        let err_at = |n: usize| -> f64 {
            let (grid, state) = sine_state(n);
            let back = to_euler(&to_lagrange(&state, &grid).unwrap(), &grid).unwrap();
            max_abs_diff(&state.rho, &back.rho)
                .max(max_abs_diff(&state.u, &back.u))
                .max(max_abs_diff(&state.chi, &back.chi))
        };
        let e1 = err_at(64);
        let e2 = err_at(128);
        let rate = (e1 / e2).log2();
        assert!(rate > 1.7, "round-trip rate {rate} ({e1} vs {e2})");
    }

    #[test]
    fn lagrange_image_volume_matches_domain_length() {
        let (grid, state) = sine_state(128);
        let l = to_lagrange(&state, &grid).unwrap();
        let dy = l.dy();
        let total: f64 = (0..128)
            .map(|j| 0.5 * dy * (l.v[j] + l.v[(j + 1) % 128]))
            .sum();
        assert!(
            (total - grid.length).abs() < 5e-4,
            "volume {total} vs {}",
            grid.length
        );
        // quadrature-limited identity: error falls at second order
        let (grid2, state2) = sine_state(256);
        let l2 = to_lagrange(&state2, &grid2).unwrap();
        let dy2 = l2.dy();
        let total2: f64 = (0..256)
            .map(|j| 0.5 * dy2 * (l2.v[j] + l2.v[(j + 1) % 256]))
            .sum();
        let rate = ((total - grid.length).abs() / (total2 - grid2.length).abs()).log2();
        assert!(rate > 1.7, "volume identity rate {rate}");
    }

    #[test]
    fn uniform_pure_phase_is_steady() {
        let grid = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let state = make_initial(
            &Scenario::Uniform {
                rho: 0.1,
                u: 0.0,
                chi: -1.0,
            },
            &grid,
            &params(),
        )
        .unwrap();
        let mut l = to_lagrange(&state, &grid).unwrap();
        let ctl = StepControl::with_dt(1e-3, 1.0);
        let first = l.clone();
        for _ in 0..20 {
            let next = step_lagrange(&l, &params(), &ctl).unwrap();
            assert!(max_abs_diff(&next.v, &l.v) < 1e-13);
            assert!(max_abs_diff(&next.u, &l.u) < 1e-13);
            assert!(max_abs_diff(&next.chi, &l.chi) < 1e-13);
            l = next;
        }
        assert!(max_abs_diff(&l.v, &first.v) < 1e-12);
    }

    #[test]
    fn volume_update_is_the_exact_linear_flux_form() {
        let n = 64;
        let period = 1.3;
        let dy = period / n as f64;
        let dt = 1e-3;
        let v: Vec<f64> = vec![1.0; n];
        let u: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin())
            .collect();
        let out = volume_update(&v, &u, dy, dt);
        for j in 0..n {
            // the centered difference of the frozen velocity, to rounding
            let expected = dt * (u[(j + 1) % n] - u[(j + n - 1) % n]) / (2.0 * dy);
            assert!((out[j] - v[j] - expected).abs() < 1e-15, "cell {j}");
            // and second-order close to the analytic derivative
            let k = 2.0 * std::f64::consts::PI / period;
            let analytic = dt * k * (k * (j as f64) * dy).cos();
            assert!((out[j] - v[j] - analytic).abs() < 2.0 * dt * k * k * dy * dy);
        }
    }

    #[test]
    fn total_volume_is_conserved_per_step() {
        let (grid, state) = sine_state(64);
        let mut l = to_lagrange(&state, &grid).unwrap();
        let ctl = StepControl::with_dt(5e-4, 1.0);
        let dy = l.dy();
        let total0: f64 = l.v.iter().sum::<f64>() * dy;
        for _ in 0..100 {
            l = step_lagrange(&l, &params(), &ctl).unwrap();
            let total: f64 = l.v.iter().sum::<f64>() * dy;
            assert!((total - total0).abs() / total0 < 1e-12);
        }
    }

    #[test]
    fn volume_near_one_third_blows_up() {
        let n = 32;
        let mut v = vec![1.0; n];
        v[7] = 1.0 / 3.0 + 1e-9; // below the ceiling guard on rho = 1/v
        let l = LagrangeState {
            v,
            u: vec![0.0; n],
            chi: vec![1.0; n],
            period: 1.0,
            time: 0.5,
            x_origin: 0.0,
        };
        let ctl = StepControl::with_dt(1e-4, 1.0);
        match step_lagrange(&l, &params(), &ctl) {
            Err(Error::BlowUp { cell, .. }) => assert_eq!(cell, 7),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn both_solvers_agree_after_short_evolution() {
        let n = 128;
        let (grid, state) = sine_state(n);
        let p = params();
        let dt = 2.5e-4;
        let steps = 200; // T = 0.05
        let ctl = StepControl::with_dt(dt, 1.0);

        let mut euler = state.clone();
        for _ in 0..steps {
            euler = solver_euler::step(&euler, &grid, &p, &ctl).unwrap();
        }
        let mut lag = to_lagrange(&state, &grid).unwrap();
        for _ in 0..steps {
            lag = step_lagrange(&lag, &p, &ctl).unwrap();
        }
        let mapped = to_euler(&lag, &grid).unwrap();
        let d = field_discrepancy(&euler, &mapped);
        assert!(d < 0.02, "cross-solver discrepancy {d}");
    }
}
