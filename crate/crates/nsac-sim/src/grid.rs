//! Uniform 1-D grids, discrete `(rho, u, chi)` states, initial data and
//! snapshot I/O.
//!
//! Fields live on nodes `x_j = j dx`. In periodic mode there are `n_cells`
//! nodes (`x = L` wraps to `x = 0`); in mixed mode both walls carry nodes,
//! giving `n_cells + 1`, with `u = 0` and `chi_x = 0` enforced at the walls.
//! The density carries no wall condition: with `u = 0` there, mass
//! characteristics are tangent to the boundary.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eos::PhysParams;
use crate::error::{Error, Result};

/// Slack allowed on `|chi| <= 1` along trajectories; the discrete scheme does
/// not inherit the continuous maximum principle exactly, and excursions beyond
/// this are treated as blow-up rather than noise.
pub const CHI_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcMode {
    /// Everything wraps with period `L`.
    Periodic,
    /// Walls at `x = 0` and `x = L`: `u = 0`, `chi_x = 0`.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub n_cells: usize,
    pub dx: f64,
    pub bc: BcMode,
}

impl Grid {
    pub fn new(length: f64, n_cells: usize, bc: BcMode) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Construction(format!(
                "grid length must be positive, got {length}"
            )));
        }
        if n_cells < 8 {
            return Err(Error::Construction(format!(
                "grid needs at least 8 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            length,
            n_cells,
            dx: length / n_cells as f64,
            bc,
        })
    }

    /// Number of field values: `n_cells` in periodic mode, `n_cells + 1` in
    /// mixed mode (walls carry nodes).
    pub fn n_points(&self) -> usize {
        match self.bc {
            BcMode::Periodic => self.n_cells,
            BcMode::Mixed => self.n_cells + 1,
        }
    }

    /// Number of inter-node faces; `n_cells` in both modes (the periodic wrap
    /// face closes the circle).
    pub fn n_faces(&self) -> usize {
        self.n_cells
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points()).map(|j| j as f64 * self.dx).collect()
    }

    /// Trapezoidal quadrature consistent with the boundary mode: a plain sum
    /// in periodic mode, half-weighted wall nodes in mixed mode.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_points());
        match self.bc {
            BcMode::Periodic => f.iter().sum::<f64>() * self.dx,
            BcMode::Mixed => {
                let n = f.len();
                let inner: f64 = f[1..n - 1].iter().sum();
                (inner + 0.5 * (f[0] + f[n - 1])) * self.dx
            }
        }
    }

    /// Midpoint quadrature of face-centered values (one per face).
    pub fn integrate_faces(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_faces());
        f.iter().sum::<f64>() * self.dx
    }

    /// Face-centered first differences `(f[j+1] - f[j]) / dx`; the last
    /// periodic face wraps around.
    pub fn face_diff(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n_faces();
        (0..n)
            .map(|j| {
                let right = if j + 1 < f.len() { f[j + 1] } else { f[0] };
                (right - f[j]) / self.dx
            })
            .collect()
    }

    /// Face-centered arithmetic means, companion to [`Grid::face_diff`].
    pub fn face_mean(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n_faces();
        (0..n)
            .map(|j| {
                let right = if j + 1 < f.len() { f[j + 1] } else { f[0] };
                0.5 * (f[j] + right)
            })
            .collect()
    }

    /// Node-centered second difference. Mixed mode mirrors the field across
    /// the walls (zero slope), matching the phase-field wall condition.
    pub fn second_diff(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let inv = 1.0 / (self.dx * self.dx);
        (0..n)
            .map(|j| {
                let (fl, fr) = match self.bc {
                    BcMode::Periodic => (f[(j + n - 1) % n], f[(j + 1) % n]),
                    BcMode::Mixed => (
                        if j == 0 { f[1] } else { f[j - 1] },
                        if j + 1 == n { f[n - 2] } else { f[j + 1] },
                    ),
                };
                (fr - 2.0 * f[j] + fl) * inv
            })
            .collect()
    }

    /// Node-centered central first difference, with the same mirrored ghosts
    /// in mixed mode (so the derivative vanishes at the walls).
    pub fn central_diff(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let inv = 1.0 / (2.0 * self.dx);
        (0..n)
            .map(|j| {
                let (fl, fr) = match self.bc {
                    BcMode::Periodic => (f[(j + n - 1) % n], f[(j + 1) % n]),
                    BcMode::Mixed => (
                        if j == 0 { f[1] } else { f[j - 1] },
                        if j + 1 == n { f[n - 2] } else { f[j + 1] },
                    ),
                };
                (fr - fl) * inv
            })
            .collect()
    }
}

/// Discrete `(rho, u, chi)` fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    /// Check the pointwise state invariants: finite fields, `0 < rho < 3`,
    /// `|chi| <= 1 + CHI_SLACK`, consistent lengths.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let n = grid.n_points();
        if self.rho.len() != n || self.u.len() != n || self.chi.len() != n {
            return Err(Error::Construction(format!(
                "field length mismatch: grid has {n} points, state has ({}, {}, {})",
                self.rho.len(),
                self.u.len(),
                self.chi.len()
            )));
        }
        for j in 0..n {
            if !(self.rho[j].is_finite() && self.u[j].is_finite() && self.chi[j].is_finite()) {
                return Err(Error::Construction(format!("non-finite field at cell {j}")));
            }
            if self.rho[j] <= 0.0 || self.rho[j] >= 3.0 {
                return Err(Error::Construction(format!(
                    "rho = {} outside (0, 3) at cell {j}",
                    self.rho[j]
                )));
            }
            if self.chi[j].abs() > 1.0 + CHI_SLACK {
                return Err(Error::Construction(format!(
                    "chi = {} outside [-1, 1] at cell {j}",
                    self.chi[j]
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

/// Initial-condition families.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// Constant fields.
    Uniform { rho: f64, u: f64, chi: f64 },
    /// `rho = rho_mean + amplitude sin(2 pi k x / L)`, `u = 0`, constant chi.
    SinePerturb {
        rho_mean: f64,
        amplitude: f64,
        wavenumber: u32,
        chi: f64,
    },
    /// Smooth density step centered at `L/2` over the given width, with chi
    /// running from -1 to +1 across the same interface; `u = 0`.
    TanhInterface {
        rho_left: f64,
        rho_right: f64,
        width: f64,
    },
    /// Uniform i.i.d. perturbations of amplitude `amplitude` about `rho_mean`
    /// for the density and about 0 for chi, `u = 0`. Reproducible from the
    /// seed.
    SeededRandom {
        rho_mean: f64,
        amplitude: f64,
        seed: u64,
    },
}

/// Build the initial state for a scenario and check the admissibility of the
/// data: `0 < rho_0 < 3` and `|chi_0| <= 1` (no slack at `t = 0`).
pub fn make_initial(scenario: &Scenario, grid: &Grid, _params: &PhysParams) -> Result<FieldState> {
    let n = grid.n_points();
    let xs = grid.positions();
    let state = match *scenario {
        Scenario::Uniform { rho, u, chi } => FieldState {
            rho: vec![rho; n],
            u: vec![u; n],
            chi: vec![chi; n],
            time: 0.0,
        },
        Scenario::SinePerturb {
            rho_mean,
            amplitude,
            wavenumber,
            chi,
        } => {
            if wavenumber == 0 {
                return Err(Error::Construction(
                    "sine perturbation needs wavenumber >= 1".into(),
                ));
            }
            let k = 2.0 * std::f64::consts::PI * wavenumber as f64 / grid.length;
            FieldState {
                rho: xs
                    .iter()
                    .map(|x| rho_mean + amplitude * (k * x).sin())
                    .collect(),
                u: vec![0.0; n],
                chi: vec![chi; n],
                time: 0.0,
            }
        }
        Scenario::TanhInterface {
            rho_left,
            rho_right,
            width,
        } => {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::Construction(format!(
                    "interface width must be positive, got {width}"
                )));
            }
            let c = 0.5 * grid.length;
            let profile: Vec<f64> = xs.iter().map(|x| ((x - c) / width).tanh()).collect();
            FieldState {
                rho: profile
                    .iter()
                    .map(|t| rho_left + 0.5 * (rho_right - rho_left) * (1.0 + t))
                    .collect(),
                u: vec![0.0; n],
                chi: profile,
                time: 0.0,
            }
        }
        Scenario::SeededRandom {
            rho_mean,
            amplitude,
            seed,
        } => {
            if !(amplitude.is_finite() && amplitude >= 0.0) {
                return Err(Error::Construction(format!(
                    "perturbation amplitude must be nonnegative, got {amplitude}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rho = Vec::with_capacity(n);
            let mut chi = Vec::with_capacity(n);
            for _ in 0..n {
                rho.push(rho_mean + amplitude * (2.0 * rng.gen::<f64>() - 1.0));
                chi.push(amplitude * (2.0 * rng.gen::<f64>() - 1.0));
            }
            FieldState {
                rho,
                u: vec![0.0; n],
                chi,
                time: 0.0,
            }
        }
    };
    for j in 0..n {
        if !(state.rho[j] > 0.0 && state.rho[j] < 3.0) || !state.rho[j].is_finite() {
            return Err(Error::Construction(format!(
                "scenario produces rho = {} outside (0, 3) at cell {j}",
                state.rho[j]
            )));
        }
        if !state.chi[j].is_finite() || state.chi[j].abs() > 1.0 {
            return Err(Error::Construction(format!(
                "scenario produces chi = {} outside [-1, 1] at cell {j}",
                state.chi[j]
            )));
        }
        if !state.u[j].is_finite() {
            return Err(Error::Construction(format!("non-finite u at cell {j}")));
        }
    }
    Ok(state)
}

/// Initial time derivative of the phase field implied by the data:
/// `chi_t(0) = -u0 chi0_x + (eps / rho0^2) chi0_xx - (chi0^3 - chi0) / (eps rho0)`.
pub fn check_compatibility(
    state: &FieldState,
    grid: &Grid,
    params: &PhysParams,
) -> Result<Vec<f64>> {
    state.validate(grid)?;
    let chi_x = grid.central_diff(&state.chi);
    let chi_xx = grid.second_diff(&state.chi);
    let mut out = Vec::with_capacity(state.chi.len());
    for j in 0..state.chi.len() {
        let rho = state.rho[j];
        let chi = state.chi[j];
        let v = -state.u[j] * chi_x[j] + params.eps / (rho * rho) * chi_xx[j]
            - (chi * chi * chi - chi) / (params.eps * rho);
        if !v.is_finite() {
            return Err(Error::Construction(format!(
                "compatibility field non-finite at cell {j}"
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// One saved profile: a coordinate column plus the three fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub coord: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
}

/// Write a snapshot CSV (`<coord_name>,rho,u,chi`). 17 significant digits,
/// which round-trips f64 exactly.
pub fn write_snapshot(
    path: &Path,
    coord_name: &str,
    coord: &[f64],
    rho: &[f64],
    u: &[f64],
    chi: &[f64],
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{coord_name},rho,u,chi")?;
    for j in 0..coord.len() {
        writeln!(
            file,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            coord[j], rho[j], u[j], chi[j]
        )?;
    }
    Ok(())
}

/// Read a snapshot CSV written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Usage(format!("snapshot {} is empty", path.display())))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() != 4 || cols[1] != "rho" || cols[2] != "u" || cols[3] != "chi" {
        return Err(Error::Usage(format!(
            "snapshot {} has unexpected header `{header}`",
            path.display()
        )));
    }
    let mut snap = Snapshot {
        coord: Vec::new(),
        rho: Vec::new(),
        u: Vec::new(),
        chi: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Usage(format!(
                "snapshot {} row {} has {} fields",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Usage(format!("bad number `{s}` in {}", path.display())))
        };
        snap.coord.push(parse(fields[0])?);
        snap.rho.push(parse(fields[1])?);
        snap.u.push(parse(fields[2])?);
        snap.chi.push(parse(fields[3])?);
    }
    Ok(snap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> PhysParams {
        PhysParams::new(0.1, 0.05, 0.9, 0.1).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = Grid::new(2.0, 16, BcMode::Periodic).unwrap();
        assert_eq!(g.dx * g.n_cells as f64, g.length);
        assert_eq!(g.n_points(), 16);
        assert_eq!(Grid::new(2.0, 16, BcMode::Mixed).unwrap().n_points(), 17);
        assert!(Grid::new(2.0, 4, BcMode::Periodic).is_err());
        assert!(Grid::new(-1.0, 16, BcMode::Periodic).is_err());
    }

    #[test]
    fn trapezoid_of_uniform_field_is_exact() {
        for bc in [BcMode::Periodic, BcMode::Mixed] {
            let g = Grid::new(1.0, 64, bc).unwrap();
            let f = vec![1.7; g.n_points()];
            assert!((g.integrate(&f) - 1.7).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_scenario_is_constant() {
        let g = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let s = make_initial(
            &Scenario::Uniform {
                rho: 1.0,
                u: 0.0,
                chi: 1.0,
            },
            &g,
            &params(),
        )
        .unwrap();
        assert!(s.rho.iter().all(|&r| r == 1.0));
        assert!(s.u.iter().all(|&v| v == 0.0));
        assert!(s.chi.iter().all(|&c| c == 1.0));
    }

    #[test]
    fn sine_amplitude_breaking_positivity_is_rejected() {
        let g = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let err = make_initial(
            &Scenario::SinePerturb {
                rho_mean: 1.0,
                amplitude: 2.5,
                wavenumber: 1,
                chi: 0.0,
            },
            &g,
            &params(),
        );
        assert!(matches!(err, Err(Error::Construction(_))));
    }

    #[test]
    fn sine_mean_inside_spinodal_is_valid() {
        let crit = crate::eos::critical_points(0.9).unwrap();
        assert!(crit.alpha < 1.0 && 1.0 < crit.beta);
        let g = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let s = make_initial(
            &Scenario::SinePerturb {
                rho_mean: 1.0,
                amplitude: 0.1,
                wavenumber: 1,
                chi: 0.5,
            },
            &g,
            &params(),
        )
        .unwrap();
        s.validate(&g).unwrap();
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let g = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let sc = Scenario::SeededRandom {
            rho_mean: 1.0,
            amplitude: 0.1,
            seed: 7,
        };
        let a = make_initial(&sc, &g, &params()).unwrap();
        let b = make_initial(&sc, &g, &params()).unwrap();
        assert_eq!(a, b);
        let c = make_initial(
            &Scenario::SeededRandom {
                rho_mean: 1.0,
                amplitude: 0.1,
                seed: 8,
            },
            &g,
            &params(),
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tanh_interface_respects_walls() {
        let g = Grid::new(1.0, 64, BcMode::Mixed).unwrap();
        let s = make_initial(
            &Scenario::TanhInterface {
                rho_left: 0.5,
                rho_right: 1.6,
                width: 0.1,
            },
            &g,
            &params(),
        )
        .unwrap();
        s.validate(&g).unwrap();
        assert_eq!(s.u[0], 0.0);
        assert_eq!(*s.u.last().unwrap(), 0.0);
        // chi ghost mirror makes the wall derivative exactly zero
        let d = g.central_diff(&s.chi);
        assert_eq!(d[0], 0.0);
        assert_eq!(*d.last().unwrap(), 0.0);
    }

    #[test]
    fn compatibility_uniform_pure_phase_vanishes() {
        let g = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let s = make_initial(
            &Scenario::Uniform {
                rho: 0.8,
                u: 0.0,
                chi: 1.0,
            },
            &g,
            &params(),
        )
        .unwrap();
        for v in check_compatibility(&s, &g, &params()).unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn compatibility_uniform_mixed_phase_value() {
        let g = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let p = params();
        let (rho, c) = (0.8, 0.3);
        let s = make_initial(
            &Scenario::Uniform {
                rho,
                u: 0.0,
                chi: c,
            },
            &g,
            &p,
        )
        .unwrap();
        let expected = -(c * c * c - c) / (p.eps * rho);
        for v in check_compatibility(&s, &g, &p).unwrap() {
            assert!((v - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn compatibility_matches_one_tiny_solver_step() {
        // (chi(dt) - chi(0)) / dt approaches the compatibility field as dt -> 0
        let g = Grid::new(1.0, 64, BcMode::Periodic).unwrap();
        let p = params();
        let s = make_initial(
            &Scenario::SinePerturb {
                rho_mean: 1.0,
                amplitude: 0.1,
                wavenumber: 1,
                chi: 0.4,
            },
            &g,
            &p,
        )
        .unwrap();
        let chi_t = check_compatibility(&s, &g, &p).unwrap();
        let dt = 1e-8;
        let ctl = crate::solver_euler::StepControl::with_dt(dt, 1.0);
        let next = crate::solver_euler::step(&s, &g, &p, &ctl).unwrap();
        for (j, ((new, old), ct)) in next.chi.iter().zip(&s.chi).zip(&chi_t).enumerate() {
            let fd = (new - old) / dt;
            assert!(
                (fd - ct).abs() < 1e-5,
                "cell {j}: solver rate {fd}, compatibility {ct}"
            );
        }
    }

    #[test]
    fn stencils_are_translation_equivariant() {
        let g = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
        let f: Vec<f64> = (0..32)
            .map(|j| {
                (2.0 * std::f64::consts::PI * j as f64 / 32.0).sin() + 0.3 * (j as f64 * 0.7).cos()
            })
            .collect();
        let shift = 11;
        let shifted: Vec<f64> = (0..32).map(|j| f[(j + shift) % 32]).collect();
        let a = g.second_diff(&f);
        let b = g.second_diff(&shifted);
        for j in 0..32 {
            assert_eq!(a[(j + shift) % 32], b[j]);
        }
        let a = g.central_diff(&f);
        let b = g.central_diff(&shifted);
        for j in 0..32 {
            assert_eq!(a[(j + shift) % 32], b[j]);
        }
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("nsac_snapshot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.csv");
        let g = Grid::new(1.0, 16, BcMode::Periodic).unwrap();
        let s = make_initial(
            &Scenario::SeededRandom {
                rho_mean: 1.3,
                amplitude: 0.2,
                seed: 99,
            },
            &g,
            &params(),
        )
        .unwrap();
        write_snapshot(&path, "x", &g.positions(), &s.rho, &s.u, &s.chi).unwrap();
        let snap = read_snapshot(&path).unwrap();
        assert_eq!(snap.rho, s.rho);
        assert_eq!(snap.u, s.u);
        assert_eq!(snap.chi, s.chi);
        assert_eq!(snap.coord, g.positions());
    }

    proptest! {
        #[test]
        fn float_formatting_round_trips(v in prop::num::f64::NORMAL) {
            let s = format!("{v:.16e}");
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(v.to_bits(), back.to_bits());
        }

        #[test]
        fn seeded_states_stay_admissible(seed in any::<u64>()) {
            let g = Grid::new(1.0, 32, BcMode::Periodic).unwrap();
            let s = make_initial(
                &Scenario::SeededRandom { rho_mean: 1.0, amplitude: 0.1, seed },
                &g,
                &params(),
            ).unwrap();
            prop_assert!(s.validate(&g).is_ok());
        }
    }
}
