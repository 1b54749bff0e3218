//! Pointwise thermodynamics of the van der Waals fluid.
//!
//! Everything here is a pure function of its arguments: the non-monotone
//! pressure law and its derivative, the double-well free-energy density, the
//! spinodal structure of the isotherm, the renormalized potential `Phi`
//! measuring deviation from a reference density, and the chemical-potential
//! field driving the phase equation.
//!
//! Working formulas (densities are admissible on `(0, 3)` only):
//!
//! ```text
//! p(rho)      = -3 rho^2 + 8 Theta rho / (3 - rho)
//! p'(rho)     = -6 (rho^3 - 6 rho^2 + 9 rho - 4 Theta) / (3 - rho)^2
//! f(rho, chi) = -3 rho + (8 Theta / 3) ln(rho / (3 - rho)) + (chi^2 - 1)^2 / 4
//! Phi(rho)    = rho * Integral[rho_ref..rho] (p(s) - p(rho_ref)) / s^2 ds
//! mu          = (chi^3 - chi) / eps - (eps / rho) chi_xx
//! ```
//!
//! For `Theta < 1` the cubic `rho^3 - 6 rho^2 + 9 rho - 4 Theta` has two
//! roots `alpha < beta` in `(0, 3)`; pressure decreases on `(alpha, beta)`
//! (the spinodal interval) and homogeneous states there are unstable.

use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid};

/// Densities closer than this to the endpoints of `(0, 3)` are treated as a
/// blow-up signal rather than evaluated; the formulas produce huge finite
/// values there that would otherwise mask genuine divergence.
pub const DENSITY_EDGE_GUARD: f64 = 1e-9;

/// Non-dimensional physical constants of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    /// Viscosity coefficient, > 0.
    pub nu: f64,
    /// Interface-thickness parameter, > 0.
    pub eps: f64,
    /// Reduced temperature (actual over critical), > 0.
    pub theta: f64,
    /// Reference density for the renormalized potential; must lie in
    /// `(0, 3)`, and below the matched density `gamma(theta)` when
    /// `theta < 1`.
    pub rho_ref: f64,
}

impl PhysParams {
    pub fn new(nu: f64, eps: f64, theta: f64, rho_ref: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::Domain(format!("nu must be positive, got {nu}")));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::Domain(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if !(rho_ref.is_finite() && rho_ref > 0.0 && rho_ref < 3.0) {
            return Err(Error::Domain(format!(
                "rho_ref must lie in (0, 3), got {rho_ref}"
            )));
        }
        if theta < 1.0 {
            let crit = critical_points(theta)?;
            match crit.gamma {
                Some(gamma) if rho_ref < gamma => {}
                Some(gamma) => {
                    return Err(Error::Domain(format!(
                        "rho_ref = {rho_ref} must lie below the matched density \
                         gamma({theta}) = {gamma:.6}"
                    )));
                }
                None => {
                    return Err(Error::Domain(format!(
                        "theta = {theta} admits no matched density (p(beta) <= 0); \
                         no reference density keeps the renormalized potential positive"
                    )));
                }
            }
        }
        Ok(Self {
            nu,
            eps,
            theta,
            rho_ref,
        })
    }
}

/// Spinodal densities `alpha < beta` and the matched density `gamma` of one
/// isotherm. `exists` is false for `theta >= 1`, where pressure is monotone
/// and the spinodal interval degenerates to the point `rho = 1`.
///
/// `gamma` solves `p(gamma) = p(beta)` below `alpha`. It exists only while
/// `p(beta) > 0`, i.e. for `theta > 27/32`; for colder isotherms it is
/// reported as `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosCriticalPoints {
    pub exists: bool,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
}

/// van der Waals pressure. Admissible for `0 <= rho <= 3 - guard`; the law
/// diverges at `rho = 3`.
pub fn pressure(rho: f64, theta: f64) -> Result<f64> {
    if !(0.0..3.0 - DENSITY_EDGE_GUARD).contains(&rho) {
        return Err(Error::Domain(format!(
            "pressure: density {rho} outside [0, 3)"
        )));
    }
    Ok(pressure_raw(rho, theta))
}

#[inline]
pub(crate) fn pressure_raw(rho: f64, theta: f64) -> f64 {
    -3.0 * rho * rho + 8.0 * theta * rho / (3.0 - rho)
}

/// dp/drho of the van der Waals law.
pub fn pressure_derivative(rho: f64, theta: f64) -> Result<f64> {
    if !(0.0..3.0 - DENSITY_EDGE_GUARD).contains(&rho) {
        return Err(Error::Domain(format!(
            "pressure_derivative: density {rho} outside [0, 3)"
        )));
    }
    let d = 3.0 - rho;
    Ok(-6.0 * spinodal_cubic(rho, theta) / (d * d))
}

/// Numerator cubic of `p'`: `rho^3 - 6 rho^2 + 9 rho - 4 Theta`. Its roots in
/// `(0, 3)` are the spinodal densities; at `Theta = 1` it factors as
/// `(rho - 1)^2 (rho - 4)` with the double root at 1.
#[inline]
pub fn spinodal_cubic(rho: f64, theta: f64) -> f64 {
    ((rho - 6.0) * rho + 9.0) * rho - 4.0 * theta
}

/// Bracketing bisection to absolute tolerance `tol`; `f(a)` and `f(b)` must
/// have opposite signs.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!(
            "bisection bracket [{a}, {b}] does not change sign"
        )));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break; // interval no longer resolvable in f64
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fa.signum() == fm.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

const ROOT_TOL: f64 = 1e-12;

/// Spinodal structure of the isotherm at reduced temperature `theta`.
///
/// For `theta < 1`, `alpha` and `beta` are found by bisecting the cubic on
/// `(0, 1)` and `(1, 3)` (the cubic is negative at 0 and 3 and positive at 1),
/// and `gamma` by bisecting `p - p(beta)` on `(0, alpha)`.
pub fn critical_points(theta: f64) -> Result<EosCriticalPoints> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::Domain(format!(
            "critical_points: theta must be positive, got {theta}"
        )));
    }
    if theta >= 1.0 {
        return Ok(EosCriticalPoints {
            exists: false,
            alpha: f64::NAN,
            beta: f64::NAN,
            gamma: None,
        });
    }
    let cubic = |r: f64| spinodal_cubic(r, theta);
    let alpha = bisect(cubic, 0.0, 1.0, ROOT_TOL)?;
    let beta = bisect(cubic, 1.0, 3.0, ROOT_TOL)?;
    let p_beta = pressure_raw(beta, theta);
    let gamma = if p_beta > 0.0 {
        let g = bisect(|r| pressure_raw(r, theta) - p_beta, 0.0, alpha, ROOT_TOL)?;
        if !(g > 0.0 && g < alpha) {
            return Err(Error::Numerical(format!(
                "matched density gamma = {g} escaped (0, alpha = {alpha})"
            )));
        }
        Some(g)
    } else {
        None
    };
    Ok(EosCriticalPoints {
        exists: true,
        alpha,
        beta,
        gamma,
    })
}

/// Free-energy density `f(rho, chi)`: van der Waals bulk part plus the
/// double well `(chi^2 - 1)^2 / 4`. Requires `0 < rho < 3`.
pub fn potential_f(rho: f64, chi: f64, theta: f64) -> Result<f64> {
    if !rho.is_finite() || rho <= DENSITY_EDGE_GUARD || rho >= 3.0 - DENSITY_EDGE_GUARD {
        return Err(Error::Domain(format!(
            "potential_f: density {rho} outside (0, 3)"
        )));
    }
    let well = chi * chi - 1.0;
    Ok(-3.0 * rho + (8.0 * theta / 3.0) * (rho / (3.0 - rho)).ln() + 0.25 * well * well)
}

/// Antiderivative of `(p(s) - p_ref) / s^2`, used by the closed form of `Phi`.
#[inline]
fn phi_antiderivative(s: f64, p_ref: f64, theta: f64) -> f64 {
    -3.0 * s + (8.0 * theta / 3.0) * (s / (3.0 - s)).ln() + p_ref / s
}

/// Renormalized potential `Phi(rho)`, evaluated in closed form.
///
/// `Phi(rho) = rho * (F(rho) - F(rho_ref))` with
/// `F(s) = -3 s + (8 Theta / 3) ln(s / (3 - s)) + p(rho_ref) / s`.
/// Satisfies `Phi(rho_ref) = Phi'(rho_ref) = 0` and `Phi'' = p' / rho`;
/// it traps `rho` quadratically around `rho_ref` whenever
/// `rho_ref < gamma(theta)`.
pub fn phi(rho: f64, params: &PhysParams) -> Result<f64> {
    if !rho.is_finite() || rho <= DENSITY_EDGE_GUARD || rho >= 3.0 - DENSITY_EDGE_GUARD {
        return Err(Error::Domain(format!("phi: density {rho} outside (0, 3)")));
    }
    Ok(phi_raw(rho, params))
}

#[inline]
pub(crate) fn phi_raw(rho: f64, params: &PhysParams) -> f64 {
    let p_ref = pressure_raw(params.rho_ref, params.theta);
    rho * (phi_antiderivative(rho, p_ref, params.theta)
        - phi_antiderivative(params.rho_ref, p_ref, params.theta))
}

/// Pointwise chemical potential `mu = (chi^3 - chi)/eps - (eps/rho) chi_xx`,
/// with `chi_xx` taken by the same second-order stencil the solver uses
/// (periodic wrap, or zero-slope mirror at the walls in mixed mode).
pub fn chemical_potential(state: &FieldState, grid: &Grid, params: &PhysParams) -> Vec<f64> {
    let chi_xx = grid.second_diff(&state.chi);
    state
        .chi
        .iter()
        .zip(state.rho.iter())
        .zip(chi_xx.iter())
        .map(|((&chi, &rho), &cxx)| (chi * chi * chi - chi) / params.eps - params.eps / rho * cxx)
        .collect()
}
