//! Thomas-algorithm solvers for tridiagonal and cyclic tridiagonal systems.
//!
//! Both solvers take the three bands as full-length slices:
//! `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
//! In the plain solver `sub[0]` and `sup[n-1]` are ignored; in the cyclic
//! solver they wrap around (`sub[0]` multiplies `x[n-1]`, `sup[n-1]`
//! multiplies `x[0]`) and the system is reduced to two plain solves by the
//! Sherman-Morrison formula.

use crate::error::{Error, Result};

/// Solve a (non-cyclic) tridiagonal system.
pub(crate) fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut work = vec![0.0; n];
    let mut x = vec![0.0; n];

    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Numerical("tridiagonal solve: zero pivot".into()));
    }
    work[0] = sup[0] / beta;
    x[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * work[i - 1];
        if beta == 0.0 {
            return Err(Error::Numerical("tridiagonal solve: zero pivot".into()));
        }
        work[i] = sup[i] / beta;
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= work[i] * x[i + 1];
    }
    Ok(x)
}

/// Solve a cyclic tridiagonal system (periodic wrap in the corner entries).
pub(crate) fn solve_cyclic(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::Numerical(
            "cyclic tridiagonal solve needs at least 3 unknowns".into(),
        ));
    }
    let corner_top = sub[0]; // A[0][n-1]
    let corner_bot = sup[n - 1]; // A[n-1][0]

    let gamma = -diag[0];
    if gamma == 0.0 {
        return Err(Error::Numerical(
            "cyclic tridiagonal solve: zero pivot".into(),
        ));
    }
    let mut diag_mod = diag.to_vec();
    diag_mod[0] = diag[0] - gamma;
    diag_mod[n - 1] = diag[n - 1] - corner_top * corner_bot / gamma;

    let y = solve(sub, &diag_mod, sup, rhs)?;

    // rank-one update u (x) v with u = (gamma, 0, .., corner_bot),
    // v = (1, 0, .., corner_top / gamma)
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner_bot;
    let z = solve(sub, &diag_mod, sup, &u)?;

    let denom = 1.0 + z[0] + corner_top * z[n - 1] / gamma;
    if denom == 0.0 {
        return Err(Error::Numerical(
            "cyclic tridiagonal solve: singular correction".into(),
        ));
    }
    let factor = (y[0] + corner_top * y[n - 1] / gamma) / denom;

    Ok(y.iter()
        .zip(z.iter())
        .map(|(yi, zi)| yi - factor * zi)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_vec(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64], cyclic: bool) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += sub[i] * x[i - 1];
                } else if cyclic {
                    v += sub[0] * x[n - 1];
                }
                if i + 1 < n {
                    v += sup[i] * x[i + 1];
                } else if cyclic {
                    v += sup[n - 1] * x[0];
                }
                v
            })
            .collect()
    }

    #[test]
    fn plain_solve_recovers_rhs() {
        let n = 9;
        let sub = vec![-1.0; n];
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + 0.1 * i as f64).collect();
        let sup = vec![-0.5; n];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let x = solve(&sub, &diag, &sup, &rhs).unwrap();
        let back = mat_vec(&sub, &diag, &sup, &x, false);
        for (a, b) in back.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn cyclic_solve_recovers_rhs() {
        let n = 12;
        let sub = vec![-0.7; n];
        let diag: Vec<f64> = (0..n).map(|i| 4.0 + (i as f64 * 0.7).cos()).collect();
        let sup = vec![-1.1; n];
        let rhs: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let x = solve_cyclic(&sub, &diag, &sup, &rhs).unwrap();
        let back = mat_vec(&sub, &diag, &sup, &x, true);
        for (a, b) in back.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn cyclic_solve_constant_system() {
        // Row sums are all equal, so a constant rhs must give a constant solution.
        let n = 16;
        let sub = vec![-1.0; n];
        let diag = vec![4.0; n];
        let sup = vec![-1.0; n];
        let rhs = vec![6.0; n];
        let x = solve_cyclic(&sub, &diag, &sup, &rhs).unwrap();
        for xi in &x {
            assert!((xi - 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_tiny_cyclic_system() {
        let v = vec![1.0; 2];
        assert!(solve_cyclic(&v, &v, &v, &v).is_err());
    }
}
