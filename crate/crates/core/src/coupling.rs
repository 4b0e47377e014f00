//! Classical code-coupling iteration: alternate a neutronics eigen-solve
//! with the enthalpy update until the enthalpy field stops moving.
//!
//! 1. Σ ≡ Σ(0) gives (λ₀, φ₀);
//! 2. h_n(z) = ∫₀^z φ_{n−1};
//! 3. (−d²/dz² + 1)φ_n = λ_n Σ(h_n) φ_n, ∫₀¹ φ_n = 1.
//!
//! All fields live on the uniform grid z_i = i/(M+1), i = 0..=M+1, with a
//! second-order central difference for d²/dz² and the trapezoidal rule for
//! the integrals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SigmaModel;

pub const DEFAULT_GRID: usize = 800;
pub const DEFAULT_COUPLING_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;
const EIGEN_TOL: f64 = 1e-12;
const MAX_INVERSE_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingState {
    pub grid_m: usize,
    pub z: Vec<f64>,
    /// Final enthalpy field, including both boundary nodes.
    pub h_field: Vec<f64>,
    /// Final flux field, including both boundary nodes.
    pub phi_field: Vec<f64>,
    /// λ₀ from the constant-Σ start.
    pub initial_lambda: f64,
    /// λ_n for n = 1..=iterations.
    pub lambda_seq: Vec<f64>,
    /// |h_{n+1} − h_n|_∞ for n = 1..=iterations.
    pub h_delta_seq: Vec<f64>,
    /// Discrete L² norm (trapezoidal) of √Σ(h_n)·φ_n per iteration.
    pub psi_norm_seq: Vec<f64>,
    pub converged: bool,
}

impl CouplingState {
    pub fn iterations(&self) -> usize {
        self.lambda_seq.len()
    }

    pub fn final_lambda(&self) -> f64 {
        self.lambda_seq
            .last()
            .copied()
            .unwrap_or(self.initial_lambda)
    }

    /// Empirical contraction ratios hΔ_{n+1}/hΔ_n.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.h_delta_seq.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// |1/λ_{n+1} − 1/λ_n| along the history (λ₀ included).
    pub fn inverse_lambda_steps(&self) -> Vec<f64> {
        let mut all = vec![self.initial_lambda];
        all.extend_from_slice(&self.lambda_seq);
        all.windows(2)
            .map(|w| (1.0 / w[1] - 1.0 / w[0]).abs())
            .collect()
    }

    /// Turns a non-converged run into `MaxIterExceeded`.
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::MaxIterExceeded {
                iterations: self.iterations(),
                last_delta: self.h_delta_seq.last().copied().unwrap_or(f64::NAN),
            })
        }
    }
}

/// Solves a symmetric tridiagonal system (diagonal `diag`, off-diagonal
/// `off`, len n−1) with the Thomas algorithm.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    let mut denom = diag[0];
    out[0] = rhs[0] / denom;
    for i in 1..n {
        scratch[i] = off[i - 1] / denom;
        denom = diag[i] - off[i - 1] * scratch[i];
        out[i] = (rhs[i] - off[i - 1] * out[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        out[i] -= scratch[i + 1] * out[i + 1];
    }
}

fn check_grid(grid_m: usize) -> Result<()> {
    if grid_m < 3 {
        return Err(Error::MeshTooSmall(grid_m));
    }
    Ok(())
}

/// Smallest eigenvalue of (−d²/dz² + 1)φ = λ Σ φ with φ(0) = φ(1) = 0.
///
/// `sigma_field` holds Σ at the M interior nodes. The pencil is symmetrized
/// as D^{−1/2}AD^{−1/2}, D = diag(Σ), and solved by inverse iteration. The
/// returned φ (M+2 values, boundary zeros included) has unit trapezoidal
/// integral and φ(z₁) > 0.
pub fn smallest_generalized_eigen(sigma_field: &[f64], grid_m: usize) -> Result<(f64, Vec<f64>)> {
    smallest_generalized_eigen_from(sigma_field, grid_m, None)
}

fn smallest_generalized_eigen_from(
    sigma_field: &[f64],
    grid_m: usize,
    start: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    check_grid(grid_m)?;
    if sigma_field.len() != grid_m {
        return Err(Error::InvalidShape(format!(
            "sigma field has {} values for {grid_m} interior nodes",
            sigma_field.len()
        )));
    }
    if let Some(bad) = sigma_field.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::NonPositiveSample {
            name: "sigma_field",
            value: *bad,
        });
    }
    let dz = 1.0 / (grid_m + 1) as f64;
    let k = 1.0 / (dz * dz);
    let inv_root: Vec<f64> = sigma_field.iter().map(|s| 1.0 / s.sqrt()).collect();
    let diag: Vec<f64> = inv_root.iter().map(|r| (2.0 * k + 1.0) * r * r).collect();
    let off: Vec<f64> = inv_root.windows(2).map(|w| -k * w[0] * w[1]).collect();

    // y = D^{1/2} φ
    let mut y: Vec<f64> = match start {
        Some(phi) => phi[1..=grid_m]
            .iter()
            .zip(sigma_field)
            .map(|(p, s)| p * s.sqrt())
            .collect(),
        None => (1..=grid_m)
            .map(|i| (std::f64::consts::PI * i as f64 * dz).sin())
            .collect(),
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n0 = norm(&y);
    y.iter_mut().for_each(|x| *x /= n0);

    let mut next = vec![0.0; grid_m];
    let mut scratch = vec![0.0; grid_m];
    let mut lambda = f64::NAN;
    let mut converged = false;
    for iter in 0..MAX_INVERSE_ITER {
        solve_tridiagonal(&diag, &off, &y, &mut next, &mut scratch);
        // with x = B⁻¹y, λ ≈ yᵀx / xᵀx
        let dot: f64 = y.iter().zip(&next).map(|(a, b)| a * b).sum();
        let nn = norm(&next);
        let new_lambda = dot / (nn * nn);
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        let mut change: f64 = 0.0;
        for (yi, ni) in y.iter_mut().zip(&next) {
            let v = sign * ni / nn;
            change = change.max((v - *yi).abs());
            *yi = v;
        }
        let lambda_change = ((new_lambda - lambda) / new_lambda).abs();
        lambda = new_lambda;
        if lambda_change <= EIGEN_TOL && change <= EIGEN_TOL {
            converged = true;
            break;
        }
        // rounding floor on very fine grids
        if iter > 100 && lambda_change <= EIGEN_TOL && change <= 1e3 * EIGEN_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationStall(format!(
            "inverse iteration did not settle in {MAX_INVERSE_ITER} steps"
        )));
    }

    let mut phi = vec![0.0; grid_m + 2];
    for i in 0..grid_m {
        phi[i + 1] = y[i] * inv_root[i];
    }
    if phi[1] < 0.0 {
        phi.iter_mut().for_each(|p| *p = -*p);
    }
    let integral: f64 = dz * phi.iter().sum::<f64>();
    phi.iter_mut().for_each(|p| *p /= integral);
    Ok((lambda, phi))
}

/// Cumulative trapezoidal integral of `f` on a uniform grid with step `dz`.
pub fn cumulative_trapezoid(f: &[f64], dz: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in f.windows(2) {
        acc += 0.5 * dz * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

fn sigma_on(model: &SigmaModel, h: &[f64]) -> Vec<f64> {
    h[1..h.len() - 1]
        .iter()
        .map(|&v| model.sigma_at(v.clamp(0.0, 1.0)))
        .collect()
}

/// Runs the coupling loop until |h_{n+1} − h_n|_∞ ≤ tol or `max_iter`
/// passes. A run that hits `max_iter` is returned with `converged = false`
/// (see [`CouplingState::ensure_converged`]).
pub fn coupling_iterate(
    model: &SigmaModel,
    grid_m: usize,
    tol: f64,
    max_iter: usize,
) -> Result<CouplingState> {
    if grid_m < 10 {
        return Err(Error::ParameterOutOfRange(format!(
            "grid M = {grid_m} must be at least 10"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let dz = 1.0 / (grid_m + 1) as f64;
    let z: Vec<f64> = (0..grid_m + 2).map(|i| i as f64 * dz).collect();

    let sigma0 = vec![model.sigma_at(0.0); grid_m];
    let (initial_lambda, mut phi) = smallest_generalized_eigen(&sigma0, grid_m)?;
    let mut h = cumulative_trapezoid(&phi, dz);

    let mut lambda_seq = Vec::new();
    let mut h_delta_seq = Vec::new();
    let mut psi_norm_seq = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let sigma = sigma_on(model, &h);
        let (lambda, next_phi) = smallest_generalized_eigen_from(&sigma, grid_m, Some(&phi))?;
        phi = next_phi;
        let next_h = cumulative_trapezoid(&phi, dz);
        let delta = next_h
            .iter()
            .zip(&h)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        let weighted: Vec<f64> = sigma
            .iter()
            .zip(&phi[1..=grid_m])
            .map(|(s, p)| s * p * p)
            .collect();
        psi_norm_seq.push((dz * weighted.iter().sum::<f64>()).sqrt());
        lambda_seq.push(lambda);
        h_delta_seq.push(delta);
        h = next_h;
        if delta <= tol {
            converged = true;
            break;
        }
    }

    Ok(CouplingState {
        grid_m,
        z,
        h_field: h,
        phi_field: phi,
        initial_lambda,
        lambda_seq,
        h_delta_seq,
        psi_norm_seq,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, make_samples, ModelKind};
    use std::f64::consts::PI;

    fn model(s: (f64, f64, f64), kind: ModelKind) -> SigmaModel {
        build_model(make_samples(s.0, s.1, s.2).unwrap(), kind).unwrap()
    }

    #[test]
    fn thomas_solves_small_system() {
        let diag = [4.0, 4.0, 4.0];
        let off = [1.0, 1.0];
        let rhs = [5.0, 6.0, 5.0];
        let mut out = [0.0; 3];
        let mut scratch = [0.0; 3];
        solve_tridiagonal(&diag, &off, &rhs, &mut out, &mut scratch);
        for x in out {
            assert!((x - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_sigma_eigenpair() {
        let m = 800;
        let (lambda, phi) = smallest_generalized_eigen(&vec![8.0; m], m).unwrap();
        assert!((lambda - (1.0 + PI * PI) / 8.0).abs() < 1e-4, "{lambda}");
        let dz = 1.0 / (m + 1) as f64;
        assert!((dz * phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (i, p) in phi.iter().enumerate() {
            let exact = 0.5 * PI * (PI * i as f64 * dz).sin();
            assert!((p - exact).abs() < 1e-4);
        }
    }

    #[test]
    fn eigen_rejects_bad_input() {
        assert!(smallest_generalized_eigen(&[1.0, -1.0, 1.0], 3).is_err());
        assert!(smallest_generalized_eigen(&[1.0; 4], 3).is_err());
    }

    #[test]
    fn constant_model_converges_immediately() {
        let m = model((8.0, 6.0, 3.0), ModelKind::Constant);
        let state = coupling_iterate(&m, 100, 1e-10, 50).unwrap();
        assert!(state.converged);
        assert_eq!(state.iterations(), 1);
        assert!((state.final_lambda() - state.initial_lambda).abs() < 1e-12);
    }

    #[test]
    fn quadratic_run_bookkeeping() {
        let m = model((8.0, 6.0, 3.0), ModelKind::Quadratic);
        let state = coupling_iterate(&m, 200, 1e-10, 500).unwrap();
        assert!(state.converged);
        assert!(state.ensure_converged().is_ok());
        assert_eq!(state.lambda_seq.len(), state.h_delta_seq.len());
        assert_eq!(state.psi_norm_seq.len(), state.iterations());
        assert_eq!(state.h_field[0], 0.0);
        assert!(state.h_field.windows(2).all(|w| w[1] >= w[0]));
        assert!((state.h_field[201] - 1.0).abs() < 1e-12);
        let ratios = state.contraction_ratios();
        assert!(ratios.last().is_none_or(|&r| r < 1.0));
        assert_eq!(state.inverse_lambda_steps().len(), state.iterations());
    }

    #[test]
    fn max_iter_reports_non_convergence() {
        let m = model((8.0, 6.0, 3.0), ModelKind::Quadratic);
        let state = coupling_iterate(&m, 50, 1e-14, 2).unwrap();
        assert!(!state.converged);
        assert!(matches!(
            state.ensure_converged(),
            Err(Error::MaxIterExceeded { iterations: 2, .. })
        ));
        assert!(coupling_iterate(&m, 5, 1e-10, 10).is_err());
    }
}
