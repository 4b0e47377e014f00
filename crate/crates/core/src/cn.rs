//! Crank–Nicolson discretization of h' = √ψ_λ(h) on the graded enthalpy
//! mesh h_j = sin²(πj/2N).
//!
//! Fixing the h nodes and letting the z nodes float turns the discrete
//! problem into one scalar equation
//!
//! ```text
//! S(λ) = Σ_{j=0}^{N−1} (h_{j+1} − h_j) / (½(√ψ_λ(h_j) + √ψ_λ(h_{j+1}))) = 1,
//! ```
//!
//! where each term is the cell width Δz_{j+1/2}.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{lambda_lower_bound, SigmaModel};

pub const DEFAULT_CN_TOL: f64 = 1e-12;
const MAX_NEWTON_ITER: usize = 200;
const MAX_BRACKET_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSolution {
    pub n: usize,
    pub lambda_n: f64,
    pub h_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
    pub phi_nodes: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// h_j = sin²(πj/2n), j = 0..=n, mirrored so that h_{n−j} = 1 − h_j exactly.
pub fn build_mesh(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::MeshTooSmall(n));
    }
    let mut h = vec![0.0; n + 1];
    for (j, hj) in h.iter_mut().enumerate().take(n / 2 + 1) {
        let s = (FRAC_PI_2 * j as f64 / n as f64).sin();
        *hj = s * s;
    }
    if n.is_multiple_of(2) {
        h[n / 2] = 0.5;
    }
    for j in n / 2 + 1..=n {
        h[j] = 1.0 - h[n - j];
    }
    Ok(h)
}

/// Per-node data that does not depend on λ: √(h(1−h)) and W(h), so that
/// √ψ_λ(h) = √(h(1−h))·√(2λW(h) − 1).
struct MeshTerms {
    dh: Vec<f64>,
    root_hh: Vec<f64>,
    w: Vec<f64>,
}

impl MeshTerms {
    fn new(model: &SigmaModel, mesh: &[f64]) -> Result<Self> {
        if mesh.len() < 3 {
            return Err(Error::MeshTooSmall(mesh.len().saturating_sub(1)));
        }
        Ok(Self {
            dh: mesh.windows(2).map(|w| w[1] - w[0]).collect(),
            root_hh: mesh
                .iter()
                .map(|&h| (h * (1.0 - h)).max(0.0).sqrt())
                .collect(),
            w: mesh.iter().map(|&h| model.w_at(h)).collect(),
        })
    }

    /// √ψ_λ and d√ψ_λ/dλ at every node.
    fn roots(&self, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut root = Vec::with_capacity(self.w.len());
        let mut slope = Vec::with_capacity(self.w.len());
        for (&q, &w) in self.root_hh.iter().zip(&self.w) {
            let r = 2.0 * lambda * w - 1.0;
            if !(r > 0.0) && q > 0.0 {
                return Err(Error::InfeasibleLambda {
                    lambda,
                    lower: f64::NAN,
                });
            }
            let sr = r.max(0.0).sqrt();
            root.push(q * sr);
            // dψ/dλ = −2V = 2h(1−h)W; the end nodes contribute 0
            slope.push(if q > 0.0 { q * w / sr } else { 0.0 });
        }
        Ok((root, slope))
    }

    fn sum_and_slope(&self, lambda: f64) -> Result<(f64, f64)> {
        let (root, slope) = self.roots(lambda)?;
        let mut s = 0.0;
        let mut ds = 0.0;
        for j in 0..self.dh.len() {
            let mean = 0.5 * (root[j] + root[j + 1]);
            s += self.dh[j] / mean;
            ds -= self.dh[j] * 0.5 * (slope[j] + slope[j + 1]) / (mean * mean);
        }
        Ok((s, ds))
    }
}

fn with_lower(model: &SigmaModel, err: Error) -> Error {
    match err {
        Error::InfeasibleLambda { lambda, .. } => Error::InfeasibleLambda {
            lambda,
            lower: lambda_lower_bound(model),
        },
        e => e,
    }
}

/// S(λ) for the given mesh (which must start at 0 and end at 1).
pub fn discrete_sum(model: &SigmaModel, lambda: f64, mesh: &[f64]) -> Result<f64> {
    MeshTerms::new(model, mesh)?
        .sum_and_slope(lambda)
        .map(|(s, _)| s)
        .map_err(|e| with_lower(model, e))
}

/// Solves S(λ) = 1 on the N-cell mesh by safeguarded Newton iteration.
///
/// S is strictly decreasing, so a bracket [λ_lo, λ_hi] with S(λ_lo) > 1 >
/// S(λ_hi) is kept throughout; Newton steps leaving it are replaced by
/// bisection.
pub fn solve_lambda_discrete(model: &SigmaModel, n: usize, tol: f64) -> Result<DiscreteSolution> {
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let mesh = build_mesh(n)?;
    let terms = MeshTerms::new(model, &mesh)?;
    let eval = |l: f64| terms.sum_and_slope(l).map_err(|e| with_lower(model, e));

    let low = lambda_lower_bound(model);
    let mut lo = low * (1.0 + 1e-6);
    let (s_lo, _) = eval(lo)?;
    if !(s_lo > 1.0) {
        return Err(Error::InfeasibleBracket(format!(
            "S({lo}) = {s_lo} is already below 1 at the lower bound"
        )));
    }
    let guess = (1.0 + PI * PI) / model.mean_sigma();
    let mut hi = guess.max(lo * 1.5);
    let mut doublings = 0;
    loop {
        let (s_hi, _) = eval(hi)?;
        if s_hi < 1.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::InfeasibleBracket("S(λ) stays above 1".into()));
        }
    }

    let mut lambda = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for iter in 1..=MAX_NEWTON_ITER {
        let (s, ds) = eval(lambda)?;
        let f = s - 1.0;
        if f.abs() <= tol {
            return Ok(finish(model, n, mesh, lambda, f.abs(), iter));
        }
        if f > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - f / ds;
        lambda = if newton > lo && newton < hi && ds < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            let (s, _) = eval(lambda)?;
            let residual = (s - 1.0).abs();
            if residual <= tol {
                return Ok(finish(model, n, mesh, lambda, residual, iter));
            }
            return Err(Error::NoConvergence {
                iterations: iter,
                residual,
            });
        }
    }
    let residual = (eval(lambda)?.0 - 1.0).abs();
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITER,
        residual,
    })
}

fn finish(
    model: &SigmaModel,
    n: usize,
    mesh: Vec<f64>,
    lambda: f64,
    residual: f64,
    iterations: usize,
) -> DiscreteSolution {
    let phi: Vec<f64> = mesh
        .iter()
        .map(|&h| model.psi_at(lambda, h).max(0.0).sqrt())
        .collect();
    let phi = {
        let mut phi = phi;
        phi[0] = 0.0;
        phi[n] = 0.0;
        phi
    };
    let mut z = Vec::with_capacity(n + 1);
    z.push(0.0);
    let mut acc = 0.0;
    for j in 0..n {
        acc += (mesh[j + 1] - mesh[j]) / (0.5 * (phi[j] + phi[j + 1]));
        z.push(acc);
    }
    DiscreteSolution {
        n,
        lambda_n: lambda,
        h_nodes: mesh,
        z_nodes: z,
        phi_nodes: phi,
        residual,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub lambda_n: f64,
    pub error: f64,
    /// Observed order against the previous row; absent for the first row,
    /// repeated n or vanishing errors.
    pub order: Option<f64>,
}

/// Errors |λ_N − λ_ref| and observed orders ln(e_prev/e)/ln(N/N_prev).
pub fn convergence_study(
    model: &SigmaModel,
    n_list: &[usize],
    lambda_ref: f64,
) -> Result<Vec<ConvergenceRow>> {
    convergence_study_tol(model, n_list, lambda_ref, DEFAULT_CN_TOL)
}

pub fn convergence_study_tol(
    model: &SigmaModel,
    n_list: &[usize],
    lambda_ref: f64,
    tol: f64,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sol = solve_lambda_discrete(model, n, tol)?;
        let error = (sol.lambda_n - lambda_ref).abs();
        let order = rows.last().and_then(|prev| {
            if prev.n == n || error == 0.0 || prev.error == 0.0 {
                None
            } else {
                Some((prev.error / error).ln() / (n as f64 / prev.n as f64).ln())
            }
        });
        rows.push(ConvergenceRow {
            n,
            lambda_n: sol.lambda_n,
            error,
            order,
        });
    }
    Ok(rows)
}
