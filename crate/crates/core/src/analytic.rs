//! Exact evaluation of I(λ) = ∫₀¹ dh/√ψ_λ(h), the scalar equation I(λ) = 1
//! for the criticality eigenvalue, and reconstruction of h(z), φ(z).
//!
//! Each root configuration of ψ_λ has its own closed form in terms of the
//! incomplete elliptic integral F(φ | m). The quartic configurations go
//! through a homographic map T(h) = (h−d)/(h−c) sending the four roots to
//! a symmetric set {±a, ±b}.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::elliptic::{ellik_complete, ellik_incomplete};
use crate::error::{Error, Result};
use crate::model::{
    classify_psi, lambda_lower_bound, ComplexPosition, HalfCase, HalfFactor, LinearRegime,
    ModelKind, PsiCase, PsiFactorization, PsiRoot, SameSignPosition, SigmaModel,
};
use crate::quad::{integrate, integrate_with_breaks, QuadOptions};
use crate::roots::brent;

/// Denominators below this are treated as a misclassified configuration.
const MAP_DEGENERACY: f64 = 1e-12;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;
pub const DEFAULT_PROFILE_POINTS: usize = 201;
const MAX_SOLVE_ITER: usize = 200;
const MAX_BRACKET_DOUBLINGS: usize = 200;
/// Quadrature accuracy used when the solver falls back from a closed form.
const FALLBACK_QUAD_TOL: f64 = 1e-13;

/// Homographic reduction T(h) = (h−d)/(h−c) of a quartic ψ_λ.
///
/// For real root pairs the images of the roots are {±a, ±b}; in the
/// opposite-signs configuration they are κ·{±a, ±b} for a common κ > 0 (only
/// a/b enters the integral). For a complex pair, 0 and 1 map to ∓a and the
/// complex roots to ±ib.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographicMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Auxiliary slopes of the opposite-signs reduction.
    pub big_a: Option<f64>,
    pub big_b: Option<f64>,
    /// Parameter of the resulting complete integral K(m).
    pub m: f64,
}

impl HomographicMap {
    pub fn apply(&self, h: f64) -> f64 {
        (h - self.d) / (h - self.c)
    }
}

fn nondegenerate(value: f64, what: &str) -> Result<f64> {
    if value.abs() <= MAP_DEGENERACY {
        Err(Error::DegenerateMap(format!("{what} = {value:e} vanishes")))
    } else {
        Ok(value)
    }
}

fn real_roots(fact: &PsiFactorization) -> Result<(f64, f64)> {
    fact.real_pair()
        .ok_or_else(|| Error::DegenerateMap(format!("{} has no real root pair", fact.case)))
}

/// Builds the homographic map for a quartic configuration.
///
/// Fails with `DegenerateMap` for non-quartic tags, for the symmetric
/// complex pair (σ = 1, which needs no map), and whenever a denominator of
/// the construction vanishes.
pub fn build_homographic_map(fact: &PsiFactorization) -> Result<HomographicMap> {
    match fact.case {
        PsiCase::QuarticOppositeSigns => {
            let (p, g) = real_roots(fact)?;
            let gp = nondegenerate(g - p, "g - p")?;
            let big_a = -(g * gp / (1.0 - p)).sqrt();
            let big_b = ((1.0 - p) * gp / g).sqrt();
            let a = (big_a + 1.0) / (big_a - 1.0);
            let b = (big_b + 1.0) / (big_b - 1.0);
            // involution pairing {p, 0} and {1, g}
            let s = 2.0 * g / (1.0 + gp);
            let q = p * g / (1.0 + gp);
            let root = (s * s - 4.0 * q).sqrt();
            Ok(HomographicMap {
                a,
                b,
                c: 0.5 * (s + root),
                d: 0.5 * (s - root),
                big_a: Some(big_a),
                big_b: Some(big_b),
                m: 1.0 - a * a / (b * b),
            })
        }
        PsiCase::QuarticComplexPair(ComplexPosition::SumEqualsOne) => Err(Error::DegenerateMap(
            "symmetric complex pair (sigma = 1) needs no map".into(),
        )),
        PsiCase::QuarticComplexPair(position) => {
            let sigma = fact.sum.unwrap_or(f64::NAN);
            let delta = fact.discriminant.unwrap_or(f64::NAN);
            let one_minus = nondegenerate(1.0 - sigma, "1 - sigma")?;
            let tilde = (sigma * sigma - delta) * ((sigma - 2.0).powi(2) - delta) / 16.0;
            let core = tilde.sqrt() + (sigma * sigma - delta) / 4.0;
            let c = match position {
                ComplexPosition::SumBelowOne => -core / one_minus,
                _ => core / (-one_minus),
            };
            let a = 1.0 / nondegenerate(1.0 - 2.0 * c, "1 - 2c")?;
            let b = (-delta).sqrt() / nondegenerate(2.0 * c - sigma, "2c - sigma")?;
            Ok(HomographicMap {
                a,
                b,
                c,
                d: -a * c,
                big_a: None,
                big_b: None,
                m: -a * a / (b * b),
            })
        }
        PsiCase::QuarticSameSign(position) => {
            let (p, g) = real_roots(fact)?;
            let gp = nondegenerate(g - p, "g - p")?;
            let disc_prime = 4.0 * p * g * (p - 1.0) * (g - 1.0);
            let numer = p * (p - 1.0) + g * (g - 1.0) + disc_prime.sqrt();
            let (a, b, c, d) = match position {
                SameSignPosition::SumAboveTwo => {
                    let b = numer / (gp * nondegenerate(g + p - 1.0, "g + p - 1")?);
                    let a = b * (p - g) + p + g - 1.0;
                    let c = (a + 1.0) / (2.0 * a);
                    (a, b, c, a * c)
                }
                SameSignPosition::SumNegative => {
                    let b = numer / (gp * nondegenerate(1.0 - g - p, "1 - g - p")?);
                    let a = b * (p - g) + 1.0 - p - g;
                    let c = -(1.0 - a) / (2.0 * a);
                    (a, b, c, -a * c)
                }
            };
            Ok(HomographicMap {
                a,
                b,
                c,
                d,
                big_a: None,
                big_b: None,
                m: a * a / (b * b),
            })
        }
        other => Err(Error::DegenerateMap(format!(
            "{other} is not a quartic configuration"
        ))),
    }
}

/// F(φ | m) for amplitudes up to π, via F(φ) = 2K − F(π − φ).
fn ellik_extended(phi: f64, m: f64) -> Result<f64> {
    if phi <= FRAC_PI_2 {
        ellik_incomplete(phi, m)
    } else {
        Ok(2.0 * ellik_complete(m)? - ellik_incomplete(PI - phi, m)?)
    }
}

fn clamped_asin(x: f64) -> f64 {
    x.min(1.0).asin()
}

/// ∫₀^{1/2} du/√ψ_half(u) for one half of the piecewise kind.
fn half_integral(half: &HalfFactor) -> Result<f64> {
    let xi = half.xi;
    let a0 = half.leading;
    let real = |i: usize| match half.roots.get(i) {
        Some(PsiRoot::Real(r)) => Ok(*r),
        _ => Err(Error::DegenerateMap(format!(
            "{} half without real roots",
            half.case
        ))),
    };
    match half.case {
        HalfCase::Linear(LinearRegime::Critical) => Ok((2.0 / half.linear).sqrt()),
        HalfCase::Linear(LinearRegime::Above) => {
            let phi0 = (1.0 + half.beta * xi / (6.0 * (xi - 1.0))).sqrt();
            Ok(2.0 / (xi - 1.0).sqrt() * (1.0 / phi0).atan())
        }
        HalfCase::Linear(LinearRegime::Below) => {
            let b0 = half.linear;
            let c = ((1.0 - xi) / b0).sqrt();
            let r = (c * c + 2.0).sqrt();
            Ok(((r + c) / (r - c)).ln() / (c * b0.sqrt()))
        }
        HalfCase::OppositeSigns => {
            let (r_minus, r_plus) = (real(0)?, real(1)?);
            let phi0 = clamped_asin(1.0 / (2.0 * r_plus).sqrt());
            Ok(2.0 / (a0 * -r_minus).sqrt() * ellik_incomplete(phi0, r_plus / r_minus)?)
        }
        HalfCase::ComplexPair => {
            let (mu, zeta4) = half.monic_factor();
            let zeta = zeta4.sqrt().sqrt();
            let phi = 2.0 * (1.0 / (zeta * 2f64.sqrt())).atan();
            let m = 0.5 - mu / (4.0 * zeta * zeta);
            Ok(ellik_extended(phi, m)? / (zeta * a0.sqrt()))
        }
        HalfCase::ThreeRealPositive => {
            let (r_minus, r_plus) = (real(0)?, real(1)?);
            let phi0 = clamped_asin(1.0 / (2.0 * r_minus).sqrt());
            Ok(2.0 / (a0 * r_plus).sqrt() * ellik_incomplete(phi0, r_minus / r_plus)?)
        }
    }
}

/// Closed-form I(λ) for an already classified ψ_λ.
pub fn integral_from_factorization(model: &SigmaModel, fact: &PsiFactorization) -> Result<f64> {
    let xi = fact.xi;
    let a0 = fact.leading;
    match fact.case {
        PsiCase::QuadraticConstant => Ok(PI / (xi - 1.0).sqrt()),
        PsiCase::CubicAffine => {
            let alpha = model.alpha.abs();
            let m = 2.0 * alpha * xi / (3.0 * xi + alpha * xi - 3.0);
            Ok(2.0 / (xi * (1.0 + alpha / 3.0) - 1.0).sqrt() * ellik_complete(m)?)
        }
        PsiCase::QuarticOppositeSigns => {
            let (p, g) = real_roots(fact)?;
            let map = build_homographic_map(fact)?;
            Ok((1.0 - map.a / map.b) / (a0.sqrt() * (g - p).sqrt()) * ellik_complete(map.m)?)
        }
        PsiCase::QuarticComplexPair(ComplexPosition::SumEqualsOne) => {
            let delta = fact.discriminant.unwrap_or(f64::NAN);
            Ok(4.0 / (a0.abs().sqrt() * (-delta).sqrt()) * ellik_complete(1.0 / delta)?)
        }
        PsiCase::QuarticComplexPair(_) => {
            let map = build_homographic_map(fact)?;
            let (a, b) = (map.a, map.b);
            let scale = 2.0 * ((1.0 - a * a) * (b * b + 1.0)).sqrt()
                / (a0.abs().sqrt() * b.abs() * (map.d - map.c).abs());
            Ok(scale * ellik_complete(map.m)?)
        }
        PsiCase::QuarticSameSign(_) => {
            let map = build_homographic_map(fact)?;
            let (a, b) = (map.a, map.b);
            let scale = 2.0 * ((1.0 - a * a) * (b * b - 1.0)).sqrt()
                / (a0.abs().sqrt() * b.abs() * (map.c - map.d).abs());
            Ok(scale * ellik_complete(map.m)?)
        }
        PsiCase::PiecewiseCubicPair(..) => {
            let [left, right] = fact
                .halves
                .as_ref()
                .ok_or_else(|| Error::DegenerateMap("piecewise case without halves".into()))?;
            Ok(half_integral(left)? + half_integral(right)?)
        }
    }
}

/// Exact I(λ) = ∫₀¹ dh/√ψ_λ(h).
///
/// Fails with `InfeasibleLambda` for λ ≤ λ_low and with `NearDegenerate` or
/// `DegenerateMap` when the closed form is unreliable; callers then use
/// [`integral_i_quadrature`].
pub fn integral_i(model: &SigmaModel, lambda: f64) -> Result<f64> {
    integral_i_with_case(model, lambda).map(|(v, _)| v)
}

/// [`integral_i`] together with the dispatch case that produced it.
pub fn integral_i_with_case(model: &SigmaModel, lambda: f64) -> Result<(f64, PsiCase)> {
    let fact = classify_psi(model, lambda)?;
    Ok((integral_from_factorization(model, &fact)?, fact.case))
}

/// Substituted integrand π/√(2λW(h) − 1) with h = sin²(πt/2), flagging
/// non-positive values.
fn substituted<'a>(
    model: &'a SigmaModel,
    lambda: f64,
    bad: &'a mut bool,
) -> impl FnMut(f64) -> f64 + 'a {
    move |t: f64| {
        let s = (FRAC_PI_2 * t).sin();
        let r = model.reduced_psi_at(lambda, s * s);
        if !(r > 0.0) {
            *bad = true;
            return 0.0;
        }
        PI / r.sqrt()
    }
}

fn break_points(model: &SigmaModel) -> Vec<f64> {
    if model.kind == ModelKind::PiecewiseAffine {
        vec![0.0, 0.5, 1.0]
    } else {
        vec![0.0, 1.0]
    }
}

/// I(λ) by adaptive quadrature after the substitution h = sin²(πt/2), which
/// removes the inverse square-root singularities at both ends.
pub fn integral_i_quadrature(model: &SigmaModel, lambda: f64) -> Result<f64> {
    integral_i_quadrature_tol(model, lambda, DEFAULT_QUAD_TOL)
}

pub fn integral_i_quadrature_tol(model: &SigmaModel, lambda: f64, rel_tol: f64) -> Result<f64> {
    let mut bad = false;
    let value = {
        let mut f = substituted(model, lambda, &mut bad);
        integrate_with_breaks(&mut f, &break_points(model), QuadOptions::rel(rel_tol)).value
    };
    if bad {
        return Err(Error::InfeasibleLambda {
            lambda,
            lower: lambda_lower_bound(model),
        });
    }
    Ok(value)
}

/// One sample of the reconstructed solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub z: f64,
    pub h: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub lambda: f64,
    pub keff: f64,
    /// Dispatch case at λ*, suffixed with `+quadrature` when the closed
    /// form was replaced by the quadrature oracle.
    pub case_tag: String,
    pub iterations: usize,
    pub residual: f64,
    pub profile: Vec<ProfilePoint>,
}

/// I(λ) by closed form, or by quadrature when the closed form is
/// numerically degenerate.
fn integral_with_fallback(model: &SigmaModel, lambda: f64) -> Result<(f64, String)> {
    match integral_i_with_case(model, lambda) {
        Ok((v, case)) => Ok((v, case.to_string())),
        // m rounds to 1 when a root of ψ crowds h = 0 or 1, i.e. just above λ_low
        Err(Error::NearDegenerate { .. })
        | Err(Error::DegenerateMap(_))
        | Err(Error::ParameterOutOfRange(_)) => {
            let v = integral_i_quadrature_tol(model, lambda, FALLBACK_QUAD_TOL)?;
            Ok((v, "near-degenerate+quadrature".to_string()))
        }
        Err(e) => Err(e),
    }
}

/// Solves I(λ) = 1 to |I(λ*) − 1| ≤ tol with a bracketed Brent iteration.
///
/// The bracket starts at λ_low·(1 + 10⁻⁶), where I is very large, and the
/// right end is doubled from λ_low·1.5 until I < 1.
pub fn solve_lambda(model: &SigmaModel, tol: f64) -> Result<SolveResult> {
    solve_with(model, tol, |l| integral_with_fallback(model, l))
}

/// Same bracketed solve as [`solve_lambda`] but with I(λ) evaluated by
/// adaptive quadrature only. Independent of the elliptic reductions.
pub fn solve_lambda_quadrature(model: &SigmaModel, tol: f64) -> Result<SolveResult> {
    solve_with(model, tol, |l| {
        integral_i_quadrature_tol(model, l, FALLBACK_QUAD_TOL)
            .map(|v| (v, "quadrature".to_string()))
    })
}

fn solve_with(
    model: &SigmaModel,
    tol: f64,
    eval: impl Fn(f64) -> Result<(f64, String)>,
) -> Result<SolveResult> {
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let low = lambda_lower_bound(model);
    let mut left = low * (1.0 + 1e-6);
    let mut left_value = None;
    for _ in 0..8 {
        match eval(left) {
            Ok((v, _)) => {
                left_value = Some(v);
                break;
            }
            Err(Error::InfeasibleLambda { .. }) => left = low + 10.0 * (left - low),
            Err(e) => return Err(e),
        }
    }
    let left_value = left_value
        .ok_or_else(|| Error::BracketFailure(format!("no feasible left end above {low}")))?;
    if !(left_value > 1.0) {
        return Err(Error::BracketFailure(format!(
            "I({left}) = {left_value} is not above 1 near the lower bound"
        )));
    }

    let mut right = low * 1.5;
    let mut doublings = 0;
    while eval(right)?.0 >= 1.0 {
        if right <= left {
            left = right;
        }
        right *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::BracketFailure("I(λ) stays above 1".into()));
        }
    }
    if right <= left {
        // the 1.5·λ_low start can only undercut λ_low(1+ε) for ε ≫ 0.5
        left = low * (1.0 + 1e-6);
    }

    let root = brent(
        |l| eval(l).map(|(v, _)| v - 1.0),
        left,
        right,
        tol,
        0.0,
        MAX_SOLVE_ITER,
    )?;
    let lambda = root.x;
    let (value, case_tag) = eval(lambda)?;
    let residual = (value - 1.0).abs();
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations: root.iterations,
            residual,
        });
    }
    Ok(SolveResult {
        lambda,
        keff: 1.0 / lambda,
        case_tag,
        iterations: root.iterations,
        residual,
        profile: reconstruct_profiles(model, lambda, DEFAULT_PROFILE_POINTS)?,
    })
}

/// Samples (z, h, φ) on the graded grid h_k = sin²(πk/(2(n−1))), with
/// z(h) = ∫₀^h dh'/√ψ_λ by quadrature and φ = √ψ_λ(h).
pub fn reconstruct_profiles(
    model: &SigmaModel,
    lambda: f64,
    n_points: usize,
) -> Result<Vec<ProfilePoint>> {
    if n_points < 3 {
        return Err(Error::MeshTooSmall(n_points));
    }
    let last = (n_points - 1) as f64;
    let mut bad = false;
    let mut out = Vec::with_capacity(n_points);
    {
        let mut f = substituted(model, lambda, &mut bad);
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_intervals: 200,
        };
        let mut z = 0.0;
        let mut t_prev = 0.0;
        out.push(ProfilePoint {
            z: 0.0,
            h: 0.0,
            phi: 0.0,
        });
        for k in 1..n_points {
            let t = k as f64 / last;
            if model.kind == ModelKind::PiecewiseAffine && t_prev < 0.5 && t > 0.5 {
                z += integrate(&mut f, t_prev, 0.5, opts).value;
                z += integrate(&mut f, 0.5, t, opts).value;
            } else {
                z += integrate(&mut f, t_prev, t, opts).value;
            }
            let h = if k + 1 == n_points {
                1.0
            } else {
                (FRAC_PI_2 * t).sin().powi(2)
            };
            let phi = model.psi_at(lambda, h).max(0.0).sqrt();
            out.push(ProfilePoint { z, h, phi });
            t_prev = t;
        }
    }
    if bad {
        return Err(Error::InfeasibleLambda {
            lambda,
            lower: lambda_lower_bound(model),
        });
    }
    Ok(out)
}
