//! Root structure of ψ_λ, which selects the closed form used for
//! ∫ dh/√ψ_λ.

use std::fmt;

use serde::Serialize;

use super::{lambda_lower_bound, ModelKind, SigmaModel};
use crate::error::{Error, Result};
use crate::roots::quadratic_real_roots;

/// Below this |α| a piecewise half is treated as exactly linear in Σ.
const LINEAR_ALPHA_TOL: f64 = 1e-12;
/// |ξ − 1| below which the α = 0 half uses the critical (ξ = 1) form.
const CRITICAL_XI_TOL: f64 = 1e-12;
/// |σ − 1| below which the symmetric complex-pair form applies.
const SYMMETRIC_SUM_TOL: f64 = 1e-12;
/// Relative size of a discriminant treated as a double root.
const DEGENERATE_DISCRIMINANT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiRoot {
    Real(f64),
    ConjugatePair { re: f64, im: f64 },
}

impl PsiRoot {
    /// Value of the monic factor(s) contributed by this root at `h`.
    fn factor_at(&self, h: f64) -> f64 {
        match *self {
            PsiRoot::Real(r) => h - r,
            PsiRoot::ConjugatePair { re, im } => (h - re) * (h - re) + im * im,
        }
    }
}

/// Position of σ = p + g for a complex pair p, g = σ/2 ± i√(−Δ)/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexPosition {
    SumEqualsOne,
    SumBelowOne,
    SumAboveOne,
}

/// Position of σ = p + g for two real roots of the same sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SameSignPosition {
    SumAboveTwo,
    SumNegative,
}

/// Regime of ξ for a half on which Σ is constant (α = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearRegime {
    Critical,
    Above,
    Below,
}

/// Root structure of one cubic half u ↦ ψ_half(u), u ∈ [0, ½].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfCase {
    /// α = 0: ψ_half is a quadratic with roots 0 and one other.
    Linear(LinearRegime),
    /// α > 0: roots r₋ < 0 < r₊.
    OppositeSigns,
    /// α < 0 and the quadratic factor has no positive root (a conjugate
    /// pair, or a pair of negative reals).
    ComplexPair,
    /// α < 0 with roots 0 < r₋ < r₊.
    ThreeRealPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiCase {
    QuadraticConstant,
    CubicAffine,
    QuarticOppositeSigns,
    QuarticComplexPair(ComplexPosition),
    QuarticSameSign(SameSignPosition),
    PiecewiseCubicPair(HalfCase, HalfCase),
}

impl fmt::Display for HalfCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HalfCase::Linear(LinearRegime::Critical) => f.write_str("linear(xi=1)"),
            HalfCase::Linear(LinearRegime::Above) => f.write_str("linear(xi>1)"),
            HalfCase::Linear(LinearRegime::Below) => f.write_str("linear(xi<1)"),
            HalfCase::OppositeSigns => f.write_str("opposite-signs"),
            HalfCase::ComplexPair => f.write_str("complex-pair"),
            HalfCase::ThreeRealPositive => f.write_str("three-real"),
        }
    }
}

impl fmt::Display for PsiCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiCase::QuadraticConstant => f.write_str("quadratic-constant"),
            PsiCase::CubicAffine => f.write_str("cubic-affine"),
            PsiCase::QuarticOppositeSigns => f.write_str("quartic-opposite-signs"),
            PsiCase::QuarticComplexPair(ComplexPosition::SumEqualsOne) => {
                f.write_str("quartic-complex-pair(sigma=1)")
            }
            PsiCase::QuarticComplexPair(ComplexPosition::SumBelowOne) => {
                f.write_str("quartic-complex-pair(sigma<1)")
            }
            PsiCase::QuarticComplexPair(ComplexPosition::SumAboveOne) => {
                f.write_str("quartic-complex-pair(sigma>1)")
            }
            PsiCase::QuarticSameSign(SameSignPosition::SumAboveTwo) => {
                f.write_str("quartic-same-sign(sigma>2)")
            }
            PsiCase::QuarticSameSign(SameSignPosition::SumNegative) => {
                f.write_str("quartic-same-sign(sigma<0)")
            }
            PsiCase::PiecewiseCubicPair(l, r) => write!(f, "piecewise[{l}|{r}]"),
        }
    }
}

/// One half of a piecewise ψ_λ in its local variable u (u = h on the left
/// half, u = 1 − h on the right half):
/// ψ_half(u) = cubic·u³ + quadratic·u² + linear·u.
///
/// The right half is the left-half machinery applied to the reflected
/// parameters (α, β) → (−β, −α).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfFactor {
    pub case: HalfCase,
    pub xi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub cubic: f64,
    pub quadratic: f64,
    pub linear: f64,
    /// a₀ = (2/3)|α|ξ (zero in the linear case).
    pub leading: f64,
    /// Non-zero roots of ψ_half.
    pub roots: Vec<PsiRoot>,
}

impl HalfFactor {
    fn new(alpha: f64, beta: f64, xi: f64, lambda: f64, lower: f64) -> Result<Self> {
        let cubic = -2.0 / 3.0 * alpha * xi;
        let quadratic = alpha * xi - xi + 1.0;
        let linear = (beta - 5.0 * alpha) / 12.0 * xi + xi - 1.0;
        let infeasible = || Error::InfeasibleLambda { lambda, lower };

        // ψ_half(u) = u·q(u) must be positive on (0, ½].
        let q = |u: f64| (cubic * u + quadratic) * u + linear;
        if !(linear > 0.0) || !(q(0.5) > 0.0) {
            return Err(infeasible());
        }
        if cubic > 0.0 {
            let vertex = -quadratic / (2.0 * cubic);
            if vertex > 0.0 && vertex < 0.5 && !(q(vertex) > 0.0) {
                return Err(infeasible());
            }
        }

        let mut half = HalfFactor {
            case: HalfCase::OppositeSigns,
            xi,
            alpha,
            beta,
            cubic,
            quadratic,
            linear,
            leading: 2.0 / 3.0 * alpha.abs() * xi,
            roots: Vec::new(),
        };

        if alpha.abs() <= LINEAR_ALPHA_TOL {
            let regime = if (xi - 1.0).abs() <= CRITICAL_XI_TOL {
                LinearRegime::Critical
            } else if xi > 1.0 {
                LinearRegime::Above
            } else {
                LinearRegime::Below
            };
            half.case = HalfCase::Linear(regime);
            half.leading = 0.0;
            if regime != LinearRegime::Critical {
                half.roots.push(PsiRoot::Real(-linear / quadratic));
            }
            return Ok(half);
        }

        let (r1, r2) =
            quadratic_real_roots(cubic, quadratic, linear).unwrap_or((f64::NAN, f64::NAN));
        if alpha > 0.0 {
            // concave quadratic factor with positive value at 0
            half.case = HalfCase::OppositeSigns;
            half.roots = vec![PsiRoot::Real(r1), PsiRoot::Real(r2)];
            return Ok(half);
        }

        // α < 0: u² + μu + ζ⁴ with ζ⁴ > 0
        let mu = quadratic / cubic;
        let zeta4 = linear / cubic;
        let disc = mu * mu - 4.0 * zeta4;
        if disc.abs() <= DEGENERATE_DISCRIMINANT * (1.0 + mu * mu) && mu < 0.0 {
            return Err(Error::NearDegenerate { discriminant: disc });
        }
        if disc < 0.0 {
            half.case = HalfCase::ComplexPair;
            half.roots = vec![PsiRoot::ConjugatePair {
                re: -0.5 * mu,
                im: 0.5 * (-disc).sqrt(),
            }];
        } else if mu > 0.0 {
            half.case = HalfCase::ComplexPair;
            half.roots = vec![PsiRoot::Real(r1), PsiRoot::Real(r2)];
        } else {
            half.case = HalfCase::ThreeRealPositive;
            half.roots = vec![PsiRoot::Real(r1), PsiRoot::Real(r2)];
        }
        Ok(half)
    }

    /// ψ_half(u) rebuilt from the roots.
    pub fn evaluate(&self, u: f64) -> f64 {
        if let HalfCase::Linear(_) = self.case {
            return u * (self.quadratic * u + self.linear);
        }
        self.cubic * u * self.roots.iter().map(|r| r.factor_at(u)).product::<f64>()
    }

    /// Coefficients (μ, ζ⁴) of the monic quadratic factor u² + μu + ζ⁴.
    pub fn monic_factor(&self) -> (f64, f64) {
        (self.quadratic / self.cubic, self.linear / self.cubic)
    }
}

/// Classification of ψ_λ = leading·h(h−1)·Π(h − r) (whole-interval kinds)
/// or of its two cubic halves (piecewise kind).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiFactorization {
    pub case: PsiCase,
    pub xi: f64,
    /// Coefficient of the highest power of h.
    pub leading: f64,
    /// Roots other than 0 and 1.
    pub roots: Vec<PsiRoot>,
    /// σ = p + g (quartic cases).
    pub sum: Option<f64>,
    /// π = pg (quartic cases).
    pub product: Option<f64>,
    /// Δ = σ² − 4π (quartic cases).
    pub discriminant: Option<f64>,
    /// Left and right halves (piecewise kind).
    pub halves: Option<[HalfFactor; 2]>,
}

impl PsiFactorization {
    /// ψ_λ(h) rebuilt from the factorization.
    pub fn evaluate(&self, h: f64) -> f64 {
        if let Some([left, right]) = &self.halves {
            return if h <= 0.5 {
                left.evaluate(h)
            } else {
                right.evaluate(1.0 - h)
            };
        }
        self.leading * h * (h - 1.0) * self.roots.iter().map(|r| r.factor_at(h)).product::<f64>()
    }

    /// The two real roots (p, g) in ascending order, when real.
    pub fn real_pair(&self) -> Option<(f64, f64)> {
        match self.roots.as_slice() {
            [PsiRoot::Real(p), PsiRoot::Real(g)] => Some((*p, *g)),
            _ => None,
        }
    }
}

fn classify_constant(xi: f64, lambda: f64, lower: f64) -> Result<PsiFactorization> {
    if !(xi > 1.0) {
        return Err(Error::InfeasibleLambda { lambda, lower });
    }
    Ok(PsiFactorization {
        case: PsiCase::QuadraticConstant,
        xi,
        leading: 1.0 - xi,
        roots: Vec::new(),
        sum: None,
        product: None,
        discriminant: None,
        halves: None,
    })
}

fn classify_cubic(alpha: f64, xi: f64, lambda: f64, lower: f64) -> Result<PsiFactorization> {
    // 2λW − 1 = c0 + c1·h on [0, 1]
    let c0 = xi * (1.0 - alpha / 3.0) - 1.0;
    let c1 = 2.0 * alpha * xi / 3.0;
    if !(c0 > 0.0) || !(c0 + c1 > 0.0) {
        return Err(Error::InfeasibleLambda { lambda, lower });
    }
    if alpha == 0.0 {
        return classify_constant(xi, lambda, lower);
    }
    Ok(PsiFactorization {
        case: PsiCase::CubicAffine,
        xi,
        leading: -c1,
        roots: vec![PsiRoot::Real(-c0 / c1)],
        sum: None,
        product: None,
        discriminant: None,
        halves: None,
    })
}

fn classify_quartic(
    alpha: f64,
    delta: f64,
    xi: f64,
    lambda: f64,
    lower: f64,
) -> Result<PsiFactorization> {
    // ψ = h(h−1)·q(h), q(h) = a0·h² − S·h + P must be negative on [0, 1]
    let a0 = 2.0 * xi * delta / 3.0;
    let s = 2.0 * xi * (delta + alpha) / 3.0;
    let p = 1.0 - xi + alpha * xi / 3.0 - 2.0 * delta * xi / 3.0;
    let infeasible = || Error::InfeasibleLambda { lambda, lower };
    let q = |h: f64| (a0 * h - s) * h + p;
    if !(q(0.0) < 0.0) || !(q(1.0) < 0.0) {
        return Err(infeasible());
    }
    if a0 < 0.0 {
        let vertex = s / (2.0 * a0);
        if vertex > 0.0 && vertex < 1.0 && !(q(vertex) < 0.0) {
            return Err(infeasible());
        }
    }

    let sum = s / a0;
    let product = p / a0;
    let disc = sum * sum - 4.0 * product;
    let mut fact = PsiFactorization {
        case: PsiCase::QuarticOppositeSigns,
        xi,
        leading: a0,
        roots: Vec::new(),
        sum: Some(sum),
        product: Some(product),
        discriminant: Some(disc),
        halves: None,
    };

    if delta > 0.0 {
        let (r1, r2) = quadratic_real_roots(a0, -s, p).ok_or_else(infeasible)?;
        fact.roots = vec![PsiRoot::Real(r1), PsiRoot::Real(r2)];
        return Ok(fact);
    }

    if disc.abs() < DEGENERATE_DISCRIMINANT * (1.0 + sum * sum) {
        return Err(Error::NearDegenerate { discriminant: disc });
    }
    if disc < 0.0 {
        let position = if (sum - 1.0).abs() <= SYMMETRIC_SUM_TOL {
            ComplexPosition::SumEqualsOne
        } else if sum < 1.0 {
            ComplexPosition::SumBelowOne
        } else {
            ComplexPosition::SumAboveOne
        };
        fact.case = PsiCase::QuarticComplexPair(position);
        fact.roots = vec![PsiRoot::ConjugatePair {
            re: 0.5 * sum,
            im: 0.5 * (-disc).sqrt(),
        }];
        return Ok(fact);
    }

    let (r1, r2) = quadratic_real_roots(a0, -s, p).ok_or_else(infeasible)?;
    fact.roots = vec![PsiRoot::Real(r1), PsiRoot::Real(r2)];
    fact.case = if sum > 2.0 {
        PsiCase::QuarticSameSign(SameSignPosition::SumAboveTwo)
    } else if sum < 0.0 {
        PsiCase::QuarticSameSign(SameSignPosition::SumNegative)
    } else {
        return Err(infeasible());
    };
    Ok(fact)
}

/// Classifies the roots of ψ_λ for formula dispatch.
///
/// Fails with `InfeasibleLambda` when ψ_λ is not positive on (0, 1), and
/// with `NearDegenerate` when two roots nearly collide and the closed forms
/// lose accuracy.
pub fn classify_psi(model: &SigmaModel, lambda: f64) -> Result<PsiFactorization> {
    let lower = || lambda_lower_bound(model);
    let xi = model.xi(lambda);
    let with_lower = |r: Result<PsiFactorization>| match r {
        Err(Error::InfeasibleLambda { lambda, .. }) => Err(Error::InfeasibleLambda {
            lambda,
            lower: lower(),
        }),
        other => other,
    };
    if !(lambda > 0.0) {
        return with_lower(Err(Error::InfeasibleLambda {
            lambda,
            lower: f64::NAN,
        }));
    }
    let result = match model.kind {
        ModelKind::Constant => classify_constant(xi, lambda, f64::NAN),
        ModelKind::Quadratic if model.delta == 0.0 => {
            classify_cubic(model.alpha, xi, lambda, f64::NAN)
        }
        ModelKind::Quadratic => classify_quartic(model.alpha, model.delta, xi, lambda, f64::NAN),
        ModelKind::PiecewiseAffine => {
            let left = HalfFactor::new(model.alpha, model.beta, xi, lambda, f64::NAN);
            let right = HalfFactor::new(-model.beta, -model.alpha, xi, lambda, f64::NAN);
            match (left, right) {
                (Ok(l), Ok(r)) => Ok(PsiFactorization {
                    case: PsiCase::PiecewiseCubicPair(l.case, r.case),
                    xi,
                    leading: l.cubic,
                    roots: Vec::new(),
                    sum: None,
                    product: None,
                    discriminant: None,
                    halves: Some([l, r]),
                }),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        }
        _ => classify_cubic(model.alpha, xi, lambda, f64::NAN),
    };
    with_lower(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, make_samples};

    fn model(s: (f64, f64, f64), kind: ModelKind) -> SigmaModel {
        build_model(make_samples(s.0, s.1, s.2).unwrap(), kind).unwrap()
    }

    fn assert_round_trip(m: &SigmaModel, lambda: f64) -> PsiFactorization {
        let f = classify_psi(m, lambda).unwrap();
        for i in 1..200 {
            let h = i as f64 / 200.0;
            let direct = m.psi_at(lambda, h);
            let rebuilt = f.evaluate(h);
            assert!(
                (direct - rebuilt).abs() <= 1e-12 * direct.abs().max(1e-300),
                "{} at h = {h}: {direct} vs {rebuilt}",
                f.case
            );
        }
        f
    }

    #[test]
    fn concave_samples_have_opposite_sign_roots() {
        let m = model((8.0, 6.0, 3.0), ModelKind::Quadratic);
        let f = assert_round_trip(&m, 1.87);
        assert_eq!(f.case, PsiCase::QuarticOppositeSigns);
        let (p, g) = f.real_pair().unwrap();
        assert!(p < 0.0 && g > 1.0, "p = {p}, g = {g}");
    }

    #[test]
    fn constant_case() {
        let m = model((8.0, 6.0, 3.0), ModelKind::Constant);
        let f = assert_round_trip(&m, 1.9);
        assert_eq!(f.case, PsiCase::QuadraticConstant);
        assert!(f.roots.is_empty());
    }

    #[test]
    fn complex_pair_positions() {
        // δ < 0 with α > 0 gives σ < 1, α < 0 gives σ > 1, α = 0 gives σ = 1
        let below = model((0.7, 0.5, 1.3), ModelKind::Quadratic);
        let f = assert_round_trip(&below, 3.0 / below.mu);
        assert_eq!(
            f.case,
            PsiCase::QuarticComplexPair(ComplexPosition::SumBelowOne)
        );
        assert!(f.discriminant.unwrap() < 0.0);

        let above = model((1.3, 0.5, 0.7), ModelKind::Quadratic);
        let f = assert_round_trip(&above, 3.0 / above.mu);
        assert_eq!(
            f.case,
            PsiCase::QuarticComplexPair(ComplexPosition::SumAboveOne)
        );

        let sym = model((6.0, 3.0, 6.0), ModelKind::Quadratic);
        let f = assert_round_trip(&sym, 3.0 / sym.mu);
        assert_eq!(
            f.case,
            PsiCase::QuarticComplexPair(ComplexPosition::SumEqualsOne)
        );
    }

    #[test]
    fn same_sign_positions() {
        let above = model((1.5, 0.8, 0.5), ModelKind::Quadratic);
        let f = assert_round_trip(&above, 1.5 / above.mu);
        assert_eq!(
            f.case,
            PsiCase::QuarticSameSign(SameSignPosition::SumAboveTwo)
        );
        let (p, g) = f.real_pair().unwrap();
        assert!(1.0 < p && p < g);

        let neg = model((0.5, 0.8, 1.5), ModelKind::Quadratic);
        let f = assert_round_trip(&neg, 1.5 / neg.mu);
        assert_eq!(
            f.case,
            PsiCase::QuarticSameSign(SameSignPosition::SumNegative)
        );
        let (p, g) = f.real_pair().unwrap();
        assert!(p < g && g < 0.0);
    }

    #[test]
    fn discriminant_matches_corrected_closed_form() {
        // Δ = 4ξ[(5δ² + α² + 6δ)ξ − 6δ] / (9a0²)
        for (s, xi) in [
            ((8.0, 6.0, 3.0), 1.5 * 5.5),
            ((0.7, 0.5, 1.3), 3.0),
            ((1.5, 0.8, 0.5), 1.5),
        ] {
            let m = model(s, ModelKind::Quadratic);
            let f = classify_psi(&m, xi / m.mu).unwrap();
            let (a, d) = (m.alpha, m.delta);
            let a0 = 2.0 * xi * d / 3.0;
            let closed =
                4.0 * xi * ((5.0 * d * d + a * a + 6.0 * d) * xi - 6.0 * d) / (9.0 * a0 * a0);
            let disc = f.discriminant.unwrap();
            assert!(
                (disc - closed).abs() < 1e-10 * closed.abs(),
                "{disc} vs {closed}"
            );
        }
    }

    #[test]
    fn affine_and_flat_quadratic_are_cubic() {
        let m = model((8.0, 5.5, 3.0), ModelKind::Affine);
        let f = assert_round_trip(&m, 2.0);
        assert_eq!(f.case, PsiCase::CubicAffine);
        let q = model((8.0, 5.5, 3.0), ModelKind::Quadratic);
        assert_eq!(q.delta, 0.0);
        assert_eq!(assert_round_trip(&q, 2.0).case, PsiCase::CubicAffine);
    }

    #[test]
    fn piecewise_halves() {
        // (8, 6, 3): α = −1/3 on the left, reflected α' = −β = 1/2 on the right
        let m = model((8.0, 6.0, 3.0), ModelKind::PiecewiseAffine);
        let f = assert_round_trip(&m, 1.9);
        match f.case {
            PsiCase::PiecewiseCubicPair(l, r) => {
                assert!(matches!(
                    l,
                    HalfCase::ComplexPair | HalfCase::ThreeRealPositive
                ));
                assert_eq!(r, HalfCase::OppositeSigns);
            }
            other => panic!("unexpected {other}"),
        }
        let flat = model((6.0, 6.0, 9.0), ModelKind::PiecewiseAffine);
        let f = assert_round_trip(&flat, 1.0 / 6.0);
        assert!(matches!(
            f.case,
            PsiCase::PiecewiseCubicPair(HalfCase::Linear(LinearRegime::Critical), _)
        ));
    }

    #[test]
    fn infeasible_below_lower_bound() {
        for kind in ModelKind::ALL {
            let m = model((8.0, 6.0, 3.0), kind);
            let low = lambda_lower_bound(&m);
            assert!(
                matches!(
                    classify_psi(&m, low * (1.0 - 1e-6)),
                    Err(Error::InfeasibleLambda { .. })
                ),
                "{kind}"
            );
            assert!(classify_psi(&m, low * (1.0 + 1e-6)).is_ok(), "{kind}");
        }
    }

    #[test]
    fn near_degenerate_discriminant() {
        // pick ξ where Δ changes sign for the σ < 1 example
        let m = model((0.7, 0.5, 1.3), ModelKind::Quadratic);
        let (a, d) = (m.alpha, m.delta);
        let xi_star = 6.0 * d / (5.0 * d * d + a * a + 6.0 * d);
        let r = classify_psi(&m, xi_star / m.mu);
        assert!(
            matches!(
                r,
                Err(Error::NearDegenerate { .. }) | Err(Error::InfeasibleLambda { .. })
            ),
            "{r:?}"
        );
    }
}
