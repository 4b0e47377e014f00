//! Cross-section representations built from three samples, the potential
//! V (V'' = Σ, V(0) = V(1) = 0) and the function
//! ψ_λ(h) = h(h−1) − 2λV(h) whose square root is dh/dz.
//!
//! Every representation has V(h) = h(h−1)·W(h) with W > 0 on [0, 1]. All
//! evaluations go through W so that ψ_λ = h(1−h)(2λW − 1) carries its
//! boundary zeros exactly and never suffers cancellation near h = 0 or 1.

mod factor;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::sampled_minimum;

pub use factor::{
    classify_psi, ComplexPosition, HalfCase, HalfFactor, LinearRegime, PsiCase, PsiFactorization,
    PsiRoot, SameSignPosition,
};

/// Dense-scan sample count for [`lambda_lower_bound`].
const LOWER_BOUND_SAMPLES: usize = 2001;

/// Σ sampled at h = 0, 1/2 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSamples {
    sigma0: f64,
    sigma_half: f64,
    sigma1: f64,
}

impl SigmaSamples {
    pub fn new(sigma0: f64, sigma_half: f64, sigma1: f64) -> Result<Self> {
        for (name, value) in [
            ("sigma0", sigma0),
            ("sigma_half", sigma_half),
            ("sigma1", sigma1),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveSample { name, value });
            }
        }
        Ok(Self {
            sigma0,
            sigma_half,
            sigma1,
        })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }
    pub fn sigma_half(&self) -> f64 {
        self.sigma_half
    }
    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// Samples of the mirrored profile h ↦ Σ(1−h).
    pub fn reversed(&self) -> Self {
        Self {
            sigma0: self.sigma1,
            sigma_half: self.sigma_half,
            sigma1: self.sigma0,
        }
    }

    /// All samples multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.sigma0, c * self.sigma_half, c * self.sigma1)
    }
}

pub fn make_samples(s0: f64, s_half: f64, s1: f64) -> Result<SigmaSamples> {
    SigmaSamples::new(s0, s_half, s1)
}

/// The six ways of turning three samples into a function Σ on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Σ ≡ μ with μ the mean of the piecewise-affine interpolant.
    Constant,
    /// Straight line through σ₀ and σ₁ (σ_{1/2} ignored).
    Affine,
    /// Lagrange interpolant of degree 2.
    Quadratic,
    /// Continuous, affine on [0, ½] and on [½, 1].
    PiecewiseAffine,
    /// Least-squares affine projection of the quadratic interpolant.
    SemiAnalyticQuadratic,
    /// Least-squares affine projection of the piecewise-affine interpolant.
    SemiAnalyticPiecewise,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Constant,
        ModelKind::Affine,
        ModelKind::Quadratic,
        ModelKind::PiecewiseAffine,
        ModelKind::SemiAnalyticQuadratic,
        ModelKind::SemiAnalyticPiecewise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Constant => "constant",
            ModelKind::Affine => "affine",
            ModelKind::Quadratic => "quadratic",
            ModelKind::PiecewiseAffine => "piecewise-affine",
            ModelKind::SemiAnalyticQuadratic => "semi-analytic-quadratic",
            ModelKind::SemiAnalyticPiecewise => "semi-analytic-piecewise",
        }
    }

    /// True for the kinds evaluated through the affine closed forms.
    pub fn is_affine_shaped(self) -> bool {
        matches!(
            self,
            ModelKind::Affine | ModelKind::SemiAnalyticQuadratic | ModelKind::SemiAnalyticPiecewise
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "constant" | "decoupled" => ModelKind::Constant,
            "affine" => ModelKind::Affine,
            "quadratic" | "parabolic" => ModelKind::Quadratic,
            "piecewise-affine" | "piecewise" => ModelKind::PiecewiseAffine,
            "semi-analytic-quadratic" | "semi-quadratic" => ModelKind::SemiAnalyticQuadratic,
            "semi-analytic-piecewise" | "semi-piecewise" => ModelKind::SemiAnalyticPiecewise,
            _ => return Err(format!("unknown model kind `{s}`")),
        })
    }
}

/// A Σ representation with its derived shape parameters.
///
/// * Constant: Σ ≡ `mu`.
/// * Affine-shaped kinds: Σ(h) = `mu`·(1 − α + 2αh), so σ₀ = μ(1−α),
///   σ₁ = μ(1+α).
/// * Quadratic: Σ(h) = `mu`·(1 − α + 2αh + 4δh(1−h)), so σ_{1/2} = μ(1+δ).
/// * PiecewiseAffine: `mu` = σ_{1/2}, Σ(h) = μ(1 − α + 2αh) on [0, ½] and
///   μ(1 − β + 2βh) on [½, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaModel {
    pub kind: ModelKind,
    pub samples: SigmaSamples,
    pub mu: f64,
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
}

/// Endpoints of the least-squares affine projection of the quadratic
/// interpolant.
pub fn project_quadratic(s: &SigmaSamples) -> (f64, f64) {
    (
        (3.0 * s.sigma0 + 4.0 * s.sigma_half - 2.0 * s.sigma1) / 5.0,
        (-2.0 * s.sigma0 + 4.0 * s.sigma_half + 3.0 * s.sigma1) / 5.0,
    )
}

/// Endpoints of the least-squares affine projection of the
/// piecewise-affine interpolant.
pub fn project_piecewise(s: &SigmaSamples) -> (f64, f64) {
    (
        (11.0 * s.sigma0 + 10.0 * s.sigma_half - 5.0 * s.sigma1) / 16.0,
        (-5.0 * s.sigma0 + 10.0 * s.sigma_half + 11.0 * s.sigma1) / 16.0,
    )
}

fn affine_shape(
    kind: ModelKind,
    samples: SigmaSamples,
    left: f64,
    right: f64,
) -> Result<SigmaModel> {
    let mu = 0.5 * (left + right);
    let alpha = (right - left) / (right + left);
    if !(alpha.abs() < 1.0) {
        return Err(Error::InvalidShape(format!(
            "|alpha| = {} must be < 1",
            alpha.abs()
        )));
    }
    Ok(SigmaModel {
        kind,
        samples,
        mu,
        alpha,
        delta: 0.0,
        beta: 0.0,
    })
}

pub fn build_model(samples: SigmaSamples, kind: ModelKind) -> Result<SigmaModel> {
    let SigmaSamples {
        sigma0,
        sigma_half,
        sigma1,
    } = samples;
    match kind {
        ModelKind::Constant => Ok(SigmaModel {
            kind,
            samples,
            mu: 0.25 * (sigma0 + 2.0 * sigma_half + sigma1),
            alpha: 0.0,
            delta: 0.0,
            beta: 0.0,
        }),
        ModelKind::Affine => affine_shape(kind, samples, sigma0, sigma1),
        ModelKind::Quadratic => {
            let mu = 0.5 * (sigma0 + sigma1);
            let alpha = 1.0 - sigma0 / mu;
            let delta = -(sigma0 - 2.0 * sigma_half + sigma1) / (sigma0 + sigma1);
            let gamma = 1.0 - alpha.abs() / 3.0 + 2.0 * delta / 3.0;
            if !(alpha.abs() < 1.0) || !(delta > -1.0) || !(gamma > 0.0) {
                return Err(Error::InvalidShape(format!(
                    "quadratic parameters alpha = {alpha}, delta = {delta}, gamma = {gamma}"
                )));
            }
            Ok(SigmaModel {
                kind,
                samples,
                mu,
                alpha,
                delta,
                beta: 0.0,
            })
        }
        ModelKind::PiecewiseAffine => {
            let mu = sigma_half;
            let alpha = 1.0 - sigma0 / mu;
            let beta = sigma1 / mu - 1.0;
            if !(alpha < 1.0) || !(beta > -1.0) {
                return Err(Error::InvalidShape(format!(
                    "piecewise parameters alpha = {alpha}, beta = {beta}"
                )));
            }
            Ok(SigmaModel {
                kind,
                samples,
                mu,
                alpha,
                delta: 0.0,
                beta,
            })
        }
        ModelKind::SemiAnalyticQuadratic | ModelKind::SemiAnalyticPiecewise => {
            let (left, right) = if kind == ModelKind::SemiAnalyticQuadratic {
                project_quadratic(&samples)
            } else {
                project_piecewise(&samples)
            };
            if !(left > 0.0) {
                return Err(Error::NonPositiveProjection {
                    name: "sigma0",
                    value: left,
                });
            }
            if !(right > 0.0) {
                return Err(Error::NonPositiveProjection {
                    name: "sigma1",
                    value: right,
                });
            }
            affine_shape(kind, samples, left, right)
        }
    }
}

fn check_unit(h: f64) -> Result<()> {
    if (0.0..=1.0).contains(&h) {
        Ok(())
    } else {
        Err(Error::DomainError { value: h })
    }
}

impl SigmaModel {
    pub fn new(samples: SigmaSamples, kind: ModelKind) -> Result<Self> {
        build_model(samples, kind)
    }

    /// Left and right integration constants of the piecewise V, chosen so
    /// that V and V' are continuous at h = ½.
    fn piecewise_constants(&self) -> (f64, f64) {
        let (a, b) = (self.alpha, self.beta);
        (-(12.0 + b - 5.0 * a) / 24.0, -(12.0 + 5.0 * b - a) / 24.0)
    }

    /// Σ(h) without domain checking.
    pub fn sigma_at(&self, h: f64) -> f64 {
        let (mu, a) = (self.mu, self.alpha);
        match self.kind {
            ModelKind::Constant => mu,
            ModelKind::Quadratic => mu * (1.0 - a + 2.0 * a * h + 4.0 * self.delta * h * (1.0 - h)),
            ModelKind::PiecewiseAffine => {
                if h <= 0.5 {
                    mu * (1.0 - a + 2.0 * a * h)
                } else {
                    mu * (1.0 - self.beta + 2.0 * self.beta * h)
                }
            }
            _ => mu * (1.0 - a + 2.0 * a * h),
        }
    }

    /// W(h) = V(h) / (h(h−1)), extended continuously to h = 0 and h = 1.
    /// Strictly positive on [0, 1].
    pub fn w_at(&self, h: f64) -> f64 {
        let (mu, a) = (self.mu, self.alpha);
        match self.kind {
            ModelKind::Constant => 0.5 * mu,
            ModelKind::Quadratic => {
                mu * (0.5 - a / 6.0 + a * h / 3.0 - self.delta * (h * h - h - 1.0) / 3.0)
            }
            ModelKind::PiecewiseAffine => {
                let (c0, c1) = self.piecewise_constants();
                if h <= 0.5 {
                    mu * ((1.0 - a) * h / 2.0 + a * h * h / 3.0 + c0) / (h - 1.0)
                } else {
                    let b = self.beta;
                    let u = 1.0 - h;
                    mu * ((1.0 + b) * u / 2.0 - b * u * u / 3.0 + c1) / (u - 1.0)
                }
            }
            _ => mu * (0.5 - a / 6.0 + a * h / 3.0),
        }
    }

    /// V(h) without domain checking.
    pub fn v_at(&self, h: f64) -> f64 {
        h * (h - 1.0) * self.w_at(h)
    }

    /// ψ_λ(h) without domain checking; exactly zero at h = 0 and h = 1.
    pub fn psi_at(&self, lambda: f64, h: f64) -> f64 {
        h * (1.0 - h) * (2.0 * lambda * self.w_at(h) - 1.0)
    }

    /// 2λW(h) − 1 = ψ_λ(h) / (h(1−h)); positive on [0, 1] iff λ is feasible.
    pub fn reduced_psi_at(&self, lambda: f64, h: f64) -> f64 {
        2.0 * lambda * self.w_at(h) - 1.0
    }

    /// Σ mirrored about h = ½ (for the piecewise kind the roles of α and
    /// β swap with a sign change).
    pub fn reversed(&self) -> Result<Self> {
        build_model(self.samples.reversed(), self.kind)
    }

    /// Scale μ for ξ-type reparametrisations: λμ for affine/quadratic,
    /// λσ_{1/2} for the piecewise kind.
    pub fn xi(&self, lambda: f64) -> f64 {
        lambda * self.mu
    }

    /// A representative mean of Σ used for initial guesses.
    pub fn mean_sigma(&self) -> f64 {
        let s = &self.samples;
        match self.kind {
            ModelKind::Constant => self.mu,
            ModelKind::Quadratic => (s.sigma0 + 4.0 * s.sigma_half + s.sigma1) / 6.0,
            ModelKind::PiecewiseAffine => 0.25 * (s.sigma0 + 2.0 * s.sigma_half + s.sigma1),
            _ => self.mu,
        }
    }
}

pub fn sigma_eval(model: &SigmaModel, h: f64) -> Result<f64> {
    check_unit(h)?;
    Ok(model.sigma_at(h))
}

pub fn v_eval(model: &SigmaModel, h: f64) -> Result<f64> {
    check_unit(h)?;
    Ok(model.v_at(h))
}

pub fn psi_eval(model: &SigmaModel, lambda: f64, h: f64) -> Result<f64> {
    check_unit(h)?;
    Ok(model.psi_at(lambda, h))
}

/// λ_low = max over [0, 1] of h(h−1)/(2V(h)) = 1 / (2·min W).
///
/// For every λ > λ_low, ψ_λ > 0 on (0, 1). The minimum of W is located by
/// dense sampling plus golden-section refinement, separately on each half
/// for the piecewise kind.
pub fn lambda_lower_bound(model: &SigmaModel) -> f64 {
    let w = |h: f64| model.w_at(h);
    let w_min = match model.kind {
        ModelKind::Constant => 0.5 * model.mu,
        ModelKind::PiecewiseAffine => {
            let half = LOWER_BOUND_SAMPLES / 2 + 1;
            let (_, left) = sampled_minimum(w, 0.0, 0.5, half);
            let (_, right) = sampled_minimum(w, 0.5, 1.0, half);
            left.min(right)
        }
        _ => sampled_minimum(w, 0.0, 1.0, LOWER_BOUND_SAMPLES).1,
    };
    0.5 / w_min
}
