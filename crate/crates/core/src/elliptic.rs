//! Elliptic integral of the first kind in the parameter convention
//!
//! ```text
//!              φ
//!             ⌠          dθ
//! F(φ | m) =  │  ___________________        0 ≤ φ ≤ π/2,  m < 1
//!             │     _______________
//!             ⌡   \╱ 1 - m sin²(θ)
//!            0
//! ```
//!
//! Arguments are always ordered `(phi, m)`. Negative parameters are common
//! here (complex-conjugate root pairs), so the evaluation goes through
//! Carlson's symmetric integral R_F, which is uniformly accurate for any
//! m < 1, instead of a series in m.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

// Relative truncation error of the R_F series is below ERRTOL^6 / 4.
const ERRTOL: f64 = 1.0e-3;
const MAX_DUPLICATIONS: usize = 200;

/// Carlson's symmetric elliptic integral of the first kind
/// R_F(x, y, z) = ½ ∫₀^∞ dt / √((t+x)(t+y)(t+z)).
///
/// At most one of the arguments may be zero; all must be non-negative.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0 && z >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "R_F arguments must be non-negative, got ({x}, {y}, {z})"
        )));
    }
    if (x == 0.0 && y == 0.0) || (x == 0.0 && z == 0.0) || (y == 0.0 && z == 0.0) {
        return Err(Error::ParameterOutOfRange(
            "R_F diverges when two arguments vanish".into(),
        ));
    }

    let (mut x, mut y, mut z) = (x, y, z);
    for _ in 0..MAX_DUPLICATIONS {
        let mean = (x + y + z) / 3.0;
        let dx = 1.0 - x / mean;
        let dy = 1.0 - y / mean;
        let dz = 1.0 - z / mean;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            let series = 1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0;
            return Ok(series / mean.sqrt());
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
    }
    Err(Error::ParameterOutOfRange(
        "R_F duplication did not converge".into(),
    ))
}

/// Incomplete elliptic integral of the first kind F(φ | m).
///
/// Requires `m < 1` and `0 ≤ phi ≤ π/2`.
pub fn ellik_incomplete(phi: f64, m: f64) -> Result<f64> {
    if !(m < 1.0) || !m.is_finite() {
        return Err(Error::ParameterOutOfRange(format!(
            "parameter m = {m} must be < 1"
        )));
    }
    if !(0.0..=FRAC_PI_2).contains(&phi) {
        return Err(Error::ParameterOutOfRange(format!(
            "amplitude phi = {phi} outside [0, pi/2]"
        )));
    }
    if phi == 0.0 {
        return Ok(0.0);
    }
    if m == 0.0 {
        return Ok(phi);
    }
    let (s, c) = phi.sin_cos();
    Ok(s * carlson_rf(c * c, 1.0 - m * s * s, 1.0)?)
}

/// Complete elliptic integral of the first kind K(m) = F(π/2 | m).
pub fn ellik_complete(m: f64) -> Result<f64> {
    if !(m < 1.0) || !m.is_finite() {
        return Err(Error::ParameterOutOfRange(format!(
            "parameter m = {m} must be < 1"
        )));
    }
    if m == 0.0 {
        return Ok(FRAC_PI_2);
    }
    carlson_rf(0.0, 1.0 - m, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_parameter_is_identity() {
        for phi in [0.0, 0.3, 1.0, FRAC_PI_2] {
            assert_eq!(ellik_incomplete(phi, 0.0).unwrap(), phi);
        }
        assert_eq!(ellik_complete(0.0).unwrap(), FRAC_PI_2);
    }

    #[test]
    fn zero_amplitude() {
        assert_eq!(ellik_incomplete(0.0, -3.0).unwrap(), 0.0);
        assert_eq!(ellik_incomplete(0.0, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn complete_reference_values() {
        // values from an independent adaptive quadrature of the defining integral
        assert!((ellik_complete(-1.0).unwrap() - 1.311_028_777_146_06).abs() < 1e-13);
        assert!((ellik_complete(0.5).unwrap() - 1.854_074_677_301_372).abs() < 1e-13);
        assert!((ellik_complete(0.28577).unwrap() - 1.705_659_408_673_34).abs() < 1e-13);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            ellik_complete(1.0),
            Err(Error::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            ellik_incomplete(0.5, 1.5),
            Err(Error::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            ellik_incomplete(-0.1, 0.5),
            Err(Error::ParameterOutOfRange(_))
        ));
        assert!(matches!(
            ellik_incomplete(2.0, 0.5),
            Err(Error::ParameterOutOfRange(_))
        ));
        assert!(ellik_complete(f64::NAN).is_err());
    }

    #[test]
    fn complete_matches_incomplete_at_right_angle() {
        for m in [-40.0, -1.0, 0.1, 0.7, 0.999] {
            let a = ellik_complete(m).unwrap();
            let b = ellik_incomplete(FRAC_PI_2, m).unwrap();
            assert!((a - b).abs() <= 1e-15 * a, "m = {m}");
        }
    }

    #[test]
    fn rf_homogeneity() {
        // R_F(cx, cy, cz) = R_F(x, y, z) / sqrt(c)
        let a = carlson_rf(0.3, 1.7, 2.2).unwrap();
        let b = carlson_rf(1.2, 6.8, 8.8).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        // R_F(x, x, x) = 1/sqrt(x)
        assert!((carlson_rf(4.0, 4.0, 4.0).unwrap() - 0.5).abs() < 1e-16);
        // R_F(0, 1, 1) = pi / 2
        assert!((carlson_rf(0.0, 1.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
    }
}
