//! Scalar root finding and small polynomial helpers.

use crate::error::{Error, Result};

/// Result of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Brent's method (inverse quadratic interpolation / secant with a
/// bisection safeguard) on a bracket `[a, b]` with `f(a)·f(b) ≤ 0`.
///
/// Stops when `|f(x)| ≤ f_tol` or the bracket width drops below
/// `x_tol + 4·eps·|x|`.
pub fn brent<F>(mut f: F, a: f64, b: f64, f_tol: f64, x_tol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            fx: fb,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure(format!(
            "f({a}) = {fa} and f({b}) = {fb} have the same sign"
        )));
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let half = 0.5 * (c - b);
        if fb.abs() <= f_tol || half.abs() <= tol {
            return Ok(Root {
                x: b,
                fx: fb,
                iterations: iter,
            });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = 3.0 * half * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(half) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: fb.abs(),
    })
}

/// Real roots of `a x² + b x + c` in ascending order, computed without
/// cancellation. Returns `None` when the discriminant is negative.
/// For `a == 0` the single root of the linear polynomial is returned twice
/// as `(root, ±inf)` ordered so that the finite root comes first.
pub fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a == 0.0 {
        if b == 0.0 {
            return None;
        }
        return Some((-c / b, f64::INFINITY));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    if q == 0.0 {
        return Some((0.0, 0.0));
    }
    let r1 = q / a;
    let r2 = c / q;
    Some(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}

/// Minimises a continuous function on `[a, b]` by dense sampling followed
/// by golden-section refinement around the best sample. Returns `(x, f(x))`.
pub fn sampled_minimum<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let n = samples.max(3);
    let step = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    let mut best_idx = 0;
    for i in 1..n {
        let x = if i == n - 1 { b } else { a + step * i as f64 };
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
            best_idx = i;
        }
    }
    let lo = if best_idx == 0 {
        a
    } else {
        a + step * (best_idx - 1) as f64
    };
    let hi = if best_idx == n - 1 {
        b
    } else {
        (a + step * (best_idx + 1) as f64).min(b)
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo) <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2), (lo, f(lo)), (hi, f(hi))] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 0.0, 1e-15, 100).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        let r = brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 1e-12, 100);
        assert!(matches!(r, Err(Error::BracketFailure(_))));
    }

    #[test]
    fn brent_propagates_errors() {
        let r = brent(|_| Err(Error::MeshTooSmall(1)), 0.0, 1.0, 1e-12, 1e-12, 10);
        assert_eq!(r, Err(Error::MeshTooSmall(1)));
    }

    #[test]
    fn quadratic_roots_are_stable() {
        // roots 1e-8 and 1e8
        let (r1, r2) = quadratic_real_roots(1.0, -(1e8 + 1e-8), 1.0).unwrap();
        assert!((r1 - 1e-8).abs() < 1e-22);
        assert!((r2 - 1e8).abs() < 1e-6);
        assert!(quadratic_real_roots(1.0, 0.0, 1.0).is_none());
        let (r, inf) = quadratic_real_roots(0.0, 2.0, -1.0).unwrap();
        assert_eq!(r, 0.5);
        assert!(inf.is_infinite());
    }

    #[test]
    fn minimum_interior_and_endpoint() {
        let (x, fx) = sampled_minimum(|x| (x - 0.37).powi(2) + 1.0, 0.0, 1.0, 101);
        assert!((x - 0.37).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
        let (x, _) = sampled_minimum(|x| x, 0.0, 1.0, 11);
        assert_eq!(x, 0.0);
        let (x, _) = sampled_minimum(|x| -x, 0.0, 1.0, 11);
        assert_eq!(x, 1.0);
    }
}
