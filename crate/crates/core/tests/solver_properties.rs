use std::f64::consts::PI;

use keff_core::analytic::{
    integral_i, integral_i_quadrature, integral_i_quadrature_tol, reconstruct_profiles,
    solve_lambda,
};
use keff_core::cn::{build_mesh, discrete_sum, solve_lambda_discrete};
use keff_core::coupling::{coupling_iterate, cumulative_trapezoid};
use keff_core::model::lambda_lower_bound;
use keff_core::{build_model, make_samples, ModelKind, SigmaModel};
use proptest::prelude::*;

fn model(s: (f64, f64, f64), kind: ModelKind) -> SigmaModel {
    build_model(make_samples(s.0, s.1, s.2).unwrap(), kind).unwrap()
}

fn try_model(s: (f64, f64, f64), kind: ModelKind) -> Option<SigmaModel> {
    build_model(make_samples(s.0, s.1, s.2).ok()?, kind).ok()
}

fn i_any(m: &SigmaModel, lambda: f64) -> f64 {
    integral_i(m, lambda).unwrap_or_else(|_| integral_i_quadrature_tol(m, lambda, 1e-13).unwrap())
}

#[test]
fn reference_integral_values() {
    let affine = model((8.0, 5.5, 3.0), ModelKind::Affine);
    assert!((integral_i(&affine, 1.99533).unwrap() - 1.0).abs() < 2e-4);
    let quad = model((8.0, 6.0, 3.0), ModelKind::Quadratic);
    assert!((integral_i(&quad, 1.86593).unwrap() - 1.0).abs() < 2e-4);
    let exact = integral_i(&quad, 2.5).unwrap();
    assert!((integral_i_quadrature(&quad, 2.5).unwrap() - exact).abs() <= 1e-8 * exact);
    let pw = model((8.0, 6.0, 3.0), ModelKind::PiecewiseAffine);
    assert!((integral_i_quadrature(&pw, 1.89454).unwrap() - 1.0).abs() < 2e-4);
}

#[test]
fn discrete_sum_examples() {
    let quad = model((8.0, 6.0, 3.0), ModelKind::Quadratic);
    let s = discrete_sum(&quad, 1.86593, &build_mesh(1024).unwrap()).unwrap();
    assert!((s - 1.0).abs() < 1e-5, "{s}");

    // S(λ) → 0 monotonically as λ grows
    let mesh = build_mesh(32).unwrap();
    let mut prev = f64::INFINITY;
    for k in 0..30 {
        let lambda = 0.5 * 2f64.powi(k);
        let s = discrete_sum(&quad, lambda, &mesh).unwrap();
        assert!(s < prev && s > 0.0);
        prev = s;
    }
    assert!(prev < 1e-3);
}

#[test]
fn discrete_error_ratio_near_four_for_all_kinds() {
    for kind in ModelKind::ALL {
        let m = model((8.0, 6.0, 3.0), kind);
        let exact = solve_lambda(&m, 1e-14).unwrap().lambda;
        let errors: Vec<f64> = [40, 80, 160, 320]
            .iter()
            .map(|&n| (solve_lambda_discrete(&m, n, 1e-13).unwrap().lambda_n - exact).abs())
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "{kind}: ratio {ratio}");
        }
    }
}

#[test]
fn cn_profile_tracks_analytic_profile() {
    // the analytic z(h) at the CN nodes differs from the CN z_j by O(N⁻²)
    let m = model((8.0, 6.0, 3.0), ModelKind::Quadratic);
    let exact = solve_lambda(&m, 1e-14).unwrap();
    let mut prev = f64::INFINITY;
    for n in [50, 100, 200] {
        let sol = solve_lambda_discrete(&m, n, 1e-13).unwrap();
        let analytic = reconstruct_profiles(&m, exact.lambda, n + 1).unwrap();
        let err = sol
            .z_nodes
            .iter()
            .zip(&analytic)
            .map(|(z, p)| (z - p.z).abs())
            .fold(0.0, f64::max);
        if prev.is_finite() {
            let ratio = prev / err;
            assert!((3.0..=5.0).contains(&ratio), "n = {n}: ratio {ratio}");
        }
        prev = err;
    }
}

#[test]
fn coupling_fixed_point_consistency() {
    let m = model((8.0, 6.0, 3.0), ModelKind::Quadratic);
    let state = coupling_iterate(&m, 400, 1e-10, 500).unwrap();
    assert!(state.converged);
    let grid = state.grid_m;
    let dz = 1.0 / (grid + 1) as f64;
    let phi = &state.phi_field;
    let lambda = state.final_lambda();
    let phi_max = phi.iter().cloned().fold(0.0, f64::max);
    assert!((dz * phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!((phi[0], phi[grid + 1]), (0.0, 0.0));
    assert!(phi[1..=grid].iter().all(|&p| p > 0.0));

    let mut residual: f64 = 0.0;
    for i in 1..=grid {
        let lap = (2.0 * phi[i] - phi[i - 1] - phi[i + 1]) / (dz * dz);
        let sigma = m.sigma_at(state.h_field[i].clamp(0.0, 1.0));
        residual = residual.max((lap + phi[i] - lambda * sigma * phi[i]).abs());
    }
    assert!(residual <= 1e-8 * phi_max, "residual {residual:e}");

    let cum = cumulative_trapezoid(phi, dz);
    let gap = cum
        .iter()
        .zip(&state.h_field)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-10);
    let ratios = state.contraction_ratios();
    assert!(ratios.iter().rev().take(3).all(|&r| r < 1.0), "{ratios:?}");
}

#[test]
fn coupling_constant_model_matches_closed_form() {
    let m = model((8.0, 8.0, 8.0), ModelKind::Constant);
    let state = coupling_iterate(&m, 800, 1e-10, 10).unwrap();
    assert!((state.final_lambda() - (1.0 + PI * PI) / 8.0).abs() < 1e-4);
    let dz = 1.0 / 801.0;
    for (i, p) in state.phi_field.iter().enumerate() {
        assert!((p - 0.5 * PI * (PI * i as f64 * dz).sin()).abs() < 1e-4);
    }
}

fn samples() -> impl Strategy<Value = (f64, f64, f64)> {
    (1.0f64..15.0, 1.0f64..15.0, 1.0f64..15.0)
}

fn kind() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integral_strictly_decreasing(s in samples(), kind in kind()) {
        let Some(m) = try_model(s, kind) else { return Ok(()) };
        let low = lambda_lower_bound(&m);
        let values: Vec<f64> = (0..20).map(|k| i_any(&m, low * 1.01 * 1.3f64.powi(k))).collect();
        prop_assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn discrete_sum_strictly_decreasing(s in samples(), kind in kind(), n in 2usize..200) {
        let Some(m) = try_model(s, kind) else { return Ok(()) };
        let mesh = build_mesh(n).unwrap();
        let low = lambda_lower_bound(&m);
        let values: Vec<f64> =
            (0..20).map(|k| discrete_sum(&m, low * 1.01 * 1.3f64.powi(k), &mesh).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn reversal_invariance(s in samples()) {
        for kind in [ModelKind::Quadratic, ModelKind::PiecewiseAffine, ModelKind::Affine] {
            let Some(m) = try_model(s, kind) else { continue };
            let a = solve_lambda(&m, 1e-14).unwrap();
            let b = solve_lambda(&m.reversed().unwrap(), 1e-14).unwrap();
            prop_assert!((a.lambda - b.lambda).abs() <= 1e-10 * a.lambda);
            let n = a.profile.len();
            for k in 0..n {
                let (p, q) = (a.profile[k], b.profile[n - 1 - k]);
                prop_assert!((p.h + q.h - 1.0).abs() <= 1e-12);
                prop_assert!((p.z + q.z - 1.0).abs() <= 1e-9);
                prop_assert!((p.phi - q.phi).abs() <= 1e-9 * (1.0 + p.phi));
            }
        }
    }

    #[test]
    fn homogeneity(s in samples(), kind in kind(), c in 0.1f64..10.0) {
        let Some(m) = try_model(s, kind) else { return Ok(()) };
        let Some(scaled) = try_model((c * s.0, c * s.1, c * s.2), kind) else { return Ok(()) };
        let a = solve_lambda(&m, 1e-14).unwrap();
        let b = solve_lambda(&scaled, 1e-14).unwrap();
        prop_assert!((b.lambda * c - a.lambda).abs() <= 1e-12 * a.lambda);
        prop_assert!((b.keff - c * a.keff).abs() <= 1e-12 * b.keff);
        for (p, q) in a.profile.iter().zip(&b.profile) {
            prop_assert!((p.z - q.z).abs() <= 1e-9 && (p.phi - q.phi).abs() <= 1e-9 * (1.0 + p.phi));
        }
    }

    #[test]
    fn mesh_symmetry(s0 in 1.0f64..15.0, sh in 1.0f64..15.0, kind in kind(), n in 2usize..300) {
        let Some(m) = try_model((s0, sh, s0), kind) else { return Ok(()) };
        let sol = solve_lambda_discrete(&m, n, 1e-13).unwrap();
        for j in 0..=n {
            prop_assert!((sol.z_nodes[j] + sol.z_nodes[n - j] - 1.0).abs() <= 1e-12);
            prop_assert!((sol.phi_nodes[j] - sol.phi_nodes[n - j]).abs() <= 1e-12 * (1.0 + sol.phi_nodes[j]));
        }
    }

    #[test]
    fn solution_exceeds_lower_bound(s in samples(), kind in kind()) {
        let Some(m) = try_model(s, kind) else { return Ok(()) };
        let r = solve_lambda(&m, 1e-12).unwrap();
        prop_assert!(r.lambda > lambda_lower_bound(&m));
        prop_assert!(r.residual <= 1e-12);
        prop_assert_eq!(r.keff, 1.0 / r.lambda);
    }
}

#[test]
fn tall_hump_solves_near_lower_bound() {
    // ψ has a root crowding h = 0 just above λ_low, where m rounds to 1
    let m = build_model(make_samples(1.0, 20.0, 1.0).unwrap(), ModelKind::Quadratic).unwrap();
    let a = solve_lambda(&m, 1e-12).unwrap();
    let q = keff_core::analytic::solve_lambda_quadrature(&m, 1e-12).unwrap();
    assert!((a.lambda - q.lambda).abs() <= 1e-10 * a.lambda);
    assert_eq!(a.case_tag, "quartic-opposite-signs");
}
