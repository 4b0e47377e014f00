//! Runs every requested method for every model kind.

use std::collections::BTreeMap;
use std::time::Instant;

use keff_core::analytic::{self, ProfilePoint};
use keff_core::model::lambda_lower_bound;
use keff_core::{cn, coupling, make_samples, ModelKind, SigmaModel};
use serde::Serialize;

use crate::config::{Method, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub mu: f64,
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    pub lambda_low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub lambda: f64,
    pub keff: f64,
    pub case_tag: String,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CnRow {
    pub n: usize,
    pub lambda_n: f64,
    /// |λ_N − λ_ref|, when a reference is available.
    pub error: Option<f64>,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CnReport {
    /// Reference λ for the errors, taken from the analytic or quadrature run.
    /// Without one the orders come from successive differences.
    pub reference: Option<f64>,
    pub rows: Vec<CnRow>,
}

impl CnReport {
    pub fn finest(&self) -> Option<&CnRow> {
        self.rows.last()
    }

    pub fn last_order(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub lambda: f64,
    pub keff: f64,
    pub iterations: usize,
    pub converged: bool,
    pub initial_lambda: f64,
    pub last_delta: Option<f64>,
    pub last_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodFailure {
    /// Method name, or "model" when the Σ representation itself is invalid.
    pub stage: String,
    pub message: String,
}

/// Everything computed for one model kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub kind: ModelKind,
    pub model: Option<ModelSummary>,
    pub analytic: Option<AnalyticReport>,
    pub quadrature: Option<AnalyticReport>,
    pub cn: Option<CnReport>,
    pub coupling: Option<CouplingReport>,
    pub failures: Vec<MethodFailure>,
    /// Seconds per method.
    pub wall_times: BTreeMap<String, f64>,
    /// Where `profile` came from.
    pub profile_source: Option<Method>,
    #[serde(skip)]
    pub profile: Vec<ProfilePoint>,
}

impl CaseReport {
    fn new(kind: ModelKind) -> Self {
        CaseReport {
            kind,
            model: None,
            analytic: None,
            quadrature: None,
            cn: None,
            coupling: None,
            failures: Vec::new(),
            wall_times: BTreeMap::new(),
            profile_source: None,
            profile: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Best available k_eff: analytic, then quadrature.
    pub fn keff(&self) -> Option<f64> {
        self.analytic
            .as_ref()
            .or(self.quadrature.as_ref())
            .map(|r| r.keff)
    }

    fn fail(&mut self, stage: &str, message: impl ToString) {
        self.failures.push(MethodFailure {
            stage: stage.to_string(),
            message: message.to_string(),
        });
    }

    fn set_profile(&mut self, source: Method, profile: Vec<ProfilePoint>) {
        if self.profile_source.is_none() {
            self.profile_source = Some(source);
            self.profile = profile;
        }
    }
}

pub fn build(cfg: &RunConfig, kind: ModelKind) -> keff_core::Result<SigmaModel> {
    let [s0, sh, s1] = cfg.sigma;
    keff_core::build_model(make_samples(s0, sh, s1)?, kind)
}

fn timed<T>(times: &mut BTreeMap<String, f64>, m: Method, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    times.insert(m.name().to_string(), start.elapsed().as_secs_f64());
    out
}

/// Runs one kind. Failures are recorded per method; later methods still run.
pub fn run_case(cfg: &RunConfig, kind: ModelKind) -> CaseReport {
    let mut rep = CaseReport::new(kind);
    let model = match build(cfg, kind) {
        Ok(m) => m,
        Err(e) => {
            rep.fail("model", e);
            return rep;
        }
    };
    rep.model = Some(ModelSummary {
        mu: model.mu,
        alpha: model.alpha,
        delta: model.delta,
        beta: model.beta,
        lambda_low: lambda_lower_bound(&model),
    });

    let mut times = BTreeMap::new();
    for (method, solve) in [
        (
            Method::Analytic,
            analytic::solve_lambda as fn(&SigmaModel, f64) -> _,
        ),
        (Method::Quadrature, analytic::solve_lambda_quadrature),
    ] {
        if !cfg.has(method) {
            continue;
        }
        let tol = match method {
            Method::Analytic => cfg.tolerances.analytic,
            _ => cfg.tolerances.quadrature,
        };
        let outcome = timed(&mut times, method, || {
            let sol = solve(&model, tol)?;
            let profile = if cfg.profile_points == analytic::DEFAULT_PROFILE_POINTS {
                sol.profile.clone()
            } else {
                analytic::reconstruct_profiles(&model, sol.lambda, cfg.profile_points)?
            };
            Ok::<_, keff_core::Error>((sol, profile))
        });
        match outcome {
            Ok((sol, profile)) => {
                let r = AnalyticReport {
                    lambda: sol.lambda,
                    keff: sol.keff,
                    case_tag: sol.case_tag,
                    iterations: sol.iterations,
                    residual: sol.residual,
                };
                if method == Method::Analytic {
                    rep.analytic = Some(r);
                } else {
                    rep.quadrature = Some(r);
                }
                rep.set_profile(method, profile);
            }
            Err(e) => rep.fail(method.name(), e),
        }
    }

    if cfg.has(Method::Cn) {
        let reference = rep
            .analytic
            .as_ref()
            .or(rep.quadrature.as_ref())
            .map(|r| r.lambda);
        let outcome = timed(&mut times, Method::Cn, || cn_series(cfg, &model, reference));
        match outcome {
            Ok((report, finest)) => {
                rep.cn = Some(report);
                let profile = finest
                    .z_nodes
                    .iter()
                    .zip(&finest.h_nodes)
                    .zip(&finest.phi_nodes)
                    .map(|((&z, &h), &phi)| ProfilePoint { z, h, phi })
                    .collect();
                rep.set_profile(Method::Cn, profile);
            }
            Err(e) => rep.fail("cn", e),
        }
    }

    if cfg.has(Method::Coupling) {
        let outcome = timed(&mut times, Method::Coupling, || {
            coupling::coupling_iterate(
                &model,
                cfg.coupling_grid,
                cfg.tolerances.coupling,
                cfg.coupling_max_iter,
            )
        });
        match outcome {
            Ok(state) => {
                let lambda = state.final_lambda();
                rep.coupling = Some(CouplingReport {
                    lambda,
                    keff: 1.0 / lambda,
                    iterations: state.iterations(),
                    converged: state.converged,
                    initial_lambda: state.initial_lambda,
                    last_delta: state.h_delta_seq.last().copied(),
                    last_ratio: state.contraction_ratios().last().copied(),
                });
                if let Err(e) = state.ensure_converged() {
                    rep.fail("coupling", e);
                }
                let profile = state
                    .z
                    .iter()
                    .zip(&state.h_field)
                    .zip(&state.phi_field)
                    .map(|((&z, &h), &phi)| ProfilePoint { z, h, phi })
                    .collect();
                rep.set_profile(Method::Coupling, profile);
            }
            Err(e) => rep.fail("coupling", e),
        }
    }
    rep.wall_times = times;
    rep
}

fn cn_series(
    cfg: &RunConfig,
    model: &SigmaModel,
    reference: Option<f64>,
) -> keff_core::Result<(CnReport, cn::DiscreteSolution)> {
    let mut rows: Vec<CnRow> = Vec::with_capacity(cfg.cn_meshes.len());
    let mut finest = None;
    for &n in &cfg.cn_meshes {
        let sol = cn::solve_lambda_discrete(model, n, cfg.tolerances.cn)?;
        let error = reference.map(|r| (sol.lambda_n - r).abs());
        let order = match (reference, rows.len()) {
            (Some(_), k) if k >= 1 => {
                let prev = &rows[k - 1];
                observed_order(prev.error.unwrap_or(0.0), error.unwrap_or(0.0), prev.n, n)
            }
            (None, k) if k >= 2 => {
                let d_prev = (rows[k - 1].lambda_n - rows[k - 2].lambda_n).abs();
                let d = (sol.lambda_n - rows[k - 1].lambda_n).abs();
                observed_order(d_prev, d, rows[k - 1].n, n)
            }
            _ => None,
        };
        rows.push(CnRow {
            n,
            lambda_n: sol.lambda_n,
            error,
            order,
        });
        finest = Some(sol);
    }
    let finest = finest.ok_or(keff_core::Error::MeshTooSmall(0))?;
    Ok((CnReport { reference, rows }, finest))
}

fn observed_order(e_prev: f64, e: f64, n_prev: usize, n: usize) -> Option<f64> {
    (e_prev > 0.0 && e > 0.0).then(|| (e_prev / e).ln() / (n as f64 / n_prev as f64).ln())
}

/// Runs all kinds on scoped threads; results keep the configured kind order.
pub fn run_all(cfg: &RunConfig) -> Vec<CaseReport> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .kinds
            .iter()
            .map(|&kind| scope.spawn(move || run_case(cfg, kind)))
            .collect();
        handles
            .into_iter()
            .zip(&cfg.kinds)
            .map(|(h, &kind)| {
                h.join().unwrap_or_else(|_| {
                    let mut rep = CaseReport::new(kind);
                    rep.fail("panic", "solver thread panicked");
                    rep
                })
            })
            .collect()
    })
}
