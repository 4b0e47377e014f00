//! Command-line driver for `keff-core`: resolves a [`RunConfig`], runs each
//! model kind with the requested methods and writes JSON/CSV reports.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;

use clap::Parser;

pub use config::{resolve, Cli, ConfigError, Format, Method, RunConfig};
pub use run::{run_all, run_case, CaseReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Parses `args`, runs and writes outputs. Returns the process exit code:
/// 0 if every case succeeded, 2 if some method failed for some case, 1 on
/// a configuration or output error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let reports = run_all(&cfg);
    if let Err(e) = output::write_outputs(&cfg, &reports) {
        eprintln!("error: cannot write outputs to {}: {e}", cfg.out.display());
        return EXIT_CONFIG;
    }
    print_summary(&reports);
    if reports.iter().all(CaseReport::ok) {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

fn print_summary(reports: &[CaseReport]) {
    let cell = |x: Option<f64>| x.map(|v| format!("{v:.10}")).unwrap_or_else(|| "-".into());
    println!(
        "{:<24} {:>14} {:>14} {:>14} {:>14}",
        "kind", "lambda", "k_eff", "lambda_cn", "lambda_coupl"
    );
    for r in reports {
        println!(
            "{:<24} {:>14} {:>14} {:>14} {:>14}",
            r.kind.name(),
            cell(
                r.analytic
                    .as_ref()
                    .or(r.quadrature.as_ref())
                    .map(|a| a.lambda)
            ),
            cell(r.keff()),
            cell(r.cn.as_ref().and_then(|c| c.finest()).map(|f| f.lambda_n)),
            cell(r.coupling.as_ref().map(|c| c.lambda)),
        );
        for f in &r.failures {
            eprintln!("{}: {} failed: {}", r.kind, f.stage, f.message);
        }
    }
}
