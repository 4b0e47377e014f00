//! report.json and the CSV tables. CSV output is byte-for-byte
//! deterministic for a given configuration: fixed column order, 12
//! significant digits, LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::run::{build, CaseReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Formats with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // round first so the exponent reflects the printed mantissa
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub const TABLE_HEADER: &str =
    "kind,lambda_analytic,k_eff,lambda_cn,cn_n,cn_order,lambda_coupling,coupling_iters";

/// One row per kind; blank cells for methods that were not run or failed.
pub fn table_csv(reports: &[CaseReport]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in reports {
        let finest = r.cn.as_ref().and_then(|c| c.finest());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.kind,
            opt(r.analytic.as_ref().map(|a| a.lambda)),
            opt(r.keff()),
            opt(finest.map(|f| f.lambda_n)),
            finest.map(|f| f.n.to_string()).unwrap_or_default(),
            opt(r.cn.as_ref().and_then(|c| c.last_order())),
            opt(r.coupling.as_ref().map(|c| c.lambda)),
            r.coupling
                .as_ref()
                .map(|c| c.iterations.to_string())
                .unwrap_or_default(),
        );
    }
    out
}

pub fn profile_csv(report: &CaseReport) -> String {
    let mut out = String::from("z,h,phi\n");
    for p in &report.profile {
        let _ = writeln!(out, "{},{},{}", fmt_num(p.z), fmt_num(p.h), fmt_num(p.phi));
    }
    out
}

/// Σ(h) and V(h) on a uniform grid of `cfg.profile_points` nodes.
pub fn sigma_v_csv(cfg: &RunConfig, report: &CaseReport) -> Option<String> {
    let model = build(cfg, report.kind).ok()?;
    let n = cfg.profile_points - 1;
    let mut out = String::from("h,sigma,v\n");
    for i in 0..=n {
        let h = i as f64 / n as f64;
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(h),
            fmt_num(model.sigma_at(h)),
            fmt_num(model.v_at(h))
        );
    }
    Some(out)
}

#[derive(Serialize)]
struct Report<'a> {
    schema: u32,
    config: &'a RunConfig,
    cases: &'a [CaseReport],
}

pub fn report_json(cfg: &RunConfig, reports: &[CaseReport]) -> String {
    let mut s = serde_json::to_string_pretty(&Report {
        schema: SCHEMA_VERSION,
        config: cfg,
        cases: reports,
    })
    .expect("report serializes");
    s.push('\n');
    s
}

/// Writes every requested file into `cfg.out` and returns the paths.
pub fn write_outputs(cfg: &RunConfig, reports: &[CaseReport]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: &str| -> io::Result<()> {
        let path = cfg.out.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    if cfg.writes(Format::Json) {
        put("report.json".into(), &report_json(cfg, reports))?;
    }
    if cfg.writes(Format::Csv) {
        put("table.csv".into(), &table_csv(reports))?;
        for r in reports {
            if !r.profile.is_empty() {
                put(format!("profile_{}.csv", r.kind), &profile_csv(r))?;
            }
            if let Some(body) = sigma_v_csv(cfg, r) {
                put(format!("sigma_v_{}.csv", r.kind), &body)?;
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::fmt_num;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(9.9999999999999), "10");
        assert_eq!(fmt_num(1.5e-7), "1.5e-07");
        assert_eq!(fmt_num(2.0e13), "2e+13");
        assert_eq!(fmt_num(0.0001), "0.0001");
    }
}
