//! Run configuration: defaults, optional JSON file, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use keff_core::{make_samples, ModelKind};
use serde::Serialize;
use serde_json::{Map, Value};

pub const DEFAULT_CN_MESHES: [usize; 6] = [40, 80, 160, 320, 640, 1280];
pub const DEFAULT_OUT_DIR: &str = "keff-out";

/// A configuration problem, tagged with the offending field or flag.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Quadrature,
    Cn,
    Coupling,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Analytic,
        Method::Quadrature,
        Method::Cn,
        Method::Coupling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Quadrature => "quadrature",
            Method::Cn => "cn",
            Method::Coupling => "coupling",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analytic" | "elliptic" => Ok(Method::Analytic),
            "quadrature" | "quad" => Ok(Method::Quadrature),
            "cn" | "crank-nicolson" => Ok(Method::Cn),
            "coupling" | "picard" => Ok(Method::Coupling),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    /// |I(λ) − 1| for the elliptic solve.
    pub analytic: f64,
    /// |I(λ) − 1| for the quadrature-only solve.
    pub quadrature: f64,
    /// |S_N(λ) − 1| for the discrete solve.
    pub cn: f64,
    /// |h_{n+1} − h_n|_∞ for the coupling loop.
    pub coupling: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            analytic: keff_core::analytic::DEFAULT_SOLVE_TOL,
            quadrature: keff_core::analytic::DEFAULT_SOLVE_TOL,
            cn: keff_core::cn::DEFAULT_CN_TOL,
            coupling: keff_core::coupling::DEFAULT_COUPLING_TOL,
        }
    }
}

impl Tolerances {
    fn set(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        let field = format!("tol.{name}");
        if !(value.is_finite() && value > 0.0) {
            return Err(ConfigError::new(
                field,
                format!("{value} must be a positive finite number"),
            ));
        }
        match name {
            "analytic" => self.analytic = value,
            "quadrature" => self.quadrature = value,
            "cn" => self.cn = value,
            "coupling" => self.coupling = value,
            _ => {
                return Err(ConfigError::new(
                    field,
                    "unknown tolerance (expected analytic, quadrature, cn or coupling)",
                ))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// σ(0), σ(½), σ(1).
    pub sigma: [f64; 3],
    pub kinds: Vec<ModelKind>,
    pub methods: Vec<Method>,
    /// Ascending, deduplicated.
    pub cn_meshes: Vec<usize>,
    pub coupling_grid: usize,
    pub coupling_max_iter: usize,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub profile_points: usize,
}

impl RunConfig {
    /// Defaults for everything except σ, which has none.
    pub fn with_sigma(sigma: [f64; 3]) -> Self {
        RunConfig {
            sigma,
            kinds: ModelKind::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            cn_meshes: DEFAULT_CN_MESHES.to_vec(),
            coupling_grid: keff_core::coupling::DEFAULT_GRID,
            coupling_max_iter: keff_core::coupling::DEFAULT_MAX_ITER,
            tolerances: Tolerances::default(),
            out: PathBuf::from(DEFAULT_OUT_DIR),
            formats: vec![Format::Json, Format::Csv],
            profile_points: keff_core::analytic::DEFAULT_PROFILE_POINTS,
        }
    }

    pub fn has(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    pub fn writes(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Checks every field and normalizes the lists (dedup, mesh order).
    pub fn validate(mut self) -> Result<Self, ConfigError> {
        make_samples(self.sigma[0], self.sigma[1], self.sigma[2])
            .map_err(|e| ConfigError::new("sigma", e.to_string()))?;
        dedup_in_order(&mut self.kinds);
        dedup_in_order(&mut self.methods);
        dedup_in_order(&mut self.formats);
        if self.kinds.is_empty() {
            return Err(ConfigError::new(
                "kinds",
                "at least one model kind is required",
            ));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::new(
                "methods",
                "at least one method is required",
            ));
        }
        if self.formats.is_empty() {
            return Err(ConfigError::new(
                "format",
                "at least one output format is required",
            ));
        }
        if self.has(Method::Cn) && self.cn_meshes.is_empty() {
            return Err(ConfigError::new(
                "cn-meshes",
                "no meshes given for the cn method",
            ));
        }
        if let Some(&n) = self.cn_meshes.iter().find(|&&n| n < 2) {
            return Err(ConfigError::new(
                "cn-meshes",
                format!("mesh count {n} is below 2"),
            ));
        }
        self.cn_meshes.sort_unstable();
        self.cn_meshes.dedup();
        if self.coupling_grid < 10 {
            return Err(ConfigError::new(
                "coupling-grid",
                format!("{} is below the minimum of 10", self.coupling_grid),
            ));
        }
        if self.coupling_max_iter == 0 {
            return Err(ConfigError::new("coupling-max-iter", "must be at least 1"));
        }
        if self.profile_points < 3 {
            return Err(ConfigError::new("profile-points", "must be at least 3"));
        }
        let t = self.tolerances.clone();
        for (name, v) in [
            ("analytic", t.analytic),
            ("quadrature", t.quadrature),
            ("cn", t.cn),
            ("coupling", t.coupling),
        ] {
            self.tolerances.set(name, v)?;
        }
        Ok(self)
    }
}

fn dedup_in_order<T: PartialEq + Copy>(v: &mut Vec<T>) {
    let mut seen = Vec::with_capacity(v.len());
    v.retain(|x| {
        if seen.contains(x) {
            false
        } else {
            seen.push(*x);
            true
        }
    });
}

/// Command-line flags. Every flag is optional; anything left out falls back
/// to the config file and then to the built-in defaults.
#[derive(Debug, Clone, Default, Parser)]
#[command(
    name = "keff",
    version,
    about = "Criticality eigenvalue of the coupled thermo-neutronic model"
)]
pub struct Cli {
    /// Cross-section samples σ(0) σ(½) σ(1).
    #[arg(long, num_args = 3, value_names = ["S0", "SHALF", "S1"], allow_negative_numbers = true)]
    pub sigma: Option<Vec<String>>,
    /// Comma-separated model kinds.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Comma-separated methods: analytic, quadrature, cn, coupling.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Comma-separated mesh counts for the cn series.
    #[arg(long = "cn-meshes", value_delimiter = ',')]
    pub cn_meshes: Option<Vec<String>>,
    /// Interior node count M of the coupling grid.
    #[arg(long = "coupling-grid")]
    pub coupling_grid: Option<String>,
    /// Iteration cap of the coupling loop.
    #[arg(long = "coupling-max-iter")]
    pub coupling_max_iter: Option<String>,
    /// Tolerance override, repeatable: analytic|quadrature|cn|coupling=VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    /// Number of profile samples per case.
    #[arg(long = "profile-points")]
    pub profile_points: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats: json, csv.
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// JSON file with the same fields; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_f64(field: &str, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| ConfigError::new(field, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(ConfigError::new(field, format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn parse_usize(field: &str, s: &str) -> Result<usize, ConfigError> {
    s.trim()
        .parse()
        .map_err(|_| ConfigError::new(field, format!("`{s}` is not a non-negative integer")))
}

/// Splits list entries and drops blanks, so `--methods ""` is an empty list.
fn list_items(items: &[String]) -> impl Iterator<Item = &str> {
    items
        .iter()
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn parse_list<T: FromStr<Err = String>>(
    field: &str,
    items: &[String],
) -> Result<Vec<T>, ConfigError> {
    list_items(items)
        .map(|s| s.parse().map_err(|e| ConfigError::new(field, e)))
        .collect()
}

fn parse_tol(cfg: &mut RunConfig, arg: &str) -> Result<(), ConfigError> {
    let (name, value) = arg
        .split_once('=')
        .ok_or_else(|| ConfigError::new("tol", format!("`{arg}` is not NAME=VALUE")))?;
    let name = name.trim().to_ascii_lowercase();
    let v = parse_f64(&format!("tol.{name}"), value)?;
    cfg.tolerances.set(&name, v)
}

/// Resolves defaults, then the config file (if any), then flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::with_sigma([f64::NAN; 3]);
    let mut have_sigma = false;
    if let Some(path) = &cli.config {
        have_sigma = apply_file(&mut cfg, path)?;
    }
    if let Some(s) = &cli.sigma {
        if s.len() != 3 {
            return Err(ConfigError::new("sigma", "expected three values"));
        }
        for (slot, raw) in cfg.sigma.iter_mut().zip(s) {
            *slot = parse_f64("sigma", raw)?;
        }
        have_sigma = true;
    }
    if !have_sigma {
        return Err(ConfigError::new(
            "sigma",
            "required (--sigma S0 SHALF S1 or a config file)",
        ));
    }
    if let Some(k) = &cli.kinds {
        cfg.kinds = parse_list("kinds", k)?;
    }
    if let Some(m) = &cli.methods {
        cfg.methods = parse_list("methods", m)?;
    }
    if let Some(n) = &cli.cn_meshes {
        cfg.cn_meshes = list_items(n)
            .map(|s| parse_usize("cn-meshes", s))
            .collect::<Result<_, _>>()?;
    }
    if let Some(m) = &cli.coupling_grid {
        cfg.coupling_grid = parse_usize("coupling-grid", m)?;
    }
    if let Some(m) = &cli.coupling_max_iter {
        cfg.coupling_max_iter = parse_usize("coupling-max-iter", m)?;
    }
    for t in &cli.tol {
        parse_tol(&mut cfg, t)?;
    }
    if let Some(p) = &cli.profile_points {
        cfg.profile_points = parse_usize("profile-points", p)?;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(f) = &cli.format {
        cfg.formats = parse_list("format", f)?;
    }
    cfg.validate()
}

/// Applies a JSON config file; returns whether it set σ.
pub fn apply_file(cfg: &mut RunConfig, path: &Path) -> Result<bool, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    apply_json(cfg, &text)
}

/// Applies the fields of a JSON object. Keys use `_` or `-` interchangeably.
pub fn apply_json(cfg: &mut RunConfig, text: &str) -> Result<bool, ConfigError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
    let Value::Object(map) = root else {
        return Err(ConfigError::new("config", "top level must be an object"));
    };
    let mut have_sigma = false;
    for (key, value) in &map {
        let field = key.replace('_', "-");
        match field.as_str() {
            "sigma" => {
                let arr = value.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
                    ConfigError::new("sigma", "expected an array of three numbers")
                })?;
                for (slot, v) in cfg.sigma.iter_mut().zip(arr) {
                    *slot = json_f64("sigma", v)?;
                }
                have_sigma = true;
            }
            "kinds" => cfg.kinds = json_list(&field, value)?,
            "methods" => cfg.methods = json_list(&field, value)?,
            "format" | "formats" => cfg.formats = json_list("format", value)?,
            "cn-meshes" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| ConfigError::new(&field, "expected an array of integers"))?;
                cfg.cn_meshes = arr
                    .iter()
                    .map(|v| json_usize(&field, v))
                    .collect::<Result<_, _>>()?;
            }
            "coupling-grid" => cfg.coupling_grid = json_usize(&field, value)?,
            "coupling-max-iter" => cfg.coupling_max_iter = json_usize(&field, value)?,
            "profile-points" => cfg.profile_points = json_usize(&field, value)?,
            "out" => {
                let s = value
                    .as_str()
                    .ok_or_else(|| ConfigError::new("out", "expected a path string"))?;
                cfg.out = PathBuf::from(s);
            }
            "tol" | "tolerances" => apply_tolerances(cfg, value)?,
            _ => return Err(ConfigError::new(key.as_str(), "unknown config field")),
        }
    }
    Ok(have_sigma)
}

fn apply_tolerances(cfg: &mut RunConfig, value: &Value) -> Result<(), ConfigError> {
    let map: &Map<String, Value> = value
        .as_object()
        .ok_or_else(|| ConfigError::new("tol", "expected an object"))?;
    for (name, v) in map {
        let name = name.to_ascii_lowercase();
        let x = json_f64(&format!("tol.{name}"), v)?;
        cfg.tolerances.set(&name, x)?;
    }
    Ok(())
}

fn json_f64(field: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ConfigError::new(field, "not representable")),
        Value::String(s) => parse_f64(field, s),
        other => Err(ConfigError::new(
            field,
            format!("expected a number, got {other}"),
        )),
    }
}

fn json_usize(field: &str, v: &Value) -> Result<usize, ConfigError> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| ConfigError::new(field, format!("expected a non-negative integer, got {v}")))
}

fn json_list<T: FromStr<Err = String>>(field: &str, v: &Value) -> Result<Vec<T>, ConfigError> {
    let items: Vec<String> = match v {
        Value::Array(a) => a
            .iter()
            .map(|x| {
                x.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| ConfigError::new(field, format!("expected strings, got {x}")))
            })
            .collect::<Result<_, _>>()?,
        Value::String(s) => vec![s.clone()],
        other => {
            return Err(ConfigError::new(
                field,
                format!("expected a list, got {other}"),
            ))
        }
    };
    parse_list(field, &items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        let mut all = vec!["keff"];
        all.extend_from_slice(args);
        Cli::try_parse_from(all).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = resolve(&cli(&["--sigma", "8", "6", "3"])).unwrap();
        assert_eq!(cfg.sigma, [8.0, 6.0, 3.0]);
        assert_eq!(cfg.kinds.len(), 6);
        assert_eq!(cfg.methods, Method::ALL.to_vec());
        assert_eq!(cfg.cn_meshes, DEFAULT_CN_MESHES.to_vec());
        assert_eq!(cfg.coupling_grid, 800);
    }

    #[test]
    fn lists_are_normalized() {
        let cfg = resolve(&cli(&[
            "--sigma",
            "1",
            "1",
            "1",
            "--cn-meshes",
            "80,40,80",
            "--methods",
            "cn,analytic,cn",
        ]))
        .unwrap();
        assert_eq!(cfg.cn_meshes, vec![40, 80]);
        assert_eq!(cfg.methods, vec![Method::Cn, Method::Analytic]);
    }

    #[test]
    fn tolerance_flags() {
        let cfg = resolve(&cli(&[
            "--sigma",
            "1",
            "2",
            "3",
            "--tol",
            "cn=1e-9",
            "--tol",
            "coupling=1e-8",
        ]))
        .unwrap();
        assert_eq!(cfg.tolerances.cn, 1e-9);
        assert_eq!(cfg.tolerances.coupling, 1e-8);
        let err = resolve(&cli(&["--sigma", "1", "2", "3", "--tol", "cn=-1"])).unwrap_err();
        assert_eq!(err.field, "tol.cn");
        let err = resolve(&cli(&["--sigma", "1", "2", "3", "--tol", "bogus=1"])).unwrap_err();
        assert_eq!(err.field, "tol.bogus");
        let err = resolve(&cli(&["--sigma", "1", "2", "3", "--tol", "cn"])).unwrap_err();
        assert_eq!(err.field, "tol");
    }

    #[test]
    fn sigma_is_required_and_positive() {
        assert_eq!(resolve(&cli(&[])).unwrap_err().field, "sigma");
        assert_eq!(
            resolve(&cli(&["--sigma", "1", "-2", "3"]))
                .unwrap_err()
                .field,
            "sigma"
        );
        assert_eq!(
            resolve(&cli(&["--sigma", "1", "x", "3"]))
                .unwrap_err()
                .field,
            "sigma"
        );
    }

    #[test]
    fn json_fields() {
        let mut cfg = RunConfig::with_sigma([1.0; 3]);
        let text = r#"{"sigma":[2,3,4],"methods":["analytic"],"cn_meshes":[10,20],
            "coupling-grid":50,"tol":{"analytic":1e-11},"format":"csv"}"#;
        assert!(apply_json(&mut cfg, text).unwrap());
        assert_eq!(cfg.sigma, [2.0, 3.0, 4.0]);
        assert_eq!(cfg.methods, vec![Method::Analytic]);
        assert_eq!(cfg.cn_meshes, vec![10, 20]);
        assert_eq!(cfg.coupling_grid, 50);
        assert_eq!(cfg.tolerances.analytic, 1e-11);
        assert_eq!(cfg.formats, vec![Format::Csv]);
        let err = apply_json(&mut cfg, r#"{"grid":3}"#).unwrap_err();
        assert_eq!(err.field, "grid");
        let err = apply_json(&mut cfg, r#"{"coupling_grid":-3}"#).unwrap_err();
        assert_eq!(err.field, "coupling-grid");
    }
}
