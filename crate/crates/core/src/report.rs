//! Side-by-side comparison tables: sieved frequencies, model predictions, the
//! independent model and the Poisson reference, with run metadata.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::afspec::AdditiveFunctionSpec;
use crate::error::{Error, Result};
use crate::kac::{kac_tail_exact_integer, kac_tail_mc, MonteCarloConfig};
use crate::ldp::{poisson_reference, Horizon, Method, Predictor, PredictorConfig};
use crate::numeric::{check_ascending, parse_grid};
use crate::sieve::{empirical_tail_streaming, model_moments, SieveConfig};
use crate::special::normal_tail;

/// Resolves a function name: `omega` (or `ω`), `omega-star` (or `ω*`), `frac:ALPHA`,
/// `table:PATH`. Relative table paths are taken from `base` when given.
pub fn resolve_function(text: &str, base: Option<&Path>) -> Result<AdditiveFunctionSpec> {
    let text = text.trim();
    match text {
        "omega" | "ω" | "w" => return Ok(AdditiveFunctionSpec::omega()),
        "omega-star" | "omega*" | "ω*" => return Ok(AdditiveFunctionSpec::omega_star()),
        _ => {}
    }
    if let Some(alpha) = text.strip_prefix("frac:") {
        let alpha = parse_real_expr(alpha)?;
        return AdditiveFunctionSpec::fractional_part(alpha);
    }
    if let Some(path) = text.strip_prefix("table:") {
        let path = match base {
            Some(dir) if Path::new(path).is_relative() => dir.join(path),
            _ => Path::new(path).to_path_buf(),
        };
        let body = std::fs::read_to_string(&path)
            .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return AdditiveFunctionSpec::parse_table(format!("table:{name}"), &body);
    }
    Err(Error::InvalidSpec(format!(
        "unknown function '{text}' (expected omega, omega-star, frac:ALPHA or table:PATH)"
    )))
}

/// Reals written as decimals, `a/b`, or the named constants `golden` and `sqrt2`.
pub fn parse_real_expr(text: &str) -> Result<f64> {
    let t = text.trim();
    let value = match t {
        "golden" | "phi" => Some((5f64.sqrt() - 1.0) / 2.0),
        "sqrt2" => Some(2f64.sqrt() - 1.0),
        _ => match t.split_once('/') {
            Some((a, b)) => match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(a), Ok(b)) if b != 0.0 => Some(a / b),
                _ => None,
            },
            None => t.parse().ok(),
        },
    };
    value.filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Domain(format!("cannot parse number '{t}'")))
}

/// Positive integers written plainly or in scientific notation (`1e8`).
pub fn parse_count(text: &str) -> Result<u64> {
    let t = text.trim();
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = t.parse().map_err(|_| Error::Domain(format!("cannot parse count '{t}'")))?;
    if v < 0.0 || v != v.floor() || v > 9.007_199_254_740_992e15 {
        return Err(Error::Domain(format!("'{t}' is not a non-negative integer")));
    }
    Ok(v as u64)
}

/// Rationals `p/q` or integers.
pub fn parse_ratio(text: &str) -> Result<Ratio<i64>> {
    let t = text.trim();
    let bad = || Error::Domain(format!("cannot parse rational '{t}'"));
    match t.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(a, b))
        }
        None => Ok(Ratio::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

/// Hex SHA-256 of the canonical description.
pub fn fingerprint(spec: &AdditiveFunctionSpec) -> String {
    Sha256::digest(spec.describe().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Columns that can be requested in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportMethod {
    Normal,
    #[serde(rename = "theorem5")]
    Saddle,
    #[serde(rename = "hwang")]
    Cramer,
    Outline,
    /// Independent model: exact when the values allow it, Monte Carlo otherwise.
    Kac,
    Poisson,
}

impl ReportMethod {
    pub fn column(self) -> &'static str {
        match self {
            ReportMethod::Normal => "normal",
            ReportMethod::Saddle => "theorem5",
            ReportMethod::Cramer => "hwang",
            ReportMethod::Outline => "outline",
            ReportMethod::Kac => "kac",
            ReportMethod::Poisson => "poisson",
        }
    }

    fn predictor(self) -> Option<Method> {
        match self {
            ReportMethod::Normal => Some(Method::Normal),
            ReportMethod::Saddle => Some(Method::Saddle),
            ReportMethod::Cramer => Some(Method::Cramer),
            ReportMethod::Outline => Some(Method::Outline),
            ReportMethod::Kac | ReportMethod::Poisson => None,
        }
    }
}

impl fmt::Display for ReportMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for ReportMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kac" | "kac-exact" | "kac-mc" => Ok(ReportMethod::Kac),
            "poisson" | "poisson-ref" => Ok(ReportMethod::Poisson),
            other => match other.parse::<Method>()? {
                Method::Normal => Ok(ReportMethod::Normal),
                Method::Saddle => Ok(ReportMethod::Saddle),
                Method::Cramer => Ok(ReportMethod::Cramer),
                Method::Outline => Ok(ReportMethod::Outline),
                Method::Poisson => Ok(ReportMethod::Poisson),
            },
        }
    }
}

/// Inputs of a comparison run.
#[derive(Debug, Clone)]
pub struct ReportRequest {
    pub f: AdditiveFunctionSpec,
    pub g: Option<AdditiveFunctionSpec>,
    pub x: u64,
    pub deltas: Vec<f64>,
    pub methods: Vec<ReportMethod>,
    pub seed: u64,
    pub samples: u64,
    pub sieve: SieveConfig,
    pub predictor: PredictorConfig,
}

impl ReportRequest {
    pub fn new(f: AdditiveFunctionSpec, x: u64, deltas: Vec<f64>, methods: Vec<ReportMethod>) -> Self {
        Self {
            f,
            g: None,
            x,
            deltas,
            methods,
            seed: 42,
            samples: 100_000,
            sieve: SieveConfig::default(),
            predictor: PredictorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub version: String,
    pub f: String,
    pub f_fingerprint: String,
    pub g: Option<String>,
    pub g_fingerprint: Option<String>,
    pub x: u64,
    pub loglog_x: f64,
    pub mu: f64,
    pub sigma: f64,
    pub sigma_psi: Option<f64>,
    pub methods: Vec<ReportMethod>,
    pub seed: u64,
    /// `exact` or `monte-carlo` when the independent model was requested.
    pub kac_mode: Option<String>,
    pub kac_samples: Option<u64>,
    pub poisson_threshold: String,
    /// Messages for prediction cells left empty.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub metadata: ReportMetadata,
    pub columns: Vec<String>,
    /// One row per delta, aligned with `columns`; `None` for unavailable cells.
    pub rows: Vec<Vec<Option<f64>>>,
}

const POISSON_NOTE: &str = "P(Poisson(L) >= ceil(L + delta*sqrt(L))), L = ln ln x";

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

/// Builds the comparison table for `request`.
pub fn build_comparison(request: &ReportRequest) -> Result<ComparisonReport> {
    check_ascending(&request.deltas)?;
    let deltas = &request.deltas;
    let mut methods = request.methods.clone();
    methods.sort();
    methods.dedup();
    let horizon = Horizon::from_x(request.x as f64)?;
    let moments = model_moments(&request.f, request.x);
    let mut notes = Vec::new();

    let empirical_f = if deltas.is_empty() {
        Vec::new()
    } else {
        empirical_tail_streaming(&request.f, request.x, deltas, &request.sieve)?.0.empirical
    };
    let empirical_g = match (&request.g, deltas.is_empty()) {
        (Some(g), false) => Some(empirical_tail_streaming(g, request.x, deltas, &request.sieve)?.0.empirical),
        (Some(_), true) => Some(Vec::new()),
        (None, _) => None,
    };

    let mut predictor = match request.f.declared_limit() {
        Some(_) => Some(Predictor::for_spec(&request.f, horizon, request.predictor)?),
        None => None,
    };
    let mut kac_mode = None;
    let mut kac_samples = None;
    let mut predictions: Vec<(ReportMethod, Vec<Option<f64>>)> = Vec::new();
    for &method in &methods {
        let column = match method {
            ReportMethod::Poisson => deltas.iter().map(|&d| Some(poisson_reference(horizon, d))).collect(),
            ReportMethod::Kac => {
                if deltas.is_empty() {
                    Vec::new()
                } else {
                    match kac_tail_exact_integer(&request.f, request.x, deltas) {
                        Ok(exact) => {
                            kac_mode = Some("exact".to_string());
                            exact.table.empirical.into_iter().map(Some).collect()
                        }
                        Err(Error::Kac(reason)) => {
                            notes.push(format!("kac: exact model unavailable ({reason}); using Monte Carlo"));
                            kac_mode = Some("monte-carlo".to_string());
                            kac_samples = Some(request.samples);
                            let cfg = MonteCarloConfig { threads: request.sieve.threads, ..MonteCarloConfig::new(request.samples, request.seed) };
                            kac_tail_mc(&request.f, request.x, deltas, &cfg)?.empirical.into_iter().map(Some).collect()
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            other => {
                let m = other.predictor().expect("predictor-backed method");
                match predictor.as_mut() {
                    Some(p) => {
                        let r = p.report(m, deltas)?;
                        for row in &r.rows {
                            if let Some(err) = &row.error {
                                notes.push(format!("{} at delta={}: {err}", other.column(), row.delta));
                            }
                        }
                        r.values()
                    }
                    None if m == Method::Normal => {
                        deltas.iter().map(|&d| Some(normal_tail(d))).collect()
                    }
                    None => {
                        notes.push(format!("{}: no declared limit", other.column()));
                        vec![None; deltas.len()]
                    }
                }
            }
        };
        predictions.push((method, column));
    }

    let mut columns = vec!["delta".to_string(), "empirical_f".to_string()];
    if empirical_g.is_some() {
        columns.push("empirical_g".into());
    }
    for (m, _) in &predictions {
        columns.push(format!("pred_{}", m.column()));
    }
    if empirical_g.is_some() {
        columns.push("ratio_fg".into());
    }
    for (m, _) in &predictions {
        columns.push(format!("ratio_{}", m.column()));
    }

    let rows = (0..deltas.len())
        .map(|i| {
            let ef = Some(empirical_f[i]);
            let eg = empirical_g.as_ref().map(|g| g[i]);
            let mut row = vec![Some(deltas[i]), ef];
            if let Some(eg) = eg {
                row.push(Some(eg));
            }
            row.extend(predictions.iter().map(|(_, col)| col[i]));
            if let Some(eg) = eg {
                row.push(ratio(ef, Some(eg)));
            }
            row.extend(predictions.iter().map(|(_, col)| ratio(ef, col[i])));
            row
        })
        .collect();

    let metadata = ReportMetadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        f: request.f.name().to_string(),
        f_fingerprint: fingerprint(&request.f),
        g: request.g.as_ref().map(|g| g.name().to_string()),
        g_fingerprint: request.g.as_ref().map(fingerprint),
        x: request.x,
        loglog_x: horizon.loglog(),
        mu: moments.mu,
        sigma: moments.sigma(),
        sigma_psi: predictor.as_ref().map(|p| p.sigma_psi()),
        methods,
        seed: request.seed,
        kac_mode,
        kac_samples,
        poisson_threshold: POISSON_NOTE.to_string(),
        notes,
    };
    Ok(ComparisonReport { metadata, columns, rows })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ComparisonReport {
    /// CSV with `#` comment lines for the metadata that affects interpretation.
    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = format!("# f={} x={} mu={} sigma={}\n", m.f, m.x, m.mu, m.sigma);
        if self.columns.iter().any(|c| c == "pred_poisson") {
            out.push_str(&format!("# pred_poisson = {POISSON_NOTE}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| cell(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Domain(format!("JSON encoding failed: {e}")))
    }

    /// Column by name.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// `P(Poisson(L) >= ceil(L + delta sqrt(L)))` with `L = ln ln x`, `x >= 16`.
pub fn poisson_reference_row(x: f64, delta: f64) -> Result<f64> {
    Ok(poisson_reference(Horizon::from_x(x)?, delta))
}

/// A run described by `key=value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub function: String,
    pub compare_with: Option<String>,
    pub x: u64,
    pub deltas: Vec<f64>,
    pub methods: Vec<ReportMethod>,
    pub seed: u64,
    pub samples: u64,
    pub out: Option<String>,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Keys: `function`, `x`, `deltas` (required); `g`, `methods`, `seed`, `samples`,
    /// `out`, `threads` (optional). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key=value, got '{line}'") })?;
            let key = k.trim().to_string();
            if map.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Parse { line: i + 1, message: format!("duplicate key '{key}'") });
            }
        }
        const KNOWN: [&str; 9] = ["function", "g", "x", "deltas", "methods", "seed", "samples", "out", "threads"];
        if let Some((k, (line, _))) = map.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Parse { line: *line, message: format!("unknown key '{k}'") });
        }
        let required = |k: &str| {
            map.get(k)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::Parse { line: 0, message: format!("missing required key '{k}'") })
        };
        let optional = |k: &str| map.get(k).map(|(_, v)| v.clone());
        let methods = match optional("methods") {
            Some(list) => list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?,
            None => vec![ReportMethod::Normal, ReportMethod::Saddle, ReportMethod::Kac, ReportMethod::Poisson],
        };
        Ok(Self {
            function: required("function")?,
            compare_with: optional("g"),
            x: parse_count(&required("x")?)?,
            deltas: parse_grid(&required("deltas")?)?,
            methods,
            seed: optional("seed").map(|s| parse_count(&s)).transpose()?.unwrap_or(42),
            samples: optional("samples").map(|s| parse_count(&s)).transpose()?.unwrap_or(100_000),
            out: optional("out"),
            threads: optional("threads").map(|s| parse_count(&s).map(|n| n as usize)).transpose()?,
        })
    }

    /// Resolves function names (table paths relative to `base`) into a request.
    pub fn to_request(&self, base: Option<&Path>) -> Result<ReportRequest> {
        let mut request = ReportRequest::new(
            resolve_function(&self.function, base)?,
            self.x,
            self.deltas.clone(),
            self.methods.clone(),
        );
        request.g = self.compare_with.as_deref().map(|g| resolve_function(g, base)).transpose()?;
        request.seed = self.seed;
        request.samples = self.samples;
        request.sieve.threads = self.threads;
        Ok(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_names() {
        assert_eq!(resolve_function("ω", None).unwrap(), AdditiveFunctionSpec::omega());
        assert_eq!(resolve_function("omega-star", None).unwrap(), AdditiveFunctionSpec::omega_star());
        let f = resolve_function("frac:golden", None).unwrap();
        assert!((f.prime_value(2) - 0.236_067_977_499_789_8).abs() < 1e-12);
        assert!(resolve_function("frac:1/0", None).is_err());
        assert!(resolve_function("bogus", None).is_err());
        assert!(resolve_function("table:/nonexistent/file.txt", None).is_err());
    }

    #[test]
    fn counts_and_ratios() {
        assert_eq!(parse_count("1e8").unwrap(), 100_000_000);
        assert_eq!(parse_count("123").unwrap(), 123);
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_ratio("1/2").unwrap(), Ratio::new(1, 2));
        assert_eq!(parse_ratio("3").unwrap(), Ratio::from_integer(3));
        assert!(parse_ratio("1/0").is_err());
    }

    #[test]
    fn poisson_row_examples() {
        let e = std::f64::consts::E;
        // ln ln x = 4 at x = e^(e^4)
        let x = 4f64.exp().exp();
        assert!((poisson_reference_row(x, 2.0).unwrap() - crate::special::poisson_tail(4.0, 8)).abs() < 1e-15);
        assert_eq!(poisson_reference_row(1e6, -10.0 * 1e6f64.ln().ln()).unwrap(), 1.0);
        let h = Horizon::from_loglog(1.0).unwrap();
        assert!((poisson_reference(h, 1.0) - (1.0 - 2.0 / e)).abs() < 1e-14);
        assert!(poisson_reference_row(10.0, 1.0).is_err());
    }

    #[test]
    fn empty_grid_keeps_metadata() {
        let req = ReportRequest::new(AdditiveFunctionSpec::omega(), 10_000, vec![], vec![ReportMethod::Normal, ReportMethod::Kac]);
        let r = build_comparison(&req).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.columns, ["delta", "empirical_f", "pred_normal", "pred_kac", "ratio_normal", "ratio_kac"]);
        assert_eq!(r.metadata.x, 10_000);
        assert_eq!(r.metadata.f_fingerprint.len(), 64);
        assert!(r.metadata.mu > 0.0);
    }

    #[test]
    fn comparison_rows_and_ratios() {
        let mut req = ReportRequest::new(
            AdditiveFunctionSpec::omega(),
            100_000,
            vec![0.0, 1.0, 2.0],
            vec![ReportMethod::Poisson, ReportMethod::Normal, ReportMethod::Kac, ReportMethod::Saddle],
        );
        req.g = Some(AdditiveFunctionSpec::omega_star());
        let r = build_comparison(&req).unwrap();
        assert_eq!(
            r.columns,
            [
                "delta", "empirical_f", "empirical_g", "pred_normal", "pred_theorem5", "pred_kac", "pred_poisson",
                "ratio_fg", "ratio_normal", "ratio_theorem5", "ratio_kac", "ratio_poisson"
            ]
        );
        let t5 = r.column("pred_theorem5").unwrap();
        assert_eq!(t5[0], None);
        assert!(t5[1].is_some());
        assert!(r.metadata.notes.iter().any(|n| n.starts_with("theorem5 at delta=0")));
        assert_eq!(r.metadata.kac_mode.as_deref(), Some("exact"));
        let ef = r.column("empirical_f").unwrap();
        let rk = r.column("ratio_kac").unwrap();
        let pk = r.column("pred_kac").unwrap();
        assert_eq!(rk[0], Some(ef[0].unwrap() / pk[0].unwrap()));
        let csv = r.to_csv();
        assert!(csv.contains("# pred_poisson = P(Poisson(L) >= ceil("));
        assert_eq!(csv, build_comparison(&req).unwrap().to_csv());
        assert!(r.to_json().unwrap().contains("\"f_fingerprint\""));
    }

    #[test]
    fn mc_fallback_for_irrational_values() {
        let mut req = ReportRequest::new(
            resolve_function("frac:golden", None).unwrap(),
            10_000,
            vec![0.0, 1.0],
            vec![ReportMethod::Kac],
        );
        req.samples = 5000;
        let r = build_comparison(&req).unwrap();
        assert_eq!(r.metadata.kac_mode.as_deref(), Some("monte-carlo"));
        assert_eq!(r.metadata.kac_samples, Some(5000));
    }

    #[test]
    fn run_config_parsing() {
        let cfg = RunConfig::parse(
            "# run\nfunction = omega\nx = 1e5\ndeltas = 0:2:0.5\nmethods = normal,kac,poisson\nseed=7\nout=report.csv\n",
        )
        .unwrap();
        assert_eq!(cfg.x, 100_000);
        assert_eq!(cfg.deltas, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(cfg.methods, vec![ReportMethod::Normal, ReportMethod::Kac, ReportMethod::Poisson]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.out.as_deref(), Some("report.csv"));
        assert!(RunConfig::parse("function=omega\nx=10\n").is_err());
        assert!(RunConfig::parse("function=omega\nx=100\ndeltas=0:1:1\ncolour=red\n").is_err());
        assert!(RunConfig::parse("function=omega\nfunction=omega\n").is_err());
        assert!(RunConfig::parse("nonsense\n").is_err());
    }
}
