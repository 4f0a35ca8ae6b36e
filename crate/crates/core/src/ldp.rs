//! Tail predictors for standardized additive functions and the comparator that
//! decides how far two functions share the same large-deviation profile.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::afspec::{AdditiveFunctionSpec, LimitDistribution};
use crate::error::{Error, Result};
use crate::primedist::{ks_distance, verify_class_c};
use crate::primes::for_each_prime;
use crate::series::{CramerSeries, DEFAULT_ORDER};
use crate::sieve::{empirical_tail_streaming, SieveConfig};
use crate::special::{ln_gamma, normal_tail, poisson_tail, scaled_normal_tail};

/// Upper end of the bracket searched for the saddle point.
pub const SADDLE_LIMIT: f64 = 50.0;

/// The scale `x`, stored as `ln x` so that astronomically large `x` are usable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Horizon {
    log_x: f64,
}

impl Horizon {
    pub fn from_x(x: f64) -> Result<Self> {
        if !(x >= 16.0) || x.is_infinite() {
            return Err(Error::Domain(format!("x must be a finite number >= 16, got {x}")));
        }
        Ok(Self { log_x: x.ln() })
    }

    /// Horizon with `ln ln x = loglog`.
    pub fn from_loglog(loglog: f64) -> Result<Self> {
        if !(loglog > 0.0) || !loglog.is_finite() {
            return Err(Error::Domain(format!("ln ln x must be positive, got {loglog}")));
        }
        Ok(Self { log_x: loglog.exp() })
    }

    pub fn log_x(&self) -> f64 {
        self.log_x
    }

    pub fn loglog(&self) -> f64 {
        self.log_x.ln()
    }

    /// `x` itself; infinite when it exceeds the `f64` range.
    pub fn x(&self) -> f64 {
        self.log_x.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Saddle {
    pub v: f64,
    /// `(L'(v) - L'(0)) ln ln x - delta sqrt(m_2 ln ln x)`.
    pub residual: f64,
    /// `|L'(0)| ln ln x + delta sqrt(m_2 ln ln x)`.
    pub scale: f64,
}

fn positive_second_moment(psi: &LimitDistribution) -> Result<f64> {
    let m2 = psi.moment(2);
    if m2 > 0.0 {
        Ok(m2)
    } else {
        Err(Error::Degenerate(format!("second moment must be positive, got {m2}")))
    }
}

/// Solves `L'(v) ln ln x = L'(0) ln ln x + delta sqrt(m_2 ln ln x)` for `v >= 0`,
/// where `L` is the Laplace transform of `psi`.
pub fn solve_saddle(psi: &LimitDistribution, horizon: Horizon, delta: f64) -> Result<Saddle> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be finite and >= 0, got {delta}")));
    }
    let m2 = positive_second_moment(psi)?;
    let ll = horizon.loglog();
    let m1 = psi.moment(1);
    let shift = delta * (m2 / ll).sqrt();
    let scale = m1.abs() * ll + delta * (m2 * ll).sqrt();
    let residual = |v: f64| (psi.laplace(v, 1) - m1) * ll - delta * (m2 * ll).sqrt();
    if delta == 0.0 {
        return Ok(Saddle { v: 0.0, residual: 0.0, scale });
    }
    let f = |v: f64| psi.laplace(v, 1) - m1 - shift;
    if !(f(SADDLE_LIMIT) >= 0.0) {
        return Err(Error::SaddleRange { delta, limit: SADDLE_LIMIT });
    }
    let tol = 1e-14 * (m1.abs() + shift);
    let (mut lo, mut hi) = (0.0, SADDLE_LIMIT);
    let mut v = (shift / m2).min(SADDLE_LIMIT);
    for _ in 0..400 {
        let fv = f(v);
        if fv.abs() <= tol {
            break;
        }
        if fv < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let next = v - fv / psi.laplace(v, 2);
        v = if next > lo && next < hi && next.is_finite() { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(Saddle { v, residual: residual(v), scale })
}

/// `A(v) = L(v) - 1 - v L'(v)`.
pub fn saddle_exponent(psi: &LimitDistribution, v: f64) -> f64 {
    psi.laplace_minus_one(v) - v * psi.laplace(v, 1)
}

/// Prediction methods for the tail frequency at standardized level `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Standard normal tail.
    Normal,
    /// `F(delta) (ln x)^A(v)` with the exact saddle point.
    #[serde(rename = "theorem5")]
    Saddle,
    /// Normal tail corrected by the Cramér series.
    #[serde(rename = "hwang")]
    Cramer,
    /// Saddle-point outline `(ln x)^A(v) / (v sqrt(2 pi L''(v) ln ln x))`.
    Outline,
    /// Standardized Poisson tail with parameter `ln ln x`.
    Poisson,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Normal, Method::Saddle, Method::Cramer, Method::Outline, Method::Poisson];

    pub fn name(self) -> &'static str {
        match self {
            Method::Normal => "normal",
            Method::Saddle => "theorem5",
            Method::Cramer => "hwang",
            Method::Outline => "outline",
            Method::Poisson => "poisson",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Method::Normal),
            "theorem5" | "maciulis" => Ok(Method::Saddle),
            "hwang" => Ok(Method::Cramer),
            "outline" | "asympt-outline" => Ok(Method::Outline),
            "poisson" | "poisson-ref" => Ok(Method::Poisson),
            other => Err(Error::Domain(format!("unknown prediction method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictorConfig {
    /// Truncation order of the series behind the Cramér correction.
    pub series_order: usize,
    /// Largest `|delta / sigma_psi|` accepted by the Cramér-series predictor.
    pub cramer_window: f64,
    /// Smallest `delta` accepted by the exact-saddle predictor.
    pub saddle_floor: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self { series_order: DEFAULT_ORDER, cramer_window: 0.3, saddle_floor: 1.0 }
    }
}

/// One predicted tail value with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub value: f64,
    pub saddle: Option<Saddle>,
}

/// Tail predictors for a fixed limit distribution and horizon.
#[derive(Debug, Clone)]
pub struct Predictor {
    psi: LimitDistribution,
    horizon: Horizon,
    config: PredictorConfig,
    cramer: Option<CramerSeries>,
}

impl Predictor {
    pub fn new(psi: LimitDistribution, horizon: Horizon, config: PredictorConfig) -> Result<Self> {
        positive_second_moment(&psi)?;
        Ok(Self { psi, horizon, config, cramer: None })
    }

    pub fn for_spec(spec: &AdditiveFunctionSpec, horizon: Horizon, config: PredictorConfig) -> Result<Self> {
        Self::new(spec.require_limit()?.clone(), horizon, config)
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    /// `sigma_psi = sqrt(m_2 ln ln x)`.
    pub fn sigma_psi(&self) -> f64 {
        (self.psi.moment(2) * self.horizon.loglog()).sqrt()
    }

    fn cramer(&self) -> Result<&CramerSeries> {
        self.cramer.as_ref().ok_or(Error::Domain("Cramér series not prepared".into()))
    }

    /// Builds the Cramér series if it has not been built yet.
    pub fn prepare(&mut self) -> Result<()> {
        if self.cramer.is_none() {
            self.cramer = Some(CramerSeries::new(&self.psi, self.config.series_order)?);
        }
        Ok(())
    }

    pub fn predict(&self, method: Method, delta: f64) -> Result<Prediction> {
        let plain = |value| Ok(Prediction { value, saddle: None });
        match method {
            Method::Normal => plain(normal_tail(delta)),
            Method::Poisson => plain(poisson_reference(self.horizon, delta)),
            Method::Cramer => plain(self.cramer_tail(delta)?),
            Method::Saddle => self.saddle_tail(delta),
            Method::Outline => self.outline(delta),
        }
    }

    fn saddle_tail(&self, delta: f64) -> Result<Prediction> {
        if !(delta >= self.config.saddle_floor) {
            return Err(Error::OutOfRange {
                method: "theorem5",
                reason: format!("delta = {delta} is below the floor {}", self.config.saddle_floor),
            });
        }
        let saddle = solve_saddle(&self.psi, self.horizon, delta)?;
        let exponent = self.horizon.loglog() * saddle_exponent(&self.psi, saddle.v);
        Ok(Prediction { value: scaled_normal_tail(delta) * exponent.exp(), saddle: Some(saddle) })
    }

    fn cramer_tail(&self, delta: f64) -> Result<f64> {
        let xi = delta / self.sigma_psi();
        if !(xi.abs() <= self.config.cramer_window) {
            return Err(Error::OutOfRange {
                method: "hwang",
                reason: format!(
                    "|delta / sigma_psi| = {:.4} exceeds the series window {}; use theorem5 instead",
                    xi.abs(),
                    self.config.cramer_window
                ),
            });
        }
        let q = self.cramer()?.eval(xi);
        Ok(normal_tail(delta) * (self.horizon.loglog() * q).exp())
    }

    fn outline(&self, delta: f64) -> Result<Prediction> {
        let ll = self.horizon.loglog();
        if !(delta >= ll.sqrt()) {
            return Err(Error::OutOfRange {
                method: "outline",
                reason: format!("delta = {delta} is below sqrt(ln ln x) = {:.4}", ll.sqrt()),
            });
        }
        let saddle = solve_saddle(&self.psi, self.horizon, delta)?;
        let v = saddle.v;
        let denom = v * (2.0 * std::f64::consts::PI * self.psi.laplace(v, 2) * ll).sqrt();
        let value = (ll * saddle_exponent(&self.psi, v)).exp() / denom;
        Ok(Prediction { value, saddle: Some(saddle) })
    }

    /// Predictions over a grid; per-point failures are kept as messages.
    pub fn report(&mut self, method: Method, deltas: &[f64]) -> Result<PredictionReport> {
        if method == Method::Cramer {
            self.prepare()?;
        }
        let this = &*self;
        let rows = deltas
            .par_iter()
            .map(|&delta| match this.predict(method, delta) {
                Ok(p) => PredictionRow {
                    delta,
                    value: Some(p.value),
                    saddle: p.saddle.map(|s| s.v),
                    residual: p.saddle.map(|s| s.residual),
                    error: None,
                },
                Err(e) => PredictionRow { delta, value: None, saddle: None, residual: None, error: Some(e.to_string()) },
            })
            .collect();
        Ok(PredictionReport {
            method,
            log_x: self.horizon.log_x(),
            loglog_x: self.horizon.loglog(),
            sigma_psi: self.sigma_psi(),
            series_order: (method == Method::Cramer).then_some(self.config.series_order),
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub delta: f64,
    pub value: Option<f64>,
    pub saddle: Option<f64>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub method: Method,
    pub log_x: f64,
    pub loglog_x: f64,
    pub sigma_psi: f64,
    pub series_order: Option<usize>,
    pub rows: Vec<PredictionRow>,
}

impl PredictionReport {
    pub fn values(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.value).collect()
    }

    /// `delta,value,saddle,residual,error` CSV; missing entries are empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("delta,value,saddle,residual,error\n");
        for r in &self.rows {
            let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            out.push_str(&format!("{},{},{},{},{}\n", r.delta, opt(r.value), opt(r.saddle), opt(r.residual), err));
        }
        out
    }
}

pub fn predict_tail_saddle(psi: &LimitDistribution, horizon: Horizon, delta: f64) -> Result<f64> {
    Ok(Predictor::new(psi.clone(), horizon, PredictorConfig::default())?.saddle_tail(delta)?.value)
}

pub fn predict_tail_cramer(psi: &LimitDistribution, horizon: Horizon, delta: f64) -> Result<f64> {
    let mut p = Predictor::new(psi.clone(), horizon, PredictorConfig::default())?;
    p.prepare()?;
    p.cramer_tail(delta)
}

pub fn predict_tail_outline(psi: &LimitDistribution, horizon: Horizon, delta: f64) -> Result<f64> {
    Ok(Predictor::new(psi.clone(), horizon, PredictorConfig::default())?.outline(delta)?.value)
}

/// `P(Poisson(L) >= ceil(L + delta sqrt(L)))` with `L = ln ln x`.
pub fn poisson_reference(horizon: Horizon, delta: f64) -> f64 {
    let ll = horizon.loglog();
    let threshold = (ll + delta * ll.sqrt()).ceil();
    if threshold <= 0.0 {
        return 1.0;
    }
    poisson_tail(ll, threshold.min(i64::MAX as f64) as i64)
}

/// Landau's approximation `(x / ln x) (ln ln x)^(k-1) / (k-1)!` to the number of
/// `n <= x` with exactly `k >= 1` distinct prime factors.
pub fn landau_count(x: f64, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("Landau's approximation needs k >= 1".into()));
    }
    let h = Horizon::from_x(x)?;
    let ll = h.loglog();
    let km1 = (k - 1) as f64;
    Ok((h.log_x() + km1 * ll.ln() - ln_gamma(km1 + 1.0) - h.log_x().ln()).exp())
}

/// Ratio of the Poisson form `(ln ln x)^k / k!` to Landau's `(ln ln x)^(k-1) / (k-1)!`.
pub fn poisson_to_landau_ratio(horizon: Horizon, k: u32) -> f64 {
    horizon.loglog() / k as f64
}

/// `ceil((1 + alpha) / (1 - alpha))` for rational `1/3 < alpha < 1`.
pub fn varrho(alpha: Ratio<i64>) -> Result<u32> {
    let third = Ratio::new(1, 3);
    let one = Ratio::from_integer(1);
    if !(alpha > third && alpha < one) {
        return Err(Error::Domain(format!("alpha must lie in (1/3, 1), got {alpha}")));
    }
    let r = ((one + alpha) / (one - alpha)).ceil().to_integer();
    u32::try_from(r).map_err(|_| Error::Domain(format!("varrho({alpha}) = {r} is out of range")))
}

/// Largest comparison range consistent with the checks, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `1 <= delta <= o(sigma^(1/3))`: both tails are normal.
    Part1,
    /// `1 <= delta <= o(sigma^alpha)`: moments agree up to `varrho(alpha)`.
    Part2,
    /// `1 <= delta <= o(sigma)`: the limit distributions agree.
    Part3,
    /// `1 <= delta <= eps sigma`: the functions agree on every prime.
    Part4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: u32,
    pub f: f64,
    pub g: f64,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRatioRow {
    pub delta: f64,
    pub empirical_f: f64,
    pub empirical_g: f64,
    /// `empirical_f / empirical_g`, absent when the denominator is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareConfig {
    /// Prime range for the value-by-value check.
    pub prime_limit: u64,
    /// Relative tolerance for moments and prime values.
    pub tolerance: f64,
    pub sieve: SieveConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { prime_limit: 1_000_000, tolerance: 1e-9, sieve: SieveConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub f: String,
    pub g: String,
    pub x: u64,
    pub alpha: String,
    pub varrho: u32,
    /// Factor applied to `g` so both limits have the same second moment.
    pub g_scale: f64,
    /// Largest `k <= varrho` such that moments `3..=k` agree; 2 if the third differs.
    pub moments_match_upto: u32,
    pub moment_table: Vec<MomentRow>,
    pub limits_equal: bool,
    pub limits_ks: f64,
    pub primewise_equal: bool,
    pub primes_checked_up_to: u64,
    /// Smallest prime where the values differ.
    pub first_difference: Option<u64>,
    pub tail_ratio_table: Vec<TailRatioRow>,
    pub regime: Regime,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn ensure_class_c(spec: &AdditiveFunctionSpec, prime_limit: u64) -> Result<()> {
    let report = verify_class_c(spec, &[prime_limit.max(2)])?;
    if !report.bound_ok || !report.moments_ok() {
        return Err(Error::InvalidSpec(format!(
            "{} fails the admissibility checks (bounded: {}, moments: {})",
            spec.name(),
            report.bound_ok,
            report.moments_ok()
        )));
    }
    Ok(())
}

/// Compares `f` and `g` after rescaling `g` to the second moment of `f`.
pub fn compare_specs(
    f: &AdditiveFunctionSpec,
    g: &AdditiveFunctionSpec,
    x: u64,
    deltas: &[f64],
    alpha: Ratio<i64>,
    config: &CompareConfig,
) -> Result<Verdict> {
    let rho = varrho(alpha)?;
    ensure_class_c(f, config.prime_limit)?;
    ensure_class_c(g, config.prime_limit)?;
    let psi_f = f.require_limit()?;
    let m2f = positive_second_moment(psi_f)?;
    let m2g = positive_second_moment(g.require_limit()?)?;
    let g_scale = (m2f / m2g).sqrt();
    let g = if g_scale == 1.0 { g.clone() } else { g.scaled(g_scale)? };
    let psi_g = g.require_limit()?;

    let moment_table: Vec<MomentRow> = (3..=rho)
        .map(|k| {
            let (a, b) = (psi_f.moment(k), psi_g.moment(k));
            MomentRow { k, f: a, g: b, equal: close(a, b, config.tolerance) }
        })
        .collect();
    let moments_match_upto =
        moment_table.iter().take_while(|r| r.equal).last().map_or(2, |r| r.k);

    let limits_ks = ks_distance(psi_f, psi_g);
    let limits_equal = limits_ks <= 1e-12;

    let mut first_difference = None;
    for_each_prime(config.prime_limit, |p| {
        if first_difference.is_none() && !close(f.prime_value(p), g.prime_value(p), config.tolerance) {
            first_difference = Some(p);
        }
    });
    let primewise_equal = first_difference.is_none();

    let (tf, _) = empirical_tail_streaming(f, x, deltas, &config.sieve)?;
    let (tg, _) = empirical_tail_streaming(&g, x, deltas, &config.sieve)?;
    let tail_ratio_table = deltas
        .iter()
        .zip(tf.empirical.iter().zip(&tg.empirical))
        .map(|(&delta, (&a, &b))| TailRatioRow {
            delta,
            empirical_f: a,
            empirical_g: b,
            ratio: (b > 0.0).then(|| a / b),
        })
        .collect();

    let regime = if primewise_equal && limits_equal {
        Regime::Part4
    } else if limits_equal {
        Regime::Part3
    } else if moments_match_upto >= rho {
        Regime::Part2
    } else {
        Regime::Part1
    };
    Ok(Verdict {
        f: f.name().to_string(),
        g: g.name().to_string(),
        x,
        alpha: alpha.to_string(),
        varrho: rho,
        g_scale,
        moments_match_upto,
        moment_table,
        limits_equal,
        limits_ks,
        primewise_equal,
        primes_checked_up_to: config.prime_limit,
        first_difference,
        tail_ratio_table,
        regime,
    })
}
