//! Bulk evaluation of `f(n)` for all `n <= x`, the Kac-model moments
//! `mu(f; x)` and `sigma^2(f; x)`, and the statistics derived from them.
//!
//! Values come from a segmented factorization sieve: every segment starts from
//! `rem[n] = n`, divides out the primes up to `sqrt(x)` in increasing order while
//! adding their `g(p)`, and finally adds `g(rem[n])` when a single large prime
//! remains. Each `n` therefore receives its prime contributions in increasing
//! order of `p` whatever the segment size, which makes the output bit-identical
//! across segmentations and thread counts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::afspec::AdditiveFunctionSpec;
use crate::error::{Error, Result};
use crate::numeric::{check_ascending, CompensatedSum};
use crate::primes::{for_each_prime, isqrt, primes_up_to};

/// Largest supported sieve limit.
pub const MAX_X: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    pub segment_size: usize,
    /// Maximum number of stored values; larger requests fail with [`Error::Capacity`].
    pub max_entries: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self { segment_size: 1 << 18, max_entries: 200_000_000, threads: None }
    }
}

/// Kac-model mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelMoments {
    pub mu: f64,
    pub sigma2: f64,
}

impl ModelMoments {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// `mu = sum_{p <= x} g(p)/p` and `sigma^2 = sum_{p <= x} g(p)^2/p (1 - 1/p)`.
pub fn model_moments(spec: &AdditiveFunctionSpec, x: u64) -> ModelMoments {
    let mut mu = CompensatedSum::new();
    let mut sigma2 = CompensatedSum::new();
    for_each_prime(x, |p| {
        let g = spec.prime_value(p);
        let inv = 1.0 / p as f64;
        mu.add(g * inv);
        sigma2.add(g * g * inv * (1.0 - inv));
    });
    ModelMoments { mu: mu.value(), sigma2: sigma2.value() }
}

#[derive(Debug, Clone)]
pub struct SieveResult {
    x: u64,
    /// `values[n]` for `0 <= n <= x`; `values[0]` is unused and zero.
    values: Vec<f64>,
    moments: ModelMoments,
}

impl SieveResult {
    pub fn x(&self) -> u64 {
        self.x
    }

    /// `f(n)` for `1 <= n <= x`.
    pub fn value(&self, n: u64) -> f64 {
        self.values[n as usize]
    }

    /// `f(1), ..., f(x)`.
    pub fn values(&self) -> &[f64] {
        &self.values[1..]
    }

    pub fn mu(&self) -> f64 {
        self.moments.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.moments.sigma2
    }

    pub fn moments(&self) -> ModelMoments {
        self.moments
    }

    fn sigma_checked(&self) -> Result<f64> {
        if self.moments.sigma2 <= 0.0 {
            return Err(Error::Degenerate(format!(
                "sigma^2 = {} at x = {}",
                self.moments.sigma2, self.x
            )));
        }
        Ok(self.moments.sigma2.sqrt())
    }

    /// Standardized value `(f(n) - mu) / sigma`.
    pub fn standardized(&self, n: u64) -> Result<f64> {
        Ok((self.value(n) - self.mu()) / self.sigma_checked()?)
    }
}

struct SegmentSieve<'a> {
    spec: &'a AdditiveFunctionSpec,
    base_primes: Vec<u32>,
    base_values: Vec<f64>,
}

impl<'a> SegmentSieve<'a> {
    fn new(spec: &'a AdditiveFunctionSpec, x: u64) -> Self {
        let base_primes: Vec<u32> = primes_up_to(isqrt(x)).into_iter().map(|p| p as u32).collect();
        let base_values = base_primes.iter().map(|&p| spec.prime_value(p as u64)).collect();
        Self { spec, base_primes, base_values }
    }

    /// Fills `out[i] = f(lo + i)`; `rem` is scratch of the same length.
    fn fill(&self, lo: u64, out: &mut [f64], rem: &mut Vec<u32>) {
        let hi = lo + out.len() as u64;
        rem.clear();
        rem.extend((lo..hi).map(|n| n as u32));
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&p, &g) in self.base_primes.iter().zip(&self.base_values) {
            let p64 = p as u64;
            if p64 * p64 >= hi {
                break;
            }
            let start = lo.div_ceil(p64) * p64;
            let mut idx = (start - lo) as usize;
            while idx < out.len() {
                out[idx] += g;
                let r = &mut rem[idx];
                *r /= p;
                while (*r).is_multiple_of(p) {
                    *r /= p;
                }
                idx += p as usize;
            }
        }
        for (v, &r) in out.iter_mut().zip(rem.iter()) {
            if r > 1 {
                *v += self.spec.prime_value(r as u64);
            }
        }
    }
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(job),
        None => job(),
    }
}

fn check_limit(x: u64, cfg: &SieveConfig) -> Result<()> {
    if x < 2 {
        return Err(Error::Domain(format!("sieve limit must be at least 2, got {x}")));
    }
    if x > MAX_X {
        return Err(Error::Capacity { requested: x, capacity: MAX_X });
    }
    if cfg.segment_size == 0 {
        return Err(Error::Domain("segment size must be positive".into()));
    }
    Ok(())
}

/// Sieves `f(n)` for every `n <= x` and stores the values.
pub fn sieve_values(spec: &AdditiveFunctionSpec, x: u64, cfg: &SieveConfig) -> Result<SieveResult> {
    check_limit(x, cfg)?;
    if x > cfg.max_entries {
        return Err(Error::Capacity { requested: x, capacity: cfg.max_entries });
    }
    let sieve = SegmentSieve::new(spec, x);
    let mut values = vec![0.0; x as usize + 1];
    let seg = cfg.segment_size;
    with_pool(cfg.threads, || {
        values[1..].par_chunks_mut(seg).enumerate().for_each_init(Vec::new, |rem, (i, chunk)| {
            sieve.fill(1 + (i * seg) as u64, chunk, rem);
        });
    });
    Ok(SieveResult { x, values, moments: model_moments(spec, x) })
}

/// Sieves segment by segment without storing values, returning `per_segment`
/// applied to each `(first n, values)` block, in segment order.
pub fn map_segments<T, F>(spec: &AdditiveFunctionSpec, x: u64, cfg: &SieveConfig, per_segment: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &[f64]) -> T + Sync,
{
    check_limit(x, cfg)?;
    let sieve = SegmentSieve::new(spec, x);
    let seg = cfg.segment_size as u64;
    let count = x.div_ceil(seg);
    Ok(with_pool(cfg.threads, || {
        (0..count)
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(rem, buf), i| {
                    let lo = 1 + i * seg;
                    let len = seg.min(x + 1 - lo) as usize;
                    buf.resize(len, 0.0);
                    sieve.fill(lo, buf, rem);
                    per_segment(lo, buf)
                },
            )
            .collect()
    }))
}

/// Tail frequencies with optional prediction columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTable {
    pub deltas: Vec<f64>,
    pub empirical: Vec<f64>,
    /// Binomial standard errors, present for Monte Carlo estimates.
    pub standard_errors: Option<Vec<f64>>,
    pub predictions: BTreeMap<String, Vec<Option<f64>>>,
}

impl TailTable {
    pub fn new(deltas: Vec<f64>, empirical: Vec<f64>) -> Self {
        Self { deltas, empirical, standard_errors: None, predictions: BTreeMap::new() }
    }

    /// Adds a prediction column, one entry per delta.
    pub fn with_prediction(mut self, method: impl Into<String>, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != self.deltas.len() {
            return Err(Error::Grid(format!(
                "prediction has {} rows, table has {}",
                values.len(),
                self.deltas.len()
            )));
        }
        self.predictions.insert(method.into(), values);
        Ok(self)
    }

    /// `delta,empirical` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,empirical\n");
        for (d, e) in self.deltas.iter().zip(&self.empirical) {
            out.push_str(&format!("{d},{e}\n"));
        }
        out
    }
}

/// Counts, for standardized values `z`, how many thresholds `deltas[j] <= z` hold,
/// accumulating into `hist[k]` = number of `z` with exactly `k` satisfied thresholds.
fn bin_standardized(z: f64, deltas: &[f64], hist: &mut [u64]) {
    let k = deltas.partition_point(|&d| d <= z);
    hist[k] += 1;
}

fn tail_from_hist(hist: &[u64], total: u64) -> Vec<f64> {
    // #{z >= deltas[j]} = sum_{k > j} hist[k]
    let m = hist.len() - 1;
    let mut out = vec![0.0; m];
    let mut acc = 0u64;
    for j in (0..m).rev() {
        acc += hist[j + 1];
        out[j] = acc as f64 / total as f64;
    }
    out
}

/// `D_f(x; delta) = (1/x) #{n <= x : (f(n) - mu)/sigma >= delta}` for each delta.
pub fn empirical_tail(result: &SieveResult, deltas: &[f64]) -> Result<TailTable> {
    check_ascending(deltas)?;
    let sigma = result.sigma_checked()?;
    let mu = result.mu();
    let mut hist = vec![0u64; deltas.len() + 1];
    for &v in result.values() {
        bin_standardized((v - mu) / sigma, deltas, &mut hist);
    }
    Ok(TailTable::new(deltas.to_vec(), tail_from_hist(&hist, result.x())))
}

/// [`empirical_tail`] without materializing the value array.
pub fn empirical_tail_streaming(
    spec: &AdditiveFunctionSpec,
    x: u64,
    deltas: &[f64],
    cfg: &SieveConfig,
) -> Result<(TailTable, ModelMoments)> {
    check_ascending(deltas)?;
    let moments = model_moments(spec, x);
    if moments.sigma2 <= 0.0 {
        return Err(Error::Degenerate(format!("sigma^2 = {} at x = {x}", moments.sigma2)));
    }
    let (mu, sigma) = (moments.mu, moments.sigma());
    let parts = map_segments(spec, x, cfg, |_, vals| {
        let mut hist = vec![0u64; deltas.len() + 1];
        for &v in vals {
            bin_standardized((v - mu) / sigma, deltas, &mut hist);
        }
        hist
    })?;
    let mut hist = vec![0u64; deltas.len() + 1];
    for part in parts {
        hist.iter_mut().zip(part).for_each(|(h, c)| *h += c);
    }
    Ok((TailTable::new(deltas.to_vec(), tail_from_hist(&hist, x)), moments))
}

/// Frequency table of the values `f(n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueCounts {
    /// `None` when every value is an integer (keys are the values themselves);
    /// otherwise keys are bin indices `floor(value / width)`.
    pub bin_width: Option<f64>,
    pub counts: BTreeMap<i64, u64>,
}

impl ValueCounts {
    pub fn get(&self, key: i64) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }
}

/// Exact counts `pi_k(x) = #{n <= x : f(n) = k}` when `f` is integer-valued within
/// `1e-9`; otherwise a histogram with bins of width `bin_width`.
pub fn count_by_value(result: &SieveResult, bin_width: f64) -> Result<ValueCounts> {
    let integral = result.values().iter().all(|v| (v - v.round()).abs() <= 1e-9);
    let mut counts = BTreeMap::new();
    if integral {
        for &v in result.values() {
            *counts.entry(v.round() as i64).or_insert(0) += 1;
        }
        return Ok(ValueCounts { bin_width: None, counts });
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Domain(format!("bin width must be positive, got {bin_width}")));
    }
    for &v in result.values() {
        *counts.entry((v / bin_width).floor() as i64).or_insert(0) += 1;
    }
    Ok(ValueCounts { bin_width: Some(bin_width), counts })
}

/// `sum exp(v f(n))`, carried in log form so huge sums do not overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMoment {
    /// Natural log of the sum; `-inf` for an empty window.
    pub log_value: f64,
    /// Number of terms summed.
    pub terms: u64,
}

impl ExpMoment {
    /// The sum itself; `inf` if it exceeds the `f64` range.
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Above this `v * max f(n)` the sum is accumulated relative to `exp(v max f)`.
const LOG_SUM_THRESHOLD: f64 = 500.0;

/// `sum_{n <= x} exp(v f(n))`, optionally restricted to the standardized window
/// `lo <= (f(n) - mu)/sigma <= hi`.
pub fn exp_moment_direct(result: &SieveResult, v: f64, window: Option<(f64, f64)>) -> Result<ExpMoment> {
    if !(v.abs() <= 2.0) {
        return Err(Error::Domain(format!("exp moment needs |v| <= 2, got {v}")));
    }
    let filter: Box<dyn Fn(f64) -> bool> = match window {
        None => Box::new(|_| true),
        Some((lo, hi)) => {
            let sigma = result.sigma_checked()?;
            let mu = result.mu();
            Box::new(move |f| {
                let z = (f - mu) / sigma;
                lo <= z && z <= hi
            })
        }
    };
    let peak = result
        .values()
        .iter()
        .copied()
        .filter(|&f| filter(f))
        .map(|f| v * f)
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Ok(ExpMoment { log_value: f64::NEG_INFINITY, terms: 0 });
    }
    let shift = if peak > LOG_SUM_THRESHOLD { peak } else { 0.0 };
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    for &f in result.values() {
        if filter(f) {
            acc.add((v * f - shift).exp());
            terms += 1;
        }
    }
    Ok(ExpMoment { log_value: shift + acc.value().ln(), terms })
}
