//! Distribution of `g(p)` over the primes `p <= P` and the empirical side of
//! class membership: boundedness, Kolmogorov distance to the declared limit,
//! and the moment conditions.

use serde::Serialize;

use crate::afspec::{AdditiveFunctionSpec, LimitDistribution, MomentCheck};
use crate::error::{Error, Result};
use crate::numeric::least_squares;
use crate::primes::for_each_prime;

/// A distribution function that can be compared in sup-norm.
pub trait Cdf {
    /// Right-continuous value at `t`.
    fn cdf(&self, t: f64) -> f64;
    /// Left limit at `t`.
    fn cdf_left(&self, t: f64) -> f64;
    /// Points where the function jumps or changes slope; between consecutive
    /// breakpoints it must be affine.
    fn breakpoints(&self) -> Vec<f64>;
}

impl Cdf for LimitDistribution {
    fn cdf(&self, t: f64) -> f64 {
        LimitDistribution::cdf(self, t)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        LimitDistribution::cdf_left(self, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        LimitDistribution::breakpoints(self)
    }
}

/// Empirical distribution function with equal weight on each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    sorted: Vec<f64>,
}

impl StepCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Total mass: 1 for a non-empty sample.
    pub fn total_mass(&self) -> f64 {
        self.cdf(f64::INFINITY)
    }

    /// `(t, cdf(t))` at each distinct sample value.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let c = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = c,
                _ => out.push((v, c)),
            }
        }
        out
    }

    /// `t,cdf` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,cdf\n");
        for (t, c) in self.steps() {
            out.push_str(&format!("{t},{c}\n"));
        }
        out
    }
}

impl Cdf for StepCdf {
    fn cdf(&self, t: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= t) as f64 / self.sorted.len() as f64
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v < t) as f64 / self.sorted.len() as f64
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = self.sorted.clone();
        pts.dedup();
        pts
    }
}

/// `t -> (1/pi(P)) #{p <= P : g(p) <= t}`.
pub fn empirical_prime_distribution(spec: &AdditiveFunctionSpec, prime_limit: u64) -> Result<StepCdf> {
    if prime_limit < 2 {
        return Err(Error::Domain(format!("prime limit must be at least 2, got {prime_limit}")));
    }
    let mut values = Vec::new();
    for_each_prime(prime_limit, |p| values.push(spec.prime_value(p)));
    Ok(StepCdf::from_samples(values))
}

/// `sup_t |A(t) - B(t)|`, attained at a breakpoint of either function (from the
/// left or the right) because the difference is affine in between.
pub fn ks_distance(a: &dyn Cdf, b: &dyn Cdf) -> f64 {
    let mut pts = a.breakpoints();
    pts.extend(b.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.iter()
        .map(|&t| {
            let right = (a.cdf(t) - b.cdf(t)).abs();
            let left = (a.cdf_left(t) - b.cdf_left(t)).abs();
            right.max(left)
        })
        .fold(0.0, f64::max)
        .min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsPoint {
    pub prime_limit: u64,
    pub prime_count: u64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCReport {
    pub bound: f64,
    /// `|g(p)| <= bound` for every `p <= max(grid)`.
    pub bound_ok: bool,
    /// Largest `|g(p)|` seen.
    pub max_abs_value: f64,
    pub ks: Vec<KsPoint>,
    /// Least-squares slope of `ln KS` against `ln ln P` over the grid points with
    /// `KS > 0`; `-slope` estimates the exponent in `KS ~ (log P)^(-eps)`.
    pub decay_slope: Option<f64>,
    pub moments: MomentCheck,
}

impl ClassCReport {
    pub fn moments_ok(&self) -> bool {
        self.moments.passed()
    }
}

/// Moment orders checked for nonnegativity.
pub const CLASS_C_MOMENT_ORDER: u32 = 8;

pub fn verify_class_c(spec: &AdditiveFunctionSpec, grid: &[u64]) -> Result<ClassCReport> {
    let limit = spec.require_limit()?;
    let top = grid.iter().copied().max().unwrap_or(2).max(2);
    let mut values = Vec::new();
    for_each_prime(top, |p| values.push((p, spec.prime_value(p))));
    let max_abs_value = values.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut ks = Vec::with_capacity(grid.len());
    for &limit_p in grid {
        let samples: Vec<f64> =
            values.iter().take_while(|(p, _)| *p <= limit_p).map(|&(_, v)| v).collect();
        let prime_count = samples.len() as u64;
        let step = StepCdf::from_samples(samples);
        ks.push(KsPoint { prime_limit: limit_p, prime_count, ks: ks_distance(&step, limit) });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = ks
        .iter()
        .filter(|k| k.ks > 0.0 && k.prime_limit >= 3)
        .map(|k| ((k.prime_limit as f64).ln().ln(), k.ks.ln()))
        .unzip();
    Ok(ClassCReport {
        bound: spec.bound(),
        bound_ok: max_abs_value <= spec.bound() * (1.0 + 1e-12),
        max_abs_value,
        ks,
        decay_slope: least_squares(&xs, &ys).map(|(_, slope)| slope),
        moments: limit.check_moments(CLASS_C_MOMENT_ORDER),
    })
}
