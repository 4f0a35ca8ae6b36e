//! The independent model `S = sum_{p <= x} g(p) X_p`, `P(X_p = 1) = 1/p`: exact
//! tails by dynamic programming on a scaled integer lattice, and seeded Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::afspec::AdditiveFunctionSpec;
use crate::error::{Error, Result};
use crate::numeric::{check_ascending, CompensatedSum};
use crate::primes::primes_up_to;
use crate::sieve::{model_moments, ModelMoments, TailTable};

/// Largest `x` accepted by the exact model.
pub const MAX_EXACT_X: u64 = 100_000_000;
/// Largest `|g(p)|` accepted by the exact model.
pub const MAX_EXACT_VALUE: f64 = 8.0;
/// Largest denominator tried when scaling values to integers.
pub const MAX_DENOMINATOR: u32 = 8;
/// Bound required on the mass outside the lattice window.
pub const WINDOW_MASS_BOUND: f64 = 1e-15;

/// Distribution of `S` on the lattice `(offset + i) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeDistribution {
    pub scale: u32,
    pub offset: i64,
    pub probabilities: Vec<f64>,
}

impl LatticeDistribution {
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let d = self.scale as f64;
        self.probabilities.iter().enumerate().map(move |(i, &p)| ((self.offset + i as i64) as f64 / d, p))
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(v, p)| v * p).collect::<CompensatedSum>().value()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support().map(|(v, p)| (v - m) * (v - m) * p).collect::<CompensatedSum>().value()
    }

    /// `P(S = value)`, zero off the lattice.
    pub fn probability(&self, value: f64) -> f64 {
        let i = (value * self.scale as f64).round() as i64 - self.offset;
        usize::try_from(i).ok().and_then(|i| self.probabilities.get(i)).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KacExact {
    pub x: u64,
    pub moments: ModelMoments,
    pub distribution: LatticeDistribution,
    /// Half-width `B` of the window `[-B, B]` in value units.
    pub window: f64,
    /// Chernoff bound on `P(|S| > B)`.
    pub outside_bound: f64,
    /// Mass that left the window or fell below the underflow floor.
    pub dropped_mass: f64,
    pub table: TailTable,
}

/// Smallest `d <= MAX_DENOMINATOR` making every value an integer multiple of `1/d`.
fn common_denominator(values: &[f64]) -> Option<u32> {
    (1..=MAX_DENOMINATOR).find(|&d| {
        values.iter().all(|&g| {
            let s = g * d as f64;
            (s - s.round()).abs() <= 1e-9
        })
    })
}

/// `ln E exp(t S) = sum ln(1 + (e^(t g) - 1)/p)`.
fn log_mgf(primes: &[u64], values: &[f64], t: f64) -> f64 {
    primes
        .iter()
        .zip(values)
        .map(|(&p, &g)| ((t * g).exp_m1() / p as f64).ln_1p())
        .collect::<CompensatedSum>()
        .value()
}

/// Two-sided Chernoff bound for `P(S > b) + P(S < -b)` over a grid of `t`.
fn chernoff_outside(primes: &[u64], values: &[f64], b: f64) -> f64 {
    let ts: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
    let upper = ts.iter().map(|&t| log_mgf(primes, values, t) - t * b).fold(f64::INFINITY, f64::min);
    let lower = ts.iter().map(|&t| log_mgf(primes, values, -t) - t * b).fold(f64::INFINITY, f64::min);
    upper.exp() + lower.exp()
}

/// Entries below this are flushed to zero to keep the arithmetic out of subnormals.
const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Exact tail `P((S - mu)/sigma >= delta)` of the model with its own `mu`, `sigma`.
pub fn kac_tail_exact_integer(spec: &AdditiveFunctionSpec, x: u64, deltas: &[f64]) -> Result<KacExact> {
    check_ascending(deltas)?;
    if !(2..=MAX_EXACT_X).contains(&x) {
        return Err(Error::Kac(format!("x must lie in [2, {MAX_EXACT_X}], got {x}")));
    }
    let primes = primes_up_to(x);
    let values: Vec<f64> = primes.iter().map(|&p| spec.prime_value(p)).collect();
    if let Some((p, g)) = primes.iter().zip(&values).find(|(_, g)| g.abs() > MAX_EXACT_VALUE) {
        return Err(Error::Kac(format!("|g({p})| = {} exceeds {MAX_EXACT_VALUE}", g.abs())));
    }
    let scale = common_denominator(&values).ok_or_else(|| {
        Error::Kac(format!("values are not multiples of 1/d for any d <= {MAX_DENOMINATOR}"))
    })?;
    let moments = model_moments(spec, x);
    if moments.sigma2 <= 0.0 {
        return Err(Error::Degenerate(format!("model variance vanishes at x = {x}")));
    }
    let loglog = (x as f64).ln().max(1.0).ln().max(0.0);
    let window = 8.0 * (loglog + 10.0);
    let outside_bound = chernoff_outside(&primes, &values, window);
    if !(outside_bound < WINDOW_MASS_BOUND) {
        return Err(Error::Kac(format!(
            "window [-{window}, {window}] may miss mass up to {outside_bound:e}"
        )));
    }
    let half = (window * scale as f64).ceil() as i64;
    let width = (2 * half + 1) as usize;
    let mut probs = vec![0.0f64; width];
    let zero = half as usize;
    probs[zero] = 1.0;
    let (mut lo, mut hi) = (zero, zero);
    let mut dropped = 0.0;
    for (&p, &g) in primes.iter().zip(&values) {
        let step = (g * scale as f64).round() as i64;
        if step == 0 {
            continue;
        }
        let hit = 1.0 / p as f64;
        let miss = 1.0 - hit;
        let shift = step.unsigned_abs() as usize;
        if step > 0 {
            let edge = lo.max(width.saturating_sub(shift));
            if edge <= hi {
                dropped += probs[edge..=hi].iter().sum::<f64>() * hit;
            }
            let new_hi = (hi + shift).min(width - 1);
            for j in (lo..=new_hi).rev() {
                let stay = if j <= hi { probs[j] * miss } else { 0.0 };
                let moved = if j >= lo + shift && j - shift <= hi { probs[j - shift] * hit } else { 0.0 };
                probs[j] = stay + moved;
            }
            hi = new_hi;
        } else {
            if shift > lo {
                dropped += probs[lo..=hi.min(shift - 1)].iter().sum::<f64>() * hit;
            }
            let new_lo = lo.saturating_sub(shift);
            for j in new_lo..=hi {
                let stay = if j >= lo { probs[j] * miss } else { 0.0 };
                let moved = if j + shift <= hi && j + shift >= lo { probs[j + shift] * hit } else { 0.0 };
                probs[j] = stay + moved;
            }
            lo = new_lo;
        }
        while lo < hi && probs[lo] < UNDERFLOW_FLOOR {
            dropped += probs[lo];
            probs[lo] = 0.0;
            lo += 1;
        }
        while hi > lo && probs[hi] < UNDERFLOW_FLOOR {
            dropped += probs[hi];
            probs[hi] = 0.0;
            hi -= 1;
        }
    }
    let distribution = LatticeDistribution {
        scale,
        offset: lo as i64 - half,
        probabilities: probs[lo..=hi].to_vec(),
    };
    let dropped_mass = (1.0 - distribution.total_mass()).abs().max(dropped);
    let sigma = moments.sigma();
    let tails = deltas
        .iter()
        .map(|&delta| {
            distribution
                .support()
                .filter(|&(v, _)| (v - moments.mu) / sigma >= delta)
                .map(|(_, p)| p)
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    Ok(KacExact {
        x,
        moments,
        distribution,
        window,
        outside_bound,
        dropped_mass,
        table: TailTable::new(deltas.to_vec(), tails),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// One uniform per prime.
    PerPrime,
    /// Geometric skips over dyadic blocks of primes with thinning; same law,
    /// roughly `2 ln ln x` uniforms per sample plus one per block.
    GeometricSkip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub samples: u64,
    pub seed: u64,
    pub sampler: Sampler,
    pub threads: Option<usize>,
}

impl MonteCarloConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, sampler: Sampler::GeometricSkip, threads: None }
    }
}

/// Minimum number of Monte Carlo samples.
pub const MIN_SAMPLES: u64 = 1000;
const CHUNK: u64 = 1 << 14;

struct Model {
    primes: Vec<u64>,
    values: Vec<f64>,
    /// `(start, end, 1/p_start)` for dyadic blocks of primes.
    blocks: Vec<(usize, usize, f64)>,
}

impl Model {
    fn new(spec: &AdditiveFunctionSpec, x: u64) -> Self {
        let primes: Vec<u64> = primes_up_to(x);
        let values = primes.iter().map(|&p| spec.prime_value(p)).collect();
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < primes.len() {
            let top = primes[start].saturating_mul(2);
            let end = start + primes[start..].partition_point(|&p| p < top);
            blocks.push((start, end, 1.0 / primes[start] as f64));
            start = end;
        }
        Self { primes, values, blocks }
    }

    fn draw_per_prime(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut s = 0.0;
        for (&p, &g) in self.primes.iter().zip(&self.values) {
            if rng.random::<f64>() * (p as f64) < 1.0 {
                s += g;
            }
        }
        s
    }

    fn draw_skip(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut s = 0.0;
        for &(start, end, q) in &self.blocks {
            let mut i = start;
            if q >= 1.0 {
                // p = 1 cannot occur; kept for safety
                continue;
            }
            let log_miss = (-q).ln_1p();
            loop {
                let u = 1.0 - rng.random::<f64>();
                let skip = (u.ln() / log_miss).floor();
                if skip >= (end - i) as f64 {
                    break;
                }
                i += skip as usize;
                let p = self.primes[i] as f64;
                // accept with probability (1/p) / q
                if rng.random::<f64>() * p * q < 1.0 {
                    s += self.values[i];
                }
                i += 1;
                if i >= end {
                    break;
                }
            }
        }
        s
    }
}

/// Seeded Monte Carlo estimate of the standardized model tail with binomial standard
/// errors. Sample `i` uses ChaCha stream `i` under the given seed, so the result does
/// not depend on the thread count.
pub fn kac_tail_mc(spec: &AdditiveFunctionSpec, x: u64, deltas: &[f64], config: &MonteCarloConfig) -> Result<TailTable> {
    check_ascending(deltas)?;
    if config.samples < MIN_SAMPLES {
        return Err(Error::Kac(format!("need at least {MIN_SAMPLES} samples, got {}", config.samples)));
    }
    if x < 2 {
        return Err(Error::Kac(format!("x must be at least 2, got {x}")));
    }
    let moments = model_moments(spec, x);
    if moments.sigma2 <= 0.0 {
        return Err(Error::Degenerate(format!("model variance vanishes at x = {x}")));
    }
    let (mu, sigma) = (moments.mu, moments.sigma());
    let model = Model::new(spec, x);
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let chunks: Vec<u64> = (0..config.samples.div_ceil(CHUNK)).collect();
    let run = || {
        chunks
            .par_iter()
            .map(|&c| {
                let mut hist = vec![0u64; deltas.len() + 1];
                let first = c * CHUNK;
                let last = (first + CHUNK).min(config.samples);
                for i in first..last {
                    let mut rng = base.clone();
                    rng.set_stream(i);
                    rng.set_word_pos(0);
                    let s = match config.sampler {
                        Sampler::PerPrime => model.draw_per_prime(&mut rng),
                        Sampler::GeometricSkip => model.draw_skip(&mut rng),
                    };
                    let z = (s - mu) / sigma;
                    hist[deltas.partition_point(|&d| d <= z)] += 1;
                }
                hist
            })
            .reduce(|| vec![0u64; deltas.len() + 1], |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            })
    };
    let hist = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Kac(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let n = config.samples as f64;
    let mut tails = vec![0.0; deltas.len()];
    let mut acc = 0u64;
    for j in (0..deltas.len()).rev() {
        acc += hist[j + 1];
        tails[j] = acc as f64 / n;
    }
    let errors = tails.iter().map(|&p| (p * (1.0 - p) / n).sqrt()).collect();
    let mut table = TailTable::new(deltas.to_vec(), tails);
    table.standard_errors = Some(errors);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_primes_exact() {
        let k = kac_tail_exact_integer(&AdditiveFunctionSpec::omega(), 3, &[]).unwrap();
        let d = &k.distribution;
        assert!((d.probability(0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.probability(1.0) - 0.5).abs() < 1e-15);
        assert!((d.probability(2.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((k.moments.mu - 5.0 / 6.0).abs() < 1e-15);
        assert!((d.mean() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exact_mass_and_moments() {
        for spec in [
            AdditiveFunctionSpec::omega(),
            AdditiveFunctionSpec::omega_star(),
            AdditiveFunctionSpec::table("mixed", [(2, -0.5), (3, 1.5), (7, -2.0)], 0.25).unwrap(),
        ] {
            let k = kac_tail_exact_integer(&spec, 100_000, &[0.0]).unwrap();
            assert!((k.distribution.total_mass() - 1.0).abs() < 1e-12, "{}", spec.name());
            assert!((k.distribution.mean() - k.moments.mu).abs() < 1e-10);
            assert!((k.distribution.variance() - k.moments.sigma2).abs() < 1e-10);
            assert!(k.outside_bound < WINDOW_MASS_BOUND);
        }
    }

    #[test]
    fn exact_rejects_unsuitable_specs() {
        let frac = AdditiveFunctionSpec::fractional_part(0.618_033_988_749_894_9).unwrap();
        assert!(matches!(kac_tail_exact_integer(&frac, 1000, &[0.0]), Err(Error::Kac(_))));
        let big = AdditiveFunctionSpec::table("big", [(5, 9.0)], 1.0).unwrap();
        assert!(matches!(kac_tail_exact_integer(&big, 1000, &[0.0]), Err(Error::Kac(_))));
        let third = AdditiveFunctionSpec::table("ninth", [], 1.0 / 9.0).unwrap();
        assert!(kac_tail_exact_integer(&third, 1000, &[0.0]).is_err());
    }

    #[test]
    fn mc_sentinel_and_determinism() {
        let spec = AdditiveFunctionSpec::omega();
        let cfg = MonteCarloConfig::new(100_000, 42);
        let a = kac_tail_mc(&spec, 1000, &[f64::NEG_INFINITY, 0.0], &cfg).unwrap();
        assert_eq!(a.empirical[0], 1.0);
        assert_eq!(a.standard_errors.as_ref().unwrap()[0], 0.0);
        let b = kac_tail_mc(&spec, 1000, &[f64::NEG_INFINITY, 0.0], &cfg).unwrap();
        assert_eq!(a, b);
        let threaded = kac_tail_mc(&spec, 1000, &[f64::NEG_INFINITY, 0.0], &MonteCarloConfig { threads: Some(3), ..cfg }).unwrap();
        assert_eq!(a, threaded);
        assert!(kac_tail_mc(&spec, 1000, &[0.0], &MonteCarloConfig::new(999, 1)).is_err());
    }

    #[test]
    fn mc_samplers_agree_with_exact() {
        let spec = AdditiveFunctionSpec::omega();
        let deltas = [0.0, 1.0];
        let exact = kac_tail_exact_integer(&spec, 100_000, &deltas).unwrap().table;
        for sampler in [Sampler::GeometricSkip, Sampler::PerPrime] {
            let samples = if sampler == Sampler::PerPrime { 20_000 } else { 200_000 };
            let cfg = MonteCarloConfig { sampler, ..MonteCarloConfig::new(samples, 7) };
            let mc = kac_tail_mc(&spec, 100_000, &deltas, &cfg).unwrap();
            let se = mc.standard_errors.as_ref().unwrap();
            for j in 0..deltas.len() {
                let gap = (mc.empirical[j] - exact.empirical[j]).abs();
                assert!(gap <= 4.0 * se[j], "{sampler:?} delta={}: {gap} vs se {}", deltas[j], se[j]);
            }
        }
    }
}
