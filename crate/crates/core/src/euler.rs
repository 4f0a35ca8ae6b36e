//! Euler products attached to an additive function, the mean value of
//! `exp(z f(n))`, the zero lattice of the local factors and the recovery of the
//! prime values from that lattice.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::afspec::AdditiveFunctionSpec;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::primes::{for_each_prime, is_prime};
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EulerVariant {
    /// Local factor `(1 - 1/p)^L(s) (1 + e^(s f(p)) / p)`.
    #[serde(rename = "paper-literal")]
    PrimeOnly,
    /// Local factor `(1 - 1/p)^L(s) (1 + e^(s f(p)) / (p - 1))`, which accounts
    /// for prime powers.
    Corrected,
}

impl EulerVariant {
    pub fn name(self) -> &'static str {
        match self {
            EulerVariant::PrimeOnly => "paper-literal",
            EulerVariant::Corrected => "corrected",
        }
    }
}

impl fmt::Display for EulerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EulerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper-literal" | "literal" => Ok(EulerVariant::PrimeOnly),
            "corrected" | "prime-power-corrected" => Ok(EulerVariant::Corrected),
            other => Err(Error::Domain(format!("unknown Euler product variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerProduct {
    pub s: f64,
    pub prime_limit: u64,
    pub variant: EulerVariant,
    pub log_value: f64,
    pub value: f64,
}

/// Partial product over `p <= prime_limit`, accumulated in log space.
pub fn l_partial(spec: &AdditiveFunctionSpec, s: f64, prime_limit: u64, variant: EulerVariant) -> Result<EulerProduct> {
    if !(s.abs() <= 2.0) {
        return Err(Error::Domain(format!("s must satisfy |s| <= 2, got {s}")));
    }
    if prime_limit < 2 {
        return Err(Error::Domain(format!("prime limit must be at least 2, got {prime_limit}")));
    }
    let psi = spec.require_limit()?;
    let excess = psi.laplace_minus_one(s);
    let mut acc = CompensatedSum::new();
    for_each_prime(prime_limit, |p| {
        let inv = 1.0 / p as f64;
        let log_keep = (-inv).ln_1p();
        let sf = s * spec.prime_value(p);
        let term = match variant {
            EulerVariant::PrimeOnly => (1.0 + excess) * log_keep + (sf.exp() * inv).ln_1p(),
            EulerVariant::Corrected => excess * log_keep + (sf.exp_m1() * inv).ln_1p(),
        };
        acc.add(term);
    });
    let log_value = acc.value();
    Ok(EulerProduct { s, prime_limit, variant, log_value, value: log_value.exp() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanValueConfig {
    pub variant: EulerVariant,
    /// Largest `|z|` accepted.
    pub radius: f64,
    /// Truncation point of the Euler product.
    pub prime_limit: u64,
}

impl Default for MeanValueConfig {
    fn default() -> Self {
        Self { variant: EulerVariant::Corrected, radius: 1.0, prime_limit: 1_000_000 }
    }
}

/// Predicted `sum_{n <= x} exp(z f(n))`:
/// `x (ln x)^(L(z) - 1) E(z) / Gamma(L(z))` with `E` the Euler product.
pub fn mean_value_predict(spec: &AdditiveFunctionSpec, z: f64, x: f64, config: &MeanValueConfig) -> Result<f64> {
    if !(z.abs() <= config.radius) {
        return Err(Error::OutOfRange {
            method: "mean-value",
            reason: format!("|z| = {} exceeds the radius {}", z.abs(), config.radius),
        });
    }
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite and at least 2, got {x}")));
    }
    let excess = spec.require_limit()?.laplace_minus_one(z);
    let euler = l_partial(spec, z, config.prime_limit, config.variant)?;
    let g = gamma(1.0 + excess)?;
    Ok(x * x.ln().powf(excess) * euler.value / g)
}

/// A zero `re + i im` of a local factor, with its origin when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    pub re: f64,
    pub im: f64,
    pub p: Option<u64>,
    pub k: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroLattice {
    zeros: Vec<Zero>,
    prime_limit: Option<u64>,
    harmonics: Option<u64>,
}

fn sort_zeros(zeros: &mut [Zero]) {
    zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

impl ZeroLattice {
    /// Lattice from bare points, as read back from a file.
    pub fn from_points(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut zeros: Vec<Zero> = points.into_iter().map(|(re, im)| Zero { re, im, p: None, k: None }).collect();
        sort_zeros(&mut zeros);
        Self { zeros, prime_limit: None, harmonics: None }
    }

    pub fn zeros(&self) -> &[Zero] {
        &self.zeros
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn prime_limit(&self) -> Option<u64> {
        self.prime_limit
    }

    pub fn harmonics(&self) -> Option<u64> {
        self.harmonics
    }

    /// `re,im,p,k` CSV when the origin is known, `re,im` otherwise.
    pub fn to_csv(&self) -> String {
        let full = self.zeros.iter().all(|z| z.p.is_some() && z.k.is_some());
        let mut out = String::from(if full { "re,im,p,k\n" } else { "re,im\n" });
        for z in &self.zeros {
            match (full, z.p, z.k) {
                (true, Some(p), Some(k)) => out.push_str(&format!("{:e},{:e},{p},{k}\n", z.re, z.im)),
                _ => out.push_str(&format!("{:e},{:e}\n", z.re, z.im)),
            }
        }
        out
    }

    /// Reads `re,im` rows; extra columns and a header line are ignored.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("re")) {
                continue;
            }
            let mut cols = line.split(',');
            let mut next = |name: &str| -> Result<f64> {
                let raw = cols.next().ok_or_else(|| Error::Parse { line: i + 1, message: format!("missing {name}") })?;
                raw.trim().parse().map_err(|_| Error::Parse { line: i + 1, message: format!("bad {name} '{raw}'") })
            };
            let re = next("re")?;
            let im = next("im")?;
            points.push((re, im));
        }
        Ok(Self::from_points(points))
    }

    /// Set equality with every point matched to one within `tol`.
    pub fn set_eq(&self, other: &Self, tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        for z in &self.zeros {
            let start = other.zeros.partition_point(|w| w.re < z.re - tol);
            let found = other.zeros[start..]
                .iter()
                .enumerate()
                .take_while(|(_, w)| w.re <= z.re + tol)
                .find(|(j, w)| !used[start + j] && (w.im - z.im).abs() <= tol)
                .map(|(j, _)| start + j);
            match found {
                Some(j) => used[j] = true,
                None => return false,
            }
        }
        true
    }
}

/// Zeros `((2k + 1) pi i + ln(p - 1)) / g(p)` for `p <= prime_limit`, `g(p) != 0`,
/// `|k| <= harmonics`, sorted by real then imaginary part.
pub fn zero_set(spec: &AdditiveFunctionSpec, prime_limit: u64, harmonics: u64) -> ZeroLattice {
    let k_max = harmonics as i64;
    let mut zeros = Vec::new();
    for_each_prime(prime_limit, |p| {
        let g = spec.prime_value(p);
        if g == 0.0 {
            return;
        }
        let re = ((p - 1) as f64).ln() / g;
        for k in -k_max..=k_max {
            zeros.push(Zero { re, im: (2 * k + 1) as f64 * PI / g, p: Some(p), k: Some(k) });
        }
    });
    sort_zeros(&mut zeros);
    ZeroLattice { zeros, prime_limit: Some(prime_limit), harmonics: Some(harmonics) }
}

/// Relative tolerance for grouping zeros onto a common vertical line.
pub const CLUSTER_TOLERANCE: f64 = 1e-9;

fn same_line(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLUSTER_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Recovers `p -> g(p)` from a lattice.
///
/// Zeros are grouped by real part. On each line the smallest `|im|` equals
/// `pi / |g|`; the sign of `g` follows the real part when it is nonzero and the
/// excess of zeros above the axis otherwise. Then `p = exp(re g) + 1`. That prime's
/// odd multiples of `pi / g` are removed and the line is processed again, so
/// several primes may share a line.
pub fn reconstruct_from_zeros(lattice: &ZeroLattice) -> Result<BTreeMap<u64, f64>> {
    let mut out = BTreeMap::new();
    let zeros = lattice.zeros();
    let mut start = 0;
    while start < zeros.len() {
        let mut end = start + 1;
        while end < zeros.len() && same_line(zeros[start].re, zeros[end].re) {
            end += 1;
        }
        let line = &zeros[start..end];
        let re = line.iter().map(|z| z.re).sum::<f64>() / line.len() as f64;
        let mut ims: Vec<f64> = line.iter().map(|z| z.im).collect();
        while !ims.is_empty() {
            let step = ims.iter().map(|y| y.abs()).fold(f64::INFINITY, f64::min);
            if !(step > 0.0) {
                return Err(Error::Reconstruction(format!("zero on the real axis at re = {re}")));
            }
            let is_member = |y: f64| {
                let m = y / step;
                let odd = m.round();
                (m - odd).abs() <= 1e-9 * m.abs().max(1.0) && (odd as i64).rem_euclid(2) == 1
            };
            let (members, rest): (Vec<f64>, Vec<f64>) = ims.iter().partition(|&&y| is_member(y));
            let sign = if re.abs() > CLUSTER_TOLERANCE {
                re.signum()
            } else {
                let above = members.iter().filter(|&&y| y > 0.0).count();
                let below = members.len() - above;
                match above.cmp(&below) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Less => -1.0,
                    std::cmp::Ordering::Equal => {
                        return Err(Error::Reconstruction(format!(
                            "sign undetermined on the line re = {re}: symmetric zeros"
                        )))
                    }
                }
            };
            let g = sign * PI / step;
            let p_real = (re * g).exp() + 1.0;
            let p = p_real.round();
            if (p_real - p).abs() > 1e-6 * p.max(1.0) || p < 2.0 || !is_prime(p as u64) {
                return Err(Error::Reconstruction(format!(
                    "line re = {re} with g = {g} gives p = {p_real}, not a prime"
                )));
            }
            let p = p as u64;
            if let Some(&previous) = out.get(&p) {
                return Err(Error::Collision { re, candidates: vec![(p, previous), (p, g)] });
            }
            out.insert(p, g);
            ims = rest;
        }
        start = end;
    }
    Ok(out)
}

/// `n = base^exponent` with the exponent maximal.
pub fn perfect_power(n: u64) -> (u64, u32) {
    if n < 4 {
        return (n, 1);
    }
    for r in (2..=63u32).rev() {
        let guess = (n as f64).powf(1.0 / r as f64).round() as u64;
        for m in guess.saturating_sub(1).max(2)..=guess + 1 {
            if m.checked_pow(r) == Some(n) {
                return (m, r);
            }
        }
    }
    (n, 1)
}

/// `q - 1 = (p - 1)^(b / a)` with `a, b` odd and `q` prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PowerRelation {
    pub p: u64,
    pub q: u64,
    pub a: u64,
    pub b: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub prime_limit: u64,
    pub odd_max: u64,
    pub primes_checked: u64,
    /// Relations with `p != q` or `a != b`; expected to be empty.
    pub violations: Vec<PowerRelation>,
    /// Exponent pairs `a != b` for which `(p - 1)^(b/a)` is an integer not exceeding
    /// the prime limit; only possible when `p - 1` is a perfect power.
    pub integral_candidates: Vec<PowerRelation>,
}

/// Searches primes `2 < p, q <= prime_limit` and positive odd `a, b <= odd_max` for
/// `q - 1 = (p - 1)^(b/a)` other than `p = q, a = b`.
///
/// With `p - 1 = m^r` and `r` maximal, `(p - 1)^(b/a)` is an integer exactly when
/// `a` divides `r b`, so `q` is computed rather than searched for.
pub fn verify_power_obstruction(prime_limit: u64, odd_max: u64) -> Result<ObstructionReport> {
    if prime_limit > 1_000_000 {
        return Err(Error::Domain(format!("prime limit must be at most 10^6, got {prime_limit}")));
    }
    if odd_max > 31 {
        return Err(Error::Domain(format!("odd bound must be at most 31, got {odd_max}")));
    }
    let odds: Vec<u64> = (1..=odd_max).step_by(2).collect();
    let mut report = ObstructionReport {
        prime_limit,
        odd_max,
        primes_checked: 0,
        violations: Vec::new(),
        integral_candidates: Vec::new(),
    };
    for_each_prime(prime_limit, |p| {
        if p == 2 {
            return;
        }
        report.primes_checked += 1;
        let (m, r) = perfect_power(p - 1);
        for &a in &odds {
            for &b in &odds {
                let rb = r as u64 * b;
                if !rb.is_multiple_of(a) {
                    continue;
                }
                let q = match u32::try_from(rb / a).ok().and_then(|e| m.checked_pow(e)) {
                    Some(v) if v < prime_limit => v + 1,
                    _ => continue,
                };
                let relation = PowerRelation { p, q, a, b };
                if a != b {
                    report.integral_candidates.push(relation);
                }
                if is_prime(q) && (q != p || a != b) {
                    report.violations.push(relation);
                }
            }
        }
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::primes_up_to;

    const INV_ZETA2: f64 = 0.607_927_101_854_026_6;

    #[test]
    fn literal_product_at_zero_is_inverse_zeta2() {
        let l = l_partial(&AdditiveFunctionSpec::omega(), 0.0, 1_000_000, EulerVariant::PrimeOnly).unwrap();
        assert!((l.value - INV_ZETA2).abs() < 1e-6);
    }

    #[test]
    fn corrected_product_at_zero_is_one() {
        for spec in [
            AdditiveFunctionSpec::omega(),
            AdditiveFunctionSpec::omega_star(),
            AdditiveFunctionSpec::fractional_part(0.3).unwrap(),
        ] {
            let l = l_partial(&spec, 0.0, 10_000, EulerVariant::Corrected).unwrap();
            assert_eq!(l.value, 1.0);
        }
    }

    #[test]
    fn corrected_product_at_log2_for_omega() {
        let l = l_partial(&AdditiveFunctionSpec::omega(), 2f64.ln(), 1_000_000, EulerVariant::Corrected).unwrap();
        assert!((l.value - INV_ZETA2).abs() < 1e-5);
    }

    #[test]
    fn product_domain_errors() {
        let w = AdditiveFunctionSpec::omega();
        assert!(l_partial(&w, 3.0, 100, EulerVariant::Corrected).is_err());
        assert!(l_partial(&w, 0.0, 1, EulerVariant::Corrected).is_err());
        let bare = w.clone().with_declared_limit(None);
        assert!(l_partial(&bare, 0.0, 100, EulerVariant::Corrected).is_err());
    }

    #[test]
    fn tail_of_product_is_small() {
        let tail: f64 = primes_up_to(1_000_000).into_iter().filter(|&p| p > 100_000).map(|p| 1.0 / (p as f64).powi(2)).sum();
        let log_at = |spec: &AdditiveFunctionSpec, s, limit, variant| l_partial(spec, s, limit, variant).unwrap().log_value;
        for spec in [AdditiveFunctionSpec::omega(), AdditiveFunctionSpec::omega_star()] {
            for s in [-1.0f64, -0.3, 0.4, 1.0] {
                for variant in [EulerVariant::PrimeOnly, EulerVariant::Corrected] {
                    let d = (log_at(&spec, s, 1_000_000, variant) - log_at(&spec, s, 100_000, variant)).abs();
                    assert!(d <= 10.0 * tail, "{s} {variant}: {d:e}");
                }
            }
        }
        // equidistributed values cancel only on average, so the tail is far heavier
        let frac = AdditiveFunctionSpec::fractional_part(0.7).unwrap();
        for s in [-1.0, -0.3, 0.4, 1.0] {
            let d = (log_at(&frac, s, 1_000_000, EulerVariant::Corrected) - log_at(&frac, s, 100_000, EulerVariant::Corrected)).abs();
            assert!(d < 5e-3, "{s}: {d:e}");
        }
    }

    #[test]
    fn mean_value_at_zero_is_x() {
        let cfg = MeanValueConfig { prime_limit: 10_000, ..Default::default() };
        for spec in [AdditiveFunctionSpec::omega(), AdditiveFunctionSpec::fractional_part(0.3).unwrap()] {
            for x in [100.0, 12345.0, 1e9] {
                assert_eq!(mean_value_predict(&spec, 0.0, x, &cfg).unwrap(), x);
            }
        }
        let literal = MeanValueConfig { variant: EulerVariant::PrimeOnly, prime_limit: 1_000_000, ..cfg };
        let v = mean_value_predict(&AdditiveFunctionSpec::omega(), 0.0, 1e6, &literal).unwrap();
        assert!((v / 1e6 - INV_ZETA2).abs() < 1e-6);
    }

    #[test]
    fn mean_value_is_continuous_near_zero() {
        let cfg = MeanValueConfig { prime_limit: 10_000, ..Default::default() };
        let spec = AdditiveFunctionSpec::omega();
        let at = |z| mean_value_predict(&spec, z, 1e6, &cfg).unwrap();
        assert!((at(1e-9) / at(0.0) - 1.0).abs() < 1e-7);
        assert!((at(-1e-9) / at(0.0) - 1.0).abs() < 1e-7);
        assert!(mean_value_predict(&spec, 1.5, 1e6, &cfg).is_err());
    }

    #[test]
    fn mean_value_against_divisor_type_sum() {
        use crate::sieve::{sieve_values, SieveConfig};
        let spec = AdditiveFunctionSpec::omega();
        let r = sieve_values(&spec, 1_000_000, &SieveConfig::default()).unwrap();
        let direct: f64 = r.values().iter().map(|&v| 2f64.powf(v)).sum();
        let pred = mean_value_predict(&spec, 2f64.ln(), 1e6, &MeanValueConfig::default()).unwrap();
        let ratio = pred / direct;
        assert!((0.85..=1.15).contains(&ratio), "{ratio}");
    }

    #[test]
    fn zero_set_examples() {
        let z = zero_set(&AdditiveFunctionSpec::omega(), 3, 0);
        let pts: Vec<(f64, f64)> = z.zeros().iter().map(|z| (z.re, z.im)).collect();
        assert_eq!(pts, vec![(0.0, PI), (2f64.ln(), PI)]);
        let two = AdditiveFunctionSpec::table("two", [(2, 2.0)], 1.0).unwrap();
        let z = zero_set(&two, 2, 1);
        let ims: Vec<f64> = z.zeros().iter().map(|z| z.im).collect();
        assert_eq!(ims, vec![-PI / 2.0, PI / 2.0, 3.0 * PI / 2.0]);
        assert!(z.zeros().iter().all(|z| z.re == 0.0));
        let star = zero_set(&AdditiveFunctionSpec::omega_star(), 3, 2);
        assert!(star.zeros().iter().all(|z| z.p == Some(3)));
        assert_eq!(star.len(), 5);
    }

    #[test]
    fn omega_round_trip() {
        let rec = reconstruct_from_zeros(&zero_set(&AdditiveFunctionSpec::omega(), 50, 3)).unwrap();
        let primes = primes_up_to(50);
        assert_eq!(rec.keys().copied().collect::<Vec<_>>(), primes);
        assert!(rec.values().all(|&g| g == 1.0));
        assert!(reconstruct_from_zeros(&ZeroLattice::from_points([])).unwrap().is_empty());
    }

    #[test]
    fn shared_lines_are_separated() {
        // ln(2)/1 = ln(4)/2: primes 3 and 5 share a line
        let spec = AdditiveFunctionSpec::table("shared", [(2, -0.5), (3, 1.0), (5, 2.0), (7, -1.0)], 0.0).unwrap();
        for k in [0, 1, 3] {
            let rec = reconstruct_from_zeros(&zero_set(&spec, 7, k)).unwrap();
            let want: BTreeMap<u64, f64> = [(2, -0.5), (3, 1.0), (5, 2.0), (7, -1.0)].into_iter().collect();
            assert_eq!(rec, want, "k={k}");
        }
    }

    #[test]
    fn csv_round_trip_and_ingestion() {
        let lat = zero_set(&AdditiveFunctionSpec::omega(), 20, 2);
        let csv = lat.to_csv();
        assert!(csv.starts_with("re,im,p,k\n"));
        let back = ZeroLattice::parse_csv(&csv).unwrap();
        assert!(back.set_eq(&lat, 1e-12));
        assert!(back.to_csv().starts_with("re,im\n"));
        assert!(ZeroLattice::parse_csv("re,im\n1.0,x\n").is_err());
    }

    #[test]
    fn reconstruction_rejects_non_prime_lines() {
        let bad = ZeroLattice::from_points([(3f64.ln(), PI)]);
        assert!(matches!(reconstruct_from_zeros(&bad), Err(Error::Reconstruction(_))));
        let off_lattice = ZeroLattice::from_points([(0.0, PI), (0.0, 2.0 * PI), (0.0, -PI)]);
        assert!(reconstruct_from_zeros(&off_lattice).is_err());
    }

    #[test]
    fn perfect_powers() {
        assert_eq!(perfect_power(16), (2, 4));
        assert_eq!(perfect_power(64), (2, 6));
        assert_eq!(perfect_power(36), (6, 2));
        assert_eq!(perfect_power(12), (12, 1));
        assert_eq!(perfect_power(2), (2, 1));
        assert_eq!(perfect_power(1 << 62), (2, 62));
        assert_eq!(perfect_power(3u64.pow(40)), (3, 40));
    }

    #[test]
    fn power_obstruction_small() {
        let r = verify_power_obstruction(100_000, 15).unwrap();
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        // p = 17: 16^(b/a) with a != b is a power of two plus one, never prime here
        assert!(r.integral_candidates.iter().any(|c| c.p == 17));
        for c in r.integral_candidates.iter().filter(|c| c.p == 17) {
            assert!((c.q - 1).is_power_of_two());
        }
        assert!(verify_power_obstruction(2_000_000, 15).is_err());
        assert!(verify_power_obstruction(1000, 33).is_err());
    }
}
