//! Strongly additive functions bounded on the primes, and the limiting
//! distributions of their prime values.
//!
//! An [`AdditiveFunctionSpec`] fixes `g(p)` for every prime; `g(n)` is the sum of
//! `g(p)` over the distinct primes dividing `n`. A [`LimitDistribution`] is a mix
//! of point masses and uniform pieces, which is enough to describe `omega`
//! (point mass at 1), `{alpha p}` (uniform on `[0, 1]`) and finite-alphabet
//! weightings, while keeping moments and the Laplace transform in closed form.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::{distinct_prime_factors, is_prime};

/// Tolerance on the total mass of a [`LimitDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Uniform mass `weight` spread over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

/// A probability distribution made of atoms and uniform segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitDistribution {
    atoms: Vec<Atom>,
    segments: Vec<Segment>,
}

/// Outcome of the moment conditions for membership in the admissible class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    /// `moments[k]` for `k = 0..=max_order`.
    pub moments: Vec<f64>,
    pub nonnegative: bool,
    pub second_positive: bool,
}

impl MomentCheck {
    pub fn passed(&self) -> bool {
        self.nonnegative && self.second_positive
    }
}

impl LimitDistribution {
    pub fn new(atoms: Vec<Atom>, segments: Vec<Segment>) -> Result<Self> {
        let mut total = 0.0;
        for a in &atoms {
            if !a.location.is_finite() || !a.weight.is_finite() || a.weight < 0.0 {
                return Err(Error::InvalidDistribution(format!("bad atom {a:?}")));
            }
            total += a.weight;
        }
        for s in &segments {
            let finite = s.lo.is_finite() && s.hi.is_finite() && s.weight.is_finite();
            if !finite || s.lo >= s.hi || s.weight < 0.0 {
                return Err(Error::InvalidDistribution(format!("bad segment {s:?}")));
            }
            total += s.weight;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total weight {total} differs from 1"
            )));
        }
        Ok(Self { atoms, segments })
    }

    pub fn point_mass(location: f64) -> Self {
        Self::new(vec![Atom { location, weight: 1.0 }], Vec::new())
            .expect("finite point mass is valid")
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![Segment { lo, hi, weight: 1.0 }])
    }

    /// Distribution from `(location, weight)` pairs.
    pub fn discrete(pairs: &[(f64, f64)]) -> Result<Self> {
        let atoms = pairs
            .iter()
            .map(|&(location, weight)| Atom { location, weight })
            .collect();
        Self::new(atoms, Vec::new())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Law of `c * T` for `T` with this law.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() || c == 0.0 {
            return Err(Error::Domain(format!("scale factor must be finite and nonzero, got {c}")));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom { location: c * a.location, weight: a.weight })
            .collect();
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let (a, b) = (c * s.lo, c * s.hi);
                Segment { lo: a.min(b), hi: a.max(b), weight: s.weight }
            })
            .collect();
        Self::new(atoms, segments)
    }

    /// Smallest interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .atoms
            .iter()
            .map(|a| a.location)
            .chain(self.segments.iter().map(|s| s.lo))
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .atoms
            .iter()
            .map(|a| a.location)
            .chain(self.segments.iter().map(|s| s.hi))
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// `int t^k dPsi(t)` in closed form.
    pub fn moment(&self, k: u32) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * a.location.powi(k as i32)).sum();
        let segments: f64 = self
            .segments
            .iter()
            .map(|s| {
                let n = k as i32 + 1;
                s.weight * (s.hi.powi(n) - s.lo.powi(n)) / (n as f64 * (s.hi - s.lo))
            })
            .sum();
        atoms + segments
    }

    /// `d`-th derivative of the Laplace transform `int exp(s t) dPsi(t)` at real `s`.
    pub fn laplace(&self, s: f64, d: u32) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.weight * a.location.powi(d as i32) * (s * a.location).exp())
            .sum();
        let segments: f64 = self
            .segments
            .iter()
            .map(|seg| seg.weight * segment_laplace(seg.lo, seg.hi, s, d))
            .sum();
        atoms + segments
    }

    /// `laplace(s, 0) - 1` without cancellation near `s = 0`; exactly zero at `s = 0`.
    ///
    /// The total mass is taken to be exactly one.
    pub fn laplace_minus_one(&self, s: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * (s * a.location).exp_m1()).sum();
        let segments: f64 = self
            .segments
            .iter()
            .map(|seg| {
                let c = 0.5 * (seg.lo + seg.hi);
                let x = 0.5 * s * (seg.hi - seg.lo);
                let sinhc_m1 = sinhc_minus_one(x);
                // exp(sc) * sinhc(x) - 1
                seg.weight * ((s * c).exp_m1() * (1.0 + sinhc_m1) + sinhc_m1)
            })
            .sum();
        atoms + segments
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, t: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.location <= t).map(|a| a.weight).sum();
        atoms + self.segment_cdf(t)
    }

    /// Left limit of the distribution function at `t`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.location < t).map(|a| a.weight).sum();
        atoms + self.segment_cdf(t)
    }

    fn segment_cdf(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.weight * ((t - s.lo) / (s.hi - s.lo)).clamp(0.0, 1.0))
            .sum()
    }

    /// Atom locations and segment endpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.location)
            .chain(self.segments.iter().flat_map(|s| [s.lo, s.hi]))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Moment conditions: `m_k >= -1e-12` for `1 <= k <= max_order` and `m_2 > 0`.
    pub fn check_moments(&self, max_order: u32) -> MomentCheck {
        let moments: Vec<f64> = (0..=max_order.max(2)).map(|k| self.moment(k)).collect();
        let nonnegative = moments.iter().skip(1).all(|&m| m >= -1e-12);
        let second_positive = moments[2] > 0.0;
        MomentCheck { moments, nonnegative, second_positive }
    }
}

/// `sinh(x)/x - 1` accurate near zero.
fn sinhc_minus_one(x: f64) -> f64 {
    if x.abs() > 0.5 {
        return x.sinh() / x - 1.0;
    }
    let x2 = x * x;
    let mut term = x2 / 6.0;
    let mut sum = 0.0f64;
    let mut n = 3.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        sum += term;
        term *= x2 / ((n + 1.0) * (n + 2.0));
        n += 2.0;
    }
    sum
}

/// Mean of `t^d exp(s t)` over the uniform law on `[lo, hi]`.
///
/// With `t = c + u`, `c` the midpoint and `|u| <= h`, the integral becomes
/// `exp(s c) sum_j C(d, j) c^(d-j) I_j` where `I_j = int_{-h}^{h} u^j exp(s u) du`.
/// Each `I_j` is a series in `s h` whose nonzero terms share one sign, so no
/// cancellation occurs for any `s`, including `s = 0`.
fn segment_laplace(lo: f64, hi: f64, s: f64, d: u32) -> f64 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=d {
        if j > 0 {
            binom = binom * (d - j + 1) as f64 / j as f64;
        }
        total += binom * c.powi((d - j) as i32) * centered_moment_integral(s, h, j);
    }
    (s * c).exp() * total / (2.0 * h)
}

/// `int_{-h}^{h} u^j exp(s u) du = sum_{n = j mod 2} s^n/n! * 2 h^(n+j+1)/(n+j+1)`.
fn centered_moment_integral(s: f64, h: f64, j: u32) -> f64 {
    let sh = s * h;
    let mut n = (j % 2) as f64;
    // (s h)^n / n!
    let mut t = if j % 2 == 1 { sh } else { 1.0 };
    let mut sum = 0.0;
    for _ in 0..4000 {
        let contrib = t / (n + j as f64 + 1.0);
        sum += contrib;
        if n > sh.abs() && contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
        t *= sh * sh / ((n + 1.0) * (n + 2.0));
        n += 2.0;
        if t == 0.0 {
            break;
        }
    }
    2.0 * h.powi(j as i32 + 1) * sum
}

/// How `g(p)` is produced before the overall scale factor is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    /// `g(p) = 1`.
    Omega,
    /// `g(2) = 0`, `g(p) = 1` otherwise.
    OmegaStar,
    /// `g(p) = {alpha p}`, the fractional part. Meaningful for irrational `alpha`;
    /// irrationality is not (and cannot be) checked.
    FractionalPart { alpha: f64 },
    /// Listed primes take their listed value, every other prime takes `default`.
    Table { values: BTreeMap<u64, f64>, default: f64 },
}

/// A strongly additive function with bounded prime values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveFunctionSpec {
    name: String,
    rule: Rule,
    scale: f64,
    bound: f64,
    declared_limit: Option<LimitDistribution>,
}

impl AdditiveFunctionSpec {
    pub fn omega() -> Self {
        Self {
            name: "omega".into(),
            rule: Rule::Omega,
            scale: 1.0,
            bound: 1.0,
            declared_limit: Some(LimitDistribution::point_mass(1.0)),
        }
    }

    pub fn omega_star() -> Self {
        Self {
            name: "omega-star".into(),
            rule: Rule::OmegaStar,
            scale: 1.0,
            bound: 1.0,
            declared_limit: Some(LimitDistribution::point_mass(1.0)),
        }
    }

    pub fn fractional_part(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!("alpha must be finite, got {alpha}")));
        }
        Ok(Self {
            name: format!("frac:{alpha}"),
            rule: Rule::FractionalPart { alpha },
            scale: 1.0,
            bound: 1.0,
            declared_limit: Some(LimitDistribution::uniform(0.0, 1.0)?),
        })
    }

    /// Table spec; the declared limit is the point mass at `default`, since only
    /// finitely many primes deviate from it.
    pub fn table(
        name: impl Into<String>,
        entries: impl IntoIterator<Item = (u64, f64)>,
        default: f64,
    ) -> Result<Self> {
        if !default.is_finite() {
            return Err(Error::InvalidSpec(format!("default value must be finite, got {default}")));
        }
        let mut values = BTreeMap::new();
        for (p, v) in entries {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("value for {p} is not finite")));
            }
            if values.insert(p, v).is_some() {
                return Err(Error::InvalidSpec(format!("prime {p} listed twice")));
            }
        }
        let largest = values.values().fold(default.abs(), |m, v| m.max(v.abs()));
        Ok(Self {
            name: name.into(),
            rule: Rule::Table { values, default },
            scale: 1.0,
            bound: if largest > 0.0 { largest } else { 1.0 },
            declared_limit: Some(LimitDistribution::point_mass(default)),
        })
    }

    /// Parses the table text format: one `p value` pair per line, an optional
    /// `default v` line, `#` starts a comment. The default defaults to 0.
    pub fn parse_table(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut default = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |message: String| Error::Parse { line: line_no, message };
            if fields.len() != 2 {
                return Err(err(format!("expected two fields, got {}", fields.len())));
            }
            let value: f64 = parse_real(fields[1]).ok_or_else(|| err(format!("bad value {:?}", fields[1])))?;
            if fields[0] == "default" {
                if default.replace(value).is_some() {
                    return Err(err("duplicate default line".into()));
                }
            } else {
                let p: u64 = fields[0].parse().map_err(|_| err(format!("bad prime {:?}", fields[0])))?;
                entries.push((p, value));
            }
        }
        Self::table(name, entries, default.unwrap_or(0.0))
    }

    /// Spec whose prime values are `c` times those of `self`.
    ///
    /// This is the explicit normalization step used before comparing two specs
    /// whose variances differ by a constant factor.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() || c == 0.0 {
            return Err(Error::Domain(format!("scale factor must be finite and nonzero, got {c}")));
        }
        let declared_limit = match &self.declared_limit {
            Some(limit) => Some(limit.scaled(c)?),
            None => None,
        };
        Ok(Self {
            name: format!("{}*{c}", self.name),
            rule: self.rule.clone(),
            scale: self.scale * c,
            bound: self.bound * c.abs(),
            declared_limit,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_declared_limit(mut self, limit: Option<LimitDistribution>) -> Self {
        self.declared_limit = limit;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn declared_limit(&self) -> Option<&LimitDistribution> {
        self.declared_limit.as_ref()
    }

    /// Declared limit or [`Error::InvalidSpec`].
    pub fn require_limit(&self) -> Result<&LimitDistribution> {
        self.declared_limit
            .as_ref()
            .ok_or_else(|| Error::InvalidSpec(format!("{} has no declared limit", self.name)))
    }

    /// `g(p)` without checking that `p` is prime.
    #[inline]
    pub fn prime_value(&self, p: u64) -> f64 {
        let raw = match &self.rule {
            Rule::Omega => 1.0,
            Rule::OmegaStar => {
                if p == 2 {
                    0.0
                } else {
                    1.0
                }
            }
            Rule::FractionalPart { alpha } => {
                let t = alpha * p as f64;
                t - t.floor()
            }
            Rule::Table { values, default } => values.get(&p).copied().unwrap_or(*default),
        };
        self.scale * raw
    }

    /// `g(p)`; rejects non-prime arguments.
    pub fn value_at(&self, p: u64) -> Result<f64> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(self.prime_value(p))
    }

    /// `g(n) = sum of g(p) over the distinct primes p | n`, by trial division.
    pub fn evaluate_n(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("evaluate_n needs n >= 1".into()));
        }
        Ok(distinct_prime_factors(n).into_iter().map(|p| self.prime_value(p)).sum())
    }

    /// True when every prime value is an integer, so `g(n)` is integer-valued.
    pub fn is_integer_valued(&self) -> bool {
        let int = |v: f64| v == v.round();
        match &self.rule {
            Rule::Omega | Rule::OmegaStar => int(self.scale),
            Rule::FractionalPart { .. } => false,
            Rule::Table { values, default } => {
                int(self.scale * default) && values.values().all(|v| int(self.scale * v))
            }
        }
    }

    /// Canonical one-line description, stable across runs.
    pub fn describe(&self) -> String {
        let rule = match &self.rule {
            Rule::Omega => "omega".to_string(),
            Rule::OmegaStar => "omega-star".to_string(),
            Rule::FractionalPart { alpha } => format!("frac:{alpha:?}"),
            Rule::Table { values, default } => {
                let body: Vec<String> = values.iter().map(|(p, v)| format!("{p}={v:?}")).collect();
                format!("table[{};default={default:?}]", body.join(","))
            }
        };
        format!("{rule};scale={:?}", self.scale)
    }
}

impl fmt::Display for AdditiveFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Accepts decimals and simple fractions such as `-1/2`.
fn parse_real(text: &str) -> Option<f64> {
    if let Some((n, d)) = text.split_once('/') {
        let (n, d): (f64, f64) = (n.parse().ok()?, d.parse().ok()?);
        return (d != 0.0).then_some(n / d);
    }
    text.parse().ok().filter(|v: &f64| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::primes_up_to;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn value_at_examples() {
        assert_eq!(AdditiveFunctionSpec::omega().value_at(97).unwrap(), 1.0);
        assert_eq!(AdditiveFunctionSpec::omega_star().value_at(2).unwrap(), 0.0);
        let frac = AdditiveFunctionSpec::fractional_part(0.4142135623).unwrap();
        assert!(close(frac.value_at(7).unwrap(), 0.8994949361, 1e-9));
        assert_eq!(AdditiveFunctionSpec::omega().value_at(91), Err(Error::NotPrime(91)));
        assert_eq!(AdditiveFunctionSpec::omega().value_at(1), Err(Error::NotPrime(1)));
    }

    #[test]
    fn evaluate_n_examples() {
        let omega = AdditiveFunctionSpec::omega();
        assert_eq!(omega.evaluate_n(12).unwrap(), 2.0);
        assert_eq!(omega.evaluate_n(1).unwrap(), 0.0);
        assert_eq!(AdditiveFunctionSpec::omega_star().evaluate_n(1024).unwrap(), 0.0);
        assert!(omega.evaluate_n(0).is_err());
    }

    #[test]
    fn moment_examples() {
        assert_eq!(LimitDistribution::point_mass(1.0).moment(5), 1.0);
        let u = LimitDistribution::uniform(0.0, 1.0).unwrap();
        assert!(close(u.moment(2), 1.0 / 3.0, 1e-15));
        let two = LimitDistribution::discrete(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(two.moment(3), 4.0);
    }

    #[test]
    fn laplace_examples() {
        let pm = LimitDistribution::point_mass(1.0);
        assert!(close(pm.laplace(0.7, 0), 2.013752707470476, 1e-15));
        let u = LimitDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.laplace(0.0, 0), 1.0);
        assert!(close(u.laplace(0.0, 1), 0.5, 1e-15));
        // closed form (e^s - 1)/s
        for s in [-3.0f64, -1e-5, 1e-9, 0.3, 2.0, 40.0] {
            let expected = s.exp_m1() / s;
            assert!(close(u.laplace(s, 0), expected, 1e-14), "s = {s}");
            assert!(close(1.0 + u.laplace_minus_one(s), expected, 1e-14));
        }
        assert_eq!(u.laplace_minus_one(0.0), 0.0);
        assert_eq!(pm.laplace_minus_one(0.0), 0.0);
    }

    #[test]
    fn laplace_derivatives_match_closed_form_on_skewed_segment() {
        // uniform on [2, 5]: d/ds of (e^{5s} - e^{2s}) / (3s) checked through
        // the antiderivative t^d e^{st} at moderate s where it is well conditioned
        let u = LimitDistribution::uniform(2.0, 5.0).unwrap();
        let s: f64 = 0.8;
        let anti = |t: f64, d: u32| -> f64 {
            // sum_j (-1)^j d!/(d-j)! t^(d-j) / s^(j+1)
            let mut acc = 0.0;
            let mut fall = 1.0;
            for j in 0..=d {
                if j > 0 {
                    fall *= (d - j + 1) as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * fall * t.powi((d - j) as i32) / s.powi(j as i32 + 1);
            }
            acc * (s * t).exp()
        };
        for d in 0..=4 {
            let expected = (anti(5.0, d) - anti(2.0, d)) / 3.0;
            assert!(close(u.laplace(s, d), expected, 1e-13), "d = {d}");
        }
    }

    #[test]
    fn laplace_at_zero_equals_moments() {
        let dists = [
            LimitDistribution::point_mass(1.0),
            LimitDistribution::uniform(0.0, 1.0).unwrap(),
            LimitDistribution::uniform(-0.5, 3.0).unwrap(),
            LimitDistribution::new(
                vec![Atom { location: 0.25, weight: 0.3 }, Atom { location: -1.0, weight: 0.2 }],
                vec![Segment { lo: 1.0, hi: 2.0, weight: 0.5 }],
            )
            .unwrap(),
        ];
        for psi in &dists {
            for k in 0..=4 {
                assert!(close(psi.laplace(0.0, k), psi.moment(k), 1e-12));
                // finite-difference check of the derivative code
                let h = 1e-5;
                let fd = (psi.laplace(h, k) - psi.laplace(-h, k)) / (2.0 * h);
                assert!(close(fd, psi.moment(k + 1), 1e-8), "k = {k}");
            }
        }
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(LimitDistribution::discrete(&[(0.0, 0.5)]).is_err());
        assert!(LimitDistribution::uniform(1.0, 1.0).is_err());
        assert!(LimitDistribution::discrete(&[(0.0, 1.5), (1.0, -0.5)]).is_err());
    }

    #[test]
    fn moment_check_flags_negative_mean() {
        let neg = AdditiveFunctionSpec::table("neg", [], -1.0).unwrap();
        let check = neg.declared_limit().unwrap().check_moments(8);
        assert!(!check.nonnegative);
        assert!(check.second_positive);
        assert!(LimitDistribution::point_mass(1.0).check_moments(8).passed());
        assert!(!LimitDistribution::point_mass(0.0).check_moments(8).passed());
    }

    #[test]
    fn table_parsing() {
        let text = "# weights\n2 0.5\n3 -1/2 # trailing\n\ndefault 1\n";
        let spec = AdditiveFunctionSpec::parse_table("t", text).unwrap();
        assert_eq!(spec.value_at(2).unwrap(), 0.5);
        assert_eq!(spec.value_at(3).unwrap(), -0.5);
        assert_eq!(spec.value_at(101).unwrap(), 1.0);
        assert_eq!(spec.bound(), 1.0);
        assert!(matches!(
            AdditiveFunctionSpec::parse_table("t", "2 1\n2 3\n"),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(AdditiveFunctionSpec::parse_table("t", "4 1\n"), Err(Error::NotPrime(4))));
        assert!(matches!(
            AdditiveFunctionSpec::parse_table("t", "2 x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn scaling_scales_values_and_limit() {
        let spec = AdditiveFunctionSpec::fractional_part(0.3).unwrap().scaled(-2.0).unwrap();
        assert!(close(spec.value_at(7).unwrap(), -2.0 * 0.1, 1e-12));
        let lim = spec.declared_limit().unwrap();
        assert!(close(lim.moment(1), -1.0, 1e-15));
        assert_eq!(spec.bound(), 2.0);
    }

    #[test]
    fn prime_powers_take_prime_value() {
        let specs = [
            AdditiveFunctionSpec::omega(),
            AdditiveFunctionSpec::omega_star(),
            AdditiveFunctionSpec::fractional_part(0.618_033_988_7).unwrap(),
        ];
        for spec in &specs {
            for p in primes_up_to(1000) {
                let gp = spec.value_at(p).unwrap();
                assert!(gp.abs() <= spec.bound());
                let mut q = p;
                for _ in 1..=5 {
                    assert_eq!(spec.evaluate_n(q).unwrap(), gp);
                    match q.checked_mul(p) {
                        Some(next) => q = next,
                        None => break,
                    }
                }
            }
        }
    }

    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }

    fn additivity_specs() -> Vec<AdditiveFunctionSpec> {
        vec![
            AdditiveFunctionSpec::omega(),
            AdditiveFunctionSpec::omega_star(),
            AdditiveFunctionSpec::fractional_part(0.618_033_988_7).unwrap(),
        ]
    }

    #[test]
    fn additive_on_coprime_pairs_up_to_500() {
        for spec in additivity_specs() {
            for m in 1..=500u64 {
                let fm = spec.evaluate_n(m).unwrap();
                for n in (1..=500u64).filter(|&n| gcd(m, n) == 1) {
                    let lhs = spec.evaluate_n(m * n).unwrap();
                    assert!((lhs - fm - spec.evaluate_n(n).unwrap()).abs() <= 1e-12, "{} {m} {n}", spec.name());
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn additive_on_coprime_pairs(m in 1u64..=10_000, n in 1u64..=10_000) {
            proptest::prop_assume!(gcd(m, n) == 1);
            for spec in additivity_specs() {
                let split = spec.evaluate_n(m).unwrap() + spec.evaluate_n(n).unwrap();
                proptest::prop_assert!((spec.evaluate_n(m * n).unwrap() - split).abs() <= 1e-12);
            }
        }
    }
}
