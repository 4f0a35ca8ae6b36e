//! Truncated power series `c_0 + c_1 z + ... + c_N z^N`.
//!
//! Every operation works modulo `z^(N+1)`: coefficients of degree above `N` are
//! never formed or read. Binary operations on series of different orders
//! truncate to the smaller order.

mod cramer;

pub use cramer::{
    bracket_derivative, cramer_q_series, cramer_u, exponent_series, laplace_series, omega_series,
    CramerSeries,
};

use std::fmt;

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Series of order `order` from leading coefficients; missing ones are zero and
    /// extra ones are dropped.
    pub fn new(coeffs: &[f64], order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        for (dst, &src) in c.iter_mut().zip(coeffs) {
            *dst = src;
        }
        Self { coeffs: c }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(&[], order)
    }

    pub fn constant(value: f64, order: usize) -> Self {
        Self::new(&[value], order)
    }

    /// The series `z`.
    pub fn identity(order: usize) -> Self {
        Self::new(&[0.0, 1.0], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^k`, zero above the order.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(&self.coeffs, order)
    }

    fn common_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        Self { coeffs: (0..=n).map(|k| self.coeffs[k] + other.coeffs[k]).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        Self { coeffs: (0..=n).map(|k| self.coeffs[k] - other.coeffs[k]).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        let mut out = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().take(n + 1).enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().take(n + 1 - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        let d0 = other.coeffs[0];
        if d0 == 0.0 {
            return Err(Error::SeriesPrecondition {
                op: "div",
                requirement: "a nonzero constant term in the divisor",
                constant: d0,
            });
        }
        let n = self.common_order(other);
        let mut q = vec![0.0; n + 1];
        for k in 0..=n {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= other.coeffs[j] * q[k - j];
            }
            q[k] = acc / d0;
        }
        Ok(Self { coeffs: q })
    }

    /// `exp` via `n b_n = sum_{k=1}^n k a_k b_{n-k}`.
    pub fn exp(&self) -> Self {
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = self.coeffs[0].exp();
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += k as f64 * self.coeffs[k] * b[m - k];
            }
            b[m] = acc / m as f64;
        }
        Self { coeffs: b }
    }

    pub fn log(&self) -> Result<Self> {
        let b0 = self.coeffs[0];
        if !(b0 > 0.0) {
            return Err(Error::SeriesPrecondition {
                op: "log",
                requirement: "a positive constant term",
                constant: b0,
            });
        }
        let n = self.order();
        let mut a = vec![0.0; n + 1];
        a[0] = b0.ln();
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..m {
                acc += k as f64 * a[k] * self.coeffs[m - k];
            }
            a[m] = (self.coeffs[m] - acc / m as f64) / b0;
        }
        Ok(Self { coeffs: a })
    }

    /// Real power via `m b_0 c_m = sum_{k=1}^m (alpha k - (m - k)) b_k c_{m-k}`.
    ///
    /// Integer exponents also accept a negative constant term.
    pub fn powf(&self, alpha: f64) -> Result<Self> {
        let b0 = self.coeffs[0];
        let integer = alpha == alpha.round();
        if !(b0 > 0.0 || (integer && b0 != 0.0)) {
            return Err(Error::SeriesPrecondition {
                op: "pow",
                requirement: "a positive constant term (nonzero for integer exponents)",
                constant: b0,
            });
        }
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        c[0] = if integer { b0.powi(alpha as i32) } else { b0.powf(alpha) };
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += (alpha * k as f64 - (m - k) as f64) * self.coeffs[k] * c[m - k];
            }
            c[m] = acc / (m as f64 * b0);
        }
        Ok(Self { coeffs: c })
    }

    /// `self(inner(z))`; `inner` must have zero constant term. Horner's scheme.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.coeffs[0] != 0.0 {
            return Err(Error::SeriesPrecondition {
                op: "compose",
                requirement: "a zero constant term in the inner series",
                constant: inner.coeffs[0],
            });
        }
        let n = self.common_order(inner);
        let inner = inner.truncate(n);
        let mut acc = Self::constant(self.coeffs[n], n);
        for k in (0..n).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += self.coeffs[k];
        }
        Ok(acc)
    }

    /// Compositional inverse `g` with `self(g(z)) = z`, by Lagrange inversion:
    /// `[z^n] g = (1/n) [w^(n-1)] (w / h(w))^n`.
    pub fn revert(&self) -> Result<Self> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::SeriesPrecondition {
                op: "revert",
                requirement: "a zero constant term",
                constant: self.coeffs[0],
            });
        }
        let n = self.order();
        if n == 0 {
            return Ok(Self::zero(0));
        }
        if self.coeffs[1] == 0.0 {
            return Err(Error::NotInvertible(self.coeffs[1]));
        }
        // phi = w / h(w), known to order n - 1
        let quotient = Self::new(&self.coeffs[1..], n - 1);
        let phi = Self::constant(1.0, n - 1).div(&quotient)?;
        let mut out = vec![0.0; n + 1];
        let mut power = Self::constant(1.0, n - 1);
        for m in 1..=n {
            power = power.mul(&phi);
            out[m] = power.coeffs[m - 1] / m as f64;
        }
        Ok(Self { coeffs: out })
    }

    /// Formal derivative; the order drops by one (minimum 0).
    pub fn derivative(&self) -> Self {
        let n = self.order();
        if n == 0 {
            return Self::zero(0);
        }
        Self { coeffs: (1..=n).map(|k| k as f64 * self.coeffs[k]).collect() }
    }

    /// Horner evaluation of the polynomial part.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.coeffs.iter().enumerate().map(|(k, c)| format!("{c}*z^{k}")).collect();
        write!(f, "{} + O(z^{})", terms.join(" + "), self.order() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_coeffs(s: &TruncatedSeries, expected: &[f64], tol: f64) {
        assert_eq!(s.coeffs().len(), expected.len(), "{s}");
        for (k, (a, b)) in s.coeffs().iter().zip(expected).enumerate() {
            assert!((a - b).abs() <= tol, "coefficient {k}: {a} vs {b}");
        }
    }

    #[test]
    fn exp_of_z() {
        let e = TruncatedSeries::identity(4).exp();
        assert_coeffs(&e, &[1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0], 1e-16);
    }

    #[test]
    fn product_difference_of_squares() {
        let a = TruncatedSeries::new(&[1.0, 1.0], 4);
        let b = TruncatedSeries::new(&[1.0, -1.0], 4);
        assert_coeffs(&a.mul(&b), &[1.0, 0.0, -1.0, 0.0, 0.0], 0.0);
    }

    #[test]
    fn log_compose_expm1_is_identity() {
        let log1p = TruncatedSeries::new(&[1.0, 1.0], 4).log().unwrap();
        let expm1 = TruncatedSeries::identity(4).exp().sub(&TruncatedSeries::constant(1.0, 4));
        assert_coeffs(&log1p.compose(&expm1).unwrap(), &[0.0, 1.0, 0.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn revert_examples() {
        let expm1 = TruncatedSeries::identity(4).exp().sub(&TruncatedSeries::constant(1.0, 4));
        let r = expm1.revert().unwrap();
        assert_coeffs(&r, &[0.0, 1.0, -0.5, 1.0 / 3.0, -0.25], 1e-15);
        assert_coeffs(&expm1.compose(&r).unwrap(), &[0.0, 1.0, 0.0, 0.0, 0.0], 1e-15);
        let id = TruncatedSeries::identity(6);
        assert_eq!(id.revert().unwrap(), id);
    }

    #[test]
    fn revert_z_plus_z_squared_matches_brute_force_solve() {
        // solve g + g^2 = z coefficient by coefficient: g_n = -sum_{i+j=n} g_i g_j
        let n = 8;
        let mut g = vec![0.0; n + 1];
        g[1] = 1.0;
        for m in 2..=n {
            let mut acc = 0.0;
            for i in 1..m {
                acc += g[i] * g[m - i];
            }
            g[m] = -acc;
        }
        let r = TruncatedSeries::new(&[0.0, 1.0, 1.0], n).revert().unwrap();
        assert_coeffs(&r, &g, 1e-12);
        assert_coeffs(&r.truncate(4), &[0.0, 1.0, -1.0, 2.0, -5.0], 1e-12);
    }

    #[test]
    fn precondition_errors_carry_constant_term() {
        let s = TruncatedSeries::new(&[0.0, 1.0], 3);
        assert!(matches!(
            TruncatedSeries::constant(1.0, 3).div(&s),
            Err(Error::SeriesPrecondition { op: "div", constant, .. }) if constant == 0.0
        ));
        assert!(matches!(
            TruncatedSeries::constant(-2.0, 3).log(),
            Err(Error::SeriesPrecondition { op: "log", constant, .. }) if constant == -2.0
        ));
        let c = TruncatedSeries::new(&[0.5, 1.0], 3);
        assert!(matches!(s.compose(&c), Err(Error::SeriesPrecondition { op: "compose", .. })));
        assert!(matches!(c.revert(), Err(Error::SeriesPrecondition { op: "revert", .. })));
        assert!(matches!(
            TruncatedSeries::new(&[0.0, 0.0, 1.0], 3).revert(),
            Err(Error::NotInvertible(_))
        ));
        assert!(TruncatedSeries::constant(-2.0, 3).powf(0.5).is_err());
        assert!(TruncatedSeries::constant(-2.0, 3).powf(-3.0).is_ok());
    }

    #[test]
    fn pow_and_div_agree() {
        let s = TruncatedSeries::new(&[2.0, -1.0, 0.5, 3.0], 7);
        let inv = TruncatedSeries::constant(1.0, 7).div(&s).unwrap();
        assert_coeffs(&s.powf(-1.0).unwrap(), inv.coeffs(), 1e-14);
        let sq = s.powf(0.5).unwrap();
        assert_coeffs(&sq.mul(&sq), s.coeffs(), 1e-14);
        let e = s.log().unwrap().scale(1.7).exp();
        assert_coeffs(&s.powf(1.7).unwrap(), e.coeffs(), 1e-13);
    }

    #[test]
    fn truncation_never_reads_higher_degrees() {
        let a = TruncatedSeries::new(&[1.0, 2.0, 3.0, 4.0, 5.0], 4);
        let b = TruncatedSeries::new(&[1.0, 1.0], 2);
        let p = a.mul(&b);
        assert_eq!(p.order(), 2);
        assert_coeffs(&p, &[1.0, 3.0, 5.0], 0.0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(100))]
        #[test]
        fn reversion_round_trip(
            lead in 0.5f64..2.0,
            rest in proptest::collection::vec(-1.0f64..1.0, 11),
        ) {
            let mut c = vec![0.0, lead];
            c.extend(rest);
            let h = TruncatedSeries::new(&c, DEFAULT_ORDER);
            let g = h.revert().unwrap();
            let id = h.compose(&g).unwrap();
            // inverse coefficients reach ~1e10 here, so roundoff scales with them
            let scale = g.coeffs().iter().fold(1.0f64, |a, c| a.max(c.abs()));
            for k in 0..=DEFAULT_ORDER {
                let want = if k == 1 { 1.0 } else { 0.0 };
                proptest::prop_assert!(
                    (id.coeff(k) - want).abs() <= 1e-12 * scale,
                    "k={} got {} scale {}", k, id.coeff(k), scale
                );
            }
        }

        #[test]
        fn reversion_round_trip_well_conditioned(
            lead in 0.5f64..2.0,
            rest in proptest::collection::vec(-1.0f64..1.0, 11),
        ) {
            // coefficients decaying like lead^k / k! keep the inverse O(1)
            let mut c = vec![0.0, lead];
            let mut w = lead;
            for (i, r) in rest.iter().enumerate() {
                w *= lead / (i + 2) as f64;
                c.push(r * w);
            }
            let h = TruncatedSeries::new(&c, DEFAULT_ORDER);
            let id = h.compose(&h.revert().unwrap()).unwrap();
            for k in 0..=DEFAULT_ORDER {
                let want = if k == 1 { 1.0 } else { 0.0 };
                proptest::prop_assert!((id.coeff(k) - want).abs() <= 1e-12, "k={} got {}", k, id.coeff(k));
            }
        }
    }
}
