//! Series attached to a limit distribution: its Laplace transform, the inverse of
//! the normalized first derivative, the Cramér exponent and its coefficients.

use super::TruncatedSeries;
use crate::afspec::LimitDistribution;
use crate::error::{Error, Result};

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

fn moments(psi: &LimitDistribution, n: usize) -> Vec<f64> {
    (0..=n).map(|k| psi.moment(k as u32)).collect()
}

fn second_moment(psi: &LimitDistribution) -> Result<f64> {
    let m2 = psi.moment(2);
    if m2 > 0.0 {
        Ok(m2)
    } else {
        Err(Error::Degenerate(format!("second moment must be positive, got {m2}")))
    }
}

/// Taylor series of the Laplace transform: coefficient `k` is `m_k / k!`.
pub fn laplace_series(psi: &LimitDistribution, order: usize) -> TruncatedSeries {
    let f = factorials(order);
    let m = moments(psi, order);
    let c: Vec<f64> = (0..=order).map(|k| m[k] / f[k]).collect();
    TruncatedSeries::new(&c, order)
}

/// `(L'(w) - L'(0)) / (m_2 w)` where `L` is the Laplace transform: coefficient `k`
/// is `m_{k+2} / ((k+1)! m_2)`.
fn normalized_slope_quotient(m: &[f64], f: &[f64], order: usize) -> TruncatedSeries {
    let c: Vec<f64> = (0..=order).map(|k| m[k + 2] / (f[k + 1] * m[2])).collect();
    TruncatedSeries::new(&c, order)
}

/// The series `w(z)` solving `L'(w(z)) = L'(0) + z L''(0)`.
pub fn omega_series(psi: &LimitDistribution, order: usize) -> Result<TruncatedSeries> {
    second_moment(psi)?;
    if order == 0 {
        return Ok(TruncatedSeries::zero(0));
    }
    let f = factorials(order + 1);
    let m = moments(psi, order + 1);
    let mut c = vec![0.0];
    c.extend_from_slice(normalized_slope_quotient(&m, &f, order - 1).coeffs());
    TruncatedSeries::new(&c, order).revert()
}

/// `A(v) = L(v) - 1 - v L'(v)`, coefficient `k` equal to `m_k (1 - k) / k!`.
fn exponent_kernel(psi: &LimitDistribution, order: usize) -> TruncatedSeries {
    let f = factorials(order);
    let m = moments(psi, order);
    let mut c: Vec<f64> = (0..=order).map(|k| m[k] * (1.0 - k as f64) / f[k]).collect();
    c[0] -= 1.0;
    TruncatedSeries::new(&c, order)
}

/// The Cramér exponent `A(w(z))`; starts `-m_2 z^2 / 2`.
pub fn exponent_series(psi: &LimitDistribution, order: usize) -> Result<TruncatedSeries> {
    let w = omega_series(psi, order)?;
    exponent_kernel(psi, order).compose(&w)
}

/// Series of `L''(w) * ((L'(w) - L'(0)) / (L''(0) w))^(-m)` to `order`.
fn bracket_series(psi: &LimitDistribution, m: usize, order: usize) -> Result<TruncatedSeries> {
    second_moment(psi)?;
    let f = factorials(order + 2);
    let mom = moments(psi, order + 2);
    let second: Vec<f64> = (0..=order).map(|k| mom[k + 2] / f[k]).collect();
    let second = TruncatedSeries::new(&second, order);
    let quotient = normalized_slope_quotient(&mom, &f, order);
    Ok(second.mul(&quotient.powf(-(m as f64))?))
}

/// `j`-th derivative at `w = 0` of the bracket defining `u_m`.
pub fn bracket_derivative(psi: &LimitDistribution, m: usize, j: usize) -> Result<f64> {
    let b = bracket_series(psi, m, j)?;
    Ok(b.coeff(j) * factorials(j)[j])
}

/// Cramér coefficient `u_m = -(1/m) [w^(m-2)] bracket`, for `3 <= m <= order - 2`.
///
/// The bracket's `(m-2)`-th derivative at zero carries an extra `(m-2)!` relative to
/// the coefficient; the coefficient is what makes `sum u_m z^m` equal the exponent
/// series plus `m_2 z^2 / 2`.
pub fn cramer_u(psi: &LimitDistribution, m: usize, order: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::Domain(format!("Cramér coefficients start at m = 3, got {m}")));
    }
    if m + 2 > order {
        return Err(Error::OrderTooHigh { requested: m, max: order.saturating_sub(2) });
    }
    let b = bracket_series(psi, m, m - 2)?;
    Ok(-b.coeff(m - 2) / m as f64)
}

/// `Q(z) = sum_{m=3}^{order-2} u_m z^m` as a series of order `order - 2`.
pub fn cramer_q_series(psi: &LimitDistribution, order: usize) -> Result<TruncatedSeries> {
    let top = order.saturating_sub(2);
    let mut c = vec![0.0; top + 1];
    for (m, slot) in c.iter_mut().enumerate().skip(3) {
        *slot = cramer_u(psi, m, order)?;
    }
    Ok(TruncatedSeries::new(&c, top))
}

/// Evaluator for the Cramér series of a fixed limit distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CramerSeries {
    q: TruncatedSeries,
    second_moment: f64,
}

impl CramerSeries {
    pub fn new(psi: &LimitDistribution, order: usize) -> Result<Self> {
        let second_moment = second_moment(psi)?;
        Ok(Self { q: cramer_q_series(psi, order)?, second_moment })
    }

    /// `u_m`, or zero above the truncation.
    pub fn u(&self, m: usize) -> f64 {
        self.q.coeff(m)
    }

    pub fn max_index(&self) -> usize {
        self.q.order()
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn series(&self) -> &TruncatedSeries {
        &self.q
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.q.eval(xi)
    }
}
