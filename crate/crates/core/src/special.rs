//! Special functions: normal tails, the scaled tail `F`, the gamma function and
//! Poisson tails.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Switch point between the power series and the continued fraction.
const SERIES_CUTOFF: f64 = 3.0;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `erf(x)` for `0 <= x <= ~2.2` via the positive-term series
/// `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum (2x^2)^n x / (1*3*...*(2n+1))`.
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// Mills ratio `R(t) = Q(t) / phi(t)` for `t >= SERIES_CUTOFF` by Laplace's continued
/// fraction `1/(t + 1/(t + 2/(t + 3/(t + ...))))`, evaluated with modified Lentz.
fn mills_ratio_cf(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = t;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..20_000 {
        let a = n as f64;
        d = t + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = t + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Upper tail `Q(t) = P(N(0,1) >= t)`.
///
/// Underflows to zero beyond `t ~ 38.4`; use [`ln_normal_tail`] there.
pub fn normal_tail(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t < 0.0 {
        return 1.0 - normal_tail(-t);
    }
    if t <= SERIES_CUTOFF {
        0.5 - 0.5 * erf_series(t / std::f64::consts::SQRT_2)
    } else {
        ln_normal_tail(t).exp()
    }
}

/// `ln Q(t)`, finite for all finite `t`.
pub fn ln_normal_tail(t: f64) -> f64 {
    if t <= SERIES_CUTOFF {
        normal_tail(t).ln()
    } else {
        -0.5 * t * t - LN_SQRT_2PI + mills_ratio_cf(t).ln()
    }
}

/// Scaled tail `F(t) = exp(t^2/2) * Q(t)`, asymptotic to `1/(t sqrt(2 pi))`.
pub fn scaled_normal_tail(t: f64) -> f64 {
    if t <= SERIES_CUTOFF {
        (0.5 * t * t).exp() * normal_tail(t)
    } else {
        mills_ratio_cf(t) / SQRT_2PI
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    // z is the shifted argument x - 1
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

fn exact_factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ln |Gamma(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// `Gamma(x)`; exact at positive integers up to 20. Poles at non-positive integers.
pub fn gamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Err(Error::GammaPole(x));
    }
    if x == x.floor() && (1.0..=21.0).contains(&x) {
        return Ok(exact_factorial(x as u32 - 1));
    }
    if x < 0.5 {
        return Ok(PI / ((PI * x).sin() * gamma(1.0 - x)?));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(SQRT_2PI * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z))
}

/// Checks the embedded Lanczos coefficients against known values of `Gamma`.
pub fn gamma_self_test() -> Result<()> {
    let cases = [
        (0.5, PI.sqrt()),
        (1.5, 0.5 * PI.sqrt()),
        (0.7, 1.298_055_332_647_558),
        (2.5, 1.329_340_388_179_137),
        (3.7, 4.170_651_783_796_604),
        (9.5, 119_292.461_994_609_01),
    ];
    for (x, expected) in cases {
        let got = gamma(x)?;
        if ((got - expected) / expected).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "gamma self-test failed at {x}: {got} vs {expected}"
            )));
        }
    }
    Ok(())
}

/// `P(Poisson(lambda) >= k0)` summed in log space from the smaller side.
pub fn poisson_tail(lambda: f64, k0: i64) -> f64 {
    if k0 <= 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let ln_term = |k: i64| -lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0);
    if k0 as f64 > lambda {
        let mut term = ln_term(k0).exp();
        let mut sum = 0.0;
        let mut k = k0;
        while term > 0.0 {
            sum += term;
            k += 1;
            term *= lambda / k as f64;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum
    } else {
        let mut k = k0 - 1;
        let mut term = ln_term(k).exp();
        let mut lower = 0.0;
        while k >= 0 {
            lower += term;
            term *= k as f64 / lambda;
            k -= 1;
            if term < 1e-17 * lower {
                break;
            }
        }
        1.0 - lower
    }
}
