//! Quantiles of the Fisher-Snedecor distribution.
//!
//! The F(d1, d2) CDF is a regularized incomplete beta function,
//! `F(x) = I_t(d1/2, d2/2)` with `t = d1 x / (d1 x + d2)`, so the quantile is
//! obtained by inverting `I` and mapping `t` back to `x`. The inverse keeps both
//! `t` and `1 - t` at full relative precision because `x` is a ratio of the two.

use std::f64::consts::PI;

use crate::error::{Error, Result};

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

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` for `x` in `[0, 1]`.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn initial_guess(p: f64, a: f64, b: f64) -> f64 {
    let x = if a >= 1.0 && b >= 1.0 {
        let pp = if p < 0.5 { p } else { 1.0 - p };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.307_53 + t * 0.270_61) / (1.0 + t * (0.992_29 + t * 0.044_81)) - t;
        if p < 0.5 {
            z = -z;
        }
        let al = (z * z - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        let w = z * (al + h).sqrt() / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        a / (a + b * (2.0 * w).exp())
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let u = (b * lnb).exp() / b;
        let w = t + u;
        if p < t / w {
            (a * w * p).powf(1.0 / a)
        } else {
            1.0 - (b * w * (1.0 - p)).powf(1.0 / b)
        }
    };
    if x.is_finite() {
        x.clamp(1e-300, 1.0 - f64::EPSILON)
    } else {
        0.5
    }
}

/// Safeguarded Newton iteration on `I_x(a, b) = p`, bracketed by bisection.
fn solve_inc_beta(p: f64, a: f64, b: f64) -> f64 {
    let ln_b = ln_beta(a, b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = initial_guess(p, a, b);
    for _ in 0..500 {
        let f = inc_beta(x, a, b) - p;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_b).exp();
        let mut next = x - f / density;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= f64::MIN_POSITIVE {
            return next;
        }
        x = next;
    }
    x
}

/// Inverse of the regularized incomplete beta function.
///
/// Returns `(x, 1 - x)` where the smaller of the two has been solved for
/// directly, so neither suffers cancellation.
pub fn inv_inc_beta(p: f64, a: f64, b: f64) -> (f64, f64) {
    let x = solve_inc_beta(p, a, b);
    if x > 0.5 {
        // I_x(a, b) = p  <=>  I_{1-x}(b, a) = 1 - p
        let y = solve_inc_beta(1.0 - p, b, a);
        (1.0 - y, y)
    } else {
        (x, 1.0 - x)
    }
}

/// CDF of the F(d1, d2) distribution.
pub fn fisher_cdf(x: f64, d1: u32, d2: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let (d1, d2) = (f64::from(d1), f64::from(d2));
    inc_beta(d1 * x / (d1 * x + d2), 0.5 * d1, 0.5 * d2)
}

/// Quantile (inverse CDF) of the F(d1, d2) distribution at `prob`.
pub fn fisher_quantile(prob: f64, d1: u32, d2: u32) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(prob));
    }
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidConfig(format!(
            "F distribution needs positive degrees of freedom, got ({d1}, {d2})"
        )));
    }
    let (t, one_minus_t) = inv_inc_beta(prob, 0.5 * f64::from(d1), 0.5 * f64::from(d2));
    Ok(f64::from(d2) * t / (f64::from(d1) * one_minus_t))
}
