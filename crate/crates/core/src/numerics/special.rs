//! Error function and the zeroth-order modified Bessel function of the
//! first kind, implemented from their series and asymptotic expansions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Below this magnitude `erf` uses the everywhere-positive series
/// `erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!`, which is the
/// Maclaurin series of `e^{x²} erf(x)` and has no cancellation.
const ERF_SERIES_LIMIT: f64 = 3.0;

/// Above this magnitude `bessel_i0` switches to the Hankel asymptotic series.
const I0_SERIES_LIMIT: f64 = 15.0;

/// Error function, `erf(x) = 2/√π ∫₀ˣ e^{-t²} dt`.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x <= ERF_SERIES_LIMIT {
        erf_series(x)
    } else {
        1.0 - erfc_continued_fraction(x)
    }
}

/// Complementary error function `1 − erf(x)`, accurate in the upper tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > ERF_SERIES_LIMIT {
        erfc_continued_fraction(x)
    } else {
        1.0 - erf(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= two_x2 / f64::from(2 * n + 1);
        sum += term;
        if term <= sum * 1e-17 || n > 500 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x * x).exp() * sum
}

/// `erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`,
/// evaluated with the modified Lentz algorithm. Valid for `x > 0`; converges
/// in a handful of terms once `x ≳ 2`.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = f64::from(n) * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Exponentially scaled Bessel function `e^{-|x|} I₀(x)`. Never overflows.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let ax = x.abs();
    if ax.is_nan() {
        return f64::NAN;
    }
    if ax <= I0_SERIES_LIMIT {
        i0_series(ax) * (-ax).exp()
    } else {
        i0_asymptotic_scaled(ax)
    }
}

/// Modified Bessel function of the first kind of order zero.
///
/// Returns [`Error::Overflow`] once `I₀(x)` exceeds the largest finite `f64`
/// (`|x|` a little above 713).
pub fn bessel_i0(x: f64) -> Result<f64> {
    let ax = x.abs();
    if ax <= I0_SERIES_LIMIT {
        return Ok(i0_series(ax));
    }
    // I₀(x) = e^{x} · scaled; split the exponent so that e^{x} alone may
    // overflow while the product is still representable.
    let scaled = i0_asymptotic_scaled(ax);
    let log_value = ax + scaled.ln();
    let value = log_value.exp();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow("bessel_i0"))
    }
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    sum
}

fn i0_asymptotic_scaled(x: f64) -> f64 {
    // Σ ((2k−1)!!)² / (k! (8x)^k), truncated at the smallest term.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = f64::from(k);
        let next = term * (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= sum * 1e-17 {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}
