//! Deterministic quadrature: tensor Gauss–Legendre over a disk in polar
//! coordinates, and adaptive Gauss–Kronrod on an interval.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default relative tolerance for geometric-loss integrals.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

const MAX_GL_LEVEL: usize = 12;

/// Gauss–Legendre nodes and weights on [−1, 1] for `n = 2^level` points.
fn gauss_legendre(level: usize) -> &'static [(f64, f64)] {
    static CACHE: [OnceLock<Vec<(f64, f64)>>; MAX_GL_LEVEL + 1] =
        [const { OnceLock::new() }; MAX_GL_LEVEL + 1];
    CACHE[level].get_or_init(|| legendre_rule(1 << level))
}

/// Computes the n-point rule by Newton iteration on P_n from the Chebyshev
/// initial guesses.
fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut rule = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[n - 1 - i] = (x, w);
    }
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss–Legendre rule over a centered disk.
///
/// The radial order starts at `2^start_level` (angular order is twice the
/// radial order) and doubles until two successive estimates agree to
/// `rel_tol`. The agreement test is relative to the larger of the estimate
/// and its absolute-value integral, so integrands that cancel to zero
/// still terminate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskQuadrature {
    pub rel_tol: f64,
    pub start_level: usize,
    pub max_level: usize,
}

impl Default for DiskQuadrature {
    fn default() -> Self {
        Self::with_tol(DEFAULT_REL_TOL)
    }
}

impl DiskQuadrature {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            start_level: 3,
            max_level: 9,
        }
    }

    pub fn integrate<F>(&self, radius: f64, f: F) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        let max_level = self.max_level.min(MAX_GL_LEVEL - 1);
        let (mut prev, _) = polar_rule(radius, self.start_level, &f);
        let mut change = f64::INFINITY;
        for level in self.start_level + 1..=max_level {
            let (est, abs_est) = polar_rule(radius, level, &f);
            change = (est - prev).abs();
            if !est.is_finite() {
                return Err(Error::Quadrature { best: est, last_change: change });
            }
            if change <= self.rel_tol * est.abs().max(abs_est * 1e-3) {
                return Ok(est);
            }
            prev = est;
        }
        Err(Error::Quadrature { best: prev, last_change: change })
    }
}

/// Returns the estimate of ∬f and of ∬|f| with radial order `2^level`.
fn polar_rule<F>(radius: f64, level: usize, f: &F) -> (f64, f64)
where
    F: Fn(f64, f64) -> f64,
{
    let radial = gauss_legendre(level);
    let angular = gauss_legendre(level + 1);
    let half_r = 0.5 * radius;
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for &(xr, wr) in radial {
        let r = half_r * (xr + 1.0);
        let mut ring = 0.0;
        let mut abs_ring = 0.0;
        for &(xt, wt) in angular {
            let (s, c) = (PI * (xt + 1.0)).sin_cos();
            let v = f(r * c, r * s);
            ring += wt * v;
            abs_ring += wt * v.abs();
        }
        let w = wr * half_r * r * PI;
        sum += w * ring;
        abs_sum += w * abs_ring;
    }
    (sum, abs_sum)
}

/// `∬_{y²+z²≤radius²} f(y, z) dy dz` at the given relative tolerance.
pub fn disk_quadrature<F>(f: F, radius: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    DiskQuadrature::with_tol(rel_tol).integrate(radius, f)
}

// Gauss–Kronrod 7/15 abscissae and weights on [−1, 1] (non-negative half).
const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WK[7] * fc;
    let mut gauss = GK_WG[3] * fc;
    for j in 0..7 {
        let dx = h * GK_X[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += GK_WK[j] * pair;
        if j % 2 == 1 {
            gauss += GK_WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7, 15) integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// error is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    const MAX_SEGMENTS: usize = 4000;
    let (v, e) = gk15(&f, a, b);
    let mut segments = vec![(a, b, v, e)];
    loop {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature { best: total, last_change: err });
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature { best: total, last_change: err });
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (lo, hi, _, _) = segments.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}
