//! Statistical model of the geometric loss under Gaussian pose jitter.
//!
//! With perfect tracking the footprint centre is, to first order in the
//! perturbations, a zero-mean bivariate Gaussian with covariance `Σ`. Its
//! distance from the detector centre is then Hoyt distributed, and with
//! `A₀` and `k_mean` frozen at the mean pose the loss
//! `A₀ exp(−2u²/(k_mean w²))` has a closed-form density.

use crate::beam::{BeamParams, ObliqueBeam};
use crate::error::{Error, Result};
use crate::geoloss::{approx_params_for, DetectorParams};
use crate::geometry::{tracking_orientation, wrap_angle, FootprintCenter, Orientation, Pose, Position};
use crate::numerics::{bessel_i0_scaled, eig_sym2, integrate_adaptive, SymMatrix2};
use crate::rng::TrialStream;

/// Guard on `cos μ_θ` and `sin μ_φ` for the linearisation constants.
const TRACKING_TOL: f64 = 1e-9;

/// Standard deviations of the five pose variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseSigmas {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub phi: f64,
}

impl PoseSigmas {
    /// Equal position deviations `sigma_p` (m) and orientation deviations `sigma_o` (rad).
    pub fn isotropic(sigma_p: f64, sigma_o: f64) -> Self {
        Self { x: sigma_p, y: sigma_p, z: sigma_p, theta: sigma_o, phi: sigma_o }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            x: self.x * t,
            y: self.y * t,
            z: self.z * t,
            theta: self.theta * t,
            phi: self.phi * t,
        }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.x, self.y, self.z, self.theta, self.phi]
    }
}

/// Independent Gaussian jitter around a perfectly tracked mean pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseDistribution {
    pub mu_r: Position,
    pub mu_omega: Orientation,
    pub sigma: PoseSigmas,
}

impl PoseDistribution {
    /// Mean orientation is derived from `mu_r` by the tracking rule.
    pub fn tracked(mu_r: Position, sigma: PoseSigmas) -> Result<Self> {
        let s = sigma.as_array();
        if s.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("standard deviations must be finite and ≥ 0, got {s:?}")));
        }
        let mu_omega = tracking_orientation(&mu_r)?;
        Ok(Self { mu_r, mu_omega, sigma })
    }

    pub fn mean_pose(&self) -> Pose {
        Pose::new(self.mu_r, self.mu_omega)
    }

    /// Pose displaced by `eps = (ε_x, ε_y, ε_z, ε_θ, ε_φ)`.
    pub fn perturbed(&self, eps: [f64; 5]) -> Pose {
        Pose::new(
            Position::new(self.mu_r.rx + eps[0], self.mu_r.ry + eps[1], self.mu_r.rz + eps[2]),
            Orientation { theta: wrap_angle(self.mu_omega.theta + eps[3]), phi: self.mu_omega.phi + eps[4] },
        )
    }

    /// Draws `eps` in the fixed order x, y, z, θ, φ.
    pub fn sample_perturbation(&self, stream: &mut TrialStream) -> [f64; 5] {
        let s = self.sigma.as_array();
        let mut eps = [0.0; 5];
        for (e, sigma) in eps.iter_mut().zip(s) {
            *e = stream.normal(sigma);
        }
        eps
    }

    pub fn with_sigma(&self, sigma: PoseSigmas) -> Self {
        Self { sigma, ..*self }
    }
}

pub fn sample_pose(d: &PoseDistribution, stream: &mut TrialStream) -> Pose {
    d.perturbed(d.sample_perturbation(stream))
}

/// First-order sensitivities `(c₁, …, c₅)` of the footprint centre.
pub fn tracking_constants(d: &PoseDistribution) -> Result<[f64; 5]> {
    let (st, ct) = d.mu_omega.theta.sin_cos();
    let (sp, cp) = d.mu_omega.phi.sin_cos();
    if ct.abs() < TRACKING_TOL || sp.abs() < TRACKING_TOL {
        return Err(Error::DegenerateTracking(format!(
            "linearisation constants are unbounded at μ_θ={}, μ_φ={}",
            d.mu_omega.theta, d.mu_omega.phi
        )));
    }
    let mx = d.mu_r.rx;
    let tan_t = st / ct;
    let cot_p = cp / sp;
    let c = [
        -tan_t,
        -mx / (ct * ct),
        mx / (sp * sp * ct),
        -mx * cot_p * tan_t / ct,
        -cot_p / ct,
    ];
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateTracking(format!("non-finite linearisation constants {c:?}")));
    }
    Ok(c)
}

/// Covariance `Σ` of the linearised footprint centre `(f_y, f_z)`.
pub fn covariance_sigma(d: &PoseDistribution) -> Result<SymMatrix2> {
    let [c1, c2, c3, c4, c5] = tracking_constants(d)?;
    let v = d.sigma;
    let (vx, vy, vz, vt, vp) = (v.x * v.x, v.y * v.y, v.z * v.z, v.theta * v.theta, v.phi * v.phi);
    Ok(SymMatrix2::new(
        vy + c1 * c1 * vx + c2 * c2 * vt,
        c1 * c5 * vx + c2 * c4 * vt,
        vz + c3 * c3 * vp + c4 * c4 * vt + c5 * c5 * vx,
    ))
}

/// First-order footprint `f_y = ε_y + c₁ε_x + c₂ε_θ`, `f_z = ε_z + c₃ε_φ + c₄ε_θ + c₅ε_x`.
pub fn linearized_footprint(d: &PoseDistribution, eps: [f64; 5]) -> Result<FootprintCenter> {
    let [c1, c2, c3, c4, c5] = tracking_constants(d)?;
    let [ex, ey, ez, et, ep] = eps;
    Ok(FootprintCenter { fy: ey + c1 * ex + c2 * et, fz: ez + c3 * ep + c4 * et + c5 * ex })
}

/// Hoyt (Nakagami-q) parameters of `u = ‖(f_y, f_z)‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoytParams {
    pub q: f64,
    pub omega: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

pub fn hoyt_params(sigma: SymMatrix2) -> Result<HoytParams> {
    if sigma.is_zero() {
        return Err(Error::invalid("covariance is zero: the footprint is deterministic"));
    }
    if !sigma.is_psd(1e-12) {
        return Err(Error::invalid(format!("covariance is not positive semidefinite: {sigma:?}")));
    }
    let (l1, l2) = eig_sym2(sigma);
    let l2 = l2.max(0.0);
    let q = (l2 / l1).sqrt();
    if q == 0.0 {
        return Err(Error::invalid("covariance is rank one; Hoyt parameter q would be 0"));
    }
    Ok(HoytParams { q, omega: l1 + l2, lambda1: l1, lambda2: l2 })
}

/// Closed-form density of the approximate geometric loss on `(0, A₀]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoLossPdf {
    pub hoyt: HoytParams,
    pub a0: f64,
    pub k_mean: f64,
    pub w_l: f64,
    /// `ϖ = (1+q²) k_mean w² / (4qΩ)`.
    pub varpi: f64,
}

impl GeoLossPdf {
    pub fn new(hoyt: HoytParams, a0: f64, k_mean: f64, w_l: f64) -> Self {
        let q = hoyt.q;
        let varpi = (1.0 + q * q) * k_mean * w_l * w_l / (4.0 * q * hoyt.omega);
        Self { hoyt, a0, k_mean, w_l, varpi }
    }

    /// Model for a pose distribution, with `A₀`, `k_mean` and `w(L)` taken
    /// at the mean pose.
    pub fn for_distribution(d: &PoseDistribution, beam: &BeamParams, det: &DetectorParams) -> Result<Self> {
        let hoyt = hoyt_params(covariance_sigma(d)?)?;
        let ap = approx_params_for(&ObliqueBeam::new(&d.mean_pose(), beam)?, det);
        Ok(Self::new(hoyt, ap.a0, ap.k_mean, ap.w_l))
    }

    /// Exponent of `x/A₀` and Bessel-argument coefficient:
    /// `((1+q²)ϖ/(2q), (1−q²)ϖ/(2q))`.
    fn shape(&self) -> (f64, f64) {
        let q = self.hoyt.q;
        let a = (1.0 + q * q) * self.varpi / (2.0 * q);
        let b = (1.0 - q * q) * self.varpi / (2.0 * q);
        (a, b)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        pdf_hg(x, self)
    }

    /// `P(h ≥ x)`, integrated in `t = −ln(x/A₀)` where the integrand
    /// `ϖ e^{−(a−b)t} e^{−bt}I₀(bt)` is smooth and bounded.
    pub fn exceedance(&self, x: f64) -> f64 {
        if x >= self.a0 {
            return 0.0;
        }
        if x <= 0.0 {
            return 1.0;
        }
        let (a, b) = self.shape();
        let decay = a - b;
        let t_max = -(x / self.a0).ln();
        // beyond t_tail the remaining mass is below 1e-17
        let t_tail = (40.0 + (1.0 / decay).ln().max(0.0)) / decay;
        let upper = t_max.min(t_tail);
        if b == 0.0 {
            return -(-decay * upper).exp_m1();
        }
        let varpi = self.varpi;
        let mass = integrate_adaptive(
            |t| varpi * (-decay * t).exp() * bessel_i0_scaled(b * t),
            0.0,
            upper,
            1e-14,
            1e-12,
        )
        .unwrap_or_else(|e| match e {
            Error::Quadrature { best, .. } => best,
            _ => f64::NAN,
        });
        mass.clamp(0.0, 1.0)
    }

    /// `P(lo ≤ h < hi)`.
    pub fn prob_between(&self, lo: f64, hi: f64) -> f64 {
        (self.exceedance(lo) - self.exceedance(hi)).max(0.0)
    }

    /// Draw from the model: `u² = g₁² + g₂²` with `gᵢ ~ N(0, λᵢ)`.
    pub fn sample(&self, stream: &mut TrialStream) -> f64 {
        let g1 = stream.normal(self.hoyt.lambda1.sqrt());
        let g2 = stream.normal(self.hoyt.lambda2.sqrt());
        let u2 = g1 * g1 + g2 * g2;
        self.a0 * (-2.0 * u2 / (self.k_mean * self.w_l * self.w_l)).exp()
    }
}

/// Density of the approximate loss.
///
/// Evaluated as `(ϖ/A₀)·(x/A₀)^{qϖ−1}·e^{−z}I₀(z)` with
/// `z = −((1−q²)ϖ/(2q)) ln(x/A₀)`, which is algebraically identical to the
/// textbook form and never overflows.
pub fn pdf_hg(x: f64, p: &GeoLossPdf) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invalid(format!("loss density is defined for x > 0, got {x}")));
    }
    if x > p.a0 {
        return Ok(0.0);
    }
    if x < 1e-300 * p.a0 {
        return Ok(0.0);
    }
    let (a, b) = p.shape();
    let ell = if x == p.a0 { 0.0 } else { (x / p.a0).ln() };
    let z = -b * ell;
    Ok(p.varpi / p.a0 * ((a - b - 1.0) * ell).exp() * bessel_i0_scaled(z))
}

/// Density for equal eigenvalues: `(ϱ/A₀)(x/A₀)^{ϱ−1}`.
pub fn pdf_hg_rayleigh(x: f64, varrho: f64, a0: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invalid(format!("loss density is defined for x > 0, got {x}")));
    }
    if !(varrho > 0.0) {
        return Err(Error::invalid(format!("ϱ must be positive, got {varrho}")));
    }
    if x > a0 || x < 1e-300 * a0 {
        return Ok(0.0);
    }
    Ok(varrho / a0 * (x / a0).powf(varrho - 1.0))
}

/// `ϱ = k_mean w² / (4(σ_p² + μ_x² σ_o²))`.
pub fn rayleigh_varrho(k_mean: f64, w_l: f64, sigma_p: f64, sigma_o: f64, mu_x: f64) -> f64 {
    k_mean * w_l * w_l / (4.0 * (sigma_p * sigma_p + mu_x * mu_x * sigma_o * sigma_o))
}

/// Spread of the quantities the statistical model freezes at the mean pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenParamSpread {
    pub a0_cv: f64,
    pub k_mean_cv: f64,
    /// Coefficient of variation of `u²`, for comparison.
    pub u2_cv: f64,
}

/// Empirical coefficients of variation of `A₀`, `k_mean` and `u²` over `n` sampled poses.
pub fn frozen_parameter_spread(
    d: &PoseDistribution,
    beam: &BeamParams,
    det: &DetectorParams,
    n: u64,
    seed: u64,
) -> Result<FrozenParamSpread> {
    let mut a0 = Vec::with_capacity(n as usize);
    let mut km = Vec::with_capacity(n as usize);
    let mut u2 = Vec::with_capacity(n as usize);
    for i in 0..n {
        let pose = sample_pose(d, &mut TrialStream::new(seed, i));
        let ap = approx_params_for(&ObliqueBeam::new(&pose, beam)?, det);
        a0.push(ap.a0);
        km.push(ap.k_mean);
        u2.push(ap.u * ap.u);
    }
    Ok(FrozenParamSpread { a0_cv: cv(&a0), k_mean_cv: cv(&km), u2_cv: cv(&u2) })
}

fn cv(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    var.sqrt() / mean.abs()
}
