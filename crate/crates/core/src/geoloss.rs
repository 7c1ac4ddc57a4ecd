//! Deterministic geometric loss: exact integral over the detector, the
//! rotated-ellipse bounds, their closed-form approximations and the
//! mean-coefficient approximation used by the statistical model.

use std::f64::consts::PI;

use crate::beam::{BeamParams, ObliqueBeam};
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::numerics::{erf, DiskQuadrature};

/// Circular photo-detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Aperture radius (m).
    pub a: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self { a: 0.1 }
    }
}

impl DetectorParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("detector radius must be positive, got {a}")));
        }
        Ok(Self { a })
    }
}

/// Parameters of the closed-form loss approximations for one pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    pub a0: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_mean: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    /// Footprint distance from the detector centre (m).
    pub u: f64,
    /// Beam width `w(L)` (m).
    pub w_l: f64,
}

/// Non-geometric factors of the channel coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelInputs {
    /// Detector responsivity.
    pub eta: f64,
    /// Path loss.
    pub hp: f64,
    /// Turbulence loss.
    pub ha: f64,
}

/// Loss in dB, `−10 log₁₀ h`. Zero maps to `+∞`.
pub fn loss_db(h: f64) -> f64 {
    if h <= 0.0 {
        f64::INFINITY
    } else {
        -10.0 * h.log10()
    }
}

/// Textual dB value; infinities are written as `inf`.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() && db > 0.0 {
        "inf".to_string()
    } else {
        format!("{db}")
    }
}

fn warn_if_near_field(ob: &ObliqueBeam, det: &DetectorParams) {
    if !ob.far_field_holds(det.a) {
        log::warn!(
            "far-field intensity model used outside its validity range (L = {} m, |f| = {} m, a = {} m)",
            ob.distance,
            ob.footprint.distance(),
            det.a
        );
    }
}

/// Evaluates the loss variants of one pose with a shared quadrature rule.
#[derive(Debug, Clone, Copy)]
pub struct LossModel {
    pub beam: BeamParams,
    pub detector: DetectorParams,
    pub quadrature: DiskQuadrature,
}

impl LossModel {
    pub fn new(beam: BeamParams, detector: DetectorParams, rel_tol: f64) -> Self {
        Self { beam, detector, quadrature: DiskQuadrature::with_tol(rel_tol) }
    }

    pub fn oblique(&self, pose: &Pose) -> Result<ObliqueBeam> {
        let ob = ObliqueBeam::new(pose, &self.beam)?;
        warn_if_near_field(&ob, &self.detector);
        Ok(ob)
    }

    pub fn exact(&self, pose: &Pose) -> Result<f64> {
        self.exact_for(&self.oblique(pose)?)
    }

    /// Integral of the detector-plane intensity over the aperture.
    pub fn exact_for(&self, ob: &ObliqueBeam) -> Result<f64> {
        let h = self.quadrature.integrate(self.detector.a, |y, z| ob.intensity(y, z))?;
        Ok(h.clamp(0.0, 1.0))
    }

    pub fn bounds(&self, pose: &Pose) -> Result<(f64, f64)> {
        self.bounds_for(&self.oblique(pose)?)
    }

    /// Lower and upper bound: the contour ellipse aligned with (lower) or
    /// across (upper) the line from the footprint to the detector centre.
    ///
    /// Both are evaluated in the frame rotated so that the footprint sits at
    /// `(u, 0)`; the disk is invariant under that rotation.
    pub fn bounds_for(&self, ob: &ObliqueBeam) -> Result<(f64, f64)> {
        let u = ob.footprint.distance();
        let inv_w2 = 2.0 / (ob.width * ob.width);
        let peak = ob.peak();
        let steep = 1.0 / ob.ellipse.rho_min;
        let shallow = 1.0 / ob.ellipse.rho_max;
        let a = self.detector.a;
        let low = self.quadrature.integrate(a, |y, z| {
            let dy = y - u;
            peak * (-inv_w2 * (steep * dy * dy + shallow * z * z)).exp()
        })?;
        let upp = self.quadrature.integrate(a, |y, z| {
            let dy = y - u;
            peak * (-inv_w2 * (shallow * dy * dy + steep * z * z)).exp()
        })?;
        Ok((low.clamp(0.0, 1.0), upp.clamp(0.0, 1.0)))
    }

    pub fn approx_params(&self, pose: &Pose) -> Result<ApproxParams> {
        Ok(approx_params_for(&ObliqueBeam::new(pose, &self.beam)?, &self.detector))
    }
}

/// Exact geometric loss at the default tolerance.
pub fn exact_loss(p: &Pose, b: &BeamParams, d: &DetectorParams) -> Result<f64> {
    LossModel::new(*b, *d, crate::numerics::DEFAULT_REL_TOL).exact(p)
}

pub fn bound_lower(p: &Pose, b: &BeamParams, d: &DetectorParams) -> Result<f64> {
    LossModel::new(*b, *d, crate::numerics::DEFAULT_REL_TOL).bounds(p).map(|b| b.0)
}

pub fn bound_upper(p: &Pose, b: &BeamParams, d: &DetectorParams) -> Result<f64> {
    LossModel::new(*b, *d, crate::numerics::DEFAULT_REL_TOL).bounds(p).map(|b| b.1)
}

pub fn approx_params(p: &Pose, b: &BeamParams, d: &DetectorParams) -> Result<ApproxParams> {
    Ok(approx_params_for(&ObliqueBeam::new(p, b)?, d))
}

/// `ν = (a/w)·√(π/(2ρ))` and `k = √π ρ erf(ν) / (2ν e^{−ν²})` for one axis.
fn axis_coefficients(a: f64, w: f64, rho: f64) -> (f64, f64, f64) {
    let nu = a / w * (PI / (2.0 * rho)).sqrt();
    let e = erf(nu);
    let k = PI.sqrt() * rho * e / (2.0 * nu * (-nu * nu).exp());
    (nu, e, k)
}

pub fn approx_params_for(ob: &ObliqueBeam, d: &DetectorParams) -> ApproxParams {
    let (nu_min, erf_min, k_min) = axis_coefficients(d.a, ob.width, ob.ellipse.rho_min);
    let (nu_max, erf_max, k_max) = axis_coefficients(d.a, ob.width, ob.ellipse.rho_max);
    ApproxParams {
        a0: erf_min * erf_max,
        k_min,
        k_max,
        k_mean: 0.5 * (k_min + k_max),
        nu_min,
        nu_max,
        u: ob.footprint.distance(),
        w_l: ob.width,
    }
}

/// `A₀ exp(−2u²/(k w²))` for a given equivalent-width factor `k`.
fn gaussian_pointing(ap: &ApproxParams, k: f64) -> f64 {
    ap.a0 * (-2.0 * ap.u * ap.u / (k * ap.w_l * ap.w_l)).exp()
}

/// Approximate lower and upper bound.
pub fn approx_bounds(ap: &ApproxParams) -> (f64, f64) {
    (gaussian_pointing(ap, ap.k_min), gaussian_pointing(ap, ap.k_max))
}

/// Approximation with the mean equivalent-width factor.
pub fn approx_mean(ap: &ApproxParams) -> f64 {
    gaussian_pointing(ap, ap.k_mean)
}

/// `h = η h_p h_a h_g`.
pub fn channel_coefficient(c: &ChannelInputs, hg: f64) -> f64 {
    c.eta * c.hp * c.ha * hg
}
