//! Gaussian beam: width with turbulence broadening, intensity in a plane
//! orthogonal to the beam, and the oblique intensity on the detector plane.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{footprint_center, incidence_angle, FootprintCenter, Orientation, Pose};

/// Minimum ratio `‖r‖ / max(‖f‖, ‖(y,z)‖)` for the far-field intensity model.
pub const VALIDITY_RATIO: f64 = 100.0;

/// Optical transmitter constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    /// Beam waist radius (m).
    pub w0: f64,
    /// Wavelength (m).
    pub wavelength: f64,
    /// Refractive-index structure parameter `C_n²` (m^(−2/3)).
    pub cn2: f64,
}

impl Default for BeamParams {
    /// 1 mm waist, 1550 nm, `C_n² = 1e−14`.
    fn default() -> Self {
        Self { w0: 1e-3, wavelength: 1550e-9, cn2: 1e-14 }
    }
}

impl BeamParams {
    pub fn new(w0: f64, wavelength: f64, cn2: f64) -> Result<Self> {
        if !(w0 > 0.0 && w0.is_finite()) {
            return Err(Error::invalid(format!("beam waist must be positive, got {w0}")));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(cn2 >= 0.0 && cn2.is_finite()) {
            return Err(Error::invalid(format!("C_n² must be non-negative, got {cn2}")));
        }
        Ok(Self { w0, wavelength, cn2 })
    }

    /// Optical wave number `k = 2π/λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Coherence length `ρ(L) = (0.55 C_n² k² L)^(−3/5)`; infinite without turbulence.
    pub fn coherence_length(&self, distance: f64) -> f64 {
        let k = self.wavenumber();
        (0.55 * self.cn2 * k * k * distance).powf(-0.6)
    }

    /// Beam width `w(L)` (1/e² intensity radius) at propagation distance `L`.
    pub fn beam_width(&self, distance: f64) -> f64 {
        let rho = self.coherence_length(distance);
        let broadening = 1.0 + 2.0 * self.w0 * self.w0 / (rho * rho);
        let z = self.wavelength * distance / (PI * self.w0 * self.w0);
        self.w0 * (1.0 + broadening * z * z).sqrt()
    }

    /// Power density at radial distance `l` from the axis in a plane
    /// orthogonal to the beam at distance `L`.
    pub fn intensity_orthogonal(&self, distance: f64, l: f64) -> f64 {
        let w = self.beam_width(distance);
        2.0 / (PI * w * w) * (-2.0 * l * l / (w * w)).exp()
    }
}

/// Coefficients of the elliptical intensity contours on the detector plane.
///
/// The exponent of the oblique intensity is
/// `−(2/w²)(ρ_y ỹ² + ρ_z z̃² + 2ρ_yz ỹ z̃)` with `(ỹ, z̃)` measured from the
/// footprint centre. `rho_min`/`rho_max` are the reciprocals of the larger
/// and smaller eigenvalue of that quadratic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseParams {
    pub rho_y: f64,
    pub rho_z: f64,
    pub rho_yz: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub psi: f64,
    /// Counter-clockwise rotation of the contour axes; zero when `rho_yz = 0`.
    pub contour_rotation: f64,
}

pub fn ellipse_params(o: Orientation) -> Result<EllipseParams> {
    let psi = incidence_angle(o)?;
    let (st, ct) = o.theta.sin_cos();
    let (sp, cp) = o.phi.sin_cos();
    let rho_y = cp * cp + sp * sp * ct * ct;
    let rho_z = sp * sp;
    let rho_yz = -cp * sp * st;
    let root = (rho_y - rho_z).hypot(2.0 * rho_yz);
    let rho_min = 2.0 / (rho_y + rho_z + root);
    // ρ_y + ρ_z − root cancels badly near grazing incidence; the product
    // ρ_min ρ_max = 1/sin²ψ gives the same value stably.
    let sin_psi = psi.sin();
    let rho_max = 1.0 / (rho_min * sin_psi * sin_psi);
    let contour_rotation = if rho_yz == 0.0 {
        0.0
    } else if rho_y == rho_z {
        0.25 * PI * rho_yz.signum()
    } else {
        0.5 * (2.0 * rho_yz / (rho_y - rho_z)).atan()
    };
    Ok(EllipseParams { rho_y, rho_z, rho_yz, rho_min, rho_max, psi, contour_rotation })
}

/// Everything needed to evaluate the detector-plane intensity of one pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObliqueBeam {
    pub footprint: FootprintCenter,
    pub ellipse: EllipseParams,
    /// Propagation distance `L = ‖r‖`.
    pub distance: f64,
    /// Beam width `w(L)`.
    pub width: f64,
}

impl ObliqueBeam {
    pub fn new(pose: &Pose, beam: &BeamParams) -> Result<Self> {
        let ellipse = ellipse_params(pose.orientation)?;
        let footprint = footprint_center(pose)?;
        let distance = pose.position.norm();
        Ok(Self { footprint, ellipse, distance, width: beam.beam_width(distance) })
    }

    pub fn sin_psi(&self) -> f64 {
        self.ellipse.psi.sin()
    }

    /// Peak density `2 sin ψ / (π w²)` at the footprint centre.
    pub fn peak(&self) -> f64 {
        2.0 * self.sin_psi() / (PI * self.width * self.width)
    }

    /// Whether the far-field conditions `‖r‖ ≫ ‖f‖` and `‖r‖ ≫ extent` hold.
    pub fn far_field_holds(&self, extent: f64) -> bool {
        self.distance >= VALIDITY_RATIO * self.footprint.distance().max(extent)
    }

    /// Intensity `I(y, z)` on the detector plane.
    pub fn intensity(&self, y: f64, z: f64) -> f64 {
        let EllipseParams { rho_y, rho_z, rho_yz, .. } = self.ellipse;
        let dy = y - self.footprint.fy;
        let dz = z - self.footprint.fz;
        let q = rho_y * dy * dy + rho_z * dz * dz + 2.0 * rho_yz * dy * dz;
        self.peak() * (-2.0 * q / (self.width * self.width)).exp()
    }
}

/// Power density at `(y, z)` on the detector plane for the given pose.
pub fn intensity_on_pd(point: (f64, f64), pose: &Pose, beam: &BeamParams) -> Result<f64> {
    let ob = ObliqueBeam::new(pose, beam)?;
    if !ob.far_field_holds(point.0.hypot(point.1)) {
        log::warn!(
            "far-field intensity model used outside its validity range (L = {} m, |f| = {} m)",
            ob.distance,
            ob.footprint.distance()
        );
    }
    Ok(ob.intensity(point.0, point.1))
}
