//! Coordinate conventions.
//!
//! The photo-detector is centred at the origin of a Cartesian frame and lies
//! in the `y–z` plane (`x = 0`). The drone's laser source sits at `r` and the
//! beam direction is given by the spherical angles `(θ, φ)` measured in a
//! frame parallel to the detector frame but centred at `r`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Guard for `|cos θ|`, `|sin φ|` and `|sin φ cos θ|`.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Position of the laser source, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl Position {
    pub const fn new(rx: f64, ry: f64, rz: f64) -> Self {
        Self { rx, ry, rz }
    }

    pub fn norm(&self) -> f64 {
        self.rx.hypot(self.ry).hypot(self.rz)
    }

    /// Translate within the detector plane; shifts the footprint by the same amount.
    pub fn offset(&self, dy: f64, dz: f64) -> Self {
        Self::new(self.rx, self.ry + dy, self.rz + dz)
    }
}

/// Beam orientation: azimuth `theta ∈ [0, 2π)` and polar angle `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Orientation {
    pub theta: f64,
    pub phi: f64,
}

impl Orientation {
    /// Builds an orientation with `theta` wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta: wrap_angle(theta), phi }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Position,
    pub orientation: Orientation,
}

impl Pose {
    pub const fn new(position: Position, orientation: Orientation) -> Self {
        Self { position, orientation }
    }
}

/// Intersection `(0, fy, fz)` of the beam line with the detector plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootprintCenter {
    pub fy: f64,
    pub fz: f64,
}

impl FootprintCenter {
    /// Distance `u` from the detector centre.
    pub fn distance(&self) -> f64 {
        self.fy.hypot(self.fz)
    }
}

/// Unit beam direction `(sin φ cos θ, sin φ sin θ, cos φ)`.
pub fn direction_from_angles(o: Orientation) -> [f64; 3] {
    let (st, ct) = o.theta.sin_cos();
    let (sp, cp) = o.phi.sin_cos();
    [sp * ct, sp * st, cp]
}

/// Angle between the beam line and the detector plane, `arcsin |sin φ cos θ|`.
pub fn incidence_angle(o: Orientation) -> Result<f64> {
    let s = (o.phi.sin() * o.theta.cos()).abs();
    if s < DEGENERACY_TOL {
        return Err(Error::degenerate(format!(
            "beam parallel to detector plane (θ={}, φ={})",
            o.theta, o.phi
        )));
    }
    Ok(s.min(1.0).asin())
}

/// Footprint centre `(r_y − r_x tan θ, r_z − r_x cot φ / cos θ)`.
pub fn footprint_center(p: &Pose) -> Result<FootprintCenter> {
    let Pose { position: r, orientation: o } = *p;
    let ct = o.theta.cos();
    let sp = o.phi.sin();
    if ct.abs() < DEGENERACY_TOL || sp.abs() < DEGENERACY_TOL {
        return Err(Error::degenerate(format!(
            "footprint undefined for θ={}, φ={}",
            o.theta, o.phi
        )));
    }
    if r.rx == 0.0 {
        return Err(Error::degenerate("laser source lies in the detector plane"));
    }
    let tan_t = o.theta.sin() / ct;
    let cot_p = o.phi.cos() / sp;
    Ok(FootprintCenter {
        fy: r.ry - r.rx * tan_t,
        fz: r.rz - r.rx * cot_p / ct,
    })
}

/// Mean orientation that points the beam line through the detector centre.
///
/// The azimuth follows the `μ_x > 0` / otherwise branches
/// (`atan(μ_y/μ_x)` or `π + atan(μ_y/μ_x)`); the polar angle is
/// `acos(μ_z/‖μ‖)`, which is the value for which the footprint of the mean
/// pose lands on the origin.
pub fn tracking_orientation(mu_r: &Position) -> Result<Orientation> {
    if mu_r.rx == 0.0 {
        return Err(Error::DegenerateTracking(
            "mean position has μ_x = 0; tracking azimuth is undefined".into(),
        ));
    }
    let base = (mu_r.ry / mu_r.rx).atan();
    let theta = if mu_r.rx > 0.0 { base } else { PI + base };
    let phi = (mu_r.rz / mu_r.norm()).clamp(-1.0, 1.0).acos();
    Ok(Orientation::new(theta, phi))
}

/// `(R sin β cos α, R sin β sin α, R cos β)`.
pub fn spherical_mean_position(range: f64, alpha: f64, beta: f64) -> Position {
    let (sb, cb) = beta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    Position::new(range * sb * ca, range * sb * sa, range * cb)
}
