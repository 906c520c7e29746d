//! Spherical geometry of the two-sphere network model.
//!
//! The typical user sits at `(0, 0, R_E)` on the Earth sphere and satellites
//! live on a concentric shell of radius `R_S = R_E + h`. Only satellites on
//! the spherical cap above the user's tangent plane are visible, which
//! bounds every slant range to `[h, sqrt(R_S^2 - R_E^2)]`. Lengths are in
//! kilometres and angles in radians throughout.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Relative tolerance for a point to count as lying on the shell.
const SHELL_TOL: f64 = 1e-9;
/// Relative tolerance on the cap boundary `z >= R_E`.
const CAP_TOL: f64 = 1e-9;
/// Slant ranges this far outside `[R_min, R_max]` (relative) are clamped.
const SLANT_TOL: f64 = 1e-12;

/// Earth and satellite shell radii with the derived cap quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellGeometry {
    earth_radius: f64,
    altitude: f64,
    shell_radius: f64,
    max_slant: f64,
    cap_area: f64,
}

impl ShellGeometry {
    pub fn new(earth_radius: f64, altitude: f64) -> Result<Self> {
        let max_slant = max_slant_range(earth_radius, altitude)?;
        let cap_area = cap_area(earth_radius, altitude)?;
        Ok(Self {
            earth_radius,
            altitude,
            shell_radius: earth_radius + altitude,
            max_slant,
            cap_area,
        })
    }

    /// Shell at `altitude` km above a spherical Earth of radius 6371 km.
    pub fn earth(altitude: f64) -> Result<Self> {
        Self::new(EARTH_RADIUS_KM, altitude)
    }

    pub fn earth_radius(&self) -> f64 {
        self.earth_radius
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn shell_radius(&self) -> f64 {
        self.shell_radius
    }

    /// Shortest slant range, reached at the sub-satellite point.
    pub fn min_slant(&self) -> f64 {
        self.altitude
    }

    /// Slant range to a satellite on the horizon.
    pub fn max_slant(&self) -> f64 {
        self.max_slant
    }

    /// Area of the visible cap, `2 pi h R_S`.
    pub fn cap_area(&self) -> f64 {
        self.cap_area
    }

    /// `2 pi lambda R_S / R_E`, the radial weight of the cap measure: a
    /// density `lambda` of satellites puts `weight * r dr` of them at slant
    /// ranges in `[r, r + dr]`.
    pub fn radial_weight(&self, density: f64) -> f64 {
        2.0 * PI * density * self.shell_radius / self.earth_radius
    }

    /// Area of the part of the cap with slant range at most `r`,
    /// `pi (R_S/R_E) (r^2 - R_min^2)`.
    pub fn cap_area_within(&self, r: f64) -> f64 {
        let r = r.clamp(self.min_slant(), self.max_slant);
        PI * self.shell_radius / self.earth_radius * (r * r - self.altitude * self.altitude)
    }

    /// Mean number of satellites on the cap for a shell density `lambda`.
    pub fn visible_count(&self, density: f64) -> f64 {
        density * self.cap_area
    }

    /// Density giving `count` satellites on the cap on average.
    pub fn density_for_count(&self, count: f64) -> f64 {
        count / self.cap_area
    }

    /// Checks `r` against `[R_min, R_max]`, clamping round-off excursions.
    pub fn check_slant(&self, op: &'static str, r: f64) -> Result<f64> {
        let lo = self.min_slant();
        let hi = self.max_slant;
        if r.is_nan() || r < lo * (1.0 - SLANT_TOL) || r > hi * (1.0 + SLANT_TOL) {
            return Err(Error::domain(
                op,
                format!("slant range {r} km outside [{lo}, {hi}] km"),
            ));
        }
        Ok(r.clamp(lo, hi))
    }

    /// Sine of the elevation angle seen by the user for a satellite at slant
    /// range `r`: `(R_S^2 - R_E^2)/(2 r R_E) - r/(2 R_E)`.
    pub fn elevation_sine(&self, r: f64) -> Result<f64> {
        let r = self.check_slant("elevation_sine", r)?;
        let re = self.earth_radius;
        let rs = self.shell_radius;
        let s = (rs * rs - re * re) / (2.0 * r * re) - r / (2.0 * re);
        Ok(s.clamp(0.0, 1.0))
    }

    /// Slant range at which a satellite appears at elevation `elevation`
    /// (radians, in `[0, pi/2]`).
    pub fn slant_at_elevation(&self, elevation: f64) -> Result<f64> {
        if !(0.0..=PI / 2.0).contains(&elevation) {
            return Err(Error::domain(
                "slant_at_elevation",
                format!("elevation {elevation} rad outside [0, pi/2]"),
            ));
        }
        let re = self.earth_radius;
        let rs = self.shell_radius;
        let se = elevation.sin();
        // positive root of r^2 + 2 R_E sin(el) r - (R_S^2 - R_E^2) = 0
        let disc = re * re * se * se + rs * rs - re * re;
        let r = disc.sqrt() - re * se;
        Ok(r.clamp(self.min_slant(), self.max_slant))
    }

    /// Sine of the off-nadir angle at the satellite between its boresight
    /// (nadir) and the direction of the user.
    pub fn offnadir_sine(&self, slant: f64) -> Result<f64> {
        let r = self.check_slant("offnadir_sine", slant)?;
        let h = self.altitude;
        let re = self.earth_radius;
        // h^2 - r^2 = -(r - h)(r + h); the factored form keeps full relative
        // precision near nadir, where the field of a narrow beam is steep
        let excess = r - h;
        let d = -excess * (r + h);
        let num = -d * (d + 4.0 * re * (h + re));
        let den = 4.0 * r * r * (h + re) * (h + re);
        let mut radicand = num / den;
        if radicand < 0.0 {
            if radicand < -1e-12 {
                return Err(Error::domain(
                    "offnadir_sine",
                    format!("negative radicand {radicand} at slant {r}"),
                ));
            }
            radicand = 0.0;
        }
        Ok(radicand.sqrt())
    }

    /// Slant range at which the user sees the satellite under off-nadir
    /// sine `sin_theta`; `None` past the horizon.
    pub fn slant_at_offnadir(&self, sin_theta: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&sin_theta) {
            return None;
        }
        let rs = self.shell_radius;
        let re = self.earth_radius;
        let disc = re * re - rs * rs * sin_theta * sin_theta;
        if disc < 0.0 {
            return None;
        }
        let cos_theta = (1.0 - sin_theta * sin_theta).sqrt();
        Some((rs * cos_theta - disc.sqrt()).clamp(self.min_slant(), self.max_slant))
    }

    /// Slant range from the typical user to a point on the visible cap.
    pub fn slant_from_cap_point(&self, point: [f64; 3]) -> Result<f64> {
        let norm = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
        if ((norm - self.shell_radius) / self.shell_radius).abs() > SHELL_TOL {
            return Err(Error::domain(
                "slant_from_cap_point",
                format!("point at radius {norm} km is off the {} km shell", self.shell_radius),
            ));
        }
        if point[2] < self.earth_radius * (1.0 - CAP_TOL) {
            return Err(Error::domain(
                "slant_from_cap_point",
                format!("point with z = {} km lies below the visible cap", point[2]),
            ));
        }
        let dz = point[2] - self.earth_radius;
        let r = (point[0] * point[0] + point[1] * point[1] + dz * dz).sqrt();
        Ok(r.clamp(self.min_slant(), self.max_slant))
    }
}

fn check_positive(op: &'static str, earth_radius: f64, altitude: f64) -> Result<()> {
    if !(earth_radius > 0.0 && earth_radius.is_finite()) {
        return Err(Error::domain(op, format!("earth radius must be positive, got {earth_radius}")));
    }
    if !(altitude > 0.0 && altitude.is_finite()) {
        return Err(Error::domain(op, format!("altitude must be positive, got {altitude}")));
    }
    Ok(())
}

/// `sqrt(R_S^2 - R_E^2)`, evaluated as `sqrt(h (h + 2 R_E))` to avoid
/// cancellation.
pub fn max_slant_range(earth_radius: f64, altitude: f64) -> Result<f64> {
    check_positive("max_slant_range", earth_radius, altitude)?;
    Ok((altitude * (altitude + 2.0 * earth_radius)).sqrt())
}

/// Area of the visible cap, `2 pi h (R_E + h)`.
pub fn cap_area(earth_radius: f64, altitude: f64) -> Result<f64> {
    check_positive("cap_area", earth_radius, altitude)?;
    Ok(2.0 * PI * altitude * (earth_radius + altitude))
}
