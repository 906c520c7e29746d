//! Walker star constellations.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `P` planes of `S` satellites each, ascending nodes spread over half a
/// turn (a star pattern), with the usual Walker phasing `F` between
/// neighbouring planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerStar {
    pub planes: u32,
    pub sats_per_plane: u32,
    /// Orbit inclination in radians; `pi/2` for a polar star.
    pub inclination: f64,
    pub phasing: u32,
}

impl WalkerStar {
    pub fn new(planes: u32, sats_per_plane: u32, phasing: u32) -> Result<Self> {
        Self::with_inclination(planes, sats_per_plane, phasing, PI / 2.0)
    }

    pub fn with_inclination(planes: u32, sats_per_plane: u32, phasing: u32, inclination: f64) -> Result<Self> {
        const OP: &str = "WalkerStar";
        if planes == 0 || sats_per_plane == 0 {
            return Err(Error::domain(OP, "planes and satellites per plane must be positive"));
        }
        if phasing >= planes {
            return Err(Error::domain(OP, format!("phasing {phasing} must be below the plane count {planes}")));
        }
        if !(0.0..=PI).contains(&inclination) {
            return Err(Error::domain(OP, format!("inclination {inclination} rad outside [0, pi]")));
        }
        Ok(Self { planes, sats_per_plane, inclination, phasing })
    }

    pub fn total(&self) -> usize {
        (self.planes * self.sats_per_plane) as usize
    }

    /// Unit position vectors of every satellite at epoch.
    pub fn directions(&self) -> Vec<[f64; 3]> {
        let (p, s) = (self.planes as f64, self.sats_per_plane as f64);
        let (si, ci) = self.inclination.sin_cos();
        let mut out = Vec::with_capacity(self.total());
        for k in 0..self.planes {
            let raan = PI * k as f64 / p;
            let (so, co) = raan.sin_cos();
            let offset = 2.0 * PI * (self.phasing * k) as f64 / (p * s);
            for j in 0..self.sats_per_plane {
                let (su, cu) = (2.0 * PI * j as f64 / s + offset).sin_cos();
                out.push([co * cu - so * su * ci, so * cu + co * su * ci, su * si]);
            }
        }
        out
    }
}

/// Parses `walker-star:P/S/F`, optionally followed by `@inclination_deg`.
impl FromStr for WalkerStar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain("WalkerStar::from_str", format!("expected walker-star:P/S/F, got {s:?}"));
        let body = s.trim().strip_prefix("walker-star:").ok_or_else(bad)?;
        let (pattern, incl) = match body.split_once('@') {
            Some((p, i)) => (p, Some(i.trim().parse::<f64>().map_err(|_| bad())?)),
            None => (body, None),
        };
        let parts: Vec<u32> = pattern
            .split('/')
            .map(|x| x.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [p, n, f] = parts[..] else { return Err(bad()) };
        match incl {
            Some(deg) => Self::with_inclination(p, n, f, deg.to_radians()),
            None => Self::new(p, n, f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pattern_string() {
        let w: WalkerStar = "walker-star:60/25/1".parse().unwrap();
        assert_eq!((w.planes, w.sats_per_plane, w.phasing), (60, 25, 1));
        assert_eq!(w.inclination, PI / 2.0);
        let w: WalkerStar = "walker-star:12/10/0@86.4".parse().unwrap();
        assert!((w.inclination - 86.4f64.to_radians()).abs() < 1e-15);
        for bad in ["walker:1/2/0", "walker-star:1/2", "walker-star:0/5/0", "walker-star:4/5/4", "walker-star:a/b/c"] {
            assert!(bad.parse::<WalkerStar>().is_err(), "{bad}");
        }
    }

    #[test]
    fn lattice_is_on_unit_sphere_without_duplicates() {
        let w = WalkerStar::new(6, 8, 1).unwrap();
        let d = w.directions();
        assert_eq!(d.len(), 48);
        for (i, a) in d.iter().enumerate() {
            assert!(((a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) - 1.0).abs() < 1e-14);
            for b in &d[i + 1..] {
                let dist = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>();
                assert!(dist > 1e-6);
            }
        }
    }

    #[test]
    fn polar_planes_pass_over_the_poles() {
        let w = WalkerStar::new(4, 4, 0).unwrap();
        // satellite j = 1 of every plane sits at argument of latitude pi/2
        for k in 0..4 {
            assert!((w.directions()[k * 4 + 1][2] - 1.0).abs() < 1e-14);
        }
    }
}
