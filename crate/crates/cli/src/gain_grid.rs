//! Normalised beam gain over the ground around the sub-satellite point.

use std::path::Path;

use leocov::{BeamGainModel, ShellGeometry};

use crate::error::{CliError, Result};

/// Writes `altitude_km,x_km,y_km,slant_km,gain_norm`, where `(x, y)` is the
/// ground position measured along the surface from the sub-satellite point.
/// Points below the satellite's horizon have an empty slant and gain.
pub fn write(path: &Path, altitudes: &[f64], g_max_db: f64, theta_3db_deg: f64, extent_km: f64, step_km: f64) -> Result<()> {
    let usage = |e: leocov::Error| CliError::Usage(e.to_string());
    if !(step_km > 0.0 && extent_km > 0.0) || extent_km / step_km > 2000.0 {
        return Err(CliError::Usage("need extent > 0 and 0 < step with at most 2000 steps per side".into()));
    }
    let g_max = 10f64.powf(g_max_db / 10.0);
    let beam = BeamGainModel::bessel(g_max, theta_3db_deg.to_radians()).map_err(usage)?;
    let io = |e: std::io::Error| CliError::Io { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["altitude_km", "x_km", "y_km", "slant_km", "gain_norm"]).map_err(|e| io(e.into()))?;
    let n = (extent_km / step_km).round() as i64;
    for &h in altitudes {
        let geom = ShellGeometry::earth(h).map_err(usage)?;
        let (re, rs) = (geom.earth_radius(), geom.shell_radius());
        for i in -n..=n {
            for j in -n..=n {
                let (x, y) = (i as f64 * step_km, j as f64 * step_km);
                let psi = x.hypot(y) / re;
                let r = (re * re + rs * rs - 2.0 * re * rs * psi.cos()).sqrt().max(geom.min_slant());
                let (slant, gain) = if psi < std::f64::consts::PI && r <= geom.max_slant() {
                    let g = beam.beam_gain(r, &geom).map_err(usage)?;
                    (r.to_string(), (g / g_max).to_string())
                } else {
                    (String::new(), String::new())
                };
                w.write_record([h.to_string(), x.to_string(), y.to_string(), slant, gain]).map_err(|e| io(e.into()))?;
            }
        }
    }
    w.flush().map_err(io)
}
