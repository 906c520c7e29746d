//! Constellation snapshots read from CSV.
//!
//! Two layouts are recognised from the header: Earth-centred Cartesian
//! `x_km,y_km,z_km`, or geodetic `lat_deg,lon_deg,alt_km` on a spherical
//! Earth. Extra columns are ignored.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Cartesian([usize; 3]),
    Geodetic([usize; 3]),
}

fn detect(headers: &csv::StringRecord) -> Option<Layout> {
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let all = |names: [&str; 3]| -> Option<[usize; 3]> { Some([find(names[0])?, find(names[1])?, find(names[2])?]) };
    all(["x_km", "y_km", "z_km"])
        .map(Layout::Cartesian)
        .or_else(|| all(["lat_deg", "lon_deg", "alt_km"]).map(Layout::Geodetic))
}

/// Satellite positions of one snapshot after the altitude-band filter,
/// stored as unit directions from the Earth's centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    directions: Vec<[f64; 3]>,
    /// Satellites are split at random into this many frequency groups and
    /// only one group is simulated.
    pub freq_groups: u32,
    /// Latitude of the user in radians. Each realization draws a fresh
    /// longitude.
    pub user_latitude: f64,
    /// Number of rows in the file before filtering.
    pub rows: usize,
}

impl Snapshot {
    pub fn load(
        path: impl AsRef<Path>,
        earth_radius: f64,
        altitude_band: (f64, f64),
        freq_groups: u32,
        user_latitude: f64,
    ) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|e| Error::Snapshot { path: name.clone(), msg: e.to_string() })?;
        Self::from_reader(file, &name, earth_radius, altitude_band, freq_groups, user_latitude)
    }

    pub fn from_reader<R: Read>(
        reader: R,
        name: &str,
        earth_radius: f64,
        altitude_band: (f64, f64),
        freq_groups: u32,
        user_latitude: f64,
    ) -> Result<Self> {
        let fail = |msg: String| Error::Snapshot { path: name.to_string(), msg };
        if freq_groups == 0 {
            return Err(Error::domain("Snapshot", "frequency groups must be positive"));
        }
        if !(altitude_band.0 <= altitude_band.1) {
            return Err(Error::domain("Snapshot", format!("empty altitude band {altitude_band:?}")));
        }
        if !(-90f64.to_radians()..=90f64.to_radians()).contains(&user_latitude) {
            return Err(Error::domain("Snapshot", format!("user latitude {user_latitude} rad outside [-pi/2, pi/2]")));
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| fail(e.to_string()))?.clone();
        let layout = detect(&headers)
            .ok_or_else(|| fail("header needs x_km,y_km,z_km or lat_deg,lon_deg,alt_km".into()))?;
        let mut directions = Vec::new();
        let mut rows = 0;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| fail(e.to_string()))?;
            rows += 1;
            let field = |i: usize| -> Result<f64> {
                let raw = rec.get(i).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| fail(format!("row {}: bad number {raw:?}", line + 2)))
            };
            let (dir, alt) = match layout {
                Layout::Cartesian(ix) => {
                    let p = [field(ix[0])?, field(ix[1])?, field(ix[2])?];
                    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    if norm == 0.0 {
                        return Err(fail(format!("row {}: satellite at the Earth's centre", line + 2)));
                    }
                    ([p[0] / norm, p[1] / norm, p[2] / norm], norm - earth_radius)
                }
                Layout::Geodetic(ix) => {
                    let (lat, lon) = (field(ix[0])?.to_radians(), field(ix[1])?.to_radians());
                    let (sl, cl) = lat.sin_cos();
                    let (so, co) = lon.sin_cos();
                    ([cl * co, cl * so, sl], field(ix[2])?)
                }
            };
            if alt >= altitude_band.0 && alt <= altitude_band.1 {
                directions.push(dir);
            }
        }
        Ok(Self { directions, freq_groups, user_latitude, rows })
    }

    /// Satellites left after the altitude filter.
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_both_layouts_and_filters_band() {
        let cart = "x_km,y_km,z_km\n6921,0,0\n0,7371,0\n0,0,-6920.5\n";
        let s = Snapshot::from_reader(cart.as_bytes(), "mem", 6371.0, (500.0, 600.0), 1, 0.0).unwrap();
        assert_eq!((s.len(), s.rows), (2, 3));
        assert_eq!(s.directions()[1], [0.0, 0.0, -1.0]);

        let geo = "name,lat_deg,lon_deg,alt_km\na,0,90,550\nb,90,0,550\nc,10,10,1200\n";
        let s = Snapshot::from_reader(geo.as_bytes(), "mem", 6371.0, (540.0, 570.0), 20, 0.3).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.directions()[0][1] - 1.0).abs() < 1e-15);
        assert!((s.directions()[1][2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = ["a,b,c\n1,2,3\n", "x_km,y_km,z_km\n1,2\n", "x_km,y_km,z_km\n1,2,zz\n", "x_km,y_km,z_km\n0,0,0\n"];
        for text in cases {
            let e = Snapshot::from_reader(text.as_bytes(), "mem", 6371.0, (0.0, 1e4), 1, 0.0).unwrap_err();
            assert!(matches!(e, Error::Snapshot { .. }), "{text:?}: {e}");
        }
        assert!(Snapshot::load("/nonexistent/file.csv", 6371.0, (0.0, 1.0), 1, 0.0).is_err());
        assert!(Snapshot::from_reader("x_km,y_km,z_km\n".as_bytes(), "mem", 6371.0, (0.0, 1.0), 0, 0.0).is_err());
    }
}
