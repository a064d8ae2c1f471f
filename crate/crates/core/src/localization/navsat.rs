use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::sensors::GnssFix;

/// WGS-84 equatorial radius (m).
pub const EARTH_RADIUS: f64 = 6_378_137.0;

/// Anchor of the local Cartesian frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeoDatum {
    pub latitude0: f64,
    pub longitude0: f64,
    /// Rotation from east-north axes into the local frame (rad).
    pub yaw_offset: f64,
}

impl Default for GeoDatum {
    fn default() -> Self {
        // Silverstone circuit
        Self {
            latitude0: 52.0786,
            longitude0: -1.0169,
            yaw_offset: 0.0,
        }
    }
}

/// Equirectangular projection of a fix into the local frame, then rotated
/// by the datum yaw offset.
pub fn navsat_to_local(fix: &GnssFix, datum: Option<&GeoDatum>) -> Result<Vec2> {
    let d = datum.ok_or(Error::DatumUninitialized)?;
    if !(fix.latitude.abs() <= 90.0 && fix.longitude.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "fix ({}, {}) is not a geodetic position",
            fix.latitude, fix.longitude
        )));
    }
    let lat0 = d.latitude0.to_radians();
    let mut dlon = fix.longitude - d.longitude0;
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let east = dlon.to_radians() * EARTH_RADIUS * lat0.cos();
    let north = (fix.latitude - d.latitude0).to_radians() * EARTH_RADIUS;
    Ok(Vec2::new(east, north).rotate(d.yaw_offset))
}

/// Exact inverse of [`navsat_to_local`]: (latitude, longitude) in degrees.
pub fn local_to_navsat(p: Vec2, datum: &GeoDatum) -> (f64, f64) {
    let enu = p.rotate(-datum.yaw_offset);
    let lat0 = datum.latitude0.to_radians();
    let lat = datum.latitude0 + (enu.y / EARTH_RADIUS).to_degrees();
    let mut lon = datum.longitude0 + (enu.x / (EARTH_RADIUS * lat0.cos())).to_degrees();
    if lon > 180.0 {
        lon -= 360.0;
    } else if lon <= -180.0 {
        lon += 360.0;
    }
    (lat.clamp(-90.0, 90.0), lon)
}

/// Holds the datum, either configured up front or latched from the first
/// fix. Once set it never changes.
#[derive(Debug, Clone, Default)]
pub struct NavsatTransform {
    datum: Option<GeoDatum>,
}

impl NavsatTransform {
    pub fn with_datum(datum: GeoDatum) -> Self {
        Self { datum: Some(datum) }
    }

    pub fn datum(&self) -> Option<&GeoDatum> {
        self.datum.as_ref()
    }

    pub fn to_local(&mut self, fix: &GnssFix, yaw_offset: f64) -> Result<Vec2> {
        if self.datum.is_none() {
            self.datum = Some(GeoDatum {
                latitude0: fix.latitude,
                longitude0: fix.longitude,
                yaw_offset,
            });
        }
        navsat_to_local(fix, self.datum.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fix(lat: f64, lon: f64) -> GnssFix {
        GnssFix {
            timestamp: 0.0,
            latitude: lat,
            longitude: lon,
        }
    }

    #[test]
    fn datum_maps_to_origin() {
        let d = GeoDatum::default();
        let p = navsat_to_local(&fix(d.latitude0, d.longitude0), Some(&d)).unwrap();
        assert_eq!(p, Vec2::ZERO);
    }

    #[test]
    fn small_latitude_step() {
        let d = GeoDatum {
            latitude0: 10.0,
            longitude0: 20.0,
            yaw_offset: 0.0,
        };
        let p = navsat_to_local(&fix(10.0 + 1e-5, 20.0), Some(&d)).unwrap();
        // 1e-5 · π/180 · 6378137
        let expected = 1e-5 * std::f64::consts::PI / 180.0 * 6_378_137.0;
        assert!((p.y - expected).abs() < 1e-9);
        assert!((p.y - 1.113).abs() < 1e-3);
        assert_eq!(p.x, 0.0);
    }

    #[test]
    fn missing_datum_is_error() {
        assert!(matches!(
            navsat_to_local(&fix(0.0, 0.0), None),
            Err(Error::DatumUninitialized)
        ));
    }

    #[test]
    fn rejects_impossible_fix() {
        let d = GeoDatum::default();
        assert!(navsat_to_local(&fix(91.0, 0.0), Some(&d)).is_err());
        assert!(navsat_to_local(&fix(f64::NAN, 0.0), Some(&d)).is_err());
        assert!(navsat_to_local(&fix(0.0, f64::INFINITY), Some(&d)).is_err());
    }

    #[test]
    fn first_fix_latches_datum() {
        let mut t = NavsatTransform::default();
        assert_eq!(t.to_local(&fix(1.0, 2.0), 0.0).unwrap(), Vec2::ZERO);
        let p = t.to_local(&fix(1.0 + 1e-5, 2.0), 0.0).unwrap();
        assert!(p.y > 1.0);
        assert_eq!(t.datum().unwrap().latitude0, 1.0);
    }

    proptest! {
        #[test]
        fn inverse_consistent_within_a_kilometre(
            lat0 in -70.0..70.0f64, lon0 in -179.0..179.0f64, yaw in -3.1..3.1f64,
            x in -1000.0..1000.0f64, y in -1000.0..1000.0f64,
        ) {
            let d = GeoDatum { latitude0: lat0, longitude0: lon0, yaw_offset: yaw };
            let (lat, lon) = local_to_navsat(Vec2::new(x, y), &d);
            let back = navsat_to_local(&fix(lat, lon), Some(&d)).unwrap();
            prop_assert!(back.dist(Vec2::new(x, y)) < 1e-6);
        }
    }
}
