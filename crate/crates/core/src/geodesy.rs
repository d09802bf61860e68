//! Geodetic, ECEF and local ENU conversions on a reference ellipsoid.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::geometry::wrap_angle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesyError {
    #[error("latitude {0} rad outside [-pi/2, pi/2]")]
    InvalidLatitude(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("invalid ellipsoid: equatorial {equatorial} m, polar {polar} m")]
    InvalidEllipsoid { equatorial: f64, polar: f64 },
    /// The closed form loses precision this close to the rotation axis.
    #[error("point within {0} m of the rotation axis")]
    NearSingularAxis(f64),
}

/// Reference ellipsoid given by its equatorial and polar radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub equatorial_radius: f64,
    pub polar_radius: f64,
}

impl Ellipsoid {
    pub const WGS84: Ellipsoid = Ellipsoid {
        equatorial_radius: 6_378_137.0,
        polar_radius: 6_356_752.314245,
    };

    pub fn new(equatorial_radius: f64, polar_radius: f64) -> Result<Self, GeodesyError> {
        if !(polar_radius.is_finite() && polar_radius > 0.0 && equatorial_radius >= polar_radius)
            || !equatorial_radius.is_finite()
        {
            return Err(GeodesyError::InvalidEllipsoid {
                equatorial: equatorial_radius,
                polar: polar_radius,
            });
        }
        Ok(Self {
            equatorial_radius,
            polar_radius,
        })
    }

    /// First eccentricity squared, `(a^2 - b^2) / a^2`.
    pub fn e2(&self) -> f64 {
        let (a, b) = (self.equatorial_radius, self.polar_radius);
        (a * a - b * b) / (a * a)
    }

    /// Second eccentricity squared, `(a^2 - b^2) / b^2`.
    pub fn ep2(&self) -> f64 {
        let (a, b) = (self.equatorial_radius, self.polar_radius);
        (a * a - b * b) / (b * b)
    }
}

impl Default for Ellipsoid {
    fn default() -> Self {
        Self::WGS84
    }
}

/// Latitude and longitude in radians, height in meters above the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodeticCoord {
    pub lat: f64,
    pub lon: f64,
    pub height: f64,
}

impl GeodeticCoord {
    /// Longitude is wrapped into `(-pi, pi]`.
    pub fn new(lat: f64, lon: f64, height: f64) -> Result<Self, GeodesyError> {
        if !(lat.is_finite() && lon.is_finite() && height.is_finite()) {
            return Err(GeodesyError::NonFinite);
        }
        if lat.abs() > FRAC_PI_2 {
            return Err(GeodesyError::InvalidLatitude(lat));
        }
        Ok(Self {
            lat,
            lon: wrap_angle(lon),
            height,
        })
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, height: f64) -> Result<Self, GeodesyError> {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), height)
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat.to_degrees()
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon.to_degrees()
    }
}

/// Earth-centred, earth-fixed Cartesian position, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcefCoord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefCoord {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// Loose sanity bound: within 100 km of the ellipsoid radii.
    pub fn is_near_surface(&self, ell: &Ellipsoid) -> bool {
        let r = self.to_vector().norm();
        r >= ell.polar_radius - 100e3 && r <= ell.equatorial_radius + 100e3
    }
}

/// East, north, up offsets in meters from a reference point.
pub type EnuVector = Vector3<f64>;

/// Distance from the ellipsoid surface to the polar axis along the normal.
pub fn prime_vertical_radius(lat: f64, ell: &Ellipsoid) -> f64 {
    let (a, b) = (ell.equatorial_radius, ell.polar_radius);
    let (s, c) = lat.sin_cos();
    a * a / (a * a * c * c + b * b * s * s).sqrt()
}

pub fn geodetic_to_ecef(g: &GeodeticCoord, ell: &Ellipsoid) -> EcefCoord {
    let n = prime_vertical_radius(g.lat, ell);
    let (a, b) = (ell.equatorial_radius, ell.polar_radius);
    let (slat, clat) = g.lat.sin_cos();
    let (slon, clon) = g.lon.sin_cos();
    EcefCoord::new(
        (n + g.height) * clat * clon,
        (n + g.height) * clat * slon,
        (b * b / (a * a) * n + g.height) * slat,
    )
}

/// Columns are the east, north and up unit vectors of `reference` in ECEF.
pub fn enu_to_ecef_rotation(reference: &GeodeticCoord) -> Matrix3<f64> {
    let (slat, clat) = reference.lat.sin_cos();
    let (slon, clon) = reference.lon.sin_cos();
    Matrix3::new(
        -slon, -slat * clon, clat * clon, //
        clon, -slat * slon, clat * slon, //
        0.0, clat, slat,
    )
}

pub fn enu_to_ecef(p: &EnuVector, reference: &GeodeticCoord, ell: &Ellipsoid) -> EcefCoord {
    let origin = geodetic_to_ecef(reference, ell).to_vector();
    EcefCoord::from_vector(enu_to_ecef_rotation(reference) * p + origin)
}

pub fn ecef_to_enu(e: &EcefCoord, reference: &GeodeticCoord, ell: &Ellipsoid) -> EnuVector {
    let origin = geodetic_to_ecef(reference, ell).to_vector();
    enu_to_ecef_rotation(reference).transpose() * (e.to_vector() - origin)
}

/// Points closer than this to the Z axis (in both X and Y) use the iterative path.
pub const AXIS_GUARD: f64 = 1.0;

/// ECEF to geodetic.
///
/// Uses Heikkinen's closed form, switching to an iterative solution for
/// points within [`AXIS_GUARD`] of the rotation axis.
pub fn ecef_to_geodetic(e: &EcefCoord, ell: &Ellipsoid) -> GeodeticCoord {
    match heikkinen(e, ell) {
        Ok(g) => g,
        Err(_) => iterative_near_axis(e, ell),
    }
}

/// Heikkinen's closed-form ECEF to geodetic conversion.
pub fn heikkinen(e: &EcefCoord, ell: &Ellipsoid) -> Result<GeodeticCoord, GeodesyError> {
    if !(e.x.is_finite() && e.y.is_finite() && e.z.is_finite()) {
        return Err(GeodesyError::NonFinite);
    }
    if e.x.abs() < AXIS_GUARD && e.y.abs() < AXIS_GUARD {
        return Err(GeodesyError::NearSingularAxis(AXIS_GUARD));
    }
    let (a, b) = (ell.equatorial_radius, ell.polar_radius);
    let e2 = ell.e2();
    let ep2 = ell.ep2();
    let z = e.z;
    let p = e.x.hypot(e.y);

    let f = 54.0 * b * b * z * z;
    let g = p * p + (1.0 - e2) * z * z - e2 * (a * a - b * b);
    let c = e2 * e2 * f * p * p / (g * g * g);
    let s = (1.0 + c + (c * c + 2.0 * c).sqrt()).cbrt();
    let k = s + 1.0 + 1.0 / s;
    let big_p = f / (3.0 * k * k * g * g);
    let q = (1.0 + 2.0 * e2 * e2 * big_p).sqrt();
    let r0 = -(big_p * e2 * p) / (1.0 + q)
        + (0.5 * a * a * (1.0 + 1.0 / q)
            - big_p * (1.0 - e2) * z * z / (q * (1.0 + q))
            - 0.5 * big_p * p * p)
            .sqrt();
    let t = p - e2 * r0;
    let u = (t * t + z * z).sqrt();
    let v = (t * t + (1.0 - e2) * z * z).sqrt();
    let z0 = b * b * z / (a * v);

    let height = u * (1.0 - b * b / (a * v));
    let lat = (z + ep2 * z0).atan2(p);
    let lon = e.y.atan2(e.x);
    Ok(GeodeticCoord { lat, lon, height })
}

/// Fixed-point iteration on the parametric latitude, valid down to the axis.
fn iterative_near_axis(e: &EcefCoord, ell: &Ellipsoid) -> GeodeticCoord {
    let (a, b) = (ell.equatorial_radius, ell.polar_radius);
    let p = e.x.hypot(e.y);
    let lon = if p == 0.0 { 0.0 } else { e.y.atan2(e.x) };
    if p == 0.0 {
        let lat = if e.z >= 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
        return GeodeticCoord {
            lat,
            lon,
            height: e.z.abs() - b,
        };
    }
    let e2 = ell.e2();
    let ep2 = ell.ep2();
    let mut beta = (a * e.z).atan2(b * p);
    let mut lat = 0.0;
    for _ in 0..10 {
        let (sb, cb) = beta.sin_cos();
        lat = (e.z + ep2 * b * sb * sb * sb).atan2(p - e2 * a * cb * cb * cb);
        beta = (b * lat.sin()).atan2(a * lat.cos());
    }
    // height from the component along the normal, stable near the poles
    let n = prime_vertical_radius(lat, ell);
    let (slat, clat) = lat.sin_cos();
    let height = p * clat + e.z * slat - a * a / n;
    GeodeticCoord {
        lat,
        lon: if lon > PI { lon - 2.0 * PI } else { lon },
        height,
    }
}
