//! Multi-altitude Walker-like constellation construction and circular-orbit propagation.
//!
//! Orbits are circular, so the mean anomaly doubles as the argument of latitude
//! and positions follow from the plain Rz(raan) * Rx(inclination) rotation of the
//! in-plane circle. Ground assets rotate with the Earth at the sidereal rate by
//! default; a zero rate pins them in the inertial frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Physical constants used throughout the simulator. Values are fixed at
/// construction; [`PhysicalConstants::default`] gives the standard set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Earth radius in km.
    pub earth_radius_km: f64,
    /// Gravitational parameter in km^3/s^2.
    pub gravitational_parameter: f64,
    /// Sidereal rotation rate in rad/s.
    pub earth_rotation_rate: f64,
    /// Boltzmann constant in J/K.
    pub boltzmann: f64,
    /// Speed of light in m/s.
    pub light_speed: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            earth_radius_km: 6371.0,
            gravitational_parameter: 398_600.4418,
            earth_rotation_rate: 7.292_115_855_3e-5,
            boltzmann: 1.380_649e-23,
            light_speed: 299_792_458.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.earth_radius_km,
            self.gravitational_parameter,
            self.earth_rotation_rate,
            self.boltzmann,
            self.light_speed,
        ];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("physical constants must be strictly positive"));
        }
        Ok(())
    }
}

/// Normalizes an angle to [0, 2*pi).
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TWO_PI);
    if r == TWO_PI {
        0.0
    } else {
        r
    }
}

/// Walker-like constellation description.
///
/// `plane_altitudes_km` is cycled across planes in listed order, so a list with
/// one entry per plane pins each plane's altitude explicitly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstellationSpec {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub phasing: i64,
    /// Inclination in radians, in [0, pi].
    pub inclination: f64,
    pub plane_altitudes_km: Vec<f64>,
    pub raan_ref: f64,
    pub anomaly_ref: f64,
    /// In-plane slot spacing: `false` uses (i-1)*P*2pi/T, `true` the
    /// conventional Walker spacing (i-1)*2pi/T with phasing (m-1)*F*2pi/(P*T).
    #[serde(default)]
    pub conventional_phasing: bool,
}

impl ConstellationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_planes == 0 || self.sats_per_plane == 0 {
            return Err(Error::invalid("num_planes and sats_per_plane must be >= 1"));
        }
        if self.plane_altitudes_km.is_empty() || self.plane_altitudes_km.iter().any(|a| *a <= 0.0) {
            return Err(Error::invalid("plane altitudes must be positive and nonempty"));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.inclination) {
            return Err(Error::invalid("inclination must lie in [0, pi]"));
        }
        Ok(())
    }

    pub fn altitude_of_plane(&self, m: usize) -> f64 {
        self.plane_altitudes_km[m % self.plane_altitudes_km.len()]
    }
}

/// One satellite's orbital elements. Indices are zero-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub semi_major_axis_km: f64,
    pub raan: f64,
    pub anomaly_at_epoch: f64,
    pub inclination: f64,
    pub plane_index: usize,
    pub slot_index: usize,
}

impl OrbitalElements {
    /// Mean motion in rad/s.
    pub fn mean_motion(&self, consts: &PhysicalConstants) -> f64 {
        (consts.gravitational_parameter / self.semi_major_axis_km.powi(3)).sqrt()
    }

    /// Orbital period 2*pi*sqrt(a^3/mu) in seconds.
    pub fn period(&self, consts: &PhysicalConstants) -> f64 {
        TWO_PI / self.mean_motion(consts)
    }
}

/// A time-stamped position in the Earth-centered inertial frame (km).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub position: Vec3,
    pub timestamp: f64,
}

/// Ground asset kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssetKind {
    Gs,
    Hap,
}

/// A ground station or high-altitude platform at fixed geodetic coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundAsset {
    /// Latitude in radians, |lat| <= pi/2.
    pub latitude: f64,
    /// Longitude in radians.
    pub longitude: f64,
    /// Altitude above the surface in km.
    pub altitude_km: f64,
    pub kind: AssetKind,
}

impl GroundAsset {
    pub fn new(latitude: f64, longitude: f64, altitude_km: f64, kind: AssetKind) -> Result<Self> {
        if latitude.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("latitude must satisfy |lat| <= pi/2"));
        }
        if altitude_km < 0.0 {
            return Err(Error::invalid("altitude must be >= 0"));
        }
        Ok(GroundAsset { latitude, longitude, altitude_km, kind })
    }
}

fn slot_anomaly(spec: &ConstellationSpec, m: usize, i: usize, sats_in_plane: usize) -> f64 {
    let t = sats_in_plane as f64;
    let p = spec.num_planes as f64;
    let f = spec.phasing as f64;
    let u = if spec.conventional_phasing {
        spec.anomaly_ref + (m as f64) * f * TWO_PI / (p * t) + (i as f64) * TWO_PI / t
    } else {
        spec.anomaly_ref + (m as f64) * f * TWO_PI / t + (i as f64) * p * TWO_PI / t
    };
    wrap_angle(u)
}

/// Builds the full P*T-element constellation from a spec.
pub fn build_constellation(
    spec: &ConstellationSpec,
    consts: &PhysicalConstants,
) -> Result<Vec<OrbitalElements>> {
    spec.validate()?;
    let sizes = vec![spec.sats_per_plane; spec.num_planes];
    Ok(build_planes(spec, consts, &sizes))
}

/// Builds a constellation with `total` satellites distributed across the
/// spec's planes as evenly as possible (earlier planes take the remainder).
pub fn build_constellation_sized(
    spec: &ConstellationSpec,
    consts: &PhysicalConstants,
    total: usize,
) -> Result<Vec<OrbitalElements>> {
    spec.validate()?;
    if total == 0 {
        return Err(Error::invalid("total satellite count must be >= 1"));
    }
    let p = spec.num_planes;
    let base = total / p;
    let rem = total % p;
    let sizes: Vec<usize> = (0..p).map(|m| base + usize::from(m < rem)).collect();
    if sizes.iter().any(|s| *s == 0) {
        return Err(Error::invalid("every plane must receive at least one satellite"));
    }
    Ok(build_planes(spec, consts, &sizes))
}

fn build_planes(
    spec: &ConstellationSpec,
    consts: &PhysicalConstants,
    sizes: &[usize],
) -> Vec<OrbitalElements> {
    let mut out = Vec::with_capacity(sizes.iter().sum());
    for (m, &count) in sizes.iter().enumerate() {
        let raan = wrap_angle(spec.raan_ref + (m as f64) * TWO_PI / (spec.num_planes as f64));
        let a = consts.earth_radius_km + spec.altitude_of_plane(m);
        for i in 0..count {
            out.push(OrbitalElements {
                semi_major_axis_km: a,
                raan,
                anomaly_at_epoch: slot_anomaly(spec, m, i, count),
                inclination: spec.inclination,
                plane_index: m,
                slot_index: i,
            });
        }
    }
    out
}

/// Propagates a satellite to time `t` (seconds from epoch).
pub fn propagate(elem: &OrbitalElements, t: f64, consts: &PhysicalConstants) -> BodyState {
    let u = wrap_angle(elem.anomaly_at_epoch + elem.mean_motion(consts) * t);
    let a = elem.semi_major_axis_km;
    let in_plane = Vec3::new(a * u.cos(), a * u.sin(), 0.0);
    let position = in_plane.rotate_x(elem.inclination).rotate_z(elem.raan);
    BodyState { position, timestamp: t }
}

/// ECI position of a ground asset at time `t`, rotating about the z-axis at
/// `rotation_rate` rad/s (pass 0 to pin the asset in the inertial frame).
pub fn ground_position_at_rate(asset: &GroundAsset, t: f64, consts: &PhysicalConstants, rotation_rate: f64) -> BodyState {
    let r = consts.earth_radius_km + asset.altitude_km;
    let ang = asset.longitude + rotation_rate * t;
    let position = Vec3::new(
        r * asset.latitude.cos() * ang.cos(),
        r * asset.latitude.cos() * ang.sin(),
        r * asset.latitude.sin(),
    );
    BodyState { position, timestamp: t }
}

/// ECI position of a ground asset rotating at the sidereal rate.
pub fn ground_position(asset: &GroundAsset, t: f64, consts: &PhysicalConstants) -> BodyState {
    ground_position_at_rate(asset, t, consts, consts.earth_rotation_rate)
}
