use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{sub, Vec3};
use crate::real::Real;
use crate::recon_io::SceneReconstruction;

pub const AZIMUTH_BINS: usize = 36;
const BIN_DEGREES: f64 = 360.0 / AZIMUTH_BINS as f64;
const MIN_HORIZONTAL_NORM: f64 = 1e-9;

/// World axis treated as vertical; azimuths are measured in the plane
/// orthogonal to it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GravityAxis {
    X,
    #[default]
    Y,
    Z,
}

impl GravityAxis {
    /// In-plane coordinates `(u, v)`; the azimuth is `atan2(v, u)`.
    fn horizontal<T: Copy>(self, p: &Vec3<T>) -> (T, T) {
        match self {
            GravityAxis::X => (p[1], p[2]),
            GravityAxis::Y => (p[0], p[2]),
            GravityAxis::Z => (p[0], p[1]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzimuthCoverage {
    pub bin_count: usize,
    pub positional_bins: Vec<bool>,
    pub rotational_bins: Vec<bool>,
    pub positional_pct: f64,
    pub rotational_pct: f64,
}

/// Azimuth of `v` in degrees within `[0, 360)`, or `None` when its
/// horizontal projection is too short.
pub fn azimuth_degrees<T: Real>(v: &Vec3<T>, axis: GravityAxis) -> Option<f64> {
    let (u, w) = axis.horizontal(v);
    let (u, w) = (u.to_f64_lossy(), w.to_f64_lossy());
    if u.hypot(w) < MIN_HORIZONTAL_NORM {
        return None;
    }
    Some(w.atan2(u).to_degrees().rem_euclid(360.0))
}

/// Half-open 10° bin index of an angle in degrees.
pub fn azimuth_bin(degrees: f64) -> usize {
    let bin = (degrees.rem_euclid(360.0) / BIN_DEGREES).floor() as usize;
    bin.min(AZIMUTH_BINS - 1)
}

fn occupancy<'a>(dirs: impl Iterator<Item = Option<f64>> + 'a) -> (Vec<bool>, f64) {
    let mut bins = vec![false; AZIMUTH_BINS];
    for deg in dirs.flatten() {
        bins[azimuth_bin(deg)] = true;
    }
    let pct = bins.iter().filter(|b| **b).count() as f64 / AZIMUTH_BINS as f64;
    (bins, pct)
}

/// Bins of camera viewing directions (third row of the world-to-camera
/// rotation).
pub fn rotational_coverage<T: Real>(
    scene: &SceneReconstruction<T>,
    axis: GravityAxis,
) -> Result<(Vec<bool>, f64), MetricsError> {
    if scene.views.is_empty() {
        return Err(MetricsError::NoCameras);
    }
    Ok(occupancy(scene.views.values().map(|v| {
        let forward = v.rotation.to_matrix()[2];
        azimuth_degrees(&forward, axis)
    })))
}

/// Positional and rotational azimuth coverage about the sparse-point centroid
/// with gravity along +Y.
pub fn azimuth_coverage<T: Real>(
    scene: &SceneReconstruction<T>,
) -> Result<AzimuthCoverage, MetricsError> {
    azimuth_coverage_with(scene, GravityAxis::Y)
}

pub fn azimuth_coverage_with<T: Real>(
    scene: &SceneReconstruction<T>,
    axis: GravityAxis,
) -> Result<AzimuthCoverage, MetricsError> {
    if scene.views.is_empty() {
        return Err(MetricsError::NoCameras);
    }
    let centroid = scene.centroid().ok_or(MetricsError::NoPoints)?;
    let (positional_bins, positional_pct) = occupancy(
        scene
            .views
            .values()
            .map(|v| azimuth_degrees(&sub(&v.position, &centroid), axis)),
    );
    let (rotational_bins, rotational_pct) = rotational_coverage(scene, axis)?;
    Ok(AzimuthCoverage {
        bin_count: AZIMUTH_BINS,
        positional_bins,
        rotational_bins,
        positional_pct,
        rotational_pct,
    })
}
