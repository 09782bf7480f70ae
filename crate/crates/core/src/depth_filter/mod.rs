//! Monocular-prior filtering of multi-view-stereo depth maps.
//!
//! The geometric map is scaled so that its median over jointly valid pixels
//! matches the monocular map. Pixels are then rejected when the normalized
//! depth discrepancy exceeds `tau_depth` or when the normalized gradient
//! magnitudes disagree by more than `tau_grad`. Kept pixels retain their
//! original, unscaled depth.

mod pfm;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;

pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};

/// Default normalized depth-discrepancy threshold (not a published value).
pub const DEFAULT_TAU_DEPTH: f64 = 0.25;
/// Default normalized gradient-discrepancy threshold (not a published value).
pub const DEFAULT_TAU_GRAD: f64 = 0.10;

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("depth map dimensions must be positive and match the data, got {width}x{height} with {len} values")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("no pixel is valid in both depth maps")]
    NoValidOverlap,
    #[error("gradients need at least 2x2 pixels, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("thresholds must be positive")]
    InvalidThreshold,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed PFM: {0}")]
    Pfm(String),
}

/// Row-major grid, top row first.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<V> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<V>,
}

impl<V: Clone> Grid<V> {
    pub fn filled(width: usize, height: usize, value: V) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> &V {
        &self.data[y * self.width + x]
    }
}

/// Depth map; a pixel is valid iff its value is finite and positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Real> DepthMap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self, DepthError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(DepthError::InvalidDimensions {
                width,
                height,
                len: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self, DepthError> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    pub fn is_valid(&self, index: usize) -> bool {
        let v = self.values[index];
        v.is_finite() && v > T::zero()
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        (0..self.values.len()).map(|i| self.is_valid(i)).collect()
    }

    pub fn valid_count(&self) -> usize {
        (0..self.values.len()).filter(|&i| self.is_valid(i)).count()
    }

    /// Multiplies every value by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    fn same_shape(&self, other: &Self) -> Result<(), DepthError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(DepthError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientScheme {
    /// Central differences inside, one-sided differences on the border.
    #[default]
    CentralDifference,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConfig<T> {
    pub tau_depth: T,
    pub tau_grad: T,
    pub gradient_scheme: GradientScheme,
}

impl<T: Real> Default for FilterConfig<T> {
    fn default() -> Self {
        Self {
            tau_depth: T::lit(DEFAULT_TAU_DEPTH),
            tau_grad: T::lit(DEFAULT_TAU_GRAD),
            gradient_scheme: GradientScheme::CentralDifference,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub scale_s: f64,
    pub removed_by_depth: usize,
    pub removed_by_grad: usize,
    pub removed_total: usize,
    pub kept: usize,
}

fn median<T: Real>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// `median(mono) / median(geom)` over pixels valid in both maps.
pub fn median_scale<T: Real>(d_geom: &DepthMap<T>, d_mono: &DepthMap<T>) -> Result<T, DepthError> {
    d_geom.same_shape(d_mono)?;
    let joint: Vec<usize> = (0..d_geom.values.len())
        .filter(|&i| d_geom.is_valid(i) && d_mono.is_valid(i))
        .collect();
    if joint.is_empty() {
        return Err(DepthError::NoValidOverlap);
    }
    let geom = median(joint.iter().map(|&i| d_geom.values[i]).collect());
    let mono = median(joint.iter().map(|&i| d_mono.values[i]).collect());
    Ok(mono / geom)
}

/// `|D'_geom - D_mono| / D'_geom` on jointly valid pixels.
pub fn depth_discrepancy<T: Real>(
    d_geom_scaled: &DepthMap<T>,
    d_mono: &DepthMap<T>,
) -> Result<Grid<Option<T>>, DepthError> {
    d_geom_scaled.same_shape(d_mono)?;
    let data = (0..d_mono.values.len())
        .map(|i| {
            (d_geom_scaled.is_valid(i) && d_mono.is_valid(i)).then(|| {
                let g = d_geom_scaled.values[i];
                (g - d_mono.values[i]).abs() / g
            })
        })
        .collect();
    Ok(Grid {
        width: d_mono.width,
        height: d_mono.height,
        data,
    })
}

/// Derivative along one axis at `pos` of a line of `len` samples, with the
/// indices it reads.
fn axis_derivative<T: Real>(
    len: usize,
    pos: usize,
    sample: impl Fn(usize) -> T,
) -> (T, [usize; 2]) {
    if pos == 0 {
        (sample(1) - sample(0), [0, 1])
    } else if pos == len - 1 {
        (sample(pos) - sample(pos - 1), [pos - 1, pos])
    } else {
        (
            (sample(pos + 1) - sample(pos - 1)) / T::lit(2.0),
            [pos - 1, pos + 1],
        )
    }
}

/// `|∇D| / D` per pixel; `None` where the stencil touches a pixel for which
/// `usable` is false.
fn normalized_gradient<T: Real>(map: &DepthMap<T>, usable: &[bool]) -> Grid<Option<T>> {
    let (w, h) = (map.width, map.height);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (dx, xs) = axis_derivative(w, x, |i| map.get(i, y));
            let (dy, ys) = axis_derivative(h, y, |j| map.get(x, j));
            let ok = usable[y * w + x]
                && xs.iter().all(|&i| usable[y * w + i])
                && ys.iter().all(|&j| usable[j * w + x]);
            data.push(ok.then(|| (dx * dx + dy * dy).sqrt() / map.get(x, y)));
        }
    }
    Grid {
        width: w,
        height: h,
        data,
    }
}

/// `| |∇D_mono|/D_mono - |∇D'_geom|/D'_geom |`; pixels whose difference
/// stencil touches an invalid pixel of either map are `None`.
pub fn gradient_discrepancy<T: Real>(
    d_geom_scaled: &DepthMap<T>,
    d_mono: &DepthMap<T>,
) -> Result<Grid<Option<T>>, DepthError> {
    d_geom_scaled.same_shape(d_mono)?;
    if d_mono.width < 2 || d_mono.height < 2 {
        return Err(DepthError::TooSmall(d_mono.width, d_mono.height));
    }
    let usable: Vec<bool> = (0..d_mono.values.len())
        .map(|i| d_geom_scaled.is_valid(i) && d_mono.is_valid(i))
        .collect();
    let g = normalized_gradient(d_geom_scaled, &usable);
    let m = normalized_gradient(d_mono, &usable);
    let data = g
        .data
        .iter()
        .zip(&m.data)
        .map(|(a, b)| Some((*b)? - (*a)?).map(|d| d.abs()))
        .collect();
    Ok(Grid {
        width: d_mono.width,
        height: d_mono.height,
        data,
    })
}

/// Invalidates (sets to 0) every geometric pixel rejected by either test.
pub fn filter_depth<T: Real>(
    d_geom: &DepthMap<T>,
    d_mono: &DepthMap<T>,
    config: &FilterConfig<T>,
) -> Result<(DepthMap<T>, FilterReport), DepthError> {
    if !(config.tau_depth > T::zero() && config.tau_grad > T::zero()) {
        return Err(DepthError::InvalidThreshold);
    }
    let s = median_scale(d_geom, d_mono)?;
    let scaled = d_geom.scaled(s);
    let depth = depth_discrepancy(&scaled, d_mono)?;
    let grad = match config.gradient_scheme {
        GradientScheme::CentralDifference => gradient_discrepancy(&scaled, d_mono)?,
    };

    let mut out = d_geom.clone();
    let (mut by_depth, mut by_grad, mut total) = (0, 0, 0);
    for i in 0..out.values.len() {
        if !d_geom.is_valid(i) {
            continue;
        }
        let bad_depth = depth.data[i].is_some_and(|d| d > config.tau_depth);
        let bad_grad = grad.data[i].is_some_and(|d| d > config.tau_grad);
        by_depth += usize::from(bad_depth);
        by_grad += usize::from(bad_grad);
        if bad_depth || bad_grad {
            total += 1;
            out.values[i] = T::zero();
        }
    }
    let report = FilterReport {
        scale_s: s.to_f64_lossy(),
        removed_by_depth: by_depth,
        removed_by_grad: by_grad,
        removed_total: total,
        kept: d_geom.valid_count() - total,
    };
    Ok((out, report))
}

/// Pixels valid in `before` but not in `after`.
pub fn removal_mask<T: Real>(before: &DepthMap<T>, after: &DepthMap<T>) -> Vec<bool> {
    (0..before.values.len())
        .map(|i| before.is_valid(i) && !after.is_valid(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(w: usize, h: usize, v: f64) -> DepthMap<f64> {
        DepthMap::new(w, h, vec![v; w * h]).unwrap()
    }

    #[test]
    fn constant_maps_scale() {
        assert_eq!(
            median_scale(&constant(3, 2, 4.0), &constant(3, 2, 2.0)).unwrap(),
            0.5
        );
        let m = DepthMap::new(2, 2, vec![1.0, 7.0, 3.0, 2.0]).unwrap();
        assert_eq!(median_scale(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn even_median_scale() {
        let g = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 100.0]).unwrap();
        let m = DepthMap::new(2, 2, vec![2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(median_scale(&g, &m).unwrap(), 2.0);
    }

    #[test]
    fn scale_uses_joint_valid_set() {
        let g = DepthMap::new(2, 2, vec![1.0, 2.0, 0.0, 50.0]).unwrap();
        let m = DepthMap::new(2, 2, vec![2.0, 4.0, 6.0, f64::NAN]).unwrap();
        assert_eq!(median_scale(&g, &m).unwrap(), 2.0);
        let none = DepthMap::new(1, 1, vec![0.0]).unwrap();
        assert!(matches!(
            median_scale(&none, &none),
            Err(DepthError::NoValidOverlap)
        ));
    }

    #[test]
    fn mismatched_dimensions() {
        assert!(matches!(
            median_scale(&constant(2, 2, 1.0), &constant(2, 3, 1.0)),
            Err(DepthError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn discrepancy_arithmetic() {
        let d = depth_discrepancy(&constant(1, 1, 10.0), &constant(1, 1, 12.0)).unwrap();
        assert!((d.data[0].unwrap() - 0.2).abs() < 1e-15);
        let d = depth_discrepancy(&constant(1, 1, 5.0), &constant(1, 1, 20.0)).unwrap();
        assert_eq!(d.data[0], Some(3.0));
        let d = depth_discrepancy(&constant(1, 1, 5.0), &constant(1, 1, 5.0)).unwrap();
        assert_eq!(d.data[0], Some(0.0));
    }

    #[test]
    fn constant_maps_have_no_gradient_discrepancy() {
        let g = gradient_discrepancy(&constant(4, 3, 2.0), &constant(4, 3, 9.0)).unwrap();
        assert!(g.data.iter().all(|d| *d == Some(0.0)));
    }

    #[test]
    fn too_small_for_gradient() {
        assert!(matches!(
            gradient_discrepancy(&constant(2, 1, 1.0), &constant(2, 1, 1.0)),
            Err(DepthError::TooSmall(2, 1))
        ));
    }

    #[test]
    fn stencil_touching_invalid_is_none() {
        let mut v = vec![1.0; 16];
        v[5] = 0.0; // (1,1)
        let g = DepthMap::new(4, 4, v).unwrap();
        let d = gradient_discrepancy(&g, &constant(4, 4, 1.0)).unwrap();
        assert_eq!(*d.at(1, 1), None);
        assert_eq!(*d.at(2, 1), None);
        assert_eq!(*d.at(1, 0), None);
        assert_eq!(*d.at(3, 3), Some(0.0));
        assert_eq!(*d.at(2, 2), Some(0.0));
    }

    #[test]
    fn strict_threshold_keeps_pixel() {
        // Single pixel of 0.2 discrepancy inside a constant field.
        let g = constant(3, 3, 10.0);
        let mut mv = vec![10.0; 9];
        mv[4] = 12.0;
        let m = DepthMap::new(3, 3, mv).unwrap();
        let cfg = FilterConfig {
            tau_depth: 0.25,
            tau_grad: 1e9,
            ..FilterConfig::default()
        };
        let (out, report) = filter_depth(&g, &m, &cfg).unwrap();
        assert_eq!(report.removed_total, 0);
        assert_eq!(out, g);
    }

    #[test]
    fn identical_maps_remove_nothing() {
        let g = DepthMap::from_fn(6, 5, |x, y| 3.0 + x as f64 * 0.5 + (y * y) as f64).unwrap();
        let (out, report) = filter_depth(&g, &g, &FilterConfig::default()).unwrap();
        assert_eq!(out, g);
        assert_eq!(report.kept, 30);
        assert_eq!(report.removed_total, 0);
        assert_eq!(report.scale_s, 1.0);
    }

    #[test]
    fn rejects_non_positive_threshold() {
        let g = constant(2, 2, 1.0);
        let cfg = FilterConfig {
            tau_depth: 0.0,
            ..FilterConfig::default()
        };
        assert!(matches!(
            filter_depth(&g, &g, &cfg),
            Err(DepthError::InvalidThreshold)
        ));
    }
}
