//! Deterministic synthetic scenes and depth fixtures with ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth_filter::DepthMap;
use crate::geometry::{cross, mat_vec, norm, scale, sub, Mat3, Quaternion, Vec3};
use crate::real::Real;
use crate::recon_io::{
    CameraIntrinsics, CameraModel, MatchEdge, PosedView, SceneReconstruction, SparsePoint,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    #[default]
    RingOfClusters,
    GridScene,
    DepthFixture,
}

/// Generator parameters. Grid scenes use `cluster_count` rows of
/// `cluster_size` cameras spaced `radius` apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub cluster_count: usize,
    pub cluster_size: usize,
    pub intra_weight: u32,
    pub inter_weight: u32,
    pub radius: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub point_count: usize,
    pub image_width: usize,
    pub image_height: usize,
    /// Side of the square transient blob; 0 disables it.
    pub blob_size: usize,
    /// Fixed monocular scale; drawn from `[0.3, 3]` when absent.
    pub mono_scale: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::RingOfClusters,
            cluster_count: 6,
            cluster_size: 5,
            intra_weight: 200,
            inter_weight: 60,
            radius: 10.0,
            noise_sigma: 0.05,
            seed: 0,
            point_count: 100,
            image_width: 64,
            image_height: 64,
            blob_size: 12,
            mono_scale: None,
        }
    }
}

/// Margin between the blob and the image border, in pixels.
const BLOB_MARGIN: usize = 4;
/// Fraction of the cluster arc occupied by its cameras.
const CLUSTER_ARC: f64 = 0.5;

impl SynthSpec {
    pub fn ring(cluster_count: usize, cluster_size: usize, seed: u64) -> Self {
        Self {
            cluster_count,
            cluster_size,
            seed,
            ..Self::default()
        }
    }

    pub fn grid(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::GridScene,
            cluster_count: rows,
            cluster_size: cols,
            radius: 1.0,
            seed,
            ..Self::default()
        }
    }

    pub fn depth_fixture(seed: u64) -> Self {
        Self {
            kind: SynthKind::DepthFixture,
            seed,
            ..Self::default()
        }
    }

    fn expect_kind(&self, kind: SynthKind) -> Result<(), SynthError> {
        if self.kind != kind {
            return Err(SynthError::InvalidSpec(format!(
                "expected {kind:?}, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        match self.kind {
            SynthKind::RingOfClusters | SynthKind::GridScene => {
                if self.cluster_count == 0 || self.cluster_size == 0 {
                    return fail("cluster_count and cluster_size must be at least 1");
                }
                if self.intra_weight < self.inter_weight {
                    return fail("intra_weight must be at least inter_weight");
                }
                if self.radius.is_nan()
                    || self.radius <= 0.0
                    || self.noise_sigma.is_nan()
                    || self.noise_sigma < 0.0
                    || !self.noise_sigma.is_finite()
                {
                    return fail("radius must be positive and noise_sigma non-negative");
                }
            }
            SynthKind::DepthFixture => {
                if self.image_width < 2 || self.image_height < 2 {
                    return fail("depth fixtures need at least 2x2 pixels");
                }
                if self.blob_size > 0
                    && (self.blob_size + 2 * BLOB_MARGIN > self.image_width
                        || self.blob_size + 2 * BLOB_MARGIN > self.image_height)
                {
                    return fail("blob does not fit inside the image margin");
                }
                if self.mono_scale.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                    return fail("mono_scale must be positive");
                }
            }
        }
        Ok(())
    }
}

/// Generated scene with the cluster (or grid row) of every view.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthScene<T> {
    pub scene: SceneReconstruction<T>,
    pub cluster_of: BTreeMap<u32, usize>,
}

fn normalize(v: &Vec3<f64>) -> Vec3<f64> {
    scale(v, 1.0 / norm(v))
}

/// World-to-camera rotation whose optical axis is `forward` with image "down"
/// close to world −Y.
fn look_rotation(forward: &Vec3<f64>) -> Mat3<f64> {
    let r3 = normalize(forward);
    let r1 = normalize(&cross(&[0.0, -1.0, 0.0], &r3));
    let r2 = cross(&r3, &r1);
    [r1, r2, r3]
}

fn cast<T: Real>(v: &Vec3<f64>) -> Vec3<T> {
    v.map(T::lit)
}

fn posed_view<T: Real>(
    view_id: u32,
    rotation: &Mat3<f64>,
    center: &Vec3<f64>,
    name: String,
) -> PosedView<T> {
    let q = Quaternion::from_matrix(rotation);
    let t = mat_vec(rotation, center).map(|v| -v);
    let q = Quaternion::new(T::lit(q.w), T::lit(q.x), T::lit(q.y), T::lit(q.z));
    PosedView::new(view_id, 1, q, cast(&t), name)
}

fn shared_camera<T: Real>() -> BTreeMap<u32, CameraIntrinsics<T>> {
    BTreeMap::from([(
        1,
        CameraIntrinsics {
            camera_id: 1,
            model: CameraModel::Pinhole,
            width: 640,
            height: 480,
            params: [500.0, 500.0, 320.0, 240.0].map(T::lit).to_vec(),
        },
    )])
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma is finite and non-negative")
}

fn cloud<T: Real>(
    rng: &mut ChaCha8Rng,
    count: usize,
    center: Vec3<f64>,
    spread: f64,
) -> Vec<SparsePoint<T>> {
    let jitter = normal(spread);
    (0..count)
        .map(|i| {
            let xyz = center.map(|c| c + jitter.sample(rng));
            SparsePoint {
                point_id: i as u64 + 1,
                xyz: cast(&xyz),
                color: [128, 128, 128],
                error: T::lit(0.5),
                track: Vec::new(),
            }
        })
        .collect()
}

/// Clusters of inward-facing cameras on a horizontal circle. Each cluster is
/// a clique at `intra_weight`; consecutive clusters share one `inter_weight`
/// edge from the last camera of one to the first of the next.
pub fn gen_ring_scene<T: Real>(spec: &SynthSpec) -> Result<SynthScene<T>, SynthError> {
    spec.expect_kind(SynthKind::RingOfClusters)?;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = normal(spec.noise_sigma);
    let (k_count, m) = (spec.cluster_count, spec.cluster_size);
    let sector = TAU / k_count as f64;

    let mut views = BTreeMap::new();
    let mut cluster_of = BTreeMap::new();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); k_count];
    let mut id = 1u32;
    for (k, cluster) in members.iter_mut().enumerate() {
        for i in 0..m {
            let offset = (i as f64 + 0.5) / m as f64 - 0.5;
            let theta = sector * (k as f64 + 0.5 + CLUSTER_ARC * offset);
            let mut c = [spec.radius * theta.cos(), 0.0, spec.radius * theta.sin()];
            for v in &mut c {
                *v += jitter.sample(&mut rng);
            }
            let rotation = look_rotation(&sub(&[0.0; 3], &c));
            views.insert(
                id,
                posed_view(id, &rotation, &c, format!("c{k:03}_{i:03}.jpg")),
            );
            cluster_of.insert(id, k);
            cluster.push(id);
            id += 1;
        }
    }

    let mut edges = BTreeSet::new();
    for cluster in &members {
        for (a, &u) in cluster.iter().enumerate() {
            for &v in &cluster[a + 1..] {
                edges.insert(MatchEdge::new(u, v, spec.intra_weight).expect("distinct ids"));
            }
        }
    }
    if k_count > 1 {
        let mut seen: BTreeSet<(u32, u32)> = edges.iter().map(|e| (e.view_a, e.view_b)).collect();
        for k in 0..k_count {
            let from = *members[k].last().expect("non-empty cluster");
            let to = members[(k + 1) % k_count][0];
            if let Some(e) = MatchEdge::new(from, to, spec.inter_weight) {
                if seen.insert((e.view_a, e.view_b)) {
                    edges.insert(e);
                }
            }
        }
    }

    let points = cloud(&mut rng, spec.point_count, [0.0; 3], spec.radius * 0.1);
    let scene = SceneReconstruction::new(
        format!("ring_{k_count}x{m}_s{}", spec.seed),
        shared_camera(),
        views,
        edges.into_iter().collect(),
        points,
    )
    .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(SynthScene { scene, cluster_of })
}

/// Planar grid of forward-facing cameras with 4-neighbour edges at
/// `intra_weight`; `cluster_of` holds the row index.
pub fn gen_grid_scene<T: Real>(spec: &SynthSpec) -> Result<SynthScene<T>, SynthError> {
    spec.expect_kind(SynthKind::GridScene)?;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jitter = normal(spec.noise_sigma);
    let (rows, cols) = (spec.cluster_count, spec.cluster_size);
    let id = |r: usize, c: usize| (r * cols + c) as u32 + 1;
    let rotation = look_rotation(&[0.0, 0.0, 1.0]);

    let mut views = BTreeMap::new();
    let mut cluster_of = BTreeMap::new();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let mut p = [c as f64 * spec.radius, 0.0, r as f64 * spec.radius];
            for v in &mut p {
                *v += jitter.sample(&mut rng);
            }
            views.insert(
                id(r, c),
                posed_view(id(r, c), &rotation, &p, format!("g{r:03}_{c:03}.jpg")),
            );
            cluster_of.insert(id(r, c), r);
            if c + 1 < cols {
                edges.extend(MatchEdge::new(id(r, c), id(r, c + 1), spec.intra_weight));
            }
            if r + 1 < rows {
                edges.extend(MatchEdge::new(id(r, c), id(r + 1, c), spec.intra_weight));
            }
        }
    }
    let center = [
        (cols - 1) as f64 * spec.radius / 2.0,
        0.0,
        (rows - 1) as f64 * spec.radius / 2.0 + spec.radius * 5.0,
    ];
    let points = cloud(&mut rng, spec.point_count, center, spec.radius);
    let scene = SceneReconstruction::new(
        format!("grid_{rows}x{cols}_s{}", spec.seed),
        shared_camera(),
        views,
        edges,
        points,
    )
    .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(SynthScene { scene, cluster_of })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthFixture<T> {
    pub geom: DepthMap<T>,
    pub mono: DepthMap<T>,
    /// Row-major pixel indices of the transient blob.
    pub blob: BTreeSet<usize>,
    pub mono_scale: f64,
}

fn ramp(x: usize, y: usize) -> f64 {
    10.0 + 0.05 * x as f64 + 0.03 * y as f64
}

/// Linear depth ramp seen by both maps, the monocular one globally rescaled;
/// the geometric map additionally contains a square blob at half depth.
pub fn gen_depth_fixture<T: Real>(spec: &SynthSpec) -> Result<DepthFixture<T>, SynthError> {
    spec.expect_kind(SynthKind::DepthFixture)?;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.image_width, spec.image_height);
    let mono_scale = spec
        .mono_scale
        .unwrap_or_else(|| rng.random_range(0.3..=3.0));

    let mut blob = BTreeSet::new();
    if spec.blob_size > 0 {
        let side = spec.blob_size;
        let x0 = rng.random_range(BLOB_MARGIN..=w - side - BLOB_MARGIN);
        let y0 = rng.random_range(BLOB_MARGIN..=h - side - BLOB_MARGIN);
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                blob.insert(y * w + x);
            }
        }
    }
    let invalid = |e: crate::depth_filter::DepthError| SynthError::InvalidSpec(e.to_string());
    let geom = DepthMap::from_fn(w, h, |x, y| {
        let d = ramp(x, y);
        T::lit(if blob.contains(&(y * w + x)) {
            0.5 * d
        } else {
            d
        })
    })
    .map_err(invalid)?;
    let mono = DepthMap::from_fn(w, h, |x, y| T::lit(ramp(x, y) * mono_scale)).map_err(invalid)?;
    Ok(DepthFixture {
        geom,
        mono,
        blob,
        mono_scale,
    })
}
