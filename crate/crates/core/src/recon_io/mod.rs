//! Scene model and on-disk formats: COLMAP text reconstructions, match-count
//! edge lists and line-delimited batch records.

mod batches;
mod colmap;
mod matches;

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{camera_center, Quaternion, Vec3};
use crate::real::Real;

pub use batches::{parse_batches_str, read_batches, render_batches, write_batches};
pub use colmap::{
    load_scene_dir, parse_cameras, parse_images, parse_points, parse_reconstruction,
    render_cameras, render_images, render_points, save_scene_dir, CAMERAS_FILE, IMAGES_FILE,
    POINTS_FILE,
};
pub use matches::{
    parse_match_graph, parse_match_graph_str, render_match_graph, write_match_graph,
};

/// Maximum deviation of a parsed quaternion norm from 1.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefKind {
    Camera,
    Image,
    Point,
    View,
}

impl fmt::Display for RefKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefKind::Camera => "camera",
            RefKind::Image => "image",
            RefKind::Point => "point",
            RefKind::View => "view",
        })
    }
}

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("{}{kind} {id} is not defined", line_prefix(*line_no))]
    DanglingReference {
        kind: RefKind,
        id: i64,
        line_no: Option<usize>,
    },
    #[error("{}duplicate {kind} id {id}", line_prefix(*line_no))]
    DuplicateId {
        kind: RefKind,
        id: i64,
        line_no: Option<usize>,
    },
    #[error("line {line_no}: self-loop on view {view_id}")]
    SelfLoop { view_id: u32, line_no: usize },
    #[error("line {line_no}: invalid batch record: {source}")]
    BadRecord {
        line_no: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn line_prefix(line_no: Option<usize>) -> String {
    line_no.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl ReconError {
    pub(crate) fn malformed(line_no: usize, reason: impl Into<String>) -> Self {
        ReconError::MalformedLine {
            line_no,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        ReconError::Io {
            path: path.into(),
            source,
        }
    }
}

/// COLMAP camera models supported by the text parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CameraModel {
    SimplePinhole,
    Pinhole,
    SimpleRadial,
    Radial,
    OpenCV,
}

impl CameraModel {
    pub fn arity(self) -> usize {
        match self {
            CameraModel::SimplePinhole => 3,
            CameraModel::Pinhole => 4,
            CameraModel::SimpleRadial => 4,
            CameraModel::Radial => 5,
            CameraModel::OpenCV => 8,
        }
    }

    pub fn colmap_name(self) -> &'static str {
        match self {
            CameraModel::SimplePinhole => "SIMPLE_PINHOLE",
            CameraModel::Pinhole => "PINHOLE",
            CameraModel::SimpleRadial => "SIMPLE_RADIAL",
            CameraModel::Radial => "RADIAL",
            CameraModel::OpenCV => "OPENCV",
        }
    }

    pub fn from_colmap_name(name: &str) -> Option<Self> {
        Some(match name {
            "SIMPLE_PINHOLE" => CameraModel::SimplePinhole,
            "PINHOLE" => CameraModel::Pinhole,
            "SIMPLE_RADIAL" => CameraModel::SimpleRadial,
            "RADIAL" => CameraModel::Radial,
            "OPENCV" => CameraModel::OpenCV,
            _ => return None,
        })
    }

    /// Number of leading focal-length parameters.
    fn focal_count(self) -> usize {
        match self {
            CameraModel::Pinhole | CameraModel::OpenCV => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraIntrinsics<T> {
    pub camera_id: u32,
    pub model: CameraModel,
    pub width: u32,
    pub height: u32,
    pub params: Vec<T>,
}

impl<T: Real> CameraIntrinsics<T> {
    /// Checks dimensions, parameter arity and focal positivity.
    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err(format!("camera {} has zero size", self.camera_id));
        }
        if self.params.len() != self.model.arity() {
            return Err(format!(
                "{} expects {} parameters, got {}",
                self.model.colmap_name(),
                self.model.arity(),
                self.params.len()
            ));
        }
        if self.params[..self.model.focal_count()]
            .iter()
            .any(|f| f.is_nan() || *f <= T::zero())
        {
            return Err(format!(
                "camera {} has non-positive focal length",
                self.camera_id
            ));
        }
        Ok(())
    }
}

/// A registered image with its world-to-camera pose.
#[derive(Clone, Debug, PartialEq)]
pub struct PosedView<T> {
    pub view_id: u32,
    pub camera_id: u32,
    pub rotation: Quaternion<T>,
    pub translation: Vec3<T>,
    /// Camera center in world coordinates, always `-Rᵀ t`.
    pub position: Vec3<T>,
    pub image_name: String,
}

impl<T: Real> PosedView<T> {
    pub fn new(
        view_id: u32,
        camera_id: u32,
        rotation: Quaternion<T>,
        translation: Vec3<T>,
        image_name: impl Into<String>,
    ) -> Self {
        Self {
            view_id,
            camera_id,
            position: camera_center(&rotation, &translation),
            rotation,
            translation,
            image_name: image_name.into(),
        }
    }
}

/// Verified match count between two views; `view_a < view_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchEdge {
    pub view_a: u32,
    pub view_b: u32,
    pub match_count: u32,
}

impl MatchEdge {
    /// Orders the endpoints. Returns `None` for a self-loop.
    pub fn new(a: u32, b: u32, match_count: u32) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self {
                view_a: a,
                view_b: b,
                match_count,
            }),
            std::cmp::Ordering::Greater => Some(Self {
                view_a: b,
                view_b: a,
                match_count,
            }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsePoint<T> {
    pub point_id: u64,
    pub xyz: Vec3<T>,
    pub color: [u8; 3],
    pub error: T,
    /// `(image_id, point2d_idx)` observations.
    pub track: Vec<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneReconstruction<T> {
    pub scene_id: String,
    pub intrinsics: BTreeMap<u32, CameraIntrinsics<T>>,
    pub views: BTreeMap<u32, PosedView<T>>,
    /// Sorted by `(view_a, view_b)`.
    pub edges: Vec<MatchEdge>,
    /// Sorted by point id; empty when no point cloud was loaded.
    pub points: Vec<SparsePoint<T>>,
}

impl<T: Real> SceneReconstruction<T> {
    /// Assembles a scene and checks every cross reference.
    pub fn new(
        scene_id: impl Into<String>,
        intrinsics: BTreeMap<u32, CameraIntrinsics<T>>,
        views: BTreeMap<u32, PosedView<T>>,
        edges: Vec<MatchEdge>,
        mut points: Vec<SparsePoint<T>>,
    ) -> Result<Self, ReconError> {
        for view in views.values() {
            if !intrinsics.contains_key(&view.camera_id) {
                return Err(ReconError::DanglingReference {
                    kind: RefKind::Camera,
                    id: view.camera_id as i64,
                    line_no: None,
                });
            }
        }
        for p in &points {
            for &(img, _) in &p.track {
                if !views.contains_key(&img) {
                    return Err(ReconError::DanglingReference {
                        kind: RefKind::Image,
                        id: img as i64,
                        line_no: None,
                    });
                }
            }
        }
        points.sort_by_key(|p| p.point_id);
        let scene = Self {
            scene_id: scene_id.into(),
            intrinsics,
            views,
            edges: Vec::new(),
            points,
        };
        scene.with_edges(edges)
    }

    /// Replaces the match graph after checking endpoints and duplicates.
    pub fn with_edges(mut self, mut edges: Vec<MatchEdge>) -> Result<Self, ReconError> {
        edges.sort();
        for e in &edges {
            if e.view_a >= e.view_b {
                return Err(ReconError::DanglingReference {
                    kind: RefKind::View,
                    id: e.view_a as i64,
                    line_no: None,
                });
            }
            for v in [e.view_a, e.view_b] {
                if !self.views.contains_key(&v) {
                    return Err(ReconError::DanglingReference {
                        kind: RefKind::View,
                        id: v as i64,
                        line_no: None,
                    });
                }
            }
        }
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].view_a, w[0].view_b) == (w[1].view_a, w[1].view_b))
        {
            return Err(ReconError::DuplicateId {
                kind: RefKind::View,
                id: w[0].view_a as i64,
                line_no: None,
            });
        }
        self.edges = edges;
        Ok(self)
    }

    /// Mean of the sparse point cloud, if there is one.
    pub fn centroid(&self) -> Option<Vec3<T>> {
        if self.points.is_empty() {
            return None;
        }
        let n = T::from_usize(self.points.len())?;
        let mut c = [T::zero(); 3];
        for p in &self.points {
            for (acc, v) in c.iter_mut().zip(p.xyz) {
                *acc = *acc + v;
            }
        }
        Some([c[0] / n, c[1] / n, c[2] / n])
    }

    pub fn positions(&self) -> BTreeMap<u32, Vec3<T>> {
        self.views.iter().map(|(&id, v)| (id, v.position)).collect()
    }
}
