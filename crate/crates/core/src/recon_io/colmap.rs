use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{
    CameraIntrinsics, CameraModel, PosedView, ReconError, RefKind, SceneReconstruction,
    SparsePoint, QUATERNION_NORM_TOLERANCE,
};
use crate::geometry::Quaternion;
use crate::real::Real;

pub const CAMERAS_FILE: &str = "cameras.txt";
pub const IMAGES_FILE: &str = "images.txt";
pub const POINTS_FILE: &str = "points3D.txt";

fn read(path: &Path) -> Result<String, ReconError> {
    fs::read_to_string(path).map_err(|e| ReconError::io(path, e))
}

fn field<F: FromStr>(tok: Option<&str>, line_no: usize, what: &str) -> Result<F, ReconError> {
    let tok = tok.ok_or_else(|| ReconError::malformed(line_no, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| ReconError::malformed(line_no, format!("invalid {what} `{tok}`")))
}

/// Non-comment lines with 1-based line numbers. Blank lines are kept because
/// the images file uses them as empty observation lines.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('#'))
}

pub fn parse_cameras<T: Real>(
    text: &str,
) -> Result<BTreeMap<u32, CameraIntrinsics<T>>, ReconError> {
    let mut out = BTreeMap::new();
    for (line_no, line) in data_lines(text).filter(|(_, l)| !l.is_empty()) {
        let mut toks = line.split_whitespace();
        let camera_id: u32 = field(toks.next(), line_no, "camera id")?;
        let model_name: String = field(toks.next(), line_no, "camera model")?;
        let model = CameraModel::from_colmap_name(&model_name).ok_or_else(|| {
            ReconError::malformed(line_no, format!("unsupported camera model `{model_name}`"))
        })?;
        let width = field(toks.next(), line_no, "width")?;
        let height = field(toks.next(), line_no, "height")?;
        let params = toks
            .map(|t| field::<T>(Some(t), line_no, "camera parameter"))
            .collect::<Result<Vec<_>, _>>()?;
        let cam = CameraIntrinsics {
            camera_id,
            model,
            width,
            height,
            params,
        };
        cam.validate()
            .map_err(|r| ReconError::malformed(line_no, r))?;
        if out.insert(camera_id, cam).is_some() {
            return Err(ReconError::DuplicateId {
                kind: RefKind::Camera,
                id: camera_id as i64,
                line_no: Some(line_no),
            });
        }
    }
    Ok(out)
}

fn parse_pose_line<T: Real>(line_no: usize, line: &str) -> Result<PosedView<T>, ReconError> {
    let mut toks = line.split_whitespace();
    let view_id: u32 = field(toks.next(), line_no, "image id")?;
    let mut q = [T::zero(); 4];
    for (v, name) in q.iter_mut().zip(["qw", "qx", "qy", "qz"]) {
        *v = field(toks.next(), line_no, name)?;
    }
    let mut t = [T::zero(); 3];
    for (v, name) in t.iter_mut().zip(["tx", "ty", "tz"]) {
        *v = field(toks.next(), line_no, name)?;
    }
    let camera_id = field(toks.next(), line_no, "camera id")?;
    let name: String = field(toks.next(), line_no, "image name")?;
    if toks.next().is_some() {
        return Err(ReconError::malformed(
            line_no,
            "trailing fields after image name",
        ));
    }
    let rotation = Quaternion::new(q[0], q[1], q[2], q[3]);
    let dev = (rotation.norm() - T::one()).abs();
    if dev.is_nan() || dev > T::lit(QUATERNION_NORM_TOLERANCE) {
        return Err(ReconError::malformed(
            line_no,
            "quaternion is not unit length",
        ));
    }
    Ok(PosedView::new(view_id, camera_id, rotation, t, name))
}

/// Parses `images.txt`. When `known_points` is given, observation lines are
/// checked against it; otherwise they are skipped.
pub fn parse_images<T: Real>(
    text: &str,
    known_points: Option<&BTreeSet<u64>>,
) -> Result<BTreeMap<u32, PosedView<T>>, ReconError> {
    let mut out = BTreeMap::new();
    let mut lines = data_lines(text);
    while let Some((line_no, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let view = parse_pose_line::<T>(line_no, line)?;
        // The observation line always follows the pose line, possibly empty.
        if let Some((obs_no, obs)) = lines.next() {
            if let Some(points) = known_points {
                check_observations(obs_no, obs, points)?;
            }
        }
        let id = view.view_id;
        if out.insert(id, view).is_some() {
            return Err(ReconError::DuplicateId {
                kind: RefKind::Image,
                id: id as i64,
                line_no: Some(line_no),
            });
        }
    }
    Ok(out)
}

fn check_observations(
    line_no: usize,
    line: &str,
    points: &BTreeSet<u64>,
) -> Result<(), ReconError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if !toks.len().is_multiple_of(3) {
        return Err(ReconError::malformed(
            line_no,
            "observation line is not X Y POINT3D_ID triples",
        ));
    }
    for obs in toks.chunks(3) {
        let _: f64 = field(Some(obs[0]), line_no, "observation x")?;
        let _: f64 = field(Some(obs[1]), line_no, "observation y")?;
        let pid: i64 = field(Some(obs[2]), line_no, "point id")?;
        if pid != -1 && (pid < 0 || !points.contains(&(pid as u64))) {
            return Err(ReconError::DanglingReference {
                kind: RefKind::Point,
                id: pid,
                line_no: Some(line_no),
            });
        }
    }
    Ok(())
}

pub fn parse_points<T: Real>(text: &str) -> Result<Vec<SparsePoint<T>>, ReconError> {
    let mut out: BTreeMap<u64, SparsePoint<T>> = BTreeMap::new();
    for (line_no, line) in data_lines(text).filter(|(_, l)| !l.is_empty()) {
        let mut toks = line.split_whitespace();
        let point_id: u64 = field(toks.next(), line_no, "point id")?;
        let mut xyz = [T::zero(); 3];
        for (v, name) in xyz.iter_mut().zip(["x", "y", "z"]) {
            *v = field(toks.next(), line_no, name)?;
        }
        let mut color = [0u8; 3];
        for (v, name) in color.iter_mut().zip(["r", "g", "b"]) {
            *v = field(toks.next(), line_no, name)?;
        }
        let error = field(toks.next(), line_no, "reprojection error")?;
        let rest: Vec<&str> = toks.collect();
        if !rest.len().is_multiple_of(2) {
            return Err(ReconError::malformed(
                line_no,
                "track is not IMAGE_ID POINT2D_IDX pairs",
            ));
        }
        let track = rest
            .chunks(2)
            .map(|c| {
                Ok((
                    field(Some(c[0]), line_no, "track image id")?,
                    field(Some(c[1]), line_no, "track point index")?,
                ))
            })
            .collect::<Result<Vec<_>, ReconError>>()?;
        let p = SparsePoint {
            point_id,
            xyz,
            color,
            error,
            track,
        };
        if out.insert(point_id, p).is_some() {
            return Err(ReconError::DuplicateId {
                kind: RefKind::Point,
                id: point_id as i64,
                line_no: Some(line_no),
            });
        }
    }
    Ok(out.into_values().collect())
}

fn scene_id_from(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".to_string())
}

/// Reads a COLMAP text reconstruction. The match graph is attached separately
/// with [`SceneReconstruction::with_edges`].
pub fn parse_reconstruction<T: Real>(
    cameras_path: &Path,
    images_path: &Path,
    points_path: Option<&Path>,
) -> Result<SceneReconstruction<T>, ReconError> {
    let intrinsics = parse_cameras(&read(cameras_path)?)?;
    let points = match points_path {
        Some(p) => parse_points(&read(p)?)?,
        None => Vec::new(),
    };
    let point_ids: Option<BTreeSet<u64>> =
        points_path.map(|_| points.iter().map(|p| p.point_id).collect());
    let views = parse_images(&read(images_path)?, point_ids.as_ref())?;
    SceneReconstruction::new(
        scene_id_from(cameras_path),
        intrinsics,
        views,
        Vec::new(),
        points,
    )
}

/// Loads `cameras.txt`, `images.txt` and, if present, `points3D.txt` from a
/// directory, plus an optional match-graph file.
pub fn load_scene_dir<T: Real>(
    dir: &Path,
    matches: Option<&Path>,
) -> Result<SceneReconstruction<T>, ReconError> {
    let points = dir.join(POINTS_FILE);
    let mut scene = parse_reconstruction(
        &dir.join(CAMERAS_FILE),
        &dir.join(IMAGES_FILE),
        points.exists().then_some(points.as_path()),
    )?;
    if let Some(name) = dir
        .canonicalize()
        .ok()
        .and_then(|d| d.file_name().map(|n| n.to_owned()))
    {
        scene.scene_id = name.to_string_lossy().into_owned();
    }
    match matches {
        Some(m) => scene.with_edges(super::parse_match_graph(m)?),
        None => Ok(scene),
    }
}

pub fn render_cameras<T: Real>(scene: &SceneReconstruction<T>) -> String {
    let mut s = String::from("# Camera list with one line of data per camera:\n");
    s.push_str("#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n");
    let _ = writeln!(s, "# Number of cameras: {}", scene.intrinsics.len());
    for c in scene.intrinsics.values() {
        let _ = write!(
            s,
            "{} {} {} {}",
            c.camera_id,
            c.model.colmap_name(),
            c.width,
            c.height
        );
        for p in &c.params {
            let _ = write!(s, " {p}");
        }
        s.push('\n');
    }
    s
}

/// Observation lines are written empty: the scene model does not keep 2D
/// keypoints.
pub fn render_images<T: Real>(scene: &SceneReconstruction<T>) -> String {
    let mut s = String::from("# Image list with two lines of data per image:\n");
    s.push_str("#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n");
    s.push_str("#   POINTS2D[] as (X, Y, POINT3D_ID)\n");
    let _ = writeln!(s, "# Number of images: {}", scene.views.len());
    for v in scene.views.values() {
        let q = v.rotation;
        let t = v.translation;
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {} {} {} {}",
            v.view_id, q.w, q.x, q.y, q.z, t[0], t[1], t[2], v.camera_id, v.image_name
        );
        s.push('\n');
    }
    s
}

pub fn render_points<T: Real>(scene: &SceneReconstruction<T>) -> String {
    let mut s = String::from("# 3D point list with one line of data per point:\n");
    s.push_str("#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n");
    let _ = writeln!(s, "# Number of points: {}", scene.points.len());
    for p in &scene.points {
        let _ = write!(
            s,
            "{} {} {} {} {} {} {} {}",
            p.point_id, p.xyz[0], p.xyz[1], p.xyz[2], p.color[0], p.color[1], p.color[2], p.error
        );
        for (img, idx) in &p.track {
            let _ = write!(s, " {img} {idx}");
        }
        s.push('\n');
    }
    s
}

/// Writes the canonical text files into `dir`. `points3D.txt` is only written
/// when the scene has points.
pub fn save_scene_dir<T: Real>(
    scene: &SceneReconstruction<T>,
    dir: &Path,
) -> Result<(), ReconError> {
    fs::create_dir_all(dir).map_err(|e| ReconError::io(dir, e))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| ReconError::io(p, e))
    };
    write(CAMERAS_FILE, render_cameras(scene))?;
    write(IMAGES_FILE, render_images(scene))?;
    if !scene.points.is_empty() {
        write(POINTS_FILE, render_points(scene))?;
    }
    Ok(())
}
