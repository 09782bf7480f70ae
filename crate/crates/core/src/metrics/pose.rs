use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{
    angle_between, mat_mul, mat_vec, norm, rotation_angle, sub, transpose, Mat3, Vec3,
};
use crate::real::Real;
use crate::recon_io::PosedView;

/// Relative pose errors over all unordered view pairs, in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosePairErrors {
    pub rotation_errors: Vec<f64>,
    pub translation_errors: Vec<f64>,
    pub rra_at: BTreeMap<u32, f64>,
    pub rta_at: BTreeMap<u32, f64>,
    pub auc_at: BTreeMap<u32, f64>,
    pub mre: f64,
    pub mte: f64,
}

/// Relative pose taking camera `i` coordinates to camera `j` coordinates.
fn relative<T: Real>(a: &PosedView<T>, b: &PosedView<T>) -> (Mat3<T>, Vec3<T>) {
    let ra = a.rotation.to_matrix();
    let rb = b.rotation.to_matrix();
    let r = mat_mul(&rb, &transpose(&ra));
    let t = sub(&b.translation, &mat_vec(&r, &a.translation));
    (r, t)
}

/// Baselines shorter than this fraction of the pose magnitudes count as zero.
fn is_degenerate<T: Real>(t: &Vec3<T>, a: &PosedView<T>, b: &PosedView<T>) -> bool {
    let scale = T::one() + norm(&a.translation) + norm(&b.translation);
    norm(t) <= T::epsilon() * T::lit(16.0) * scale
}

fn translation_error<T: Real>(
    tp: &Vec3<T>,
    tg: &Vec3<T>,
    degenerate_pred: bool,
    degenerate_gt: bool,
) -> f64 {
    match (degenerate_pred, degenerate_gt) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 90.0,
        (false, false) => angle_between(tp, tg).to_f64_lossy().to_degrees(),
    }
}

fn fraction_below(errors: &[f64], threshold: f64) -> f64 {
    errors.iter().filter(|&&e| e < threshold).count() as f64 / errors.len() as f64
}

/// Normalized trapezoidal area under `x ↦ frac(err ≤ x)` on `[0, θ]` with 1°
/// steps.
fn auc(max_errors: &[f64], theta: u32) -> f64 {
    let n = max_errors.len() as f64;
    let curve = |x: f64| max_errors.iter().filter(|&&e| e <= x).count() as f64 / n;
    if theta == 0 {
        return curve(0.0);
    }
    let mut area = 0.0;
    let mut prev = curve(0.0);
    for x in 1..=theta {
        let cur = curve(x as f64);
        area += (prev + cur) / 2.0;
        prev = cur;
    }
    area / theta as f64
}

/// Compares id-aligned predicted and reference poses over every unordered
/// pair. Accuracy uses strict `err < θ`.
pub fn pose_pair_errors<T: Real>(
    pred: &[PosedView<T>],
    gt: &[PosedView<T>],
    thresholds: &[u32],
) -> Result<PosePairErrors, MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    if let Some((index, (p, g))) = pred
        .iter()
        .zip(gt)
        .enumerate()
        .find(|(_, (p, g))| p.view_id != g.view_id)
    {
        return Err(MetricsError::IdMismatch {
            index,
            pred: p.view_id,
            gt: g.view_id,
        });
    }
    if pred.len() < 2 {
        return Err(MetricsError::TooFewViews(pred.len()));
    }

    let mut rot = Vec::new();
    let mut trans = Vec::new();
    for i in 0..pred.len() {
        for j in i + 1..pred.len() {
            let (rp, tp) = relative(&pred[i], &pred[j]);
            let (rg, tg) = relative(&gt[i], &gt[j]);
            let diff = mat_mul(&rp, &transpose(&rg));
            rot.push(rotation_angle(&diff).to_f64_lossy().to_degrees());
            trans.push(translation_error(
                &tp,
                &tg,
                is_degenerate(&tp, &pred[i], &pred[j]),
                is_degenerate(&tg, &gt[i], &gt[j]),
            ));
        }
    }
    let max_err: Vec<f64> = rot.iter().zip(&trans).map(|(r, t)| r.max(*t)).collect();
    let n = rot.len() as f64;
    Ok(PosePairErrors {
        rra_at: thresholds
            .iter()
            .map(|&t| (t, fraction_below(&rot, t as f64)))
            .collect(),
        rta_at: thresholds
            .iter()
            .map(|&t| (t, fraction_below(&trans, t as f64)))
            .collect(),
        auc_at: thresholds.iter().map(|&t| (t, auc(&max_err, t))).collect(),
        mre: rot.iter().sum::<f64>() / n,
        mte: trans.iter().sum::<f64>() / n,
        rotation_errors: rot,
        translation_errors: trans,
    })
}
