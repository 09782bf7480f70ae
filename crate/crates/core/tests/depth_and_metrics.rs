mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailview::depth_filter::{filter_depth, removal_mask, DepthMap, FilterConfig};
use tailview::geometry::{mat_mul, mat_vec, scale, transpose, Quaternion};
use tailview::metrics::{
    avg_nearest_sample_dist, azimuth_coverage, dispersion, k_hop_coverage, pose_pair_errors,
};
use tailview::recon_io::PosedView;
use tailview::synth::{gen_depth_fixture, gen_ring_scene, SynthSpec};

fn scaled(m: &DepthMap<f64>, s: f64) -> DepthMap<f64> {
    m.scaled(s)
}

#[test]
fn fixture_mask_covers_blob() {
    for seed in 0..10 {
        let f = gen_depth_fixture::<f64>(&SynthSpec::depth_fixture(seed)).unwrap();
        let (out, report) = filter_depth(&f.geom, &f.mono, &FilterConfig::default()).unwrap();
        let mask = removal_mask(&f.geom, &out);
        assert!(f.blob.iter().all(|&i| mask[i]));
        let outside = mask
            .iter()
            .enumerate()
            .filter(|(i, m)| **m && !f.blob.contains(i))
            .count();
        assert!(outside as f64 <= 0.02 * (mask.len() - f.blob.len()) as f64);
        assert_eq!(report.removed_total, f.blob.len() + outside);
    }
}

#[test]
fn empty_blob_removes_nothing() {
    let spec = SynthSpec {
        blob_size: 0,
        ..SynthSpec::depth_fixture(5)
    };
    let f = gen_depth_fixture::<f32>(&spec).unwrap();
    let (out, report) = filter_depth(&f.geom, &f.mono, &FilterConfig::default()).unwrap();
    assert_eq!(report.removed_total, 0);
    assert_eq!(out, f.geom);
}

#[test]
fn mono_scale_does_not_change_mask() {
    let base = gen_depth_fixture::<f64>(&SynthSpec {
        mono_scale: Some(1.0),
        ..SynthSpec::depth_fixture(2)
    })
    .unwrap();
    let other = gen_depth_fixture::<f64>(&SynthSpec {
        mono_scale: Some(2.7),
        ..SynthSpec::depth_fixture(2)
    })
    .unwrap();
    let cfg = FilterConfig::default();
    let a = removal_mask(
        &base.geom,
        &filter_depth(&base.geom, &base.mono, &cfg).unwrap().0,
    );
    let b = removal_mask(
        &other.geom,
        &filter_depth(&other.geom, &other.mono, &cfg).unwrap().0,
    );
    assert_eq!(a, b);
    let c = removal_mask(
        &base.geom,
        &filter_depth(&scaled(&base.geom, 10.0), &base.mono, &cfg)
            .unwrap()
            .0,
    );
    assert_eq!(a, c);
}

#[test]
fn ring_azimuth_coverage_is_full() {
    let s = gen_ring_scene::<f64>(&SynthSpec {
        noise_sigma: 0.0,
        ..SynthSpec::ring(36, 1, 0)
    })
    .unwrap();
    let cov = azimuth_coverage(&s.scene).unwrap();
    assert_eq!(cov.positional_pct, 1.0);
    assert_eq!(cov.rotational_pct, 1.0);
    let nine = gen_ring_scene::<f64>(&SynthSpec {
        noise_sigma: 0.0,
        ..SynthSpec::ring(9, 1, 0)
    })
    .unwrap();
    assert_eq!(azimuth_coverage(&nine.scene).unwrap().positional_pct, 0.25);
}

fn random_views(rng: &mut ChaCha8Rng, n: u32) -> Vec<PosedView<f64>> {
    (0..n)
        .map(|i| {
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalized();
            let t = [
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            ];
            PosedView::new(i, 1, q, t, format!("{i}"))
        })
        .collect()
}

/// Applies `x ↦ s·Q·x + c` to the world frame of every pose.
fn similarity(
    views: &[PosedView<f64>],
    q: &Quaternion<f64>,
    s: f64,
    c: [f64; 3],
) -> Vec<PosedView<f64>> {
    let qm = q.to_matrix();
    views
        .iter()
        .map(|v| {
            let r = mat_mul(&v.rotation.to_matrix(), &transpose(&qm));
            let center = {
                let p = scale(&mat_vec(&qm, &v.position), s);
                [p[0] + c[0], p[1] + c[1], p[2] + c[2]]
            };
            let t = mat_vec(&r, &center).map(|x| -x);
            PosedView::new(
                v.view_id,
                1,
                Quaternion::from_matrix(&r),
                t,
                v.image_name.clone(),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nearest_distance_matches_sorted_matrix(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..60u32);
        let pos: BTreeMap<u32, [f64; 3]> = (0..n)
            .map(|v| (v, [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]))
            .collect();
        let nodes: BTreeSet<u32> = (0..n).collect();
        let sampled: BTreeSet<u32> = (0..n).filter(|_| rng.random_bool(0.3)).chain([0]).collect();
        let mut total = 0.0;
        for u in &nodes {
            let mut d: Vec<f64> = sampled
                .iter()
                .map(|s| (0..3).map(|k| (pos[u][k] - pos[s][k]).powi(2)).sum::<f64>().sqrt())
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            total += d[0];
        }
        let got = avg_nearest_sample_dist(&pos, &nodes, &sampled).unwrap();
        prop_assert!((got - total / n as f64).abs() < 1e-12);
    }

    #[test]
    fn dispersion_and_coverage_match_all_pairs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..25u32);
        let edges = common::random_edges(&mut rng, n, 0.15, (50, 100));
        let g = common::graph(n, &edges);
        let pos: BTreeMap<u32, [f64; 3]> = (0..n).map(|v| (v, [v as f64, 0.0, 0.0])).collect();
        let sampled: BTreeSet<u32> = (0..n).filter(|_| rng.random_bool(0.4)).chain([0, n - 1]).collect();
        let hops = common::hop_matrix(n as usize, &edges);
        let (mut sum, mut cnt, mut missing) = (0usize, 0usize, 0usize);
        let list: Vec<u32> = sampled.iter().copied().collect();
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                match hops[a as usize][b as usize] {
                    Some(h) => { sum += h; cnt += 1; }
                    None => missing += 1,
                }
            }
        }
        let d = dispersion(&g, &pos, &sampled).unwrap();
        prop_assert_eq!(d.disconnected_pairs, missing);
        prop_assert_eq!(d.graph, (cnt > 0).then(|| sum as f64 / cnt as f64));

        let mut prev = 0.0;
        for k in 0..5 {
            let reached = (0..n as usize)
                .filter(|&u| sampled.iter().any(|&s| hops[u][s as usize].is_some_and(|h| h <= k)))
                .count();
            let c = k_hop_coverage(&g, &sampled, k).unwrap();
            prop_assert_eq!(c, reached as f64 / n as f64);
            prop_assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn pose_errors_invariant_under_similarity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..8u32);
        let gt = random_views(&mut rng, n);
        let pred = random_views(&mut rng, n);
        let q = Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.5).normalized();
        let s = rng.random_range(0.1..10.0);
        let moved = similarity(&pred, &q, s, [1.0, -2.0, 0.5]);
        let a = pose_pair_errors(&pred, &gt, &[5, 30]).unwrap();
        let b = pose_pair_errors(&moved, &gt, &[5, 30]).unwrap();
        for (x, y) in a.rotation_errors.iter().zip(&b.rotation_errors) {
            prop_assert!((x - y).abs() < 1e-6);
        }
        for (x, y) in a.translation_errors.iter().zip(&b.translation_errors) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }
}
