mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailview::community::{CommunityAssignment, LouvainParams};
use tailview::sampler::{
    dfs_subsample, greedy_step, sample_batch, Phase, Preset, SamplingConfig, SceneSampler,
};
use tailview::synth::{gen_grid_scene, gen_ring_scene, SynthSpec};
use tailview::view_graph::DEFAULT_PRUNE_THRESHOLD;

fn ring_sampler(
    clusters: usize,
    size: usize,
    seed: u64,
) -> (SceneSampler<f64>, Vec<tailview::MatchEdge>) {
    let s = gen_ring_scene::<f64>(&SynthSpec::ring(clusters, size, seed)).unwrap();
    let edges = s.scene.edges.clone();
    let sampler = SceneSampler::new(
        &s.scene,
        DEFAULT_PRUNE_THRESHOLD,
        &LouvainParams {
            seed,
            ..Default::default()
        },
    );
    (sampler, edges)
}

#[test]
fn depth_splits_greedy_and_fill() {
    let grid = gen_grid_scene::<f64>(&SynthSpec::grid(10, 10, 1)).unwrap();
    let sampler = SceneSampler::new(
        &grid.scene,
        DEFAULT_PRUNE_THRESHOLD,
        &LouvainParams::default(),
    );
    for seed in 0..8 {
        let full = sampler
            .sample(&SamplingConfig {
                n_views: 24,
                n_cc: 1,
                depth: 24,
                seed,
                ..Default::default()
            })
            .unwrap();
        assert_eq!(full.views.len(), 24);
        assert_eq!(full.count_phase(Phase::Fill), 0);
        let half = sampler
            .sample(&SamplingConfig {
                n_views: 24,
                n_cc: 1,
                depth: 12,
                seed,
                ..Default::default()
            })
            .unwrap();
        assert_eq!(half.count_phase(Phase::Fill), 12);
    }
}

#[test]
fn small_scene_truncates() {
    let (sampler, _) = ring_sampler(2, 3, 0);
    let b = sampler
        .sample(&SamplingConfig {
            n_views: 24,
            n_cc: 1,
            depth: 24,
            ..Default::default()
        })
        .unwrap();
    assert!(b.truncated);
    assert_eq!(b.views.len(), 6);
}

#[test]
fn convenience_entry_point_is_deterministic() {
    let s = gen_ring_scene::<f64>(&SynthSpec::ring(6, 6, 2)).unwrap();
    let config = SamplingConfig::from_preset(Preset::Sparse, 24, 11);
    assert_eq!(
        sample_batch(&s.scene, &config).unwrap(),
        sample_batch(&s.scene, &config).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_matches_full_sort(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..12u32);
        let edges = common::random_connected_edges(&mut rng, n, 0.4, (50, 60));
        let g = common::graph(n, &edges);
        let labels: BTreeMap<u32, usize> = (0..n).map(|v| (v, rng.random_range(0..3))).collect();
        let comms = CommunityAssignment::from_labels(labels.iter().map(|(&v, &c)| (v, c)));
        let dense: BTreeMap<u32, usize> = (0..n).map(|v| (v, comms.label(v).unwrap())).collect();
        // Integer coordinates make equal distances common.
        let positions: BTreeMap<u32, [f64; 3]> = (0..n)
            .map(|v| (v, [rng.random_range(0..3) as f64, 0.0, rng.random_range(0..3) as f64]))
            .collect();
        let current = rng.random_range(0..n);
        let mut sampled: BTreeSet<u32> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        sampled.insert(current);
        let got = greedy_step(&g, current, &sampled, &comms, &positions).unwrap();
        prop_assert_eq!(got, common::greedy_oracle(&edges, current, &sampled, &dense, &positions));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn batches_respect_invariants(seed in any::<u64>(), preset in 0usize..3, n in 2usize..=30) {
        let (sampler, edges) = ring_sampler(8, 6, seed % 4);
        let preset = [Preset::Dense, Preset::Sparse, Preset::Mixed][preset];
        let config = SamplingConfig::from_preset(preset, n, seed);
        let b = sampler.sample(&config).unwrap();
        prop_assert_eq!(b.views.len(), n);
        prop_assert_eq!(b.provenance.len(), n);
        prop_assert_eq!(b.view_set().len(), n);
        prop_assert!(!b.truncated);
        let kept: Vec<_> = edges.iter().copied().filter(|e| e.match_count >= DEFAULT_PRUNE_THRESHOLD).collect();
        prop_assert!(common::induced_components(&kept, &b.view_set()) <= b.config.n_cc);
        prop_assert_eq!(sampler.sample(&config).unwrap(), b.clone());

        if n >= 2 {
            let k = 2 + (seed as usize % (n - 1));
            let d = dfs_subsample(&b, sampler.graph(), k, seed).unwrap();
            prop_assert_eq!(d.views.len(), k);
            prop_assert!(d.view_set().is_subset(&b.view_set()));
            prop_assert!(d.provenance.iter().all(|p| p.phase == Phase::Dfs));
        }
    }
}
