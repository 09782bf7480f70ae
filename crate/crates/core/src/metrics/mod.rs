//! Coverage and sparsity diagnostics for sampled view sets, camera azimuth
//! statistics and relative pose errors.

mod azimuth;
mod pose;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, Vec3};
use crate::real::Real;
use crate::view_graph::ViewGraph;

pub use azimuth::{
    azimuth_bin, azimuth_coverage, azimuth_coverage_with, azimuth_degrees, rotational_coverage,
    AzimuthCoverage, GravityAxis, AZIMUTH_BINS,
};
pub use pose::{pose_pair_errors, PosePairErrors};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("sampled set is empty")]
    EmptySample,
    #[error("dispersion needs at least two sampled views, got {0}")]
    TooFewSamples(usize),
    #[error("view {0} is not in the graph")]
    UnknownNode(u32),
    #[error("view {0} has no position")]
    MissingPosition(u32),
    #[error("scene has no sparse points")]
    NoPoints,
    #[error("scene has no cameras")]
    NoCameras,
    #[error("pose lists differ in length: {pred} vs {gt}")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("pose {index}: view {pred} does not match view {gt}")]
    IdMismatch { index: usize, pred: u32, gt: u32 },
    #[error("pose evaluation needs at least two views, got {0}")]
    TooFewViews(usize),
}

fn indices(graph: &ViewGraph, sampled: &BTreeSet<u32>) -> Result<Vec<usize>, MetricsError> {
    sampled
        .iter()
        .map(|&v| graph.index_of(v).ok_or(MetricsError::UnknownNode(v)))
        .collect()
}

fn position<T: Real>(positions: &BTreeMap<u32, Vec3<T>>, v: u32) -> Result<&Vec3<T>, MetricsError> {
    positions.get(&v).ok_or(MetricsError::MissingPosition(v))
}

/// Fraction of graph nodes within `k` hops of some sampled view.
pub fn k_hop_coverage(
    graph: &ViewGraph,
    sampled: &BTreeSet<u32>,
    k: usize,
) -> Result<f64, MetricsError> {
    if sampled.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let hops = graph.bfs_hops(indices(graph, sampled)?);
    let reached = hops.iter().filter(|h| h.is_some_and(|h| h <= k)).count();
    Ok(reached as f64 / graph.node_count() as f64)
}

/// Mean over `nodes` of the Euclidean distance to the closest sampled view.
pub fn avg_nearest_sample_dist<T: Real>(
    positions: &BTreeMap<u32, Vec3<T>>,
    nodes: &BTreeSet<u32>,
    sampled: &BTreeSet<u32>,
) -> Result<T, MetricsError> {
    if sampled.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    if nodes.is_empty() {
        return Ok(T::zero());
    }
    let anchors = sampled
        .iter()
        .map(|&v| position(positions, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = T::zero();
    for &u in nodes {
        let pu = position(positions, u)?;
        let nearest = anchors
            .iter()
            .map(|p| distance(pu, p))
            .fold(T::infinity(), T::min);
        total = total + nearest;
    }
    Ok(total / T::from_usize(nodes.len()).expect("count fits"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dispersion<T> {
    /// Mean hop distance over connected sampled pairs; `None` if no pair is
    /// connected.
    pub graph: Option<f64>,
    /// Sampled pairs with no path between them, excluded from `graph`.
    pub disconnected_pairs: usize,
    pub euclidean: T,
}

/// Mean pairwise hop and Euclidean distances among sampled views.
pub fn dispersion<T: Real>(
    graph: &ViewGraph,
    positions: &BTreeMap<u32, Vec3<T>>,
    sampled: &BTreeSet<u32>,
) -> Result<Dispersion<T>, MetricsError> {
    if sampled.len() < 2 {
        return Err(MetricsError::TooFewSamples(sampled.len()));
    }
    let idx = indices(graph, sampled)?;
    let pos = sampled
        .iter()
        .map(|&v| position(positions, v))
        .collect::<Result<Vec<_>, _>>()?;

    let (mut hop_sum, mut connected, mut disconnected) = (0usize, 0usize, 0usize);
    for (a, &ia) in idx.iter().enumerate() {
        let hops = graph.bfs_hops([ia]);
        for &ib in &idx[a + 1..] {
            match hops[ib] {
                Some(h) => {
                    hop_sum += h;
                    connected += 1;
                }
                None => disconnected += 1,
            }
        }
    }
    let mut euclid = T::zero();
    for a in 0..pos.len() {
        for b in a + 1..pos.len() {
            euclid = euclid + distance(pos[a], pos[b]);
        }
    }
    let pairs = sampled.len() * (sampled.len() - 1) / 2;
    Ok(Dispersion {
        graph: (connected > 0).then(|| hop_sum as f64 / connected as f64),
        disconnected_pairs: disconnected,
        euclidean: euclid / T::from_usize(pairs).expect("count fits"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub sample_size: usize,
    pub k_hop_coverage: BTreeMap<usize, f64>,
    pub avg_nearest_sample_dist: f64,
    pub graph_dispersion: Option<f64>,
    pub disconnected_pairs: usize,
    pub euclidean_dispersion: Option<f64>,
}

/// All coverage statistics of one sampled set. Dispersion fields are `None`
/// for a single-view sample.
pub fn coverage_report<T: Real>(
    graph: &ViewGraph,
    positions: &BTreeMap<u32, Vec3<T>>,
    sampled: &BTreeSet<u32>,
    ks: &[usize],
) -> Result<CoverageReport, MetricsError> {
    let mut k_hop = BTreeMap::new();
    for &k in ks {
        k_hop.insert(k, k_hop_coverage(graph, sampled, k)?);
    }
    let nodes: BTreeSet<u32> = graph.nodes().iter().copied().collect();
    let near = avg_nearest_sample_dist(positions, &nodes, sampled)?;
    let disp = match dispersion(graph, positions, sampled) {
        Ok(d) => Some(d),
        Err(MetricsError::TooFewSamples(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(CoverageReport {
        sample_size: sampled.len(),
        k_hop_coverage: k_hop,
        avg_nearest_sample_dist: near.to_f64_lossy(),
        graph_dispersion: disp.and_then(|d| d.graph),
        disconnected_pairs: disp.map_or(0, |d| d.disconnected_pairs),
        euclidean_dispersion: disp.map(|d| d.euclidean.to_f64_lossy()),
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Field-wise mean of several reports; optional fields average their
/// present values. `disconnected_pairs` is summed.
pub fn mean_report(reports: &[CoverageReport]) -> Option<CoverageReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let k_hop = first
        .k_hop_coverage
        .keys()
        .map(|&k| {
            let m = mean(
                reports
                    .iter()
                    .filter_map(|r| r.k_hop_coverage.get(&k).copied()),
            );
            (k, m.unwrap_or(0.0))
        })
        .collect();
    Some(CoverageReport {
        sample_size: (reports.iter().map(|r| r.sample_size).sum::<usize>() as f64 / n).round()
            as usize,
        k_hop_coverage: k_hop,
        avg_nearest_sample_dist: mean(reports.iter().map(|r| r.avg_nearest_sample_dist))
            .unwrap_or(0.0),
        graph_dispersion: mean(reports.iter().filter_map(|r| r.graph_dispersion)),
        disconnected_pairs: reports.iter().map(|r| r.disconnected_pairs).sum(),
        euclidean_dispersion: mean(reports.iter().filter_map(|r| r.euclidean_dispersion)),
    })
}
