//! Baselines that know the truth: the genie-aided estimator, the census of
//! vertices whose likelihood ratio points the wrong way, and exhaustive MLE
//! on tiny graphs.

use rayon::prelude::*;

use crate::error::{GsbmError, Result};
use crate::recovery::{refine, tau};
use crate::sampler::GsbmGraph;

pub const MLE_MAX_VERTICES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FlipBadReport {
    pub count: usize,
    pub vertex_ids: Vec<usize>,
    /// `tau(v, sigma*)` for every vertex.
    pub tau_values: Vec<f64>,
}

/// Refine step fed the true labels.
pub fn genie_label(graph: &GsbmGraph, v: usize) -> i8 {
    refine(graph, graph.labels(), v)
}

/// Vertices whose own likelihood ratio, given everyone else's true label,
/// does not strictly favour their true label: `sigma*(v) tau(v, sigma*) <= 0`.
pub fn flip_bad_census(graph: &GsbmGraph) -> FlipBadReport {
    let truth = graph.labels();
    let tau_values: Vec<f64> = (0..graph.vertex_count())
        .into_par_iter()
        .map(|v| tau(graph, truth, v))
        .collect();
    let vertex_ids: Vec<usize> = tau_values
        .iter()
        .enumerate()
        .filter(|&(v, &t)| truth[v] as f64 * t <= 0.0)
        .map(|(v, _)| v)
        .collect();
    FlipBadReport {
        count: vertex_ids.len(),
        vertex_ids,
        tau_values,
    }
}

/// Visible pairs `u < v` with the log-probability of the observed edge state
/// when the endpoints share a community and when they do not.
fn pair_terms(graph: &GsbmGraph) -> Vec<(usize, usize, f64, f64)> {
    let profile = graph.profile();
    let scale = graph.scale();
    let mut out = Vec::new();
    for v in 0..graph.vertex_count() {
        let mut near = Vec::new();
        graph.for_each_visible(v, |u, dist| {
            if u > v {
                near.push((u, dist));
            }
        });
        near.sort_by_key(|&(u, _)| u);
        for (u, dist) in near {
            let (fi, fo) = profile.eval_scaled(dist, scale);
            let (same, cross) = if graph.has_edge(u, v) {
                (fi.ln(), fo.ln())
            } else {
                ((1.0 - fi).ln(), (1.0 - fo).ln())
            };
            out.push((v, u, same, cross));
        }
    }
    out
}

/// Log-probability of the observed edge pattern over visible pairs, given
/// positions and the labeling.
pub fn likelihood(graph: &GsbmGraph, labeling: &[i8]) -> f64 {
    pair_terms(graph)
        .into_iter()
        .map(|(v, u, same, cross)| if labeling[u] == labeling[v] { same } else { cross })
        .sum()
}

fn mask_labels(mask: u64, count: usize) -> Vec<i8> {
    (0..count)
        .map(|v| {
            if v == 0 || (mask >> (count - 1 - v)) & 1 == 1 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Exhaustive maximum-likelihood labeling with vertex 0 pinned to `+1`.
/// Exact ties go to the lexicographically smallest labeling (`-1 < +1`).
pub fn brute_force_mle(graph: &GsbmGraph) -> Result<(Vec<i8>, f64)> {
    let count = graph.vertex_count();
    if count > MLE_MAX_VERTICES {
        return Err(GsbmError::TooManyVertices {
            got: count,
            max: MLE_MAX_VERTICES,
        });
    }
    if count == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let terms = pair_terms(graph);
    let score = |mask: u64| -> f64 {
        let bit = |v: usize| v == 0 || (mask >> (count - 1 - v)) & 1 == 1;
        terms
            .iter()
            .map(|&(v, u, same, cross)| if bit(u) == bit(v) { same } else { cross })
            .sum()
    };
    let better = |a: (u64, f64), b: (u64, f64)| {
        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
            b
        } else {
            a
        }
    };
    let (mask, value) = (0..1u64 << (count - 1))
        .into_par_iter()
        .map(|m| (m, score(m)))
        .reduce(|| (u64::MAX, f64::NEG_INFINITY), better);
    Ok((mask_labels(mask, count), value))
}
