//! Two-phase exact recovery: pairwise classification of a root block,
//! propagation along the block spanning tree, then per-vertex refinement.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{GsbmError, Result};
use crate::partition::{BlockGrid, VisibilityGraph};
use crate::sampler::GsbmGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Phase1,
    Phase2,
}

/// Labels in `{-1, 0, +1}` per vertex; 0 means "not labelled".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub values: Vec<i8>,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    FailDisconnected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::FailDisconnected => "fail_disconnected",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    /// Final (refined) labels.
    pub labeling: Labeling,
    pub phase1: Labeling,
    pub status: Status,
    /// Labelled phase-1 vertices disagreeing with the truth, minimised over
    /// the global flip.
    pub mistakes_phase1: usize,
    /// Largest per-block phase-1 mistake count, oriented by the root vertex.
    pub max_block_mistakes: usize,
    pub occupied_blocks: usize,
    pub epsilon: f64,
    pub runtime_breakdown: BTreeMap<&'static str, Duration>,
}

/// Label sign with the tie rule `sign(0) = +1`.
#[inline]
pub fn tie_sign(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

#[inline]
fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Statistic used to label `v` against the anchor `u0` from common
/// neighbours inside the block.
pub fn x_statistic(graph: &GsbmGraph, block: &[u32], u0: usize, v: usize) -> f64 {
    let mut x = 0.0;
    for &u in block {
        let u = u as usize;
        if u == u0 || u == v {
            continue;
        }
        let (fi1, fo1) = graph.edge_probabilities(u, u0);
        let (fi2, fo2) = graph.edge_probabilities(u, v);
        let alpha = signum0((fi1 - fo1) * (fi2 - fo2));
        if alpha == 0.0 {
            continue;
        }
        let joint = 0.25 * (fi1 + fo1) * (fi2 + fo2);
        let observed = (graph.has_edge(u, u0) && graph.has_edge(u, v)) as u8 as f64;
        x += alpha * (observed - joint);
    }
    x
}

/// Labels a block whose vertices are pairwise visible. The smallest id is
/// the anchor and gets `+1`. Output is aligned with `block`.
pub fn pairwise_classify(graph: &GsbmGraph, block: &[u32]) -> Vec<i8> {
    let Some(&u0) = block.iter().min() else {
        return Vec::new();
    };
    let u0 = u0 as usize;
    block
        .iter()
        .map(|&v| {
            let v = v as usize;
            if v == u0 {
                1
            } else {
                tie_sign(x_statistic(graph, block, u0, v))
            }
        })
        .collect()
}

/// Statistic used to label `v` from an already labelled parent block,
/// using only parent vertices that `eps`-distinguish `v`.
pub fn y_statistic(graph: &GsbmGraph, parent: &[u32], sigma: &[i8], v: usize, eps: f64) -> f64 {
    let profile = graph.profile();
    let scale = graph.scale();
    let distinguishing = |u: usize| profile.distinguishes(scale.to_unit(graph.distance(u, v)), eps);
    let (mut plus, mut minus) = (0usize, 0usize);
    for &u in parent {
        let u = u as usize;
        if distinguishing(u) {
            match sigma[u] {
                1 => plus += 1,
                -1 => minus += 1,
                _ => {}
            }
        }
    }
    let (side, orient) = if plus >= minus { (1i8, 1.0) } else { (-1i8, -1.0) };
    let mut y = 0.0;
    for &u in parent {
        let u = u as usize;
        if sigma[u] != side || !distinguishing(u) {
            continue;
        }
        let (fi, fo) = graph.edge_probabilities(u, v);
        let beta = orient * signum0(fi - fo);
        let observed = graph.has_edge(u, v) as u8 as f64;
        y += beta * (observed - 0.5 * (fi + fo));
    }
    y
}

/// Labels every vertex of `child` from the labelled `parent` block.
pub fn propagate(graph: &GsbmGraph, parent: &[u32], sigma: &[i8], child: &[u32], eps: f64) -> Vec<i8> {
    child
        .iter()
        .map(|&v| tie_sign(y_statistic(graph, parent, sigma, v as usize, eps)))
        .collect()
}

/// Log-likelihood ratio of `v` being `+1` rather than `-1` given the labels
/// of its visible vertices (unlabelled ones are skipped).
pub fn tau(graph: &GsbmGraph, sigma: &[i8], v: usize) -> f64 {
    let profile = graph.profile();
    let scale = graph.scale();
    let neighbors = graph.neighbors(v);
    let mut total = 0.0;
    graph.for_each_visible(v, |u, dist| {
        let s = sigma[u];
        if s == 0 {
            return;
        }
        let (fi, fo) = profile.eval_scaled(dist, scale);
        if fi == fo {
            return;
        }
        let term = if neighbors.binary_search(&(u as u32)).is_ok() {
            (fi / fo).ln()
        } else {
            ((1.0 - fi) / (1.0 - fo)).ln()
        };
        total += s as f64 * term;
    });
    total
}

pub fn refine(graph: &GsbmGraph, sigma: &[i8], v: usize) -> i8 {
    tie_sign(tau(graph, sigma, v))
}

/// Per-block phase-1 mistake bound `65 (d + 1) / (eps^2 delta)`.
pub fn m_bound(d: usize, eps: f64, delta: f64) -> f64 {
    65.0 * (d as f64 + 1.0) / (eps * eps * delta)
}

/// Fraction of vertices on which the labelings agree, maximised over a
/// global sign flip. Zero entries never match. Empty input gives 1.
pub fn agreement(a: &[i8], b: &[i8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GsbmError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let (mut same, mut flipped) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        if x != 0 && y != 0 {
            if x == y {
                same += 1;
            } else {
                flipped += 1;
            }
        }
    }
    Ok(same.max(flipped) as f64 / a.len() as f64)
}

/// Runs both phases. A disconnected block graph yields `FailDisconnected`
/// with an all-zero phase-1 labeling that is still refined (every vertex
/// then ties to `+1`).
pub fn run_exact_recovery(
    graph: &GsbmGraph,
    chi: f64,
    delta: f64,
    eps_override: Option<f64>,
) -> Result<RecoveryOutcome> {
    let eps = eps_override.unwrap_or_else(|| graph.profile().default_epsilon());
    if !(eps > 0.0) {
        return Err(GsbmError::InvalidArgument(format!("epsilon must be positive (got {eps})")));
    }
    let mut runtime = BTreeMap::new();
    let clock = Instant::now();
    let grid = BlockGrid::build(graph, chi, delta)?;
    let tree = VisibilityGraph::build(&grid, graph);
    runtime.insert("partition", clock.elapsed());

    let clock = Instant::now();
    let mut phase1 = vec![0i8; graph.vertex_count()];
    let status = if tree.is_connected() {
        let levels = tree.levels();
        let root = grid.block_vertices(levels[0][0]);
        for (&v, l) in root.iter().zip(pairwise_classify(graph, root)) {
            phase1[v as usize] = l;
        }
        for level in &levels[1..] {
            let labelled: Vec<(usize, Vec<i8>)> = level
                .par_iter()
                .map(|&b| {
                    let parent = tree.parent(b).expect("non-root block has a parent");
                    let labels = propagate(graph, grid.block_vertices(parent), &phase1, grid.block_vertices(b), eps);
                    (b, labels)
                })
                .collect();
            for (b, labels) in labelled {
                for (&v, l) in grid.block_vertices(b).iter().zip(labels) {
                    phase1[v as usize] = l;
                }
            }
        }
        Status::Ok
    } else {
        Status::FailDisconnected
    };
    runtime.insert("phase1", clock.elapsed());

    let clock = Instant::now();
    let phase2: Vec<i8> = (0..graph.vertex_count())
        .into_par_iter()
        .map(|v| refine(graph, &phase1, v))
        .collect();
    runtime.insert("phase2", clock.elapsed());

    let truth = graph.labels();
    let (mut wrong, mut wrong_if_flipped) = (0usize, 0usize);
    for (&p, &t) in phase1.iter().zip(truth) {
        if p != 0 {
            if p == t {
                wrong_if_flipped += 1;
            } else {
                wrong += 1;
            }
        }
    }
    let max_block_mistakes = match tree.root() {
        Some(root) => {
            let anchor = grid.block_vertices(root)[0] as usize;
            let orient = truth[anchor];
            tree.nodes()
                .iter()
                .map(|&b| {
                    grid.block_vertices(b)
                        .iter()
                        .filter(|&&v| {
                            let p = phase1[v as usize];
                            p != 0 && p != orient * truth[v as usize]
                        })
                        .count()
                })
                .max()
                .unwrap_or(0)
        }
        None => 0,
    };

    Ok(RecoveryOutcome {
        labeling: Labeling {
            values: phase2,
            phase: Phase::Phase2,
        },
        phase1: Labeling {
            values: phase1,
            phase: Phase::Phase1,
        },
        status,
        mistakes_phase1: wrong.min(wrong_if_flipped),
        max_block_mistakes,
        occupied_blocks: tree.nodes().len(),
        epsilon: eps,
        runtime_breakdown: runtime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Profile;
    use crate::sampler::sample;

    fn step(a: f64, b: f64) -> Profile {
        Profile::step(a, b, 1.0).unwrap()
    }

    #[test]
    fn agreement_examples() {
        assert_eq!(agreement(&[1, -1, 1], &[1, -1, 1]).unwrap(), 1.0);
        assert_eq!(agreement(&[1, -1, 1], &[-1, 1, -1]).unwrap(), 1.0);
        assert_eq!(agreement(&[1, 1, 1, 1], &[1, 1, -1, -1]).unwrap(), 0.5);
        assert_eq!(agreement(&[0, 1], &[1, 1]).unwrap(), 0.5);
        assert!(matches!(agreement(&[1], &[1, 1]), Err(GsbmError::LengthMismatch(1, 2))));
    }

    #[test]
    fn small_blocks_tie_to_plus() {
        let g = GsbmGraph::from_parts(1, 1000.0, 1.0, step(0.9, 0.1), vec![1.0, 1.5], vec![1, -1], &[], 0).unwrap();
        assert_eq!(pairwise_classify(&g, &[0]), vec![1]);
        assert_eq!(pairwise_classify(&g, &[0, 1]), vec![1, 1]);
        // No distinguishing parents: Y_v = 0, tie to +1.
        assert_eq!(propagate(&g, &[0], &[1, 0], &[1], 0.9), vec![1]);
        // No labelled visible neighbours: tau = 0.
        assert_eq!(tau(&g, &[0, 0], 1), 0.0);
        assert_eq!(refine(&g, &[0, 0], 1), 1);
    }

    #[test]
    fn tau_single_edge() {
        let g =
            GsbmGraph::from_parts(1, 1000.0, 1.0, step(0.9, 0.1), vec![1.0, 1.5], vec![1, 1], &[(0, 1)], 0).unwrap();
        assert!((tau(&g, &[1, 0], 1) - 9f64.ln()).abs() < 1e-15);
        assert_eq!(refine(&g, &[1, 0], 1), 1);
        assert!((tau(&g, &[-1, 0], 1) + 9f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_conditionals() {
        // Literal conditionals given the anchor's label relation to u and v.
        let p = step(0.7, 0.2);
        for (t1, t2) in [(0.3, 0.8), (0.5, 0.5), (0.9, 0.1)] {
            let (a1, b1) = p.eval(t1);
            let (a2, b2) = p.eval(t2);
            let same = 0.5 * (a1 * a2 + b1 * b2);
            let diff = 0.5 * (a1 * b2 + b1 * a2);
            let marginal = 0.5 * (same + diff);
            assert!((marginal - 0.25 * (a1 + b1) * (a2 + b2)).abs() < 1e-12);
            assert_eq!((same - diff).signum(), ((a1 - b1) * (a2 - b2)).signum());
        }
    }

    #[test]
    fn single_block_graph_runs_pairwise_then_refine() {
        // Everyone inside [0, 1.3); the rest of the torus is empty.
        let positions: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
        let labels: Vec<i8> = (0..12).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
        let edges: Vec<(usize, usize)> =
            (0..12).flat_map(|u| (u + 1..12).map(move |v| (u, v))).filter(|&(u, v)| labels[u] == labels[v]).collect();
        let g = GsbmGraph::from_parts(1, 1000.0, 1.0, step(0.9, 0.1), positions, labels, &edges, 0).unwrap();
        let out = run_exact_recovery(&g, 0.3, 0.5, None).unwrap();
        assert_eq!(out.status, Status::Ok);
        assert_eq!(out.occupied_blocks, 1);
        let block: Vec<u32> = (0..12).collect();
        assert_eq!(out.phase1.values, pairwise_classify(&g, &block));
        let refined: Vec<i8> = (0..12).map(|v| refine(&g, &out.phase1.values, v)).collect();
        assert_eq!(out.labeling.values, refined);
    }

    #[test]
    fn recovers_easy_instance() {
        let g = sample(4.0, 20000.0, &step(0.9, 0.1), 1, 11).unwrap();
        let out = run_exact_recovery(&g, 0.36, 0.175, None).unwrap();
        assert_eq!(out.status, Status::Ok);
        assert_eq!(agreement(&out.labeling.values, g.labels()).unwrap(), 1.0);
    }

    #[test]
    fn global_flip_equivariance() {
        for seed in 0..5 {
            let g = sample(4.0, 5000.0, &step(0.9, 0.1), 1, seed).unwrap();
            let a = run_exact_recovery(&g, 0.36, 0.175, None).unwrap();
            let b = run_exact_recovery(&g.with_flipped_labels(), 0.36, 0.175, None).unwrap();
            assert_eq!(agreement(&a.labeling.values, &b.labeling.values).unwrap(), 1.0);
        }
    }

    #[test]
    fn disconnected_reports_failure() {
        let g = sample(0.5, 5000.0, &step(0.9, 0.1), 1, 1).unwrap();
        let out = run_exact_recovery(&g, 0.36, 0.175, None).unwrap();
        assert_eq!(out.status, Status::FailDisconnected);
        assert!(out.phase1.values.iter().all(|&l| l == 0));
        assert!(out.labeling.values.iter().all(|&l| l == 1));
    }

    #[test]
    fn m_bound_value() {
        assert!((m_bound(1, 0.5, 0.1) - 65.0 * 2.0 / 0.025).abs() < 1e-9);
    }
}
