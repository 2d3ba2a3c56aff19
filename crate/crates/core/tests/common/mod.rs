//! Helpers shared by the integration suites. Everything here is written
//! from the model definition, without going through the crate's indexes.
#![allow(dead_code)]

use gsbm::{GsbmGraph, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Wrap-around distance computed coordinate by coordinate.
pub fn naive_distance(graph: &GsbmGraph, u: usize, v: usize) -> f64 {
    let side = graph.torus().side();
    graph
        .position(u)
        .iter()
        .zip(graph.position(v))
        .map(|(a, b)| {
            let dx = (a - b).abs();
            let dx = dx.min(side - dx);
            dx * dx
        })
        .sum::<f64>()
        .sqrt()
}

pub fn naive_probs(graph: &GsbmGraph, u: usize, v: usize) -> (f64, f64) {
    let t = naive_distance(graph, u, v) / graph.n().ln().powf(1.0 / graph.d() as f64);
    graph.profile().eval(t)
}

/// Random piecewise-linear profile on `[0, 1]` with 2-5 knots per function
/// and values in `[0.05, 0.95]`.
pub fn random_pwl(rng: &mut impl Rng) -> Profile {
    let knots = |rng: &mut dyn rand::RngCore| {
        let inner = rng.random_range(0..4);
        let mut ts: Vec<f64> = (0..inner).map(|_| rng.random_range(0.05..0.95)).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let mut out = vec![(0.0, rng.random_range(0.05..0.95))];
        out.extend(ts.into_iter().map(|t| (t, rng.random_range(0.05..0.95))));
        out.push((1.0, rng.random_range(0.05..0.95)));
        out
    };
    let knots_in = knots(rng);
    let knots_out = knots(rng);
    Profile::piecewise_linear(&knots_in, &knots_out, 1.0).expect("random profile is valid")
}

/// Labels of `graph` with entries zeroed at random.
pub fn partial_labels(graph: &GsbmGraph, rng: &mut impl Rng, keep: f64) -> Vec<i8> {
    graph
        .labels()
        .iter()
        .map(|&l| {
            if rng.random_bool(keep) {
                if rng.random_bool(0.8) {
                    l
                } else {
                    -l
                }
            } else {
                0
            }
        })
        .collect()
}

pub fn edge_set(graph: &GsbmGraph) -> std::collections::HashSet<(usize, usize)> {
    graph.edges().collect()
}

fn has(edges: &std::collections::HashSet<(usize, usize)>, u: usize, v: usize) -> bool {
    edges.contains(&(u.min(v), u.max(v)))
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Pairwise statistic from the two literal conditional probabilities of a
/// common neighbour (anchor and `v` alike vs. unlike).
pub fn naive_x(graph: &GsbmGraph, block: &[u32], v: usize) -> f64 {
    let edges = edge_set(graph);
    let u0 = *block.iter().min().unwrap() as usize;
    let mut x = 0.0;
    for &u in block {
        let u = u as usize;
        if u == u0 || u == v {
            continue;
        }
        let (a1, b1) = naive_probs(graph, u, u0);
        let (a2, b2) = naive_probs(graph, u, v);
        let alike = 0.5 * (a1 * a2 + b1 * b2);
        let unlike = 0.5 * (a1 * b2 + b1 * a2);
        let alpha = sgn((a1 - b1) * (a2 - b2));
        let observed = if has(&edges, u, u0) && has(&edges, u, v) { 1.0 } else { 0.0 };
        x += alpha * (observed - 0.5 * (alike + unlike));
    }
    x
}

pub fn naive_y(graph: &GsbmGraph, parent: &[u32], sigma: &[i8], v: usize, eps: f64) -> f64 {
    let edges = edge_set(graph);
    let dist: Vec<(usize, f64, f64)> = parent
        .iter()
        .map(|&u| {
            let (a, b) = naive_probs(graph, u as usize, v);
            (u as usize, a, b)
        })
        .filter(|&(_, a, b)| (a - b).abs() > eps)
        .collect();
    let plus = dist.iter().filter(|&&(u, _, _)| sigma[u] == 1).count();
    let minus = dist.iter().filter(|&&(u, _, _)| sigma[u] == -1).count();
    let mut y = 0.0;
    if plus >= minus {
        for &(u, a, b) in dist.iter().filter(|&&(u, _, _)| sigma[u] == 1) {
            y += sgn(a - b) * (if has(&edges, u, v) { 1.0 } else { 0.0 } - (a + b) / 2.0);
        }
    } else {
        for &(u, a, b) in dist.iter().filter(|&&(u, _, _)| sigma[u] == -1) {
            y += sgn(b - a) * (if has(&edges, u, v) { 1.0 } else { 0.0 } - (a + b) / 2.0);
        }
    }
    y
}

/// Plus-labelled sum minus minus-labelled sum over every visible vertex.
pub fn naive_tau(graph: &GsbmGraph, sigma: &[i8], v: usize) -> f64 {
    let edges = edge_set(graph);
    let (mut plus, mut minus) = (0.0, 0.0);
    for u in 0..graph.vertex_count() {
        if u == v || naive_distance(graph, u, v) > graph.visibility_radius() {
            continue;
        }
        let (a, b) = naive_probs(graph, u, v);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let term = if has(&edges, u, v) { (a / b).ln() } else { ((1.0 - a) / (1.0 - b)).ln() };
        match sigma[u] {
            1 => plus += term,
            -1 => minus += term,
            _ => {}
        }
    }
    plus - minus
}

/// Largest wrap-around distance between points of two axis-aligned boxes,
/// worked out per axis from the interval of coordinate differences.
pub fn naive_sup_distance(side: f64, a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
    let mut total = 0.0;
    for axis in 0..a.0.len() {
        let lo = a.0[axis] - b.1[axis];
        let hi = a.1[axis] - b.0[axis];
        let circ = |z: f64| {
            let m = z.rem_euclid(side);
            m.min(side - m)
        };
        // Does [lo, hi] contain a point congruent to side/2?
        let k = ((lo - side / 2.0) / side).ceil();
        let worst = if side / 2.0 + k * side <= hi { side / 2.0 } else { circ(lo).max(circ(hi)) };
        total += worst * worst;
    }
    total.sqrt()
}

/// Occupied blocks, neighbour lists and BFS order by all-pairs scan.
pub fn naive_block_graph(graph: &GsbmGraph, grid: &gsbm::BlockGrid) -> (Vec<usize>, Vec<Vec<usize>>, Vec<usize>) {
    let nodes: Vec<usize> = (0..grid.block_count()).filter(|&b| grid.occupancy()[b] as f64 >= grid.delta_threshold()).collect();
    let side = graph.torus().side();
    let boxes: Vec<_> = nodes.iter().map(|&b| grid.block_box(b)).collect();
    let adjacency: Vec<Vec<usize>> = (0..nodes.len())
        .map(|i| {
            (0..nodes.len())
                .filter(|&j| {
                    j != i
                        && naive_sup_distance(side, (&boxes[i].lo, &boxes[i].hi), (&boxes[j].lo, &boxes[j].hi))
                            <= graph.visibility_radius()
                })
                .map(|j| nodes[j])
                .collect()
        })
        .collect();
    let mut order = Vec::new();
    if !nodes.is_empty() {
        let mut seen = vec![false; nodes.len()];
        let mut queue = std::collections::VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            order.push(nodes[i]);
            for &b in &adjacency[i] {
                let j = nodes.iter().position(|&x| x == b).unwrap();
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    (nodes, adjacency, order)
}
