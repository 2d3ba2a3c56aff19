//! Sampling GSBM instances and the line-oriented graph file format.
//!
//! Draw order from the seeded ChaCha8 stream: the Poisson vertex count, then
//! for each vertex in id order its `d` coordinates followed by its label.
//! Edges use a separate counter-based uniform per unordered pair (see
//! [`crate::seeds::pair_uniform`]), so edge generation is parallel and
//! independent of traversal order.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{GsbmError, Result};
use crate::geometry::{CellIndex, TorusBox};
use crate::profiles::{Profile, Scale};
use crate::seeds::pair_uniform;

/// A sampled (or loaded) instance: positions, hidden labels and edges.
#[derive(Debug, Clone)]
pub struct GsbmGraph {
    scale: Scale,
    lambda: f64,
    profile: Profile,
    index: CellIndex,
    labels: Vec<i8>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    seed: u64,
}

impl GsbmGraph {
    /// Assembles a graph from explicit parts, checking every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        d: usize,
        n: f64,
        lambda: f64,
        profile: Profile,
        positions: Vec<f64>,
        labels: Vec<i8>,
        edges: &[(usize, usize)],
        seed: u64,
    ) -> Result<Self> {
        let scale = Scale::new(d, n)?;
        let torus = TorusBox::new(d, n)?;
        let radius = profile.r() * scale.factor();
        if positions.len() != labels.len() * d {
            return Err(GsbmError::LengthMismatch(positions.len() / d, labels.len()));
        }
        if let Some(x) = positions.iter().find(|x| !(**x >= 0.0 && **x < torus.side())) {
            return Err(GsbmError::InvalidArgument(format!(
                "coordinate {x} outside [0, {})",
                torus.side()
            )));
        }
        if let Some(l) = labels.iter().find(|l| l.abs() != 1) {
            return Err(GsbmError::InvalidArgument(format!("label {l} is not +1 or -1")));
        }
        let index = CellIndex::build(torus, positions, radius)?;
        let count = labels.len();
        let mut adjacency = vec![Vec::new(); count];
        for &(u, v) in edges {
            if u >= count || v >= count {
                return Err(GsbmError::UnknownVertex(u.max(v)));
            }
            if u == v {
                return Err(GsbmError::InvalidArgument(format!("self-loop at {u}")));
            }
            if index.distance(u, v) > radius {
                return Err(GsbmError::InvalidArgument(format!(
                    "edge {{{u}, {v}}} spans {} > visibility radius {radius}",
                    index.distance(u, v)
                )));
            }
            adjacency[u].push(v as u32);
            adjacency[v].push(u as u32);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let (offsets, targets) = to_csr(adjacency);
        Ok(Self {
            scale,
            lambda,
            profile,
            index,
            labels,
            offsets,
            targets,
            seed,
        })
    }

    pub fn d(&self) -> usize {
        self.scale.d()
    }

    pub fn n(&self) -> f64 {
        self.scale.n()
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn torus(&self) -> &TorusBox {
        self.index.torus()
    }

    pub fn index(&self) -> &CellIndex {
        &self.index
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Ground-truth labels, each `+1` or `-1`.
    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn position(&self, v: usize) -> &[f64] {
        self.index.position(v)
    }

    /// `r (log n)^{1/d}`: no edge is longer than this.
    pub fn visibility_radius(&self) -> f64 {
        self.index.radius()
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.index.distance(u, v)
    }

    /// Sorted neighbour ids of `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// `(f_in, f_out)` at the distance between `u` and `v`.
    pub fn edge_probabilities(&self, u: usize, v: usize) -> (f64, f64) {
        self.profile.eval_scaled(self.distance(u, v), &self.scale)
    }

    /// Calls `f(u, distance)` for every `u` visible from `v`, i.e. within the
    /// closed visibility radius.
    pub fn for_each_visible<F: FnMut(usize, f64)>(&self, v: usize, f: F) {
        self.index.for_each_near(v, self.visibility_radius(), true, f);
    }

    /// Ids strictly inside the visibility radius of `v`.
    pub fn neighborhood(&self, v: usize) -> Result<Vec<usize>> {
        self.index.neighbors_within(v, self.visibility_radius())
    }

    /// Average degree `2|E| / |V|`, zero for an empty graph.
    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.targets.len() as f64 / self.vertex_count() as f64
    }

    /// Copy with every label negated; positions and edges are untouched.
    pub fn with_flipped_labels(&self) -> Self {
        let mut out = self.clone();
        out.labels.iter_mut().for_each(|l| *l = -*l);
        out
    }
}

fn to_csr(adjacency: Vec<Vec<u32>>) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = Vec::with_capacity(adjacency.len() + 1);
    offsets.push(0);
    let mut total = 0;
    for list in &adjacency {
        total += list.len();
        offsets.push(total);
    }
    (offsets, adjacency.into_iter().flatten().collect())
}

/// Draws an instance: Poisson(`lambda * n`) uniform points on the torus,
/// i.i.d. uniform labels, and an edge between each visible pair with
/// probability `f_in` or `f_out` of the scaled distance.
pub fn sample(lambda: f64, n: f64, profile: &Profile, d: usize, seed: u64) -> Result<GsbmGraph> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(GsbmError::InvalidArgument(format!("intensity must be positive (got {lambda})")));
    }
    let scale = Scale::new(d, n)?;
    let torus = TorusBox::new(d, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(lambda * n)
        .map_err(|e| GsbmError::InvalidArgument(format!("Poisson mean {}: {e}", lambda * n)))?;
    let count = poisson.sample(&mut rng) as usize;

    let side = torus.side();
    let mut positions = Vec::with_capacity(count * d);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..d {
            // Guard against rounding up to `side` itself.
            let x = rng.random::<f64>() * side;
            positions.push(if x < side { x } else { 0.0 });
        }
        labels.push(if rng.random::<bool>() { 1 } else { -1 });
    }

    let radius = profile.r() * scale.factor();
    // Number vertices cell by cell so spatial neighbours get nearby ids;
    // every later pass over visible pairs then stays cache-local.
    let draft = CellIndex::build(torus, positions, radius)?;
    let order = draft.cell_order();
    let positions: Vec<f64> = order.iter().flat_map(|&v| draft.position(v as usize).iter().copied()).collect();
    let labels: Vec<i8> = order.iter().map(|&v| labels[v as usize]).collect();
    let index = CellIndex::build(torus, positions, radius)?;
    let forward: Vec<Vec<u32>> = (0..count)
        .into_par_iter()
        .map(|u| {
            let mut out = Vec::new();
            index.for_each_near(u, radius, true, |v, dist| {
                if v <= u {
                    return;
                }
                let (f_in, f_out) = profile.eval_scaled(dist, &scale);
                let p = if labels[u] == labels[v] { f_in } else { f_out };
                if pair_uniform(seed, u, v) < p {
                    out.push(v as u32);
                }
            });
            out
        })
        .collect();

    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); count];
    for (u, list) in forward.into_iter().enumerate() {
        for &v in &list {
            adjacency[v as usize].push(u as u32);
        }
        adjacency[u].extend(list);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    let (offsets, targets) = to_csr(adjacency);
    Ok(GsbmGraph {
        scale,
        lambda,
        profile: profile.clone(),
        index,
        labels,
        offsets,
        targets,
        seed,
    })
}

/// Writes the `gsbm v1` text format.
pub fn write_graph<W: Write>(graph: &GsbmGraph, mut out: W) -> Result<()> {
    writeln!(
        out,
        "gsbm v1 d={} n={} lambda={} r={} seed={} count={}",
        graph.d(),
        graph.n(),
        graph.lambda(),
        graph.profile().r(),
        graph.seed(),
        graph.vertex_count()
    )?;
    for v in 0..graph.vertex_count() {
        write!(out, "v {v}")?;
        for x in graph.position(v) {
            write!(out, " {x}")?;
        }
        writeln!(out, " {}", graph.labels()[v])?;
    }
    for (u, v) in graph.edges() {
        writeln!(out, "e {u} {v}")?;
    }
    Ok(())
}

/// Reads the `gsbm v1` format. The file records only `r`, so the caller
/// supplies the full profile, whose cutoff must match.
pub fn read_graph<R: BufRead>(input: R, profile: &Profile) -> Result<GsbmGraph> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, msg: String| GsbmError::GraphFormat { line: line + 1, msg };

    let (_, header) = lines.next().ok_or_else(|| bad(0, "empty file".into()))?;
    let header = header?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("gsbm") || fields.next() != Some("v1") {
        return Err(bad(0, "expected header starting with `gsbm v1`".into()));
    }
    let mut get = |key: &str| -> Result<String> {
        let tok = fields.next().ok_or_else(|| bad(0, format!("missing `{key}=`")))?;
        tok.strip_prefix(key)
            .and_then(|t| t.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| bad(0, format!("expected `{key}=...`, found `{tok}`")))
    };
    let num = |s: String, key: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| bad(0, format!("{key}: {e}")))
    };
    let d: usize = get("d")?.parse().map_err(|e| bad(0, format!("d: {e}")))?;
    let n = num(get("n")?, "n")?;
    let lambda = num(get("lambda")?, "lambda")?;
    let r = num(get("r")?, "r")?;
    let seed: u64 = get("seed")?.parse().map_err(|e| bad(0, format!("seed: {e}")))?;
    let count: usize = get("count")?.parse().map_err(|e| bad(0, format!("count: {e}")))?;
    if r != profile.r() {
        return Err(bad(0, format!("file has r = {r} but the profile has r = {}", profile.r())));
    }

    let mut positions = Vec::with_capacity(count * d);
    let mut labels = Vec::with_capacity(count);
    let mut edges = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first() {
            None => continue,
            Some(&"v") => {
                if toks.len() != d + 3 {
                    return Err(bad(i, format!("vertex line needs {} fields", d + 3)));
                }
                let id: usize = toks[1].parse().map_err(|e| bad(i, format!("vertex id: {e}")))?;
                if id != labels.len() || !edges.is_empty() {
                    return Err(bad(i, format!("vertex {id} out of order")));
                }
                for t in &toks[2..2 + d] {
                    positions.push(t.parse::<f64>().map_err(|e| bad(i, format!("coordinate: {e}")))?);
                }
                let label: i8 = toks[2 + d].parse().map_err(|e| bad(i, format!("label: {e}")))?;
                labels.push(label);
            }
            Some(&"e") => {
                if toks.len() != 3 {
                    return Err(bad(i, "edge line needs 3 fields".into()));
                }
                let u: usize = toks[1].parse().map_err(|e| bad(i, format!("edge: {e}")))?;
                let v: usize = toks[2].parse().map_err(|e| bad(i, format!("edge: {e}")))?;
                if u >= v {
                    return Err(bad(i, format!("edge ids must satisfy lo < hi ({u} {v})")));
                }
                edges.push((u, v));
            }
            Some(other) => return Err(bad(i, format!("unknown record `{other}`"))),
        }
    }
    if labels.len() != count {
        return Err(bad(0, format!("header promises {count} vertices, found {}", labels.len())));
    }
    GsbmGraph::from_parts(d, n, lambda, profile.clone(), positions, labels, &edges, seed)
}
