//! Spatial partition into blocks, the block visibility graph and its BFS
//! spanning tree, parameter validation, and vertex-level connectivity.

use std::collections::VecDeque;

use crate::error::{GsbmError, Result};
use crate::geometry::{unit_ball_volume, Aabb, TorusBox};
use crate::sampler::GsbmGraph;

/// Refuse grids with more blocks than this.
const MAX_BLOCKS: usize = 1 << 26;

/// Default ratio bounding the occupancy constant by the block constant.
pub const DEFAULT_DELTA_FACTOR: f64 = 0.5;

/// Partition of the torus into `k^d` equal cubes.
#[derive(Debug, Clone)]
pub struct BlockGrid {
    torus: TorusBox,
    blocks_per_axis: usize,
    block_side: f64,
    nominal_volume: f64,
    delta_threshold: f64,
    vertex_block: Vec<u32>,
    occupancy: Vec<u32>,
    block_start: Vec<usize>,
    block_members: Vec<u32>,
}

impl BlockGrid {
    /// Tiles the torus with cubes of volume at least `r^d chi log n` and
    /// assigns every vertex to the cube containing it.
    ///
    /// Fails if a block's diameter exceeds the visibility radius, since the
    /// first-phase classifier needs every pair inside a block to be visible.
    pub fn build(graph: &GsbmGraph, chi: f64, delta: f64) -> Result<Self> {
        if !(chi > 0.0) {
            return Err(GsbmError::InvalidArgument(format!("chi must be positive (got {chi})")));
        }
        if !(delta >= 0.0) {
            return Err(GsbmError::InvalidArgument(format!("delta must be non-negative (got {delta})")));
        }
        let torus = *graph.torus();
        let d = torus.d();
        let log_n = graph.scale().log_n();
        let nominal_volume = graph.profile().r().powi(d as i32) * chi * log_n;
        let nominal_side = nominal_volume.powf(1.0 / d as f64);
        let blocks_per_axis = ((torus.side() / nominal_side).floor() as usize).max(1);
        let total = blocks_per_axis
            .checked_pow(d as u32)
            .filter(|t| *t <= MAX_BLOCKS)
            .ok_or_else(|| GsbmError::InvalidGrid(format!("{blocks_per_axis}^{d} blocks is too many")))?;
        let block_side = torus.side() / blocks_per_axis as f64;
        let diameter = (d as f64).sqrt() * block_side;
        if diameter > graph.visibility_radius() {
            return Err(GsbmError::InvalidGrid(format!(
                "block diameter {diameter} exceeds the visibility radius {}; decrease chi",
                graph.visibility_radius()
            )));
        }

        let vertex_block: Vec<u32> = (0..graph.vertex_count())
            .map(|v| {
                graph.position(v).iter().fold(0usize, |acc, &x| {
                    let c = ((x / block_side) as usize).min(blocks_per_axis - 1);
                    acc * blocks_per_axis + c
                }) as u32
            })
            .collect();
        let mut occupancy = vec![0u32; total];
        for &b in &vertex_block {
            occupancy[b as usize] += 1;
        }
        let mut block_start = vec![0usize; total + 1];
        for b in 0..total {
            block_start[b + 1] = block_start[b] + occupancy[b] as usize;
        }
        let mut fill = block_start.clone();
        let mut block_members = vec![0u32; vertex_block.len()];
        for (v, &b) in vertex_block.iter().enumerate() {
            block_members[fill[b as usize]] = v as u32;
            fill[b as usize] += 1;
        }

        Ok(Self {
            torus,
            blocks_per_axis,
            block_side,
            nominal_volume,
            delta_threshold: delta * log_n,
            vertex_block,
            occupancy,
            block_start,
            block_members,
        })
    }

    pub fn blocks_per_axis(&self) -> usize {
        self.blocks_per_axis
    }

    pub fn block_count(&self) -> usize {
        self.occupancy.len()
    }

    pub fn block_side(&self) -> f64 {
        self.block_side
    }

    pub fn nominal_volume(&self) -> f64 {
        self.nominal_volume
    }

    /// `delta log n`.
    pub fn delta_threshold(&self) -> f64 {
        self.delta_threshold
    }

    pub fn occupancy(&self) -> &[u32] {
        &self.occupancy
    }

    pub fn block_of(&self, v: usize) -> usize {
        self.vertex_block[v] as usize
    }

    /// Vertex ids in block `b`, ascending.
    pub fn block_vertices(&self, b: usize) -> &[u32] {
        &self.block_members[self.block_start[b]..self.block_start[b + 1]]
    }

    pub fn is_occupied(&self, b: usize) -> bool {
        self.occupancy[b] as f64 >= self.delta_threshold
    }

    /// Ids of blocks holding at least `delta log n` vertices.
    pub fn occupied_blocks(&self) -> Vec<usize> {
        (0..self.block_count()).filter(|&b| self.is_occupied(b)).collect()
    }

    /// Per-axis grid coordinates of block `b` (axis 0 most significant).
    pub fn coords(&self, mut b: usize) -> Vec<usize> {
        let d = self.torus.d();
        let mut out = vec![0; d];
        for axis in (0..d).rev() {
            out[axis] = b % self.blocks_per_axis;
            b /= self.blocks_per_axis;
        }
        out
    }

    fn block_id(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.blocks_per_axis + c)
    }

    pub fn block_box(&self, b: usize) -> Aabb {
        let coords = self.coords(b);
        Aabb::new(
            coords.iter().map(|&c| c as f64 * self.block_side).collect(),
            coords.iter().map(|&c| (c + 1) as f64 * self.block_side).collect(),
        )
    }

    /// Whether blocks `a` and `b` are mutually visible (sup distance at most
    /// the visibility radius).
    pub fn mutually_visible(&self, a: usize, b: usize, radius: f64) -> bool {
        self.torus.block_sup_distance(&self.block_box(a), &self.block_box(b)) <= radius
    }

    /// Non-zero grid offsets (as residues mod k) of blocks visible from any
    /// block. Only offsets within `ceil(radius / side) + 1` steps are tried.
    fn visible_offsets(&self, radius: f64) -> Vec<Vec<usize>> {
        let k = self.blocks_per_axis;
        let reach = (radius / self.block_side).ceil() as usize + 1;
        let axis_offsets: Vec<usize> = if 2 * reach + 1 >= k {
            (0..k).collect()
        } else {
            (0..=reach).chain(k - reach..k).collect()
        };
        let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..self.torus.d() {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    axis_offsets.iter().map(move |&o| {
                        let mut p = prefix.clone();
                        p.push(o);
                        p
                    })
                })
                .collect();
        }
        let origin = self.block_box(0);
        combos
            .into_iter()
            .filter(|off| off.iter().any(|&o| o != 0))
            .filter(|off| {
                let other = self.block_box(self.block_id(off));
                self.torus.block_sup_distance(&origin, &other) <= radius
            })
            .collect()
    }
}

/// Graph on occupied blocks joined when mutually visible, plus a BFS
/// spanning tree rooted at the smallest occupied block id.
#[derive(Debug, Clone)]
pub struct VisibilityGraph {
    nodes: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    bfs_order: Vec<usize>,
    connected: bool,
}

impl VisibilityGraph {
    pub fn build(grid: &BlockGrid, graph: &GsbmGraph) -> Self {
        let radius = graph.visibility_radius();
        let nodes = grid.occupied_blocks();
        let mut slot = vec![u32::MAX; grid.block_count()];
        for (i, &b) in nodes.iter().enumerate() {
            slot[b] = i as u32;
        }
        let offsets = grid.visible_offsets(radius);
        let k = grid.blocks_per_axis;
        let adjacency: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&b| {
                let here = grid.coords(b);
                let mut out: Vec<usize> = offsets
                    .iter()
                    .map(|off| {
                        let c: Vec<usize> = here.iter().zip(off).map(|(h, o)| (h + o) % k).collect();
                        grid.block_id(&c)
                    })
                    .filter(|&other| slot[other] != u32::MAX)
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();

        let mut parent = vec![None; nodes.len()];
        let mut depth = vec![0; nodes.len()];
        let mut bfs_order = Vec::with_capacity(nodes.len());
        if !nodes.is_empty() {
            let mut seen = vec![false; nodes.len()];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(i) = queue.pop_front() {
                bfs_order.push(nodes[i]);
                for &nb in &adjacency[i] {
                    let j = slot[nb] as usize;
                    if !seen[j] {
                        seen[j] = true;
                        parent[j] = Some(nodes[i]);
                        depth[j] = depth[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        let connected = !nodes.is_empty() && bfs_order.len() == nodes.len();
        if !connected {
            parent.iter_mut().for_each(|p| *p = None);
            depth.iter_mut().for_each(|x| *x = 0);
            bfs_order.clear();
        }
        Self {
            nodes,
            adjacency,
            parent,
            depth,
            bfs_order,
            connected,
        }
    }

    /// Occupied block ids, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Visible occupied blocks of the `i`-th node, ascending block ids.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn root(&self) -> Option<usize> {
        self.bfs_order.first().copied()
    }

    /// Blocks in BFS order; empty unless connected.
    pub fn bfs_order(&self) -> &[usize] {
        &self.bfs_order
    }

    fn node_index(&self, block: usize) -> Option<usize> {
        self.nodes.binary_search(&block).ok()
    }

    pub fn parent(&self, block: usize) -> Option<usize> {
        self.node_index(block).and_then(|i| self.parent[i])
    }

    pub fn depth(&self, block: usize) -> Option<usize> {
        self.node_index(block).map(|i| self.depth[i])
    }

    /// BFS order split into consecutive runs of equal depth.
    pub fn levels(&self) -> Vec<&[usize]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.bfs_order.len() {
            if i == self.bfs_order.len()
                || self.depth(self.bfs_order[i]) != self.depth(self.bfs_order[start])
            {
                out.push(&self.bfs_order[start..i]);
                start = i;
            }
        }
        out
    }
}

/// Outcome of checking `(chi, delta)` against the connectivity conditions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the block-size and occupancy constants.
///
/// `delta` is only required to be positive and below `delta_factor * chi`;
/// the sharp occupancy constants are not computed here.
pub fn validate_parameters(
    d: usize,
    lambda: f64,
    r: f64,
    chi: f64,
    delta: f64,
    chi0: f64,
    delta_factor: f64,
) -> ValidationReport {
    let mut violations = Vec::new();
    let mut require = |ok: bool, msg: String| {
        if !ok {
            violations.push(msg);
        }
    };
    for (name, v) in [("lambda", lambda), ("r", r), ("chi", chi), ("chi0", chi0), ("delta_factor", delta_factor)] {
        require(v > 0.0, format!("{name} = {v} must be positive"));
    }
    if d == 0 {
        require(false, "d must be at least 1".into());
        return ValidationReport { violations };
    }
    if d == 1 {
        let lr = lambda * r;
        require(lr > 1.0, format!("lambda*r = {lr} must exceed 1"));
        let upper = (1.0 - 1.0 / lr) / 2.0;
        require(chi0 > 0.0 && chi0 < upper, format!("chi0 = {chi0} must lie in (0, {upper})"));
    } else {
        let shrink = 1.0 - 1.5 * (d as f64).sqrt() * chi0.powf(1.0 / d as f64);
        require(shrink > 0.0, format!("1 - (3 sqrt(d)/2) chi0^(1/d) = {shrink} must be positive"));
        let lhs = lambda * r.powi(d as i32) * (unit_ball_volume(d) * shrink.max(0.0).powi(d as i32) - chi0);
        require(lhs > 1.0, format!("lambda r^d (nu_d (1 - (3 sqrt(d)/2) chi0^(1/d))^d - chi0) = {lhs} must exceed 1"));
    }
    require(
        chi > chi0 / 2.0 && chi < chi0,
        format!("chi = {chi} must lie in (chi0/2, chi0) = ({}, {chi0})", chi0 / 2.0),
    );
    require(delta > 0.0, format!("delta = {delta} must be positive"));
    require(
        delta < delta_factor * chi,
        format!("delta = {delta} must be below delta_factor*chi = {}", delta_factor * chi),
    );
    ValidationReport { violations }
}

/// Block and occupancy constants that pass [`validate_parameters`], pushed
/// close to the upper ends of their ranges: large, well-filled blocks keep
/// propagation from flipping whole subtrees at moderate `n`.
/// `None` when no `chi0` is admissible.
pub fn suggest_parameters(d: usize, lambda: f64, r: f64, delta_factor: f64) -> Option<(f64, f64, f64)> {
    let chi0_max = if d == 1 {
        let lr = lambda * r;
        if lr <= 1.0 {
            return None;
        }
        (1.0 - 1.0 / lr) / 2.0
    } else {
        let c = 1.5 * (d as f64).sqrt();
        let nu = unit_ball_volume(d);
        let lhs = |x: f64| {
            let shrink = 1.0 - c * x.powf(1.0 / d as f64);
            lambda * r.powi(d as i32) * (nu * shrink.max(0.0).powi(d as i32) - x)
        };
        if lhs(0.0) <= 1.0 {
            return None;
        }
        // lhs decreases in chi0; bisect for the boundary.
        let (mut lo, mut hi) = (0.0, c.powi(-(d as i32)));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lhs(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let chi0 = 0.99 * chi0_max;
    let chi = 0.97 * chi0;
    Some((chi0, chi, 0.95 * delta_factor * chi))
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Returns whether the two sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        true
    }
}

/// Component id per vertex of the graph joining all pairs within the
/// visibility radius. Ids are numbered by smallest member.
pub fn vertex_visibility_components(graph: &GsbmGraph) -> Vec<usize> {
    let count = graph.vertex_count();
    let mut uf = UnionFind::new(count);
    for v in 0..count {
        graph.for_each_visible(v, |u, _| {
            if u > v {
                uf.union(u, v);
            }
        });
    }
    let mut id_of_root = vec![usize::MAX; count];
    let mut next = 0;
    (0..count)
        .map(|v| {
            let root = uf.find(v);
            if id_of_root[root] == usize::MAX {
                id_of_root[root] = next;
                next += 1;
            }
            id_of_root[root]
        })
        .collect()
}

/// Whether the vertex visibility graph is connected (empty counts as connected).
pub fn vertex_visibility_connected(graph: &GsbmGraph) -> bool {
    vertex_visibility_components(graph).iter().all(|&c| c == 0)
}
