//! Toroidal geometry on the box of volume `n` in `d` dimensions.
//!
//! Coordinates live in `[0, side)` on every axis. A box centred on the origin
//! differs by a translation, which the wrap-around metric cannot see.

use std::f64::consts::PI;

use crate::error::{GsbmError, Result};

/// The torus `[0, side)^d` with `side^d = n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusBox {
    d: usize,
    side: f64,
    n: f64,
}

impl TorusBox {
    pub fn new(d: usize, n: f64) -> Result<Self> {
        if d == 0 {
            return Err(GsbmError::InvalidArgument("dimension must be at least 1".into()));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(GsbmError::InvalidArgument(format!("volume must be positive (got {n})")));
        }
        Ok(Self {
            d,
            side: n.powf(1.0 / d as f64),
            n,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.n
    }

    /// Per-axis wrap-around distance between two coordinates.
    #[inline]
    pub fn axis_distance(&self, a: f64, b: f64) -> f64 {
        let delta = (a - b).abs();
        delta.min(self.side - delta)
    }

    #[inline]
    pub fn distance_squared(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .map(|(&a, &b)| {
                let w = self.axis_distance(a, b);
                w * w
            })
            .sum()
    }

    /// Euclidean toroidal metric.
    #[inline]
    pub fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        self.distance_squared(u, v).sqrt()
    }

    /// Supremum of the toroidal distance over `x in a`, `y in b`.
    pub fn block_sup_distance(&self, a: &Aabb, b: &Aabb) -> f64 {
        a.lo.iter()
            .zip(&a.hi)
            .zip(b.lo.iter().zip(&b.hi))
            .map(|((&a0, &a1), (&b0, &b1))| {
                let s = circular_sup(b0 - a1, b1 - a0, self.side);
                s * s
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Largest circular distance attained by a coordinate difference in `[lo, hi]`
/// on a circle of circumference `len`.
fn circular_sup(lo: f64, hi: f64, len: f64) -> f64 {
    let half = 0.5 * len;
    if hi - lo >= len {
        return half;
    }
    // Is some half + k*len inside [lo, hi]?
    let k = ((lo - half) / len).ceil();
    if half + k * len <= hi {
        return half;
    }
    let wrap = |x: f64| {
        let m = x.rem_euclid(len);
        m.min(len - m)
    };
    wrap(lo).max(wrap(hi))
}

/// Axis-aligned box, closed on both ends of each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }
}

/// Volume of the unit ball in `d` dimensions, `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // nu_d = nu_{d-2} * 2 pi / d, seeded with nu_0 = 1 and nu_1 = 2.
    let mut nu = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        nu *= 2.0 * PI / k as f64;
        k += 2;
    }
    nu
}

/// Cell-list index over a fixed point set for radius queries.
///
/// Cells have side at least the build radius, so a query at that radius only
/// needs the `3^d` cells around the query point. With fewer than three cells
/// per axis the index degenerates to a single cell and a query scans all points.
#[derive(Debug, Clone)]
pub struct CellIndex {
    torus: TorusBox,
    positions: Vec<f64>,
    radius: f64,
    cells_per_axis: usize,
    cell_side: f64,
    cell_start: Vec<usize>,
    members: Vec<u32>,
    /// Precomputed `{-1, 0, 1}^d` cell offsets (empty when degenerate).
    stencil: Vec<Vec<isize>>,
}

impl CellIndex {
    /// Builds the index over `positions` (flattened, `d` coordinates per point).
    pub fn build(torus: TorusBox, positions: Vec<f64>, radius: f64) -> Result<Self> {
        let d = torus.d();
        if positions.len() % d != 0 {
            return Err(GsbmError::InvalidArgument(format!(
                "position buffer length {} is not a multiple of d = {d}",
                positions.len()
            )));
        }
        if !(radius > 0.0) {
            return Err(GsbmError::InvalidArgument(format!("radius must be positive (got {radius})")));
        }
        let mut cells_per_axis = (torus.side() / radius).floor() as usize;
        if cells_per_axis < 3 {
            cells_per_axis = 1;
        }
        let cell_side = torus.side() / cells_per_axis as f64;
        let n_cells = cells_per_axis.pow(d as u32);
        let count = positions.len() / d;

        let cell_of = |p: &[f64]| -> usize {
            p.iter().fold(0, |acc, &x| {
                let c = ((x / cell_side) as usize).min(cells_per_axis - 1);
                acc * cells_per_axis + c
            })
        };
        let cells: Vec<usize> = positions.chunks_exact(d).map(cell_of).collect();
        let mut cell_start = vec![0usize; n_cells + 1];
        for &c in &cells {
            cell_start[c + 1] += 1;
        }
        for i in 0..n_cells {
            cell_start[i + 1] += cell_start[i];
        }
        let mut fill = cell_start.clone();
        let mut members = vec![0u32; count];
        for (v, &c) in cells.iter().enumerate() {
            members[fill[c]] = v as u32;
            fill[c] += 1;
        }

        let stencil = if cells_per_axis == 1 {
            Vec::new()
        } else {
            let mut out = vec![Vec::new()];
            for _ in 0..d {
                out = out
                    .into_iter()
                    .flat_map(|prefix: Vec<isize>| {
                        (-1..=1).map(move |o| {
                            let mut p = prefix.clone();
                            p.push(o);
                            p
                        })
                    })
                    .collect();
            }
            out
        };

        Ok(Self {
            torus,
            positions,
            radius,
            cells_per_axis,
            cell_side,
            cell_start,
            members,
            stencil,
        })
    }

    pub fn torus(&self) -> &TorusBox {
        &self.torus
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    #[inline]
    pub fn position(&self, v: usize) -> &[f64] {
        let d = self.torus.d();
        &self.positions[v * d..(v + 1) * d]
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.torus.distance(self.position(u), self.position(v))
    }

    /// Calls `f(u, distance)` for every `u != v` with `distance < radius`, or
    /// `distance <= radius` when `inclusive`. `radius` may not exceed the
    /// build radius.
    pub fn for_each_near<F: FnMut(usize, f64)>(&self, v: usize, radius: f64, inclusive: bool, mut f: F) {
        debug_assert!(radius <= self.radius * (1.0 + 1e-12));
        let p = self.position(v);
        let r2 = radius * radius;
        let mut visit = |u: u32| {
            let u = u as usize;
            if u == v {
                return;
            }
            let d2 = self.torus.distance_squared(p, self.position(u));
            if d2 < r2 || (inclusive && d2 == r2) {
                f(u, d2.sqrt());
            }
        };
        if self.stencil.is_empty() {
            self.members.iter().copied().for_each(&mut visit);
            return;
        }
        let k = self.cells_per_axis as isize;
        let home: Vec<isize> = p
            .iter()
            .map(|&x| ((x / self.cell_side) as isize).min(k - 1))
            .collect();
        for offset in &self.stencil {
            let cell = home
                .iter()
                .zip(offset)
                .fold(0usize, |acc, (&h, &o)| acc * k as usize + (h + o).rem_euclid(k) as usize);
            let members = &self.members[self.cell_start[cell]..self.cell_start[cell + 1]];
            members.iter().copied().for_each(&mut visit);
        }
    }

    /// All ids, grouped cell by cell in row-major cell order.
    pub fn cell_order(&self) -> &[u32] {
        &self.members
    }

    /// Ids strictly closer than `radius` to `v`, ascending.
    pub fn neighbors_within(&self, v: usize, radius: f64) -> Result<Vec<usize>> {
        if v >= self.len() {
            return Err(GsbmError::UnknownVertex(v));
        }
        let mut out = Vec::new();
        self.for_each_near(v, radius, false, |u, _| out.push(u));
        out.sort_unstable();
        Ok(out)
    }
}
