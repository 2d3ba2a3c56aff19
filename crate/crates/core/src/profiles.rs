//! Distance-dependent edge profiles `(f_in, f_out)`.
//!
//! Both functions are piecewise linear on `[0, r]` (constant pieces are the
//! special case of equal endpoint values) and vanish beyond `r`. Pieces are
//! left-closed and right-open, except that the last piece also owns `t = r`.
//! Because everything is linear between breakpoints, intersections, the
//! indistinguishable-set measure and `gamma` are all computed exactly.

use std::fmt;

use crate::error::{GsbmError, Result};

/// Absolute tolerance under which `f_in - f_out` counts as zero.
pub const INTERSECTION_TOL: f64 = 1e-12;

/// Number of candidates on the `default_epsilon` grid.
const EPS_GRID_LEN: usize = 16;

/// A function on `[0, r]` assembled from linear segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    /// Segment boundaries, `breaks[0] = 0` and the last entry is `r`.
    breaks: Vec<f64>,
    /// `(value at the left end, left limit at the right end)` per segment.
    values: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn constant(value: f64, r: f64) -> Self {
        Self {
            breaks: vec![0.0, r],
            values: vec![(value, value)],
        }
    }

    /// Linear interpolant through `(t, value)` knots.
    pub fn from_knots(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(GsbmError::InvalidProfile(
                "a piecewise-linear function needs at least two knots".into(),
            ));
        }
        if knots[0].0 != 0.0 {
            return Err(GsbmError::InvalidProfile(format!(
                "first knot must sit at t = 0 (got {})",
                knots[0].0
            )));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(GsbmError::InvalidProfile(format!(
                    "knot abscissas must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self {
            breaks: knots.iter().map(|k| k.0).collect(),
            values: knots.windows(2).map(|w| (w[0].1, w[1].1)).collect(),
        })
    }

    pub fn support_end(&self) -> f64 {
        *self.breaks.last().expect("at least one segment")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    fn segment_at(&self, t: f64) -> usize {
        // Index of the last break <= t, capped to the final segment so that t = r
        // lands in the closed last piece.
        let idx = self.breaks.partition_point(|&b| b <= t);
        idx.saturating_sub(1).min(self.values.len() - 1)
    }

    fn eval_segment(&self, seg: usize, t: f64) -> f64 {
        let (lo, hi) = (self.breaks[seg], self.breaks[seg + 1]);
        let (v0, v1) = self.values[seg];
        if v0 == v1 {
            return v0;
        }
        v0 + (v1 - v0) * (t - lo) / (hi - lo)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t > self.support_end() {
            return 0.0;
        }
        let t = t.max(0.0);
        self.eval_segment(self.segment_at(t), t)
    }

    fn extreme_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flat_map(|&(a, b)| [a, b])
    }
}

/// Literal description of a profile, as it appears in configuration files.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Step {
        a: f64,
        b: f64,
        r: f64,
    },
    PiecewiseLinear {
        knots_in: Vec<(f64, f64)>,
        knots_out: Vec<(f64, f64)>,
        r: f64,
    },
}

impl ProfileSpec {
    /// Support cutoff.
    pub fn r(&self) -> f64 {
        match self {
            ProfileSpec::Step { r, .. } | ProfileSpec::PiecewiseLinear { r, .. } => *r,
        }
    }

    pub fn build(&self) -> Result<Profile> {
        match self {
            ProfileSpec::Step { a, b, r } => Profile::step(*a, *b, *r),
            ProfileSpec::PiecewiseLinear {
                knots_in,
                knots_out,
                r,
            } => Profile::piecewise_linear(knots_in, knots_out, *r),
        }
    }

    /// Reads a profile from an inline-table value such as
    /// `{ kind = "step", a = 0.9, b = 0.1, r = 1 }`.
    pub fn from_toml(value: &toml::Value) -> std::result::Result<Self, String> {
        let table = value
            .as_table()
            .ok_or_else(|| "profile must be an inline table".to_string())?;
        let kind = table
            .get("kind")
            .and_then(toml::Value::as_str)
            .ok_or_else(|| "profile needs a string `kind`".to_string())?;
        let allowed: &[&str] = match kind {
            "step" => &["kind", "a", "b", "r"],
            "pwl" => &["kind", "knots_in", "knots_out", "r"],
            other => return Err(format!("unknown profile kind `{other}`")),
        };
        if let Some(extra) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("unknown profile field `{extra}`"));
        }
        let num = |key: &str| -> std::result::Result<f64, String> {
            table
                .get(key)
                .and_then(as_f64)
                .ok_or_else(|| format!("profile field `{key}` must be a number"))
        };
        let knots = |key: &str| -> std::result::Result<Vec<(f64, f64)>, String> {
            let err = || format!("profile field `{key}` must be a list of [t, value] pairs");
            let arr = table.get(key).and_then(toml::Value::as_array).ok_or_else(err)?;
            arr.iter()
                .map(|pair| {
                    let pair = pair.as_array().filter(|p| p.len() == 2).ok_or_else(err)?;
                    Ok((as_f64(&pair[0]).ok_or_else(err)?, as_f64(&pair[1]).ok_or_else(err)?))
                })
                .collect()
        };
        match kind {
            "step" => Ok(ProfileSpec::Step {
                a: num("a")?,
                b: num("b")?,
                r: num("r")?,
            }),
            _ => Ok(ProfileSpec::PiecewiseLinear {
                knots_in: knots("knots_in")?,
                knots_out: knots("knots_out")?,
                r: num("r")?,
            }),
        }
    }
}

pub(crate) fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl fmt::Display for ProfileSpec {
    /// Inline-table literal; floats use the shortest round-tripping form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn knots(f: &mut fmt::Formatter<'_>, ks: &[(f64, f64)]) -> fmt::Result {
            write!(f, "[")?;
            for (i, (t, v)) in ks.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "[{t:?}, {v:?}]")?;
            }
            write!(f, "]")
        }
        match self {
            ProfileSpec::Step { a, b, r } => {
                write!(f, "{{ kind = \"step\", a = {a:?}, b = {b:?}, r = {r:?} }}")
            }
            ProfileSpec::PiecewiseLinear {
                knots_in,
                knots_out,
                r,
            } => {
                write!(f, "{{ kind = \"pwl\", knots_in = ")?;
                knots(f, knots_in)?;
                write!(f, ", knots_out = ")?;
                knots(f, knots_out)?;
                write!(f, ", r = {r:?} }}")
            }
        }
    }
}

/// A stretch of `[0, r]` on which both functions are linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    /// `f_in` at `lo` and its left limit at `hi`.
    pub f_in: (f64, f64),
    /// `f_out` at `lo` and its left limit at `hi`.
    pub f_out: (f64, f64),
}

impl Span {
    pub fn diff(&self) -> (f64, f64) {
        (self.f_in.0 - self.f_out.0, self.f_in.1 - self.f_out.1)
    }

    /// Closed sub-interval of the span on which `|f_in - f_out| <= eps`.
    fn indistinct_interval(&self, eps: f64) -> Option<(f64, f64)> {
        let (d0, d1) = self.diff();
        if d0 == d1 {
            return (d0.abs() <= eps).then_some((self.lo, self.hi));
        }
        let lo_d = d0.min(d1).max(-eps);
        let hi_d = d0.max(d1).min(eps);
        if lo_d > hi_d {
            return None;
        }
        let at = |d: f64| self.lo + (self.hi - self.lo) * (d - d0) / (d1 - d0);
        let (a, b) = (at(lo_d), at(hi_d));
        Some((a.min(b).max(self.lo), a.max(b).min(self.hi)))
    }
}

/// The edge-probability pair with its regularity metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    spec: ProfileSpec,
    r: f64,
    f_in: PiecewiseLinear,
    f_out: PiecewiseLinear,
    xi: f64,
    intersections: Vec<f64>,
    spans: Vec<Span>,
}

impl Profile {
    /// `f_in = a`, `f_out = b` on `[0, r]`.
    pub fn step(a: f64, b: f64, r: f64) -> Result<Self> {
        if a == b {
            return Err(GsbmError::InvalidProfile(
                "degenerate profile: f_in = f_out everywhere".into(),
            ));
        }
        check_support(r)?;
        Self::assemble(
            ProfileSpec::Step { a, b, r },
            PiecewiseLinear::constant(a, r),
            PiecewiseLinear::constant(b, r),
        )
    }

    pub fn piecewise_linear(
        knots_in: &[(f64, f64)],
        knots_out: &[(f64, f64)],
        r: f64,
    ) -> Result<Self> {
        check_support(r)?;
        let f_in = PiecewiseLinear::from_knots(knots_in)?;
        let f_out = PiecewiseLinear::from_knots(knots_out)?;
        for (name, f) in [("f_in", &f_in), ("f_out", &f_out)] {
            if f.support_end() != r {
                return Err(GsbmError::InvalidProfile(format!(
                    "{name} knots must end at r = {r} (got {})",
                    f.support_end()
                )));
            }
        }
        Self::assemble(
            ProfileSpec::PiecewiseLinear {
                knots_in: knots_in.to_vec(),
                knots_out: knots_out.to_vec(),
                r,
            },
            f_in,
            f_out,
        )
    }

    fn assemble(spec: ProfileSpec, f_in: PiecewiseLinear, f_out: PiecewiseLinear) -> Result<Self> {
        let r = f_in.support_end();
        let mut lowest_margin = f64::INFINITY;
        for v in f_in.extreme_values().chain(f_out.extreme_values()) {
            if !(v > 0.0 && v < 1.0) {
                return Err(GsbmError::InvalidProfile(format!(
                    "edge probabilities must lie strictly inside (0, 1) on [0, r] (got {v})"
                )));
            }
            lowest_margin = lowest_margin.min(v.min(1.0 - v));
        }
        let spans = merge_spans(&f_in, &f_out);
        let intersections = solve_intersections(&spans)?;
        Ok(Self {
            spec,
            r,
            f_in,
            f_out,
            xi: lowest_margin / 2.0,
            intersections,
            spans,
        })
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn intersections(&self) -> &[f64] {
        &self.intersections
    }

    /// Maximal stretches on which both functions are linear, covering `[0, r]`.
    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    /// `(f_in(t), f_out(t))`, both zero for `t > r`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        (self.f_in.eval(t), self.f_out.eval(t))
    }

    /// Evaluates at a raw torus distance, undoing the `(log n)^{1/d}` stretch.
    pub fn eval_scaled(&self, distance: f64, scale: &Scale) -> (f64, f64) {
        self.eval(scale.to_unit(distance))
    }

    pub fn diff(&self, t: f64) -> f64 {
        let (a, b) = self.eval(t);
        a - b
    }

    /// Whether a point at unit distance `t` epsilon-distinguishes the other end.
    pub fn distinguishes(&self, t: f64, eps: f64) -> bool {
        self.diff(t).abs() > eps
    }

    pub fn max_abs_diff(&self) -> f64 {
        self.spans
            .iter()
            .flat_map(|s| {
                let (d0, d1) = s.diff();
                [d0.abs(), d1.abs()]
            })
            .fold(0.0, f64::max)
    }

    /// Lebesgue measure of `{t in [0, r] : |f_in(t) - f_out(t)| <= eps}`.
    pub fn indistinct_measure(&self, eps: f64) -> f64 {
        self.spans
            .iter()
            .filter_map(|s| s.indistinct_interval(eps))
            .map(|(a, b)| b - a)
            .sum()
    }

    /// Largest distance from a point where the two functions are within `eps`
    /// of each other to the nearest intersection point.
    pub fn gamma(&self, eps: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (a, b) in self.spans.iter().filter_map(|s| s.indistinct_interval(eps)) {
            if self.intersections.is_empty() {
                return Err(GsbmError::GammaUndefined);
            }
            // Distance to a finite set is piecewise linear: its max over [a, b]
            // sits at an endpoint or at a midpoint between consecutive roots.
            let mids = self.intersections.windows(2).map(|w| 0.5 * (w[0] + w[1]));
            for t in [a, b].into_iter().chain(mids.filter(|m| *m > a && *m < b)) {
                worst = worst.max(self.dist_to_intersections(t));
            }
        }
        Ok(worst)
    }

    fn dist_to_intersections(&self, t: f64) -> f64 {
        self.intersections
            .iter()
            .map(|ti| (t - ti).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest candidate on a log grid in `[max|diff|/256, max|diff|/2]` whose
    /// indistinguishable set has measure below `r / 4`.
    pub fn default_epsilon(&self) -> f64 {
        let grid = epsilon_grid(self.max_abs_diff());
        grid.iter()
            .rev()
            .copied()
            .find(|&eps| self.indistinct_measure(eps) < self.r / 4.0)
            .unwrap_or(grid[0])
    }
}

fn check_support(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(GsbmError::InvalidProfile(format!(
            "support cutoff r must be positive and finite (got {r})"
        )));
    }
    Ok(())
}

/// Ascending log-spaced candidates for `default_epsilon`.
pub fn epsilon_grid(max_diff: f64) -> Vec<f64> {
    let lo = max_diff / 256.0;
    let ratio: f64 = 128.0;
    (0..EPS_GRID_LEN)
        .map(|k| lo * ratio.powf(k as f64 / (EPS_GRID_LEN - 1) as f64))
        .collect()
}

fn merge_spans(f_in: &PiecewiseLinear, f_out: &PiecewiseLinear) -> Vec<Span> {
    let mut cuts: Vec<f64> = f_in
        .breakpoints()
        .iter()
        .chain(f_out.breakpoints())
        .copied()
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let side = |f: &PiecewiseLinear| {
                let seg = f.segment_at(lo);
                (f.eval_segment(seg, lo), f.eval_segment(seg, hi))
            };
            Span {
                lo,
                hi,
                f_in: side(f_in),
                f_out: side(f_out),
            }
        })
        .collect()
}

fn solve_intersections(spans: &[Span]) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    for (i, s) in spans.iter().enumerate() {
        let (d0, d1) = s.diff();
        let zero0 = d0.abs() <= INTERSECTION_TOL;
        let zero1 = d1.abs() <= INTERSECTION_TOL;
        if zero0 && zero1 {
            return Err(GsbmError::InvalidProfile(format!(
                "f_in and f_out coincide on [{}, {}]; intersections must be finite",
                s.lo, s.hi
            )));
        }
        if zero0 {
            roots.push(s.lo);
        } else if d0 * d1 < 0.0 {
            roots.push(s.lo + (s.hi - s.lo) * d0 / (d0 - d1));
        }
        // The right end only belongs to the last span (closed at r).
        if zero1 && i + 1 == spans.len() {
            roots.push(s.hi);
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= INTERSECTION_TOL);
    Ok(roots)
}

/// The `(log n)^{1/d}` stretch that maps unit distances onto the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    d: usize,
    n: f64,
    factor: f64,
}

impl Scale {
    pub fn new(d: usize, n: f64) -> Result<Self> {
        if !(n > 1.0) || !n.is_finite() {
            return Err(GsbmError::InvalidScale(n));
        }
        if d == 0 {
            return Err(GsbmError::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self {
            d,
            n,
            factor: n.ln().powf(1.0 / d as f64),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn log_n(&self) -> f64 {
        self.n.ln()
    }

    /// `(log n)^{1/d}`.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn to_unit(&self, distance: f64) -> f64 {
        distance / self.factor
    }
}
