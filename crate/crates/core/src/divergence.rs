//! Information metric, Chernoff–Hellinger divergences and the moment
//! generating functions of the per-neighbour log-likelihood ratios.
//!
//! Radial integrals carry the weight `g(x) = d x^{d-1} / r^d` (the density of
//! the scaled distance to a uniform point in the visibility ball). They are
//! evaluated by composite Gauss–Legendre on every span where the profile is
//! linear, so the only non-smoothness (the knots) sits on panel boundaries.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{GsbmError, Result};
use crate::geometry::unit_ball_volume;
use crate::profiles::{Profile, Span};

const PANELS_PER_SPAN: usize = 4;

/// Interval width at which golden-section search stops.
pub const GOLDEN_TOL: f64 = 1e-10;

/// Tolerance on pmf and prior normalization.
const PMF_TOL: f64 = 1e-9;

/// Summary of the threshold quantity for one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    /// `I(f_in, f_out)`.
    pub i: f64,
    pub d_plus: f64,
    pub t_star: f64,
    pub quad_error: f64,
}

impl DivergenceReport {
    pub const CSV_HEADER: &'static str = "I,D_plus,t_star,quad_error";

    pub fn csv_row(&self) -> String {
        [self.i, self.d_plus, self.t_star, self.quad_error].map(format_real).join(",")
    }
}

/// Shortest round-tripping decimal, switching to exponent form for very
/// small or very large magnitudes.
pub fn format_real(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e16).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// One draw of `Z`, the log-likelihood ratio of a vertex's neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZSample {
    pub value: f64,
    pub n_plus: u64,
    pub n_minus: u64,
}

struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_m`.
    fn new(m: usize) -> Self {
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut deriv;
            loop {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 1..=m {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
                }
                deriv = m as f64 * (z * p1 - p2) / (z * z - 1.0);
                let step = p1 / deriv;
                z -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[m - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * deriv * deriv);
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: &F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

fn span_values(s: &Span, x: f64) -> (f64, f64) {
    let w = (x - s.lo) / (s.hi - s.lo);
    (
        s.f_in.0 + (s.f_in.1 - s.f_in.0) * w,
        s.f_out.0 + (s.f_out.1 - s.f_out.0) * w,
    )
}

/// `int_0^r h(f_in(x), f_out(x)) g(x) dx` and a error estimate from doubling
/// the node count.
pub fn radial_integral<H: Fn(f64, f64) -> f64>(profile: &Profile, d: usize, h: H) -> (f64, f64) {
    let r = profile.r();
    let norm = d as f64 / r.powi(d as i32);
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for span in profile.spans() {
        let f = |x: f64| {
            let (fi, fo) = span_values(span, x);
            h(fi, fo) * norm * x.powi(d as i32 - 1)
        };
        let width = (span.hi - span.lo) / PANELS_PER_SPAN as f64;
        for k in 0..PANELS_PER_SPAN {
            let a = span.lo + k as f64 * width;
            let b = if k + 1 == PANELS_PER_SPAN { span.hi } else { a + width };
            coarse += gl16().integrate(a, b, &f);
            fine += gl32().integrate(a, b, &f);
        }
    }
    (coarse, (coarse - fine).abs())
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(GsbmError::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// `lambda nu_d r^d`, the mean number of vertices visible from a point
/// divided by `log n`.
pub fn visible_mass(lambda: f64, r: f64, d: usize) -> f64 {
    lambda * unit_ball_volume(d) * r.powi(d as i32)
}

/// The information metric with its CH-divergence decomposition.
pub fn information_metric(profile: &Profile, lambda: f64, d: usize) -> Result<DivergenceReport> {
    check_dim(d)?;
    if !(lambda > 0.0) {
        return Err(GsbmError::InvalidArgument(format!("intensity must be positive (got {lambda})")));
    }
    let (integral, quad_error) = radial_integral(profile, d, |fi, fo| {
        1.0 - (fi * fo).sqrt() - ((1.0 - fi) * (1.0 - fo)).sqrt()
    });
    if !integral.is_finite() {
        return Err(GsbmError::InvalidArgument("quadrature did not produce a finite value".into()));
    }
    let (d_plus, t_star) = ch_divergence_profile(profile, d)?;
    let mass = visible_mass(lambda, profile.r(), d);
    Ok(DivergenceReport {
        i: mass * integral,
        d_plus,
        t_star,
        quad_error: mass * quad_error,
    })
}

/// `1 - min_t sum_i pi_i sum_x p_i(x)^t q_i(x)^{1-t}` and its minimizer.
pub fn ch_divergence_discrete(p: &[Vec<f64>], q: &[Vec<f64>], pi: &[f64]) -> Result<(f64, f64)> {
    if p.len() != q.len() {
        return Err(GsbmError::LengthMismatch(p.len(), q.len()));
    }
    if p.len() != pi.len() {
        return Err(GsbmError::LengthMismatch(p.len(), pi.len()));
    }
    check_pmf(pi, "prior")?;
    for (i, (pi_, qi)) in p.iter().zip(q).enumerate() {
        if pi_.len() != qi.len() {
            return Err(GsbmError::LengthMismatch(pi_.len(), qi.len()));
        }
        check_pmf(pi_, &format!("p[{i}]"))?;
        check_pmf(qi, &format!("q[{i}]"))?;
    }
    let objective = |t: f64| -> f64 {
        pi.iter()
            .zip(p.iter().zip(q))
            .map(|(w, (pi_, qi))| {
                w * pi_
                    .iter()
                    .zip(qi)
                    .map(|(&a, &b)| a.powf(t) * b.powf(1.0 - t))
                    .sum::<f64>()
            })
            .sum()
    };
    let (t_star, min) = golden_section(objective, 0.0, 1.0, GOLDEN_TOL);
    Ok(((1.0 - min).max(0.0), t_star))
}

fn check_pmf(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !(*x >= 0.0)) {
        return Err(GsbmError::InvalidArgument(format!("{what} has a negative or NaN entry")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > PMF_TOL {
        return Err(GsbmError::InvalidArgument(format!(
            "{what} is not normalized (sums to {total})"
        )));
    }
    Ok(())
}

/// Bernoulli-alphabet CH divergence of the profile under the symmetric prior,
/// with the radial weight; returns `(value, t_star)`.
pub fn ch_divergence_profile(profile: &Profile, d: usize) -> Result<(f64, f64)> {
    check_dim(d)?;
    let objective = |t: f64| 0.5 * (mgf_p(profile, d, t) + mgf_q(profile, d, t));
    let (t_star, min) = golden_section(objective, 0.0, 1.0, GOLDEN_TOL);
    Ok(((1.0 - min).max(0.0), t_star))
}

fn tilted(a: f64, b: f64, t: f64) -> f64 {
    a.powf(t) * b.powf(1.0 - t) + (1.0 - a).powf(t) * (1.0 - b).powf(1.0 - t)
}

/// Moment generating function of the log-ratio `P` (cross-community neighbour).
pub fn mgf_p(profile: &Profile, d: usize, t: f64) -> f64 {
    radial_integral(profile, d, |fi, fo| tilted(fi, fo, t)).0
}

/// Moment generating function of the log-ratio `Q` (same-community neighbour).
pub fn mgf_q(profile: &Profile, d: usize, t: f64) -> f64 {
    radial_integral(profile, d, |fi, fo| tilted(fo, fi, t)).0
}

/// Rate function of the mixed log-ratio at zero, `-log E[e^{W/2}]`.
pub fn rate_function_zero(profile: &Profile, d: usize) -> Result<f64> {
    check_dim(d)?;
    let (bc, _) = radial_integral(profile, d, |fi, fo| {
        (fi * fo).sqrt() + ((1.0 - fi) * (1.0 - fo)).sqrt()
    });
    Ok(-bc.ln())
}

/// Draws `Z` with both Poisson counts of mean `lambda nu_d r^d log n / 2`.
pub fn sample_z<R: Rng + ?Sized>(
    profile: &Profile,
    lambda: f64,
    d: usize,
    n: f64,
    rng: &mut R,
) -> Result<ZSample> {
    if !(n > 1.0) {
        return Err(GsbmError::InvalidScale(n));
    }
    let mean = 0.5 * visible_mass(lambda, profile.r(), d) * n.ln();
    let poisson = Poisson::new(mean)
        .map_err(|e| GsbmError::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
    let n_plus = poisson.sample(rng) as u64;
    let n_minus = poisson.sample(rng) as u64;
    Ok(sample_z_with_counts(profile, d, n_plus, n_minus, rng))
}

/// `Z` given the two counts: `n_plus` draws of `P` plus `n_minus` draws of `Q`.
pub fn sample_z_with_counts<R: Rng + ?Sized>(
    profile: &Profile,
    d: usize,
    n_plus: u64,
    n_minus: u64,
    rng: &mut R,
) -> ZSample {
    let r = profile.r();
    let inv_d = 1.0 / d as f64;
    let draw = |cross: bool, rng: &mut R| -> f64 {
        let dist = r * rng.random::<f64>().powf(inv_d);
        let (fi, fo) = profile.eval(dist);
        // P: neighbour in the other community, edge ~ Bern(f_out); Q mirrors it.
        let (num, den) = if cross { (fi, fo) } else { (fo, fi) };
        if rng.random::<f64>() < den {
            (num / den).ln()
        } else {
            ((1.0 - num) / (1.0 - den)).ln()
        }
    };
    let mut value = 0.0;
    for _ in 0..n_plus {
        value += draw(true, rng);
    }
    for _ in 0..n_minus {
        value += draw(false, rng);
    }
    ZSample {
        value,
        n_plus,
        n_minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn crossing() -> Profile {
        Profile::piecewise_linear(&[(0.0, 0.9), (1.0, 0.1)], &[(0.0, 0.1), (1.0, 0.9)], 1.0).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = GaussLegendre::new(16);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // Exact up to degree 31.
        let v = rule.integrate(0.0, 2.0, &|x: f64| x.powi(31));
        assert!((v / (2f64.powi(32) / 32.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn step_information_metric_closed_form() {
        let p = Profile::step(0.8, 0.2, 1.0).unwrap();
        let rep = information_metric(&p, 1.0, 1).unwrap();
        assert!((rep.i - 0.4).abs() < 1e-12);
        assert!((rep.d_plus - 0.2).abs() < 1e-12);
        assert!((rep.t_star - 0.5).abs() < 1e-6);
        let rep3 = information_metric(&p, 1.0, 3).unwrap();
        assert!((rep3.i - 4.0 * std::f64::consts::PI / 3.0 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn crossing_profile_has_positive_metric() {
        let rep = information_metric(&crossing(), 1.0, 1).unwrap();
        assert!(rep.i > 0.0);
        assert!(rep.quad_error < 1e-12);
    }

    #[test]
    fn near_equal_step() {
        let p = Profile::step(0.51, 0.49, 1.0).unwrap();
        let (v, _) = ch_divergence_profile(&p, 1).unwrap();
        let closed = 1.0 - (0.51f64 * 0.49).sqrt() - (0.49f64 * 0.51).sqrt();
        assert!(v <= 1e-3);
        assert!((v - closed).abs() < 1e-12);
        assert!((closed - 2e-4).abs() < 1e-6);
    }

    #[test]
    fn discrete_divergence_examples() {
        let b = |x: f64| vec![x, 1.0 - x];
        let (v, _) = ch_divergence_discrete(&[b(0.3), b(0.6)], &[b(0.3), b(0.6)], &[0.5, 0.5]).unwrap();
        assert!(v.abs() < 1e-15);
        let (v, t) = ch_divergence_discrete(&[b(0.8), b(0.2)], &[b(0.2), b(0.8)], &[0.5, 0.5]).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        assert!((t - 0.5).abs() < 1e-6);
        assert!(ch_divergence_discrete(&[vec![0.5, 0.6]], &[b(0.5)], &[1.0]).is_err());
        assert!(ch_divergence_discrete(&[b(0.5)], &[b(0.5)], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn mgf_endpoints_and_midpoint() {
        let p = crossing();
        for t in [0.0, 1.0] {
            assert!((mgf_p(&p, 2, t) - 1.0).abs() < 1e-12);
            assert!((mgf_q(&p, 2, t) - 1.0).abs() < 1e-12);
        }
        assert!((mgf_p(&p, 2, 0.5) - mgf_q(&p, 2, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn rate_function_step() {
        let p = Profile::step(0.8, 0.2, 1.0).unwrap();
        let v = rate_function_zero(&p, 1).unwrap();
        assert!((v + 0.8f64.ln()).abs() < 1e-12);
        assert!((v - 0.2231).abs() < 1e-4);
        let near = Profile::step(0.5 + 1e-6, 0.5 - 1e-6, 1.0).unwrap();
        assert!(rate_function_zero(&near, 1).unwrap() < 1e-10);
    }

    #[test]
    fn empty_z_sum_is_zero() {
        let p = Profile::step(0.8, 0.2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = sample_z_with_counts(&p, 1, 0, 0, &mut rng);
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn z_mean_is_negative() {
        let p = Profile::step(0.8, 0.2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_z(&p, 1.0, 1, 1000.0, &mut rng).unwrap().value)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let se = (var / draws.len() as f64).sqrt();
        assert!(mean < -5.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        let (t, v) = golden_section(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10);
        assert!((t - 0.3).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
