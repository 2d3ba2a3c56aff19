mod common;

use gsbm::divergence::{ch_divergence_discrete, ch_divergence_profile, mgf_p, mgf_q, rate_function_zero, visible_mass};
use gsbm::{information_metric, unit_ball_volume, Profile};

/// Midpoint rule over a million equal panels of the radial integral.
fn riemann(profile: &Profile, d: usize, h: impl Fn(f64, f64) -> f64) -> f64 {
    let panels = 1_000_000;
    let r = profile.r();
    let w = r / panels as f64;
    (0..panels)
        .map(|k| {
            let t = (k as f64 + 0.5) * w;
            let (fi, fo) = profile.eval(t);
            h(fi, fo) * d as f64 * t.powi(d as i32 - 1) / r.powi(d as i32) * w
        })
        .sum()
}

fn builtin_profiles() -> Vec<Profile> {
    vec![
        Profile::step(0.8, 0.2, 1.0).unwrap(),
        Profile::step(0.9, 0.1, 2.0).unwrap(),
        Profile::piecewise_linear(&[(0.0, 0.9), (1.0, 0.1)], &[(0.0, 0.1), (1.0, 0.9)], 1.0).unwrap(),
        Profile::piecewise_linear(&[(0.0, 0.9), (0.4, 0.6), (1.0, 0.2)], &[(0.0, 0.3), (0.7, 0.3), (1.0, 0.05)], 1.0)
            .unwrap(),
    ]
}

fn twenty_profiles() -> Vec<Profile> {
    let mut rng = common::rng(2024);
    (0..20).map(|_| common::random_pwl(&mut rng)).collect()
}

#[test]
fn quadrature_matches_riemann_sum() {
    for p in builtin_profiles().into_iter().chain(twenty_profiles().into_iter().take(5)) {
        for d in 1..=3 {
            let lambda = 1.3;
            let report = information_metric(&p, lambda, d).unwrap();
            let oracle =
                visible_mass(lambda, p.r(), d) * riemann(&p, d, |a, b| 1.0 - (a * b).sqrt() - ((1.0 - a) * (1.0 - b)).sqrt());
            assert!((report.i - oracle).abs() < 1e-6, "{} vs {oracle}", report.i);
        }
    }
}

#[test]
fn ch_identity_and_symmetric_minimizer() {
    for p in twenty_profiles() {
        for d in 1..=3 {
            let lambda = 2.0;
            let report = information_metric(&p, lambda, d).unwrap();
            let (value, t_star) = ch_divergence_profile(&p, d).unwrap();
            let mass = lambda * unit_ball_volume(d) * p.r().powi(d as i32);
            assert!((report.i - mass * value).abs() < 1e-8);
            assert!((t_star - 0.5).abs() < 1e-6, "t* = {t_star}");
        }
    }
}

#[test]
fn minimizer_agrees_with_grid_scan() {
    for p in builtin_profiles().into_iter().chain(twenty_profiles().into_iter().take(4)) {
        let (value, t_star) = ch_divergence_profile(&p, 2).unwrap();
        let (best_t, best) = (0..=10_000)
            .map(|k| {
                let t = k as f64 * 1e-4;
                (t, 0.5 * (mgf_p(&p, 2, t) + mgf_q(&p, 2, t)))
            })
            .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        assert!((t_star - best_t).abs() <= 1e-4);
        assert!(value >= 1.0 - best - 1e-12);
        assert!(value - (1.0 - best) < 1e-7);
    }
}

#[test]
fn rate_function_identity() {
    for p in twenty_profiles() {
        for d in 1..=3 {
            let lambda = 0.7;
            let i = information_metric(&p, lambda, d).unwrap().i;
            let rate = rate_function_zero(&p, d).unwrap();
            let mass = lambda * unit_ball_volume(d) * p.r().powi(d as i32);
            assert!((mass * (1.0 - (-rate).exp()) - i).abs() < 1e-9);
            assert!((rate + mgf_p(&p, d, 0.5).ln()).abs() < 1e-12);
        }
    }
}

#[test]
fn mgf_is_convex_with_unit_endpoints() {
    for p in builtin_profiles().into_iter().chain(twenty_profiles()) {
        for d in 1..=3 {
            assert!((mgf_p(&p, d, 0.0) - 1.0).abs() < 1e-10);
            assert!((mgf_p(&p, d, 1.0) - 1.0).abs() < 1e-10);
            assert!((mgf_p(&p, d, 0.5) - mgf_q(&p, d, 0.5)).abs() < 1e-12);
            assert!(mgf_p(&p, d, 0.5) <= 1.0);
            for k in 1..20 {
                let (a, b) = ((k - 1) as f64 / 20.0, (k + 1) as f64 / 20.0);
                let mid = mgf_p(&p, d, 0.5 * (a + b));
                assert!(mid <= 0.5 * (mgf_p(&p, d, a) + mgf_p(&p, d, b)) + 1e-12);
            }
        }
    }
}

#[test]
fn swapping_profiles_keeps_metric() {
    let a = Profile::piecewise_linear(&[(0.0, 0.9), (1.0, 0.4)], &[(0.0, 0.2), (0.5, 0.1), (1.0, 0.3)], 1.0).unwrap();
    let b = Profile::piecewise_linear(&[(0.0, 0.2), (0.5, 0.1), (1.0, 0.3)], &[(0.0, 0.9), (1.0, 0.4)], 1.0).unwrap();
    for d in 1..=3 {
        let (x, y) = (information_metric(&a, 1.0, d).unwrap(), information_metric(&b, 1.0, d).unwrap());
        assert!((x.i - y.i).abs() < 1e-12);
    }
}

#[test]
fn discrete_divergence_range_and_zero() {
    let mut rng = common::rng(3);
    use rand::Rng;
    for _ in 0..50 {
        let k = rng.random_range(1..4);
        let m = rng.random_range(2..5);
        let pmf = |rng: &mut rand_chacha::ChaCha8Rng| {
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let p: Vec<Vec<f64>> = (0..k).map(|_| pmf(&mut rng)).collect();
        let q: Vec<Vec<f64>> = (0..k).map(|_| pmf(&mut rng)).collect();
        let pi = vec![1.0 / k as f64; k];
        let (value, t) = ch_divergence_discrete(&p, &q, &pi).unwrap();
        assert!((0.0..=1.0).contains(&value) && value > 0.0);
        assert!((0.0..=1.0).contains(&t));
        let (zero, _) = ch_divergence_discrete(&p, &p, &pi).unwrap();
        assert!(zero.abs() < 1e-12);
    }
}

#[test]
fn sparse_bernoulli_expansion() {
    let (a, b, n) = (5.0f64, 1.0f64, 1e6f64);
    let s = n.ln() / n;
    let p1 = vec![a * s, 1.0 - a * s];
    let q1 = vec![b * s, 1.0 - b * s];
    let (value, _) = ch_divergence_discrete(&[p1.clone(), q1.clone()], &[q1, p1], &[0.5, 0.5]).unwrap();
    let limit = (0..=10_000)
        .map(|k| {
            let t = k as f64 * 1e-4;
            0.5 * (t * a + (1.0 - t) * b - a.powf(t) * b.powf(1.0 - t))
                + 0.5 * (t * b + (1.0 - t) * a - b.powf(t) * a.powf(1.0 - t))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let scaled = value / s;
    assert!((scaled / limit - 1.0).abs() < 0.02, "{scaled} vs {limit}");
}
