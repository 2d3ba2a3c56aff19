mod common;

use gsbm::{sample, Profile};
use statrs::distribution::{ChiSquared, ContinuousCDF, DiscreteCDF, Poisson};

#[test]
fn vertex_count_mean() {
    let p = Profile::step(0.9, 0.1, 1.0).unwrap();
    let counts: Vec<f64> = (0..100).map(|s| sample(5.0, 1000.0, &p, 1, s).unwrap().vertex_count() as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    assert!((mean - 5000.0).abs() <= 3.0 * 5000f64.sqrt(), "mean {mean}");
}

#[test]
fn vertex_count_chi_square() {
    let (lambda, n, seeds) = (5.0, 1000.0, 200u64);
    let p = Profile::step(0.6, 0.4, 1.0).unwrap();
    let pois = Poisson::new(lambda * n).unwrap();
    // Ten roughly equiprobable bins cut at Poisson deciles.
    let mut cuts = Vec::new();
    for j in 1..10 {
        let q = j as f64 / 10.0;
        cuts.push(pois.inverse_cdf(q));
    }
    cuts.dedup();
    let mut observed = vec![0f64; cuts.len() + 1];
    for s in 0..seeds {
        let c = sample(lambda, n, &p, 2, s).unwrap().vertex_count() as u64;
        observed[cuts.iter().filter(|&&k| c > k).count()] += 1.0;
    }
    let mut stat = 0.0;
    let mut prev = 0.0;
    for (i, obs) in observed.iter().enumerate() {
        let cdf = if i < cuts.len() { pois.cdf(cuts[i]) } else { 1.0 };
        let expected = seeds as f64 * (cdf - prev);
        prev = cdf;
        stat += (obs - expected).powi(2) / expected;
    }
    let dof = (observed.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
    assert!(p_value > 0.001, "chi2 = {stat}, p = {p_value}");
}

#[test]
fn same_community_edge_rate() {
    let p = Profile::step(0.9, 0.1, 1.0).unwrap();
    let g = sample(5.0, 5000.0, &p, 1, 7).unwrap();
    let (mut pairs, mut edges) = (0u64, 0u64);
    for v in 0..g.vertex_count() {
        g.for_each_visible(v, |u, _| {
            if u > v && g.labels()[u] == g.labels()[v] && pairs < 100_000 {
                pairs += 1;
                edges += g.has_edge(u, v) as u64;
            }
        });
    }
    assert_eq!(pairs, 100_000);
    let rate = edges as f64 / pairs as f64;
    assert!((rate - 0.9).abs() < 0.01, "rate {rate}");
}

#[test]
fn edge_rate_by_distance_decile_and_agreement() {
    let p = Profile::piecewise_linear(&[(0.0, 0.9), (0.6, 0.5), (1.0, 0.3)], &[(0.0, 0.05), (1.0, 0.45)], 1.0).unwrap();
    let g = sample(5.0, 5000.0, &p, 1, 11).unwrap();
    let radius = g.visibility_radius();
    // [agree][decile] -> (count, edges, sum p, sum p(1-p))
    let mut cells = [[(0u64, 0u64, 0.0f64, 0.0f64); 10]; 2];
    for v in 0..g.vertex_count() {
        g.for_each_visible(v, |u, dist| {
            if u <= v {
                return;
            }
            let agree = (g.labels()[u] == g.labels()[v]) as usize;
            let decile = ((dist / radius * 10.0) as usize).min(9);
            let (fi, fo) = common::naive_probs(&g, u, v);
            let prob = if agree == 1 { fi } else { fo };
            let c = &mut cells[agree][decile];
            c.0 += 1;
            c.1 += g.has_edge(u, v) as u64;
            c.2 += prob;
            c.3 += prob * (1.0 - prob);
        });
    }
    for (agree, row) in cells.iter().enumerate() {
        for (decile, &(count, edges, sum_p, var)) in row.iter().enumerate() {
            assert!(count > 1000, "thin cell {agree}/{decile}");
            let z = (edges as f64 - sum_p) / var.sqrt();
            assert!(z.abs() < 3.0, "agree {agree} decile {decile}: z = {z}");
        }
    }
}

#[test]
fn no_edge_beyond_radius() {
    let p = Profile::step(0.9, 0.4, 1.0).unwrap();
    for seed in 0..5 {
        let g = sample(3.0, 400.0, &p, 2, seed).unwrap();
        for (u, v) in g.edges() {
            assert!(common::naive_distance(&g, u, v) <= g.visibility_radius());
        }
        for u in 0..g.vertex_count() {
            assert!(!g.neighbors(u).contains(&(u as u32)));
            for &v in g.neighbors(u) {
                assert!(g.has_edge(v as usize, u));
            }
        }
    }
}

#[test]
fn mean_degree_scale() {
    let p = Profile::step(0.6, 0.4, 1.0).unwrap();
    let g = sample(2.0, 1e4, &p, 1, 3).unwrap();
    let expected = 2.0 * 2.0 * 1.0 * 1e4f64.ln() * 0.5;
    assert!((g.mean_degree() / expected - 1.0).abs() < 0.1, "{} vs {expected}", g.mean_degree());
}
