mod common;

use caresim::stats::{
    aggregate_groups, cluster_robust_ols, design_effect, icc_oneway, paired_summary, paired_t_test,
    student_t_two_sided_p, StatsError,
};
use common::{brute_force_icc, engineered_pair, sandwich_cr1, t_p_value_by_quadrature};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn paired_examples() {
    let s = paired_summary(&[1.0, 2.0, 3.0, 4.0], &[2.0, 2.0, 4.0, 6.0]).unwrap();
    assert_eq!(s.delta, 1.0);
    assert!((s.sd_diff - 0.8165).abs() < 1e-4);
    assert!((s.cohens_d - 1.2247).abs() < 1e-4);
    let same = paired_summary(&[1.0, 5.0, 2.0], &[1.0, 5.0, 2.0]).unwrap();
    assert_eq!(
        (same.delta, same.cohens_d, same.degenerate),
        (0.0, 0.0, true)
    );
}

#[test]
fn zero_delta_gives_unit_p() {
    let t = paired_t_test(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap();
    assert_eq!(t.t, 0.0);
    assert_eq!(t.p, 1.0);
}

#[test]
fn published_effect_sizes_reproduce() {
    // (mean S1, mean S2, SD of paired differences, d, pct change)
    let rows = [
        (0.158, 0.169, 0.045, 0.24, 6.9),
        (17.815, 17.467, 5.234, -0.07, -2.0),
        (1.857, 2.157, 0.809, 0.38, 16.1),
        (24.615, 24.620, 0.128, 0.04, 0.02),
    ];
    for (a_mean, b_mean, sd, d, pct) in rows {
        let (a, b) = engineered_pair(40, a_mean, b_mean, sd);
        let s = paired_summary(&a, &b).unwrap();
        assert!((s.sd_diff - sd).abs() < 1e-9);
        assert!((s.cohens_d - d).abs() <= 0.01, "d {} vs {d}", s.cohens_d);
        assert!(
            (s.pct_change.unwrap() - pct).abs() <= 0.1,
            "pct {:?}",
            s.pct_change
        );
    }
}

#[test]
fn t_p_values_match_quadrature() {
    for df in [1.0, 3.0, 39.0, 115.0] {
        for t in [0.1, 0.7, 1.5, 2.3, 3.1] {
            let oracle = t_p_value_by_quadrature(t, df, 1_000_000);
            let p = student_t_two_sided_p(t, df);
            assert!(
                ((p - oracle) / oracle).abs() < 1e-8,
                "df {df} t {t}: {p} vs {oracle}"
            );
            assert_eq!(p, student_t_two_sided_p(-t, df));
        }
    }
    // Cauchy closed form.
    let p = student_t_two_sided_p(2.0, 1.0);
    let closed = 1.0 - 2.0 / std::f64::consts::PI * 2.0f64.atan();
    assert!((p - closed).abs() < 1e-14);
}

fn random_groups(rng: &mut ChaCha8Rng, balanced: bool) -> Vec<Vec<f64>> {
    let g = rng.random_range(2..9);
    let size = rng.random_range(2..8);
    let spread = rng.random_range(0.0..3.0);
    (0..g)
        .map(|_| {
            let m = if balanced {
                size
            } else {
                rng.random_range(1..10)
            };
            let centre: f64 = rng.random_range(-1.0..1.0) * spread;
            (0..m)
                .map(|_| centre + rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

#[test]
fn icc_matches_brute_force_anova() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    while checked < 50 {
        let groups = random_groups(&mut rng, checked % 2 == 0);
        let n: usize = groups.iter().map(Vec::len).sum();
        if n < groups.len() + 2 {
            continue;
        }
        let got = icc_oneway(&groups).unwrap();
        let want = brute_force_icc(&groups);
        let raw = got.raw.unwrap();
        assert!((raw - want).abs() < 1e-10, "{raw} vs {want}");
        assert!((got.icc - want.clamp(0.0, 1.0)).abs() < 1e-10);
        assert_eq!(got.clipped, want < 0.0);
        checked += 1;
    }
}

#[test]
fn icc_examples_and_errors() {
    let perfect = icc_oneway(&[vec![1.0, 1.0], vec![5.0, 5.0]]).unwrap();
    assert_eq!(perfect.icc, 1.0);
    let flat = icc_oneway(&[vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 1.0]]).unwrap();
    assert_eq!(flat.icc, 0.0);
    assert!(flat.clipped);
    assert_eq!(
        icc_oneway(&[vec![1.0, 2.0, 3.0]]),
        Err(StatsError::TooFewGroups)
    );
}

#[test]
fn design_effect_examples() {
    assert!((design_effect(0.86, 7.0) - 6.16).abs() < 1e-12);
    assert_eq!(design_effect(0.0, 12.0), 1.0);
    assert_eq!(design_effect(0.7, 1.0), 1.0);
}

fn random_design(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>, Vec<usize>) {
    let n = rng.random_range(20..80);
    let k = rng.random_range(2..5);
    let g = rng.random_range(3..10);
    let mut x = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    let mut cl = Vec::with_capacity(n);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for j in 1..k {
            x[(i, j)] = rng.random_range(-2.0..2.0);
        }
        let c = rng.random_range(0..g);
        cl.push(c);
        y[i] = 0.5
            + (1..k).map(|j| j as f64 * x[(i, j)]).sum::<f64>()
            + c as f64 * 0.3
            + rng.random_range(-1.0..1.0);
    }
    (x, y, cl)
}

#[test]
fn cr1_matches_independent_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    while checked < 20 {
        let (x, y, cl) = random_design(&mut rng);
        let mut distinct = cl.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            continue;
        }
        let got = cluster_robust_ols(&x, &y, &cl).unwrap();
        let rows: Vec<Vec<f64>> = (0..x.nrows())
            .map(|i| x.row(i).iter().copied().collect())
            .collect();
        let (beta, se) = sandwich_cr1(&rows, y.as_slice(), &cl);
        for j in 0..beta.len() {
            assert!((got.coefficients[j] - beta[j]).abs() < 1e-9 * beta[j].abs().max(1.0));
            assert!((got.std_errors[j] - se[j]).abs() < 1e-9 * se[j].max(1.0));
        }
        assert_eq!(got.n_clusters, distinct.len());
        assert_eq!(got.df, (distinct.len() - 1) as f64);
        checked += 1;
    }
}

#[test]
fn singleton_clusters_reduce_to_hc1() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (x, y, _) = random_design(&mut rng);
    let n = x.nrows();
    let k = x.ncols();
    let ids: Vec<usize> = (0..n).collect();
    let got = cluster_robust_ols(&x, &y, &ids).unwrap();
    // HC1 = (X'X)^-1 X' diag(u^2) X (X'X)^-1 * n/(n-k); CR1 with G = n adds n/(n-1)*(n-1)/(n-k).
    let bread = (x.transpose() * &x).try_inverse().unwrap();
    let beta = &bread * x.transpose() * &y;
    let u = &y - &x * &beta;
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let xi = x.row(i).transpose();
        meat += &xi * xi.transpose() * (u[i] * u[i]);
    }
    let v = &bread * meat * &bread * (n as f64 / (n - k) as f64);
    for j in 0..k {
        assert!((got.std_errors[j] - v[(j, j)].sqrt()).abs() < 1e-10);
    }
}

#[test]
fn cr1_recovers_slope_and_tracks_classical_se_without_clustering() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let n = 2000;
    let mut x = DMatrix::zeros(n, 2);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = noise.sample(&mut rng);
        y[i] = 1.0 + 2.0 * x[(i, 1)] + noise.sample(&mut rng);
    }
    let ids: Vec<usize> = (0..n).map(|i| i % 400).collect();
    let got = cluster_robust_ols(&x, &y, &ids).unwrap();
    assert!((got.coefficients[1] - 2.0).abs() < 0.1);
    let resid = &y - &x * DVector::from_vec(got.coefficients.clone());
    let sigma2 = resid.norm_squared() / (n - 2) as f64;
    let classical = (sigma2 * (x.transpose() * &x).try_inverse().unwrap()[(1, 1)]).sqrt();
    assert!((got.std_errors[1] / classical - 1.0).abs() < 0.05);
}

#[test]
fn aggregate_examples() {
    let single = aggregate_groups(&[("a", vec![Some(3.0)])]);
    assert_eq!(single[0].means, vec![Some(3.0)]);
    let pair = aggregate_groups(&[("a", vec![Some(1.0)]), ("a", vec![Some(3.0)])]);
    assert_eq!(pair[0].means, vec![Some(2.0)]);
    assert_eq!(pair[0].rows, 2);
}

proptest! {
    #[test]
    fn icc_is_affine_invariant(seed in any::<u64>(), shift in -50.0f64..50.0, scale in 0.1f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups = random_groups(&mut rng, false);
        let n: usize = groups.iter().map(Vec::len).sum();
        prop_assume!(n >= groups.len() + 2);
        let moved: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.iter().map(|v| v * scale + shift).collect())
            .collect();
        let a = icc_oneway(&groups).unwrap().raw.unwrap();
        let b = icc_oneway(&moved).unwrap().raw.unwrap();
        prop_assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn swapping_arms_negates_delta_and_d(v in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..30)) {
        let a: Vec<f64> = v.iter().map(|p| p.0).collect();
        let b: Vec<f64> = v.iter().map(|p| p.1).collect();
        let ab = paired_summary(&a, &b).unwrap();
        let ba = paired_summary(&b, &a).unwrap();
        prop_assert!((ab.delta + ba.delta).abs() < 1e-12);
        prop_assert!((ab.cohens_d + ba.cohens_d).abs() < 1e-9);
        prop_assert_eq!(ab.sd_diff, ba.sd_diff);
    }

    #[test]
    fn p_values_are_probabilities(t in -50.0f64..50.0, df in 1.0f64..500.0) {
        let p = student_t_two_sided_p(t, df);
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
