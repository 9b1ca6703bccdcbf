use invariant_sets::processes::{presets, LatticeBox};
use invariant_sets::rng::{derive_seed, trial_seed};
use invariant_sets::stats::{
    ap_count_distribution, binomial_pmf, chisq_goodness_of_fit, gowers_norm, ApConfig,
    GowersConfig, RealGrid,
};

/// E[U^2 mean product] for Bernoulli(p) on an `n × n` box: each admissible
/// cube contributes p^(number of distinct corners).
fn bernoulli_u2_oracle(n: i64, p: f64) -> f64 {
    let inside = |v: (i64, i64)| (0..n).contains(&v.0) && (0..n).contains(&v.1);
    let (mut sum, mut count) = (0.0, 0.0);
    for x in (0..n).flat_map(|a| (0..n).map(move |b| (a, b))) {
        for h1 in (-n..n).flat_map(|a| (-n..n).map(move |b| (a, b))) {
            for h2 in (-n..n).flat_map(|a| (-n..n).map(move |b| (a, b))) {
                let mut corners = vec![
                    x,
                    (x.0 + h1.0, x.1 + h1.1),
                    (x.0 + h2.0, x.1 + h2.1),
                    (x.0 + h1.0 + h2.0, x.1 + h1.1 + h2.1),
                ];
                if !corners.iter().all(|&c| inside(c)) {
                    continue;
                }
                corners.sort();
                corners.dedup();
                sum += p.powi(corners.len() as i32);
                count += 1.0;
            }
        }
    }
    sum / count
}

#[test]
fn bernoulli_u2_matches_combinatorial_oracle() {
    let oracle = bernoulli_u2_oracle(8, 0.5);
    assert!((oracle - 0.0625).abs() < 0.02, "{oracle}");
    let bx = LatticeBox::cube(2, 0, 8).unwrap();
    let p = presets::bernoulli(0.5).unwrap();
    let cfg = GowersConfig::exact(2);
    let n = 4000;
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            let s = p.sample(&bx, trial_seed(3, i)).unwrap();
            gowers_norm(&RealGrid::indicator(&s), &cfg, 0)
                .unwrap()
                .mean_product
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    let se = sd / (n as f64).sqrt();
    assert!(
        (mean - oracle).abs() < 4.0 * se,
        "mean {mean} oracle {oracle} se {se}"
    );
}

#[test]
fn s1_u2_matches_theory() {
    // For S_1 with window [0, 1/2) the U^2 fourth power tends to 1/12 as the
    // box grows; on 32×32 the IQR sits close to (1/12)^(1/4).
    let bx = LatticeBox::cube(2, 0, 32).unwrap();
    let p = presets::s_k(2, 1, 0.5).unwrap();
    let cfg = GowersConfig::exact(2);
    let mut v: Vec<f64> = (0..25)
        .map(|i| {
            let s = p.sample(&bx, trial_seed(9, i)).unwrap();
            gowers_norm(&RealGrid::indicator(&s), &cfg, 0)
                .unwrap()
                .value
        })
        .collect();
    v.sort_by(f64::total_cmp);
    let median = v[12];
    assert!(
        (median - (1.0f64 / 12.0).powf(0.25)).abs() < 0.01,
        "{median}"
    );
}

#[test]
fn short_progressions_see_binomial_counts_for_s3() {
    let bx = LatticeBox::cube(2, 0, 64).unwrap();
    let p = presets::s_k(2, 3, 0.5).unwrap();
    for length in [5u32, 6, 7] {
        let h = ap_count_distribution(
            &p,
            &bx,
            &ApConfig::new(length, 200_000),
            derive_seed(11, length as u64),
        )
        .unwrap();
        let r = chisq_goodness_of_fit(&h, &binomial_pmf(length, 0.5)).unwrap();
        assert!(r.p_value > 0.001, "L={length}: {r:?}");
    }
}
