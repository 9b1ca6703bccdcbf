//! Classical tests: chi-square, Kolmogorov–Smirnov, two-proportion z, Holm.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Integer-count histogram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    bins: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn new(len: usize) -> Self {
        Histogram {
            bins: vec![0; len],
            total: 0,
        }
    }

    pub fn from_counts(bins: Vec<u64>) -> Self {
        let total = bins.iter().sum();
        Histogram { bins, total }
    }

    pub fn add(&mut self, bin: usize) {
        self.bins[bin] += 1;
        self.total += 1;
    }

    /// Adds another histogram with the same binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.bins.len() != other.bins.len() {
            return Err(Error::DimensionMismatch {
                expected: self.bins.len(),
                found: other.bins.len(),
            });
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.bins
            .iter()
            .map(|&c| c as f64 / self.total.max(1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bin groups after pooling, as `[first, last]` original bin indices.
    pub pooled_bins: Vec<[usize; 2]>,
}

pub const MIN_EXPECTED: f64 = 5.0;

/// Greedily merges adjacent bins, left to right, until every group has
/// `expected(group) >= MIN_EXPECTED`; a short tail joins the last group.
fn pool(len: usize, expected: impl Fn(usize, usize) -> f64) -> Vec<[usize; 2]> {
    let mut groups: Vec<[usize; 2]> = Vec::new();
    let mut start = 0;
    for i in 0..len {
        if expected(start, i) >= MIN_EXPECTED {
            groups.push([start, i]);
            start = i + 1;
        }
    }
    if start < len {
        match groups.last_mut() {
            Some(last) => last[1] = len - 1,
            None => groups.push([0, len - 1]),
        }
    }
    groups
}

fn chi2_sf(stat: f64, dof: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .map(|c| c.sf(stat))
        .unwrap_or(f64::NAN)
}

/// Two-sample chi-square test of homogeneity on pooled bins.
pub fn two_sample_chisq(a: &Histogram, b: &Histogram) -> Result<ChiSquareResult> {
    if a.bins.len() != b.bins.len() {
        return Err(Error::DimensionMismatch {
            expected: a.bins.len(),
            found: b.bins.len(),
        });
    }
    let (na, nb) = (a.total as f64, b.total as f64);
    if a.total == 0 || b.total == 0 {
        return Err(Error::InsufficientCounts("empty histogram".into()));
    }
    let sum = |h: &Histogram, g: [usize; 2]| h.bins[g[0]..=g[1]].iter().sum::<u64>() as f64;
    let expected_min = |s: usize, e: usize| {
        let pooled = sum(a, [s, e]) + sum(b, [s, e]);
        pooled * na.min(nb) / (na + nb)
    };
    let groups = pool(a.bins.len(), expected_min);
    if groups.len() < 2
        || groups
            .iter()
            .any(|&g| expected_min(g[0], g[1]) < MIN_EXPECTED)
    {
        return Err(Error::InsufficientCounts(format!(
            "fewer than two bins with expected count >= {MIN_EXPECTED} after pooling"
        )));
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = groups
        .iter()
        .map(|&g| {
            let (x, y) = (sum(a, g), sum(b, g));
            let diff = ka * x - kb * y;
            diff * diff / (x + y)
        })
        .sum();
    let dof = groups.len() - 1;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi2_sf(statistic, dof),
        pooled_bins: groups,
    })
}

/// Chi-square goodness of fit of `h` against bin probabilities `probs`.
pub fn chisq_goodness_of_fit(h: &Histogram, probs: &[f64]) -> Result<ChiSquareResult> {
    if h.bins.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: h.bins.len(),
            found: probs.len(),
        });
    }
    let n = h.total as f64;
    let expected = |s: usize, e: usize| probs[s..=e].iter().sum::<f64>() * n;
    let groups = pool(probs.len(), expected);
    if groups.len() < 2 || groups.iter().any(|&g| expected(g[0], g[1]) < MIN_EXPECTED) {
        return Err(Error::InsufficientCounts("too few expected counts".into()));
    }
    let statistic = groups
        .iter()
        .map(|&g| {
            let obs = h.bins[g[0]..=g[1]].iter().sum::<u64>() as f64;
            let exp = expected(g[0], g[1]);
            (obs - exp).powi(2) / exp
        })
        .sum();
    let dof = groups.len() - 1;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi2_sf(statistic, dof),
        pooled_bins: groups,
    })
}

/// Kolmogorov distribution tail `P(K > x)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // small-x form converges faster here
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        let s: f64 = (1..=7).map(|k| y.powi((2 * k - 1) * (2 * k - 1))).sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * x * x).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample KS test of `samples` against Uniform[0, 1).
/// Returns `(D, p-value)` with the Stephens small-sample correction.
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / nf - x).max(x - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    (d, kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d))
}

/// Two-sided pooled two-proportion z-test. Returns `(z, p-value)`.
pub fn two_proportion_z(s1: u64, n1: u64, s2: u64, n2: u64) -> (f64, f64) {
    let (p1, p2) = (s1 as f64 / n1 as f64, s2 as f64 / n2 as f64);
    let pooled = (s1 + s2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return if p1 == p2 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        };
    }
    let z = (p1 - p2) / se;
    (z, 2.0 * normal_sf(z.abs()))
}

pub fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

/// Two-sided standard normal quantile for confidence `1 - alpha`.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Holm step-down procedure: which hypotheses are rejected at family-wise
/// level `alpha`.
pub fn holm(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut reject = vec![false; m];
    for (rank, &i) in order.iter().enumerate() {
        if p_values[i] <= alpha / (m - rank) as f64 {
            reject[i] = true;
        } else {
            break;
        }
    }
    reject
}

/// Binomial(n, p) probabilities for `0..=n`.
pub fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut c = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            c = c * (n - k + 1) as f64 / k as f64;
        }
        out.push(c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_histograms() {
        let h = Histogram::from_counts(vec![30, 50, 20]);
        let r = two_sample_chisq(&h, &h).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn disjoint_support() {
        let a = Histogram::from_counts(vec![10_000, 0]);
        let b = Histogram::from_counts(vec![0, 10_000]);
        let r = two_sample_chisq(&a, &b).unwrap();
        assert!(r.p_value < 1e-300, "{}", r.p_value);
    }

    #[test]
    fn chisq_statistic_matches_hand_computation() {
        // equal sample sizes: Σ (a-b)^2 / (a+b)
        let a = Histogram::from_counts(vec![20, 30, 50]);
        let b = Histogram::from_counts(vec![30, 30, 40]);
        let r = two_sample_chisq(&a, &b).unwrap();
        let expect = 100.0 / 50.0 + 0.0 + 100.0 / 90.0;
        assert!((r.statistic - expect).abs() < 1e-12);
        // sf of chi2(2) is exp(-x/2)
        assert!((r.p_value - (-expect / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn pooling_merges_sparse_tails() {
        let a = Histogram::from_counts(vec![1, 40, 60, 2, 1]);
        let b = Histogram::from_counts(vec![0, 45, 50, 3, 1]);
        let r = two_sample_chisq(&a, &b).unwrap();
        assert_eq!(r.pooled_bins, vec![[0, 1], [2, 4]]);
        let tiny = Histogram::from_counts(vec![1, 1]);
        assert!(matches!(
            two_sample_chisq(&tiny, &tiny),
            Err(Error::InsufficientCounts(_))
        ));
    }

    #[test]
    fn goodness_of_fit_against_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut h = Histogram::new(9);
        for _ in 0..20_000 {
            h.add((0..8).filter(|_| rng.random::<bool>()).count());
        }
        let r = chisq_goodness_of_fit(&h, &binomial_pmf(8, 0.5)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        assert!(ks_uniform(&u).1 > 0.01);
        let skew: Vec<f64> = u.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&skew).1 < 1e-10);
        // known value: P(K > 1.36) ≈ 0.049
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-3);
    }

    #[test]
    fn holm_procedure() {
        assert_eq!(holm(&[0.001, 0.04, 0.03], 0.05), vec![true, false, false]);
        assert_eq!(holm(&[0.001, 0.02, 0.04], 0.05), vec![true, true, true]);
        assert_eq!(holm(&[0.5, 0.001], 0.01), vec![false, true]);
    }

    #[test]
    fn z_test() {
        let (z, p) = two_proportion_z(500, 1000, 500, 1000);
        assert_eq!(z, 0.0);
        assert_eq!(p, 1.0);
        let (_, p) = two_proportion_z(600, 1000, 500, 1000);
        assert!(p < 1e-5);
        assert_eq!(two_proportion_z(10, 10, 10, 10), (0.0, 1.0));
    }

    #[test]
    fn binomial_sums_to_one() {
        let pmf = binomial_pmf(8, 0.5);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((pmf[4] - 70.0 / 256.0).abs() < 1e-15);
    }
}
