use serde::{Deserialize, Serialize};

use super::hypothesis::{holm, two_proportion_z};
use super::marginal::{k_point_marginal, MarginalEstimate, MarginalQuery};
use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::processes::Process;
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryVerdict {
    pub query: MarginalQuery,
    pub image: MarginalQuery,
    pub at_query: MarginalEstimate,
    pub at_image: MarginalEstimate,
    pub z: f64,
    pub p_value: f64,
    /// Rejected after Holm correction across all queries of the report.
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub g: AffineMap,
    pub alpha: f64,
    pub trials: u64,
    pub seed: u64,
    pub queries: Vec<QueryVerdict>,
}

impl InvarianceReport {
    /// No query rejected.
    pub fn passed(&self) -> bool {
        self.queries.iter().all(|q| !q.rejected)
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.queries.iter().map(|q| q.p_value).collect()
    }
}

/// Compares `ℙ(F ⊂ Λ)` with `ℙ(gF ⊂ Λ)` for each query `F` by a two-proportion
/// z-test on independent trial streams, with Holm correction at `alpha`.
pub fn invariance_test(
    process: &Process,
    d: usize,
    g: &AffineMap,
    queries: &[MarginalQuery],
    trials: u64,
    alpha: f64,
    seed: u64,
) -> Result<InvarianceReport> {
    if g.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: g.dim(),
        });
    }
    let mut out = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        let image = MarginalQuery::new(
            q.points()
                .iter()
                .map(|t| g.apply(t))
                .collect::<Result<_>>()?,
        )?;
        let a = k_point_marginal(process, d, q, trials, derive_seed(seed, 2 * i as u64))?;
        let b = k_point_marginal(
            process,
            d,
            &image,
            trials,
            derive_seed(seed, 2 * i as u64 + 1),
        )?;
        let (z, p_value) = two_proportion_z(a.successes, a.trials, b.successes, b.trials);
        out.push(QueryVerdict {
            query: q.clone(),
            image,
            at_query: a,
            at_image: b,
            z,
            p_value,
            rejected: false,
        });
    }
    let p: Vec<f64> = out.iter().map(|v| v.p_value).collect();
    for (v, r) in out.iter_mut().zip(holm(&p, alpha)) {
        v.rejected = r;
    }
    Ok(InvarianceReport {
        g: g.clone(),
        alpha,
        trials,
        seed,
        queries: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::presets;

    fn queries() -> Vec<MarginalQuery> {
        vec![
            MarginalQuery::new(vec![vec![0, 0]]).unwrap(),
            MarginalQuery::new(vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap(),
            MarginalQuery::new(vec![vec![2, -1], vec![3, 3]]).unwrap(),
        ]
    }

    #[test]
    fn bernoulli_passes() {
        let g = AffineMap::preset("shear-12", 2).unwrap();
        let r = invariance_test(
            &presets::bernoulli(0.5).unwrap(),
            2,
            &g,
            &queries(),
            20_000,
            0.01,
            3,
        )
        .unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.queries[1].image.points()[1], vec![1, 0]);
    }

    #[test]
    fn s2_under_shear_passes() {
        let g = AffineMap::preset("shear-12", 2).unwrap();
        let r = invariance_test(
            &presets::s_k(2, 2, 0.5).unwrap(),
            2,
            &g,
            &queries(),
            20_000,
            0.01,
            4,
        )
        .unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn spiked_control_fails() {
        // zeroing the constant term biases the origin towards [0, 1/2)
        let p = presets::spiked_s_k(2, 1, 0.5, 0.2).unwrap();
        let g = AffineMap::preset("translate-1", 2).unwrap();
        let q = vec![MarginalQuery::new(vec![vec![0, 0]]).unwrap()];
        let r = invariance_test(&p, 2, &g, &q, 20_000, 0.01, 5).unwrap();
        assert!(!r.passed(), "{r:?}");
    }

    #[test]
    fn json_report() {
        let g = AffineMap::identity(2);
        let r = invariance_test(
            &presets::bernoulli(0.5).unwrap(),
            2,
            &g,
            &queries()[..1],
            100,
            0.01,
            0,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["queries"][0]["query"], serde_json::json!([[0, 0]]));
    }
}
