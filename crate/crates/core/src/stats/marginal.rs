use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{PointSet, Process};
use crate::rng::trial_seed;

/// A point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Box density of `s` with the binomial standard error.
pub fn intensity(s: &PointSet) -> Result<Estimate> {
    let vol = s.bounds().volume();
    if vol == 0 {
        return Err(Error::InvalidArgument("intensity of an empty box".into()));
    }
    let p = s.len() as f64 / vol as f64;
    Ok(Estimate {
        value: p,
        std_err: (p * (1.0 - p) / vol as f64).sqrt(),
    })
}

/// A finite set of distinct lattice points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct MarginalQuery {
    points: Vec<Vec<i64>>,
}

impl MarginalQuery {
    pub fn new(points: Vec<Vec<i64>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &points {
            if !seen.insert(p) {
                return Err(Error::InvalidArgument(format!(
                    "query point {p:?} repeated"
                )));
            }
        }
        if let Some(first) = points.first() {
            if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        Ok(MarginalQuery { points })
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TryFrom<Vec<Vec<i64>>> for MarginalQuery {
    type Error = Error;
    fn try_from(points: Vec<Vec<i64>>) -> Result<Self> {
        MarginalQuery::new(points)
    }
}

impl From<MarginalQuery> for Vec<Vec<i64>> {
    fn from(q: MarginalQuery) -> Self {
        q.points
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// 97.5% standard-normal quantile.
pub(crate) const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub successes: u64,
    pub trials: u64,
    pub value: f64,
    pub std_err: f64,
    /// Wilson 95% interval.
    pub ci: (f64, f64),
}

impl MarginalEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let value = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        MarginalEstimate {
            successes,
            trials,
            value,
            std_err: (value * (1.0 - value) / trials.max(1) as f64).sqrt(),
            ci: wilson_interval(successes, trials, Z_95),
        }
    }
}

/// Fraction of `trials` independent realizations of `process` on ℤ^d that
/// contain every point of `q`. Trial `i` uses seed `trial_seed(base_seed, i)`.
pub fn k_point_marginal(
    process: &Process,
    d: usize,
    q: &MarginalQuery,
    trials: u64,
    base_seed: u64,
) -> Result<MarginalEstimate> {
    process.validate(d)?;
    if let Some(bad) = q.points().iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let successes = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let r = process.realize(d, trial_seed(base_seed, i))?;
            Ok(r.contains_all(q.points())? as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(MarginalEstimate::from_counts(successes, trials))
}
