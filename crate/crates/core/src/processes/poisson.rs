//! Homogeneous Poisson process on an axis-aligned region of ℝ^n.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// One realization: the point count and the points themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSample {
    pub count: u64,
    pub points: Vec<Vec<f64>>,
}

impl PoissonSample {
    /// Number of points inside the half-open box `region`.
    pub fn count_in(&self, region: &[(f64, f64)]) -> u64 {
        self.points
            .iter()
            .filter(|p| p.iter().zip(region).all(|(&x, &(a, b))| x >= a && x < b))
            .count() as u64
    }
}

/// Volume of a box given as `(lo, hi)` per axis.
pub fn region_volume(region: &[(f64, f64)]) -> f64 {
    region.iter().map(|&(a, b)| b - a).product()
}

/// Poisson process of intensity `eta` on `region`: the count is Poisson with
/// mean `eta · vol(region)` and the points are i.i.d. uniform.
pub fn sample_poisson<R: Rng + ?Sized>(
    eta: f64,
    region: &[(f64, f64)],
    rng: &mut R,
) -> Result<PoissonSample> {
    if region.is_empty()
        || region
            .iter()
            .any(|&(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
    {
        return Err(Error::InvalidArgument(
            "Poisson region must be a non-degenerate finite box".into(),
        ));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "intensity {eta} must be finite and >= 0"
        )));
    }
    let mean = eta * region_volume(region);
    if mean >= 4_294_967_296.0 {
        return Err(Error::InvalidArgument(format!(
            "expected count {mean} exceeds 2^32"
        )));
    }
    if mean == 0.0 {
        return Ok(PoissonSample {
            count: 0,
            points: Vec::new(),
        });
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let count = dist.sample(rng) as u64;
    let points = (0..count)
        .map(|_| {
            region
                .iter()
                .map(|&(a, b)| a + (b - a) * rng.random::<f64>())
                .collect()
        })
        .collect();
    Ok(PoissonSample { count, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_intensity_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_poisson(0.0, &[(0.0, 10.0)], &mut rng).unwrap();
        assert_eq!(s.count, 0);
    }

    #[test]
    fn mean_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let region = [(0.0, 10.0), (0.0, 10.0), (0.0, 10.0)];
        let trials = 1000;
        let mean = (0..trials)
            .map(|_| sample_poisson(1.0, &region, &mut rng).unwrap().count as f64)
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 1000.0).abs() < 4.0 * 1000f64.sqrt(), "{mean}");
    }

    #[test]
    fn points_lie_in_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let region = [(-1.0, 2.0), (5.0, 6.0)];
        let s = sample_poisson(20.0, &region, &mut rng).unwrap();
        assert_eq!(s.count_in(&region), s.count);
        assert_eq!(s.points.len() as u64, s.count);
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sample_poisson(-1.0, &[(0.0, 1.0)], &mut rng).is_err());
        assert!(sample_poisson(1.0, &[(1.0, 0.0)], &mut rng).is_err());
        assert!(sample_poisson(1e10, &[(0.0, 1.0)], &mut rng).is_err());
    }
}
