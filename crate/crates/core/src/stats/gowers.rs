//! Finite-window Gowers uniformity norms with corner containment.
//!
//! An admissible tuple `(x, h_1, …, h_k)` has every cube corner
//! `x + Σ ω_i h_i`, `ω ∈ {0,1}^k`, inside the base box; when a shift box is
//! given, every `h_i` also lies in it. The estimate is the mean of
//! `∏_ω f(x + ω·h)` over admissible tuples, raised to the power `2^{-k}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{LatticeBox, PointSet};
use crate::rng::{derive_seed, stream_rng};

/// Real values on the points of a box, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    bx: LatticeBox,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(bx: LatticeBox, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != bx.volume() {
            return Err(Error::DimensionMismatch {
                expected: bx.volume() as usize,
                found: values.len(),
            });
        }
        Ok(RealGrid { bx, values })
    }

    pub fn constant(bx: LatticeBox, c: f64) -> Self {
        let values = vec![c; bx.volume() as usize];
        RealGrid { bx, values }
    }

    pub fn indicator(s: &PointSet) -> Self {
        let n = s.bounds().volume();
        let values = (0..n)
            .map(|i| if s.get_index(i) { 1.0 } else { 0.0 })
            .collect();
        RealGrid {
            bx: s.bounds().clone(),
            values,
        }
    }

    pub fn bounds(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same values on the box translated by `v`.
    pub fn translated(&self, v: &[i64]) -> Result<Self> {
        Ok(RealGrid {
            bx: self.bx.translated(v)?,
            values: self.values.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GowersMode {
    MonteCarlo,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GowersConfig {
    pub order: u32,
    /// Per-axis bound on `|h_i|`; absent means any shift keeping corners in-box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_shift: Option<Vec<u64>>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    pub mode: GowersMode,
}

fn default_samples() -> u64 {
    100_000
}

impl GowersConfig {
    pub fn exact(order: u32) -> Self {
        GowersConfig {
            order,
            max_shift: None,
            samples: 0,
            mode: GowersMode::Exact,
        }
    }

    pub fn monte_carlo(order: u32, samples: u64) -> Self {
        GowersConfig {
            order,
            max_shift: None,
            samples,
            mode: GowersMode::MonteCarlo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GowersEstimate {
    /// `‖f‖_{U^k}` estimate.
    pub value: f64,
    /// Mean corner product (the `2^k`-th power of `value`).
    pub mean_product: f64,
    /// Standard error of `mean_product`; 0 in exact mode.
    pub std_err: f64,
    /// Admissible tuples summed (exact) or drawn (Monte-Carlo).
    pub tuples: f64,
}

const MAX_ORDER: u32 = 8;
const MC_CHUNK: u64 = 4096;

/// `‖f‖_{U^k}` on the grid's box. Monte-Carlo mode draws `cfg.samples`
/// uniform admissible tuples from streams keyed by `seed`; exact mode ignores
/// the seed.
pub fn gowers_norm(f: &RealGrid, cfg: &GowersConfig, seed: u64) -> Result<GowersEstimate> {
    let k = cfg.order;
    if k == 0 || k > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Gowers order {k} outside 1..={MAX_ORDER}"
        )));
    }
    let d = f.bx.dim();
    let extents: Vec<usize> = (0..d).map(|c| f.bx.extent(c) as usize).collect();
    let bounds: Vec<usize> = match &cfg.max_shift {
        None => extents.iter().map(|&e| e.saturating_sub(1)).collect(),
        Some(b) if b.len() == d => b
            .iter()
            .zip(&extents)
            .map(|(&b, &e)| (b as usize).min(e.saturating_sub(1)))
            .collect(),
        Some(b) => {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: b.len(),
            })
        }
    };
    if extents.contains(&0) {
        return Err(Error::EmptyAdmissible("empty base box".into()));
    }
    let (mean, std_err, tuples) = match cfg.mode {
        GowersMode::Exact => {
            let unrestricted = cfg.max_shift.is_none();
            let (sum, count) = exact_sum(&f.values, &extents, &bounds, k, unrestricted);
            (sum / count, 0.0, count)
        }
        GowersMode::MonteCarlo => {
            if cfg.samples == 0 {
                return Err(Error::InvalidArgument(
                    "Monte-Carlo mode needs samples > 0".into(),
                ));
            }
            monte_carlo(f, &extents, &bounds, k, cfg.samples, seed)?
        }
    };
    let value = mean.max(0.0).powf(1.0 / (1u64 << k) as f64);
    Ok(GowersEstimate {
        value,
        mean_product: mean,
        std_err,
        tuples,
    })
}

/// Dense values on a sub-box of extents `len`.
struct Slab {
    len: Vec<usize>,
    values: Vec<f64>,
}

impl Slab {
    fn size(&self) -> usize {
        self.len.iter().product()
    }

    /// `D(x) · D(x + h)` on `{x : x, x + h ∈ domain}`, or `None` if empty.
    fn derive(&self, h: &[i64]) -> Option<Slab> {
        let d = self.len.len();
        let mut len = vec![0; d];
        let mut off = vec![0usize; d];
        for c in 0..d {
            let n = self.len[c] as i64;
            let a = 0.max(-h[c]);
            let b = n.min(n - h[c]);
            if b <= a {
                return None;
            }
            off[c] = a as usize;
            len[c] = (b - a) as usize;
        }
        let stride = strides(&self.len);
        let shift: i64 = (0..d).map(|c| h[c] * stride[c] as i64).sum();
        let size: usize = len.iter().product();
        let mut values = Vec::with_capacity(size);
        let row = len[d - 1];
        let rows = size / row;
        let mut idx = vec![0usize; d];
        for _ in 0..rows {
            let base: usize = (0..d).map(|c| (off[c] + idx[c]) * stride[c]).sum();
            let partner = (base as i64 + shift) as usize;
            for j in 0..row {
                values.push(self.values[base + j] * self.values[partner + j]);
            }
            // advance the row index (all axes but the last)
            for c in (0..d.saturating_sub(1)).rev() {
                idx[c] += 1;
                if idx[c] < len[c] {
                    break;
                }
                idx[c] = 0;
            }
        }
        Some(Slab { len, values })
    }
}

fn strides(len: &[usize]) -> Vec<usize> {
    let mut s = vec![1; len.len()];
    for c in (0..len.len().saturating_sub(1)).rev() {
        s[c] = s[c + 1] * len[c + 1];
    }
    s
}

/// All shift vectors with `|h_c| <= bounds[c]`, in lexicographic order.
fn shifts(bounds: &[usize]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &b in bounds {
        let b = b as i64;
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-b..=b).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// `(Σ products, #admissible tuples)` over all admissible tuples.
fn exact_sum(
    values: &[f64],
    extents: &[usize],
    bounds: &[usize],
    k: u32,
    unrestricted: bool,
) -> (f64, f64) {
    let root = Slab {
        len: extents.to_vec(),
        values: values.to_vec(),
    };
    let hs = shifts(bounds);
    // with unrestricted shifts the last level sums to (Σ D)^2 over |dom|^2 pairs
    let depth = if unrestricted { k - 1 } else { k };
    recurse(&root, &hs, depth, unrestricted)
}

fn recurse(slab: &Slab, hs: &[Vec<i64>], depth: u32, square_last: bool) -> (f64, f64) {
    if depth == 0 {
        let s: f64 = slab.values.iter().sum();
        let n = slab.size() as f64;
        return if square_last { (s * s, n * n) } else { (s, n) };
    }
    let parts: Vec<(f64, f64)> = hs
        .par_iter()
        .filter_map(|h| {
            slab.derive(h)
                .map(|child| recurse(&child, hs, depth - 1, square_last))
        })
        .collect();
    parts
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y))
}

fn monte_carlo(
    f: &RealGrid,
    extents: &[usize],
    bounds: &[usize],
    k: u32,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let d = extents.len();
    let ku = k as usize;
    let strides = strides(extents);
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(derive_seed(seed, chunk), crate::rng::stream::AUX);
            let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut x = vec![0i64; d];
            let mut h = vec![vec![0i64; d]; ku];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                for c in 0..d {
                    draw_axis(
                        &mut rng,
                        extents[c] as i64,
                        bounds[c] as i64,
                        &mut x[c],
                        &mut h,
                        c,
                    );
                }
                let mut prod = 1.0;
                for omega in 0..(1u32 << k) {
                    let mut idx = 0usize;
                    for c in 0..d {
                        let mut y = x[c];
                        for (i, hi) in h.iter().enumerate() {
                            if omega >> i & 1 == 1 {
                                y += hi[c];
                            }
                        }
                        idx += y as usize * strides[c];
                    }
                    prod *= f.values[idx];
                    if prod == 0.0 {
                        break;
                    }
                }
                s1 += prod;
                s2 += prod * prod;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    Ok((mean, (var / nf).sqrt(), nf))
}

/// Rejection-samples one axis of a uniform admissible tuple: `x ∈ [0, n)`,
/// `|h_i| <= b`, and every partial sum `x + Σ_{i∈S} h_i ∈ [0, n)`.
fn draw_axis<R: Rng>(rng: &mut R, n: i64, b: i64, x: &mut i64, h: &mut [Vec<i64>], c: usize) {
    loop {
        let (mut neg, mut pos) = (0i64, 0i64);
        for hi in h.iter_mut() {
            let v = rng.random_range(-b..=b);
            hi[c] = v;
            if v < 0 {
                neg += v;
            } else {
                pos += v;
            }
        }
        let xv = rng.random_range(0..n);
        if xv + neg >= 0 && xv + pos < n {
            *x = xv;
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::presets;
    use proptest::prelude::*;

    /// Direct enumeration of every admissible tuple with `|h_c| <= b[c]`.
    fn brute_force(f: &RealGrid, k: u32, b: &[usize]) -> (f64, f64) {
        let d = f.bx.dim();
        let ext: Vec<i64> = (0..d).map(|c| f.bx.extent(c) as i64).collect();
        let hs = shifts(b);
        let total_x: i64 = ext.iter().product();
        let (mut sum, mut count) = (0.0, 0.0);
        for mut t in 0..hs.len().pow(k) {
            let tuple: Vec<&Vec<i64>> = (0..k)
                .map(|_| {
                    let r = t % hs.len();
                    t /= hs.len();
                    &hs[r]
                })
                .collect();
            'x: for xi in 0..total_x {
                let mut prod = 1.0;
                for omega in 0..(1u32 << k) {
                    let (mut r, mut idx, mut stride) = (xi, 0i64, 1i64);
                    for c in (0..d).rev() {
                        let mut y = r % ext[c];
                        r /= ext[c];
                        for (i, h) in tuple.iter().enumerate() {
                            if omega >> i & 1 == 1 {
                                y += h[c];
                            }
                        }
                        if y < 0 || y >= ext[c] {
                            continue 'x;
                        }
                        idx += y * stride;
                        stride *= ext[c];
                    }
                    prod *= f.values[idx as usize];
                }
                sum += prod;
                count += 1.0;
            }
        }
        (sum, count)
    }

    fn grid_from(bx: LatticeBox, vals: Vec<f64>) -> RealGrid {
        RealGrid::new(bx, vals).unwrap()
    }

    #[test]
    fn exact_matches_brute_force() {
        let bx = LatticeBox::new(vec![-3, 2], vec![3, 7]).unwrap();
        let vals: Vec<f64> = (0..30).map(|i| ((i * 37 % 11) as f64) / 10.0).collect();
        let f = grid_from(bx, vals);
        for k in 1..=3 {
            let (s, n) = brute_force(&f, k, &[5, 4]);
            let e = gowers_norm(&f, &GowersConfig::exact(k), 0).unwrap();
            assert_eq!(e.tuples, n, "k={k}");
            assert!(
                (e.mean_product - s / n).abs() < 1e-12 * (s / n).max(1.0),
                "k={k}"
            );

            let mut cfg = GowersConfig::exact(k);
            cfg.max_shift = Some(vec![2, 1]);
            let (s, n) = brute_force(&f, k, &[2, 1]);
            let e = gowers_norm(&f, &cfg, 0).unwrap();
            assert_eq!(e.tuples, n, "k={k}");
            assert!(
                (e.mean_product - s / n).abs() < 1e-12 * (s / n).max(1.0),
                "k={k}"
            );
        }
        let f3 = grid_from(
            LatticeBox::cube(3, 0, 3).unwrap(),
            (0..27).map(|i| (i % 4) as f64).collect(),
        );
        let (s, n) = brute_force(&f3, 2, &[2, 2, 2]);
        let e = gowers_norm(&f3, &GowersConfig::exact(2), 0).unwrap();
        assert_eq!(e.tuples, n);
        assert!((e.mean_product - s / n).abs() < 1e-12 * (s / n));
    }

    #[test]
    fn constants() {
        let bx = LatticeBox::cube(2, 0, 6).unwrap();
        for k in 1..=3 {
            for c in [0.0, 1.0] {
                let e = gowers_norm(
                    &RealGrid::constant(bx.clone(), c),
                    &GowersConfig::exact(k),
                    0,
                )
                .unwrap();
                assert_eq!(e.value, c);
                let e = gowers_norm(
                    &RealGrid::constant(bx.clone(), c),
                    &GowersConfig::monte_carlo(k, 1000),
                    1,
                )
                .unwrap();
                assert_eq!(e.value, c);
            }
            let e = gowers_norm(
                &RealGrid::constant(bx.clone(), 0.3),
                &GowersConfig::exact(k),
                0,
            )
            .unwrap();
            assert!((e.value - 0.3).abs() < 1e-15, "{}", e.value);
        }
    }

    #[test]
    fn u1_is_absolute_mean() {
        let bx = LatticeBox::cube(2, 0, 5).unwrap();
        let vals: Vec<f64> = (0..25).map(|i| (i % 3) as f64).collect();
        let mean = vals.iter().sum::<f64>() / 25.0;
        let e = gowers_norm(&grid_from(bx, vals), &GowersConfig::exact(1), 0).unwrap();
        assert!((e.value - mean).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let bx = LatticeBox::cube(2, 0, 12).unwrap();
        let s = presets::s_k(2, 1, 0.5).unwrap().sample(&bx, 4).unwrap();
        let f = RealGrid::indicator(&s);
        let exact = gowers_norm(&f, &GowersConfig::exact(2), 0).unwrap();
        let mc = gowers_norm(&f, &GowersConfig::monte_carlo(2, 200_000), 8).unwrap();
        assert!(
            (mc.mean_product - exact.mean_product).abs() < 4.0 * mc.std_err,
            "{mc:?} {exact:?}"
        );
        assert_eq!(
            mc,
            gowers_norm(&f, &GowersConfig::monte_carlo(2, 200_000), 8).unwrap()
        );
    }

    #[test]
    fn empty_admissible_and_bad_order() {
        let bx = LatticeBox::new(vec![0, 0], vec![0, 3]).unwrap();
        let f = RealGrid::constant(bx, 1.0);
        assert!(matches!(
            gowers_norm(&f, &GowersConfig::exact(2), 0),
            Err(Error::EmptyAdmissible(_))
        ));
        let f = RealGrid::constant(LatticeBox::cube(1, 0, 3).unwrap(), 1.0);
        assert!(gowers_norm(&f, &GowersConfig::exact(0), 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn translation_invariant(vals in prop::collection::vec(0u8..4, 20), dx in -50i64..50, dy in -50i64..50, k in 1u32..4) {
            let bx = LatticeBox::new(vec![0, 0], vec![4, 5]).unwrap();
            let f = grid_from(bx, vals.iter().map(|&v| v as f64 / 3.0).collect());
            let a = gowers_norm(&f, &GowersConfig::exact(k), 0).unwrap();
            let b = gowers_norm(&f.translated(&[dx, dy]).unwrap(), &GowersConfig::exact(k), 0).unwrap();
            prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        }

        #[test]
        fn monotone_under_domination(vals in prop::collection::vec((0u8..5, 0u8..5), 16), k in 1u32..4) {
            let bx = LatticeBox::cube(2, 0, 4).unwrap();
            let lo: Vec<f64> = vals.iter().map(|&(a, b)| a.min(b) as f64 / 4.0).collect();
            let hi: Vec<f64> = vals.iter().map(|&(a, b)| a.max(b) as f64 / 4.0).collect();
            let a = gowers_norm(&grid_from(bx.clone(), lo), &GowersConfig::exact(k), 0).unwrap();
            let b = gowers_norm(&grid_from(bx, hi), &GowersConfig::exact(k), 0).unwrap();
            prop_assert!(a.value <= b.value);
        }
    }
}
