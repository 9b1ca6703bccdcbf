//! Coupled thinnings of one polynomial draw.
//!
//! Given a draw `P` and windows `f1`, `f2`, the pair `(Y1, Y2)` has `Y_i` equal
//! in law to the `f_i`-thinning of `P`, and `ℙ(t ∈ Y1 Δ Y2 | P) = |f2(P(t)) − f1(P(t))|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polymap::{safe_radius, PolyMap};
use crate::processes::{draw_polynomial, LatticeBox, PointSet, PolynomialSpec};
use crate::rng::{derive_seed, point_uniform, stream};
use crate::stats::Estimate;
use crate::torus::{accept, window_distance, TorusElem, WindowFn, TWO_POW_64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// One uniform `U_t` per point; `t ∈ Y_i` iff `U_t < f_i(P(t))`.
    #[default]
    SharedUniform,
    /// Draw `Y1`, then remove a point of `Y1` with probability
    /// `max(f1 − f2, 0) / f1` or add a point outside it with probability
    /// `max(f2 − f1, 0) / (1 − f1)`, using a second uniform (0/0 := 0).
    TwoStep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledPair {
    pub y1: PointSet,
    pub y2: PointSet,
    pub shared_draw: PolyMap,
}

fn check_windows(core: &PolynomialSpec, f1: &WindowFn, f2: &WindowFn) -> Result<()> {
    for f in [f1, f2] {
        if let Some(m) = f.dim() {
            if m != core.m {
                return Err(Error::DimensionMismatch {
                    expected: core.m,
                    found: m,
                });
            }
        }
    }
    Ok(())
}

fn check_range(poly: &PolyMap, bx: &LatticeBox) -> Result<()> {
    let radius = safe_radius(poly.k()) as i128;
    let far = bx
        .lower()
        .iter()
        .chain(bx.upper())
        .map(|&x| (x as i128).abs() + poly.k() as i128)
        .max()
        .unwrap_or(0);
    if far > radius {
        return Err(Error::Overflow(format!(
            "box reaches |t| = {far}, beyond the safe radius {radius}"
        )));
    }
    Ok(())
}

/// Walks the box row by row in parallel, handing each point, its
/// `(f1, f2)` values and the output slots to `visit`.
fn for_each_point<T, F>(
    poly: &PolyMap,
    f1: &WindowFn,
    f2: &WindowFn,
    bx: &LatticeBox,
    out: &mut [T],
    visit: F,
) -> Result<()>
where
    T: Send,
    F: Fn(&[i64], f64, f64, &mut T) + Sync,
{
    if bx.is_empty() {
        return Ok(());
    }
    check_range(poly, bx)?;
    let d = bx.dim();
    let row_len = bx.extent(d - 1) as usize;
    let m = poly.m();
    out.par_chunks_mut(row_len)
        .enumerate()
        .try_for_each(|(r, row)| -> Result<()> {
            let start = bx.point_at(r as u64 * row_len as u64);
            let mut vals = vec![TorusElem::ZERO; row_len * m];
            poly.evaluate_row(&start, row_len, &mut vals)?;
            let mut pt = start.clone();
            for (j, slot) in row.iter_mut().enumerate() {
                pt[d - 1] = start[d - 1] + j as i64;
                let x = &vals[j * m..(j + 1) * m];
                visit(&pt, f1.eval_unchecked(x), f2.eval_unchecked(x), slot);
            }
            Ok(())
        })
}

/// Thinning keys for realization `seed`: the first matches the polynomial
/// process's own thinning stream, so `Y1` coincides with the `f1`-process.
fn keys(seed: u64) -> (u64, u64) {
    let k = derive_seed(seed, stream::THINNING);
    (k, derive_seed(k, stream::AUX))
}

fn decide(mode: CouplingMode, u: u64, v: u64, a: f64, b: f64) -> (bool, bool) {
    let in1 = accept(u, a);
    match mode {
        CouplingMode::SharedUniform => (in1, accept(u, b)),
        CouplingMode::TwoStep => {
            let delta = b - a;
            let in2 = if in1 {
                !(delta < 0.0 && accept(v, -delta / a))
            } else {
                delta > 0.0 && a < 1.0 && accept(v, delta / (1.0 - a))
            };
            (in1, in2)
        }
    }
}

/// Draws `P` from `core` (its window is ignored) and couples the
/// `f1`- and `f2`-thinnings of it on `bx`.
pub fn couple_thinnings(
    core: &PolynomialSpec,
    f1: &WindowFn,
    f2: &WindowFn,
    bx: &LatticeBox,
    seed: u64,
    mode: CouplingMode,
) -> Result<CoupledPair> {
    check_windows(core, f1, f2)?;
    if bx.dim() != core.d {
        return Err(Error::DimensionMismatch {
            expected: core.d,
            found: bx.dim(),
        });
    }
    let poly = draw_polynomial(core, seed)?;
    let (ku, kv) = keys(seed);
    let mut flags = vec![(0u8, 0u8); bx.volume() as usize];
    for_each_point(&poly, f1, f2, bx, &mut flags, |t, a, b, slot| {
        let u = point_uniform(ku, t);
        let v = if mode == CouplingMode::TwoStep {
            point_uniform(kv, t)
        } else {
            0
        };
        let (x, y) = decide(mode, u, v, a, b);
        *slot = (x as u8, y as u8);
    })?;
    let (a, b): (Vec<u8>, Vec<u8>) = flags.into_iter().unzip();
    Ok(CoupledPair {
        y1: PointSet::from_flags(bx.clone(), &a)?,
        y2: PointSet::from_flags(bx.clone(), &b)?,
        shared_draw: poly,
    })
}

/// Box density of `Y1 Δ Y2` with the binomial standard error.
pub fn symdiff_density(pair: &CoupledPair) -> Result<Estimate> {
    crate::stats::intensity(&pair.y1.symmetric_difference(&pair.y2)?)
}

/// Number of grid points `j · 2^(64 - bits)`, `0 <= j < 2^bits`, that
/// `accept` at probability `p`.
fn grid_accepts(p: f64, bits: u32) -> u128 {
    if p >= 1.0 {
        return 1u128 << bits;
    }
    if p <= 0.0 {
        return 0;
    }
    let thr = (p * TWO_POW_64) as u128;
    let step = 1u128 << (64 - bits);
    thr.div_ceil(step)
}

/// Per-point `ℙ(t ∈ Y1 Δ Y2 | P)` obtained by replacing the auxiliary
/// uniforms with the deterministic grid of `2^bits` values (per uniform) and
/// counting, in row-major box order.
pub fn conditional_symdiff(
    core: &PolynomialSpec,
    f1: &WindowFn,
    f2: &WindowFn,
    bx: &LatticeBox,
    seed: u64,
    mode: CouplingMode,
    bits: u32,
) -> Result<Vec<f64>> {
    if bits == 0 || bits > 32 {
        return Err(Error::InvalidArgument(format!(
            "grid bits {bits} outside 1..=32"
        )));
    }
    check_windows(core, f1, f2)?;
    let poly = draw_polynomial(core, seed)?;
    let n = (1u128 << bits) as f64;
    let mut out = vec![0.0; bx.volume() as usize];
    for_each_point(&poly, f1, f2, bx, &mut out, |_, a, b, slot| {
        let (ca, cb) = (grid_accepts(a, bits), grid_accepts(b, bits));
        *slot = match mode {
            CouplingMode::SharedUniform => ca.abs_diff(cb) as f64 / n,
            CouplingMode::TwoStep => {
                let delta = b - a;
                let removed = if delta < 0.0 {
                    grid_accepts(-delta / a, bits)
                } else {
                    0
                };
                let added = if delta > 0.0 && a < 1.0 {
                    grid_accepts(delta / (1.0 - a), bits)
                } else {
                    0
                };
                // (|U in Y1| · |V removes| + |U not in Y1| · |V adds|) / n^2
                let num = ca * removed + ((1u128 << bits) - ca) * added;
                num as f64 / (n * n)
            }
        };
    })?;
    Ok(out)
}

/// Per-point `|f2(P(t)) − f1(P(t))|` in row-major box order.
pub fn window_gap(
    core: &PolynomialSpec,
    f1: &WindowFn,
    f2: &WindowFn,
    bx: &LatticeBox,
    seed: u64,
) -> Result<Vec<f64>> {
    check_windows(core, f1, f2)?;
    let poly = draw_polynomial(core, seed)?;
    let mut out = vec![0.0; bx.volume() as usize];
    for_each_point(&poly, f1, f2, bx, &mut out, |_, a, b, slot| {
        *slot = (b - a).abs()
    })?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedDensity {
    pub seed: u64,
    pub density: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// Mean of the per-seed densities.
    pub density: f64,
    /// Standard error of `density` across seeds.
    pub std_err: f64,
    /// `‖f1 − f2‖_1` under Haar measure.
    pub l1_gap: f64,
    /// `‖f1 − f2‖_2`.
    pub l2_bound: f64,
    pub mode: CouplingMode,
    pub per_seed: Vec<SeedDensity>,
}

/// Symmetric-difference densities on `bx` for each seed, with their mean.
pub fn run_coupling(
    core: &PolynomialSpec,
    f1: &WindowFn,
    f2: &WindowFn,
    bx: &LatticeBox,
    seeds: &[u64],
    mode: CouplingMode,
) -> Result<CouplingReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    let (l1_gap, l2_bound) = window_distance(f1, f2)?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let e = symdiff_density(&couple_thinnings(core, f1, f2, bx, seed, mode)?)?;
        per_seed.push(SeedDensity {
            seed,
            density: e.value,
            std_err: e.std_err,
        });
    }
    let n = per_seed.len() as f64;
    let density = per_seed.iter().map(|s| s.density).sum::<f64>() / n;
    let var = if per_seed.len() > 1 {
        per_seed
            .iter()
            .map(|s| (s.density - density).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        per_seed[0].std_err.powi(2) * n
    };
    Ok(CouplingReport {
        density,
        std_err: (var / n).sqrt(),
        l1_gap,
        l2_bound,
        mode,
        per_seed,
    })
}
