//! Declarative process descriptions and their realizations.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{LatticeBox, PointSet};
use super::periodic::PeriodicOrbit;
use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::polymap::{safe_radius, DegreeFilter, PolyMap, Subgroup};
use crate::rng::{derive_seed, point_uniform, stream, stream_rng};
use crate::torus::{accept, TorusElem, WindowFn};

/// A number in `[0, 1]`, validated at parse time.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(Probability(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Probability::new(p)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

fn default_m() -> usize {
    1
}

/// Polynomial process: a Haar-random polynomial `P: ℤ^d → 𝕋^m` and
/// independent thinning with probability `window(P(t))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub d: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub k: u32,
    #[serde(default = "default_filter")]
    pub degree_filter: DegreeFilter,
    #[serde(default = "default_subgroup")]
    pub subgroup: Subgroup,
    pub window: WindowFn,
    /// Fixed unimodular `m × m` matrix applied to every drawn coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_action: Option<Vec<Vec<i64>>>,
    /// Deliberately non-invariant control: with this probability the constant
    /// coefficient is forced to zero instead of being Haar-distributed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_spike: Option<Probability>,
}

fn default_filter() -> DegreeFilter {
    DegreeFilter::AtMostK
}

fn default_subgroup() -> Subgroup {
    Subgroup::Full
}

/// Cut-and-project set in graph form: the lattice
/// `{(t, z + ξ₀ + Ξᵀ t) : t ∈ ℤ^d, z ∈ ℤ^n}` in ℝ^{d+n} with a uniformly
/// random translate `ξ₀ ∈ [0,1)^n`, intersected with `ℝ^d × W` and
/// projected to the first `d` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutProjectSpec {
    pub d: usize,
    /// `d × n` slope matrix `Ξ`. Drawn uniformly from `[0,1)^{d×n}` for each
    /// realization when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<Vec<f64>>>,
    /// Window `W` as half-open intervals `[a, b)` in internal space, `b - a <= 1`.
    pub window: Vec<[f64; 2]>,
}

impl CutProjectSpec {
    pub fn internal_dim(&self) -> usize {
        self.window.len()
    }
}

/// Tree of process constructors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Process {
    Bernoulli {
        p: Probability,
    },
    /// Uniform element of the ASL_d(ℤ)-orbit of a periodic set. `pattern`
    /// lists residues mod `modulus`; absent means the single residue 0, giving
    /// a uniform random translate of `nℤ^d`.
    Periodic {
        modulus: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<Vec<Vec<i64>>>,
    },
    Polynomial(PolynomialSpec),
    CutProject(CutProjectSpec),
    Union {
        left: Box<Process>,
        right: Box<Process>,
    },
    Intersect {
        left: Box<Process>,
        right: Box<Process>,
    },
    /// Independent thinning with retention probability `q`.
    Thin {
        inner: Box<Process>,
        q: Probability,
    },
    /// Image `g(X)` of the inner process.
    Image {
        inner: Box<Process>,
        g: AffineMap,
    },
}

/// A process together with its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub process: Process,
    pub seed: u64,
}

impl ProcessSpec {
    pub fn new(process: Process, seed: u64) -> Self {
        ProcessSpec { process, seed }
    }

    pub fn sample(&self, bx: &LatticeBox) -> Result<PointSet> {
        self.process.sample(bx, self.seed)
    }
}

impl Process {
    /// Lattice dimension fixed by the process, if any.
    pub fn dim(&self) -> Result<Option<usize>> {
        Ok(match self {
            Process::Bernoulli { .. } => None,
            Process::Periodic { pattern, .. } => {
                pattern.as_ref().and_then(|p| p.first()).map(Vec::len)
            }
            Process::Polynomial(s) => Some(s.d),
            Process::CutProject(s) => Some(s.d),
            Process::Union { left, right } | Process::Intersect { left, right } => {
                match (left.dim()?, right.dim()?) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(Error::DimensionMismatch {
                            expected: a,
                            found: b,
                        })
                    }
                    (a, b) => a.or(b),
                }
            }
            Process::Thin { inner, .. } => inner.dim()?,
            Process::Image { inner, g } => {
                if let Some(a) = inner.dim()? {
                    if a != g.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: a,
                            found: g.dim(),
                        });
                    }
                }
                Some(g.dim())
            }
        })
    }

    /// Checks internal consistency and compatibility with dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if let Some(own) = self.dim()? {
            if own != d {
                return Err(Error::DimensionMismatch {
                    expected: own,
                    found: d,
                });
            }
        }
        match self {
            Process::Bernoulli { .. } => Ok(()),
            Process::Periodic { modulus, pattern } => {
                if *modulus == 0 {
                    return Err(Error::InvalidArgument(
                        "periodic modulus must be positive".into(),
                    ));
                }
                if let Some(p) = pattern {
                    if p.is_empty() {
                        return Err(Error::InvalidArgument("periodic pattern is empty".into()));
                    }
                    if let Some(bad) = p.iter().find(|r| r.len() != d) {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: bad.len(),
                        });
                    }
                }
                Ok(())
            }
            Process::Polynomial(s) => {
                if s.m == 0 {
                    return Err(Error::InvalidArgument(
                        "polynomial target dimension m must be >= 1".into(),
                    ));
                }
                if let Some(wd) = s.window.dim() {
                    if wd != s.m {
                        return Err(Error::DimensionMismatch {
                            expected: s.m,
                            found: wd,
                        });
                    }
                }
                if let Some(mat) = &s.coeff_action {
                    // reuse the unimodularity check
                    PolyMap::zero(0, s.m, 0).coeff_action(mat)?;
                }
                Ok(())
            }
            Process::CutProject(s) => {
                if s.window.is_empty() {
                    return Err(Error::InvalidArgument(
                        "cut-and-project window needs >= 1 interval".into(),
                    ));
                }
                for &[a, b] in &s.window {
                    if !(a <= b && b - a <= 1.0) || !a.is_finite() || !b.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "cut-and-project window [{a}, {b}) must have 0 <= length <= 1"
                        )));
                    }
                }
                if let Some(sl) = &s.slopes {
                    if sl.len() != s.d {
                        return Err(Error::DimensionMismatch {
                            expected: s.d,
                            found: sl.len(),
                        });
                    }
                    if let Some(bad) = sl.iter().find(|r| r.len() != s.internal_dim()) {
                        return Err(Error::DimensionMismatch {
                            expected: s.internal_dim(),
                            found: bad.len(),
                        });
                    }
                }
                Ok(())
            }
            Process::Union { left, right } | Process::Intersect { left, right } => {
                left.validate(d)?;
                right.validate(d)
            }
            Process::Thin { inner, .. } => inner.validate(d),
            Process::Image { inner, .. } => inner.validate(d),
        }
    }

    /// Draws the structured randomness of one realization.
    pub fn realize(&self, d: usize, seed: u64) -> Result<Realization> {
        self.validate(d)?;
        self.realize_unchecked(d, seed)
    }

    fn realize_unchecked(&self, d: usize, seed: u64) -> Result<Realization> {
        Ok(match self {
            Process::Bernoulli { p } => Realization::Bernoulli {
                p: p.get(),
                key: derive_seed(seed, stream::THINNING),
            },
            Process::Periodic { modulus, pattern } => {
                let pattern = pattern.clone().unwrap_or_else(|| vec![vec![0; d]]);
                let orbit = PeriodicOrbit::get(*modulus, d, &pattern)?;
                let mut rng = stream_rng(seed, stream::TRANSLATE);
                let pick = rng.random_range(0..orbit.len());
                Realization::Periodic {
                    modulus: *modulus,
                    members: orbit.member_mask(pick),
                }
            }
            Process::Polynomial(s) => {
                let poly = draw_polynomial(s, seed)?;
                Realization::Polynomial {
                    poly,
                    window: s.window.clone(),
                    key: derive_seed(seed, stream::THINNING),
                }
            }
            Process::CutProject(s) => {
                let n = s.internal_dim();
                let mut rng = stream_rng(seed, stream::TRANSLATE);
                let offset: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let slopes = match &s.slopes {
                    Some(sl) => sl.clone(),
                    None => (0..s.d)
                        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
                        .collect(),
                };
                Realization::CutProject {
                    offset,
                    slopes,
                    window: s.window.clone(),
                }
            }
            Process::Union { left, right } => Realization::Union(
                Box::new(left.realize_unchecked(d, derive_seed(seed, stream::LEFT))?),
                Box::new(right.realize_unchecked(d, derive_seed(seed, stream::RIGHT))?),
            ),
            Process::Intersect { left, right } => Realization::Intersect(
                Box::new(left.realize_unchecked(d, derive_seed(seed, stream::LEFT))?),
                Box::new(right.realize_unchecked(d, derive_seed(seed, stream::RIGHT))?),
            ),
            Process::Thin { inner, q } => Realization::Thin {
                inner: Box::new(inner.realize_unchecked(d, derive_seed(seed, stream::INNER))?),
                q: q.get(),
                key: derive_seed(seed, stream::THINNING),
            },
            Process::Image { inner, g } => Realization::Image {
                inner: Box::new(inner.realize_unchecked(d, derive_seed(seed, stream::INNER))?),
                g_inv: g.invert()?,
            },
        })
    }

    /// One realization restricted to `bx`. Deterministic in `seed`.
    pub fn sample(&self, bx: &LatticeBox, seed: u64) -> Result<PointSet> {
        self.realize(bx.dim(), seed)?.fill(bx)
    }
}

/// The polynomial draw of a polynomial process, including the optional
/// coefficient action and spike.
pub fn draw_polynomial(s: &PolynomialSpec, seed: u64) -> Result<PolyMap> {
    let mut rng = stream_rng(seed, stream::COEFFICIENTS);
    let mut poly = PolyMap::haar_sample(s.d, s.m, s.k, &s.degree_filter, &s.subgroup, &mut rng)?;
    if let Some(mat) = &s.coeff_action {
        poly = poly.coeff_action(mat)?;
    }
    if let Some(spike) = s.constant_spike {
        let mut aux = stream_rng(seed, stream::AUX);
        if aux.random::<f64>() < spike.get() {
            poly.coeff_mut(0)
                .iter_mut()
                .for_each(|c| *c = TorusElem::ZERO);
        }
    }
    Ok(poly)
}

/// The randomness of one sample, fixed; membership can be queried anywhere.
#[derive(Clone, Debug)]
pub enum Realization {
    Bernoulli {
        p: f64,
        key: u64,
    },
    Periodic {
        modulus: u64,
        members: Vec<bool>,
    },
    Polynomial {
        poly: PolyMap,
        window: WindowFn,
        key: u64,
    },
    CutProject {
        offset: Vec<f64>,
        slopes: Vec<Vec<f64>>,
        window: Vec<[f64; 2]>,
    },
    Union(Box<Realization>, Box<Realization>),
    Intersect(Box<Realization>, Box<Realization>),
    Thin {
        inner: Box<Realization>,
        q: f64,
        key: u64,
    },
    Image {
        inner: Box<Realization>,
        g_inv: AffineMap,
    },
}

impl fmt::Display for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Realization::Bernoulli { p, .. } => write!(f, "bernoulli({p})"),
            Realization::Periodic { modulus, .. } => write!(f, "periodic({modulus})"),
            Realization::Polynomial { poly, .. } => {
                write!(f, "polynomial(d={}, k={})", poly.d(), poly.k())
            }
            Realization::CutProject { .. } => write!(f, "cut-project"),
            Realization::Union(a, b) => write!(f, "({a} ∪ {b})"),
            Realization::Intersect(a, b) => write!(f, "({a} ∩ {b})"),
            Realization::Thin { inner, q, .. } => write!(f, "thin({inner}, {q})"),
            Realization::Image { inner, .. } => write!(f, "image({inner})"),
        }
    }
}

#[inline]
fn in_internal_window(y: f64, [a, b]: [f64; 2]) -> bool {
    // some z ∈ ℤ puts y + z in [a, b)
    (y - a).rem_euclid(1.0) < b - a
}

impl Realization {
    /// Whether `t` belongs to the realized set.
    pub fn contains(&self, t: &[i64]) -> Result<bool> {
        Ok(match self {
            Realization::Bernoulli { p, key } => accept(point_uniform(*key, t), *p),
            Realization::Periodic { modulus, members } => members[residue_index(*modulus, t)],
            Realization::Polynomial { poly, window, key } => {
                let mut buf = [TorusElem::ZERO; 8];
                let mut heap;
                let v: &mut [TorusElem] = if poly.m() <= buf.len() {
                    &mut buf[..poly.m()]
                } else {
                    heap = vec![TorusElem::ZERO; poly.m()];
                    &mut heap
                };
                poly.evaluate_into(t, v)?;
                thin(window.eval_unchecked(v), *key, t)
            }
            Realization::CutProject {
                offset,
                slopes,
                window,
            } => cut_project_member(offset, slopes, window, t),
            Realization::Union(a, b) => a.contains(t)? || b.contains(t)?,
            Realization::Intersect(a, b) => a.contains(t)? && b.contains(t)?,
            Realization::Thin { inner, q, key } => {
                inner.contains(t)? && accept(point_uniform(*key, t), *q)
            }
            Realization::Image { inner, g_inv } => inner.contains(&g_inv.apply(t)?)?,
        })
    }

    /// All of `points` belong to the set.
    pub fn contains_all(&self, points: &[Vec<i64>]) -> Result<bool> {
        for p in points {
            if !self.contains(p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Restriction of the realized set to `bx`, computed row by row in
    /// parallel. The result does not depend on the thread count.
    pub fn fill(&self, bx: &LatticeBox) -> Result<PointSet> {
        if bx.is_empty() {
            return Ok(PointSet::empty(bx.clone()));
        }
        let d = bx.dim();
        let row_len = bx.extent(d - 1) as usize;
        let vol = usize::try_from(bx.volume())
            .map_err(|_| Error::Overflow("box too large for memory".into()))?;
        self.check_fill_range(bx)?;
        let mut flags = vec![0u8; vol];
        flags
            .par_chunks_mut(row_len)
            .enumerate()
            .try_for_each(|(r, row)| {
                let start = bx.point_at(r as u64 * row_len as u64);
                self.fill_row(&start, row)
            })?;
        PointSet::from_flags(bx.clone(), &flags)
    }

    fn check_fill_range(&self, bx: &LatticeBox) -> Result<()> {
        match self {
            Realization::Polynomial { poly, .. } => {
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
                        "box reaches |t| = {far}, beyond the safe radius {radius} for degree {}",
                        poly.k()
                    )));
                }
                Ok(())
            }
            Realization::Union(a, b) | Realization::Intersect(a, b) => {
                a.check_fill_range(bx)?;
                b.check_fill_range(bx)
            }
            Realization::Thin { inner, .. } => inner.check_fill_range(bx),
            _ => Ok(()),
        }
    }

    /// Membership flags along the row starting at `start` in the last axis.
    fn fill_row(&self, start: &[i64], out: &mut [u8]) -> Result<()> {
        let last = start.len() - 1;
        match self {
            Realization::Polynomial { poly, window, key } => {
                let m = poly.m();
                let mut vals = vec![TorusElem::ZERO; out.len() * m];
                poly.evaluate_row(start, out.len(), &mut vals)?;
                let indicator = window.is_indicator();
                let mut pt = start.to_vec();
                for (j, o) in out.iter_mut().enumerate() {
                    let f = window.eval_unchecked(&vals[j * m..(j + 1) * m]);
                    *o = if indicator {
                        (f == 1.0) as u8
                    } else {
                        pt[last] = start[last] + j as i64;
                        thin(f, *key, &pt) as u8
                    };
                }
                Ok(())
            }
            Realization::Union(a, b) | Realization::Intersect(a, b) => {
                let union = matches!(self, Realization::Union(..));
                a.fill_row(start, out)?;
                let mut other = vec![0u8; out.len()];
                b.fill_row(start, &mut other)?;
                for (o, x) in out.iter_mut().zip(other) {
                    *o = if union { *o | x } else { *o & x };
                }
                Ok(())
            }
            Realization::Thin { inner, q, key } => {
                inner.fill_row(start, out)?;
                let mut pt = start.to_vec();
                for (j, o) in out.iter_mut().enumerate() {
                    if *o != 0 {
                        pt[last] = start[last] + j as i64;
                        *o = accept(point_uniform(*key, &pt), *q) as u8;
                    }
                }
                Ok(())
            }
            _ => {
                let mut pt = start.to_vec();
                for (j, o) in out.iter_mut().enumerate() {
                    pt[last] = start[last] + j as i64;
                    *o = self.contains(&pt)? as u8;
                }
                Ok(())
            }
        }
    }
}

#[inline]
fn thin(f: f64, key: u64, t: &[i64]) -> bool {
    if f >= 1.0 {
        true
    } else if f <= 0.0 {
        false
    } else {
        accept(point_uniform(key, t), f)
    }
}

pub(crate) fn residue_index(modulus: u64, t: &[i64]) -> usize {
    t.iter().fold(0usize, |acc, &x| {
        acc * modulus as usize + (x as i128).rem_euclid(modulus as i128) as usize
    })
}

fn cut_project_member(offset: &[f64], slopes: &[Vec<f64>], window: &[[f64; 2]], t: &[i64]) -> bool {
    offset.iter().enumerate().all(|(c, &o)| {
        let y = t
            .iter()
            .zip(slopes)
            .fold(o, |acc, (&ti, row)| acc + ti as f64 * row[c]);
        in_internal_window(y, window[c])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::presets;

    fn square(n: i64) -> LatticeBox {
        LatticeBox::cube(2, 0, n).unwrap()
    }

    #[test]
    fn bernoulli_extremes() {
        let b = square(20);
        let full = Process::Bernoulli {
            p: Probability::new(1.0).unwrap(),
        }
        .sample(&b, 3)
        .unwrap();
        assert_eq!(full.len(), 400);
        let none = Process::Bernoulli {
            p: Probability::new(0.0).unwrap(),
        }
        .sample(&b, 3)
        .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn sampling_is_deterministic_and_box_consistent() {
        for proc in [
            presets::s_k(2, 2, 0.5).unwrap(),
            presets::bernoulli(0.3).unwrap(),
            presets::cutproject_s1(2),
        ] {
            let a = proc.sample(&square(30), 17).unwrap();
            let b = proc.sample(&square(30), 17).unwrap();
            assert_eq!(a, b);
            let big = proc
                .sample(&LatticeBox::cube(2, -10, 40).unwrap(), 17)
                .unwrap();
            for t in square(30).points() {
                assert_eq!(a.contains(&t).unwrap(), big.contains(&t).unwrap());
            }
            let c = proc.sample(&square(30), 18).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn fill_agrees_with_pointwise_membership() {
        let procs = [
            presets::s_k(3, 3, 0.25).unwrap(),
            Process::Thin {
                inner: Box::new(presets::s_k(3, 1, 0.5).unwrap()),
                q: Probability::new(0.5).unwrap(),
            },
            Process::Union {
                left: Box::new(presets::bernoulli(0.2).unwrap()),
                right: Box::new(presets::periodic(3)),
            },
        ];
        let bx = LatticeBox::new(vec![-3, 0, 5], vec![4, 6, 17]).unwrap();
        for p in procs {
            let r = p.realize(3, 5).unwrap();
            let s = r.fill(&bx).unwrap();
            for t in bx.points() {
                assert_eq!(
                    s.contains(&t).unwrap(),
                    r.contains(&t).unwrap(),
                    "{r} at {t:?}"
                );
            }
        }
    }

    #[test]
    fn constant_window_polynomial_is_bernoulli_like() {
        let spec = PolynomialSpec {
            d: 2,
            m: 1,
            k: 2,
            degree_filter: DegreeFilter::AtMostK,
            subgroup: Subgroup::Full,
            window: WindowFn::constant(0.3).unwrap(),
            coeff_action: None,
            constant_spike: None,
        };
        let s = Process::Polynomial(spec).sample(&square(200), 1).unwrap();
        let dens = s.len() as f64 / 40000.0;
        assert!(
            (dens - 0.3).abs() < 4.0 * (0.21f64 / 40000.0).sqrt(),
            "{dens}"
        );
    }

    #[test]
    fn monotone_in_window() {
        let small = presets::s_k(2, 2, 0.3).unwrap();
        let large = presets::s_k(2, 2, 0.6).unwrap();
        let a = small.sample(&square(64), 9).unwrap();
        let b = large.sample(&square(64), 9).unwrap();
        assert!(a.is_subset(&b).unwrap());
        assert!(a.len() < b.len());
    }

    #[test]
    fn cut_project_extremes() {
        let b = square(25);
        let full = Process::CutProject(CutProjectSpec {
            d: 2,
            slopes: None,
            window: vec![[0.0, 1.0]],
        });
        assert_eq!(full.sample(&b, 1).unwrap().len(), 625);
        let empty = Process::CutProject(CutProjectSpec {
            d: 2,
            slopes: None,
            window: vec![[0.3, 0.3]],
        });
        assert!(empty.sample(&b, 1).unwrap().is_empty());
    }

    #[test]
    fn image_is_preimage_membership() {
        let g = AffineMap::preset("shear-12", 2).unwrap();
        let inner = presets::s_k(2, 2, 0.5).unwrap();
        let img = Process::Image {
            inner: Box::new(inner.clone()),
            g: g.clone(),
        };
        let r_img = img.realize(2, 4).unwrap();
        let Realization::Image { inner: r_inner, .. } = &r_img else {
            unreachable!()
        };
        for t in square(10).points() {
            let pre = g.invert().unwrap().apply(&t).unwrap();
            assert_eq!(r_img.contains(&t).unwrap(), r_inner.contains(&pre).unwrap());
        }
    }

    #[test]
    fn validation_errors() {
        let p = presets::s_k(3, 1, 0.5).unwrap();
        assert!(matches!(
            p.sample(&square(4), 0),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = Process::Union {
            left: Box::new(presets::s_k(2, 1, 0.5).unwrap()),
            right: Box::new(presets::s_k(3, 1, 0.5).unwrap()),
        };
        assert!(bad.dim().is_err());
        assert!(serde_json::from_str::<Process>(r#"{"bernoulli": {"p": -0.5}}"#).is_err());
        assert!(Process::Periodic {
            modulus: 0,
            pattern: None
        }
        .validate(2)
        .is_err());
    }

    #[test]
    fn degenerate_box_is_empty_not_error() {
        let b = LatticeBox::new(vec![0, 0], vec![0, 10]).unwrap();
        assert!(presets::s_k(2, 1, 0.5)
            .unwrap()
            .sample(&b, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn overflowing_box_is_rejected() {
        let far = LatticeBox::new(vec![3_000_000, 0], vec![3_000_010, 5]).unwrap();
        assert!(matches!(
            presets::s_k(2, 3, 0.5).unwrap().sample(&far, 1),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn json_shape() {
        let p = presets::s_k(2, 1, 0.5).unwrap();
        let spec = ProcessSpec::new(p, 7);
        let s = serde_json::to_string(&spec).unwrap();
        let back: ProcessSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let parsed: Process = serde_json::from_str(
            r#"{"union": {"left": {"bernoulli": {"p": 0.2}}, "right": {"periodic": {"modulus": 2}}}}"#,
        )
        .unwrap();
        assert!(matches!(parsed, Process::Union { .. }));
    }
}
