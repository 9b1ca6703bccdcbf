//! Exact arithmetic on the circle group ℝ/ℤ and its powers.
//!
//! A [`TorusElem`] stores a point of ℝ/ℤ as a 64-bit fixed-point fraction
//! `raw / 2^64`. Addition, negation and multiplication by integers are plain
//! wrapping integer operations, so every group identity holds bit-exactly.
//! Window functions `f: 𝕋^m → [0,1]` live in [`WindowFn`].

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// 2^64 as a float, exact.
pub const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;
const ONE_RAW: u128 = 1u128 << 64;

/// A point of 𝕋 = ℝ/ℤ, stored as `raw / 2^64`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusElem(u64);

impl TorusElem {
    pub const ZERO: TorusElem = TorusElem(0);
    pub const HALF: TorusElem = TorusElem(1 << 63);

    #[inline]
    pub const fn from_raw(raw: u64) -> Self {
        TorusElem(raw)
    }

    #[inline]
    pub const fn raw(self) -> u64 {
        self.0
    }

    /// The class of `p/q` in ℝ/ℤ, rounded to the nearest multiple of 2^-64.
    ///
    /// Exact when `q` is a power of two no larger than 2^64.
    pub fn from_rational(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let r = (p as i128).rem_euclid(q as i128) as u128;
        // r < q <= 2^64 - 1, so r << 64 fits in u128.
        let num = (r << 64) + (q as u128) / 2;
        Ok(TorusElem((num / q as u128) as u64))
    }

    /// Fractional part of `x`, rounded to the nearest representable point.
    pub fn from_f64(x: f64) -> Self {
        let frac = x.rem_euclid(1.0);
        let scaled = (frac * TWO_POW_64).round();
        if scaled >= TWO_POW_64 {
            TorusElem(0)
        } else {
            TorusElem(scaled as u64)
        }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / TWO_POW_64
    }

    /// `c · self` in ℝ/ℤ.
    #[inline]
    pub fn int_mul(self, c: i64) -> Self {
        TorusElem(self.0.wrapping_mul(c as u64))
    }

    /// `c · self` for a 128-bit multiplier. Only `c mod 2^64` matters.
    #[inline]
    pub fn int_mul_wide(self, c: i128) -> Self {
        TorusElem(self.0.wrapping_mul(c as u64))
    }
}

impl Add for TorusElem {
    type Output = TorusElem;
    #[inline]
    fn add(self, rhs: TorusElem) -> TorusElem {
        TorusElem(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for TorusElem {
    #[inline]
    fn add_assign(&mut self, rhs: TorusElem) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for TorusElem {
    type Output = TorusElem;
    #[inline]
    fn sub(self, rhs: TorusElem) -> TorusElem {
        TorusElem(self.0.wrapping_sub(rhs.0))
    }
}

impl SubAssign for TorusElem {
    #[inline]
    fn sub_assign(&mut self, rhs: TorusElem) {
        self.0 = self.0.wrapping_sub(rhs.0);
    }
}

impl Neg for TorusElem {
    type Output = TorusElem;
    #[inline]
    fn neg(self) -> TorusElem {
        TorusElem(self.0.wrapping_neg())
    }
}

impl fmt::Debug for TorusElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T({:#018x} ≈ {:.6})", self.0, self.to_f64())
    }
}

impl fmt::Display for TorusElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

// Serialized as a decimal string so JSON consumers never round through f64.
impl Serialize for TorusElem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for TorusElem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<u64>()
            .map(TorusElem)
            .map_err(|e| serde::de::Error::custom(format!("bad torus element {s:?}: {e}")))
    }
}

/// A point of 𝕋^m.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusVec(pub Vec<TorusElem>);

impl TorusVec {
    pub fn zeros(m: usize) -> Self {
        TorusVec(vec![TorusElem::ZERO; m])
    }

    pub fn from_raw(raw: &[u64]) -> Self {
        TorusVec(raw.iter().map(|&r| TorusElem(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[TorusElem] {
        &self.0
    }

    pub fn add(&self, other: &TorusVec) -> Result<TorusVec> {
        check_dim(self.dim(), other.dim())?;
        Ok(TorusVec(
            self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect(),
        ))
    }

    pub fn int_mul(&self, c: i64) -> TorusVec {
        TorusVec(self.0.iter().map(|a| a.int_mul(c)).collect())
    }

    /// Acts by an integer `m × m` matrix given row-major.
    pub fn apply_int_matrix(&self, rows: &[Vec<i64>]) -> Result<TorusVec> {
        check_dim(self.dim(), rows.len())?;
        rows.iter()
            .map(|row| {
                check_dim(self.dim(), row.len())?;
                Ok(row
                    .iter()
                    .zip(&self.0)
                    .fold(TorusElem::ZERO, |acc, (&c, &x)| acc + x.int_mul(c)))
            })
            .collect::<Result<Vec<_>>>()
            .map(TorusVec)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Half-open arc `[lo, hi)` of 𝕋 in raw units; `hi` may equal 2^64.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: u64,
    hi: u128,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "interval [{lo}, {hi}) must satisfy 0 <= a <= b <= 1"
            )));
        }
        let lo_raw = (lo * TWO_POW_64).round() as u128;
        let hi_raw = (hi * TWO_POW_64).round() as u128;
        if lo_raw >= ONE_RAW {
            // [1, 1) is empty; park it at the origin.
            return Ok(Interval { lo: 0, hi: 0 });
        }
        Ok(Interval {
            lo: lo_raw as u64,
            hi: hi_raw.min(ONE_RAW),
        })
    }

    pub fn from_raw(lo: u64, hi: u128) -> Result<Self> {
        if hi > ONE_RAW || (lo as u128) > hi {
            return Err(Error::InvalidArgument(format!(
                "raw interval [{lo}, {hi}) out of range"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn full() -> Self {
        Interval { lo: 0, hi: ONE_RAW }
    }

    #[inline]
    pub fn contains(&self, x: TorusElem) -> bool {
        let x = x.0;
        x >= self.lo && (x as u128) < self.hi
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u128 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo as u128) as f64 / TWO_POW_64
    }

    fn bounds_f64(&self) -> [f64; 2] {
        [self.lo as f64 / TWO_POW_64, self.hi as f64 / TWO_POW_64]
    }
}

/// A measurable window `f: 𝕋^m → [0,1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub enum WindowFn {
    /// Indicator of a product of half-open arcs.
    Box(Vec<Interval>),
    /// Constant probability; accepts points of any dimension.
    Constant(f64),
    /// Piecewise constant on the dyadic grid with `2^bits` cells per axis.
    /// `values` is row-major with the last coordinate fastest.
    Table {
        dim: usize,
        bits: u32,
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WindowRepr {
    Box(Vec<[f64; 2]>),
    Constant(f64),
    Table(TableRepr),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TableRepr {
    dim: usize,
    bits: u32,
    values: Vec<f64>,
}

impl TryFrom<WindowRepr> for WindowFn {
    type Error = Error;
    fn try_from(r: WindowRepr) -> Result<Self> {
        match r {
            WindowRepr::Box(iv) => {
                WindowFn::boxed(&iv.iter().map(|&[a, b]| (a, b)).collect::<Vec<_>>())
            }
            WindowRepr::Constant(p) => WindowFn::constant(p),
            WindowRepr::Table(t) => WindowFn::table(t.dim, t.bits, t.values),
        }
    }
}

impl From<WindowFn> for WindowRepr {
    fn from(w: WindowFn) -> Self {
        match w {
            WindowFn::Box(iv) => WindowRepr::Box(iv.iter().map(Interval::bounds_f64).collect()),
            WindowFn::Constant(p) => WindowRepr::Constant(p),
            WindowFn::Table { dim, bits, values } => {
                WindowRepr::Table(TableRepr { dim, bits, values })
            }
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

const MAX_TABLE_CELLS: u64 = 1 << 24;

impl WindowFn {
    /// Box window from `(a, b)` pairs describing `[a, b)` per coordinate.
    pub fn boxed(intervals: &[(f64, f64)]) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument(
                "box window needs at least one interval".into(),
            ));
        }
        intervals
            .iter()
            .map(|&(a, b)| Interval::new(a, b))
            .collect::<Result<Vec<_>>>()
            .map(WindowFn::Box)
    }

    /// `[0, delta)` in 𝕋^1.
    pub fn arc(delta: f64) -> Result<Self> {
        Self::boxed(&[(0.0, delta)])
    }

    pub fn constant(p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(WindowFn::Constant(p))
    }

    pub fn table(dim: usize, bits: u32, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || bits == 0 || bits > 16 {
            return Err(Error::InvalidArgument(format!(
                "table window needs dim >= 1 and 1 <= bits <= 16 (got dim={dim}, bits={bits})"
            )));
        }
        let cells = (bits as u64)
            .checked_mul(dim as u64)
            .filter(|&b| b < 63)
            .map(|b| 1u64 << b)
            .filter(|&c| c <= MAX_TABLE_CELLS)
            .ok_or_else(|| Error::InvalidArgument("table window too large".into()))?;
        if values.len() as u64 != cells {
            return Err(Error::InvalidArgument(format!(
                "table window expects {cells} values, got {}",
                values.len()
            )));
        }
        for &v in &values {
            check_probability(v)?;
        }
        Ok(WindowFn::Table { dim, bits, values })
    }

    /// Dimension of the torus the window lives on; `None` for constants.
    pub fn dim(&self) -> Option<usize> {
        match self {
            WindowFn::Box(iv) => Some(iv.len()),
            WindowFn::Constant(_) => None,
            WindowFn::Table { dim, .. } => Some(*dim),
        }
    }

    /// `f(x)`.
    pub fn evaluate(&self, x: &[TorusElem]) -> Result<f64> {
        if let Some(m) = self.dim() {
            check_dim(m, x.len())?;
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[TorusElem]) -> f64 {
        match self {
            WindowFn::Box(iv) => {
                if iv.iter().zip(x).all(|(i, &xi)| i.contains(xi)) {
                    1.0
                } else {
                    0.0
                }
            }
            WindowFn::Constant(p) => *p,
            WindowFn::Table { bits, values, .. } => {
                let shift = 64 - bits;
                let idx = x.iter().fold(0usize, |acc, xi| {
                    (acc << bits) | (xi.raw() >> shift) as usize
                });
                values[idx]
            }
        }
    }

    /// True when the window only takes the values 0 and 1.
    pub fn is_indicator(&self) -> bool {
        match self {
            WindowFn::Box(_) => true,
            WindowFn::Constant(p) => *p == 0.0 || *p == 1.0,
            WindowFn::Table { values, .. } => values.iter().all(|&v| v == 0.0 || v == 1.0),
        }
    }

    /// Integral of the window against Haar measure.
    pub fn haar_mass(&self) -> f64 {
        match self {
            WindowFn::Box(iv) => iv.iter().map(Interval::length).product(),
            WindowFn::Constant(p) => *p,
            WindowFn::Table { values, .. } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    /// Breakpoints along one axis, in raw units, including 0 and 2^64.
    fn breakpoints(&self, axis: usize) -> Vec<u128> {
        let mut pts = vec![0, ONE_RAW];
        match self {
            WindowFn::Box(iv) => {
                pts.push(iv[axis].lo as u128);
                pts.push(iv[axis].hi);
            }
            WindowFn::Constant(_) => {}
            WindowFn::Table { bits, .. } => {
                let step = ONE_RAW >> bits;
                pts.extend((1..(1u128 << bits)).map(|i| i * step));
            }
        }
        pts
    }
}

/// `(‖f − g‖₁, ‖f − g‖₂)` with respect to Haar measure on 𝕋^m.
///
/// Both windows are piecewise constant on a common product grid, so the
/// integrals are finite sums over the cells of that grid.
pub fn window_distance(f: &WindowFn, g: &WindowFn) -> Result<(f64, f64)> {
    let m = match (f.dim(), g.dim()) {
        (Some(a), Some(b)) => {
            check_dim(a, b)?;
            a
        }
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 1,
    };
    let axes: Vec<Vec<u128>> = (0..m)
        .map(|axis| {
            let mut pts = Vec::new();
            if f.dim().is_some() {
                pts.extend(f.breakpoints(axis));
            }
            if g.dim().is_some() {
                pts.extend(g.breakpoints(axis));
            }
            pts.push(0);
            pts.push(ONE_RAW);
            pts.sort_unstable();
            pts.dedup();
            pts
        })
        .collect();
    let cells: u64 = axes.iter().map(|a| (a.len() - 1) as u64).product();
    if cells > MAX_TABLE_CELLS {
        return Err(Error::InvalidArgument(format!(
            "common refinement has {cells} cells; too many to integrate"
        )));
    }

    let mut idx = vec![0usize; m];
    let mut point = vec![TorusElem::ZERO; m];
    let (mut l1, mut l2) = (0.0, 0.0);
    loop {
        let mut vol = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            let (lo, hi) = (axes[axis][i], axes[axis][i + 1]);
            point[axis] = TorusElem::from_raw(lo as u64);
            vol *= (hi - lo) as f64 / TWO_POW_64;
        }
        let diff = (f.eval_unchecked(&point) - g.eval_unchecked(&point)).abs();
        l1 += diff * vol;
        l2 += diff * diff * vol;

        // odometer
        let mut axis = m;
        loop {
            if axis == 0 {
                return Ok((l1, l2.sqrt()));
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] + 1 < axes[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Acceptance test for thinning: `u` is a uniform 64-bit word; returns true
/// with probability `floor(p · 2^64) / 2^64` (and exactly 1 for `p >= 1`).
#[inline]
pub fn accept(u: u64, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        (u as u128) < (p * TWO_POW_64) as u128
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(p: i64, q: u64) -> TorusElem {
        TorusElem::from_rational(p, q).unwrap()
    }

    #[test]
    fn addition_examples() {
        assert_eq!(TorusElem::ZERO + TorusElem::ZERO, TorusElem::ZERO);
        assert_eq!(t(1, 2) + t(1, 2), TorusElem::ZERO);
        assert_eq!(t(3, 4) + t(1, 2), t(1, 4));
    }

    #[test]
    fn integer_multiplication_examples() {
        let a = t(5, 8);
        assert_eq!(a.int_mul(0), TorusElem::ZERO);
        assert_eq!(t(1, 2).int_mul(2), TorusElem::ZERO);
        assert_eq!(t(1, 4).int_mul(-1), t(3, 4));
    }

    #[test]
    fn rational_conversion() {
        assert_eq!(t(1, 2), TorusElem::HALF);
        assert_eq!(t(-1, 4), t(3, 4));
        assert_eq!(t(7, 1), TorusElem::ZERO);
        // 1/3 is not dyadic: rounding error below 2^-64
        let third = t(1, 3);
        let err = (third.raw() as f64 * 3.0 - TWO_POW_64).abs();
        assert!(err <= 3.0 * 0.5 + 1.0);
        assert!(TorusElem::from_rational(1, 0).is_err());
    }

    #[test]
    fn window_examples() {
        let w = WindowFn::arc(0.5).unwrap();
        assert_eq!(w.evaluate(&[t(1, 4)]).unwrap(), 1.0);
        assert_eq!(w.evaluate(&[t(3, 4)]).unwrap(), 0.0);
        assert_eq!(w.evaluate(&[TorusElem::HALF]).unwrap(), 0.0);
        let c = WindowFn::constant(0.3).unwrap();
        assert_eq!(c.evaluate(&[t(3, 4), t(1, 8)]).unwrap(), 0.3);
        assert!(matches!(
            w.evaluate(&[t(1, 4), t(1, 4)]),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn haar_mass_examples() {
        assert_eq!(WindowFn::arc(0.5).unwrap().haar_mass(), 0.5);
        assert_eq!(WindowFn::constant(0.3).unwrap().haar_mass(), 0.3);
        let delta = 0.125;
        let w = WindowFn::boxed(&[(0.0, delta), (0.0, 1.0)]).unwrap();
        assert_eq!(w.haar_mass(), delta);
        let full = WindowFn::boxed(&[(0.0, 1.0)]).unwrap();
        assert_eq!(full.haar_mass(), 1.0);
        assert!(full.evaluate(&[TorusElem::from_raw(u64::MAX)]).unwrap() == 1.0);
    }

    #[test]
    fn table_window() {
        // 2x2 grid on 𝕋^2
        let w = WindowFn::table(2, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(w.evaluate(&[t(1, 4), t(3, 4)]).unwrap(), 0.25);
        assert_eq!(w.evaluate(&[t(3, 4), t(1, 4)]).unwrap(), 0.5);
        assert_eq!(w.haar_mass(), 0.4375);
        assert!(WindowFn::table(2, 1, vec![0.0; 3]).is_err());
        assert!(WindowFn::table(1, 1, vec![0.0, 1.5]).is_err());
    }

    #[test]
    fn invalid_windows_rejected() {
        assert!(WindowFn::constant(-0.1).is_err());
        assert!(WindowFn::boxed(&[(0.6, 0.5)]).is_err());
        assert!(WindowFn::boxed(&[(0.0, 1.5)]).is_err());
    }

    #[test]
    fn window_json_format() {
        let w: WindowFn = serde_json::from_str(r#"{"box": [[0.0, 0.5]]}"#).unwrap();
        assert_eq!(w, WindowFn::arc(0.5).unwrap());
        let c: WindowFn = serde_json::from_str(r#"{"constant": 0.3}"#).unwrap();
        assert_eq!(c, WindowFn::Constant(0.3));
        let tbl: WindowFn =
            serde_json::from_str(r#"{"table": {"dim": 1, "bits": 1, "values": [1.0, 0.0]}}"#)
                .unwrap();
        assert_eq!(tbl.haar_mass(), 0.5);
        let back: WindowFn = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<WindowFn>(r#"{"constant": 2.0}"#).is_err());
    }

    #[test]
    fn distances_between_windows() {
        let f1 = WindowFn::arc(0.5).unwrap();
        let f2 = WindowFn::arc(0.625).unwrap();
        let (l1, l2) = window_distance(&f1, &f2).unwrap();
        assert_eq!(l1, 0.125);
        assert!((l2 - 0.125f64.sqrt()).abs() < 1e-15);
        let (l1, _) = window_distance(&WindowFn::Constant(0.0), &WindowFn::Constant(1.0)).unwrap();
        assert_eq!(l1, 1.0);
        let tbl = WindowFn::table(1, 2, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        let (l1, _) = window_distance(&tbl, &WindowFn::Constant(0.5)).unwrap();
        assert_eq!(l1, (0.5 + 0.0 + 0.5 + 0.25) / 4.0);
    }

    #[test]
    fn accept_matches_threshold() {
        assert!(accept(u64::MAX, 1.0));
        assert!(!accept(0, 0.0));
        assert!(accept((1 << 63) - 1, 0.5));
        assert!(!accept(1 << 63, 0.5));
    }

    proptest! {
        #[test]
        fn group_laws_are_exact(a: u64, b: u64, c: u64) {
            let (a, b, c) = (TorusElem::from_raw(a), TorusElem::from_raw(b), TorusElem::from_raw(c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!(a + (-a), TorusElem::ZERO);
            prop_assert_eq!(a - b, a + (-b));
        }

        #[test]
        fn dyadic_torsion_is_exact(p in any::<i64>(), s in 0u32..=62) {
            let q = 1u64 << s;
            let x = TorusElem::from_rational(p, q).unwrap();
            prop_assert_eq!(x.int_mul(q as i64), TorusElem::ZERO);
        }

        #[test]
        fn int_mul_distributes(a: u64, b: u64, c in any::<i64>(), e in any::<i64>()) {
            let (a, b) = (TorusElem::from_raw(a), TorusElem::from_raw(b));
            prop_assert_eq!((a + b).int_mul(c), a.int_mul(c) + b.int_mul(c));
            prop_assert_eq!(a.int_mul(c).int_mul(e), a.int_mul(c.wrapping_mul(e)));
        }

        #[test]
        fn box_window_is_indicator_with_exact_mass(
            a in 0.0f64..1.0, len in 0.0f64..1.0, b in 0.0f64..1.0, x: u64, y: u64
        ) {
            let hi = (a + len).min(1.0);
            let w = WindowFn::boxed(&[(a, hi), (0.0, b)]).unwrap();
            let v = w.evaluate(&[TorusElem::from_raw(x), TorusElem::from_raw(y)]).unwrap();
            prop_assert!(v == 0.0 || v == 1.0);
            prop_assert!((w.haar_mass() - (hi - a) * b).abs() < 2f64.powi(-60) + 1e-15);
        }
    }
}
