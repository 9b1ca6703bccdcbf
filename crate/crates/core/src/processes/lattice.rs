//! Finite observation boxes and bit-grid point sets.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};

/// Half-open box `∏ [lower_i, upper_i)` in ℤ^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct LatticeBox {
    lower: Vec<i64>,
    upper: Vec<i64>,
    volume: u64,
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl TryFrom<BoxRepr> for LatticeBox {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        LatticeBox::new(r.lower, r.upper)
    }
}

impl From<LatticeBox> for BoxRepr {
    fn from(b: LatticeBox) -> Self {
        BoxRepr {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl LatticeBox {
    /// Box with the given corners. `upper_i == lower_i` gives an empty box.
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument(
                "box must have dimension >= 1".into(),
            ));
        }
        let mut volume: u64 = 1;
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if hi < lo {
                return Err(Error::InvalidArgument(format!(
                    "box axis {i}: upper {hi} below lower {lo}"
                )));
            }
            let w = (hi as i128 - lo as i128) as u128;
            volume = u64::try_from(w)
                .ok()
                .and_then(|w| volume.checked_mul(w))
                .ok_or_else(|| Error::Overflow("box volume exceeds 64 bits".into()))?;
        }
        Ok(LatticeBox {
            lower,
            upper,
            volume,
        })
    }

    /// `[lo, hi)^d`.
    pub fn cube(d: usize, lo: i64, hi: i64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    /// Box with `side` points per axis, centred on the origin (`[-side/2, side - side/2)`).
    pub fn centered(d: usize, side: u64) -> Result<Self> {
        let lo = -((side / 2) as i64);
        Self::cube(d, lo, lo + side as i64)
    }

    /// Smallest box containing every point of `points`.
    pub fn bounding(points: &[Vec<i64>]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("bounding box of no points".into()))?;
        let d = first.len();
        let mut lower = first.clone();
        let mut upper = first.clone();
        for p in points {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            for i in 0..d {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        for u in upper.iter_mut() {
            *u = u
                .checked_add(1)
                .ok_or_else(|| Error::Overflow("bounding box".into()))?;
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    pub fn extent(&self, axis: usize) -> u64 {
        (self.upper[axis] - self.lower[axis]) as u64
    }

    pub fn volume(&self) -> u64 {
        self.volume
    }

    pub fn is_empty(&self) -> bool {
        self.volume == 0
    }

    pub fn contains(&self, t: &[i64]) -> bool {
        t.len() == self.dim()
            && t.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x >= lo && x < hi)
    }

    /// Row-major index (last coordinate fastest).
    pub fn index_of(&self, t: &[i64]) -> Option<u64> {
        if !self.contains(t) {
            return None;
        }
        let mut idx: u64 = 0;
        for axis in 0..self.dim() {
            idx = idx * self.extent(axis) + (t[axis] - self.lower[axis]) as u64;
        }
        Some(idx)
    }

    pub fn point_at(&self, mut idx: u64) -> Vec<i64> {
        let d = self.dim();
        let mut t = vec![0i64; d];
        for axis in (0..d).rev() {
            let w = self.extent(axis);
            t[axis] = self.lower[axis] + (idx % w) as i64;
            idx /= w;
        }
        t
    }

    /// All `2^d` corner points (inclusive upper corners). Requires non-empty box.
    pub fn corners(&self) -> Vec<Vec<i64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            self.upper[i] - 1
                        } else {
                            self.lower[i]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Bounding box of `g(self)`.
    pub fn image_bounds(&self, g: &AffineMap) -> Result<LatticeBox> {
        if self.is_empty() {
            return Err(Error::InvalidArgument("image of an empty box".into()));
        }
        let imgs = self
            .corners()
            .iter()
            .map(|c| g.apply(c))
            .collect::<Result<Vec<_>>>()?;
        LatticeBox::bounding(&imgs)
    }

    /// Iterates every point in index order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.volume).map(move |i| self.point_at(i))
    }

    /// Shifts the box by `v`.
    pub fn translated(&self, v: &[i64]) -> Result<LatticeBox> {
        let add = |a: &[i64]| -> Result<Vec<i64>> {
            a.iter()
                .zip(v)
                .map(|(&x, &y)| {
                    x.checked_add(y)
                        .ok_or_else(|| Error::Overflow("box shift".into()))
                })
                .collect()
        };
        Self::new(add(&self.lower)?, add(&self.upper)?)
    }
}

/// A realized subset of a box, one bit per lattice point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    bx: LatticeBox,
    bits: Vec<u64>,
    count: u64,
}

const MAGIC: &[u8; 4] = b"ZDBG";

impl PointSet {
    pub fn empty(bx: LatticeBox) -> Self {
        let words = bx.volume().div_ceil(64) as usize;
        PointSet {
            bx,
            bits: vec![0; words],
            count: 0,
        }
    }

    pub fn full(bx: LatticeBox) -> Self {
        let mut s = Self::empty(bx);
        for i in 0..s.bx.volume() {
            s.set_index(i, true);
        }
        s
    }

    /// Builds from one flag byte per point in index order.
    pub fn from_flags(bx: LatticeBox, flags: &[u8]) -> Result<Self> {
        if flags.len() as u64 != bx.volume() {
            return Err(Error::DimensionMismatch {
                expected: bx.volume() as usize,
                found: flags.len(),
            });
        }
        let mut bits = vec![0u64; flags.len().div_ceil(64)];
        let mut count = 0;
        for (w, chunk) in bits.iter_mut().zip(flags.chunks(64)) {
            for (b, &f) in chunk.iter().enumerate() {
                if f != 0 {
                    *w |= 1 << b;
                    count += 1;
                }
            }
        }
        Ok(PointSet { bx, bits, count })
    }

    pub fn from_points(bx: LatticeBox, points: &[Vec<i64>]) -> Result<Self> {
        let mut s = Self::empty(bx);
        for p in points {
            s.insert(p)?;
        }
        Ok(s)
    }

    pub fn bounds(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn get_index(&self, i: u64) -> bool {
        self.bits[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    fn set_index(&mut self, i: u64, on: bool) {
        let w = &mut self.bits[(i / 64) as usize];
        let mask = 1u64 << (i % 64);
        let was = *w & mask != 0;
        if on && !was {
            *w |= mask;
            self.count += 1;
        } else if !on && was {
            *w &= !mask;
            self.count -= 1;
        }
    }

    fn locate(&self, t: &[i64]) -> Result<u64> {
        self.bx.index_of(t).ok_or_else(|| {
            Error::Coverage(format!(
                "point {t:?} outside box {:?}..{:?}",
                self.bx.lower, self.bx.upper
            ))
        })
    }

    pub fn contains(&self, t: &[i64]) -> Result<bool> {
        Ok(self.get_index(self.locate(t)?))
    }

    pub fn insert(&mut self, t: &[i64]) -> Result<()> {
        let i = self.locate(t)?;
        self.set_index(i, true);
        Ok(())
    }

    pub fn remove(&mut self, t: &[i64]) -> Result<()> {
        let i = self.locate(t)?;
        self.set_index(i, false);
        Ok(())
    }

    /// Points of the set in index order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.bx.volume())
            .filter(|&i| self.get_index(i))
            .map(|i| self.bx.point_at(i))
    }

    fn zip_with(&self, other: &PointSet, op: impl Fn(u64, u64) -> u64) -> Result<PointSet> {
        if self.bx != other.bx {
            return Err(Error::InvalidArgument(
                "point sets live on different boxes".into(),
            ));
        }
        let bits: Vec<u64> = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| op(a, b))
            .collect();
        let count = bits.iter().map(|w| w.count_ones() as u64).sum();
        Ok(PointSet {
            bx: self.bx.clone(),
            bits,
            count,
        })
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &PointSet) -> Result<PointSet> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn symmetric_difference(&self, other: &PointSet) -> Result<PointSet> {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn is_subset(&self, other: &PointSet) -> Result<bool> {
        Ok(self.zip_with(other, |a, b| a & !b)?.is_empty())
    }

    /// The image `g(self)` restricted to `target`: `t` is kept iff
    /// `g⁻¹(t)` is in `self`. Every preimage must lie in the source box.
    pub fn transform(&self, g: &AffineMap, target: LatticeBox) -> Result<PointSet> {
        if g.dim() != self.bx.dim() || target.dim() != self.bx.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.bx.dim(),
                found: g.dim(),
            });
        }
        if target.is_empty() {
            return Ok(PointSet::empty(target));
        }
        let inv = g.invert()?;
        // the preimage of a box is a parallelotope spanned by the corner images
        for c in target.corners() {
            let pre = inv.apply(&c)?;
            if !self.bx.contains(&pre) {
                return Err(Error::Coverage(format!(
                    "preimage {pre:?} of corner {c:?} lies outside the source box"
                )));
            }
        }
        let mut out = PointSet::empty(target);
        for i in 0..out.bx.volume() {
            let t = out.bx.point_at(i);
            if self.contains(&inv.apply(&t)?)? {
                out.set_index(i, true);
            }
        }
        Ok(out)
    }

    /// PBM (P4) raster of a 2-D slice through `axes = (x, y)`. The remaining
    /// coordinates are fixed at `fixed` (one value per axis, ignored on the
    /// slice axes). Columns run along `x` left to right; rows run along `y`
    /// from top (largest `y`) to bottom. `comments` become `#` header lines.
    pub fn write_pbm<W: Write>(
        &self,
        mut w: W,
        axes: (usize, usize),
        fixed: &[i64],
        comments: &[String],
    ) -> Result<()> {
        let d = self.bx.dim();
        let (ax, ay) = axes;
        if ax >= d || ay >= d || ax == ay || fixed.len() != d {
            return Err(Error::InvalidArgument(format!(
                "bad PBM slice axes {axes:?} / fixed point of length {} for d={d}",
                fixed.len()
            )));
        }
        let (width, height) = (self.bx.extent(ax), self.bx.extent(ay));
        let mut header = String::from("P4\n");
        for c in comments {
            for line in c.lines() {
                header.push_str("# ");
                header.push_str(line);
                header.push('\n');
            }
        }
        header.push_str(&format!("{width} {height}\n"));
        w.write_all(header.as_bytes())?;
        let mut pt = fixed.to_vec();
        let row_bytes = width.div_ceil(8) as usize;
        let mut row = vec![0u8; row_bytes];
        for r in 0..height {
            row.iter_mut().for_each(|b| *b = 0);
            pt[ay] = self.bx.upper[ay] - 1 - r as i64;
            for c in 0..width {
                pt[ax] = self.bx.lower[ax] + c as i64;
                if self.contains(&pt)? {
                    row[(c / 8) as usize] |= 0x80 >> (c % 8);
                }
            }
            w.write_all(&row)?;
        }
        Ok(())
    }

    /// 2-D PBM with default axes; the set must be two-dimensional.
    pub fn to_pbm(&self, comments: &[String]) -> Result<Vec<u8>> {
        if self.bx.dim() != 2 {
            return Err(Error::InvalidArgument(
                "to_pbm needs a 2-D set; use write_pbm for slices".into(),
            ));
        }
        let mut buf = Vec::new();
        self.write_pbm(&mut buf, (0, 1), &[0, 0], comments)?;
        Ok(buf)
    }

    /// CSV with header `t1,...,td` and one row per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.bx.dim()).map(|i| format!("t{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(i64::to_string).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Raw bit-grid: a 16-byte header (`b"ZDBG"`, `d` as u32 LE, byte length
    /// of the bounds block as u64 LE), the bounds block (`lower` then `upper`,
    /// i64 LE), then the bits packed LSB-first in index order.
    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.bx.dim() as u32;
        w.write_all(MAGIC)?;
        w.write_all(&d.to_le_bytes())?;
        w.write_all(&(16 * d as u64).to_le_bytes())?;
        for &x in self.bx.lower.iter().chain(&self.bx.upper) {
            w.write_all(&x.to_le_bytes())?;
        }
        let nbytes = self.bx.volume().div_ceil(8) as usize;
        let bytes: Vec<u8> = self
            .bits
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(nbytes)
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<PointSet> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(Error::InvalidArgument("not a raw bit-grid file".into()));
        }
        let d = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
        let blen = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
        if d == 0 || d > 64 || blen != 16 * d as u64 {
            return Err(Error::InvalidArgument("corrupt raw bit-grid header".into()));
        }
        let mut bounds = vec![0u8; blen as usize];
        r.read_exact(&mut bounds)?;
        let vals: Vec<i64> = bounds
            .chunks(8)
            .map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let bx = LatticeBox::new(vals[..d].to_vec(), vals[d..].to_vec())?;
        let mut bytes = vec![0u8; bx.volume().div_ceil(8) as usize];
        r.read_exact(&mut bytes)?;
        let mut bits = vec![0u64; bx.volume().div_ceil(64) as usize];
        for (i, &b) in bytes.iter().enumerate() {
            bits[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        let count = bits.iter().map(|w| w.count_ones() as u64).sum();
        Ok(PointSet { bx, bits, count })
    }
}
