//! Polynomial maps ℤ^d → 𝕋^m of total degree at most k.
//!
//! Coefficients are stored densely, one [`TorusVec`] per monomial, in graded
//! order: by total degree ascending, then lexicographically descending in the
//! exponent tuple, so for `d = 2, k = 2` the order is
//! `1, t1, t2, t1², t1·t2, t2²`.
//!
//! ASL_d(ℤ) acts in two commuting ways: by precomposition `P ↦ P ∘ g`, which
//! is an integer matrix on the coefficient vector ([`SubstitutionMatrix`]),
//! and by an integer matrix on the target torus ([`PolyMap::coeff_action`]).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::affine::{determinant, AffineMap};
use crate::error::{overflow, Error, Result};
use crate::torus::{TorusElem, TorusVec};

/// Exponent tuple of a monomial `t_1^{e_1} ⋯ t_d^{e_d}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `t^α`, or `None` on overflow.
    pub fn monomial(&self, t: &[i64]) -> Option<i64> {
        let mut acc: i64 = 1;
        for (&e, &x) in self.0.iter().zip(t) {
            for _ in 0..e {
                acc = acc.checked_mul(x)?;
            }
        }
        Some(acc)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidArgument(format!("bad multi-index {s:?}")))?;
        inner
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad multi-index {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(MultiIndex)
    }
}

/// All multi-indices of `d` variables with degree at most `k`, in graded order.
pub fn monomial_basis(d: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=k {
        let mut cur = vec![0u32; d];
        push_degree(d, deg, 0, &mut cur, &mut out);
    }
    out
}

fn push_degree(
    d: usize,
    remaining: u32,
    pos: usize,
    cur: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) {
    if d == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == d - 1 {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        push_degree(d, remaining - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// `binomial(k + d, d)`, the number of monomials of degree at most `k`.
pub fn basis_len(d: usize, k: u32) -> usize {
    let mut c: u128 = 1;
    for i in 1..=d as u128 {
        c = c * (k as u128 + i) / i;
    }
    c as usize
}

/// Mixed-radix key of an exponent tuple with entries `<= k`.
struct IndexTable {
    radix: usize,
    slots: Vec<usize>,
}

impl IndexTable {
    fn new(basis: &[MultiIndex], d: usize, k: u32) -> Self {
        let radix = k as usize + 1;
        let mut slots = vec![usize::MAX; radix.pow(d as u32)];
        let table = IndexTable {
            radix,
            slots: Vec::new(),
        };
        for (i, a) in basis.iter().enumerate() {
            slots[table.key(&a.0)] = i;
        }
        IndexTable { radix, slots }
    }

    fn key(&self, e: &[u32]) -> usize {
        e.iter().fold(0, |acc, &x| acc * self.radix + x as usize)
    }

    fn get(&self, e: &[u32]) -> usize {
        self.slots[self.key(e)]
    }
}

/// Which coefficients a Haar draw randomizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeFilter {
    /// Every monomial of degree at most k.
    AtMostK,
    /// Only the monomials of degree exactly k; lower coefficients are zero.
    ExactlyTopDegreePlusLowerZero,
    /// An explicit set of monomials.
    Custom(Vec<Vec<u32>>),
}

/// Closed subgroup of 𝕋^m in which coefficients are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subgroup {
    Full,
    /// Coordinate subtorus: listed coordinates are uniform, the rest zero.
    Coordinates(Vec<usize>),
    /// Finite subgroup of multiples of `2^-bits` in every coordinate.
    Dyadic {
        bits: u32,
    },
}

/// Monomial basis plus, for each monomial after the first, a parent monomial
/// and a variable with `α = parent + e_var`.
#[derive(Debug, PartialEq, Eq, Hash)]
struct Plan {
    basis: Vec<MultiIndex>,
    parent: Vec<(usize, usize)>,
}

fn plan(d: usize, k: u32) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((d, k))
        .or_insert_with(|| {
            let basis = monomial_basis(d, k);
            let parent = basis
                .iter()
                .map(|a| {
                    let Some(var) = a.0.iter().position(|&e| e > 0) else {
                        return (0, 0);
                    };
                    let mut p = a.0.clone();
                    p[var] -= 1;
                    let idx = basis
                        .iter()
                        .position(|b| b.0 == p)
                        .expect("basis is down-closed");
                    (idx, var)
                })
                .collect();
            Arc::new(Plan { basis, parent })
        })
        .clone()
}

/// A polynomial map ℤ^d → 𝕋^m of degree at most k.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyMap {
    d: usize,
    m: usize,
    k: u32,
    /// `basis_len(d, k) * m` entries, monomial-major.
    coeffs: Vec<TorusElem>,
    plan: Arc<Plan>,
}

impl fmt::Debug for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolyMap")
            .field("d", &self.d)
            .field("m", &self.m)
            .field("k", &self.k)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PolyMap {
    pub fn zero(d: usize, m: usize, k: u32) -> Self {
        PolyMap {
            d,
            m,
            k,
            coeffs: vec![TorusElem::ZERO; basis_len(d, k) * m],
            plan: plan(d, k),
        }
    }

    /// Builds from coefficients listed in basis order.
    pub fn from_coeffs(d: usize, m: usize, k: u32, coeffs: Vec<TorusVec>) -> Result<Self> {
        let n = basis_len(d, k);
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: coeffs.len(),
            });
        }
        let mut flat = Vec::with_capacity(n * m);
        for c in coeffs {
            if c.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: c.dim(),
                });
            }
            flat.extend(c.0);
        }
        Ok(PolyMap {
            d,
            m,
            k,
            coeffs: flat,
            plan: plan(d, k),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.plan.basis
    }

    pub fn num_coeffs(&self) -> usize {
        self.coeffs.len() / self.m.max(1)
    }

    /// Coefficient of the `i`-th basis monomial.
    pub fn coeff(&self, i: usize) -> &[TorusElem] {
        &self.coeffs[i * self.m..(i + 1) * self.m]
    }

    pub fn coeff_mut(&mut self, i: usize) -> &mut [TorusElem] {
        &mut self.coeffs[i * self.m..(i + 1) * self.m]
    }

    /// Coefficient of the monomial with exponents `e`.
    pub fn coeff_of(&self, e: &[u32]) -> Option<&[TorusElem]> {
        let i = self.basis().iter().position(|a| a.0 == e)?;
        Some(self.coeff(i))
    }

    pub fn coeff_vecs(&self) -> Vec<TorusVec> {
        self.coeffs
            .chunks(self.m.max(1))
            .map(|c| TorusVec(c.to_vec()))
            .collect()
    }

    /// `P(t) = Σ_α t^α τ_α`.
    pub fn evaluate(&self, t: &[i64]) -> Result<TorusVec> {
        let mut out = vec![TorusElem::ZERO; self.m];
        self.evaluate_into(t, &mut out)?;
        Ok(TorusVec(out))
    }

    pub(crate) fn evaluate_into(&self, t: &[i64], out: &mut [TorusElem]) -> Result<()> {
        if t.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: t.len(),
            });
        }
        let n = self.plan.basis.len();
        let m = self.m;
        let mut monos = [0i64; 36];
        let mut heap;
        let monos: &mut [i64] = if n <= monos.len() {
            &mut monos[..n]
        } else {
            heap = vec![0i64; n];
            &mut heap
        };
        monos[0] = 1;
        out.copy_from_slice(&self.coeffs[..m]);
        for i in 1..n {
            let (parent, var) = self.plan.parent[i];
            let mono = monos[parent]
                .checked_mul(t[var])
                .ok_or_else(|| overflow(format!("monomial t^{} at t={t:?}", self.plan.basis[i])))?;
            monos[i] = mono;
            for (o, &c) in out.iter_mut().zip(&self.coeffs[i * m..(i + 1) * m]) {
                *o += c.int_mul(mono);
            }
        }
        Ok(())
    }

    /// Values along the row `start + j·e_d`, `j = 0..len`, written to `out`
    /// (length `len * m`, point-major). Uses forward differences in the last
    /// coordinate, which is exact in wrapping arithmetic.
    pub fn evaluate_row(&self, start: &[i64], len: usize, out: &mut [TorusElem]) -> Result<()> {
        let (m, k) = (self.m, self.k as usize);
        debug_assert_eq!(out.len(), len * m);
        if len == 0 {
            return Ok(());
        }
        if self.d == 0 {
            return Err(Error::InvalidArgument("row evaluation needs d >= 1".into()));
        }
        check_row_safe(self.k, start, len)?;
        let last = self.d - 1;
        let mut point = start.to_vec();
        // diff[j] holds Δ^j P at the current position
        let mut diff = vec![TorusElem::ZERO; (k + 1) * m];
        for j in 0..=k {
            point[last] = start[last] + j as i64;
            self.evaluate_into(&point, &mut diff[j * m..(j + 1) * m])?;
        }
        for order in 1..=k {
            for j in (order..=k).rev() {
                for c in 0..m {
                    let prev = diff[(j - 1) * m + c];
                    diff[j * m + c] -= prev;
                }
            }
        }
        for step in 0..len {
            out[step * m..(step + 1) * m].copy_from_slice(&diff[..m]);
            for j in 0..k {
                for c in 0..m {
                    let next = diff[(j + 1) * m + c];
                    diff[j * m + c] += next;
                }
            }
        }
        Ok(())
    }

    /// `P ∘ g`.
    pub fn precompose(&self, g: &AffineMap) -> Result<PolyMap> {
        if g.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: g.dim(),
            });
        }
        substitution_matrix(g, self.k)?.apply(self)
    }

    /// Replaces every coefficient `τ` by `M τ` for an integer matrix `M` with
    /// determinant ±1.
    pub fn coeff_action(&self, matrix: &[Vec<i64>]) -> Result<PolyMap> {
        check_coeff_matrix(matrix, self.m)?;
        let mut out = self.clone();
        for (dst, src) in out
            .coeffs
            .chunks_mut(self.m)
            .zip(self.coeffs.chunks(self.m))
        {
            for (row, o) in matrix.iter().zip(dst.iter_mut()) {
                *o = row
                    .iter()
                    .zip(src)
                    .fold(TorusElem::ZERO, |acc, (&c, &x)| acc + x.int_mul(c));
            }
        }
        Ok(out)
    }

    /// Draws coefficients independently and uniformly from `subgroup` on the
    /// monomials selected by `filter`; all other coefficients are zero.
    pub fn haar_sample<R: Rng + ?Sized>(
        d: usize,
        m: usize,
        k: u32,
        filter: &DegreeFilter,
        subgroup: &Subgroup,
        rng: &mut R,
    ) -> Result<PolyMap> {
        let mut p = PolyMap::zero(d, m, k);
        if matches!((filter, subgroup), (DegreeFilter::AtMostK, Subgroup::Full)) {
            p.coeffs
                .iter_mut()
                .for_each(|c| *c = TorusElem::from_raw(rng.random()));
            return Ok(p);
        }
        let basis = &p.plan.basis;
        let selected: Vec<bool> = match filter {
            DegreeFilter::AtMostK => vec![true; basis.len()],
            DegreeFilter::ExactlyTopDegreePlusLowerZero => {
                basis.iter().map(|a| a.degree() == k).collect()
            }
            DegreeFilter::Custom(set) => {
                for e in set {
                    if e.len() != d || e.iter().sum::<u32>() > k {
                        return Err(Error::InvalidArgument(format!(
                            "custom index {e:?} is not a monomial of degree <= {k} in {d} variables"
                        )));
                    }
                }
                basis.iter().map(|a| set.contains(&a.0)).collect()
            }
        };
        let coord_mask: Vec<bool> = match subgroup {
            Subgroup::Coordinates(cs) => {
                if let Some(&bad) = cs.iter().find(|&&c| c >= m) {
                    return Err(Error::InvalidArgument(format!(
                        "subtorus coordinate {bad} out of range for m={m}"
                    )));
                }
                (0..m).map(|c| cs.contains(&c)).collect()
            }
            _ => vec![true; m],
        };
        let shift = match subgroup {
            Subgroup::Dyadic { bits } if *bits > 64 => {
                return Err(Error::InvalidArgument(format!(
                    "dyadic subgroup bits {bits} > 64"
                )))
            }
            Subgroup::Dyadic { bits } => 64 - bits,
            _ => 0,
        };
        for (i, &sel) in selected.iter().enumerate() {
            if !sel {
                continue;
            }
            for (c, &on) in coord_mask.iter().enumerate() {
                if on {
                    let raw: u64 = rng.random();
                    let raw = if shift >= 64 {
                        0
                    } else {
                        (raw >> shift) << shift
                    };
                    p.coeffs[i * m + c] = TorusElem::from_raw(raw);
                }
            }
        }
        Ok(p)
    }
}

fn check_coeff_matrix(matrix: &[Vec<i64>], m: usize) -> Result<()> {
    if matrix.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: matrix.len(),
        });
    }
    if let Some(bad) = matrix.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: bad.len(),
        });
    }
    let wide: Vec<i128> = matrix.iter().flatten().map(|&x| x as i128).collect();
    let det = determinant(m, &wide)?;
    if det.abs() != 1 {
        return Err(Error::NotUnimodular(det));
    }
    Ok(())
}

/// Largest `|coordinate|` for which every monomial of degree `<= k` fits in
/// 64 bits.
pub fn safe_radius(k: u32) -> i64 {
    if k <= 1 {
        return i64::MAX;
    }
    let mut r = (i64::MAX as f64).powf(1.0 / k as f64) as i64 + 2;
    while (r as i128)
        .checked_pow(k)
        .is_none_or(|v| v > i64::MAX as i128)
    {
        r -= 1;
    }
    r
}

fn check_row_safe(k: u32, start: &[i64], len: usize) -> Result<()> {
    let radius = safe_radius(k);
    let last = *start.last().unwrap_or(&0);
    let end = last
        .checked_add(len as i64 + k as i64)
        .ok_or_else(|| overflow("row end"))?;
    let max = start
        .iter()
        .map(|x| x.unsigned_abs())
        .chain([end.unsigned_abs()])
        .max()
        .unwrap_or(0);
    if max > radius as u64 {
        return Err(overflow(format!(
            "coordinate {max} exceeds the safe radius {radius} for degree {k}"
        )));
    }
    Ok(())
}

/// Integer matrix `C` with `coeffs(P ∘ g) = C · coeffs(P)`; entry `(β, α)` is
/// the coefficient of `t^β` in `(A t + v)^α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    dim: usize,
    entries: Vec<i128>,
}

impl SubstitutionMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        SubstitutionMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, target: usize, source: usize) -> i128 {
        self.entries[target * self.dim + source]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    /// Matrix product `self · other`, checked.
    pub fn mul(&self, other: &SubstitutionMatrix) -> Result<SubstitutionMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let n = self.dim;
        let mut entries = vec![0i128; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if b == 0 {
                        continue;
                    }
                    let prod = a
                        .checked_mul(b)
                        .ok_or_else(|| overflow("substitution product"))?;
                    let slot = &mut entries[i * n + j];
                    *slot = slot
                        .checked_add(prod)
                        .ok_or_else(|| overflow("substitution product"))?;
                }
            }
        }
        Ok(SubstitutionMatrix { dim: n, entries })
    }

    /// Coefficients of the transformed polynomial.
    pub fn apply(&self, p: &PolyMap) -> Result<PolyMap> {
        if p.num_coeffs() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.num_coeffs(),
            });
        }
        let m = p.m;
        let mut out = PolyMap::zero(p.d, m, p.k);
        for beta in 0..self.dim {
            for alpha in 0..self.dim {
                let c = self.get(beta, alpha);
                if c == 0 {
                    continue;
                }
                for (o, &x) in out.coeffs[beta * m..(beta + 1) * m]
                    .iter_mut()
                    .zip(p.coeff(alpha))
                {
                    *o += x.int_mul_wide(c);
                }
            }
        }
        Ok(out)
    }
}

/// Dense integer polynomial in the graded basis.
fn poly_mul(a: &[i128], b: &[i128], basis: &[MultiIndex], table: &IndexTable) -> Result<Vec<i128>> {
    let mut out = vec![0i128; a.len()];
    let mut e = vec![0u32; basis.first().map_or(0, |x| x.0.len())];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            if y == 0 {
                continue;
            }
            for (slot, (p, q)) in e.iter_mut().zip(basis[i].0.iter().zip(&basis[j].0)) {
                *slot = p + q;
            }
            let idx = table.get(&e);
            if idx == usize::MAX {
                return Err(Error::InvalidArgument(
                    "product exceeds degree bound".into(),
                ));
            }
            let prod = x
                .checked_mul(y)
                .ok_or_else(|| overflow("substitution expansion"))?;
            out[idx] = out[idx]
                .checked_add(prod)
                .ok_or_else(|| overflow("substitution expansion"))?;
        }
    }
    Ok(out)
}

/// The substitution matrix of `g` on polynomials of degree at most `k`.
pub fn substitution_matrix(g: &AffineMap, k: u32) -> Result<SubstitutionMatrix> {
    let d = g.dim();
    let basis = monomial_basis(d, k);
    let n = basis.len();
    let table = IndexTable::new(&basis, d, k);
    let a = g.linear_part();
    let v = g.translation_part();

    let diag = |msg: &str| {
        overflow(format!(
            "{msg} (d={d}, k={k}, max |A|={}, max |v|={})",
            a.max_abs(),
            v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
        ))
    };

    // powers[j][e] = (Σ_i A_ji t_i + v_j)^e
    let mut one = vec![0i128; n];
    one[0] = 1;
    let mut powers: Vec<Vec<Vec<i128>>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut lin = vec![0i128; n];
        lin[0] = v[j] as i128;
        if k >= 1 {
            for i in 0..d {
                let mut e = vec![0u32; d];
                e[i] = 1;
                lin[table.get(&e)] = a.get(j, i) as i128;
            }
        }
        let mut pw = vec![one.clone()];
        for e in 1..=k as usize {
            let next = poly_mul(&pw[e - 1], &lin, &basis, &table)
                .map_err(|_| diag("overflow while expanding powers"))?;
            pw.push(next);
        }
        powers.push(pw);
    }

    let mut entries = vec![0i128; n * n];
    for (col, alpha) in basis.iter().enumerate() {
        let mut acc = one.clone();
        for (j, &e) in alpha.0.iter().enumerate() {
            if e > 0 {
                acc = poly_mul(&acc, &powers[j][e as usize], &basis, &table)
                    .map_err(|_| diag("overflow while expanding monomials"))?;
            }
        }
        for (row, &c) in acc.iter().enumerate() {
            entries[row * n + col] = c;
        }
    }
    Ok(SubstitutionMatrix { dim: n, entries })
}

#[derive(Serialize, Deserialize)]
struct PolyHeader {
    d: usize,
    m: usize,
    k: u32,
}

struct OrderedCoeffs<'a>(&'a PolyMap);

impl Serialize for OrderedCoeffs<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let p = self.0;
        let mut map = s.serialize_map(Some(p.num_coeffs()))?;
        for (i, a) in p.basis().iter().enumerate() {
            map.serialize_entry(&a.to_string(), p.coeff(i))?;
        }
        map.end()
    }
}

impl Serialize for PolyMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("d", &self.d)?;
        map.serialize_entry("m", &self.m)?;
        map.serialize_entry("k", &self.k)?;
        map.serialize_entry("coeffs", &OrderedCoeffs(self))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for PolyMap {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            #[serde(flatten)]
            header: PolyHeader,
            coeffs: BTreeMap<String, Vec<TorusElem>>,
        }
        let r = Repr::deserialize(de)?;
        let PolyHeader { d, m, k } = r.header;
        if basis_len(d, k) > 4096 || m > 64 {
            return Err(D::Error::custom(format!(
                "polynomial too large (d={d}, k={k}, m={m})"
            )));
        }
        let mut p = PolyMap::zero(d, m, k);
        for (key, val) in r.coeffs {
            let idx: MultiIndex = key.parse().map_err(D::Error::custom)?;
            let pos = p.basis().iter().position(|a| *a == idx).ok_or_else(|| {
                D::Error::custom(format!("monomial {key} not in degree-{k} basis"))
            })?;
            if val.len() != m {
                return Err(D::Error::custom(format!(
                    "coefficient {key} has {} entries, expected {m}",
                    val.len()
                )));
            }
            p.coeff_mut(pos).copy_from_slice(&val);
        }
        Ok(p)
    }
}
