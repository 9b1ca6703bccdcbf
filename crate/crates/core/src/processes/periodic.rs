//! Orbits of periodic sets under ASL_d(ℤ).
//!
//! A subset of ℤ^d that is periodic mod `n` is a subset of (ℤ/n)^d; ASL_d(ℤ)
//! acts on those through ASL_d(ℤ/n), so every orbit is finite. The periodic
//! process picks a uniform element of the orbit.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

const MAX_RESIDUES: u64 = 1 << 20;
const MAX_ORBIT_STORAGE: usize = 1 << 24;

/// The orbit of a periodic pattern, as sorted residue-index lists.
#[derive(Debug)]
pub struct PeriodicOrbit {
    modulus: u64,
    d: usize,
    elements: Vec<Vec<usize>>,
}

type Key = (u64, usize, Vec<usize>);

impl PeriodicOrbit {
    /// Orbit of `pattern` (residue vectors mod `modulus`), cached.
    pub fn get(modulus: u64, d: usize, pattern: &[Vec<i64>]) -> Result<Arc<PeriodicOrbit>> {
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<PeriodicOrbit>>>> = OnceLock::new();
        if modulus
            .checked_pow(d as u32)
            .is_none_or(|r| r > MAX_RESIDUES)
        {
            return Err(Error::InvalidArgument(format!(
                "(ℤ/{modulus})^{d} is too large"
            )));
        }
        let mut start: Vec<usize> = pattern
            .iter()
            .map(|r| super::spec::residue_index(modulus, r))
            .collect();
        start.sort_unstable();
        start.dedup();
        let key = (modulus, d, start.clone());
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        let orbit = Arc::new(Self::compute(modulus, d, start)?);
        cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, orbit.clone());
        Ok(orbit)
    }

    fn compute(modulus: u64, d: usize, start: Vec<usize>) -> Result<PeriodicOrbit> {
        let n = modulus as usize;
        let decode = |mut idx: usize| -> Vec<usize> {
            let mut t = vec![0; d];
            for c in (0..d).rev() {
                t[c] = idx % n;
                idx /= n;
            }
            t
        };
        let encode = |t: &[usize]| t.iter().fold(0usize, |acc, &x| acc * n + x);

        // generators of ASL_d(ℤ/n): E_ij(1) and translations by e_i
        let mut moves: Vec<Box<dyn Fn(&mut [usize])>> = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    moves.push(Box::new(move |t: &mut [usize]| t[i] = (t[i] + t[j]) % n));
                }
            }
            moves.push(Box::new(move |t: &mut [usize]| t[i] = (t[i] + 1) % n));
        }

        let size = start.len();
        let mut seen: HashSet<Vec<usize>> = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        let mut elements = vec![start];
        while let Some(cur) = queue.pop_front() {
            for mv in &moves {
                let mut next: Vec<usize> = cur
                    .iter()
                    .map(|&idx| {
                        let mut t = decode(idx);
                        mv(&mut t);
                        encode(&t)
                    })
                    .collect();
                next.sort_unstable();
                if seen.insert(next.clone()) {
                    if (elements.len() + 1) * size > MAX_ORBIT_STORAGE {
                        return Err(Error::InvalidArgument("periodic orbit too large".into()));
                    }
                    elements.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        elements.sort();
        Ok(PeriodicOrbit {
            modulus,
            d,
            elements,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    /// Membership table over all `n^d` residues for orbit element `i`.
    pub fn member_mask(&self, i: usize) -> Vec<bool> {
        let mut mask = vec![false; (self.modulus as usize).pow(self.d as u32)];
        for &r in &self.elements[i] {
            mask[r] = true;
        }
        mask
    }

    /// Density of every orbit element, as a reduced fraction.
    pub fn density(&self) -> (u64, u64) {
        let num = self.elements.first().map_or(0, Vec::len) as u64;
        let den = self.modulus.pow(self.d as u32);
        let g = gcd(num, den).max(1);
        (num / g, den / g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::lattice::LatticeBox;
    use crate::processes::spec::Process;

    #[test]
    fn translates_of_sublattice() {
        let orbit = PeriodicOrbit::get(3, 2, &[vec![0, 0]]).unwrap();
        assert_eq!(orbit.len(), 9);
        assert_eq!(orbit.density(), (1, 9));
    }

    #[test]
    fn orbit_is_closed_under_translation_classes() {
        // translating by any residue permutes the orbit: the uniform law on it
        // is exactly invariant
        let orbit = PeriodicOrbit::get(4, 2, &[vec![0, 0], vec![1, 2], vec![2, 0]]).unwrap();
        let elems: HashSet<Vec<usize>> = orbit.elements().iter().cloned().collect();
        let n = 4usize;
        for sx in 0..n {
            for sy in 0..n {
                let image: HashSet<Vec<usize>> = orbit
                    .elements()
                    .iter()
                    .map(|e| {
                        let mut v: Vec<usize> = e
                            .iter()
                            .map(|&idx| {
                                let (x, y) = (idx / n, idx % n);
                                ((x + sx) % n) * n + (y + sy) % n
                            })
                            .collect();
                        v.sort_unstable();
                        v
                    })
                    .collect();
                assert_eq!(image, elems);
            }
        }
    }

    #[test]
    fn sampled_set_is_periodic() {
        let p = Process::Periodic {
            modulus: 3,
            pattern: Some(vec![vec![0, 0], vec![1, 0]]),
        };
        let bx = LatticeBox::cube(2, 0, 12).unwrap();
        let s = p.sample(&bx, 5).unwrap();
        for t in LatticeBox::cube(2, 0, 9).unwrap().points() {
            let shifted = vec![t[0] + 3, t[1]];
            assert_eq!(s.contains(&t).unwrap(), s.contains(&shifted).unwrap());
        }
        assert_eq!(s.len(), 144 * 2 / 9);
    }

    #[test]
    fn every_orbit_element_is_reached() {
        let p = Process::Periodic {
            modulus: 2,
            pattern: None,
        };
        let bx = LatticeBox::cube(2, 0, 2).unwrap();
        let mut seen = HashSet::new();
        for seed in 0..200 {
            let s = p.sample(&bx, seed).unwrap();
            seen.insert(s.iter().collect::<Vec<_>>());
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn too_large_is_rejected() {
        assert!(PeriodicOrbit::get(1 << 11, 2, &[vec![0, 0]]).is_err());
    }
}
