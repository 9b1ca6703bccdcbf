//! Named example processes.
//!
//! | name | process |
//! |------|---------|
//! | `s1`, `s2`, `s3`, `s<k>` | preimage of `[0, δ)` under a Haar-random degree-k polynomial ℤ^d → 𝕋 (δ = 1/2) |
//! | `bernoulli:<p>` | i.i.d. membership with probability `p` |
//! | `periodic:<n>` | uniform random translate of `nℤ^d` |
//! | `cutproject-s1` | graph-form cut-and-project set with window `[0, 1/2)` |
//!
//! `s<k>` accepts options `:d=<d>` and `:delta=<δ>`, e.g. `s3:d=3:delta=0.125`.

use super::spec::{CutProjectSpec, PolynomialSpec, Probability, Process};
use crate::error::{Error, Result};
use crate::polymap::{DegreeFilter, Subgroup};
use crate::torus::WindowFn;

pub const DEFAULT_D: usize = 2;

/// `S_k^δ` in dimension `d`: `{t : P(t) ∈ [0, δ)}` for Haar-random `P` of degree `<= k`.
pub fn s_k(d: usize, k: u32, delta: f64) -> Result<Process> {
    Ok(Process::Polynomial(PolynomialSpec {
        d,
        m: 1,
        k,
        degree_filter: DegreeFilter::AtMostK,
        subgroup: Subgroup::Full,
        window: WindowFn::arc(delta)?,
        coeff_action: None,
        constant_spike: None,
    }))
}

/// `S_k^δ` whose constant coefficient is forced to 0 with probability `spike`.
/// Not invariant under translations; used as a negative control.
pub fn spiked_s_k(d: usize, k: u32, delta: f64, spike: f64) -> Result<Process> {
    let Process::Polynomial(mut spec) = s_k(d, k, delta)? else {
        unreachable!()
    };
    spec.constant_spike = Some(Probability::new(spike)?);
    Ok(Process::Polynomial(spec))
}

pub fn bernoulli(p: f64) -> Result<Process> {
    Ok(Process::Bernoulli {
        p: Probability::new(p)?,
    })
}

pub fn periodic(n: u64) -> Process {
    Process::Periodic {
        modulus: n,
        pattern: None,
    }
}

/// Cut-and-project set equal in law to `S_1` with window `[0, 1/2)`.
pub fn cutproject_s1(d: usize) -> Process {
    Process::CutProject(CutProjectSpec {
        d,
        slopes: None,
        window: vec![[0.0, 0.5]],
    })
}

/// `⋃_{k=1}^{K} S_k^{3^{-k}}` with independent components.
pub fn truncated_union(d: usize, terms: u32) -> Result<Process> {
    if terms == 0 {
        return Err(Error::InvalidArgument(
            "truncated union needs at least one term".into(),
        ));
    }
    let mut acc = s_k(d, 1, 1.0 / 3.0)?;
    for k in 2..=terms {
        acc = Process::Union {
            left: Box::new(acc),
            right: Box::new(s_k(d, k, 3f64.powi(-(k as i32)))?),
        };
    }
    Ok(acc)
}

/// Bound on the intensity of the part of the infinite union that the
/// `terms`-term truncation misses: `Σ_{k > K} 3^{-k} = 3^{-K} / 2`.
pub fn truncation_error_bound(terms: u32) -> f64 {
    0.5 * 3f64.powi(-(terms as i32))
}

/// Parses a preset name; `d` is the lattice dimension to use when the name
/// does not fix one.
pub fn parse(name: &str, d: usize) -> Result<Process> {
    let bad = |why: &str| Error::Config(format!("preset {name:?}: {why}"));
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or_default();
    match head {
        "bernoulli" => {
            let p: f64 = parts
                .next()
                .ok_or_else(|| bad("expected bernoulli:<p>"))?
                .parse()
                .map_err(|_| bad("p is not a number"))?;
            bernoulli(p).map_err(|e| bad(&e.to_string()))
        }
        "periodic" => {
            let n: u64 = parts
                .next()
                .ok_or_else(|| bad("expected periodic:<n>"))?
                .parse()
                .map_err(|_| bad("n is not a positive integer"))?;
            if n == 0 {
                return Err(bad("n must be positive"));
            }
            Ok(periodic(n))
        }
        "cutproject-s1" => {
            let mut dd = d;
            for opt in parts {
                dd = opt
                    .strip_prefix("d=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("unknown option"))?;
            }
            Ok(cutproject_s1(dd))
        }
        _ => {
            let k: u32 = head
                .strip_prefix('s')
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| bad("unknown preset"))?;
            let (mut dd, mut delta) = (d, 0.5);
            for opt in parts {
                if let Some(v) = opt.strip_prefix("d=") {
                    dd = v.parse().map_err(|_| bad("bad d"))?;
                } else if let Some(v) = opt.strip_prefix("delta=") {
                    delta = v.parse().map_err(|_| bad("bad delta"))?;
                } else {
                    return Err(bad("unknown option"));
                }
            }
            s_k(dd, k, delta).map_err(|e| bad(&e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!(parse("s1", 2).unwrap(), s_k(2, 1, 0.5).unwrap());
        assert_eq!(
            parse("s3:d=3:delta=0.125", 2).unwrap(),
            s_k(3, 3, 0.125).unwrap()
        );
        assert_eq!(
            parse("bernoulli:0.25", 2).unwrap(),
            bernoulli(0.25).unwrap()
        );
        assert_eq!(parse("periodic:4", 2).unwrap(), periodic(4));
        assert_eq!(parse("cutproject-s1", 3).unwrap(), cutproject_s1(3));
        for bad in [
            "bernoulli:-0.5",
            "bernoulli",
            "periodic:0",
            "s",
            "sx",
            "s1:q=2",
            "nope",
        ] {
            assert!(parse(bad, 2).is_err(), "{bad}");
        }
    }

    #[test]
    fn truncation_bound() {
        assert!(
            (truncation_error_bound(1) - (1.0 / 9.0 + 1.0 / 27.0 + 1.0 / 81.0 + 1.0 / 243.0)).abs()
                < 0.01
        );
        let tail: f64 = (4..60).map(|k| 3f64.powi(-k)).sum();
        assert!((truncation_error_bound(3) - tail).abs() < 1e-15);
        let u = truncated_union(2, 3).unwrap();
        assert_eq!(u.dim().unwrap(), Some(2));
    }
}
