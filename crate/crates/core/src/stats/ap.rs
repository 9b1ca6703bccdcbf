use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypothesis::Histogram;
use crate::error::{Error, Result};
use crate::processes::{LatticeBox, Process};
use crate::rng::{stream, stream_rng, trial_seed};

/// Arithmetic-progression ensemble: common difference `r` uniform on
/// `[-max_step, max_step]^d \ {0}`, base uniform over positions keeping all
/// `length` terms in the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApConfig {
    pub length: u32,
    pub trials: u64,
    #[serde(default = "default_step")]
    pub max_step: u64,
}

fn default_step() -> u64 {
    4
}

impl ApConfig {
    pub fn new(length: u32, trials: u64) -> Self {
        ApConfig {
            length,
            trials,
            max_step: default_step(),
        }
    }
}

/// Base point and common difference of a random progression in `bx`.
fn draw_ap<R: Rng>(
    rng: &mut R,
    bx: &LatticeBox,
    length: u32,
    max_step: i64,
) -> (Vec<i64>, Vec<i64>) {
    let d = bx.dim();
    let r: Vec<i64> = loop {
        let r: Vec<i64> = (0..d)
            .map(|_| rng.random_range(-max_step..=max_step))
            .collect();
        if r.iter().any(|&x| x != 0) {
            break r;
        }
    };
    let span = length as i64 - 1;
    let a: Vec<i64> = (0..d)
        .map(|c| {
            let lo = bx.lower()[c] - (span * r[c]).min(0);
            let hi = bx.upper()[c] - (span * r[c]).max(0);
            rng.random_range(lo..hi)
        })
        .collect();
    (a, r)
}

/// Histogram over `0..=L` of `|Λ ∩ AP|` for independent realizations `Λ` and
/// independent random progressions in `bx`. Trial `i` draws both from
/// `trial_seed(base_seed, i)`.
pub fn ap_count_distribution(
    process: &Process,
    bx: &LatticeBox,
    cfg: &ApConfig,
    base_seed: u64,
) -> Result<Histogram> {
    let d = bx.dim();
    if cfg.length == 0 {
        return Err(Error::InvalidArgument(
            "progression length must be >= 1".into(),
        ));
    }
    if cfg.max_step == 0 {
        return Err(Error::InvalidArgument("max_step must be >= 1".into()));
    }
    process.validate(d)?;
    let need = (cfg.length as u64 - 1) * cfg.max_step + 1;
    if let Some(c) = (0..d).find(|&c| bx.extent(c) < need) {
        return Err(Error::InvalidArgument(format!(
            "box extent {} on axis {c} is too small for length {} with max_step {} (need {need})",
            bx.extent(c),
            cfg.length,
            cfg.max_step
        )));
    }
    let bins = cfg.length as usize + 1;
    let step = cfg.max_step as i64;
    const CHUNK: u64 = 1024;
    let chunks: Vec<Histogram> = (0..cfg.trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| -> Result<Histogram> {
            let mut h = Histogram::new(bins);
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(cfg.trials) {
                let seed = trial_seed(base_seed, i);
                let mut rng = stream_rng(seed, stream::AUX);
                let (mut t, r) = draw_ap(&mut rng, bx, cfg.length, step);
                let real = process.realize(d, seed)?;
                let mut count = real.contains(&t)? as usize;
                for _ in 1..cfg.length {
                    t.iter_mut().zip(&r).for_each(|(x, s)| *x += s);
                    count += real.contains(&t)? as usize;
                }
                h.add(count);
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    let mut total = Histogram::new(bins);
    for h in &chunks {
        total.merge(h)?;
    }
    Ok(total)
}
