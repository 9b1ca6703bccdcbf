use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{
    self, hex, parse_box, parse_map, parse_spec, parse_window, MapSource, Meta, RunConfig,
};
use super::{Command, Common, CoupleCmd, StatsCmd};
use crate::coupling::{conditional_symdiff, run_coupling, window_gap, CouplingMode};
use crate::error::{Error, Result};
use crate::processes::{presets, LatticeBox, PointSet, Process};
use crate::rng::{derive_seed, stream, stream_rng, trial_seed};
use crate::stats::{
    ap_count_distribution, binomial_pmf, chisq_goodness_of_fit, gowers_norm, intensity,
    invariance_test, k_point_marginal, two_sample_chisq, ApConfig, GowersConfig, GowersMode,
    MarginalQuery, RealGrid,
};

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// A statistical null hypothesis was rejected.
    Reject,
}

pub(super) fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Sample {
            common,
            pbm,
            raw,
            axes,
        } => sample(&common, pbm, raw, axes),
        Command::FigurePanel {
            specs,
            boxes,
            seed,
            out,
            gap,
            no_shuffle,
        } => figure_panel(&specs, &boxes, seed, &out, gap, !no_shuffle),
        Command::Stats(s) => stats(s),
        Command::Couple(CoupleCmd::Run {
            common,
            f1,
            f2,
            seeds,
            mode,
            exact_bits,
            check,
        }) => couple(
            &common,
            f1,
            f2,
            seeds,
            mode.map(Into::into),
            exact_bits,
            check,
        ),
    }
}

fn env_seed() -> Result<u64> {
    RunConfig::default().resolve_seed()
}

/// Loads the config file (if any) and applies command-line overrides.
fn prepare(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = common.d {
        cfg.d = Some(d);
    }
    if let Some(b) = &common.bx {
        cfg.bx = Some(parse_box(b)?);
    }
    if let Some(s) = &common.spec {
        let path = Path::new(s);
        if (s.ends_with(".json") || s.ends_with(".toml")) && path.exists() {
            let d = cfg
                .d
                .or(cfg.bx.as_ref().map(LatticeBox::dim))
                .unwrap_or(presets::DEFAULT_D);
            cfg.process = Some(parse_spec(s, d)?);
            cfg.preset = None;
        } else {
            cfg.preset = Some(s.clone());
            cfg.process = None;
        }
    }
    cfg.seed = Some(match common.seed {
        Some(s) => s,
        None => cfg.resolve_seed()?,
    });
    if let Some(p) = &common.out {
        cfg.output.report = Some(p.clone());
    }
    if let Some(p) = &common.csv {
        cfg.output.csv = Some(p.clone());
    }
    Ok(cfg)
}

fn default_box(cfg: &mut RunConfig, d: usize, side: i64) -> Result<LatticeBox> {
    let bx = match &cfg.bx {
        Some(b) => b.clone(),
        None => LatticeBox::cube(d, 0, side)?,
    };
    cfg.bx = Some(bx.clone());
    Ok(bx)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_csv_table(path: &Path, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = create(path)?;
    for c in meta.comment_lines() {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `{schema, meta, report}` to the report path or stdout.
fn emit<T: Serialize>(report_path: Option<&PathBuf>, meta: &Meta, report: &T) -> Result<()> {
    let doc = json!({ "schema": 1, "meta": meta, "report": report });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match report_path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn sample(
    common: &Common,
    pbm: Option<PathBuf>,
    raw: Option<PathBuf>,
    axes: Option<Vec<usize>>,
) -> Result<Outcome> {
    let mut cfg = prepare(common)?;
    if pbm.is_some() {
        cfg.output.pbm = pbm;
    }
    if raw.is_some() {
        cfg.output.raw = raw;
    }
    if let Some(a) = axes {
        cfg.output.axes = Some([a[0], a[1]]);
    }
    let (process, d) = cfg.resolve_process()?;
    let bx = default_box(&mut cfg, d, 80)?;
    let seed = cfg.seed.unwrap_or_default();
    let meta = Meta::new(&cfg, seed);
    let set = process.sample(&bx, seed)?;

    if let Some(path) = &cfg.output.pbm {
        let [ax, ay] = cfg.output.axes.unwrap_or([0, 1]);
        if d < 2 {
            return Err(Error::Config("a PBM raster needs d >= 2".into()));
        }
        let mut w = create(path)?;
        set.write_pbm(&mut w, (ax, ay), bx.lower(), &meta.comment_lines())?;
        w.flush()?;
    }
    if let Some(path) = &cfg.output.csv {
        let mut w = create(path)?;
        for c in meta.comment_lines() {
            writeln!(w, "# {c}")?;
        }
        set.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &cfg.output.raw {
        let mut w = create(path)?;
        set.write_raw(&mut w)?;
        w.flush()?;
        let side = sidecar(path);
        let mut w = create(&side)?;
        w.write_all((serde_json::to_string_pretty(&json!({ "meta": meta }))? + "\n").as_bytes())?;
        w.flush()?;
    }
    let est = intensity(&set)?;
    let report = json!({
        "process": process,
        "box": bx,
        "count": set.len(),
        "volume": bx.volume(),
        "intensity": est,
    });
    emit(cfg.output.report.as_ref(), &meta, &report)?;
    Ok(Outcome::Pass)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Places 2-D rasters of `sets` left to right with `gap` blank columns and
/// returns the P4 image.
pub fn compose_panel(sets: &[PointSet], gap: usize, comments: &[String]) -> Result<Vec<u8>> {
    let first = sets
        .first()
        .ok_or_else(|| Error::InvalidArgument("no panels".into()))?;
    let (w0, h0) = (first.bounds().extent(0), first.bounds().extent(1));
    for s in sets {
        if s.bounds().dim() != 2 || s.bounds().extent(0) != w0 || s.bounds().extent(1) != h0 {
            return Err(Error::InvalidArgument(format!(
                "panel shape mismatch: expected 2-D {w0}x{h0}, found {:?}",
                (0..s.bounds().dim())
                    .map(|c| s.bounds().extent(c))
                    .collect::<Vec<_>>()
            )));
        }
    }
    let width = sets.len() as u64 * w0 + (sets.len() as u64 - 1) * gap as u64;
    let mut out = String::from("P4\n");
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    out.push_str(&format!("{width} {h0}\n"));
    let mut bytes = out.into_bytes();
    let row_bytes = width.div_ceil(8) as usize;
    for r in 0..h0 {
        let mut row = vec![0u8; row_bytes];
        for (i, s) in sets.iter().enumerate() {
            let (lo, hi) = (s.bounds().lower(), s.bounds().upper());
            let y = hi[1] - 1 - r as i64;
            let x0 = i as u64 * (w0 + gap as u64);
            for c in 0..w0 {
                if s.contains(&[lo[0] + c as i64, y])? {
                    let x = x0 + c;
                    row[(x / 8) as usize] |= 0x80 >> (x % 8);
                }
            }
        }
        bytes.extend_from_slice(&row);
    }
    Ok(bytes)
}

fn figure_panel(
    specs: &[String],
    boxes: &[String],
    seed: Option<u64>,
    out: &Path,
    gap: usize,
    shuffle: bool,
) -> Result<Outcome> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument(
            "figure-panel needs at least one --spec".into(),
        ));
    }
    let boxes: Vec<LatticeBox> = match boxes.len() {
        0 => vec![LatticeBox::cube(2, 0, 80)?; specs.len()],
        1 => vec![parse_box(&boxes[0])?; specs.len()],
        n if n == specs.len() => boxes.iter().map(|b| parse_box(b)).collect::<Result<_>>()?,
        n => {
            return Err(Error::InvalidArgument(format!(
                "{n} boxes for {} panels",
                specs.len()
            )))
        }
    };
    let seed = match seed {
        Some(s) => s,
        None => env_seed()?,
    };
    let description =
        json!({ "specs": specs, "boxes": boxes, "seed": seed, "gap": gap, "shuffle": shuffle });
    let meta = Meta {
        tool: "invsets".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config_hash: hex(&Sha256::digest(serde_json::to_vec(&description)?)),
    };
    let mut order: Vec<usize> = (0..specs.len()).collect();
    if shuffle {
        order.shuffle(&mut stream_rng(seed, stream::AUX));
    }
    let mut sets = Vec::with_capacity(specs.len());
    let mut placed = Vec::with_capacity(specs.len());
    for (position, &i) in order.iter().enumerate() {
        let bx = &boxes[i];
        let process = parse_spec(&specs[i], bx.dim())?;
        let s = trial_seed(seed, i as u64);
        sets.push(process.sample(bx, s)?);
        placed.push(json!({ "position": position, "spec": specs[i], "seed": s, "box": bx }));
    }
    let bytes = compose_panel(&sets, gap, &meta.comment_lines())?;
    let mut w = create(out)?;
    w.write_all(&bytes)?;
    w.flush()?;
    let mut w = create(&sidecar(out))?;
    let doc = json!({ "schema": 1, "meta": meta, "gap": gap, "panels": placed });
    w.write_all((serde_json::to_string_pretty(&doc)? + "\n").as_bytes())?;
    w.flush()?;
    Ok(Outcome::Pass)
}

fn quartiles(values: &[f64]) -> [f64; 3] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    [q(0.25), q(0.5), q(0.75)]
}

fn default_queries(d: usize) -> Vec<MarginalQuery> {
    let unit = |i: usize| (0..d).map(|c| (c == i) as i64).collect::<Vec<i64>>();
    let mut out = vec![MarginalQuery::new(vec![vec![0; d]]).expect("distinct")];
    out.push(MarginalQuery::new(vec![vec![0; d], unit(0)]).expect("distinct"));
    if d >= 2 {
        out.push(MarginalQuery::new(vec![vec![0; d], unit(0), unit(1)]).expect("distinct"));
    }
    out
}

fn stats(cmd: StatsCmd) -> Result<Outcome> {
    match cmd {
        StatsCmd::Intensity {
            common,
            seeds,
            expect,
        } => {
            let mut cfg = prepare(&common)?;
            cfg.stats.seeds = seeds.or(cfg.stats.seeds);
            cfg.stats.expect = expect.or(cfg.stats.expect);
            let (process, d) = cfg.resolve_process()?;
            let bx = default_box(&mut cfg, d, 128)?;
            let n = cfg.stats.seeds.unwrap_or(100).max(1);
            let seed = cfg.seed.unwrap_or_default();
            let meta = Meta::new(&cfg, seed);
            let mut per_seed = Vec::new();
            for i in 0..n {
                let s = trial_seed(seed, i);
                per_seed.push((s, intensity(&process.sample(&bx, s)?)?));
            }
            let nf = n as f64;
            let mean = per_seed.iter().map(|(_, e)| e.value).sum::<f64>() / nf;
            let var = if n > 1 {
                per_seed
                    .iter()
                    .map(|(_, e)| (e.value - mean).powi(2))
                    .sum::<f64>()
                    / (nf - 1.0)
            } else {
                0.0
            };
            let se = (var / nf).sqrt();
            let binomial_se = per_seed
                .iter()
                .map(|(_, e)| e.std_err.powi(2))
                .sum::<f64>()
                .sqrt()
                / nf;
            let rejected = cfg
                .stats
                .expect
                .is_some_and(|x| (mean - x).abs() > 4.0 * se.max(binomial_se));
            let report = json!({
                "box": bx,
                "mean": mean,
                "std_err": se,
                "binomial_std_err": binomial_se,
                "expect": cfg.stats.expect,
                "rejected": rejected,
                "per_seed": per_seed.iter().map(|(s, e)| json!({"seed": s, "intensity": e.value, "std_err": e.std_err})).collect::<Vec<_>>(),
            });
            if let Some(p) = &cfg.output.csv {
                let rows: Vec<Vec<String>> = per_seed
                    .iter()
                    .map(|(s, e)| vec![s.to_string(), e.value.to_string(), e.std_err.to_string()])
                    .collect();
                write_csv_table(p, &meta, &["seed", "intensity", "std_err"], &rows)?;
            }
            emit(cfg.output.report.as_ref(), &meta, &report)?;
            Ok(if rejected {
                Outcome::Reject
            } else {
                Outcome::Pass
            })
        }
        StatsCmd::Marginal {
            common,
            points,
            trials,
            expect,
        } => {
            let mut cfg = prepare(&common)?;
            if let Some(p) = points {
                cfg.stats.queries =
                    Some(vec![config::parse_json::<MarginalQuery>(&p, "--points")?]);
            }
            cfg.stats.trials = trials.or(cfg.stats.trials);
            cfg.stats.expect = expect.or(cfg.stats.expect);
            let (process, d) = cfg.resolve_process()?;
            let queries = cfg
                .stats
                .queries
                .clone()
                .unwrap_or_else(|| default_queries(d)[..1].to_vec());
            let trials = cfg.stats.trials.unwrap_or(100_000);
            let seed = cfg.seed.unwrap_or_default();
            let meta = Meta::new(&cfg, seed);
            let mut results = Vec::new();
            let mut rejected = false;
            for (i, q) in queries.iter().enumerate() {
                let e = k_point_marginal(&process, d, q, trials, derive_seed(seed, i as u64))?;
                let r = cfg.stats.expect.is_some_and(|x| x < e.ci.0 || x > e.ci.1);
                rejected |= r;
                results.push(json!({ "query": q, "estimate": e, "rejected": r }));
            }
            if let Some(p) = &cfg.output.csv {
                let rows: Vec<Vec<String>> = results
                    .iter()
                    .map(|r| {
                        let e = &r["estimate"];
                        vec![
                            format!("\"{}\"", r["query"]),
                            e["successes"].to_string(),
                            e["trials"].to_string(),
                            e["value"].to_string(),
                            e["ci"][0].to_string(),
                            e["ci"][1].to_string(),
                        ]
                    })
                    .collect();
                write_csv_table(
                    p,
                    &meta,
                    &["query", "successes", "trials", "value", "ci_low", "ci_high"],
                    &rows,
                )?;
            }
            let report =
                json!({ "expect": cfg.stats.expect, "queries": results, "rejected": rejected });
            emit(cfg.output.report.as_ref(), &meta, &report)?;
            Ok(if rejected {
                Outcome::Reject
            } else {
                Outcome::Pass
            })
        }
        StatsCmd::Gowers {
            common,
            order,
            mode,
            samples,
            seeds,
            against,
        } => {
            let mut cfg = prepare(&common)?;
            let st = &mut cfg.stats;
            st.order = order.or(st.order);
            st.mode = mode.map(Into::into).or(st.mode);
            st.samples = samples.or(st.samples);
            st.seeds = seeds.or(st.seeds);
            st.against = against.or(st.against.take());
            let (process, d) = cfg.resolve_process()?;
            let bx = default_box(&mut cfg, d, 32)?;
            let gcfg = GowersConfig {
                order: cfg.stats.order.unwrap_or(2),
                max_shift: None,
                samples: cfg.stats.samples.unwrap_or(100_000),
                mode: cfg.stats.mode.unwrap_or(GowersMode::Exact),
            };
            let n = cfg.stats.seeds.unwrap_or(20).max(1);
            let seed = cfg.seed.unwrap_or_default();
            let meta = Meta::new(&cfg, seed);
            let run = |p: &Process, base: u64| -> Result<Vec<f64>> {
                (0..n)
                    .map(|i| {
                        let s = trial_seed(base, i);
                        let grid = RealGrid::indicator(&p.sample(&bx, s)?);
                        Ok(gowers_norm(&grid, &gcfg, derive_seed(s, stream::AUX))?.value)
                    })
                    .collect()
            };
            let values = run(&process, seed)?;
            let q = quartiles(&values);
            let mut report = json!({ "config": gcfg, "box": bx, "values": values, "quartiles": q });
            let mut rejected = false;
            if let Some(other) = &cfg.stats.against {
                let p2 = parse_spec(other, d)?;
                let v2 = run(&p2, derive_seed(seed, 1))?;
                let q2 = quartiles(&v2);
                rejected = q[0] > q2[2] || q2[0] > q[2];
                report["against"] = json!({ "spec": other, "values": v2, "quartiles": q2 });
                report["iqr_separated"] = json!(rejected);
            }
            if let Some(p) = &cfg.output.csv {
                let rows: Vec<Vec<String>> = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vec![i.to_string(), v.to_string()])
                    .collect();
                write_csv_table(p, &meta, &["trial", "value"], &rows)?;
            }
            emit(cfg.output.report.as_ref(), &meta, &report)?;
            Ok(if rejected {
                Outcome::Reject
            } else {
                Outcome::Pass
            })
        }
        StatsCmd::Ap {
            common,
            length,
            trials,
            max_step,
            against,
            expect,
            alpha,
        } => {
            let mut cfg = prepare(&common)?;
            let st = &mut cfg.stats;
            st.length = length.or(st.length);
            st.trials = trials.or(st.trials);
            st.max_step = max_step.or(st.max_step);
            st.against = against.or(st.against.take());
            st.expect = expect.or(st.expect);
            st.alpha = alpha.or(st.alpha);
            let (process, d) = cfg.resolve_process()?;
            let mut ap = ApConfig::new(
                cfg.stats.length.unwrap_or(8),
                cfg.stats.trials.unwrap_or(100_000),
            );
            if let Some(m) = cfg.stats.max_step {
                ap.max_step = m;
            }
            let side = ((ap.length.max(1) as i64 - 1) * ap.max_step as i64 + 1).max(64);
            let bx = default_box(&mut cfg, d, side)?;
            let alpha = cfg.stats.alpha.unwrap_or(0.01);
            let seed = cfg.seed.unwrap_or_default();
            let meta = Meta::new(&cfg, seed);
            let h = ap_count_distribution(&process, &bx, &ap, derive_seed(seed, 0))?;
            let mut report = json!({ "ap": ap, "box": bx, "histogram": h, "alpha": alpha });
            let mut other_freq = None;
            let test = if let Some(other) = &cfg.stats.against {
                let p2 = parse_spec(other, d)?;
                let h2 = ap_count_distribution(&p2, &bx, &ap, derive_seed(seed, 1))?;
                other_freq = Some(h2.frequencies());
                report["against"] = json!({ "spec": other, "histogram": h2 });
                Some(two_sample_chisq(&h, &h2)?)
            } else if let Some(p) = cfg.stats.expect {
                let pmf = binomial_pmf(ap.length, p);
                other_freq = Some(pmf.clone());
                Some(chisq_goodness_of_fit(&h, &pmf)?)
            } else {
                None
            };
            let rejected = test.as_ref().is_some_and(|t| t.p_value < alpha);
            report["test"] = json!(test);
            report["rejected"] = json!(rejected);
            if let Some(p) = &cfg.output.csv {
                let f = h.frequencies();
                let rows: Vec<Vec<String>> = (0..f.len())
                    .map(|c| {
                        vec![
                            c.to_string(),
                            h.bins()[c].to_string(),
                            f[c].to_string(),
                            other_freq
                                .as_ref()
                                .map_or(String::new(), |o| o[c].to_string()),
                        ]
                    })
                    .collect();
                write_csv_table(
                    p,
                    &meta,
                    &["count", "trials", "frequency", "reference_frequency"],
                    &rows,
                )?;
            }
            emit(cfg.output.report.as_ref(), &meta, &report)?;
            Ok(if rejected {
                Outcome::Reject
            } else {
                Outcome::Pass
            })
        }
        StatsCmd::Invariance {
            common,
            g,
            queries,
            trials,
            alpha,
        } => {
            let mut cfg = prepare(&common)?;
            if let Some(g) = g {
                cfg.stats.g = Some(parse_map(&g));
            }
            if let Some(q) = queries {
                cfg.stats.queries = Some(config::parse_json(&q, "--queries")?);
            }
            cfg.stats.trials = trials.or(cfg.stats.trials);
            cfg.stats.alpha = alpha.or(cfg.stats.alpha);
            let (process, d) = cfg.resolve_process()?;
            let g = cfg
                .stats
                .g
                .clone()
                .unwrap_or(MapSource::Preset("shear-12".into()))
                .resolve(d)?;
            let queries = cfg
                .stats
                .queries
                .clone()
                .unwrap_or_else(|| default_queries(d));
            let trials = cfg.stats.trials.unwrap_or(100_000);
            let alpha = cfg.stats.alpha.unwrap_or(0.01);
            let seed = cfg.seed.unwrap_or_default();
            let meta = Meta::new(&cfg, seed);
            let report = invariance_test(&process, d, &g, &queries, trials, alpha, seed)?;
            if let Some(p) = &cfg.output.csv {
                let rows: Vec<Vec<String>> = report
                    .queries
                    .iter()
                    .map(|q| {
                        vec![
                            format!(
                                "\"{}\"",
                                serde_json::to_string(&q.query).unwrap_or_default()
                            ),
                            format!(
                                "\"{}\"",
                                serde_json::to_string(&q.image).unwrap_or_default()
                            ),
                            q.at_query.value.to_string(),
                            q.at_image.value.to_string(),
                            q.z.to_string(),
                            q.p_value.to_string(),
                            q.rejected.to_string(),
                        ]
                    })
                    .collect();
                write_csv_table(
                    p,
                    &meta,
                    &[
                        "query", "image", "p_query", "p_image", "z", "p_value", "rejected",
                    ],
                    &rows,
                )?;
            }
            let passed = report.passed();
            emit(cfg.output.report.as_ref(), &meta, &report)?;
            Ok(if passed {
                Outcome::Pass
            } else {
                Outcome::Reject
            })
        }
    }
}

fn couple(
    common: &Common,
    f1: Option<String>,
    f2: Option<String>,
    seeds: Option<u64>,
    mode: Option<CouplingMode>,
    exact_bits: Option<u32>,
    check: bool,
) -> Result<Outcome> {
    let mut cfg = prepare(common)?;
    if cfg.preset.is_none() && cfg.process.is_none() {
        cfg.preset = Some("s1".into());
    }
    if let Some(f) = f1 {
        cfg.couple.f1 = Some(parse_window(&f)?);
    }
    if let Some(f) = f2 {
        cfg.couple.f2 = Some(parse_window(&f)?);
    }
    cfg.couple.seeds = seeds.or(cfg.couple.seeds);
    cfg.couple.mode = mode.or(cfg.couple.mode);
    let (process, d) = cfg.resolve_process()?;
    let Process::Polynomial(core) = process else {
        return Err(Error::Config(
            "coupling needs a polynomial process (e.g. s1, s2)".into(),
        ));
    };
    let f1 = cfg
        .couple
        .f1
        .clone()
        .map_or_else(|| parse_window("arc:0.5"), Ok)?;
    let f2 = cfg
        .couple
        .f2
        .clone()
        .map_or_else(|| parse_window("arc:0.6"), Ok)?;
    let bx = default_box(&mut cfg, d, 256)?;
    let mode = cfg.couple.mode.unwrap_or_default();
    let seed = cfg.seed.unwrap_or_default();
    let meta = Meta::new(&cfg, seed);
    let seeds: Vec<u64> = (0..cfg.couple.seeds.unwrap_or(50).max(1))
        .map(|i| trial_seed(seed, i))
        .collect();
    let rep = run_coupling(&core, &f1, &f2, &bx, &seeds, mode)?;
    let exact_max_error = match exact_bits {
        Some(bits) => {
            let c = conditional_symdiff(&core, &f1, &f2, &bx, seeds[0], mode, bits)?;
            let g = window_gap(&core, &f1, &f2, &bx, seeds[0])?;
            Some(
                c.iter()
                    .zip(&g)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            )
        }
        None => None,
    };
    let within =
        (rep.density - rep.l1_gap).abs() <= 4.0 * rep.std_err && rep.density <= rep.l2_bound;
    let mut report = serde_json::to_value(&rep)?;
    report["box"] = json!(bx);
    report["exact_max_error"] = json!(exact_max_error);
    report["identity_holds"] = json!(within);
    if let Some(p) = &cfg.output.csv {
        let rows: Vec<Vec<String>> = rep
            .per_seed
            .iter()
            .map(|s| {
                vec![
                    s.seed.to_string(),
                    s.density.to_string(),
                    s.std_err.to_string(),
                ]
            })
            .collect();
        write_csv_table(p, &meta, &["seed", "density", "std_err"], &rows)?;
    }
    emit(cfg.output.report.as_ref(), &meta, &report)?;
    Ok(if check && !within {
        Outcome::Reject
    } else {
        Outcome::Pass
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartile_interpolation() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), [2.0, 3.0, 4.0]);
        assert_eq!(quartiles(&[1.0]), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn panel_layout() {
        let bx = LatticeBox::cube(2, 0, 3).unwrap();
        let a = PointSet::from_points(bx.clone(), &[vec![0, 2]]).unwrap();
        let b = PointSet::full(bx);
        let img = compose_panel(&[a, b], 2, &[]).unwrap();
        // width 3 + 2 + 3 = 8: one byte per row
        assert_eq!(&img[..7], b"P4\n8 3\n");
        assert_eq!(&img[7..], &[0b1000_0111, 0b0000_0111, 0b0000_0111]);
        let small = PointSet::full(LatticeBox::cube(2, 0, 2).unwrap());
        assert!(compose_panel(
            &[PointSet::full(LatticeBox::cube(2, 0, 3).unwrap()), small],
            1,
            &[]
        )
        .is_err());
        assert!(compose_panel(&[], 1, &[]).is_err());
    }
}
