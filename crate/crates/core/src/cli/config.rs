//! Run configuration files, shorthand parsers and artifact metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::affine::AffineMap;
use crate::coupling::CouplingMode;
use crate::error::{Error, Result};
use crate::processes::{presets, LatticeBox, Process};
use crate::stats::{GowersMode, MarginalQuery};
use crate::torus::WindowFn;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "INVSETS_SEED";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pbm: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Slice axes for the PBM raster.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<[usize; 2]>,
}

impl OutputConfig {
    fn is_empty(&self) -> bool {
        self == &OutputConfig::default()
    }
}

/// Parameters for the `stats` commands; flags override them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<GowersMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub against: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<Vec<MarginalQuery>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<MapSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
}

impl StatsParams {
    fn is_empty(&self) -> bool {
        self == &StatsParams::default()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<WindowFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<WindowFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CouplingMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<u64>,
}

impl CoupleParams {
    fn is_empty(&self) -> bool {
        self == &CoupleParams::default()
    }
}

/// An affine map given by preset name or explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSource {
    Preset(String),
    Map(AffineMap),
}

impl MapSource {
    pub fn resolve(&self, d: usize) -> Result<AffineMap> {
        match self {
            MapSource::Preset(name) => AffineMap::preset(name, d),
            MapSource::Map(g) => Ok(g.clone()),
        }
    }
}

/// Everything a run needs besides the subcommand itself.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name such as `s1` or `bernoulli:0.5`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Explicit process tree; exclusive with `preset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<Process>,
    /// Lattice dimension for presets when no box is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bx: Option<LatticeBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "OutputConfig::is_empty")]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "StatsParams::is_empty")]
    pub stats: StatsParams,
    #[serde(default, skip_serializing_if = "CoupleParams::is_empty")]
    pub couple: CoupleParams,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |nl| before.len() - nl - 1)
        + 1;
    (line, col)
}

/// Parses TOML, or JSON when the text starts with `{`. Errors carry
/// `origin:line:column`.
pub fn parse_text<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    if text.trim_start().starts_with('{') {
        parse_json(text, origin)
    } else {
        toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            Error::Config(format!("{origin}:{line}:{col}: {}", e.message()))
        })
    }
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<RunConfig> {
        parse_text(text, origin)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The process and lattice dimension described by the config.
    pub fn resolve_process(&self) -> Result<(Process, usize)> {
        let box_d = self.bx.as_ref().map(LatticeBox::dim);
        let (process, d) = match (&self.preset, &self.process) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `preset` or `process`, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Config("missing `preset` or `process`".into())),
            (Some(name), None) => {
                let d = self.d.or(box_d).unwrap_or(presets::DEFAULT_D);
                let p = presets::parse(name, d)?;
                let d = p.dim()?.unwrap_or(d);
                (p, d)
            }
            (None, Some(p)) => {
                let d = p.dim()?.or(self.d).or(box_d).ok_or_else(|| {
                    Error::Config("cannot infer the dimension; set `d` or `box`".into())
                })?;
                (p.clone(), d)
            }
        };
        if let Some(bd) = box_d {
            if bd != d {
                return Err(Error::Config(format!(
                    "box has dimension {bd} but the process has dimension {d}"
                )));
            }
        }
        process
            .validate(d)
            .map_err(|e| Error::Config(format!("process: {e}")))?;
        Ok((process, d))
    }

    /// Seed from the config, else from `INVSETS_SEED`, else 0.
    pub fn resolve_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring output destinations.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig {
            axes: self.output.axes,
            ..OutputConfig::default()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance stamped on every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Meta {
    pub fn new(cfg: &RunConfig, seed: u64) -> Meta {
        Meta {
            tool: "invsets".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_hash: cfg.hash(),
        }
    }

    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("{} {}", self.tool, self.version),
            format!("seed {}", self.seed),
            format!("config-sha256 {}", self.config_hash),
        ]
    }
}

/// `80x80`, `64x64x64`, or `lo:hi,lo:hi`.
pub fn parse_box(s: &str) -> Result<LatticeBox> {
    let bad = || Error::Config(format!("box {s:?}: expected e.g. 80x80 or -10:10,0:5"));
    if s.contains(':') {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for part in s.split(',') {
            let (a, b) = part.split_once(':').ok_or_else(bad)?;
            lo.push(a.trim().parse().map_err(|_| bad())?);
            hi.push(b.trim().parse().map_err(|_| bad())?);
        }
        LatticeBox::new(lo, hi)
    } else {
        let sides: Vec<i64> = s
            .split('x')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        LatticeBox::new(vec![0; sides.len()], sides)
    }
}

/// `arc:<δ>`, `constant:<p>`, `box:a:b[,a:b...]`, or a JSON window.
pub fn parse_window(s: &str) -> Result<WindowFn> {
    let bad = |why: String| Error::Config(format!("window {s:?}: {why}"));
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("{v:?} is not a number")))
    };
    if let Some(v) = s.strip_prefix("arc:") {
        WindowFn::arc(num(v)?).map_err(|e| bad(e.to_string()))
    } else if let Some(v) = s.strip_prefix("constant:") {
        WindowFn::constant(num(v)?).map_err(|e| bad(e.to_string()))
    } else if let Some(v) = s.strip_prefix("box:") {
        let iv = v
            .split(',')
            .map(|part| {
                let (a, b) = part
                    .split_once(':')
                    .ok_or_else(|| bad("expected a:b".into()))?;
                Ok((num(a)?, num(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        WindowFn::boxed(&iv).map_err(|e| bad(e.to_string()))
    } else {
        parse_text(s, "window")
    }
}

/// A preset name or a path to a TOML/JSON process file.
pub fn parse_spec(s: &str, d: usize) -> Result<Process> {
    let path = Path::new(s);
    if (s.ends_with(".json") || s.ends_with(".toml")) && path.exists() {
        let text = std::fs::read_to_string(path)?;
        parse_text(&text, s)
    } else {
        presets::parse(s, d)
    }
}

/// A preset name or inline JSON affine map.
pub fn parse_map(s: &str) -> MapSource {
    match serde_json::from_str::<AffineMap>(s) {
        Ok(g) => MapSource::Map(g),
        Err(_) => MapSource::Preset(s.to_string()),
    }
}
