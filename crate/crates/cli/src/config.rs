//! Run configuration.
//!
//! Values come from three layers, later ones winning: built-in defaults, an
//! optional `key = value` config file, and command-line flags. Config file
//! keys match the long flag names (`alpha`, `k`, `ks`, `kd`, `delta`,
//! `dimension`, `seed`, `k1`, `b`, `mode`, `corpus`, `sparse`, `forward`,
//! `queries`, `query-vectors`, `qrels`, `run`, `sd-oracle`). Blank lines
//! and lines starting with `#` are ignored.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fastforward::{Bm25Params, CoalesceConfig, InterpolationConfig};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Order sparse candidates by dense score alone.
    Rerank,
    /// Interpolate sparse and dense scores for every candidate.
    Interpolate,
    /// Fuse with a dense top-k_D list, falling back to sparse scores.
    Hybrid,
    /// Interpolate with early stopping.
    EarlyStop,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rerank => "rerank",
            Mode::Interpolate => "interpolate",
            Mode::Hybrid => "hybrid",
            Mode::EarlyStop => "early-stop",
        })
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "rerank" => Ok(Mode::Rerank),
            "interpolate" => Ok(Mode::Interpolate),
            "hybrid" => Ok(Mode::Hybrid),
            "early-stop" | "early_stop" => Ok(Mode::EarlyStop),
            _ => Err(CliError::Usage(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub alpha: f64,
    pub k: usize,
    pub k_s: usize,
    pub k_d: usize,
    pub delta: f64,
    pub dimension: usize,
    pub seed: u64,
    pub bm25: Bm25Params,
    pub mode: Mode,
    /// Use the true dense maximum as the early-stopping bound.
    pub sd_oracle: bool,
    pub corpus: Option<PathBuf>,
    pub sparse: Option<PathBuf>,
    pub forward: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub query_vectors: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub run: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let i = InterpolationConfig::default();
        Self {
            alpha: i.alpha,
            k: i.k,
            k_s: i.k_s,
            k_d: i.k_d,
            delta: 0.0,
            dimension: 64,
            seed: 0,
            bm25: Bm25Params::PASSAGE,
            mode: Mode::Interpolate,
            sd_oracle: false,
            corpus: None,
            sparse: None,
            forward: None,
            queries: None,
            query_vectors: None,
            qrels: None,
            run: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {value:?} for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid value {value:?} for `{key}`"))),
    }
}

impl Config {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "alpha" => self.alpha = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "ks" | "k_s" => self.k_s = parse_value(key, value)?,
            "kd" | "k_d" => self.k_d = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "dimension" => self.dimension = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "k1" => self.bm25.k1 = parse_value(key, value)?,
            "b" => self.bm25.b = parse_value(key, value)?,
            "mode" => self.mode = value.parse()?,
            "sd-oracle" | "sd_oracle" => self.sd_oracle = parse_bool(key, value)?,
            "corpus" => self.corpus = path(),
            "sparse" => self.sparse = path(),
            "forward" => self.forward = path(),
            "queries" => self.queries = path(),
            "query-vectors" | "query_vectors" => self.query_vectors = path(),
            "qrels" => self.qrels = path(),
            "run" => self.run = path(),
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn apply_file_contents(&mut self, text: &str) -> CliResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.apply_file_contents(&text)
    }

    pub fn interpolation(&self) -> CliResult<InterpolationConfig> {
        Ok(InterpolationConfig::new(self.alpha, self.k, self.k_s, self.k_d)?)
    }

    pub fn coalesce(&self) -> CliResult<CoalesceConfig> {
        Ok(CoalesceConfig::new(self.delta)?)
    }

    /// Checks every numeric constraint before any work starts.
    pub fn validate(&self) -> CliResult<()> {
        self.interpolation()?;
        self.coalesce()?;
        Bm25Params::new(self.bm25.k1, self.bm25.b)?;
        if self.dimension < 2 {
            return Err(CliError::Usage("dimension must be at least 2".into()));
        }
        Ok(())
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> CliResult<&'a Path> {
        field
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("missing required path `{name}`")))
    }
}
