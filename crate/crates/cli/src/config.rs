//! Run settings: command-line flags over `DENSILAB_SEED` over the TOML
//! config file over built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use densilab::density::{DEFAULT_J_RANGE, DEFAULT_SAMPLES};
use densilab::lattice::{DEFAULT_L_MAX, DEFAULT_SEARCH_BOUND};
use densilab::{Error, DEFAULT_TOL};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Output format [default: json]
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// TOML file with default settings
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Relative tolerance for numerical decisions [default: 1e-12]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Monte Carlo samples per density quotient [default: 1000000]
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// First j of a density sweep [default: 0]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_min: Option<i32>,
    /// Last j of a density sweep [default: 8]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_max: Option<i32>,
    /// Sampling seed [default: 0]
    #[arg(long, global = true, env = "DENSILAB_SEED")]
    pub seed: Option<u64>,
    /// Entry bound of the unimodular conjugator search [default: 10]
    #[arg(long, global = true)]
    pub bound: Option<i64>,
    /// Largest power tried for roots of identity [default: 12]
    #[arg(long, global = true)]
    pub l_max: Option<u32>,
}

/// Settings as read from a config file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub tolerance: Option<f64>,
    pub samples: Option<u64>,
    pub j_min: Option<i32>,
    pub j_max: Option<i32>,
    pub seed: Option<u64>,
    pub search_bound: Option<i64>,
    pub l_max: Option<u32>,
    pub format: Option<Format>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub tolerance: f64,
    pub samples: u64,
    pub j_min: i32,
    pub j_max: i32,
    pub seed: u64,
    pub search_bound: i64,
    pub l_max: u32,
    pub format: Format,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tolerance: DEFAULT_TOL,
            samples: DEFAULT_SAMPLES,
            j_min: *DEFAULT_J_RANGE.start(),
            j_max: *DEFAULT_J_RANGE.end(),
            seed: 0,
            search_bound: DEFAULT_SEARCH_BOUND,
            l_max: DEFAULT_L_MAX,
            format: Format::Json,
        }
    }
}

impl Config {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, Error> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let d = Config::default();
        let c = Config {
            tolerance: args.tol.or(file.tolerance).unwrap_or(d.tolerance),
            samples: args.samples.or(file.samples).unwrap_or(d.samples),
            j_min: args.j_min.or(file.j_min).unwrap_or(d.j_min),
            j_max: args.j_max.or(file.j_max).unwrap_or(d.j_max),
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
            search_bound: args.bound.or(file.search_bound).unwrap_or(d.search_bound),
            l_max: args.l_max.or(file.l_max).unwrap_or(d.l_max),
            format: args.format.or(file.format).unwrap_or(d.format),
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::BadParameter(m));
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.j_min < 0 || self.j_max < self.j_min {
            return bad(format!("need 0 <= j_min <= j_max, got {}..{}", self.j_min, self.j_max));
        }
        if self.search_bound <= 0 {
            return bad(format!("search bound must be positive, got {}", self.search_bound));
        }
        if self.l_max == 0 {
            return bad("l_max must be positive".into());
        }
        Ok(())
    }
}
