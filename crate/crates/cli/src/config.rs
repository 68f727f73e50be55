//! Command-line flags, `key = value` config files and their merge.
//!
//! Precedence: flags, then config file, then built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Ring,
    Complete,
    Wheel,
    ChiralRing,
    ChiralComplete,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Dephasing,
    HakenStrobl,
    Qsw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    TopEigenstate,
    Localized,
    Thermal,
    InverseThermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Erg,
    Free,
    Zero,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

/// Every flag is optional so that unset flags fall through to the config
/// file and then to the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    #[arg(long, global = true, value_enum)]
    pub topology: Option<TopologyArg>,
    /// Number of vertices.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "coupling-j", global = true)]
    pub coupling_j: Option<f64>,
    /// Chiral phase (ring) or family phase (complete).
    #[arg(long = "gamma-phase", global = true, allow_hyphen_values = true)]
    pub gamma_phase: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub noise: Option<NoiseArg>,
    /// Dephasing or Haken–Strobl rate.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Stochastic-walk mixing weight.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub state: Option<StateArg>,
    /// Vertex of the localized initial state.
    #[arg(long, global = true)]
    pub site: Option<usize>,
    /// Inverse temperature(s), comma separated; `inf` is the zero-temperature limit.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "edge-list", global = true)]
    pub edge_list: Option<PathBuf>,
    /// Seed for random-unitary probes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Smallest size of a scaling sweep.
    #[arg(long = "n-min", global = true)]
    pub n_min: Option<usize>,
    /// Largest size of a scaling sweep.
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<usize>,
}

pub const KEYS: &[&str] = &[
    "topology",
    "n",
    "coupling-j",
    "gamma-phase",
    "noise",
    "gamma",
    "p",
    "state",
    "site",
    "beta",
    "t-max",
    "dt",
    "samples",
    "strategy",
    "out",
    "format",
    "jobs",
    "edge-list",
    "seed",
    "n-min",
    "n-max",
];

/// Parses `key = value` lines; `#` starts a comment, `_` and `-` are
/// interchangeable in keys.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key `{key}`", i + 1);
        }
        let value = value.trim().trim_matches('"').to_string();
        if map.insert(key.clone(), value).is_some() {
            bail!("config line {}: duplicate key `{key}`", i + 1);
        }
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config {}", path.display()))
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub topology: TopologyArg,
    pub n: usize,
    pub coupling_j: f64,
    pub gamma_phase: f64,
    pub noise: NoiseArg,
    pub gamma: f64,
    pub p: f64,
    pub state: StateArg,
    pub site: usize,
    pub betas: Vec<f64>,
    pub t_max: f64,
    pub dt: f64,
    pub samples: Option<usize>,
    pub strategy: StrategyArg,
    pub out: Option<PathBuf>,
    pub format: FormatArg,
    pub jobs: usize,
    pub edge_list: Option<PathBuf>,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| anyhow!("invalid value `{raw}` for `{key}`: {e}"))
}

fn parse_enum<T: ValueEnum>(key: &str, raw: &str) -> Result<T> {
    T::from_str(raw, true).map_err(|e| anyhow!("invalid value `{raw}` for `{key}`: {e}"))
}

fn parse_beta(raw: &str) -> Result<f64> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        s => {
            let b: f64 = parse_value("beta", s)?;
            if b.is_nan() || b < 0.0 {
                bail!("beta must be ≥ 0, got {raw}");
            }
            Ok(b)
        }
    }
}

pub fn parse_betas(raw: &str) -> Result<Vec<f64>> {
    let betas = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_beta)
        .collect::<Result<Vec<_>>>()?;
    if betas.is_empty() {
        bail!("beta grid is empty");
    }
    Ok(betas)
}

struct Merge<'a> {
    cfg: &'a BTreeMap<String, String>,
}

impl Merge<'_> {
    fn value<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.optional(flag, key)?.unwrap_or(default))
    }

    fn optional<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match (flag, self.cfg.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(raw)) => parse_value(key, raw).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn choice<T: ValueEnum>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match (flag, self.cfg.get(key)) {
            (Some(v), _) => Ok(v),
            (None, Some(raw)) => parse_enum(key, raw),
            (None, None) => Ok(default),
        }
    }
}

pub fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let cfg = match &flags.config {
            Some(path) => load_config(path)?,
            None => BTreeMap::new(),
        };
        let m = Merge { cfg: &cfg };
        let betas = match (&flags.beta, cfg.get("beta")) {
            (Some(raw), _) | (None, Some(raw)) => parse_betas(raw)?,
            (None, None) => vec![0.1, 0.5, 1.0, 2.0, 5.0],
        };
        let settings = Self {
            topology: m.choice(flags.topology, "topology", TopologyArg::Ring)?,
            n: m.value(flags.n, "n", 4)?,
            coupling_j: m.value(flags.coupling_j, "coupling-j", 1.0)?,
            gamma_phase: m.value(flags.gamma_phase, "gamma-phase", 0.0)?,
            noise: m.choice(flags.noise, "noise", NoiseArg::HakenStrobl)?,
            gamma: m.value(flags.gamma, "gamma", 1.0)?,
            p: m.value(flags.p, "p", 0.5)?,
            state: m.choice(flags.state, "state", StateArg::Localized)?,
            site: m.value(flags.site, "site", 0)?,
            betas,
            t_max: m.value(flags.t_max, "t-max", 10.0)?,
            dt: m.value(flags.dt, "dt", qcell_core::noise::DEFAULT_DT)?,
            samples: m.optional(flags.samples, "samples")?,
            strategy: m.choice(flags.strategy, "strategy", StrategyArg::All)?,
            out: m.optional(flags.out.clone(), "out")?,
            format: m.choice(flags.format, "format", FormatArg::Csv)?,
            jobs: m.value(flags.jobs, "jobs", default_jobs())?,
            edge_list: m.optional(flags.edge_list.clone(), "edge-list")?,
            seed: m.value(flags.seed, "seed", 0)?,
            n_min: m.value(flags.n_min, "n-min", 3)?,
            n_max: m.value(flags.n_max, "n-max", 32)?,
        };
        settings.check()?;
        Ok(settings)
    }

    fn check(&self) -> Result<()> {
        if self.jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        if !(self.coupling_j.is_finite() && self.coupling_j > 0.0) {
            bail!("--coupling-j must be positive");
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            bail!("--t-max must be ≥ 0");
        }
        if self.samples == Some(0) {
            bail!("--samples must be at least 1");
        }
        if self.n_min > self.n_max {
            bail!("--n-min exceeds --n-max");
        }
        Ok(())
    }

    /// Settings that shape the output, in a fixed order (worker count and
    /// output path are left out so that they cannot change the bytes).
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("topology", enum_name(&self.topology)),
            ("n", self.n.to_string()),
            ("coupling-j", self.coupling_j.to_string()),
            ("gamma-phase", self.gamma_phase.to_string()),
            ("noise", enum_name(&self.noise)),
            ("gamma", self.gamma.to_string()),
            ("p", self.p.to_string()),
            ("state", enum_name(&self.state)),
            ("site", self.site.to_string()),
            (
                "beta",
                self.betas
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("t-max", self.t_max.to_string()),
            ("dt", self.dt.to_string()),
            (
                "samples",
                self.samples.map(|s| s.to_string()).unwrap_or_default(),
            ),
            ("strategy", enum_name(&self.strategy)),
            ("format", enum_name(&self.format)),
            (
                "edge-list",
                self.edge_list
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("seed", self.seed.to_string()),
            ("n-min", self.n_min.to_string()),
            ("n-max", self.n_max.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg =
            parse_config("# comment\ntopology = wheel\ncoupling_j = 2.5 # trailing\n\n").unwrap();
        assert_eq!(cfg["topology"], "wheel");
        assert_eq!(cfg["coupling-j"], "2.5");
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("n 4").is_err());
        assert!(parse_config("n = 4\nn = 5").is_err());
    }

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "n = 7\ntopology = complete\nbeta = 1, inf\n").unwrap();
        let flags = Flags {
            n: Some(9),
            config: Some(path),
            ..Default::default()
        };
        let s = Settings::resolve(&flags).unwrap();
        assert_eq!(s.n, 9);
        assert_eq!(s.topology, TopologyArg::Complete);
        assert_eq!(s.betas, vec![1.0, f64::INFINITY]);
        assert_eq!(s.coupling_j, 1.0);
    }

    #[test]
    fn betas() {
        assert_eq!(parse_betas("0.1,2").unwrap(), vec![0.1, 2.0]);
        assert!(parse_betas("-1").is_err());
        assert!(parse_betas("").is_err());
    }
}
