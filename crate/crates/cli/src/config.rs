//! Experiment configuration files: flat UTF-8 `key = value` lines, `#`
//! comment lines, unknown keys rejected. Every referenced value is
//! validated before any computation starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use leakbound_core::leakage::{FieldParams, LeakageConfig, SboxKind, SboxSpec};
use leakbound_core::mi::QGrid;

use crate::error::{CliError, Result};

const KNOWN_KEYS: &[&str] = &[
    "ell",
    "sbox",
    "sbox_seed",
    "masked",
    "sigma2_list",
    "q_grid",
    "n_draws",
    "n_attacks",
    "target_ps",
    "seed",
    "output_dir",
    "n_draws_list",
    "q_fixed",
];

/// Draw-budget defaults per profile: `desk` is accurate enough for every
/// curve here; `paper` matches the figure-grade budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn default_n_draws(self) -> usize {
        match self {
            Profile::Desk => 100_000,
            Profile::Paper => 1_000_000,
        }
    }
}

/// A parsed, validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub ell: u32,
    pub sbox: SboxKind,
    pub sbox_seed: Option<u64>,
    pub masked: bool,
    pub sigma2_list: Vec<f64>,
    pub q_grid: Option<QGrid>,
    pub n_draws: Option<usize>,
    pub n_attacks: Option<usize>,
    pub target_ps: Option<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub n_draws_list: Option<Vec<usize>>,
    pub q_fixed: Option<usize>,
    /// Hash of the canonicalized key-value file, for provenance lines.
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!("unknown key `{key}`")));
            }
            if pairs.insert(key.clone(), value).is_some() {
                return Err(CliError::config(format!("duplicate key `{key}`")));
            }
        }

        let config_hash = hash_pairs(&pairs);
        let get = |key: &str| pairs.get(key).map(String::as_str);
        let require = |key: &str| {
            get(key).ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
        };

        let ell: u32 = parse_num(require("ell")?, "ell")?;
        let sbox = match require("sbox")? {
            "identity" => SboxKind::Identity,
            "aes-subbytes" => SboxKind::AesSubBytes,
            "seeded-random-bijection" => SboxKind::SeededRandomBijection,
            other => {
                return Err(CliError::config(format!(
                    "sbox must be identity | aes-subbytes | seeded-random-bijection, got `{other}`"
                )))
            }
        };
        let sbox_seed = get("sbox_seed")
            .map(|v| parse_num::<u64>(v, "sbox_seed"))
            .transpose()?;
        let masked = match require("masked")? {
            "true" => true,
            "false" => false,
            other => {
                return Err(CliError::config(format!(
                    "masked must be true or false, got `{other}`"
                )))
            }
        };
        let sigma2_list = parse_list::<f64>(require("sigma2_list")?, "sigma2_list")?;
        if sigma2_list.is_empty() {
            return Err(CliError::config("sigma2_list must not be empty"));
        }
        let q_grid = get("q_grid").map(parse_q_grid).transpose()?;
        let n_draws = get("n_draws")
            .map(|v| parse_num::<usize>(v, "n_draws"))
            .transpose()?;
        let n_attacks = get("n_attacks")
            .map(|v| parse_num::<usize>(v, "n_attacks"))
            .transpose()?;
        let target_ps = get("target_ps")
            .map(|v| parse_num::<f64>(v, "target_ps"))
            .transpose()?;
        let seed: u64 = parse_num(require("seed")?, "seed")?;
        let output_dir = PathBuf::from(require("output_dir")?);
        let n_draws_list = get("n_draws_list")
            .map(|v| parse_list::<usize>(v, "n_draws_list"))
            .transpose()?;
        let q_fixed = get("q_fixed")
            .map(|v| parse_num::<usize>(v, "q_fixed"))
            .transpose()?;

        let cfg = Self {
            ell,
            sbox,
            sbox_seed,
            masked,
            sigma2_list,
            q_grid,
            n_draws,
            n_attacks,
            target_ps,
            seed,
            output_dir,
            n_draws_list,
            q_fixed,
            config_hash,
        };
        cfg.validate_common()?;
        Ok(cfg)
    }

    /// Cross-field checks every command relies on: the field must build,
    /// the S-box must build, each noise level must build.
    fn validate_common(&self) -> Result<()> {
        let field = FieldParams::new(self.ell)?;
        let sbox = SboxSpec::build(self.sbox, field, self.sbox_seed)?;
        for &sigma2 in &self.sigma2_list {
            LeakageConfig::new(field, sbox.clone(), self.masked, sigma2)?;
        }
        if let Some(ps) = self.target_ps {
            let floor = (-(self.ell as f64)).exp2();
            if !(floor..=1.0).contains(&ps) {
                return Err(CliError::config(format!(
                    "target_ps {ps} outside [2^-ell, 1] = [{floor}, 1]"
                )));
            }
        }
        if self.n_draws == Some(0) || self.n_draws == Some(1) {
            return Err(CliError::config("n_draws must be at least 2"));
        }
        if self.n_attacks == Some(0) {
            return Err(CliError::config("n_attacks must be at least 1"));
        }
        Ok(())
    }

    /// Channel configuration for one noise level.
    pub fn leakage_config(&self, sigma2: f64) -> Result<LeakageConfig> {
        let field = FieldParams::new(self.ell)?;
        let sbox = SboxSpec::build(self.sbox, field, self.sbox_seed)?;
        Ok(LeakageConfig::new(field, sbox, self.masked, sigma2)?)
    }

    pub fn require_q_grid(&self) -> Result<&QGrid> {
        self.q_grid
            .as_ref()
            .ok_or_else(|| CliError::config("this command requires `q_grid`"))
    }

    pub fn resolved_n_draws(&self, profile: Profile) -> usize {
        self.n_draws.unwrap_or_else(|| profile.default_n_draws())
    }

    pub fn resolved_n_attacks(&self) -> usize {
        self.n_attacks.unwrap_or(200)
    }

    pub fn resolved_target_ps(&self) -> f64 {
        self.target_ps.unwrap_or(0.95)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::config(format!("invalid `{key}` value `{value}`: {e}")))
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(s, key))
        .collect()
}

/// Either an explicit comma list (`1,2,5,10`) or
/// `linspace:start:stop:count`.
fn parse_q_grid(value: &str) -> Result<QGrid> {
    if let Some(rest) = value.strip_prefix("linspace:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::config(format!(
                "q_grid linspace form is linspace:start:stop:count, got `{value}`"
            )));
        }
        let start = parse_num::<usize>(parts[0], "q_grid start")?;
        let stop = parse_num::<usize>(parts[1], "q_grid stop")?;
        let count = parse_num::<usize>(parts[2], "q_grid count")?;
        Ok(QGrid::linspace(start, stop, count)?)
    } else {
        Ok(QGrid::new(parse_list(value, "q_grid")?)?)
    }
}

/// SHA-256 of the canonicalized (sorted, re-serialized) key-value pairs,
/// truncated to 16 hex digits.
fn hash_pairs(pairs: &BTreeMap<String, String>) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in pairs {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
