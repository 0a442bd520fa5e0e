//! Run configuration: JSON file plus flag overrides, validation, hashing.
//!
//! Flags override file values; the resolved configuration (with defaults
//! applied) is what gets hashed into every artifact header, so identical
//! effective configurations produce identical headers.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use rfic_core::chain::Spin;
use rfic_core::disorder::DisorderLaw;

/// A validation failure naming the offending field (exit code 2).
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Raw configuration as read from a JSON file or assembled from flags.
/// Everything optional; merging fills gaps, validation enforces presence.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub law: Option<DisorderLaw>,
    pub j: Option<f64>,
    pub j_grid: Option<Vec<f64>>,
    pub n: Option<f64>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub boundary: Option<String>,
    /// Block length override (verify-bounds).
    pub block_len: Option<usize>,
    /// Threshold override (verify-bounds).
    pub m: Option<f64>,
    pub trials: Option<usize>,
    pub l_grid: Option<Vec<usize>>,
    pub w1_replicates: Option<usize>,
    /// Brownian Monte Carlo block count (sandwich).
    pub blocks: Option<usize>,
    /// Brownian grid resolution (sandwich).
    pub grid_cells: Option<usize>,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl FileConfig {
    /// Field-by-field merge; values in `self` (the flags) win.
    pub fn or(self, fallback: FileConfig) -> FileConfig {
        FileConfig {
            law: self.law.or(fallback.law),
            j: self.j.or(fallback.j),
            j_grid: self.j_grid.or(fallback.j_grid),
            n: self.n.or(fallback.n),
            replicas: self.replicas.or(fallback.replicas),
            seed: self.seed.or(fallback.seed),
            boundary: self.boundary.or(fallback.boundary),
            block_len: self.block_len.or(fallback.block_len),
            m: self.m.or(fallback.m),
            trials: self.trials.or(fallback.trials),
            l_grid: self.l_grid.or(fallback.l_grid),
            w1_replicates: self.w1_replicates.or(fallback.w1_replicates),
            blocks: self.blocks.or(fallback.blocks),
            grid_cells: self.grid_cells.or(fallback.grid_cells),
            out: self.out.or(fallback.out),
            json: self.json.or(fallback.json),
            svg: self.svg.or(fallback.svg),
        }
    }
}

/// The seven commands of the laboratory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fe,
    Flips,
    Continuum,
    W1,
    VerifyBounds,
    Sweep,
    Sandwich,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fe => "fe",
            Command::Flips => "flips",
            Command::Continuum => "continuum",
            Command::W1 => "w1",
            Command::VerifyBounds => "verify-bounds",
            Command::Sweep => "sweep",
            Command::Sandwich => "sandwich",
        }
    }
}

/// Fully validated configuration; serialized form is the hash input.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub command: Command,
    pub law: Option<DisorderLaw>,
    pub j: Option<f64>,
    pub j_grid: Option<Vec<f64>>,
    pub chain_length: usize,
    pub replicas: usize,
    pub seed: u64,
    pub boundary: String,
    pub block_len: Option<usize>,
    pub m: Option<f64>,
    pub trials: usize,
    pub l_grid: Vec<usize>,
    pub w1_replicates: usize,
    pub blocks: usize,
    pub grid_cells: usize,
}

/// Artifact destinations (not part of the hash).
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl ResolvedConfig {
    pub fn boundary_spins(&self) -> (Spin, Spin) {
        parse_boundary(&self.boundary).expect("validated")
    }
}

pub fn parse_boundary(s: &str) -> Result<(Spin, Spin), ConfigError> {
    let spin = |c: char| match c {
        '+' => Ok(Spin::Up),
        '-' => Ok(Spin::Down),
        _ => Err(ConfigError::new(
            "boundary",
            format!("unknown spin `{c}`; use one of ++, +-, -+, --"),
        )),
    };
    let chars: Vec<char> = s.chars().collect();
    if chars.len() != 2 {
        return Err(ConfigError::new(
            "boundary",
            "must be two spins, e.g. ++ or +-",
        ));
    }
    Ok((spin(chars[0])?, spin(chars[1])?))
}

fn require_law(cfg: &FileConfig) -> Result<DisorderLaw, ConfigError> {
    let law = cfg
        .law
        .ok_or_else(|| ConfigError::new("law", "required for this command"))?;
    law.validate()
        .map_err(|e| match e {
            rfic_core::Error::InvalidParameter { field, message } => {
                ConfigError::new(field, message)
            }
            other => ConfigError::new("law", other.to_string()),
        })?;
    Ok(law)
}

fn require_seed(cfg: &FileConfig) -> Result<u64, ConfigError> {
    cfg.seed
        .ok_or_else(|| ConfigError::new("seed", "required for stochastic commands"))
}

fn chain_length(cfg: &FileConfig) -> Result<usize, ConfigError> {
    let n = cfg
        .n
        .ok_or_else(|| ConfigError::new("n", "required (chain length)"))?;
    if !(n.is_finite() && (1000.0..=1e10).contains(&n)) {
        return Err(ConfigError::new(
            "n",
            "chain length must be between 1e3 and 1e10",
        ));
    }
    Ok(n as usize)
}

fn check_grid(grid: &[f64], min: f64) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(ConfigError::new("j_grid", "must be non-empty"));
    }
    for &j in grid {
        if !j.is_finite() || j < min {
            return Err(ConfigError::new(
                "j_grid",
                format!("entries must be finite and >= {min}"),
            ));
        }
    }
    Ok(())
}

/// Applies defaults and validates for the given command.
pub fn resolve(command: Command, cfg: FileConfig) -> Result<(ResolvedConfig, Outputs), ConfigError> {
    let outputs = Outputs {
        csv: cfg.out.clone(),
        json: cfg.json.clone(),
        svg: cfg.svg.clone(),
    };
    let boundary = cfg.boundary.clone().unwrap_or_else(|| "++".to_string());
    parse_boundary(&boundary)?;
    let replicas = cfg.replicas.unwrap_or(32);
    if replicas == 0 {
        return Err(ConfigError::new("replicas", "must be >= 1"));
    }

    let mut resolved = ResolvedConfig {
        command,
        law: None,
        j: None,
        j_grid: None,
        chain_length: 0,
        replicas,
        seed: 0,
        boundary,
        block_len: None,
        m: None,
        trials: cfg.trials.unwrap_or(10_000),
        l_grid: cfg.l_grid.clone().unwrap_or_else(|| vec![4, 16, 64, 256]),
        w1_replicates: cfg.w1_replicates.unwrap_or(4),
        blocks: cfg.blocks.unwrap_or(20_000),
        grid_cells: cfg.grid_cells.unwrap_or(512),
    };

    match command {
        Command::Fe | Command::Flips => {
            resolved.law = Some(require_law(&cfg)?);
            let j = cfg.j.ok_or_else(|| ConfigError::new("j", "required"))?;
            if !(j.is_finite() && j >= 0.0) {
                return Err(ConfigError::new("j", "must be finite and >= 0"));
            }
            resolved.j = Some(j);
            resolved.chain_length = chain_length(&cfg)?;
            resolved.seed = require_seed(&cfg)?;
        }
        Command::Continuum => {
            let grid = match (&cfg.j_grid, cfg.j) {
                (Some(grid), _) => grid.clone(),
                (None, Some(j)) => vec![j],
                (None, None) => {
                    return Err(ConfigError::new("j", "provide j or j_grid"));
                }
            };
            check_grid(&grid, -250.0)?;
            resolved.j_grid = Some(grid);
        }
        Command::W1 => {
            resolved.law = Some(require_law(&cfg)?);
            resolved.seed = require_seed(&cfg)?;
            let n = cfg.n.unwrap_or(100_000.0);
            if !(n.is_finite() && (100.0..=1e9).contains(&n)) {
                return Err(ConfigError::new("n", "sample count must be in [1e2, 1e9]"));
            }
            resolved.chain_length = n as usize;
            if resolved.l_grid.is_empty() || resolved.l_grid.contains(&0) {
                return Err(ConfigError::new("l_grid", "entries must be >= 1"));
            }
            if resolved.w1_replicates == 0 {
                return Err(ConfigError::new("w1_replicates", "must be >= 1"));
            }
        }
        Command::VerifyBounds => {
            resolved.law = Some(require_law(&cfg)?);
            resolved.seed = require_seed(&cfg)?;
            let l = cfg
                .block_len
                .ok_or_else(|| ConfigError::new("block_len", "required (block length)"))?;
            if l == 0 || l > 1_000_000 {
                return Err(ConfigError::new("block_len", "must be in [1, 1e6]"));
            }
            resolved.block_len = Some(l);
            let j = cfg.j.ok_or_else(|| ConfigError::new("j", "required"))?;
            if !(j.is_finite() && j >= 0.0) {
                return Err(ConfigError::new("j", "must be finite and >= 0"));
            }
            resolved.j = Some(j);
            let m = cfg.m.ok_or_else(|| ConfigError::new("m", "required"))?;
            if !(m.is_finite() && m >= 0.0) {
                return Err(ConfigError::new("m", "must be finite and >= 0"));
            }
            resolved.m = Some(m);
            if resolved.trials == 0 {
                return Err(ConfigError::new("trials", "must be >= 1"));
            }
        }
        Command::Sweep => {
            resolved.law = Some(require_law(&cfg)?);
            resolved.seed = require_seed(&cfg)?;
            resolved.chain_length = chain_length(&cfg)?;
            let grid = cfg
                .j_grid
                .clone()
                .ok_or_else(|| ConfigError::new("j_grid", "required"))?;
            check_grid(&grid, 0.0)?;
            if grid.len() < 3 {
                return Err(ConfigError::new("j_grid", "needs at least 3 points"));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::new("j_grid", "must be strictly increasing"));
            }
            resolved.j_grid = Some(grid);
        }
        Command::Sandwich => {
            resolved.seed = require_seed(&cfg)?;
            resolved.chain_length = chain_length(&cfg)?;
            let grid = cfg.j_grid.clone().unwrap_or_else(|| vec![4.0, 6.0]);
            check_grid(&grid, 2.0)?;
            resolved.j_grid = Some(grid);
            if resolved.blocks == 0 {
                return Err(ConfigError::new("blocks", "must be >= 1"));
            }
            if resolved.grid_cells < 2 {
                return Err(ConfigError::new("grid_cells", "must be >= 2"));
            }
        }
    }
    Ok((resolved, outputs))
}

/// Loads a JSON config file; serde errors name the offending field.
pub fn load_file(path: &std::path::Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))
}
