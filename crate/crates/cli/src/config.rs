//! Run configuration: a flat `key = value` file, overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};

use relsvm_core::{Families, TrainConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration. Exit code 1.
    Usage(String),
    /// Unreadable or malformed input data. Exit code 2.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<relsvm_core::Error> for CliError {
    fn from(e: relsvm_core::Error) -> Self {
        match e {
            relsvm_core::Error::Config(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub abstracts: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub clusters: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub test_abstracts: Option<PathBuf>,
    pub test_relations: Option<PathBuf>,
    pub families: Families,
    pub train: TrainConfig,
    pub folds: usize,
    pub transductive: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            abstracts: None,
            relations: None,
            embeddings: None,
            clusters: None,
            model: None,
            out: None,
            test_abstracts: None,
            test_relations: None,
            families: Families::default(),
            train: TrainConfig::default(),
            folds: 5,
            transductive: true,
        }
    }
}

pub fn parse_switch(value: &str) -> Result<bool, String> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on or off, got `{value}`")),
    }
}

pub fn parse_ablation(value: &str) -> Result<Families, String> {
    Families::preset(value).ok_or_else(|| format!("unknown ablation `{value}` (all, no-shape, no-e2ctx, no-ctx)"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value for `{key}`: `{value}`")))
}

impl RunConfig {
    /// Sets one key. Relative paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> CliResult<()> {
        let path = || Some(base.join(value));
        match key {
            "abstracts" => self.abstracts = path(),
            "relations" => self.relations = path(),
            "embeddings" => self.embeddings = path(),
            "clusters" => self.clusters = path(),
            "model" => self.model = path(),
            "out" => self.out = path(),
            "test_abstracts" => self.test_abstracts = path(),
            "test_relations" => self.test_relations = path(),
            "families" => self.families = value.parse().map_err(|e: relsvm_core::Error| CliError::Usage(e.to_string()))?,
            "ablate" => self.families = parse_ablation(value).map_err(CliError::Usage)?,
            "cost" => self.train.cost = parse_num(key, value)?,
            "eps" => self.train.eps = parse_num(key, value)?,
            "max_iters" => self.train.max_outer_iters = parse_num(key, value)?,
            "seed" => self.train.seed = parse_num(key, value)?,
            "folds" => self.folds = parse_num(key, value)?,
            "transductive" => self.transductive = parse_switch(value).map_err(CliError::Usage)?,
            _ => return Err(CliError::Usage(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str, base: &Path) -> CliResult<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value.trim(), base)
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut config = RunConfig::default();
        config.apply_text(&text, path.parent().unwrap_or(Path::new(".")))?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.families.is_empty() {
            return Err(CliError::Usage("no feature families enabled".into()));
        }
        if self.folds < 2 {
            return Err(CliError::Usage(format!("--folds must be at least 2, got {}", self.folds)));
        }
        self.train.validate().map_err(|e| CliError::Usage(e.to_string()))
    }
}

pub fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}
