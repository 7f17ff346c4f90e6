use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::LossConfig;

pub const DEFAULT_EVAL_INTERVAL: usize = 500;

/// When validation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "CadenceRepr", into = "CadenceRepr")]
pub enum EvalCadence {
    /// Once per epoch for a single language without c2c, every 500 iterations
    /// otherwise.
    #[default]
    Auto,
    PerEpoch,
    Every(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CadenceRepr {
    Named(String),
    Every(usize),
}

impl TryFrom<CadenceRepr> for EvalCadence {
    type Error = String;

    fn try_from(r: CadenceRepr) -> std::result::Result<Self, String> {
        match r {
            CadenceRepr::Every(0) => Err("evaluation interval must be positive".into()),
            CadenceRepr::Every(n) => Ok(EvalCadence::Every(n)),
            CadenceRepr::Named(s) => s.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl From<EvalCadence> for CadenceRepr {
    fn from(c: EvalCadence) -> Self {
        match c {
            EvalCadence::Every(n) => CadenceRepr::Every(n),
            other => CadenceRepr::Named(other.to_string()),
        }
    }
}

impl fmt::Display for EvalCadence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalCadence::Auto => f.write_str("auto"),
            EvalCadence::PerEpoch => f.write_str("epoch"),
            EvalCadence::Every(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for EvalCadence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(EvalCadence::Auto),
            "epoch" => Ok(EvalCadence::PerEpoch),
            n => match n.parse::<usize>() {
                Ok(n) if n > 0 => Ok(EvalCadence::Every(n)),
                _ => Err(Error::Config(format!(
                    "eval_every must be `auto`, `epoch` or a positive count, got `{s}`"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Probability of a caption–image step; the rest are caption–caption.
    pub p_c2i: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub loss: LossConfig,
    /// Evaluations without improvement tolerated before stopping.
    pub patience: usize,
    pub eval_every: EvalCadence,
    pub max_iterations: usize,
    pub seed: u64,
    /// Languages whose caption–image data is trained on and validated.
    pub languages: Vec<String>,
    /// Enables the caption–caption task.
    pub c2c: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            p_c2i: 0.5,
            batch_size: 128,
            lr: 2e-4,
            loss: LossConfig::default(),
            patience: 10,
            eval_every: EvalCadence::Auto,
            max_iterations: 100_000,
            seed: 0,
            languages: vec!["en".into()],
            c2c: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_c2i) {
            return Err(Error::Config(format!(
                "p_c2i must lie in [0, 1], got {}",
                self.p_c2i
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch_size must be at least 2, got {}",
                self.batch_size
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be non-negative, got {}",
                self.lr
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if self.languages.is_empty() {
            return Err(Error::Config(
                "at least one training language is required".into(),
            ));
        }
        if self.c2c && self.p_c2i < 1.0 && self.languages.len() < 2 {
            return Err(Error::InsufficientLanguages(self.languages.len()));
        }
        self.loss.validate()
    }

    /// The cadence after resolving `Auto`.
    pub fn resolved_cadence(&self) -> EvalCadence {
        match self.eval_every {
            EvalCadence::Auto if self.languages.len() == 1 && !self.c2c => EvalCadence::PerEpoch,
            EvalCadence::Auto => EvalCadence::Every(DEFAULT_EVAL_INTERVAL),
            other => other,
        }
    }
}
