use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detectors::DetectorId;
use crate::sigmodel::SystemParams;
use crate::{Error, Result};

/// The swept quantity and its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    SnrDb {
        points: Vec<f64>,
    },
    /// `N`
    BlockLen {
        points: Vec<f64>,
    },
    /// Relative channel difference, pinned for every draw.
    Rcd {
        points: Vec<f64>,
    },
    /// `M_t`; requires an estimated `sigma_source`.
    TrainingCount {
        points: Vec<f64>,
    },
    /// Outage/AT target.
    TargetBer {
        points: Vec<f64>,
    },
}

impl Sweep {
    pub fn points(&self) -> &[f64] {
        match self {
            Sweep::SnrDb { points }
            | Sweep::BlockLen { points }
            | Sweep::Rcd { points }
            | Sweep::TrainingCount { points }
            | Sweep::TargetBer { points } => points,
        }
    }
}

/// Where the detectors get their `(σ0², σ1²)` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSource {
    /// True variances of the drawn channel; one bit per trial.
    #[default]
    Perfect,
    /// Semi-blind estimates from frames of `data_blocks` bits plus
    /// `training_blocks` known bits.
    Estimated {
        data_blocks: usize,
        training_blocks: usize,
        #[serde(default)]
        training_bit: u8,
    },
}

/// Channel power gains held constant for every trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedChannel {
    pub h0_sq: f64,
    pub h1_sq: f64,
}

fn default_trials() -> u64 {
    100_000
}

/// A complete experiment, loadable from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: SystemParams<f64>,
    pub sweep: Sweep,
    #[serde(default)]
    pub detectors: Vec<DetectorId>,
    #[serde(default)]
    pub sigma_source: SigmaSource,
    /// Bits (or channel draws for outage sweeps) per sweep point.
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Real tag–reader coefficient; required by outage sweeps.
    #[serde(default)]
    pub fixed_h_tr: Option<f64>,
    #[serde(default)]
    pub fixed_rcd: Option<f64>,
    /// Conditional mode: the same channel for every trial.
    #[serde(default)]
    pub fixed_channel: Option<FixedChannel>,
    /// Outage/AT target when the sweep is not over the target itself.
    #[serde(default)]
    pub target_ber: Option<f64>,
    /// Frames carry exactly `M/2` ones (shuffled) instead of i.i.d. bits.
    #[serde(default)]
    pub balanced_bits: bool,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn is_count(x: f64) -> bool {
    x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let cfg: Self = serde_json::from_value(value).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; errors name the path.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(cfg_err("trials must be at least 1"));
        }
        let points = self.sweep.points();
        if points.is_empty() {
            return Err(cfg_err("sweep has no points"));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(cfg_err("sweep points must be finite and strictly increasing"));
        }
        match &self.sweep {
            Sweep::SnrDb { .. } => {}
            Sweep::BlockLen { points } => {
                if points.iter().any(|&p| !is_count(p) || p < 2.0 || p % 2.0 != 0.0) {
                    return Err(cfg_err("block_len points must be even integers >= 2"));
                }
            }
            Sweep::Rcd { points } => {
                if points.iter().any(|&p| !(0.0..1.0).contains(&p)) {
                    return Err(cfg_err("rcd points must lie in [0, 1)"));
                }
            }
            Sweep::TrainingCount { points } => {
                if points.iter().any(|&p| !is_count(p)) {
                    return Err(cfg_err("training_count points must be nonnegative integers"));
                }
                if self.sigma_source == SigmaSource::Perfect {
                    return Err(cfg_err("a training_count sweep needs an estimated sigma_source"));
                }
            }
            Sweep::TargetBer { points } => {
                if points.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                    return Err(cfg_err("target_ber points must lie in (0, 1)"));
                }
            }
        }
        if let Some(r) = self.fixed_rcd {
            if !(0.0..1.0).contains(&r) {
                return Err(cfg_err(format!("fixed_rcd must lie in [0, 1), got {r}")));
            }
        }
        if let Some(h) = self.fixed_h_tr {
            if !(h.is_finite() && h != 0.0) {
                return Err(cfg_err(format!("fixed_h_tr must be finite and nonzero, got {h}")));
            }
        }
        if let Some(t) = self.target_ber {
            if !(t > 0.0 && t < 1.0) {
                return Err(cfg_err(format!("target_ber must lie in (0, 1), got {t}")));
            }
        }
        if let Some(fc) = self.fixed_channel {
            if !(fc.h0_sq >= 0.0 && fc.h1_sq >= 0.0 && fc.h0_sq.is_finite() && fc.h1_sq.is_finite()) {
                return Err(cfg_err("fixed_channel gains must be finite and nonnegative"));
            }
            if self.fixed_rcd.is_some() || matches!(self.sweep, Sweep::Rcd { .. }) {
                return Err(cfg_err("fixed_channel cannot be combined with an RCD constraint"));
            }
        }
        if let SigmaSource::Estimated {
            data_blocks,
            training_bit,
            ..
        } = self.sigma_source
        {
            if data_blocks == 0 || data_blocks % 2 != 0 {
                return Err(cfg_err(format!(
                    "data_blocks must be even and positive, got {data_blocks}"
                )));
            }
            if training_bit > 1 {
                return Err(cfg_err(format!("training_bit must be 0 or 1, got {training_bit}")));
            }
        }
        Ok(())
    }
}
