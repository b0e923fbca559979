//! Training configuration.

use crate::error::{Error, Result};
use crate::lmr::FewShotExclusion;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Cross-entropy with instance-balanced sampling; single stage.
    Ce,
    /// Classifier retraining: stage 1 as CE, classifier reset, class-balanced
    /// stage 2 with plain cross-entropy.
    Crt,
    /// As cRT, but stage 2 pairwise-mixes encoder inputs and labels.
    Mixup,
    /// As cRT, but stage 2 applies mixed reconstruction between encoder and
    /// classifier.
    Lmr,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ce => "ce",
            Mode::Crt => "crt",
            Mode::Mixup => "mixup",
            Mode::Lmr => "lmr",
        }
    }

    pub fn two_stage(&self) -> bool {
        !matches!(self, Mode::Ce)
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ce" => Ok(Mode::Ce),
            "crt" => Ok(Mode::Crt),
            "mixup" => Ok(Mode::Mixup),
            "lmr" => Ok(Mode::Lmr),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerChoice {
    Sgd,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExclusionChoice {
    Contributors,
    Targets,
}

impl From<ExclusionChoice> for FewShotExclusion {
    fn from(choice: ExclusionChoice) -> Self {
        match choice {
            ExclusionChoice::Contributors => FewShotExclusion::Contributors,
            ExclusionChoice::Targets => FewShotExclusion::Targets,
        }
    }
}

/// Mixed-reconstruction hyperparameters, echoed verbatim into outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmrSettings {
    /// Decay of the contribution with class count.
    pub d: f64,
    /// Constant inside the contribution log; `None` selects
    /// `max(1.0, 1.1 − min_count·d)`.
    pub epsilon: Option<f64>,
    /// Contribution of the smallest class.
    pub l: f64,
    /// Few-shot threshold for the exclusion mask.
    pub omega: u64,
    /// Feature-bank capacity (0 disables the bank; the candidate pool is
    /// batch size + capacity).
    pub bank_capacity: usize,
    /// Probability that a sample passes through the mixer unchanged.
    pub identity_mix_prob: f64,
    /// Apply the few-shot mask to contributors (default) or to targets.
    pub exclusion: ExclusionChoice,
    /// Differentiate through the similarity matrix.
    pub similarity_grad: bool,
}

impl Default for LmrSettings {
    fn default() -> Self {
        LmrSettings {
            d: 0.25,
            epsilon: None,
            l: 0.6,
            omega: 20,
            bank_capacity: 0,
            identity_mix_prob: 0.5,
            exclusion: ExclusionChoice::Contributors,
            similarity_grad: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Encoder layer widths after the input, e.g. `[64, 64]`; empty for the
    /// identity encoder. ReLU between layers, linear output.
    pub encoder_dims: Vec<usize>,
    pub batch_size: usize,
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    pub lr_stage1: f64,
    /// Stage-2 learning rate; conventionally a tenth of stage 1.
    pub lr_stage2: f64,
    pub optimizer: OptimizerChoice,
    pub sgd_momentum: f64,
    pub seed: u64,
    pub freeze_encoder_stage2: bool,
    pub lmr: LmrSettings,
    /// Head data fraction for group metrics.
    pub metrics_head_fraction: f64,
    /// Few-shot threshold for group metrics.
    pub metrics_omega: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Lmr,
            encoder_dims: vec![64, 64],
            batch_size: 56,
            stage1_epochs: 15,
            stage2_epochs: 15,
            lr_stage1: 1e-3,
            lr_stage2: 1e-4,
            optimizer: OptimizerChoice::Adam,
            sgd_momentum: 0.9,
            seed: 1,
            freeze_encoder_stage2: false,
            lmr: LmrSettings::default(),
            metrics_head_fraction: 0.5,
            metrics_omega: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2".into()));
        }
        if self.stage1_epochs == 0 {
            return Err(Error::Config("stage1_epochs must be positive".into()));
        }
        if self.mode.two_stage() && self.stage2_epochs == 0 {
            return Err(Error::Config(format!(
                "stage2_epochs must be positive for mode {:?}",
                self.mode
            )));
        }
        if self.lr_stage1 <= 0.0 || self.lr_stage2 <= 0.0 {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lmr.identity_mix_prob) {
            return Err(Error::Config(
                "lmr.identity_mix_prob must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.lmr.l) {
            return Err(Error::Config("lmr.l must lie in [0, 1]".into()));
        }
        if self.lmr.d <= 0.0 {
            return Err(Error::Config("lmr.d must be positive".into()));
        }
        if !(self.metrics_head_fraction > 0.0 && self.metrics_head_fraction <= 1.0) {
            return Err(Error::Config(
                "metrics_head_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn ce_allows_zero_stage2() {
        let config = TrainConfig {
            mode: Mode::Ce,
            stage2_epochs: 0,
            ..TrainConfig::default()
        };
        config.validate().unwrap();
    }

    #[test]
    fn two_stage_requires_stage2() {
        let config = TrainConfig {
            mode: Mode::Crt,
            stage2_epochs: 0,
            ..TrainConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn mode_parses() {
        assert_eq!("LMR".parse::<Mode>().unwrap(), Mode::Lmr);
        assert!("bogus".parse::<Mode>().is_err());
    }
}
