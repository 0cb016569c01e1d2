//! Run configuration: model sizes, training hyperparameters, and the
//! windowing/labeling switches. Deserializes from a flat key-value file
//! (TOML via serde) so every field here is a config key.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// How a window inherits its label from per-frame labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// Unsafe if any frame in the window is unsafe.
    AnyUnsafe,
    /// Unsafe only if more than half the frames are unsafe.
    Majority,
}

/// Which frames a training label describes, relative to the input window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Label covers the same frames as the input window.
    SameWindow,
    /// Label covers the T frames immediately after the input window, so the
    /// model learns to predict the upcoming behavior from the recent past.
    Horizon,
}

/// Granularity of the train/test shuffle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitGranularity {
    /// Shuffle individual windows (overlapping windows may straddle splits).
    Window,
    /// Keep whole trips together; avoids train/test frame sharing.
    Trip,
}

/// Readout wiring from the final hidden state to the sigmoid unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Flatten the n x d_h final hidden state into one dense layer.
    Flatten,
    /// Average over nodes first, then a d_h-wide dense layer.
    MeanPool,
}

/// Full configuration for dataset assembly, training, and inference.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Hidden width of the first GConvLSTM layer.
    pub hidden1: usize,
    /// Hidden width of the second GConvLSTM layer.
    pub hidden2: usize,
    /// Number of Chebyshev coefficients per filter.
    pub cheb_k: usize,
    /// Dropout probability applied to the readout during training.
    pub dropout: f64,
    /// Window length T in frames (seconds at 1 Hz).
    pub window_len: usize,
    /// Fractional overlap between consecutive windows.
    pub overlap: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fraction of windows assigned to the training split.
    pub train_fraction: f64,
    pub window_rule: WindowRule,
    pub label_mode: LabelMode,
    pub split_granularity: SplitGranularity,
    pub readout: Readout,
    /// Decision threshold: label 1 iff p >= threshold.
    pub threshold: f64,
    /// Loss weight on the unsafe class (1.0 = unweighted).
    pub positive_class_weight: f64,
    /// Channel used for the acceleration-speed labeling rule.
    pub speed_channel: String,
    /// Estimate lambda_max by power iteration instead of fixing it at 2.
    pub estimate_lambda_max: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden1: 32,
            hidden2: 16,
            cheb_k: 3,
            dropout: 0.5,
            window_len: 10,
            overlap: 0.5,
            learning_rate: 0.001,
            epochs: 20,
            batch_size: 32,
            seed: 42,
            train_fraction: 0.8,
            window_rule: WindowRule::AnyUnsafe,
            label_mode: LabelMode::Horizon,
            split_granularity: SplitGranularity::Window,
            readout: Readout::Flatten,
            threshold: 0.5,
            positive_class_weight: 1.0,
            speed_channel: "Vehicle speed".to_string(),
            estimate_lambda_max: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(ModelError::InvalidConfig("hidden sizes must be >= 1".into()));
        }
        if self.cheb_k == 0 {
            return Err(ModelError::InvalidConfig("cheb_k must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::InvalidConfig("dropout must be in [0, 1)".into()));
        }
        if self.window_len == 0 {
            return Err(ModelError::InvalidConfig("window_len must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(ModelError::InvalidConfig("overlap must be in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.train_fraction) || self.train_fraction == 0.0 {
            return Err(ModelError::InvalidConfig(
                "train_fraction must be in (0, 1)".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.positive_class_weight <= 0.0 {
            return Err(ModelError::InvalidConfig(
                "positive_class_weight must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Window stride in frames: round(T * (1 - overlap)), at least 1.
    pub fn stride(&self) -> usize {
        ((self.window_len as f64) * (1.0 - self.overlap)).round().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reported_setup() {
        let c = ModelConfig::default();
        assert_eq!((c.hidden1, c.hidden2), (32, 16));
        assert_eq!(c.dropout, 0.5);
        assert_eq!(c.window_len, 10);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.epochs, 20);
        assert_eq!(c.train_fraction, 0.8);
        assert_eq!(c.stride(), 5);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_dropout() {
        let c = ModelConfig {
            dropout: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
