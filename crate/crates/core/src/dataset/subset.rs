//! Built-in feature subsets.
//!
//! Subset A holds the four channels readable through standard OBD-II
//! PIDs on any car; B adds two vendor-specific channels; C is the wider
//! 30-channel selection of correlated signals. Channel strings follow the
//! source dataset's header verbatim, including its duplicated-name
//! suffixes (".1") and inconsistent hyphenation — resolution against a
//! CSV header falls back to a punctuation-insensitive match only when the
//! exact string is absent and unambiguous.

use serde::{Deserialize, Serialize};

use crate::dataset::csv_io::FrameSet;
use crate::error::DataError;

const SUBSET_A: [&str; 4] = [
    "Vehicle speed",
    "Engine speed",
    "Engine load",
    "Throttle position",
];

const SUBSET_B_EXTRA: [&str; 2] = ["Steering wheel angle", "Brake pedal pressure"];

const SUBSET_C: [&str; 30] = [
    "Fuel consumption",
    "Accelerator pedal value",
    "Throttle-position-signal",
    "Short term fuel trim bank1",
    "Intake-air-pressure",
    "Absolute throttle position",
    "Engine speed",
    "Engine torque after correction",
    "Torque of friction",
    "Flywheel torque (after torque interventions)",
    "Current spark timing",
    "Engine coolant temperature",
    "Engine idle target speed'",
    "Engine torque",
    "Calculated load value",
    "Flywheel torque",
    "Torque converter speed",
    "Engine coolant temperature.1",
    "Wheel velocity front left-hand",
    "Wheel velocity rear right-hand",
    "Wheel velocity front right-hand",
    "Wheel velocity rear left-hand",
    "Torque converter turbine speed -Unfiltered",
    "Vehicle-speed",
    "Acceleration speed-longitudinal",
    "Master cylinder pressure",
    "Calculated road gradient",
    "Acceleration speed-Lateral",
    "Steering wheel speed",
    "Steering wheel angle",
];

/// An ordered channel selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub name: String,
    pub channels: Vec<String>,
}

impl FeatureSubset {
    /// The four public-PID channels.
    pub fn a() -> Self {
        FeatureSubset {
            name: "A".to_string(),
            channels: SUBSET_A.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Public channels plus steering angle and brake pressure.
    pub fn b() -> Self {
        FeatureSubset {
            name: "B".to_string(),
            channels: SUBSET_A
                .iter()
                .chain(SUBSET_B_EXTRA.iter())
                .map(|s| s.to_string())
                .collect(),
        }
    }

    /// The 30-channel correlated selection.
    pub fn c() -> Self {
        FeatureSubset {
            name: "C".to_string(),
            channels: SUBSET_C.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Every channel of a loaded frame set, in header order.
    pub fn full(frames: &FrameSet) -> Self {
        FeatureSubset {
            name: "full".to_string(),
            channels: frames.channels().to_vec(),
        }
    }

    /// Parses a subset name. `full` requires a frame set for its channel
    /// list, so only A/B/C are accepted here.
    pub fn builtin(name: &str) -> Result<Self, DataError> {
        match name.to_ascii_uppercase().as_str() {
            "A" => Ok(Self::a()),
            "B" => Ok(Self::b()),
            "C" => Ok(Self::c()),
            _ => Err(DataError::InvalidParameter(format!(
                "unknown subset '{name}' (expected A, B, or C)"
            ))),
        }
    }

    /// Resolves each channel to its column index in `frames`.
    pub fn resolve(&self, frames: &FrameSet) -> Result<Vec<usize>, DataError> {
        self.channels
            .iter()
            .map(|c| frames.channel_index(c))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::csv_io::SensorFrame;

    #[test]
    fn builtin_sizes() {
        assert_eq!(FeatureSubset::a().channels.len(), 4);
        assert_eq!(FeatureSubset::b().channels.len(), 6);
        assert_eq!(FeatureSubset::c().channels.len(), 30);
    }

    #[test]
    fn a_is_prefix_of_b() {
        let a = FeatureSubset::a();
        let b = FeatureSubset::b();
        assert_eq!(&b.channels[..4], &a.channels[..]);
    }

    #[test]
    fn c_has_no_duplicates() {
        let c = FeatureSubset::c();
        let mut seen = std::collections::HashSet::new();
        for ch in &c.channels {
            assert!(seen.insert(ch), "duplicate channel {ch}");
        }
    }

    #[test]
    fn builtin_parse_is_case_insensitive() {
        assert_eq!(FeatureSubset::builtin("a").unwrap().name, "A");
        assert!(FeatureSubset::builtin("D").is_err());
    }

    #[test]
    fn resolve_maps_to_header_positions() {
        let set = FrameSet::new(
            vec![
                "Engine load".into(),
                "Vehicle speed".into(),
                "Throttle position".into(),
                "Engine speed".into(),
            ],
            vec![SensorFrame {
                timestamp: 0,
                values: vec![0.0; 4],
                driver_tag: "A".into(),
            }],
        );
        let idx = FeatureSubset::a().resolve(&set).unwrap();
        assert_eq!(idx, [1, 3, 0, 2]);
    }

    #[test]
    fn resolve_reports_missing_channel() {
        let set = FrameSet::new(
            vec!["Vehicle speed".into()],
            vec![SensorFrame {
                timestamp: 0,
                values: vec![0.0],
                driver_tag: "A".into(),
            }],
        );
        assert!(matches!(
            FeatureSubset::a().resolve(&set),
            Err(DataError::MissingChannel(_))
        ));
    }
}
