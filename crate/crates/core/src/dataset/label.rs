//! Safe/unsafe relabeling from the speed-dependent acceleration threshold.
//!
//! The tolerated acceleration magnitude shrinks as speed grows, following
//! a quadratic in V/100 scaled by g:
//!
//! ```text
//! a_max(V) = g * (c2 * (V/100)^2 + c1 * (V/100) + c0)
//! ```
//!
//! A frame is unsafe when the observed acceleration magnitude exceeds
//! `a_max` at that frame's speed. Acceleration comes from the finite
//! difference of the speed channel over the 1 s cadence (km/h divided by
//! 3.6 to get m/s²), computed within trips so that a driver change never
//! manufactures a phantom acceleration spike.

use crate::dataset::csv_io::FrameSet;
use crate::error::DataError;

/// Coefficients of the speed-dependent acceleration tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelRule {
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Quadratic, linear, and constant coefficients of the polynomial in V/100.
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Default for LabelRule {
    fn default() -> Self {
        LabelRule {
            g: 9.81,
            c2: 0.198,
            c1: -0.592,
            c0: 0.569,
        }
    }
}

/// Maximum tolerated acceleration magnitude (m/s²) at `speed_kmh`.
pub fn max_safe_accel(rule: &LabelRule, speed_kmh: f64) -> Result<f64, DataError> {
    if speed_kmh < 0.0 {
        return Err(DataError::NegativeSpeed(speed_kmh));
    }
    let v = speed_kmh / 100.0;
    Ok(rule.g * (rule.c2 * v * v + rule.c1 * v + rule.c0))
}

/// Labels every frame 0 (safe) or 1 (unsafe).
///
/// For frame t within a trip, acceleration is `(V_t - V_{t-1}) / 3.6`
/// (m/s² at 1 Hz) and the frame is unsafe when `|a_t| > a_max(V_t)`.
/// The first frame of each trip has no difference available and inherits
/// the second frame's label; a single-frame trip gets 0.
pub fn label_frames(
    frames: &FrameSet,
    rule: &LabelRule,
    speed_channel: &str,
) -> Result<Vec<u8>, DataError> {
    if frames.len() < 2 {
        return Err(DataError::TooFewFrames {
            need: 2,
            got: frames.len(),
        });
    }
    let speed_idx = frames.channel_index(speed_channel)?;
    let speeds = frames.column(speed_idx);

    let mut labels = vec![0u8; frames.len()];
    for span in frames.trip_spans() {
        if span.len() < 2 {
            log::debug!("single-frame trip at {}..{}: labeled safe", span.start, span.end);
            continue;
        }
        for t in span.start + 1..span.end {
            let accel = (speeds[t] - speeds[t - 1]) / 3.6;
            let limit = max_safe_accel(rule, speeds[t].max(0.0))?;
            labels[t] = u8::from(accel.abs() > limit);
        }
        labels[span.start] = labels[span.start + 1];
    }
    Ok(labels)
}

/// Fraction of frames labeled 0 (safe) and 1 (unsafe).
pub fn class_balance(labels: &[u8]) -> (f64, f64) {
    let n = labels.len() as f64;
    let unsafe_n = labels.iter().filter(|&&l| l == 1).count() as f64;
    ((n - unsafe_n) / n, unsafe_n / n)
}
