//! Per-channel min-max scaling into [0, 1].
//!
//! Statistics are fitted on the training split only; values outside the
//! fitted range (possible on the test split) are clamped so the model's
//! input domain stays fixed. Constant channels map to 0 and are reported
//! rather than dropped, keeping the graph node set stable across subsets.

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Fitted min-max statistics for an ordered channel set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub channels: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationStats {
    /// Channels whose fitted min equals their max.
    pub fn constant_channels(&self) -> Vec<&str> {
        self.channels
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .filter(|(_, (lo, hi))| lo == hi)
            .map(|(name, _)| name.as_str())
            .collect()
    }
}

/// Fits per-channel min/max over rows of training values.
///
/// `rows` must be indexed `[frame][channel]` with channels in `channels`
/// order.
pub fn fit_normalizer(rows: &[Vec<f64>], channels: &[String]) -> Result<NormalizationStats, DataError> {
    if rows.is_empty() {
        return Err(DataError::Empty("no training frames to fit normalizer"));
    }
    let n = channels.len();
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    for row in rows {
        debug_assert_eq!(row.len(), n);
        for (c, &v) in row.iter().enumerate() {
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    let stats = NormalizationStats {
        channels: channels.to_vec(),
        min,
        max,
    };
    let constant = stats.constant_channels();
    if !constant.is_empty() {
        log::warn!("constant channels (normalized to 0): {constant:?}");
    }
    Ok(stats)
}

/// Scales one frame's values into [0, 1] under the fitted statistics.
///
/// Constant channels produce 0; out-of-range values clamp to the
/// boundaries.
pub fn normalize(values: &[f64], stats: &NormalizationStats) -> Result<Vec<f64>, DataError> {
    if values.len() != stats.channels.len() {
        return Err(DataError::InvalidParameter(format!(
            "frame has {} values, normalizer fitted on {} channels",
            values.len(),
            stats.channels.len()
        )));
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(c, &v)| {
            let range = stats.max[c] - stats.min[c];
            if range == 0.0 {
                0.0
            } else {
                ((v - stats.min[c]) / range).clamp(0.0, 1.0)
            }
        })
        .collect())
}

/// Inverse of [`normalize`] for non-constant channels and unclamped inputs.
pub fn denormalize(values: &[f64], stats: &NormalizationStats) -> Result<Vec<f64>, DataError> {
    if values.len() != stats.channels.len() {
        return Err(DataError::InvalidParameter(format!(
            "frame has {} values, normalizer fitted on {} channels",
            values.len(),
            stats.channels.len()
        )));
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(c, &v)| stats.min[c] + v * (stats.max[c] - stats.min[c]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn fits_min_max_per_channel() {
        let rows = vec![vec![2.0, 10.0], vec![4.0, 30.0], vec![6.0, 20.0]];
        let stats = fit_normalizer(&rows, &names(2)).unwrap();
        assert_eq!(stats.min, [2.0, 10.0]);
        assert_eq!(stats.max, [6.0, 30.0]);
        assert!(stats.constant_channels().is_empty());
    }

    #[test]
    fn constant_channel_flagged_and_zeroed() {
        let rows = vec![vec![5.0], vec![5.0], vec![5.0]];
        let stats = fit_normalizer(&rows, &names(1)).unwrap();
        assert_eq!(stats.constant_channels(), ["c0"]);
        assert_eq!(normalize(&[5.0], &stats).unwrap(), [0.0]);
        assert_eq!(normalize(&[7.0], &stats).unwrap(), [0.0]);
    }

    #[test]
    fn midpoint_and_boundaries() {
        let stats = NormalizationStats {
            channels: names(1),
            min: vec![2.0],
            max: vec![6.0],
        };
        assert_eq!(normalize(&[4.0], &stats).unwrap(), [0.5]);
        assert_eq!(normalize(&[2.0], &stats).unwrap(), [0.0]);
        assert_eq!(normalize(&[6.0], &stats).unwrap(), [1.0]);
    }

    #[test]
    fn out_of_range_clamps() {
        let stats = NormalizationStats {
            channels: names(1),
            min: vec![2.0],
            max: vec![6.0],
        };
        assert_eq!(normalize(&[8.0], &stats).unwrap(), [1.0]);
        assert_eq!(normalize(&[0.0], &stats).unwrap(), [0.0]);
    }

    #[test]
    fn roundtrip_recovers_in_range_values() {
        let rows = vec![vec![2.0, -1.0], vec![6.0, 3.0]];
        let stats = fit_normalizer(&rows, &names(2)).unwrap();
        let x = vec![3.7, 2.2];
        let back = denormalize(&normalize(&x, &stats).unwrap(), &stats).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(fit_normalizer(&[], &names(1)).is_err());
    }

    #[test]
    fn channel_count_mismatch_rejected() {
        let stats = NormalizationStats {
            channels: names(2),
            min: vec![0.0, 0.0],
            max: vec![1.0, 1.0],
        };
        assert!(normalize(&[1.0], &stats).is_err());
    }
}
