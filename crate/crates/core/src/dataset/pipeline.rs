//! End-to-end dataset assembly: label → plan windows → split →
//! fit statistics on the training side only → materialize.
//!
//! Window placement and the train/test split are decided before any
//! statistic is fitted, so the normalizer (and the correlation rows
//! handed to the graph builder) never see frames that only the test
//! split's windows read. Note that with window-level splitting,
//! overlapping train and test windows still share frames — that mirrors
//! the evaluation protocol this reproduces; trip-level splitting avoids
//! it entirely.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, SplitGranularity};
use crate::dataset::csv_io::FrameSet;
use crate::dataset::label::{class_balance, label_frames, LabelRule};
use crate::dataset::normalize::{fit_normalizer, normalize, NormalizationStats};
use crate::dataset::subset::FeatureSubset;
use crate::dataset::window::{
    materialize_windows, plan_windows, split_indices, LabeledWindow, Split, WindowOptions,
};
use crate::error::DataError;
use crate::linalg::Mat;

/// Everything the trainer needs, derived from one frame set.
#[derive(Clone, Debug)]
pub struct DatasetBundle {
    pub subset: FeatureSubset,
    pub normalizer: NormalizationStats,
    pub train: Vec<LabeledWindow>,
    pub test: Vec<LabeledWindow>,
    /// Raw subset-projected rows of the frames the training windows read;
    /// the input for correlation-graph fitting.
    pub train_rows: Mat,
    pub frame_labels: Vec<u8>,
    pub safe_fraction: f64,
    pub unsafe_fraction: f64,
}

/// Runs the full dataset pipeline for one subset under one configuration.
pub fn assemble(
    frames: &FrameSet,
    subset: &FeatureSubset,
    rule: &LabelRule,
    cfg: &ModelConfig,
) -> Result<DatasetBundle, DataError> {
    let cols = subset.resolve(frames)?;
    let labels = label_frames(frames, rule, &cfg.speed_channel)?;
    let (safe_fraction, unsafe_fraction) = class_balance(&labels);

    let opts = WindowOptions::from_config(cfg);
    let trip_spans = frames.trip_spans();
    let specs = plan_windows(&trip_spans, &labels, &opts)?;

    let spec_labels: Vec<u8> = specs.iter().map(|s| s.label).collect();
    let (train_idx, test_idx) = match cfg.split_granularity {
        SplitGranularity::Window => split_indices(&spec_labels, cfg.train_fraction, cfg.seed)?,
        SplitGranularity::Trip => {
            let spec_trip: Vec<usize> = specs
                .iter()
                .map(|s| {
                    trip_spans
                        .iter()
                        .position(|span| span.contains(&s.start))
                        .expect("window start inside some trip")
                })
                .collect();
            split_by_trip(&spec_trip, cfg.train_fraction, cfg.seed)?
        }
    };

    // Raw subset-projected rows, one per frame.
    let raw_rows: Vec<Vec<f64>> = frames
        .frames()
        .iter()
        .map(|f| cols.iter().map(|&c| f.values[c]).collect())
        .collect();

    // Only frames read by training windows feed the fitted statistics.
    let mut in_train = vec![false; frames.len()];
    for &i in &train_idx {
        for t in 0..opts.window_len {
            in_train[specs[i].start + t] = true;
        }
    }
    let fit_rows: Vec<Vec<f64>> = raw_rows
        .iter()
        .zip(&in_train)
        .filter(|(_, &keep)| keep)
        .map(|(r, _)| r.clone())
        .collect();
    let normalizer = fit_normalizer(&fit_rows, &subset.channels)?;
    let train_rows = Mat::from_rows(&fit_rows);

    let normalized: Vec<Vec<f64>> = raw_rows
        .iter()
        .map(|r| normalize(r, &normalizer))
        .collect::<Result<_, _>>()?;

    let all = materialize_windows(&normalized, &specs, opts.window_len);
    let mut slots: Vec<Option<LabeledWindow>> = all.into_iter().map(Some).collect();
    let mut take = |idx: &[usize], split: Split| -> Vec<LabeledWindow> {
        idx.iter()
            .map(|&i| {
                let mut w = slots[i].take().expect("window assigned twice");
                w.split = split;
                w
            })
            .collect()
    };
    let train = take(&train_idx, Split::Train);
    let test = take(&test_idx, Split::Test);

    log::info!(
        "assembled {} train / {} test windows ({} channels, {:.1}% unsafe frames)",
        train.len(),
        test.len(),
        subset.channels.len(),
        unsafe_fraction * 100.0
    );

    Ok(DatasetBundle {
        subset: subset.clone(),
        normalizer,
        train,
        test,
        train_rows,
        frame_labels: labels,
        safe_fraction,
        unsafe_fraction,
    })
}

/// Assigns whole trips to one side: shuffles trips under the seed, then
/// fills the training side until it reaches the target window count.
fn split_by_trip(
    spec_trip: &[usize],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if spec_trip.is_empty() {
        return Err(DataError::Empty("no windows to split"));
    }
    if train_fraction <= 0.0 || train_fraction >= 1.0 {
        return Err(DataError::InvalidParameter(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut trips: Vec<usize> = {
        let mut seen = std::collections::BTreeSet::new();
        spec_trip.iter().filter(|&&t| seen.insert(t)).copied().collect()
    };
    if trips.len() < 2 {
        return Err(DataError::InvalidParameter(
            "trip-level split needs at least two trips".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trips.shuffle(&mut rng);

    let target = ((train_fraction * spec_trip.len() as f64).floor() as usize).max(1);
    let mut train_trips = std::collections::BTreeSet::new();
    let mut count = 0;
    for &t in &trips {
        // Stop at the target, and never absorb the final trip: the test
        // side must stay nonempty.
        if count >= target || train_trips.len() == trips.len() - 1 {
            break;
        }
        train_trips.insert(t);
        count += spec_trip.iter().filter(|&&x| x == t).count();
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &t) in spec_trip.iter().enumerate() {
        if train_trips.contains(&t) {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    log::info!(
        "trip-level split: {} train / {} test windows across {} trips",
        train.len(),
        test.len(),
        trips.len()
    );
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use crate::dataset::csv_io::SensorFrame;

    fn two_channel_trips(trip_lens: &[usize]) -> FrameSet {
        let mut frames = Vec::new();
        for (k, &len) in trip_lens.iter().enumerate() {
            for t in 0..len {
                let v = (t as f64) + (k as f64) * 10.0;
                frames.push(SensorFrame {
                    timestamp: t as u64,
                    values: vec![v % 23.0, (2.0 * v) % 17.0],
                    driver_tag: format!("{}", (b'A' + k as u8) as char),
                });
            }
        }
        FrameSet::new(vec!["speed".to_string(), "rpm".to_string()], frames)
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            window_len: 4,
            speed_channel: "speed".to_string(),
            label_mode: crate::config::LabelMode::SameWindow,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn assemble_produces_disjoint_normalized_splits() {
        let frames = two_channel_trips(&[40, 40]);
        let subset = FeatureSubset::full(&frames);
        let cfg = small_config();
        let bundle = assemble(&frames, &subset, &LabelRule::default(), &cfg).unwrap();

        assert!(!bundle.train.is_empty());
        assert!(!bundle.test.is_empty());
        let mut ids: Vec<usize> = bundle
            .train
            .iter()
            .chain(&bundle.test)
            .map(|w| w.window_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), bundle.train.len() + bundle.test.len());

        for w in bundle.train.iter().chain(&bundle.test) {
            for &v in w.data.data() {
                assert!((0.0..=1.0).contains(&v), "normalized value {v} out of range");
            }
        }
    }

    #[test]
    fn training_windows_lie_in_unit_range_without_clamping() {
        // Training frames define the min/max, so training windows must hit
        // [0,1] exactly, never via the clamp.
        let frames = two_channel_trips(&[60]);
        let subset = FeatureSubset::full(&frames);
        let cfg = small_config();
        let bundle = assemble(&frames, &subset, &LabelRule::default(), &cfg).unwrap();
        let stats = &bundle.normalizer;
        for w in &bundle.train {
            for t in 0..w.data.rows() {
                for c in 0..w.data.cols() {
                    let v = w.data.get(t, c);
                    let raw = stats.min[c] + v * (stats.max[c] - stats.min[c]);
                    assert!(raw >= stats.min[c] - 1e-9 && raw <= stats.max[c] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn assemble_is_deterministic() {
        let frames = two_channel_trips(&[40, 40]);
        let subset = FeatureSubset::full(&frames);
        let cfg = small_config();
        let a = assemble(&frames, &subset, &LabelRule::default(), &cfg).unwrap();
        let b = assemble(&frames, &subset, &LabelRule::default(), &cfg).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.normalizer, b.normalizer);
    }

    #[test]
    fn trip_level_split_keeps_trips_whole() {
        let spec_trip = vec![0, 0, 0, 1, 1, 2, 2, 2, 3, 3];
        for seed in 0..10 {
            let (train, test) = split_by_trip(&spec_trip, 0.7, seed).unwrap();
            assert!(!train.is_empty() && !test.is_empty(), "seed {seed}");
            assert_eq!(train.len() + test.len(), spec_trip.len());
            for trip in 0..4 {
                let in_train = train.iter().any(|&i| spec_trip[i] == trip);
                let in_test = test.iter().any(|&i| spec_trip[i] == trip);
                assert!(in_train ^ in_test, "seed {seed}: trip {trip} split across sides");
            }
        }
    }

    #[test]
    fn trip_level_assemble_splits_both_sides() {
        let frames = two_channel_trips(&[30, 30, 30, 30]);
        let subset = FeatureSubset::full(&frames);
        let mut cfg = small_config();
        cfg.split_granularity = SplitGranularity::Trip;
        let bundle = assemble(&frames, &subset, &LabelRule::default(), &cfg).unwrap();
        assert!(!bundle.train.is_empty());
        assert!(!bundle.test.is_empty());
    }

    #[test]
    fn trip_split_requires_multiple_trips() {
        let frames = two_channel_trips(&[60]);
        let subset = FeatureSubset::full(&frames);
        let mut cfg = small_config();
        cfg.split_granularity = SplitGranularity::Trip;
        assert!(assemble(&frames, &subset, &LabelRule::default(), &cfg).is_err());
    }
}
