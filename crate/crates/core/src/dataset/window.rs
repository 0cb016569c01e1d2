//! Sliding-window extraction and train/test splitting.
//!
//! Windows of T consecutive frames are cut per trip on a fixed stride
//! grid (`stride = round(T * (1 - overlap))`), with one extra window
//! anchored at the trip's end so trailing frames are always covered.
//! Windows never span trip boundaries.
//!
//! A window's label aggregates its label frames: either the same T frames
//! (`same_window`) or the T frames that immediately follow (`horizon`),
//! matching a runtime that predicts the coming ten seconds from the last
//! ten. Aggregation is any-unsafe by default — one unsafe frame marks the
//! whole window unsafe — with majority vote available as an alternative.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{LabelMode, ModelConfig, WindowRule};
use crate::dataset::csv_io::FrameSet;
use crate::error::DataError;
use crate::linalg::Mat;

/// Which side of the train/test split a window landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Window placement and labeling parameters.
#[derive(Clone, Copy, Debug)]
pub struct WindowOptions {
    pub window_len: usize,
    pub overlap: f64,
    pub rule: WindowRule,
    pub label_mode: LabelMode,
}

impl WindowOptions {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        WindowOptions {
            window_len: cfg.window_len,
            overlap: cfg.overlap,
            rule: cfg.window_rule,
            label_mode: cfg.label_mode,
        }
    }

    pub fn stride(&self) -> usize {
        ((self.window_len as f64) * (1.0 - self.overlap)).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.window_len == 0 {
            return Err(DataError::InvalidParameter("window_len must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(DataError::InvalidParameter(format!(
                "overlap must be in [0, 1), got {}",
                self.overlap
            )));
        }
        Ok(())
    }
}

/// A planned window: input frames `[start, start+T)`, label already
/// aggregated. Carries no data so placement can precede normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    /// Absolute index of the first input frame.
    pub start: usize,
    pub label: u8,
}

/// A materialized window: T×n matrix plus label and split assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledWindow {
    pub window_id: usize,
    pub split: Split,
    pub label: u8,
    /// T rows by n channels.
    pub data: Mat,
}

/// Aggregates frame labels into one window label.
pub fn aggregate_label(labels: &[u8], rule: WindowRule) -> u8 {
    let unsafe_n = labels.iter().filter(|&&l| l == 1).count();
    match rule {
        WindowRule::AnyUnsafe => u8::from(unsafe_n > 0),
        WindowRule::Majority => u8::from(2 * unsafe_n > labels.len()),
    }
}

/// Relative window starts within a trip of `len` frames: every multiple of
/// `stride` strictly before the last feasible start, plus the last start
/// itself so the trip's tail is covered.
fn starts(len: usize, input_span: usize, stride: usize) -> Vec<usize> {
    if len < input_span {
        return Vec::new();
    }
    let last = len - input_span;
    let mut out: Vec<usize> = (0..).map(|k| k * stride).take_while(|&s| s < last).collect();
    out.push(last);
    out
}

/// Plans windows over every trip.
///
/// In `horizon` mode a window needs T further frames after its input
/// range, so trips shorter than 2T yield nothing.
pub fn plan_windows(
    trip_spans: &[Range<usize>],
    labels: &[u8],
    opts: &WindowOptions,
) -> Result<Vec<WindowSpec>, DataError> {
    opts.validate()?;
    let t = opts.window_len;
    let stride = opts.stride();
    let input_span = match opts.label_mode {
        LabelMode::SameWindow => t,
        LabelMode::Horizon => 2 * t,
    };

    let mut specs = Vec::new();
    for span in trip_spans {
        for rel in starts(span.len(), input_span, stride) {
            let s = span.start + rel;
            let label_range = match opts.label_mode {
                LabelMode::SameWindow => s..s + t,
                LabelMode::Horizon => s + t..s + 2 * t,
            };
            specs.push(WindowSpec {
                start: s,
                label: aggregate_label(&labels[label_range], opts.rule),
            });
        }
    }
    if specs.is_empty() {
        let longest = trip_spans.iter().map(Range::len).max().unwrap_or(0);
        return Err(DataError::TooFewFrames {
            need: input_span,
            got: longest,
        });
    }
    Ok(specs)
}

/// Fills planned windows with data rows (`rows[frame][channel]`, already
/// subset-projected and normalized). All windows start on the train split;
/// [`split_dataset`] reassigns them.
pub fn materialize_windows(rows: &[Vec<f64>], specs: &[WindowSpec], window_len: usize) -> Vec<LabeledWindow> {
    let n = rows.first().map_or(0, Vec::len);
    specs
        .iter()
        .enumerate()
        .map(|(id, spec)| {
            let mut data = Mat::zeros(window_len, n);
            for t in 0..window_len {
                for c in 0..n {
                    data.set(t, c, rows[spec.start + t][c]);
                }
            }
            LabeledWindow {
                window_id: id,
                split: Split::Train,
                label: spec.label,
                data,
            }
        })
        .collect()
}

/// Cuts labeled windows directly from a frame set (values used as-is).
pub fn make_windows(
    frames: &FrameSet,
    labels: &[u8],
    opts: &WindowOptions,
) -> Result<Vec<LabeledWindow>, DataError> {
    let specs = plan_windows(&frames.trip_spans(), labels, opts)?;
    let rows: Vec<Vec<f64>> = frames.frames().iter().map(|f| f.values.clone()).collect();
    Ok(materialize_windows(&rows, &specs, opts.window_len))
}

/// Deterministic seeded partition of `n` items into train/test index sets.
///
/// After the shuffle-and-cut, one swap per class repairs a split that
/// lost a class entirely, when the other side can spare a window; an
/// unrepairable miss (class with a single window, or a split of size 1)
/// is logged instead.
pub fn split_indices(labels: &[u8], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    let n = labels.len();
    if n == 0 {
        return Err(DataError::Empty("no windows to split"));
    }
    if !(0.0..=1.0).contains(&train_fraction) || train_fraction == 0.0 || train_fraction == 1.0 {
        return Err(DataError::InvalidParameter(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if n == 1 {
        log::warn!("single window: train split takes it, test split is empty");
        return Ok((vec![0], vec![]));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let train_count = ((train_fraction * n as f64).floor() as usize).clamp(1, n - 1);
    let mut train = order[..train_count].to_vec();
    let mut test = order[train_count..].to_vec();

    for class in [0u8, 1u8] {
        if !labels.contains(&class) {
            continue;
        }
        repair_class(&mut train, &mut test, labels, class);
        repair_class(&mut test, &mut train, labels, class);
    }
    Ok((train, test))
}

/// If `lacking` has no window of `class` and `donor` has at least two,
/// swaps one in (for the first window of the other class).
fn repair_class(lacking: &mut [usize], donor: &mut [usize], labels: &[u8], class: u8) {
    if lacking.iter().any(|&i| labels[i] == class) {
        return;
    }
    let donor_pos = {
        let mut found = donor.iter().enumerate().filter(|(_, &i)| labels[i] == class);
        match (found.next(), found.next()) {
            (Some((p, _)), Some(_)) => p,
            _ => {
                log::warn!("class {class} cannot be represented in both splits");
                return;
            }
        }
    };
    match lacking.iter().position(|&i| labels[i] != class) {
        Some(p) => std::mem::swap(&mut lacking[p], &mut donor[donor_pos]),
        None => log::warn!("class {class} cannot be represented in both splits"),
    }
}

/// Splits windows into train and test sets, stamping each window's
/// `split` field.
pub fn split_dataset(
    windows: Vec<LabeledWindow>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledWindow>, Vec<LabeledWindow>), DataError> {
    let labels: Vec<u8> = windows.iter().map(|w| w.label).collect();
    let (train_idx, test_idx) = split_indices(&labels, train_fraction, seed)?;
    let mut slots: Vec<Option<LabeledWindow>> = windows.into_iter().map(Some).collect();
    let take = |slots: &mut Vec<Option<LabeledWindow>>, idx: &[usize], split: Split| {
        idx.iter()
            .map(|&i| {
                let mut w = slots[i].take().expect("index used twice");
                w.split = split;
                w
            })
            .collect::<Vec<_>>()
    };
    let train = take(&mut slots, &train_idx, Split::Train);
    let test = take(&mut slots, &test_idx, Split::Test);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::csv_io::SensorFrame;

    fn opts(t: usize, overlap: f64, rule: WindowRule, mode: LabelMode) -> WindowOptions {
        WindowOptions {
            window_len: t,
            overlap,
            rule,
            label_mode: mode,
        }
    }

    fn single_trip_frames(f: usize) -> FrameSet {
        FrameSet::new(
            vec!["x".to_string()],
            (0..f)
                .map(|t| SensorFrame {
                    timestamp: t as u64,
                    values: vec![t as f64],
                    driver_tag: "A".to_string(),
                })
                .collect(),
        )
    }

    #[test]
    fn twenty_frames_make_three_windows() {
        let frames = single_trip_frames(20);
        let labels = vec![0u8; 20];
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::SameWindow);
        let ws = make_windows(&frames, &labels, &o).unwrap();
        let starts: Vec<usize> = ws.iter().map(|w| w.data.get(0, 0) as usize).collect();
        assert_eq!(starts, [0, 5, 10]);
        assert!(ws.iter().all(|w| w.data.rows() == 10));
    }

    #[test]
    fn window_count_formula_holds() {
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::SameWindow);
        let stride = o.stride();
        assert_eq!(stride, 5);
        for f in [10usize, 11, 14, 15, 16, 20, 23, 94] {
            let frames = single_trip_frames(f);
            let labels = vec![0u8; f];
            let ws = make_windows(&frames, &labels, &o).unwrap();
            let expected = (f - 10).div_ceil(stride) + 1;
            assert_eq!(ws.len(), expected, "frame count {f}");
        }
    }

    #[test]
    fn any_unsafe_marks_window() {
        let frames = single_trip_frames(10);
        let mut labels = vec![0u8; 10];
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::SameWindow);
        assert_eq!(make_windows(&frames, &labels, &o).unwrap()[0].label, 0);
        labels[7] = 1;
        assert_eq!(make_windows(&frames, &labels, &o).unwrap()[0].label, 1);
    }

    #[test]
    fn majority_needs_strict_majority() {
        assert_eq!(aggregate_label(&[1, 1, 1, 0, 0], WindowRule::Majority), 1);
        assert_eq!(aggregate_label(&[1, 1, 0, 0], WindowRule::Majority), 0);
        assert_eq!(aggregate_label(&[1, 0, 0, 0], WindowRule::AnyUnsafe), 1);
    }

    #[test]
    fn removing_unsafe_frames_relabels_safe() {
        let labels = [0u8, 1, 0, 1, 0];
        assert_eq!(aggregate_label(&labels, WindowRule::AnyUnsafe), 1);
        let only_safe: Vec<u8> = labels.iter().copied().filter(|&l| l == 0).collect();
        assert_eq!(aggregate_label(&only_safe, WindowRule::AnyUnsafe), 0);
    }

    #[test]
    fn windows_never_cross_trips() {
        let mut frames = Vec::new();
        for (tag, len) in [("A", 12usize), ("B", 11usize)] {
            for t in 0..len {
                frames.push(SensorFrame {
                    timestamp: t as u64,
                    values: vec![0.0],
                    driver_tag: tag.to_string(),
                });
            }
        }
        let set = FrameSet::new(vec!["x".to_string()], frames);
        let labels = vec![0u8; set.len()];
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::SameWindow);
        let specs = plan_windows(&set.trip_spans(), &labels, &o).unwrap();
        // Trip A (12 frames): starts 0, 2. Trip B (11 frames): starts 12, 13.
        let starts: Vec<usize> = specs.iter().map(|s| s.start).collect();
        assert_eq!(starts, [0, 2, 12, 13]);
    }

    #[test]
    fn horizon_mode_labels_from_following_frames() {
        let frames = single_trip_frames(20);
        let mut labels = vec![0u8; 20];
        labels[15] = 1; // inside [10, 20): the horizon of the window at 0
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::Horizon);
        let ws = make_windows(&frames, &labels, &o).unwrap();
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].label, 1);
        assert_eq!(ws[0].data.get(0, 0), 0.0); // input is [0, 10)
    }

    #[test]
    fn horizon_mode_needs_two_windows_of_frames() {
        let frames = single_trip_frames(19);
        let labels = vec![0u8; 19];
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::Horizon);
        assert!(matches!(
            make_windows(&frames, &labels, &o),
            Err(DataError::TooFewFrames { need: 20, got: 19 })
        ));
    }

    #[test]
    fn too_few_frames_rejected() {
        let frames = single_trip_frames(7);
        let labels = vec![0u8; 7];
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::SameWindow);
        assert!(matches!(
            make_windows(&frames, &labels, &o),
            Err(DataError::TooFewFrames { need: 10, got: 7 })
        ));
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 3 == 0)).collect();
        let (train, test) = split_indices(&labels, 0.8, 42).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_deterministic_under_seed() {
        let labels = vec![0u8; 50];
        let a = split_indices(&labels, 0.8, 7).unwrap();
        let b = split_indices(&labels, 0.8, 7).unwrap();
        assert_eq!(a, b);
        let c = split_indices(&labels, 0.8, 8).unwrap();
        assert_ne!(a, c, "different seeds should shuffle differently");
    }

    #[test]
    fn both_splits_see_both_classes_when_feasible() {
        // One unsafe window among 20 can only live on one side; two can be
        // repaired onto both.
        let mut labels = vec![0u8; 20];
        labels[3] = 1;
        labels[11] = 1;
        for seed in 0..20 {
            let (train, test) = split_indices(&labels, 0.8, seed).unwrap();
            assert!(train.iter().any(|&i| labels[i] == 1), "seed {seed}: train lost class 1");
            assert!(test.iter().any(|&i| labels[i] == 1), "seed {seed}: test lost class 1");
            assert!(train.iter().any(|&i| labels[i] == 0), "seed {seed}: train lost class 0");
            assert!(test.iter().any(|&i| labels[i] == 0), "seed {seed}: test lost class 0");
        }
    }

    #[test]
    fn lopsided_fraction_still_splits() {
        let labels = vec![0u8; 10];
        let (train, test) = split_indices(&labels, 0.999, 1).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));
    }

    #[test]
    fn split_dataset_stamps_split_field() {
        let frames = single_trip_frames(40);
        let labels = vec![0u8; 40];
        let o = opts(10, 0.5, WindowRule::AnyUnsafe, LabelMode::SameWindow);
        let ws = make_windows(&frames, &labels, &o).unwrap();
        let total = ws.len();
        let (train, test) = split_dataset(ws, 0.8, 3).unwrap();
        assert_eq!(train.len() + test.len(), total);
        assert!(train.iter().all(|w| w.split == Split::Train));
        assert!(test.iter().all(|w| w.split == Split::Test));
    }

    #[test]
    fn empty_split_rejected() {
        assert!(matches!(
            split_indices(&[], 0.8, 0),
            Err(DataError::Empty(_))
        ));
    }
}
