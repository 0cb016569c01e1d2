//! CSV ingestion for 1 Hz in-vehicle sensor logs.
//!
//! Expected layout: a header row naming every column, one data row per
//! second, every column numeric except the final one, which carries the
//! original driver/class letter. Consecutive rows with the same letter
//! form one trip; timestamps restart at 0 on each letter change.

use std::ops::Range;
use std::path::Path;

use crate::error::DataError;

/// One second of sensor readings.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorFrame {
    /// Seconds since the start of the frame's trip.
    pub timestamp: u64,
    /// Channel values in [`FrameSet::channels`] order.
    pub values: Vec<f64>,
    /// Original class letter (A–J in the source data); metadata only.
    pub driver_tag: String,
}

/// A parsed sensor log: the shared channel ordering plus all frames.
#[derive(Clone, Debug)]
pub struct FrameSet {
    channels: Vec<String>,
    frames: Vec<SensorFrame>,
}

impl FrameSet {
    pub fn new(channels: Vec<String>, frames: Vec<SensorFrame>) -> Self {
        debug_assert!(frames.iter().all(|f| f.values.len() == channels.len()));
        FrameSet { channels, frames }
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn frames(&self) -> &[SensorFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Index of a channel, trying the exact name first and then a
    /// punctuation-insensitive match (so "Vehicle speed", "Vehicle-speed",
    /// and "Vehicle_speed" all resolve against any one spelling).
    pub fn channel_index(&self, name: &str) -> Result<usize, DataError> {
        if let Some(i) = self.channels.iter().position(|c| c == name) {
            return Ok(i);
        }
        let wanted = fold_channel_name(name);
        let mut folded = self
            .channels
            .iter()
            .enumerate()
            .filter(|(_, c)| fold_channel_name(c) == wanted);
        if let Some((i, found)) = folded.next() {
            if folded.next().is_none() {
                log::debug!("channel '{name}' resolved to '{found}' by folded match");
                return Ok(i);
            }
        }
        Err(DataError::MissingChannel(name.to_string()))
    }

    /// All values of one channel, in frame order.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.values[index]).collect()
    }

    /// Half-open frame ranges of each trip (maximal runs of one driver tag).
    pub fn trip_spans(&self) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut start = 0;
        for i in 1..self.frames.len() {
            if self.frames[i].driver_tag != self.frames[i - 1].driver_tag {
                spans.push(start..i);
                start = i;
            }
        }
        if !self.frames.is_empty() {
            spans.push(start..self.frames.len());
        }
        spans
    }
}

/// Lowercases and strips non-alphanumerics, so channel-name variants that
/// differ only in separators or case compare equal.
pub fn fold_channel_name(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

/// Loads a sensor log CSV.
///
/// When `expected_schema` is given, the numeric channel names must match it
/// exactly (same names, same order).
pub fn load_csv(path: &Path, expected_schema: Option<&[String]>) -> Result<FrameSet, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header = reader.headers()?.clone();
    if header.len() < 2 {
        return Err(DataError::Empty("header needs at least one channel and the class column"));
    }
    let n_channels = header.len() - 1;
    let channels: Vec<String> = header.iter().take(n_channels).map(str::to_string).collect();

    if let Some(expected) = expected_schema {
        if channels != expected {
            return Err(DataError::SchemaMismatch {
                expected: expected.to_vec(),
            });
        }
    }

    let mut frames: Vec<SensorFrame> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // Line number in the file (header is line 1).
        let row = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(i + 2);
        if record.len() != header.len() {
            return Err(DataError::ColumnCount {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut values = Vec::with_capacity(n_channels);
        for c in 0..n_channels {
            let raw = record[c].trim();
            let v: f64 = raw.parse().map_err(|_| DataError::NonNumeric {
                row,
                column: channels[c].clone(),
                value: raw.to_string(),
            })?;
            values.push(v);
        }
        let driver_tag = record[n_channels].trim().to_string();
        let timestamp = match frames.last() {
            Some(prev) if prev.driver_tag == driver_tag => prev.timestamp + 1,
            _ => 0,
        };
        frames.push(SensorFrame {
            timestamp,
            values,
            driver_tag,
        });
    }

    if frames.is_empty() {
        return Err(DataError::Empty("no data rows"));
    }
    Ok(FrameSet { channels, frames })
}
