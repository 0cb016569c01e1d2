//! Replay a recorded dataset as a live 1 Hz sensor feed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::dataset::csv_io::FrameSet;
use crate::dataset::subset::FeatureSubset;
use crate::error::{DataError, StreamError};
use crate::stream::messages::{FramePayload, MessageBody, StreamMessage};
use crate::stream::transport::MessageSink;

/// What a replay run did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplaySummary {
    pub frames_sent: usize,
}

/// Publish every record as a frame message carrying the subset's raw
/// (un-normalized) channel values.
///
/// `ts` is a virtual 1 Hz clock starting at 0, one tick per record, so
/// downstream day arithmetic behaves the same at any speed. Pacing:
/// `speed_factor` of 1 spaces messages one second apart, 10 spaces them
/// 100 ms apart, and 0 is the flat-out sentinel (no pacing, for tests
/// and batch runs). Negative factors are rejected.
///
/// A sink disconnection stops the replay: the error is logged and
/// returned so callers can distinguish a finished run from a severed one.
pub fn replay(
    frames: &FrameSet,
    subset: &FeatureSubset,
    speed_factor: f64,
    sink: &mut dyn MessageSink,
) -> Result<ReplaySummary, StreamError> {
    if !speed_factor.is_finite() || speed_factor < 0.0 {
        return Err(StreamError::Data(DataError::InvalidParameter(format!(
            "speed factor must be >= 0, got {speed_factor}"
        ))));
    }
    let cols = subset.resolve(frames)?;
    let interval = if speed_factor > 0.0 {
        Some(Duration::from_secs_f64(1.0 / speed_factor))
    } else {
        None
    };

    // Pace against an absolute schedule rather than per-gap sleeps so
    // serialization cost does not accumulate as drift.
    let started = Instant::now();
    let mut sent = 0usize;
    for (i, frame) in frames.frames().iter().enumerate() {
        if let Some(interval) = interval {
            let due = started + interval * i as u32;
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        let mut values = BTreeMap::new();
        for (&c, name) in cols.iter().zip(&subset.channels) {
            values.insert(name.clone(), frame.values[c]);
        }
        let msg = StreamMessage {
            ts: i as u64,
            body: MessageBody::Frame(FramePayload {
                driver_tag: frame.driver_tag.clone(),
                values,
            }),
        };
        if let Err(e) = sink.send(&msg) {
            log::error!("replay stopping after {sent} frames: {e}");
            return Err(e);
        }
        sent += 1;
    }
    sink.flush()?;
    Ok(ReplaySummary { frames_sent: sent })
}
