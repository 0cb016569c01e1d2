//! The online scoring service.
//!
//! Three single-threaded stages — source reader, inference, sink
//! writer — joined by bounded queues. A full queue blocks its upstream
//! stage, so nothing is ever dropped; throughput degrades instead.
//! Inference owns all state, which keeps the output stream a pure
//! function of the input frames (heartbeats aside) and makes flat-out
//! replays byte-reproducible.

use std::collections::VecDeque;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::time::{Duration, Instant};

use crate::checkpoint::LoadedCheckpoint;
use crate::dataset::normalize::normalize;
use crate::error::StreamError;
use crate::linalg::Mat;
use crate::stream::messages::{
    AlertPayload, DailyReportPayload, FramePayload, MessageBody, PredictionPayload, StatusPayload,
    StreamMessage,
};
use crate::stream::transport::{MessageSink, MessageSource};

/// Tunables for a serve run. Defaults follow the deployed dashboard:
/// a report every 60 predictions, a 30-second heartbeat, and no alert
/// debouncing (every unsafe prediction alerts).
#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Wall-clock interval between keep-alive status messages.
    pub heartbeat: Duration,
    /// Emit a daily report after this many predictions (plus at day
    /// rollover and shutdown).
    pub report_every: u64,
    /// Minimum stream-time gap (seconds) between alerts; `None` alerts
    /// on every unsafe prediction.
    pub alert_min_gap_s: Option<u64>,
    /// Capacity of the two inter-stage queues.
    pub queue_capacity: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            heartbeat: Duration::from_secs(30),
            report_every: 60,
            alert_min_gap_s: None,
            queue_capacity: 64,
        }
    }
}

/// Counters from a completed serve run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServeSummary {
    pub frames_seen: u64,
    pub predictions: u64,
    pub alerts: u64,
    pub reports: u64,
    pub schema_rejects: u64,
}

/// Run the service until the source closes.
///
/// Every accepted frame is normalized with the checkpoint's stored
/// statistics and appended to a rolling buffer of the last `T` frames.
/// Once the buffer has filled, a prediction is emitted every `stride`
/// frames, labeled for the horizon `[window_end, window_end + T)`.
/// Unsafe predictions are followed by an alert with the same
/// coordinates. Frames whose channel set does not match the model's
/// subset flip the service to `status {inactive}` and are skipped until
/// a conforming frame arrives.
pub fn serve(
    ckpt: &LoadedCheckpoint,
    source: Box<dyn MessageSource>,
    sink: Box<dyn MessageSink>,
    opts: &ServeOptions,
) -> Result<ServeSummary, StreamError> {
    let (in_tx, in_rx) = sync_channel::<StreamMessage>(opts.queue_capacity.max(1));
    let (out_tx, out_rx) = sync_channel::<StreamMessage>(opts.queue_capacity.max(1));

    let reader = std::thread::spawn(move || {
        let mut source = source;
        loop {
            match source.recv() {
                Ok(Some(msg)) => {
                    if in_tx.send(msg).is_err() {
                        break; // inference stage gone; stop reading
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    log::warn!("source ended with error: {e}");
                    break;
                }
            }
        }
    });

    let writer = std::thread::spawn(move || -> Result<(), StreamError> {
        let mut sink = sink;
        for msg in out_rx {
            sink.send(&msg)?;
        }
        sink.flush()
    });

    let mut engine = Engine::new(ckpt, opts, out_tx);
    let run = (|| -> Result<(), StreamError> {
        engine.emit_status(0, StatusPayload::active())?;
        loop {
            engine.maybe_heartbeat()?;
            match in_rx.recv() {
                Ok(msg) => engine.handle(msg)?,
                Err(_) => break, // reader closed its end: stream over
            }
        }
        engine.final_report()
    })();

    // Close the outbound queue so the writer drains and exits, then
    // surface the most interesting failure.
    let summary = engine.finish();
    reader.join().expect("reader thread panicked");
    let writer_result = writer.join().expect("writer thread panicked");
    run?;
    writer_result?;
    Ok(summary)
}

struct Engine<'a> {
    ckpt: &'a LoadedCheckpoint,
    window_len: usize,
    stride: usize,
    report_every: u64,
    alert_min_gap_s: Option<u64>,
    heartbeat: Duration,
    out: Option<SyncSender<StreamMessage>>,

    buffer: VecDeque<Vec<f64>>,
    ts_buffer: VecDeque<u64>,
    first_ts: Option<u64>,
    last_ts: u64,
    day: Option<u64>,
    period_safe: u64,
    period_unsafe: u64,
    active: bool,
    scale_checked: bool,
    last_alert_end: Option<u64>,
    last_heartbeat: Instant,
    summary: ServeSummary,
}

impl<'a> Engine<'a> {
    fn new(ckpt: &'a LoadedCheckpoint, opts: &ServeOptions, out: SyncSender<StreamMessage>) -> Self {
        Engine {
            ckpt,
            window_len: ckpt.model.cfg.window_len,
            stride: ckpt.model.cfg.stride(),
            report_every: opts.report_every.max(1),
            alert_min_gap_s: opts.alert_min_gap_s,
            heartbeat: opts.heartbeat,
            out: Some(out),
            buffer: VecDeque::new(),
            ts_buffer: VecDeque::new(),
            first_ts: None,
            last_ts: 0,
            day: None,
            period_safe: 0,
            period_unsafe: 0,
            active: true,
            scale_checked: false,
            last_alert_end: None,
            last_heartbeat: Instant::now(),
            summary: ServeSummary::default(),
        }
    }

    fn emit(&mut self, ts: u64, body: MessageBody) -> Result<(), StreamError> {
        let out = self.out.as_ref().expect("emit after finish");
        out.send(StreamMessage { ts, body })
            .map_err(|_| StreamError::SinkDisconnected)
    }

    fn emit_status(&mut self, ts: u64, payload: StatusPayload) -> Result<(), StreamError> {
        self.emit(ts, MessageBody::Status(payload))
    }

    fn maybe_heartbeat(&mut self) -> Result<(), StreamError> {
        if self.active && self.last_heartbeat.elapsed() >= self.heartbeat {
            self.last_heartbeat = Instant::now();
            let ts = self.last_ts;
            self.emit_status(ts, StatusPayload::active())?;
        }
        Ok(())
    }

    fn handle(&mut self, msg: StreamMessage) -> Result<(), StreamError> {
        let frame = match msg.body {
            MessageBody::Frame(frame) => frame,
            other => {
                log::debug!("ignoring inbound {} message", other.kind());
                return Ok(());
            }
        };
        if !self.schema_matches(&frame) {
            self.summary.schema_rejects += 1;
            if self.active {
                self.active = false;
                log::warn!("frame at ts {} does not match the model subset", msg.ts);
                self.emit_status(
                    msg.ts,
                    StatusPayload::inactive("frame channels do not match the model subset"),
                )?;
            }
            return Ok(());
        }
        if !self.active {
            self.active = true;
            self.emit_status(msg.ts, StatusPayload::active())?;
        }

        // Day bookkeeping precedes the frame so the rollover report
        // only covers the day that just ended.
        let frame_day = msg.ts / 86400;
        match self.day {
            Some(current) if current != frame_day => self.flush_report(current)?,
            _ => {}
        }
        self.day = Some(frame_day);

        let raw: Vec<f64> = self
            .ckpt
            .subset
            .channels
            .iter()
            .map(|c| frame.values[c])
            .collect();
        if !self.scale_checked {
            self.scale_checked = true;
            if raw.iter().all(|v| (0.0..=1.0).contains(v)) {
                log::warn!(
                    "first frame's values all lie in [0, 1]; if the feed is already \
                     normalized, note that the service re-normalizes with the \
                     checkpoint's stored statistics"
                );
            }
        }
        let row = normalize(&raw, &self.ckpt.normalizer)?;

        self.buffer.push_back(row);
        self.ts_buffer.push_back(msg.ts);
        if self.buffer.len() > self.window_len {
            self.buffer.pop_front();
            self.ts_buffer.pop_front();
        }
        self.summary.frames_seen += 1;
        self.first_ts.get_or_insert(msg.ts);
        self.last_ts = msg.ts;

        let seen = self.summary.frames_seen;
        let t = self.window_len as u64;
        if seen >= t && (seen - t) % self.stride as u64 == 0 {
            self.predict()?;
        }
        Ok(())
    }

    fn schema_matches(&self, frame: &FramePayload) -> bool {
        let channels = &self.ckpt.subset.channels;
        frame.values.len() == channels.len()
            && channels.iter().all(|c| frame.values.contains_key(c))
    }

    fn predict(&mut self) -> Result<(), StreamError> {
        let rows: Vec<Vec<f64>> = self.buffer.iter().cloned().collect();
        let window = Mat::from_rows(&rows);
        let (label, probability) = self.ckpt.model.predict(&self.ckpt.graph, &window)?;

        let window_start = *self.ts_buffer.front().expect("buffer is full here");
        let window_end = *self.ts_buffer.back().expect("buffer is full here") + 1;
        let horizon_start = window_end;
        let horizon_end = window_end + self.window_len as u64;
        self.emit(
            self.last_ts,
            MessageBody::Prediction(PredictionPayload {
                label,
                probability,
                window_start,
                window_end,
                horizon_start,
                horizon_end,
            }),
        )?;
        self.summary.predictions += 1;
        if label == 1 {
            self.period_unsafe += 1;
            let suppressed = matches!(
                (self.alert_min_gap_s, self.last_alert_end),
                (Some(gap), Some(last)) if window_end.saturating_sub(last) < gap
            );
            if suppressed {
                log::debug!("alert at ts {} debounced", self.last_ts);
            } else {
                self.emit(
                    self.last_ts,
                    MessageBody::Alert(AlertPayload {
                        probability,
                        window_start,
                        window_end,
                        horizon_start,
                        horizon_end,
                    }),
                )?;
                self.summary.alerts += 1;
                self.last_alert_end = Some(window_end);
            }
        } else {
            self.period_safe += 1;
        }

        if self.period_safe + self.period_unsafe >= self.report_every {
            let day = self.day.unwrap_or(0);
            self.flush_report(day)?;
        }
        Ok(())
    }

    fn uptime(&self) -> u64 {
        match self.first_ts {
            Some(first) => self.last_ts - first + 1,
            None => 0,
        }
    }

    fn flush_report(&mut self, date: u64) -> Result<(), StreamError> {
        let payload = DailyReportPayload {
            date,
            safe_count: self.period_safe,
            unsafe_count: self.period_unsafe,
            uptime_seconds: self.uptime(),
        };
        self.period_safe = 0;
        self.period_unsafe = 0;
        self.summary.reports += 1;
        let ts = self.last_ts;
        self.emit(ts, MessageBody::DailyReport(payload))
    }

    /// The shutdown report: whatever the current period holds, even if
    /// that is zero predictions.
    fn final_report(&mut self) -> Result<(), StreamError> {
        let day = self.day.unwrap_or(0);
        self.flush_report(day)
    }

    fn finish(&mut self) -> ServeSummary {
        self.out.take(); // closes the outbound queue
        self.summary.clone()
    }
}
