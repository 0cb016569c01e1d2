//! The line-delimited message vocabulary.
//!
//! Wire form: one JSON object per line, UTF-8, shaped
//! `{"ts": <seconds>, "kind": "<kind>", "payload": {...}}`. Field order
//! is not significant and unknown fields are ignored, so the protocol
//! can grow without breaking old readers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One message on the stream. `ts` is in the stream's own time domain:
/// replay emits a virtual 1 Hz clock starting at zero, a live feed
/// would carry Unix seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamMessage {
    pub ts: u64,
    #[serde(flatten)]
    pub body: MessageBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum MessageBody {
    Frame(FramePayload),
    Prediction(PredictionPayload),
    Alert(AlertPayload),
    DailyReport(DailyReportPayload),
    Status(StatusPayload),
}

impl MessageBody {
    pub fn kind(&self) -> &'static str {
        match self {
            MessageBody::Frame(_) => "frame",
            MessageBody::Prediction(_) => "prediction",
            MessageBody::Alert(_) => "alert",
            MessageBody::DailyReport(_) => "daily_report",
            MessageBody::Status(_) => "status",
        }
    }
}

/// Raw (un-normalized) sensor values keyed by channel name. A `BTreeMap`
/// keeps serialization order deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePayload {
    pub driver_tag: String,
    pub values: BTreeMap<String, f64>,
}

/// A scored window. `window_*` spans the input frames (half-open, in
/// stream seconds); `horizon_*` is the following span the label speaks
/// for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionPayload {
    pub label: u8,
    pub probability: f64,
    pub window_start: u64,
    pub window_end: u64,
    pub horizon_start: u64,
    pub horizon_end: u64,
}

/// Raised for every unsafe prediction, immediately after it, carrying
/// the same coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlertPayload {
    pub probability: f64,
    pub window_start: u64,
    pub window_end: u64,
    pub horizon_start: u64,
    pub horizon_end: u64,
}

/// Prediction tally for one reporting period. `date` is the day index
/// of the stream clock (`ts / 86400`). Counts cover the predictions
/// since the previous report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyReportPayload {
    pub date: u64,
    pub safe_count: u64,
    pub unsafe_count: u64,
    pub uptime_seconds: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusPayload {
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl StatusPayload {
    pub fn active() -> Self {
        StatusPayload {
            state: "active".to_string(),
            reason: None,
        }
    }

    pub fn inactive(reason: impl Into<String>) -> Self {
        StatusPayload {
            state: "inactive".to_string(),
            reason: Some(reason.into()),
        }
    }
}

/// One human-readable line per message, for operator inspection.
pub fn format_human(msg: &StreamMessage) -> String {
    match &msg.body {
        MessageBody::Frame(f) => {
            format!(
                "[{:>6}] frame       driver={} channels={}",
                msg.ts,
                f.driver_tag,
                f.values.len()
            )
        }
        MessageBody::Prediction(p) => format!(
            "[{:>6}] prediction  label={} p={:.4} window=[{},{}) horizon=[{},{})",
            msg.ts, p.label, p.probability, p.window_start, p.window_end, p.horizon_start,
            p.horizon_end
        ),
        MessageBody::Alert(a) => format!(
            "[{:>6}] ALERT       unsafe driving predicted for [{},{}) (p={:.4})",
            msg.ts, a.horizon_start, a.horizon_end, a.probability
        ),
        MessageBody::DailyReport(r) => format!(
            "[{:>6}] report      day {}: safe={} unsafe={} uptime={}s",
            msg.ts, r.date, r.safe_count, r.unsafe_count, r.uptime_seconds
        ),
        MessageBody::Status(s) => format!(
            "[{:>6}] status      {}{}",
            msg.ts,
            s.state,
            s.reason
                .as_deref()
                .map(|r| format!(" ({r})"))
                .unwrap_or_default()
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> StreamMessage {
        let mut values = BTreeMap::new();
        values.insert("Vehicle speed".to_string(), 42.5);
        values.insert("Engine speed".to_string(), 1800.0);
        StreamMessage {
            ts: 7,
            body: MessageBody::Frame(FramePayload {
                driver_tag: "A".to_string(),
                values,
            }),
        }
    }

    #[test]
    fn wire_roundtrip_preserves_every_kind() {
        let msgs = vec![
            frame(),
            StreamMessage {
                ts: 10,
                body: MessageBody::Prediction(PredictionPayload {
                    label: 1,
                    probability: 0.93,
                    window_start: 0,
                    window_end: 10,
                    horizon_start: 10,
                    horizon_end: 20,
                }),
            },
            StreamMessage {
                ts: 10,
                body: MessageBody::Alert(AlertPayload {
                    probability: 0.93,
                    window_start: 0,
                    window_end: 10,
                    horizon_start: 10,
                    horizon_end: 20,
                }),
            },
            StreamMessage {
                ts: 86400,
                body: MessageBody::DailyReport(DailyReportPayload {
                    date: 0,
                    safe_count: 40,
                    unsafe_count: 20,
                    uptime_seconds: 305,
                }),
            },
            StreamMessage {
                ts: 0,
                body: MessageBody::Status(StatusPayload::active()),
            },
        ];
        for msg in msgs {
            let line = serde_json::to_string(&msg).unwrap();
            let back: StreamMessage = serde_json::from_str(&line).unwrap();
            assert_eq!(back, msg);
        }
    }

    #[test]
    fn wire_shape_has_kind_ts_payload() {
        let line = serde_json::to_string(&frame()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["kind"], "frame");
        assert_eq!(v["ts"], 7);
        assert_eq!(v["payload"]["driver_tag"], "A");
        assert_eq!(v["payload"]["values"]["Vehicle speed"], 42.5);
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let line = r#"{"ts":3,"kind":"status","payload":{"state":"active","extra":1},"trace_id":"x"}"#;
        let msg: StreamMessage = serde_json::from_str(line).unwrap();
        assert_eq!(msg.ts, 3);
        assert_eq!(msg.body.kind(), "status");
    }

    #[test]
    fn field_order_is_not_significant() {
        let line = r#"{"payload":{"state":"inactive","reason":"schema"},"kind":"status","ts":9}"#;
        let msg: StreamMessage = serde_json::from_str(line).unwrap();
        match msg.body {
            MessageBody::Status(s) => {
                assert_eq!(s.state, "inactive");
                assert_eq!(s.reason.as_deref(), Some("schema"));
            }
            other => panic!("wrong kind: {}", other.kind()),
        }
    }

    #[test]
    fn human_format_mentions_the_essentials() {
        let line = format_human(&StreamMessage {
            ts: 10,
            body: MessageBody::Alert(AlertPayload {
                probability: 0.93,
                window_start: 0,
                window_end: 10,
                horizon_start: 10,
                horizon_end: 20,
            }),
        });
        assert!(line.contains("ALERT"));
        assert!(line.contains("[10,20)"));
    }
}
