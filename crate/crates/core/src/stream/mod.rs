//! The runtime plane: replaying recorded drives as live feeds, scoring
//! them online, and watching the resulting event stream.
//!
//! Everything speaks [`messages::StreamMessage`] over the transports in
//! [`transport`]: an in-process bounded queue, NDJSON files, and NDJSON
//! over TCP. [`replay::replay`] publishes frames, [`serve::serve`] turns
//! frames into predictions/alerts/reports, and [`tail::tail`] renders
//! any feed for a terminal.

pub mod messages;
pub mod replay;
pub mod serve;
pub mod tail;
pub mod transport;

pub use messages::{
    format_human, AlertPayload, DailyReportPayload, FramePayload, MessageBody, PredictionPayload,
    StatusPayload, StreamMessage,
};
pub use replay::{replay, ReplaySummary};
pub use serve::{serve, ServeOptions, ServeSummary};
pub use tail::{parse_kinds, tail, KNOWN_KINDS};
pub use transport::{
    file_sink, file_source, in_process_queue, tcp_sink, BufferSink, MessageSink, MessageSource,
    NdjsonSink, NdjsonSource, QueueSink, QueueSource, SharedBufferSink, TcpSource, VecSource,
};
