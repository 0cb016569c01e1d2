//! Message transports: in-process queues, NDJSON files, NDJSON TCP.
//!
//! Everything above this layer talks to the two small traits, so a
//! broker binding (MQTT, say) is a drop-in extension rather than a
//! rewrite. Sources skip malformed lines with a log instead of dying:
//! a corrupt record should not take the monitoring plane down.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::mpsc::{Receiver, SyncSender, TrySendError};
use std::time::Duration;

use crate::error::StreamError;
use crate::stream::messages::StreamMessage;

/// Where messages go. `send` blocks under backpressure; it never drops.
pub trait MessageSink: Send {
    fn send(&mut self, msg: &StreamMessage) -> Result<(), StreamError>;
    fn flush(&mut self) -> Result<(), StreamError> {
        Ok(())
    }
}

/// Where messages come from. `Ok(None)` is a clean end of stream.
pub trait MessageSource: Send {
    fn recv(&mut self) -> Result<Option<StreamMessage>, StreamError>;
}

// ---------------------------------------------------------------------
// In-process bounded queue

pub struct QueueSink {
    tx: SyncSender<StreamMessage>,
}

pub struct QueueSource {
    rx: Receiver<StreamMessage>,
}

/// A bounded in-process channel pair. A full queue blocks the sender,
/// which is the backpressure contract the pipeline stages rely on.
pub fn in_process_queue(capacity: usize) -> (QueueSink, QueueSource) {
    let (tx, rx) = std::sync::mpsc::sync_channel(capacity);
    (QueueSink { tx }, QueueSource { rx })
}

impl MessageSink for QueueSink {
    fn send(&mut self, msg: &StreamMessage) -> Result<(), StreamError> {
        self.tx
            .send(msg.clone())
            .map_err(|_| StreamError::SinkDisconnected)
    }
}

impl QueueSink {
    /// Non-blocking probe used by tests to observe backpressure.
    pub fn try_send(&mut self, msg: &StreamMessage) -> Result<(), StreamError> {
        match self.tx.try_send(msg.clone()) {
            Ok(()) => Ok(()),
            Err(TrySendError::Full(_)) => Err(StreamError::Transport("queue full".to_string())),
            Err(TrySendError::Disconnected(_)) => Err(StreamError::SinkDisconnected),
        }
    }
}

impl MessageSource for QueueSource {
    fn recv(&mut self) -> Result<Option<StreamMessage>, StreamError> {
        Ok(self.rx.recv().ok())
    }
}

// ---------------------------------------------------------------------
// In-memory collection (tests and summaries)

/// Collects everything it is sent. Test helper, but also handy for
/// one-shot batch runs that want the messages back in memory.
#[derive(Default)]
pub struct BufferSink {
    pub messages: Vec<StreamMessage>,
}

impl MessageSink for BufferSink {
    fn send(&mut self, msg: &StreamMessage) -> Result<(), StreamError> {
        self.messages.push(msg.clone());
        Ok(())
    }
}

/// A clonable sink that collects into shared storage, so a pipeline
/// running on worker threads can be inspected from the outside.
#[derive(Clone, Default)]
pub struct SharedBufferSink {
    messages: std::sync::Arc<std::sync::Mutex<Vec<StreamMessage>>>,
}

impl SharedBufferSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> Vec<StreamMessage> {
        self.messages.lock().expect("sink mutex poisoned").clone()
    }
}

impl MessageSink for SharedBufferSink {
    fn send(&mut self, msg: &StreamMessage) -> Result<(), StreamError> {
        self.messages
            .lock()
            .expect("sink mutex poisoned")
            .push(msg.clone());
        Ok(())
    }
}

/// Replays a fixed message list. Test helper for driving `serve`.
pub struct VecSource {
    messages: std::vec::IntoIter<StreamMessage>,
}

impl VecSource {
    pub fn new(messages: Vec<StreamMessage>) -> Self {
        VecSource {
            messages: messages.into_iter(),
        }
    }
}

impl MessageSource for VecSource {
    fn recv(&mut self) -> Result<Option<StreamMessage>, StreamError> {
        Ok(self.messages.next())
    }
}

// ---------------------------------------------------------------------
// NDJSON over generic readers/writers

/// One JSON object per line onto any writer.
pub struct NdjsonSink<W: Write + Send> {
    writer: BufWriter<W>,
}

impl<W: Write + Send> NdjsonSink<W> {
    pub fn new(writer: W) -> Self {
        NdjsonSink {
            writer: BufWriter::new(writer),
        }
    }
}

impl<W: Write + Send> MessageSink for NdjsonSink<W> {
    fn send(&mut self, msg: &StreamMessage) -> Result<(), StreamError> {
        let line = serde_json::to_string(msg)
            .map_err(|e| StreamError::Transport(format!("serialize: {e}")))?;
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        Ok(())
    }

    fn flush(&mut self) -> Result<(), StreamError> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Parses NDJSON lines from any reader. Blank lines are skipped;
/// malformed lines are logged and skipped.
pub struct NdjsonSource<R: std::io::Read + Send> {
    reader: BufReader<R>,
    line_no: usize,
}

impl<R: std::io::Read + Send> NdjsonSource<R> {
    pub fn new(reader: R) -> Self {
        NdjsonSource {
            reader: BufReader::new(reader),
            line_no: 0,
        }
    }
}

impl<R: std::io::Read + Send> MessageSource for NdjsonSource<R> {
    fn recv(&mut self) -> Result<Option<StreamMessage>, StreamError> {
        let mut line = String::new();
        loop {
            line.clear();
            let n = self.reader.read_line(&mut line)?;
            if n == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            match serde_json::from_str::<StreamMessage>(trimmed) {
                Ok(msg) => return Ok(Some(msg)),
                Err(e) => {
                    log::warn!("skipping malformed message on line {}: {e}", self.line_no);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// File and TCP bindings

pub fn file_sink(path: &Path) -> Result<NdjsonSink<std::fs::File>, StreamError> {
    let file = std::fs::File::create(path)?;
    Ok(NdjsonSink::new(file))
}

pub fn file_source(path: &Path) -> Result<NdjsonSource<std::fs::File>, StreamError> {
    let file = std::fs::File::open(path)?;
    Ok(NdjsonSource::new(file))
}

/// Connect to a listening peer and write NDJSON to it. Retries for a
/// few seconds so a publisher can start before its consumer finishes
/// binding.
pub fn tcp_sink(addr: &str) -> Result<NdjsonSink<TcpStream>, StreamError> {
    tcp_sink_with_retry(addr, 50, Duration::from_millis(100))
}

pub fn tcp_sink_with_retry(
    addr: &str,
    attempts: u32,
    delay: Duration,
) -> Result<NdjsonSink<TcpStream>, StreamError> {
    let mut last_err: Option<std::io::Error> = None;
    for attempt in 0..attempts.max(1) {
        if attempt > 0 {
            std::thread::sleep(delay);
        }
        match TcpStream::connect(addr) {
            Ok(stream) => {
                stream.set_nodelay(true)?;
                return Ok(NdjsonSink::new(stream));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(StreamError::Transport(format!(
        "could not connect to {addr}: {}",
        last_err.expect("at least one attempt")
    )))
}

/// Bind, accept one peer, and read its NDJSON stream.
pub struct TcpSource {
    inner: Option<NdjsonSource<TcpStream>>,
    listener: TcpListener,
}

impl TcpSource {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> Result<TcpSource, StreamError> {
        let listener = TcpListener::bind(addr)?;
        Ok(TcpSource {
            inner: None,
            listener,
        })
    }

    /// The bound address, useful when binding to port 0.
    pub fn local_addr(&self) -> Result<std::net::SocketAddr, StreamError> {
        Ok(self.listener.local_addr()?)
    }
}

impl MessageSource for TcpSource {
    fn recv(&mut self) -> Result<Option<StreamMessage>, StreamError> {
        if self.inner.is_none() {
            let (stream, peer) = self.listener.accept()?;
            log::info!("accepted stream from {peer}");
            self.inner = Some(NdjsonSource::new(stream));
        }
        self.inner
            .as_mut()
            .expect("connection accepted above")
            .recv()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::messages::{MessageBody, StatusPayload};
    use std::sync::mpsc::RecvTimeoutError;

    fn status(ts: u64) -> StreamMessage {
        StreamMessage {
            ts,
            body: MessageBody::Status(StatusPayload::active()),
        }
    }

    #[test]
    fn queue_roundtrip_in_order() {
        let (mut sink, mut source) = in_process_queue(8);
        for ts in 0..5 {
            sink.send(&status(ts)).unwrap();
        }
        drop(sink);
        for ts in 0..5 {
            assert_eq!(source.recv().unwrap().unwrap().ts, ts);
        }
        assert!(source.recv().unwrap().is_none());
    }

    #[test]
    fn full_queue_applies_backpressure() {
        let (mut sink, source) = in_process_queue(2);
        sink.send(&status(0)).unwrap();
        sink.send(&status(1)).unwrap();
        // Third message cannot be queued until the consumer drains one.
        assert!(matches!(
            sink.try_send(&status(2)),
            Err(StreamError::Transport(_))
        ));
        let mut source = source;
        source.recv().unwrap();
        sink.try_send(&status(2)).unwrap();
    }

    #[test]
    fn disconnected_queue_reports_sink_gone() {
        let (mut sink, source) = in_process_queue(2);
        drop(source);
        assert!(matches!(
            sink.send(&status(0)),
            Err(StreamError::SinkDisconnected)
        ));
    }

    #[test]
    fn queue_send_blocks_until_drained() {
        let (mut sink, mut source) = in_process_queue(1);
        sink.send(&status(0)).unwrap();
        let (done_tx, done_rx) = std::sync::mpsc::channel();
        let handle = std::thread::spawn(move || {
            sink.send(&status(1)).unwrap();
            done_tx.send(()).unwrap();
        });
        // The blocked send must not complete while the queue is full.
        assert_eq!(
            done_rx.recv_timeout(Duration::from_millis(100)),
            Err(RecvTimeoutError::Timeout)
        );
        assert_eq!(source.recv().unwrap().unwrap().ts, 0);
        done_rx.recv_timeout(Duration::from_secs(5)).unwrap();
        handle.join().unwrap();
        assert_eq!(source.recv().unwrap().unwrap().ts, 1);
    }

    #[test]
    fn file_roundtrip_preserves_messages() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stream.ndjson");
        {
            let mut sink = file_sink(&path).unwrap();
            for ts in 0..3 {
                sink.send(&status(ts)).unwrap();
            }
            sink.flush().unwrap();
        }
        let mut source = file_source(&path).unwrap();
        for ts in 0..3 {
            assert_eq!(source.recv().unwrap().unwrap().ts, ts);
        }
        assert!(source.recv().unwrap().is_none());
    }

    #[test]
    fn malformed_and_blank_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dirty.ndjson");
        let good = serde_json::to_string(&status(5)).unwrap();
        std::fs::write(&path, format!("{{broken\n\n{good}\nnot json at all\n")).unwrap();
        let mut source = file_source(&path).unwrap();
        assert_eq!(source.recv().unwrap().unwrap().ts, 5);
        assert!(source.recv().unwrap().is_none());
    }

    #[test]
    fn tcp_roundtrip_over_loopback() {
        let mut source = TcpSource::bind("127.0.0.1:0").unwrap();
        let addr = source.local_addr().unwrap().to_string();
        let writer = std::thread::spawn(move || {
            let mut sink = tcp_sink(&addr).unwrap();
            for ts in 0..4 {
                sink.send(&status(ts)).unwrap();
            }
            sink.flush().unwrap();
        });
        for ts in 0..4 {
            assert_eq!(source.recv().unwrap().unwrap().ts, ts);
        }
        assert!(source.recv().unwrap().is_none());
        writer.join().unwrap();
    }

    #[test]
    fn tcp_sink_fails_cleanly_when_no_listener() {
        // Port 1 on loopback is essentially never listening; the retry
        // loop must end in a transport error, not a hang or panic.
        let result = tcp_sink_with_retry("127.0.0.1:1", 2, Duration::from_millis(10));
        assert!(matches!(result, Err(StreamError::Transport(_))));
    }
}
