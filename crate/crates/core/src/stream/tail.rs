//! Operator-side stream inspection: print matching messages as text.

use std::io::Write;

use crate::error::StreamError;
use crate::stream::messages::format_human;
use crate::stream::transport::MessageSource;

pub const KNOWN_KINDS: [&str; 5] = ["frame", "prediction", "alert", "daily_report", "status"];

/// Parse a comma-separated kind list (`"prediction,alert"`). Unknown
/// names are rejected so typos do not silently filter everything out.
pub fn parse_kinds(list: &str) -> Result<Vec<String>, StreamError> {
    let mut kinds = Vec::new();
    for raw in list.split(',') {
        let kind = raw.trim().to_ascii_lowercase();
        if kind.is_empty() {
            continue;
        }
        if !KNOWN_KINDS.contains(&kind.as_str()) {
            return Err(StreamError::Transport(format!(
                "unknown message kind '{kind}' (expected one of {})",
                KNOWN_KINDS.join(", ")
            )));
        }
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    Ok(kinds)
}

/// Print one formatted line per matching message until the source
/// closes. An empty kind list matches everything. Returns the number of
/// lines printed.
pub fn tail(
    source: &mut dyn MessageSource,
    kinds: &[String],
    out: &mut dyn Write,
) -> Result<usize, StreamError> {
    let mut printed = 0usize;
    while let Some(msg) = source.recv()? {
        if !kinds.is_empty() && !kinds.iter().any(|k| k == msg.body.kind()) {
            continue;
        }
        writeln!(out, "{}", format_human(&msg))?;
        printed += 1;
    }
    out.flush()?;
    Ok(printed)
}
