//! `tcp:host:port` / `file:path` endpoint addresses.

use std::path::PathBuf;
use std::str::FromStr;

use dbd_core::stream::{
    file_sink, file_source, tcp_sink, MessageSink, MessageSource, TcpSource,
};
use dbd_core::StreamError;

/// Where a stream lives. On the wire this is NDJSON either way; the
/// TCP direction depends on the role: sinks connect to a listening
/// peer, sources bind and accept one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    File(PathBuf),
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(addr) = s.strip_prefix("tcp:") {
            if addr.rsplit_once(':').is_none() {
                return Err(format!("'{addr}' is not host:port"));
            }
            Ok(Endpoint::Tcp(addr.to_string()))
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file endpoint needs a path".to_string());
            }
            Ok(Endpoint::File(PathBuf::from(path)))
        } else {
            Err(format!(
                "'{s}' is neither tcp:host:port nor file:path"
            ))
        }
    }
}

impl Endpoint {
    pub fn open_sink(&self) -> Result<Box<dyn MessageSink>, StreamError> {
        match self {
            Endpoint::Tcp(addr) => Ok(Box::new(tcp_sink(addr)?)),
            Endpoint::File(path) => Ok(Box::new(file_sink(path)?)),
        }
    }

    pub fn open_source(&self) -> Result<Box<dyn MessageSource>, StreamError> {
        match self {
            Endpoint::Tcp(addr) => Ok(Box::new(TcpSource::bind(addr.as_str())?)),
            Endpoint::File(path) => Ok(Box::new(file_source(path)?)),
        }
    }
}
