//! JSON-lines container for windowed datasets.
//!
//! Line 1 is a header object describing the layout; every further line is
//! one window:
//!
//! ```text
//! {"format":"dbd-windows","version":1,"subset":"A","channels":[...],
//!  "window_len":10,"normalizer":{...}}
//! {"window_id":0,"split":"train","label":1,"data":[...]}
//! ```
//!
//! `data` is the T×n matrix in row-major order; T and the channel count
//! come from the header, so rows stay compact.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::normalize::NormalizationStats;
use crate::dataset::window::{LabeledWindow, Split};
use crate::error::DataError;
use crate::linalg::Mat;

pub const FORMAT_NAME: &str = "dbd-windows";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub format: String,
    pub version: u32,
    pub subset: String,
    pub channels: Vec<String>,
    pub window_len: usize,
    pub normalizer: NormalizationStats,
}

#[derive(Serialize, Deserialize)]
struct ContainerRow {
    window_id: usize,
    split: Split,
    label: u8,
    data: Vec<f64>,
}

/// A windowed dataset together with its layout metadata.
#[derive(Clone, Debug)]
pub struct WindowContainer {
    pub header: ContainerHeader,
    pub windows: Vec<LabeledWindow>,
}

pub fn write_container(path: &Path, container: &WindowContainer) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let io_err = |source: std::io::Error| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let json_err = |e: serde_json::Error| DataError::Container(e.to_string());

    let header_line = serde_json::to_string(&container.header).map_err(json_err)?;
    writeln!(out, "{header_line}").map_err(io_err)?;
    for w in &container.windows {
        let row = ContainerRow {
            window_id: w.window_id,
            split: w.split,
            label: w.label,
            data: w.data.data().to_vec(),
        };
        let line = serde_json::to_string(&row).map_err(json_err)?;
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_container(path: &Path) -> Result<WindowContainer, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines();

    let header_line = lines
        .next()
        .ok_or(DataError::Empty("container has no header line"))?
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    let header: ContainerHeader = serde_json::from_str(&header_line)
        .map_err(|e| DataError::Container(format!("bad header: {e}")))?;
    if header.format != FORMAT_NAME {
        return Err(DataError::Container(format!(
            "unknown format '{}'",
            header.format
        )));
    }
    if header.version != FORMAT_VERSION {
        return Err(DataError::Container(format!(
            "unsupported version {}",
            header.version
        )));
    }

    let n = header.channels.len();
    let mut windows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ContainerRow = serde_json::from_str(&line)
            .map_err(|e| DataError::Container(format!("line {}: {e}", i + 2)))?;
        if row.data.len() != header.window_len * n {
            return Err(DataError::Container(format!(
                "line {}: window has {} values, expected {}x{}",
                i + 2,
                row.data.len(),
                header.window_len,
                n
            )));
        }
        windows.push(LabeledWindow {
            window_id: row.window_id,
            split: row.split,
            label: row.label,
            data: Mat::from_vec(header.window_len, n, row.data),
        });
    }
    Ok(WindowContainer { header, windows })
}
