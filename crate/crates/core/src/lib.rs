//! Driving-behavior detection from in-vehicle sensor streams.
//!
//! The crate covers the full path from raw CAN-bus CSV logs to live
//! inference:
//!
//! * [`dataset`] — CSV ingestion, speed-based safety relabeling,
//!   min-max normalization, channel subsets, sliding windows, and
//!   train/test splitting.
//! * [`graph`] — correlation-derived sensor graph and Chebyshev
//!   spectral filtering.
//! * [`nn`] — a two-layer graph-convolutional LSTM classifier with
//!   manual reverse-mode gradients and Adam training.
//! * [`eval`] — confusion-matrix metrics, ROC/AUC, and experiment
//!   reports against published baselines.
//! * [`stream`] — replay, online scoring, and monitoring over NDJSON
//!   transports (in-process, file, TCP).

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod linalg;
pub mod nn;
pub mod stream;

pub use config::ModelConfig;
pub use error::{
    CheckpointError, DataError, EvalError, ExperimentError, GraphError, ModelError, StreamError,
};
