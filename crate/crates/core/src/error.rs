//! Error types shared across the pipeline stages.

use thiserror::Error;

/// Errors from CSV ingestion, labeling, normalization, and windowing.
#[derive(Error, Debug)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column '{column}': non-numeric value '{value}'")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("header mismatch: expected channels {expected:?}")]
    SchemaMismatch { expected: Vec<String> },
    #[error("channel '{0}' not found in data")]
    MissingChannel(String),
    #[error("negative speed {0} km/h")]
    NegativeSpeed(f64),
    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { need: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("windows container: {0}")]
    Container(String),
}

/// Errors from sensor-graph construction and spectral filtering.
#[derive(Error, Debug)]
pub enum GraphError {
    #[error("sequences must have equal length (got {0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("need at least {need} nodes, got {got}")]
    TooFewNodes { need: usize, got: usize },
    #[error("Chebyshev order K must be >= 1")]
    InvalidOrder,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Errors from model construction, training, and inference.
#[derive(Error, Debug)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("window has {got} time steps, model expects {expected}")]
    WrongWindowLength { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Errors from checkpoint serialization.
#[derive(Error, Debug)]
pub enum CheckpointError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("graph hash mismatch: stored {stored}, computed {computed}")]
    GraphHashMismatch { stored: String, computed: String },
}

/// Errors from the streaming transports and runtime.
#[derive(Error, Debug)]
pub enum StreamError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sink disconnected")]
    SinkDisconnected,
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
}

/// Errors from the evaluation metrics.
#[derive(Error, Debug)]
pub enum EvalError {
    #[error("predictions and truths must have equal length (got {0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("ROC requires both classes present in the truth labels")]
    SingleClass,
}

/// Any failure along the experiment pipeline, tagged by stage.
#[derive(Error, Debug)]
pub enum ExperimentError {
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
}
