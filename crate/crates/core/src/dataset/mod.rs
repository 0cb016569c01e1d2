//! Dataset ingestion and preparation.
//!
//! The stages, in pipeline order: [`csv_io`] parses 1 Hz sensor logs,
//! [`label`] marks each frame safe/unsafe from the speed-dependent
//! acceleration tolerance, [`subset`] selects channel groups, [`window`]
//! cuts overlapping windows and splits them train/test, [`normalize`]
//! scales channels into [0, 1] on training statistics, and [`container`]
//! persists the result. [`pipeline::assemble`] runs the whole chain in a
//! leakage-safe order.

pub mod container;
pub mod csv_io;
pub mod label;
pub mod normalize;
pub mod pipeline;
pub mod subset;
pub mod window;

pub use container::{read_container, write_container, ContainerHeader, WindowContainer};
pub use csv_io::{load_csv, FrameSet, SensorFrame};
pub use label::{class_balance, label_frames, max_safe_accel, LabelRule};
pub use normalize::{denormalize, fit_normalizer, normalize, NormalizationStats};
pub use pipeline::{assemble, DatasetBundle};
pub use subset::FeatureSubset;
pub use window::{
    aggregate_label, make_windows, split_dataset, split_indices, LabeledWindow, Split,
    WindowOptions, WindowSpec,
};
