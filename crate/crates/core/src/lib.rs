//! Telemetry ingestion, windowing, window descriptors and evaluation
//! protocols for flight-log anomaly detection.

pub mod csv_io;
pub mod descriptors;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod synth;
pub mod telemetry;
pub mod windowing;

pub use descriptors::{
    describe_channel, feature_columns, featurize, Descriptor, DescriptorGroup, FeatureColumn, FeatureMatrix,
    DESCRIPTORS_PER_CHANNEL,
};
pub use error::{Error, Result};
pub use telemetry::{AlignedLog, AnomalyInterval, RawLog, RawRow, Window, WindowSpec};
pub use windowing::{make_window_set, make_windows, WindowSet};
