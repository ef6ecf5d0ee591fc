//! Experiment harness: data loading, subset sampling, sweeps and reports.

pub mod config;
pub mod data;
pub mod report;
pub mod sampling;
pub mod sweep;
pub mod synthetic;

pub use config::{DatasetFormat, ExperimentConfig};
pub use data::{
    companion_labels_path, load_csv_matrix, load_idx, load_idx_images, load_idx_labels,
    load_labeled_csv, write_csv_matrix, write_idx, LabeledImages,
};
pub use report::{csv_string, emit_csv, emit_svg, svg_string, CSV_HEADER};
pub use sampling::{sample_subset, SplitMix64, Subset};
pub use sweep::{
    load_dataset, run_sweep, run_sweep_on, Aggregate, CellFailure, SweepReport, SweepRow,
};
pub use synthetic::synthetic_digits;
