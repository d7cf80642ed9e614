//! Experiment presets, seed sweeps, CSV reports and reproduction of the
//! published typical-case tables.
//!
//! Every sweep writes one summary row per run first; reports are then built
//! from that CSV, so any aggregate can be re-derived from the file alone.

pub mod presets;
pub mod report;
pub mod stats;
pub mod tables;

pub use presets::{run_preset, sweep, HarnessError, Preset, PresetOutcome};
pub use report::{PointReport, Reduction, SummaryRow};
pub use tables::{reproduce_tables, TableReport};
