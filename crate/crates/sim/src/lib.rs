//! Fixed-step microsimulation of a single-lane ring road with an on-ramp
//! that joins at a merge point and an off-ramp three quarters of a lap
//! further on.
//!
//! Every ring vehicle follows the Intelligent Driver Model. Connected AVs
//! additionally publish a one-horizon plan, and cooperative AVs hold short
//! of the merge point while a merger is on the ramp. Each step the monitor
//! evaluates the reachability-based supervision condition for every merging
//! vehicle and latches supervision until that vehicle has entered the ring.
//!
//! Runs are deterministic: placement and arrivals draw from separate ChaCha
//! streams keyed by the seed.

pub mod config;
pub mod idm;
pub mod monitor;
pub mod run;
pub mod world;

pub use config::{Census, ConfigError, CoopParams, RingNetwork, SimConfig};
pub use idm::{idm_acceleration, IdmParams};
pub use monitor::{Episode, StepRecord, SupervisionLog};
pub use run::{run, write_summary_csv, RunOutput, RunSummary, SUMMARY_CSV_HEADER};
pub use world::{Vehicle, VehicleClass, World};
