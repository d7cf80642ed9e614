//! Whole-run driver and the per-run summary row.

use std::io::{self, Write};

use crate::config::{ConfigError, SimConfig};
use crate::monitor::SupervisionLog;
use crate::world::World;

/// Spec'd summary columns first, diagnostics after.
pub const SUMMARY_CSV_HEADER: &str = "experiment,seed,circumference_m,n_vehicles,n_coop,horizon_s,\
active_fraction,lemma1_bound,lemma2_bound,collisions,n_connected,inring_fraction,\
joint_fraction,connected_bound,worstcase_bound,trigger_rate,mean_speed_mps,merges,forced_stops,steps";

/// Time averages over the run. Bounds are clamped per step, then averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub experiment: String,
    pub seed: u64,
    pub circumference: f64,
    /// Initial ring census.
    pub n_vehicles: usize,
    pub n_coop: usize,
    pub n_connected: usize,
    pub horizon: f64,
    /// Fraction of steps with at least one supervised merge.
    pub active_fraction: f64,
    /// Union bound over every ring vehicle treated as a human driver.
    pub lemma1_bound: f64,
    /// `lemma1_bound` times the merger's on-ramp factor.
    pub lemma2_bound: f64,
    /// Connected and cooperative AVs counted by length.
    pub connected_bound: f64,
    /// Human drivers only.
    pub worstcase_bound: f64,
    /// Fraction of steps on which the in-ring condition held.
    pub inring_fraction: f64,
    /// Fraction of steps on which the on-ramp and in-ring conditions held
    /// together, without latching.
    pub joint_fraction: f64,
    /// Share of completed merges that were supervised.
    pub trigger_rate: Option<f64>,
    pub mean_speed: f64,
    pub merges: usize,
    pub forced_stops: usize,
    pub collisions: usize,
    pub steps: usize,
}

impl RunSummary {
    fn from_world(world: &World) -> Self {
        let cfg = world.config();
        let acc = world.accumulators();
        let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
        Self {
            experiment: cfg.experiment.clone(),
            seed: cfg.seed,
            circumference: cfg.network.circumference,
            n_vehicles: cfg.census.total(),
            n_coop: cfg.census.n_coop,
            n_connected: cfg.census.n_connected,
            horizon: cfg.horizon,
            active_fraction: world.log().active_fraction(),
            lemma1_bound: mean(acc.lemma1, acc.steps),
            lemma2_bound: mean(acc.lemma2, acc.steps),
            connected_bound: mean(acc.connected, acc.steps),
            worstcase_bound: mean(acc.worstcase, acc.steps),
            inring_fraction: mean(acc.inring_steps as f64, acc.steps),
            joint_fraction: world.log().joint_fraction(),
            trigger_rate: world.log().trigger_rate(),
            mean_speed: mean(acc.speed, acc.speed_samples),
            merges: acc.merges,
            forced_stops: acc.forced_stops,
            collisions: world.collisions(),
            steps: acc.steps,
        }
    }

    /// One CSV line matching [`SUMMARY_CSV_HEADER`]; floats round-trip.
    pub fn csv_row(&self) -> String {
        let rate = self.trigger_rate.map(|r| r.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.seed,
            self.circumference,
            self.n_vehicles,
            self.n_coop,
            self.horizon,
            self.active_fraction,
            self.lemma1_bound,
            self.lemma2_bound,
            self.collisions,
            self.n_connected,
            self.inring_fraction,
            self.joint_fraction,
            self.connected_bound,
            self.worstcase_bound,
            rate,
            self.mean_speed,
            self.merges,
            self.forced_stops,
            self.steps
        )
    }
}

pub fn write_summary_csv<'a, W, I>(mut out: W, rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a RunSummary>,
{
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_row())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: SupervisionLog,
    pub summary: RunSummary,
}

/// Run `config.n_steps` steps from a fresh placement.
pub fn run(config: &SimConfig) -> Result<RunOutput, ConfigError> {
    let mut world = World::new(config.clone())?;
    for _ in 0..config.n_steps {
        world.step();
    }
    let summary = RunSummary::from_world(&world);
    Ok(RunOutput {
        log: world.into_log(),
        summary,
    })
}
