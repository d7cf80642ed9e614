//! The three experiment sweeps and their parallel execution.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use ringsup_sim::{run, write_summary_csv, Census, ConfigError, RingNetwork, RunSummary, SimConfig};

use crate::report::{self, PointReport, Reduction, SummaryRow};

pub const EXP1_HORIZONS: [f64; 4] = [2.0, 4.0, 6.0, 8.0];
pub const EXP1_VEHICLES: [usize; 4] = [6, 12, 18, 24];
pub const EXP1_CIRCUMFERENCES: [f64; 3] = [600.0, 1200.0, 2400.0];

/// Ring vehicles in the connected-AV replacement sweep.
pub const EXP2_VEHICLES: usize = 18;
pub const EXP3_CIRCUMFERENCE: f64 = 3200.0;
pub const EXP3_VEHICLES: usize = 32;
pub const EXP3_HORIZON: f64 = 8.0;
pub const EXP3_AV_COUNTS: std::ops::RangeInclusive<usize> = 1..=5;

pub const EXP3_COOP: &str = "exp3-coop";
pub const EXP3_CONNECTED: &str = "exp3-connected";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Human drivers only; horizon, density and ring size varied.
    Exp1,
    /// 18 vehicles with 0 to 18 of them connected AVs.
    Exp2,
    /// Cooperative AVs against a connected-AV baseline on common random
    /// numbers.
    Exp3,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exp1 => "exp1",
            Self::Exp2 => "exp2",
            Self::Exp3 => "exp3",
        }
    }

    pub fn default_seeds(self) -> u64 {
        match self {
            Self::Exp1 => 20,
            Self::Exp2 => 10,
            Self::Exp3 => 7,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp1" => Ok(Self::Exp1),
            "exp2" => Ok(Self::Exp2),
            "exp3" => Ok(Self::Exp3),
            other => Err(format!("unknown preset {other:?}; expected exp1, exp2 or exp3")),
        }
    }
}

fn with_ring(experiment: &str, seed: u64, circumference: f64, horizon: f64, census: Census) -> SimConfig {
    let base = SimConfig::default();
    let net = base.network;
    SimConfig {
        experiment: experiment.into(),
        seed,
        horizon,
        network: RingNetwork::new(circumference, net.merge_point, net.onramp_length, net.speed_limit),
        census,
        ..base
    }
}

/// Every run of a preset, seeds innermost. Seeds are `0..seeds`.
pub fn sweep(preset: Preset, seeds: u64) -> Vec<SimConfig> {
    let mut out = Vec::new();
    let base = SimConfig::default();
    match preset {
        Preset::Exp1 => {
            for &t in &EXP1_HORIZONS {
                for &n in &EXP1_VEHICLES {
                    for &c in &EXP1_CIRCUMFERENCES {
                        for seed in 0..seeds {
                            let census = Census { n_hv: n, ..Census::default() };
                            out.push(with_ring("exp1", seed, c, t, census));
                        }
                    }
                }
            }
        }
        Preset::Exp2 => {
            for s in 0..=EXP2_VEHICLES {
                for seed in 0..seeds {
                    let census = Census {
                        n_hv: EXP2_VEHICLES - s,
                        n_connected: s,
                        n_coop: 0,
                    };
                    out.push(with_ring("exp2", seed, base.network.circumference, base.horizon, census));
                }
            }
        }
        Preset::Exp3 => {
            for s in EXP3_AV_COUNTS {
                for seed in 0..seeds {
                    let n_hv = EXP3_VEHICLES - s;
                    let coop = Census { n_hv, n_connected: 0, n_coop: s };
                    let connected = Census { n_hv, n_connected: s, n_coop: 0 };
                    out.push(with_ring(EXP3_COOP, seed, EXP3_CIRCUMFERENCE, EXP3_HORIZON, coop));
                    out.push(with_ring(EXP3_CONNECTED, seed, EXP3_CIRCUMFERENCE, EXP3_HORIZON, connected));
                }
            }
        }
    }
    out
}

/// Run independent worlds in parallel; the result keeps the input order.
pub fn run_all(configs: &[SimConfig]) -> Result<Vec<RunSummary>, ConfigError> {
    configs.par_iter().map(|cfg| run(cfg).map(|o| o.summary)).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Files written by [`run_preset`] and the aggregates read back from them.
#[derive(Debug, Clone)]
pub struct PresetOutcome {
    pub summary_path: PathBuf,
    pub report_path: PathBuf,
    /// Written for exp3 only.
    pub reduction_path: Option<PathBuf>,
    pub rows: Vec<SummaryRow>,
    pub points: Vec<PointReport>,
    pub reductions: Vec<Reduction>,
}

impl PresetOutcome {
    /// Runs with at least one collision. They stay in the report, flagged,
    /// and make the command exit nonzero.
    pub fn invalid_runs(&self) -> usize {
        self.rows.iter().filter(|r| r.collisions > 0).count()
    }
}

/// Run a preset, persist one summary row per run, then build the comparison
/// report from the persisted rows alone.
pub fn run_preset(preset: Preset, seeds: u64, out_dir: &Path) -> Result<PresetOutcome, HarnessError> {
    fs::create_dir_all(out_dir)?;
    let summaries = run_all(&sweep(preset, seeds))?;
    let summary_path = out_dir.join(format!("{preset}_summary.csv"));
    write_summary_csv(BufWriter::new(File::create(&summary_path)?), &summaries)?;

    let rows = report::read_summary(&summary_path)?;
    let points = report::aggregate(&rows);
    let report_path = out_dir.join(format!("{preset}_report.csv"));
    report::write_points(&report_path, &points)?;

    let (reduction_path, reductions) = if preset == Preset::Exp3 {
        let reductions = report::reductions(&points, EXP3_COOP, EXP3_CONNECTED);
        let path = out_dir.join("exp3_reduction.csv");
        report::write_reductions(&path, &reductions)?;
        (Some(path), reductions)
    } else {
        (None, Vec::new())
    };
    Ok(PresetOutcome {
        summary_path,
        report_path,
        reduction_path,
        rows,
        points,
        reductions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_sizes() {
        assert_eq!(sweep(Preset::Exp1, 20).len(), 4 * 4 * 3 * 20);
        assert_eq!(sweep(Preset::Exp2, 10).len(), 19 * 10);
        assert_eq!(sweep(Preset::Exp3, 7).len(), 5 * 7 * 2);
    }

    #[test]
    fn exp3_pairs_share_everything_but_the_av_kind() {
        let runs = sweep(Preset::Exp3, 2);
        for pair in runs.chunks(2) {
            let (coop, conn) = (&pair[0], &pair[1]);
            assert_eq!(coop.seed, conn.seed);
            assert_eq!(coop.census.total(), EXP3_VEHICLES);
            assert_eq!(coop.census.n_coop, conn.census.n_connected);
            assert_eq!(coop.network, conn.network);
        }
    }

    #[test]
    fn every_sweep_config_is_valid() {
        for p in [Preset::Exp1, Preset::Exp2, Preset::Exp3] {
            for cfg in sweep(p, 1) {
                cfg.validate().unwrap();
            }
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for p in [Preset::Exp1, Preset::Exp2, Preset::Exp3] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("exp4".parse::<Preset>().is_err());
    }
}
