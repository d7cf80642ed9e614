//! Seed aggregates computed from persisted summary rows only.

use std::path::Path;

use ringsup_core::bounds::{connected_bound, RingScenario};
use ringsup_core::reachability::reachable_distance;
use ringsup_sim::SimConfig;
use serde::{Deserialize, Serialize};

use crate::stats::{mean, std_dev, std_err};

/// Standard errors allowed above a bound before a point counts as exceeding
/// it.
pub const DOMINATION_SIGMAS: f64 = 3.0;

/// One persisted run, as read back from the summary CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub seed: u64,
    pub circumference_m: f64,
    pub n_vehicles: usize,
    pub n_coop: usize,
    pub horizon_s: f64,
    pub active_fraction: f64,
    pub lemma1_bound: f64,
    pub lemma2_bound: f64,
    pub collisions: usize,
    pub n_connected: usize,
    pub inring_fraction: f64,
    pub joint_fraction: f64,
    pub connected_bound: f64,
    pub worstcase_bound: f64,
    pub trigger_rate: Option<f64>,
    pub mean_speed_mps: f64,
    pub merges: usize,
    pub forced_stops: usize,
    pub steps: usize,
}

impl SummaryRow {
    fn key(&self) -> (&str, u64, usize, usize, usize, u64) {
        (
            &self.experiment,
            self.circumference_m.to_bits(),
            self.n_vehicles,
            self.n_connected,
            self.n_coop,
            self.horizon_s.to_bits(),
        )
    }
}

pub fn read_summary(path: &Path) -> csv::Result<Vec<SummaryRow>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

/// Seed aggregate for one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub experiment: String,
    pub circumference_m: f64,
    pub n_vehicles: usize,
    pub n_connected: usize,
    pub n_coop: usize,
    pub horizon_s: f64,
    pub seeds: usize,
    pub invalid_runs: usize,
    pub active_mean: f64,
    pub active_sd: f64,
    pub inring_mean: f64,
    pub joint_mean: f64,
    pub lemma1_mean: f64,
    pub lemma2_mean: f64,
    pub connected_bound_mean: f64,
    pub worstcase_bound_mean: f64,
    /// Raw connected-AV bound with every human at the nominal reach of the
    /// default speed limit; affine in the AV count by construction.
    pub nominal_connected_bound: f64,
    pub trigger_rate_mean: f64,
    pub mean_speed_mps: f64,
    /// Mean in-ring frequency minus mean Lemma-1 bound.
    pub inring_excess: f64,
    pub inring_excess_se: f64,
    /// Mean active fraction minus mean Lemma-2 bound.
    pub active_excess: f64,
    pub active_excess_se: f64,
    /// Mean joint frequency minus mean Lemma-2 bound.
    pub joint_excess: f64,
    pub joint_excess_se: f64,
}

impl PointReport {
    fn within(excess: f64, se: f64) -> bool {
        excess <= DOMINATION_SIGMAS * se
    }

    pub fn inring_within_lemma1(&self) -> bool {
        Self::within(self.inring_excess, self.inring_excess_se)
    }

    pub fn active_within_lemma2(&self) -> bool {
        Self::within(self.active_excess, self.active_excess_se)
    }

    pub fn joint_within_lemma2(&self) -> bool {
        Self::within(self.joint_excess, self.joint_excess_se)
    }
}

/// Raw connected-AV bound with humans at the nominal reach.
pub fn nominal_connected_bound(circumference: f64, n_vehicles: usize, n_connected: usize, horizon: f64) -> f64 {
    let base = SimConfig::default();
    let reach = reachable_distance(base.network.speed_limit, base.idm.max_accel, horizon).expect("valid defaults");
    let scenario = RingScenario {
        circumference,
        hv_reach: vec![reach; n_vehicles - n_connected],
        av_lengths: vec![base.vehicle_length; n_connected],
        ..RingScenario::default()
    };
    connected_bound(&scenario).expect("valid scenario").raw
}

/// Group rows by parameter tuple, in order of first appearance.
pub fn aggregate(rows: &[SummaryRow]) -> Vec<PointReport> {
    let mut groups: Vec<Vec<&SummaryRow>> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|g| g[0].key() == row.key()) {
            Some(g) => g.push(row),
            None => groups.push(vec![row]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let col = |f: fn(&SummaryRow) -> f64| g.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let active = col(|r| r.active_fraction);
            let inring_diff = col(|r| r.inring_fraction - r.lemma1_bound);
            let active_diff = col(|r| r.active_fraction - r.lemma2_bound);
            let joint_diff = col(|r| r.joint_fraction - r.lemma2_bound);
            let rates: Vec<f64> = g.iter().filter_map(|r| r.trigger_rate).collect();
            let first = g[0];
            PointReport {
                experiment: first.experiment.clone(),
                circumference_m: first.circumference_m,
                n_vehicles: first.n_vehicles,
                n_connected: first.n_connected,
                n_coop: first.n_coop,
                horizon_s: first.horizon_s,
                seeds: g.len(),
                invalid_runs: g.iter().filter(|r| r.collisions > 0).count(),
                active_mean: mean(&active),
                active_sd: std_dev(&active),
                inring_mean: mean(&col(|r| r.inring_fraction)),
                joint_mean: mean(&col(|r| r.joint_fraction)),
                lemma1_mean: mean(&col(|r| r.lemma1_bound)),
                lemma2_mean: mean(&col(|r| r.lemma2_bound)),
                connected_bound_mean: mean(&col(|r| r.connected_bound)),
                worstcase_bound_mean: mean(&col(|r| r.worstcase_bound)),
                nominal_connected_bound: nominal_connected_bound(
                    first.circumference_m,
                    first.n_vehicles,
                    first.n_connected,
                    first.horizon_s,
                ),
                trigger_rate_mean: if rates.is_empty() { f64::NAN } else { mean(&rates) },
                mean_speed_mps: mean(&col(|r| r.mean_speed_mps)),
                inring_excess: mean(&inring_diff),
                inring_excess_se: std_err(&inring_diff),
                active_excess: mean(&active_diff),
                active_excess_se: std_err(&active_diff),
                joint_excess: mean(&joint_diff),
                joint_excess_se: std_err(&joint_diff),
            }
        })
        .collect()
}

pub fn write_points(path: &Path, points: &[PointReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Cooperative against connected supervision at one AV count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reduction {
    pub n_av: usize,
    pub seeds: usize,
    pub coop_mean: f64,
    pub connected_mean: f64,
    /// Percent of the connected-AV fraction removed by cooperation.
    pub reduction_pct: f64,
}

/// Pair cooperative and connected points with the same ring and AV count.
pub fn reductions(points: &[PointReport], coop: &str, connected: &str) -> Vec<Reduction> {
    points
        .iter()
        .filter(|p| p.experiment == coop)
        .filter_map(|c| {
            let base = points.iter().find(|b| {
                b.experiment == connected
                    && b.n_connected == c.n_coop
                    && b.n_vehicles == c.n_vehicles
                    && b.circumference_m == c.circumference_m
                    && b.horizon_s == c.horizon_s
            })?;
            Some(Reduction {
                n_av: c.n_coop,
                seeds: c.seeds.min(base.seeds),
                coop_mean: c.active_mean,
                connected_mean: base.active_mean,
                reduction_pct: 100.0 * (1.0 - c.active_mean / base.active_mean),
            })
        })
        .collect()
}

pub fn write_reductions(path: &Path, reductions: &[Reduction]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reductions {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
