//! Per-step supervision records and per-merge episodes.

use std::collections::BTreeMap;
use std::io::{self, Write};

/// Identifier of a vehicle, unique within a run.
pub type VehicleId = u64;

/// One row of the per-step log. Steps without a merging vehicle on the ramp
/// produce a single row with `merging_id == None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub merging_id: Option<VehicleId>,
    pub onramp_condition: bool,
    pub inring_condition: bool,
    pub supervised: bool,
}

/// One merging vehicle's stay on the ramp, in steps. `end` is `None` while
/// the vehicle is still on the ramp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Episode {
    pub vehicle: VehicleId,
    pub start: usize,
    pub end: Option<usize>,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SupervisionLog {
    pub records: Vec<StepRecord>,
    pub episodes: Vec<Episode>,
    open: BTreeMap<VehicleId, usize>,
    n_steps: usize,
    supervised_steps: usize,
    joint_steps: usize,
}

pub const STEP_CSV_HEADER: &str = "step,time_s,merging_id,onramp_cond,inring_cond,supervised";

impl SupervisionLog {
    pub fn open_episode(&mut self, vehicle: VehicleId, step: usize) {
        self.open.insert(vehicle, self.episodes.len());
        self.episodes.push(Episode {
            vehicle,
            start: step,
            end: None,
            triggered: false,
        });
    }

    pub fn close_episode(&mut self, vehicle: VehicleId, step: usize) {
        if let Some(i) = self.open.remove(&vehicle) {
            self.episodes[i].end = Some(step);
        }
    }

    /// Whether `vehicle`'s open episode has already triggered.
    pub fn is_latched(&self, vehicle: VehicleId) -> bool {
        self.open
            .get(&vehicle)
            .is_some_and(|&i| self.episodes[i].triggered)
    }

    /// Record one step. `merging` holds `(id, onramp_condition)` for every
    /// vehicle on the ramp; supervision latches per episode.
    pub fn record_step(&mut self, step: usize, time: f64, inring: bool, merging: &[(VehicleId, bool)]) {
        self.n_steps += 1;
        if merging.is_empty() {
            self.records.push(StepRecord {
                step,
                time,
                merging_id: None,
                onramp_condition: false,
                inring_condition: inring,
                supervised: false,
            });
            return;
        }
        let mut any = false;
        let mut joint = false;
        for &(id, onramp) in merging {
            joint |= onramp && inring;
            let episode = self
                .open
                .get(&id)
                .map(|&i| &mut self.episodes[i])
                .expect("merging vehicle has an open episode");
            episode.triggered |= onramp && inring;
            any |= episode.triggered;
            self.records.push(StepRecord {
                step,
                time,
                merging_id: Some(id),
                onramp_condition: onramp,
                inring_condition: inring,
                supervised: episode.triggered,
            });
        }
        self.supervised_steps += usize::from(any);
        self.joint_steps += usize::from(joint);
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Fraction of steps with at least one supervised merge; 0 for an empty
    /// log.
    pub fn active_fraction(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.supervised_steps as f64 / self.n_steps as f64
        }
    }

    /// Fraction of steps on which both conditions held for some merger,
    /// ignoring latching; 0 for an empty log.
    pub fn joint_fraction(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.joint_steps as f64 / self.n_steps as f64
        }
    }

    /// Share of completed episodes that triggered, if any completed.
    pub fn trigger_rate(&self) -> Option<f64> {
        let done: Vec<_> = self.episodes.iter().filter(|e| e.end.is_some()).collect();
        if done.is_empty() {
            return None;
        }
        Some(done.iter().filter(|e| e.triggered).count() as f64 / done.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{STEP_CSV_HEADER}")?;
        for r in &self.records {
            let id = r.merging_id.map(|id| id.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step,
                r.time,
                id,
                u8::from(r.onramp_condition),
                u8::from(r.inring_condition),
                u8::from(r.supervised)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supervision_latches_until_the_episode_closes() {
        let mut log = SupervisionLog::default();
        log.open_episode(1, 0);
        log.record_step(0, 0.0, false, &[(1, true)]);
        log.record_step(1, 0.1, true, &[(1, true)]);
        log.record_step(2, 0.2, false, &[(1, false)]);
        log.close_episode(1, 3);
        log.record_step(3, 0.3, true, &[]);
        let sup: Vec<_> = log.records.iter().map(|r| r.supervised).collect();
        assert_eq!(sup, [false, true, true, false]);
        assert_eq!(log.active_fraction(), 0.5);
        assert_eq!(log.joint_fraction(), 0.25);
        assert_eq!(log.trigger_rate(), Some(1.0));
        assert_eq!(log.episodes[0].end, Some(3));
    }

    #[test]
    fn overlapping_episodes_count_a_step_once() {
        let mut log = SupervisionLog::default();
        log.open_episode(1, 0);
        log.open_episode(2, 0);
        log.record_step(0, 0.0, true, &[(1, true), (2, true)]);
        assert_eq!(log.records.len(), 2);
        assert_eq!(log.active_fraction(), 1.0);
        assert_eq!(log.trigger_rate(), None);
    }

    #[test]
    fn csv_has_an_empty_id_for_idle_steps() {
        let mut log = SupervisionLog::default();
        log.record_step(0, 0.0, true, &[]);
        log.open_episode(9, 1);
        log.record_step(1, 0.1, true, &[(9, true)]);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{STEP_CSV_HEADER}\n0,0,,0,1,0\n1,0.1,9,1,1,1\n"));
    }

    #[test]
    fn empty_log() {
        let log = SupervisionLog::default();
        assert_eq!(log.active_fraction(), 0.0);
        assert!(log.records.is_empty());
    }
}
