//! Ring, ramp and the fixed-step update.
//!
//! Ring vehicles are kept in cyclic driving order: `ring[(i + 1) % n]` leads
//! `ring[i]`. Positions are front-bumper arc positions in `[0, c)`. Ramp
//! vehicles are kept front first; their position is the distance of the
//! front bumper from the ramp entry, and the ramp end coincides with the
//! merge point.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringsup_core::bounds::{
    connected_bound, lemma1_bound, lemma2_joint_bound, worstcase_coop_bound, RingScenario,
};
use ringsup_core::reachability::{
    inring_condition, min_time_to_reach, onramp_condition, Horizon, InRingRole, InRingVehicle,
    KinematicState, TimeToReach,
};

use crate::config::{cyclic, ConfigError, SimConfig};
use crate::idm::{equilibrium_speed, idm_acceleration, FREE_ROAD};
use crate::monitor::{SupervisionLog, VehicleId};

/// A merging vehicle within this distance of the ramp end may enter the ring.
pub const MERGE_ZONE: f64 = 0.5;
/// A merger at the ramp end slower than this is waiting for a gap, m/s.
const WAIT_SPEED: f64 = 0.5;

const PLACEMENT_STREAM: u64 = 0;
const ARRIVAL_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VehicleClass {
    Hv,
    ConnectedAv,
    CooperativeAv,
    /// Arrives by the on-ramp, drives by IDM and leaves by the off-ramp.
    MergingAv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    pub class: VehicleClass,
    /// Front bumper, m; see the module docs for the frame.
    pub position: f64,
    /// m/s, never negative.
    pub speed: f64,
    /// m.
    pub length: f64,
    /// Ring distance covered since merging; `None` for vehicles that never
    /// leave.
    pub travelled: Option<f64>,
}

/// Running sums behind the run summary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Accumulators {
    pub steps: usize,
    pub inring_steps: usize,
    pub lemma1: f64,
    pub lemma2: f64,
    pub connected: f64,
    pub worstcase: f64,
    pub speed: f64,
    pub speed_samples: usize,
    pub merges: usize,
    pub exits: usize,
    /// Mergers that reached the ramp end without an acceptable gap and were
    /// stopped there.
    pub forced_stops: usize,
}

#[derive(Debug, Clone)]
pub struct World {
    cfg: SimConfig,
    horizon: Horizon,
    hold_distance: f64,
    prediction_steps: usize,
    ring: Vec<Vehicle>,
    ramp: Vec<Vehicle>,
    pending: usize,
    arrivals: ChaCha8Rng,
    step: usize,
    next_id: VehicleId,
    log: SupervisionLog,
    acc: Accumulators,
    collisions: usize,
    /// Front merger that has committed to entering the ring.
    committed: Option<VehicleId>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl World {
    /// Place the census on the ring at near-equal spacing, all at the
    /// equilibrium speed of the mean gap.
    pub fn new(cfg: SimConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let mut rng = stream_rng(cfg.seed, PLACEMENT_STREAM);
        let census = cfg.census;
        let n = census.total();
        let mut classes: Vec<VehicleClass> = std::iter::repeat_n(VehicleClass::ConnectedAv, census.n_connected)
            .chain(std::iter::repeat_n(VehicleClass::CooperativeAv, census.n_coop))
            .chain(std::iter::repeat_n(VehicleClass::Hv, census.n_hv))
            .collect();
        // Connected and cooperative runs with the same seed and counts get
        // the same AV slots.
        classes.shuffle(&mut rng);

        let c = cfg.network.circumference;
        let l = cfg.vehicle_length;
        let ring = if n == 0 {
            Vec::new()
        } else {
            let spacing = c / n as f64;
            let jitter = cfg.placement_jitter * (spacing - l - cfg.idm.min_gap).max(0.0);
            let speed = equilibrium_speed(if n == 1 { FREE_ROAD } else { spacing - l }, &cfg.idm);
            let rotation = rng.random_range(0.0..spacing);
            classes
                .iter()
                .enumerate()
                .map(|(i, &class)| {
                    let offset = if jitter > 0.0 { rng.random_range(-jitter..=jitter) } else { 0.0 };
                    Vehicle {
                        id: i as VehicleId,
                        class,
                        position: cyclic(cfg.network.merge_point + rotation + i as f64 * spacing + offset, c),
                        speed,
                        length: l,
                        travelled: None,
                    }
                })
                .collect()
        };
        Self::from_vehicles(cfg, ring, Vec::new())
    }

    /// Start from explicit vehicle lists in the frames described above.
    pub fn from_vehicles(cfg: SimConfig, ring: Vec<Vehicle>, ramp: Vec<Vehicle>) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let c = cfg.network.circumference;
        let bad = |what: &str| Err(ConfigError::Infeasible(format!("initial state: {what}")));
        if ring
            .iter()
            .chain(&ramp)
            .any(|v| !(v.speed.is_finite() && v.speed >= 0.0 && v.length > 0.0))
        {
            return bad("speeds must be >= 0 and lengths > 0");
        }
        if ring.iter().any(|v| !(0.0..c).contains(&v.position)) {
            return bad("ring positions must lie in [0, circumference)");
        }
        if ramp
            .iter()
            .any(|v| !(0.0..=cfg.network.onramp_length).contains(&v.position))
        {
            return bad("ramp positions must lie on the ramp");
        }
        let horizon = Horizon::new(cfg.horizon)?;
        let next_id = ring.iter().chain(&ramp).map(|v| v.id + 1).max().unwrap_or(0);
        let mut world = Self {
            hold_distance: cfg.hold_distance(),
            prediction_steps: (cfg.horizon / cfg.dt).round() as usize,
            horizon,
            arrivals: stream_rng(cfg.seed, ARRIVAL_STREAM),
            cfg,
            ring,
            ramp,
            pending: 0,
            step: 0,
            next_id,
            log: SupervisionLog::default(),
            acc: Accumulators::default(),
            collisions: 0,
            committed: None,
        };
        if world.count_conflicts() > 0 {
            return bad("vehicles overlap or are out of order");
        }
        for v in &world.ramp {
            world.log.open_episode(v.id, 0);
        }
        Ok(world)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn ring(&self) -> &[Vehicle] {
        &self.ring
    }

    pub fn ramp(&self) -> &[Vehicle] {
        &self.ramp
    }

    pub fn log(&self) -> &SupervisionLog {
        &self.log
    }

    pub fn into_log(self) -> SupervisionLog {
        self.log
    }

    pub fn accumulators(&self) -> &Accumulators {
        &self.acc
    }

    /// Overlap and ordering violations seen so far, one per offending pair
    /// per step.
    pub fn collisions(&self) -> usize {
        self.collisions
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn pending_arrivals(&self) -> usize {
        self.pending
    }

    /// Bumper gap from ring vehicle `i` to its leader and the leader's speed,
    /// or `None` when `i` is alone on the ring.
    fn ring_leader(&self, i: usize) -> Option<(f64, f64)> {
        let n = self.ring.len();
        if n < 2 {
            return None;
        }
        let me = &self.ring[i];
        let lead = &self.ring[(i + 1) % n];
        let c = self.cfg.network.circumference;
        Some((cyclic(lead.position - me.position, c) - lead.length, lead.speed))
    }

    fn ring_dist_to_merge(&self, v: &Vehicle) -> f64 {
        self.cfg.network.dist_to_merge(v.position)
    }

    fn ramp_dist_to_merge(&self, v: &Vehicle) -> f64 {
        self.cfg.network.onramp_length - v.position
    }

    fn kinematic(&self, v: &Vehicle, dist_to_merge: f64) -> KinematicState {
        KinematicState {
            speed: v.speed,
            accel_max: self.cfg.idm.max_accel,
            accel_min: -self.cfg.idm.max_decel,
            dist_to_merge: dist_to_merge.max(0.0),
            length: v.length,
        }
    }

    /// Front-bumper position of ring vehicle `i` after one horizon, from
    /// integrating its IDM plan against its leader frozen at constant speed.
    pub fn predicted_position(&self, i: usize) -> f64 {
        let me = &self.ring[i];
        let leader = self.ring_leader(i);
        let dt = self.cfg.dt;
        let (mut ahead, mut v) = (0.0, me.speed);
        for s in 0..self.prediction_steps {
            let a = match leader {
                Some((gap, vl)) => {
                    let g = gap + vl * dt * s as f64 - ahead;
                    idm_acceleration(v, g, v - vl, &self.cfg.idm)
                }
                None => idm_acceleration(v, FREE_ROAD, 0.0, &self.cfg.idm),
            };
            v = (v + a * dt).max(0.0);
            ahead += v * dt;
        }
        cyclic(me.position + ahead, self.cfg.network.circumference)
    }

    /// Whether cooperative vehicle `i` could still hold short of the merge
    /// point: it lies inside the engagement window, outside the hold line
    /// (less one jam gap), can stop before the hold obstacle and is more than
    /// one planning interval away from the merge point.
    pub fn planning_adequate(&self, i: usize) -> bool {
        let v = &self.ring[i];
        let d = self.ring_dist_to_merge(v);
        let idm = &self.cfg.idm;
        let room = d - self.hold_distance + idm.min_gap;
        if !(room > 0.0 && d <= self.cfg.coop.engage_distance) {
            return false;
        }
        if v.speed * v.speed > 2.0 * idm.max_decel * room {
            return false;
        }
        match min_time_to_reach(v.speed, idm.max_accel, d).expect("non-negative state") {
            TimeToReach::Never => true,
            TimeToReach::After(t) => t > self.cfg.coop.planning_interval,
        }
    }

    /// Cooperative rule: while a merger is on the ramp and planning is
    /// adequate, brake toward a standstill at the hold line, which also
    /// holds back every follower. Otherwise plain IDM.
    pub fn cooperative_acceleration(&self, i: usize) -> f64 {
        let v = &self.ring[i];
        let idm = &self.cfg.idm;
        let base = match self.ring_leader(i) {
            Some((gap, vl)) => idm_acceleration(v.speed, gap, v.speed - vl, idm),
            None => idm_acceleration(v.speed, FREE_ROAD, 0.0, idm),
        };
        if self.ramp.is_empty() || !self.planning_adequate(i) {
            return base;
        }
        let d = self.ring_dist_to_merge(v);
        // Virtual stopped vehicle whose rear is one jam gap short of the hold
        // line: IDM settles with the front bumper on the line.
        let obstacle_gap = d - self.hold_distance + idm.min_gap;
        let mut a = base.min(idm_acceleration(v.speed, obstacle_gap, v.speed, idm));
        let to_line = d - self.hold_distance;
        if to_line > 0.0 && v.speed > 0.0 {
            a = a.min(-v.speed * v.speed / (2.0 * to_line));
        }
        a.max(-idm.max_decel)
    }

    /// Bumper gaps and speeds of the ring vehicles that would follow and
    /// lead a vehicle with its front at ring position `front` and the given
    /// length, with ring traffic projected `t` seconds ahead at constant
    /// speed. `None` on an empty ring.
    fn neighbours(&self, front: f64, length: f64, t: f64) -> Option<[(f64, f64); 2]> {
        let c = self.cfg.network.circumference;
        let upstream = |v: &Vehicle| cyclic(front - (v.position + v.speed * t), c);
        let follower = self.ring.iter().min_by(|a, b| upstream(a).total_cmp(&upstream(b)))?;
        let leader = self.ring.iter().max_by(|a, b| upstream(a).total_cmp(&upstream(b)))?;
        Some([
            (upstream(follower) - length, follower.speed),
            (c - upstream(leader) - leader.length, leader.speed),
        ])
    }

    /// Gap acceptance for a merger with its front at ring position `front`,
    /// against ring traffic projected `t` seconds ahead. The new follower
    /// needs its IDM desired gap; the merger needs the jam gap plus the
    /// braking term of its own desired gap, without the time headway.
    pub fn merge_acceptable(&self, front: f64, speed: f64, length: f64, t: f64) -> bool {
        let Some([(follower_gap, vf), (leader_gap, vl)]) = self.neighbours(front, length, t) else {
            return true;
        };
        let idm = &self.cfg.idm;
        let braking = speed * (speed - vl).max(0.0) / (2.0 * (idm.max_accel * idm.comfortable_decel).sqrt());
        follower_gap >= idm.desired_gap(vf, vf - speed) && leader_gap >= idm.min_gap + braking
    }

    /// Collision-free insertion: half a jam gap on each side plus room to
    /// cancel any closing speed at full braking.
    fn insertion_safe(&self, front: f64, speed: f64, length: f64) -> bool {
        let Some([(follower_gap, vf), (leader_gap, vl)]) = self.neighbours(front, length, 0.0) else {
            return true;
        };
        let idm = &self.cfg.idm;
        let room = |closing: f64| 0.5 * idm.min_gap + closing.max(0.0).powi(2) / (2.0 * idm.max_decel);
        follower_gap >= room(vf - speed) && leader_gap >= room(speed - vl)
    }

    /// Ring position of a ramp vehicle's front bumper with the ramp folded
    /// onto the ring at the merge point.
    fn folded_front(&self, v: &Vehicle) -> f64 {
        let net = &self.cfg.network;
        cyclic(net.merge_point - self.ramp_dist_to_merge(v), net.circumference)
    }

    /// Distance from the ramp end at which a merger must decide: comfortable
    /// stopping distance plus one jam gap.
    fn decision_distance(&self, speed: f64) -> f64 {
        let idm = &self.cfg.idm;
        speed * speed / (2.0 * idm.comfortable_decel) + idm.min_gap
    }

    /// Commit the front merger once it is within comfortable stopping
    /// distance of the ramp end and the ring will have room for it when it
    /// gets there at the earliest.
    fn update_commitment(&mut self) {
        let Some(m) = self.ramp.first() else {
            self.committed = None;
            return;
        };
        if self.committed == Some(m.id) {
            return;
        }
        self.committed = None;
        let idm = &self.cfg.idm;
        let dist = self.ramp_dist_to_merge(m).max(0.0);
        if dist > self.decision_distance(m.speed) {
            return;
        }
        let t = min_time_to_reach(m.speed, idm.max_accel, dist)
            .expect("non-negative state")
            .seconds()
            .unwrap_or(0.0);
        if self.merge_acceptable(self.cfg.network.merge_point, m.speed, m.length, t) {
            self.committed = Some(m.id);
        }
    }

    /// Gap and speed of the nearest ring vehicle ahead of ramp vehicle `v` in
    /// the folded frame. The gap is negative when they overlap.
    fn virtual_leader(&self, v: &Vehicle) -> Option<(f64, f64)> {
        let c = self.cfg.network.circumference;
        let front = self.folded_front(v);
        self.ring
            .iter()
            .min_by(|a, b| cyclic(a.position - front, c).total_cmp(&cyclic(b.position - front, c)))
            .map(|lead| (cyclic(lead.position - front, c) - lead.length, lead.speed))
    }

    /// Ring vehicle that makes room for the front merger, with the gap and
    /// leader speed it should follow.
    ///
    /// A merger waiting at the ramp end is given room by the closest upstream
    /// vehicle that can stop short of its slot at comfortable deceleration;
    /// that vehicle treats a stopped car one jam gap behind the slot as its
    /// leader, so it settles with room to spare for acceptance. A moving
    /// merger inside the courtesy zone is followed by the ring vehicle just
    /// behind it in the folded frame: unconditionally once the merger has
    /// committed, otherwise only if that needs no more than comfortable
    /// braking.
    fn courtesy_yielder(&self, dists: &[f64]) -> Option<(usize, f64, f64)> {
        if !self.cfg.courtesy_yield {
            return None;
        }
        let m = self.ramp.first()?;
        let dist = self.ramp_dist_to_merge(m);
        let idm = &self.cfg.idm;
        if dist <= MERGE_ZONE && m.speed <= WAIT_SPEED {
            let mut order: Vec<usize> = (0..self.ring.len()).collect();
            order.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]));
            return order.into_iter().find_map(|i| {
                let v = &self.ring[i];
                let gap = dists[i] - m.length - idm.min_gap;
                let room = gap - idm.min_gap;
                (room > 0.0 && v.speed * v.speed <= 2.0 * idm.comfortable_decel * room).then_some((i, gap, 0.0))
            });
        }
        if dist > self.cfg.courtesy_zone {
            return None;
        }
        let c = self.cfg.network.circumference;
        let front = self.folded_front(m);
        let (i, behind) = self
            .ring
            .iter()
            .enumerate()
            .map(|(i, v)| (i, cyclic(front - v.position, c)))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        let v = &self.ring[i];
        let gap = behind - m.length;
        let committed = self.committed == Some(m.id);
        (gap > 0.0
            && (committed || idm_acceleration(v.speed, gap, v.speed - m.speed, idm) >= -idm.comfortable_decel))
            .then_some((i, gap, m.speed))
    }

    fn admit_arrival(&mut self) {
        if self.pending == 0 {
            return;
        }
        let entry_speed = self.cfg.network.speed_limit;
        if let Some(last) = self.ramp.last() {
            let gap = last.position - last.length;
            if gap < self.cfg.idm.desired_gap(entry_speed, entry_speed - last.speed) {
                return;
            }
        }
        self.pending -= 1;
        let id = self.next_id;
        self.next_id += 1;
        self.ramp.push(Vehicle {
            id,
            class: VehicleClass::MergingAv,
            position: 0.0,
            speed: entry_speed,
            length: self.cfg.vehicle_length,
            travelled: Some(0.0),
        });
        self.log.open_episode(id, self.step);
    }

    fn in_ring_view(&self, dists: &[f64]) -> Vec<InRingVehicle> {
        let c = self.cfg.network.circumference;
        let m = self.cfg.network.merge_point;
        self.ring
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let role = match v.class {
                    VehicleClass::Hv | VehicleClass::MergingAv => InRingRole::Human,
                    VehicleClass::ConnectedAv => {
                        let offset = cyclic(self.predicted_position(i) - m, c);
                        InRingRole::Connected {
                            predicted_dist_to_merge: Some(offset.min(c - offset)),
                        }
                    }
                    VehicleClass::CooperativeAv => InRingRole::Cooperative {
                        planning_adequate: self.planning_adequate(i),
                    },
                };
                InRingVehicle {
                    state: self.kinematic(v, dists[i]),
                    role,
                }
            })
            .collect()
    }

    fn monitor(&mut self, dists: &[f64]) {
        let view = self.in_ring_view(dists);
        let inring = inring_condition(&view, self.horizon).expect("every connected vehicle has a prediction");
        let merging: Vec<(VehicleId, bool)> = self
            .ramp
            .iter()
            .map(|v| {
                let state = self.kinematic(v, self.ramp_dist_to_merge(v));
                (v.id, onramp_condition(&state, self.horizon))
            })
            .collect();
        let time = self.step as f64 * self.cfg.dt;
        self.log.record_step(self.step, time, inring, &merging);

        let h = self.horizon;
        let net = &self.cfg.network;
        let mut everyone = RingScenario {
            circumference: net.circumference,
            onramp_length: net.onramp_length,
            ..RingScenario::default()
        };
        let mut mixed = everyone.clone();
        let mut humans_only = everyone.clone();
        for (v, s) in self.ring.iter().zip(&view) {
            let reach = s.state.reach(h);
            everyone.hv_reach.push(reach);
            match v.class {
                VehicleClass::Hv | VehicleClass::MergingAv => {
                    mixed.hv_reach.push(reach);
                    humans_only.hv_reach.push(reach);
                }
                VehicleClass::ConnectedAv => {
                    mixed.av_lengths.push(v.length);
                    humans_only.av_lengths.push(v.length);
                }
                VehicleClass::CooperativeAv => {
                    mixed.av_lengths.push(v.length);
                    humans_only.n_coop += 1;
                }
            }
        }
        everyone.onramp_reach = match self.ramp.first() {
            Some(v) => self.kinematic(v, 0.0).reach(h),
            None => net.speed_limit * h.seconds() + 0.5 * self.cfg.idm.max_accel * h.seconds().powi(2),
        };
        let acc = &mut self.acc;
        acc.steps += 1;
        acc.inring_steps += usize::from(inring);
        acc.lemma1 += lemma1_bound(&everyone).expect("valid scenario").clamped;
        acc.lemma2 += lemma2_joint_bound(&everyone).expect("valid scenario");
        acc.connected += connected_bound(&mixed).expect("valid scenario").clamped;
        acc.worstcase += worstcase_coop_bound(&humans_only).expect("valid scenario").clamped;
        if !self.ring.is_empty() {
            acc.speed += self.ring.iter().map(|v| v.speed).sum::<f64>() / self.ring.len() as f64;
            acc.speed_samples += 1;
        }
    }

    fn accelerations(&self, dists: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let idm = &self.cfg.idm;
        let mut ring: Vec<f64> = (0..self.ring.len())
            .map(|i| {
                let v = &self.ring[i];
                match v.class {
                    VehicleClass::CooperativeAv => self.cooperative_acceleration(i),
                    _ => match self.ring_leader(i) {
                        Some((gap, vl)) => idm_acceleration(v.speed, gap, v.speed - vl, idm),
                        None => idm_acceleration(v.speed, FREE_ROAD, 0.0, idm),
                    },
                }
            })
            .collect();
        if let Some((i, gap, lead_speed)) = self.courtesy_yielder(dists) {
            let v = &self.ring[i];
            ring[i] = ring[i].min(idm_acceleration(v.speed, gap, v.speed - lead_speed, idm));
        }

        let committed = self.committed;
        let ramp = self
            .ramp
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if j > 0 {
                    let lead = &self.ramp[j - 1];
                    let gap = lead.position - lead.length - v.position;
                    idm_acceleration(v.speed, gap, v.speed - lead.speed, idm)
                } else {
                    let free = idm_acceleration(v.speed, FREE_ROAD, 0.0, idm);
                    if committed == Some(v.id) {
                        // Line up behind the ring traffic ahead in the
                        // folded frame.
                        match self.virtual_leader(v) {
                            Some((gap, vl)) if gap > 0.0 => {
                                free.min(idm_acceleration(v.speed, gap, v.speed - vl, idm))
                            }
                            _ => free,
                        }
                    } else {
                        // Drive freely up to the decision point, then brake
                        // to a stop at the middle of the merge zone.
                        let dist = self.ramp_dist_to_merge(v);
                        let stop = dist - 0.5 * MERGE_ZONE;
                        if dist > self.decision_distance(v.speed) {
                            free
                        } else if v.speed > 1.0 {
                            free.min(-v.speed * v.speed / (2.0 * stop.max(1e-3)))
                        } else {
                            free.min(idm_acceleration(v.speed, stop + idm.min_gap, v.speed, idm))
                        }
                    }
                }
            })
            .collect();
        (ring, ramp)
    }

    fn try_merge(&mut self) {
        let Some(m) = self.ramp.first().copied() else {
            return;
        };
        let dist = self.ramp_dist_to_merge(&m);
        if dist > MERGE_ZONE {
            return;
        }
        let net = self.cfg.network;
        let front = self.folded_front(&m);
        if self.committed == Some(m.id) && self.insertion_safe(front, m.speed, m.length) {
            let index = self
                .ring
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    cyclic(front - a.position, net.circumference)
                        .total_cmp(&cyclic(front - b.position, net.circumference))
                })
                .map_or(0, |(i, _)| i + 1);
            self.ring.insert(
                index,
                Vehicle {
                    position: front,
                    travelled: Some(-dist),
                    ..m
                },
            );
            self.ramp.remove(0);
            self.log.close_episode(m.id, self.step);
            self.acc.merges += 1;
            self.committed = None;
        } else if dist < 0.0 {
            self.committed = None;
            let first = &mut self.ramp[0];
            first.position = net.onramp_length;
            first.speed = 0.0;
            self.acc.forced_stops += 1;
        }
    }

    /// Negative bumper gaps plus, on the ring, a broken cyclic order.
    fn count_conflicts(&self) -> usize {
        let mut conflicts = 0;
        let n = self.ring.len();
        if n >= 2 {
            let c = self.cfg.network.circumference;
            let mut lap = 0.0;
            for i in 0..n {
                let (gap, _) = self.ring_leader(i).expect("two or more vehicles");
                let lead = &self.ring[(i + 1) % n];
                lap += cyclic(lead.position - self.ring[i].position, c);
                conflicts += usize::from(gap < 0.0);
            }
            // Exactly one lap when the order is intact; a pass adds a lap.
            conflicts += usize::from(lap > 1.5 * c);
        }
        for pair in self.ramp.windows(2) {
            conflicts += usize::from(pair[0].position - pair[0].length < pair[1].position);
        }
        conflicts
    }

    /// Advance one step: arrivals, supervision bookkeeping, control,
    /// semi-implicit Euler integration, merging, exits and conflict checks.
    pub fn step(&mut self) {
        if self.arrivals.random::<f64>() < self.cfg.arrival_probability() {
            self.pending += 1;
        }
        self.admit_arrival();

        let dists: Vec<f64> = self.ring.iter().map(|v| self.ring_dist_to_merge(v)).collect();
        self.monitor(&dists);
        self.update_commitment();

        let (ring_acc, ramp_acc) = self.accelerations(&dists);
        let dt = self.cfg.dt;
        let c = self.cfg.network.circumference;
        for (v, a) in self.ring.iter_mut().zip(ring_acc) {
            v.speed = (v.speed + a * dt).max(0.0);
            v.position = cyclic(v.position + v.speed * dt, c);
            if let Some(t) = v.travelled.as_mut() {
                *t += v.speed * dt;
            }
        }
        for (v, a) in self.ramp.iter_mut().zip(ramp_acc) {
            v.speed = (v.speed + a * dt).max(0.0);
            v.position += v.speed * dt;
        }

        self.try_merge();
        let route = self.cfg.network.route_length();
        let before = self.ring.len();
        self.ring.retain(|v| v.travelled.is_none_or(|t| t < route));
        self.acc.exits += before - self.ring.len();

        self.collisions += self.count_conflicts();
        self.step += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Census;
    use approx::assert_abs_diff_eq;

    fn quiet(c: f64) -> SimConfig {
        let mut cfg = SimConfig {
            inflow_rate: 0.0,
            census: Census::default(),
            ..SimConfig::default()
        };
        cfg.network = crate::config::RingNetwork::new(c, 0.0, 250.0, 22.35);
        cfg
    }

    fn car(id: VehicleId, class: VehicleClass, position: f64, speed: f64) -> Vehicle {
        Vehicle {
            id,
            class,
            position,
            speed,
            length: 5.0,
            travelled: None,
        }
    }

    #[test]
    fn lone_vehicle_at_desired_speed_cruises() {
        let cfg = quiet(1000.0);
        let v0 = cfg.idm.desired_speed;
        let mut w = World::from_vehicles(cfg, vec![car(0, VehicleClass::Hv, 100.0, v0)], vec![]).unwrap();
        w.step();
        assert_eq!(w.ring()[0].speed, v0);
        assert_abs_diff_eq!(w.ring()[0].position, 100.0 + v0 * 0.1, epsilon = 1e-12);
    }

    #[test]
    fn placement_is_ordered_and_overlap_free() {
        for n in [1, 2, 6, 24] {
            let mut cfg = SimConfig::default();
            cfg.census.n_hv = n;
            cfg.network = crate::config::RingNetwork::new(600.0, 0.0, 250.0, 22.35);
            let w = World::new(cfg).unwrap();
            assert_eq!(w.ring().len(), n);
            assert_eq!(w.count_conflicts(), 0);
        }
    }

    #[test]
    fn stopped_vehicle_at_jam_gap_predicts_its_own_position() {
        let mut cfg = quiet(1000.0);
        cfg.census = Census::default();
        let w = World::from_vehicles(
            cfg,
            vec![
                car(0, VehicleClass::ConnectedAv, 100.0, 0.0),
                car(1, VehicleClass::Hv, 107.0, 0.0),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(w.predicted_position(0), 100.0);
    }

    #[test]
    fn free_road_prediction_is_uniform_motion() {
        let cfg = quiet(1000.0);
        let v0 = cfg.idm.desired_speed;
        let w = World::from_vehicles(cfg, vec![car(0, VehicleClass::ConnectedAv, 900.0, v0)], vec![]).unwrap();
        assert_abs_diff_eq!(w.predicted_position(0), (900.0 + v0 * 8.0) % 1000.0, epsilon = 1e-9);
    }

    #[test]
    fn prediction_behind_a_slower_leader_falls_short_of_free_motion() {
        let cfg = quiet(1000.0);
        let v0 = cfg.idm.desired_speed;
        let w = World::from_vehicles(
            cfg,
            vec![
                car(0, VehicleClass::ConnectedAv, 100.0, v0),
                car(1, VehicleClass::Hv, 160.0, 10.0),
            ],
            vec![],
        )
        .unwrap();
        let p = w.predicted_position(0);
        assert!(p < 100.0 + v0 * 8.0);
        // Oracle: independent integration of the same frozen-leader plan.
        let idm = crate::idm::IdmParams::default();
        let (mut x, mut v) = (100.0, v0);
        for k in 0..80 {
            let leader_rear = 160.0 + 10.0 * 0.1 * k as f64 - 5.0;
            let a = idm_acceleration(v, leader_rear - x, v - 10.0, &idm);
            v = (v + a * 0.1).max(0.0);
            x += v * 0.1;
        }
        assert_abs_diff_eq!(p, x, epsilon = 1e-9);
    }

    fn with_merger(cfg: SimConfig, ring: Vec<Vehicle>) -> World {
        let merger = Vehicle {
            travelled: Some(0.0),
            ..car(99, VehicleClass::MergingAv, 10.0, 20.0)
        };
        World::from_vehicles(cfg, ring, vec![merger]).unwrap()
    }

    #[test]
    fn cooperative_rule_brakes_and_stops_upstream_of_the_merge_point() {
        let mut cfg = quiet(2000.0);
        cfg.coop.planning_interval = 2.0;
        let hold = cfg.hold_distance();
        // 300 m upstream of the merge point at 20 m/s.
        let mut w = with_merger(cfg, vec![car(0, VehicleClass::CooperativeAv, 1700.0, 20.0)]);
        assert!(w.planning_adequate(0));
        assert!(w.cooperative_acceleration(0) < 0.0);
        // Keep the merger parked so the rule stays engaged.
        for _ in 0..600 {
            w.ramp[0].position = 10.0;
            w.ramp[0].speed = 0.0;
            w.step();
            let d = w.ring_dist_to_merge(&w.ring[0]);
            assert!(d > 0.0 && d < 1000.0, "crossed the merge point: {d}");
        }
        let v = w.ring[0];
        assert!(v.speed < 1e-3);
        assert_abs_diff_eq!(w.ring_dist_to_merge(&v), hold, epsilon = 1.0);
    }

    #[test]
    fn cooperative_rule_is_plain_idm_without_a_merger_or_downstream() {
        let cfg = quiet(2000.0);
        let coop = car(0, VehicleClass::CooperativeAv, 1700.0, 20.0);
        let hv = car(0, VehicleClass::Hv, 1700.0, 20.0);
        let a = World::from_vehicles(cfg.clone(), vec![coop], vec![]).unwrap();
        let b = World::from_vehicles(cfg.clone(), vec![hv], vec![]).unwrap();
        assert_eq!(a.cooperative_acceleration(0), b.accelerations(&[300.0]).0[0]);

        let past = car(0, VehicleClass::CooperativeAv, 5.0, 20.0);
        let w = with_merger(cfg.clone(), vec![past]);
        assert!(!w.planning_adequate(0));
        let expected = idm_acceleration(20.0, FREE_ROAD, 0.0, &cfg.idm);
        assert_eq!(w.cooperative_acceleration(0), expected);
    }

    #[test]
    fn merge_needs_room_on_both_sides() {
        let cfg = quiet(1000.0);
        let w = World::from_vehicles(
            cfg,
            vec![car(0, VehicleClass::Hv, 960.0, 20.0), car(1, VehicleClass::Hv, 60.0, 20.0)],
            vec![],
        )
        .unwrap();
        // Follower 40 m upstream: 35 m gap behind a 5 m merger at equal speed
        // is more than s0 + v*T_h = 22 m; leader rear 55 m ahead.
        assert!(w.merge_acceptable(0.0, 20.0, 5.0, 0.0));
        // A merger from standstill needs far more room from a 20 m/s follower.
        assert!(!w.merge_acceptable(0.0, 0.0, 5.0, 0.0));
        // Projection: in 1 s the follower closes to 20 m behind the slot.
        assert!(!w.merge_acceptable(0.0, 0.0, 5.0, 1.0));
    }

    #[test]
    fn waiting_merger_gets_in_through_courtesy() {
        let mut cfg = quiet(300.0);
        cfg.census.n_hv = 0;
        let ring: Vec<Vehicle> = (0..10)
            .map(|i| car(i, VehicleClass::Hv, 30.0 * i as f64 + 1.0, 8.0))
            .collect();
        let merger = Vehicle {
            travelled: Some(0.0),
            ..car(99, VehicleClass::MergingAv, 250.0, 0.0)
        };
        let mut w = World::from_vehicles(cfg, ring, vec![merger]).unwrap();
        for _ in 0..3000 {
            w.step();
            if w.ramp().is_empty() {
                break;
            }
        }
        assert!(w.ramp().is_empty(), "merger never entered");
        assert_eq!(w.collisions(), 0);
        assert_eq!(w.accumulators().merges, 1);
    }

    #[test]
    fn merged_vehicle_leaves_after_three_quarters_of_a_lap() {
        let cfg = quiet(400.0);
        let merger = Vehicle {
            travelled: Some(0.0),
            ..car(7, VehicleClass::MergingAv, 249.8, 20.0)
        };
        let mut w = World::from_vehicles(cfg, vec![], vec![merger]).unwrap();
        w.step();
        assert_eq!(w.ring().len(), 1);
        let mut steps = 1;
        while !w.ring().is_empty() {
            w.step();
            steps += 1;
            assert!(steps < 1000);
        }
        assert_eq!(w.accumulators().exits, 1);
        assert_eq!(w.log().episodes[0].end, Some(0));
        // 300 m at roughly 20-22 m/s.
        assert!((130..=160).contains(&steps), "{steps}");
    }

    #[test]
    fn overlapping_initial_state_is_rejected() {
        let cfg = quiet(1000.0);
        let r = World::from_vehicles(
            cfg,
            vec![car(0, VehicleClass::Hv, 100.0, 0.0), car(1, VehicleClass::Hv, 103.0, 0.0)],
            vec![],
        );
        assert!(r.is_err());
    }
}
