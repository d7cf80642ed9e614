//! Forward-distance reachability along a single lane.
//!
//! A vehicle's reachable set over a horizon `T` is the interval
//! `[0, v*T + a_max*T^2/2]` ahead of it. Braking never shrinks the upper end,
//! so every predicate here is conservative: boundary contact counts as
//! reachable and no epsilon is applied.

use crate::error::{at_least, DomainError, Result};

/// Look-ahead window used by the reach predicates, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Horizon(f64);

impl Horizon {
    pub fn new(seconds: f64) -> Result<Self> {
        at_least("horizon", seconds, 0.0).map(Self)
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

/// Longitudinal state of one vehicle relative to the merge point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    /// m/s, never negative.
    pub speed: f64,
    /// Largest forward acceleration, m/s^2.
    pub accel_max: f64,
    /// Hardest braking, m/s^2 (<= 0). Not used by the reach predicates.
    pub accel_min: f64,
    /// Distance to the merge point measured along the driving direction, m.
    pub dist_to_merge: f64,
    /// Bumper-to-bumper length, m.
    pub length: f64,
}

impl KinematicState {
    pub fn new(
        speed: f64,
        accel_max: f64,
        accel_min: f64,
        dist_to_merge: f64,
        length: f64,
    ) -> Result<Self> {
        at_least("speed", speed, 0.0)?;
        at_least("accel_max", accel_max, 0.0)?;
        if !(accel_min.is_finite() && accel_min <= 0.0) {
            return Err(DomainError::OutOfRange {
                name: "accel_min",
                requirement: "finite and <= 0",
                value: accel_min,
            });
        }
        at_least("dist_to_merge", dist_to_merge, 0.0)?;
        at_least("length", length, 0.0)?;
        Ok(Self {
            speed,
            accel_max,
            accel_min,
            dist_to_merge,
            length,
        })
    }

    /// Upper end of the reachable interval over `horizon`.
    pub fn reach(&self, horizon: Horizon) -> f64 {
        reach_unchecked(self.speed, self.accel_max, horizon.0)
    }

    /// True when the merge point lies inside the reachable interval.
    pub fn can_reach_merge(&self, horizon: Horizon) -> bool {
        self.dist_to_merge <= self.reach(horizon)
    }

    pub fn time_to_merge(&self) -> TimeToReach {
        time_to_reach_unchecked(self.speed, self.accel_max, self.dist_to_merge)
    }
}

/// Earliest time at which a distance could be covered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeToReach {
    After(f64),
    /// Stationary with no forward acceleration: the distance is never covered.
    Never,
}

impl TimeToReach {
    pub fn seconds(self) -> Option<f64> {
        match self {
            Self::After(t) => Some(t),
            Self::Never => None,
        }
    }

    pub fn is_within(self, horizon: Horizon) -> bool {
        matches!(self, Self::After(t) if t <= horizon.0)
    }

    /// The later of two arrival times; `Never` absorbs.
    pub fn latest(self, other: Self) -> Self {
        match (self, other) {
            (Self::After(a), Self::After(b)) => Self::After(a.max(b)),
            _ => Self::Never,
        }
    }
}

#[inline]
fn reach_unchecked(speed: f64, accel_max: f64, horizon: f64) -> f64 {
    speed * horizon + 0.5 * accel_max * horizon * horizon
}

fn time_to_reach_unchecked(speed: f64, accel_max: f64, distance: f64) -> TimeToReach {
    if distance == 0.0 {
        return TimeToReach::After(0.0);
    }
    if speed == 0.0 && accel_max == 0.0 {
        return TimeToReach::Never;
    }
    // Rationalised root of a/2 t^2 + v t - d = 0; exact at a = 0 and free of
    // cancellation when v^2 >> a d.
    let root = (speed * speed + 2.0 * accel_max * distance).sqrt();
    let mut t = 2.0 * distance / (speed + root);
    // Land on the reachable side of the boundary.
    while reach_unchecked(speed, accel_max, t) < distance {
        t = t.next_up();
    }
    TimeToReach::After(t)
}

/// Farthest forward distance coverable in `horizon` seconds.
pub fn reachable_distance(speed: f64, accel_max: f64, horizon: f64) -> Result<f64> {
    at_least("speed", speed, 0.0)?;
    at_least("accel_max", accel_max, 0.0)?;
    at_least("horizon", horizon, 0.0)?;
    Ok(reach_unchecked(speed, accel_max, horizon))
}

/// Smallest horizon whose reachable distance covers `distance`.
pub fn min_time_to_reach(speed: f64, accel_max: f64, distance: f64) -> Result<TimeToReach> {
    at_least("speed", speed, 0.0)?;
    at_least("accel_max", accel_max, 0.0)?;
    at_least("distance", distance, 0.0)?;
    Ok(time_to_reach_unchecked(speed, accel_max, distance))
}

/// Lead time at which both the merging vehicle and the in-ring vehicle can
/// reach the merge point; supervision must start no later than this.
pub fn supervision_horizon(merging: &KinematicState, in_ring: &KinematicState) -> TimeToReach {
    merging.time_to_merge().latest(in_ring.time_to_merge())
}

/// How an in-ring vehicle's trigger test is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InRingRole {
    /// Worst-case reachable interval.
    Human,
    /// Broadcasts its plan: triggers only if its planned position at `t + T`
    /// lies within its own length upstream of the merge point.
    Connected { predicted_dist_to_merge: Option<f64> },
    /// Supervision-aware; exempt while it can still plan around the merge,
    /// otherwise treated as a human driver.
    Cooperative { planning_adequate: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InRingVehicle {
    pub state: KinematicState,
    pub role: InRingRole,
}

impl InRingVehicle {
    pub fn human(state: KinematicState) -> Self {
        Self {
            state,
            role: InRingRole::Human,
        }
    }

    pub fn triggers(&self, horizon: Horizon) -> Option<bool> {
        match self.role {
            InRingRole::Human
            | InRingRole::Cooperative {
                planning_adequate: false,
            } => Some(self.state.can_reach_merge(horizon)),
            InRingRole::Cooperative {
                planning_adequate: true,
            } => Some(false),
            InRingRole::Connected {
                predicted_dist_to_merge,
            } => predicted_dist_to_merge.map(|d| d <= self.state.length),
        }
    }
}

/// Whether the merging vehicle can reach the merge point within `horizon`.
pub fn onramp_condition(merging: &KinematicState, horizon: Horizon) -> bool {
    merging.can_reach_merge(horizon)
}

/// Whether at least one in-ring vehicle triggers.
pub fn inring_condition(in_ring: &[InRingVehicle], horizon: Horizon) -> Result<bool> {
    let mut any = false;
    for (index, v) in in_ring.iter().enumerate() {
        // Keep scanning after a hit so a missing prediction is always reported.
        any |= v
            .triggers(horizon)
            .ok_or(DomainError::MissingPrediction { index })?;
    }
    Ok(any)
}

/// Human takeover is required when both the merging vehicle and some in-ring
/// vehicle can reach the merge point within the horizon.
pub fn supervision_condition(
    merging: &KinematicState,
    in_ring: &[InRingVehicle],
    horizon: Horizon,
) -> Result<bool> {
    let ring = inring_condition(in_ring, horizon)?;
    Ok(ring && onramp_condition(merging, horizon))
}
