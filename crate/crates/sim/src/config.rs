//! Scenario configuration and its flat `key = value` file format.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; unknown
//! keys are rejected so that typos cannot silently fall back to defaults.
//!
//! | key | unit | default |
//! |---|---|---|
//! | `experiment` | label | `custom` |
//! | `seed` | | 0 |
//! | `n_steps` | | 2500 |
//! | `dt_s` | s | 0.1 |
//! | `horizon_s` | s | 8 |
//! | `inflow_veh_per_hour` | veh/h | 200 |
//! | `circumference_m` | m | 1200 |
//! | `merge_point_m` | m | 0 |
//! | `onramp_length_m` | m | 250 |
//! | `speed_limit_mps` | m/s | 22.35 |
//! | `vehicle_length_m` | m | 5 |
//! | `n_hv`, `n_connected`, `n_coop` | | 18, 0, 0 |
//! | `idm_desired_speed_mps` | m/s | 22.35 |
//! | `idm_time_headway_s` | s | 1.0 |
//! | `idm_min_gap_m` | m | 2.0 |
//! | `idm_max_accel_mps2` | m/s^2 | 2.6 |
//! | `idm_comfortable_decel_mps2` | m/s^2 | 4.5 |
//! | `idm_accel_exponent` | | 4 |
//! | `idm_max_decel_mps2` | m/s^2 | 9 |
//! | `coop_planning_interval_s` | s | 3 |
//! | `coop_engage_distance_m` | m | 400 |
//! | `coop_hold_distance_m` | m | `a*T^2/2 + s0 + length` |
//! | `courtesy_yield` | bool | true |
//! | `courtesy_zone_m` | m | 100 |
//! | `placement_jitter` | fraction of free spacing | 0.1 |

use std::fmt;
use std::str::FromStr;

use ringsup_core::DomainError;
use thiserror::Error;

use crate::idm::IdmParams;

/// Fraction of the ring a merged vehicle covers before leaving by the
/// off-ramp (a 270 degree route).
pub const OFFRAMP_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: cannot parse `{value}` for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error(transparent)]
    Invalid(#[from] DomainError),
    #[error("{0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingNetwork {
    /// m.
    pub circumference: f64,
    /// Arc position where the on-ramp joins, m.
    pub merge_point: f64,
    /// Arc position of the off-ramp, m.
    pub offramp_point: f64,
    /// m.
    pub onramp_length: f64,
    /// Ramp entry speed, m/s.
    pub speed_limit: f64,
}

impl RingNetwork {
    pub fn new(circumference: f64, merge_point: f64, onramp_length: f64, speed_limit: f64) -> Self {
        Self {
            circumference,
            merge_point,
            offramp_point: (merge_point + OFFRAMP_FRACTION * circumference).rem_euclid(circumference),
            onramp_length,
            speed_limit,
        }
    }

    /// Distance from arc position `x` forward to the merge point, in
    /// `[0, circumference)`.
    pub fn dist_to_merge(&self, x: f64) -> f64 {
        cyclic(self.merge_point - x, self.circumference)
    }

    /// Distance travelled between entering at the merge point and exiting.
    pub fn route_length(&self) -> f64 {
        OFFRAMP_FRACTION * self.circumference
    }
}

/// `x` reduced into `[0, c)`; `rem_euclid` alone can round up to `c`.
pub(crate) fn cyclic(x: f64, c: f64) -> f64 {
    let r = x.rem_euclid(c);
    if r >= c {
        0.0
    } else {
        r
    }
}

/// Initial ring population by class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub n_hv: usize,
    pub n_connected: usize,
    pub n_coop: usize,
}

impl Census {
    pub fn total(&self) -> usize {
        self.n_hv + self.n_connected + self.n_coop
    }
}

/// Cooperative controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopParams {
    /// Shortest time-to-merge at which the vehicle can still plan a stop, s.
    pub planning_interval: f64,
    /// Engage only within this distance upstream of the merge point, m.
    pub engage_distance: f64,
    /// Stand-off from the merge point while holding; `None` derives it from
    /// the horizon so that a stopped holder cannot reach the merge point.
    pub hold_distance: Option<f64>,
}

impl Default for CoopParams {
    fn default() -> Self {
        Self {
            planning_interval: 3.0,
            engage_distance: 400.0,
            hold_distance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub experiment: String,
    pub seed: u64,
    pub n_steps: usize,
    /// s.
    pub dt: f64,
    /// Supervision horizon T, s.
    pub horizon: f64,
    /// veh/h.
    pub inflow_rate: f64,
    pub network: RingNetwork,
    /// m, all vehicles.
    pub vehicle_length: f64,
    pub census: Census,
    pub idm: IdmParams,
    pub coop: CoopParams,
    /// Let the nearest ring vehicle that can stop comfortably make room for a
    /// merger waiting at the end of the ramp.
    pub courtesy_yield: bool,
    /// Distance from the ramp end within which a moving merger is given
    /// room by the ring vehicle behind it, m.
    pub courtesy_zone: f64,
    /// Uniform placement jitter as a fraction of the free spacing.
    pub placement_jitter: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            experiment: "custom".into(),
            seed: 0,
            n_steps: 2500,
            dt: 0.1,
            horizon: 8.0,
            inflow_rate: 200.0,
            network: RingNetwork::new(1200.0, 0.0, 250.0, 22.35),
            vehicle_length: 5.0,
            census: Census {
                n_hv: 18,
                ..Census::default()
            },
            idm: IdmParams::default(),
            coop: CoopParams::default(),
            courtesy_yield: true,
            courtesy_zone: 100.0,
            placement_jitter: 0.1,
        }
    }
}

fn out_of_range(name: &'static str, requirement: &'static str, value: f64) -> ConfigError {
    ConfigError::Invalid(DomainError::OutOfRange {
        name,
        requirement,
        value,
    })
}

fn require(ok: bool, name: &'static str, requirement: &'static str, value: f64) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(out_of_range(name, requirement, value))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = &self.network;
        require(self.dt.is_finite() && self.dt > 0.0, "dt", "> 0", self.dt)?;
        require(self.horizon.is_finite() && self.horizon >= 0.0, "horizon", ">= 0", self.horizon)?;
        let p = self.arrival_probability();
        require(
            self.inflow_rate >= 0.0 && p <= 1.0,
            "inflow_rate",
            ">= 0 with rate*dt <= 1 arrival per step",
            self.inflow_rate,
        )?;
        require(n.circumference.is_finite() && n.circumference > 0.0, "circumference", "> 0", n.circumference)?;
        require(
            (0.0..n.circumference).contains(&n.merge_point),
            "merge_point",
            "in [0, circumference)",
            n.merge_point,
        )?;
        require(n.onramp_length.is_finite() && n.onramp_length > 0.0, "onramp_length", "> 0", n.onramp_length)?;
        require(n.speed_limit.is_finite() && n.speed_limit >= 0.0, "speed_limit", ">= 0", n.speed_limit)?;
        require(
            self.vehicle_length.is_finite() && self.vehicle_length > 0.0,
            "vehicle_length",
            "> 0",
            self.vehicle_length,
        )?;
        self.idm.validate()?;
        require(
            (0.0..0.5).contains(&self.placement_jitter),
            "placement_jitter",
            "in [0, 0.5)",
            self.placement_jitter,
        )?;
        let c = &self.coop;
        require(
            c.planning_interval.is_finite() && c.planning_interval >= 0.0,
            "coop planning_interval",
            ">= 0",
            c.planning_interval,
        )?;
        require(self.courtesy_zone >= 0.0, "courtesy_zone", ">= 0", self.courtesy_zone)?;
        require(c.engage_distance >= 0.0, "coop engage_distance", ">= 0", c.engage_distance)?;
        let hold = self.hold_distance();
        require(
            self.census.n_coop == 0 || (hold.is_finite() && hold >= self.vehicle_length + 2.0 * self.idm.min_gap),
            "coop hold_distance",
            "at least one vehicle length plus two jam gaps",
            hold,
        )?;
        let needed = self.census.total() as f64 * (self.vehicle_length + self.idm.min_gap);
        if needed > n.circumference {
            return Err(ConfigError::Infeasible(format!(
                "{} vehicles need {needed} m but the ring is {} m",
                self.census.total(),
                n.circumference
            )));
        }
        Ok(())
    }

    /// Per-step arrival probability.
    pub fn arrival_probability(&self) -> f64 {
        self.inflow_rate / 3600.0 * self.dt
    }

    pub fn hold_distance(&self) -> f64 {
        self.coop.hold_distance.unwrap_or(
            0.5 * self.idm.max_accel * self.horizon * self.horizon + self.idm.min_gap + self.vehicle_length,
        )
    }

    fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| v.to_string())
        }
        let n = &mut self.network;
        match key {
            "experiment" => self.experiment = value.to_string(),
            "seed" => self.seed = num(value)?,
            "n_steps" => self.n_steps = num(value)?,
            "dt_s" => self.dt = num(value)?,
            "horizon_s" => self.horizon = num(value)?,
            "inflow_veh_per_hour" => self.inflow_rate = num(value)?,
            "circumference_m" => n.circumference = num(value)?,
            "merge_point_m" => n.merge_point = num(value)?,
            "onramp_length_m" => n.onramp_length = num(value)?,
            "speed_limit_mps" => n.speed_limit = num(value)?,
            "vehicle_length_m" => self.vehicle_length = num(value)?,
            "n_hv" => self.census.n_hv = num(value)?,
            "n_connected" => self.census.n_connected = num(value)?,
            "n_coop" => self.census.n_coop = num(value)?,
            "idm_desired_speed_mps" => self.idm.desired_speed = num(value)?,
            "idm_time_headway_s" => self.idm.time_headway = num(value)?,
            "idm_min_gap_m" => self.idm.min_gap = num(value)?,
            "idm_max_accel_mps2" => self.idm.max_accel = num(value)?,
            "idm_comfortable_decel_mps2" => self.idm.comfortable_decel = num(value)?,
            "idm_accel_exponent" => self.idm.accel_exponent = num(value)?,
            "idm_max_decel_mps2" => self.idm.max_decel = num(value)?,
            "coop_planning_interval_s" => self.coop.planning_interval = num(value)?,
            "coop_engage_distance_m" => self.coop.engage_distance = num(value)?,
            "coop_hold_distance_m" => self.coop.hold_distance = Some(num(value)?),
            "courtesy_yield" => self.courtesy_yield = num(value)?,
            "courtesy_zone_m" => self.courtesy_zone = num(value)?,
            "placement_jitter" => self.placement_jitter = num(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

impl FromStr for SimConfig {
    type Err = ConfigError;

    /// Parse a config file over the defaults, then validate it.
    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match cfg.set(key, value) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
                Err(value) => {
                    return Err(ConfigError::BadValue {
                        line,
                        key: key.to_string(),
                        value,
                    })
                }
            }
        }
        cfg.network = RingNetwork::new(
            cfg.network.circumference,
            cfg.network.merge_point,
            cfg.network.onramp_length,
            cfg.network.speed_limit,
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes every key, so the output parses back to an equal config.
impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = &self.network;
        let i = &self.idm;
        writeln!(f, "experiment = {}", self.experiment)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "n_steps = {}", self.n_steps)?;
        writeln!(f, "dt_s = {}", self.dt)?;
        writeln!(f, "horizon_s = {}", self.horizon)?;
        writeln!(f, "inflow_veh_per_hour = {}", self.inflow_rate)?;
        writeln!(f, "circumference_m = {}", n.circumference)?;
        writeln!(f, "merge_point_m = {}", n.merge_point)?;
        writeln!(f, "onramp_length_m = {}", n.onramp_length)?;
        writeln!(f, "speed_limit_mps = {}", n.speed_limit)?;
        writeln!(f, "vehicle_length_m = {}", self.vehicle_length)?;
        writeln!(f, "n_hv = {}", self.census.n_hv)?;
        writeln!(f, "n_connected = {}", self.census.n_connected)?;
        writeln!(f, "n_coop = {}", self.census.n_coop)?;
        writeln!(f, "idm_desired_speed_mps = {}", i.desired_speed)?;
        writeln!(f, "idm_time_headway_s = {}", i.time_headway)?;
        writeln!(f, "idm_min_gap_m = {}", i.min_gap)?;
        writeln!(f, "idm_max_accel_mps2 = {}", i.max_accel)?;
        writeln!(f, "idm_comfortable_decel_mps2 = {}", i.comfortable_decel)?;
        writeln!(f, "idm_accel_exponent = {}", i.accel_exponent)?;
        writeln!(f, "idm_max_decel_mps2 = {}", i.max_decel)?;
        writeln!(f, "coop_planning_interval_s = {}", self.coop.planning_interval)?;
        writeln!(f, "coop_engage_distance_m = {}", self.coop.engage_distance)?;
        if let Some(h) = self.coop.hold_distance {
            writeln!(f, "coop_hold_distance_m = {h}")?;
        }
        writeln!(f, "courtesy_yield = {}", self.courtesy_yield)?;
        writeln!(f, "courtesy_zone_m = {}", self.courtesy_zone)?;
        writeln!(f, "placement_jitter = {}", self.placement_jitter)
    }
}
