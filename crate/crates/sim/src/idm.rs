//! Intelligent Driver Model car following.

use ringsup_core::DomainError;

/// IDM parameters shared by every vehicle class. Defaults are a standard
/// highway calibration with a 50 mph desired speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    /// v0, m/s.
    pub desired_speed: f64,
    /// T_h, s.
    pub time_headway: f64,
    /// s0, jam gap, m.
    pub min_gap: f64,
    /// a, m/s^2.
    pub max_accel: f64,
    /// b, m/s^2.
    pub comfortable_decel: f64,
    /// delta.
    pub accel_exponent: f64,
    /// Physical braking limit, m/s^2 (positive). Outputs are clamped to
    /// `[-max_decel, max_accel]`.
    pub max_decel: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_speed: 22.35,
            time_headway: 1.0,
            min_gap: 2.0,
            max_accel: 2.6,
            comfortable_decel: 4.5,
            accel_exponent: 4.0,
            max_decel: 9.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let fields = [
            ("idm desired_speed", self.desired_speed),
            ("idm time_headway", self.time_headway),
            ("idm min_gap", self.min_gap),
            ("idm max_accel", self.max_accel),
            ("idm comfortable_decel", self.comfortable_decel),
            ("idm accel_exponent", self.accel_exponent),
            ("idm max_decel", self.max_decel),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(DomainError::OutOfRange {
                    name,
                    requirement: "finite and > 0",
                    value,
                });
            }
        }
        Ok(())
    }

    /// Desired dynamic gap s*. The velocity term is floored at zero so a
    /// fast-receding leader never asks for less than the jam gap.
    pub fn desired_gap(&self, speed: f64, approach_rate: f64) -> f64 {
        let dynamic = speed * self.time_headway
            + speed * approach_rate / (2.0 * (self.max_accel * self.comfortable_decel).sqrt());
        self.min_gap + dynamic.max(0.0)
    }
}

/// Gap value meaning "no leader".
pub const FREE_ROAD: f64 = f64::INFINITY;

/// IDM acceleration. `gap` is bumper to bumper; a non-positive gap is a
/// collision and yields full braking (the caller flags the collision).
pub fn idm_acceleration(speed: f64, gap: f64, approach_rate: f64, params: &IdmParams) -> f64 {
    let free = 1.0 - (speed / params.desired_speed).powf(params.accel_exponent);
    let interaction = if gap == FREE_ROAD {
        0.0
    } else if gap <= 0.0 {
        f64::INFINITY
    } else {
        (params.desired_gap(speed, approach_rate) / gap).powi(2)
    };
    (params.max_accel * (free - interaction)).clamp(-params.max_decel, params.max_accel)
}

/// Speed at which a vehicle following an equal-speed leader at `gap` is in
/// IDM equilibrium. Zero when `gap <= min_gap`.
pub fn equilibrium_speed(gap: f64, params: &IdmParams) -> f64 {
    if gap <= params.min_gap {
        return 0.0;
    }
    if gap == FREE_ROAD {
        return params.desired_speed;
    }
    // Acceleration at equal speeds is strictly decreasing in speed.
    let (mut lo, mut hi) = (0.0, params.desired_speed);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if idm_acceleration(mid, gap, 0.0, params) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    lo
}
