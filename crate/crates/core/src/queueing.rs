//! Sizing a shared pool of remote supervisors.
//!
//! Merges that need a human arrive as a thinned superposition of per-ramp
//! Poisson streams; each supervisor holds a merge for an Exp(mu) time and a
//! merge that finds every supervisor busy goes unsupervised. That is the
//! M/M/m/m loss system, whose blocking probability is Erlang B.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{at_least, positive, unit_interval, DomainError, Result};

/// Parameters of the supervisor pool. `risk_threshold` is the acceptable
/// fraction of unsupervised merges.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisorPool {
    pub n_supervisors: u32,
    /// Per-supervisor completion rate, 1/s.
    pub service_rate: f64,
    /// Per-ramp arrival rates of merges meeting the on-ramp condition, 1/s.
    pub ramp_arrival_rates: Vec<f64>,
    /// Probability the in-ring condition also holds.
    pub reach_prob: f64,
    pub risk_threshold: f64,
}

impl SupervisorPool {
    pub fn validate(&self) -> Result<()> {
        positive("service_rate", self.service_rate)?;
        for &r in &self.ramp_arrival_rates {
            at_least("arrival rate", r, 0.0)?;
        }
        unit_interval("reach_prob", self.reach_prob)?;
        unit_interval("risk_threshold", self.risk_threshold)?;
        Ok(())
    }

    pub fn offered_load(&self) -> Result<f64> {
        Ok(effective_arrival_rate(self)? / self.service_rate)
    }

    pub fn loss_probability(&self) -> Result<f64> {
        Ok(erlang_loss(self.n_supervisors, self.offered_load()?))
    }

    pub fn min_supervisors(&self) -> Result<u32> {
        min_supervisors(
            effective_arrival_rate(self)?,
            self.service_rate,
            self.risk_threshold,
        )
    }
}

/// Superpose the ramp streams and thin by the in-ring reach probability.
pub fn effective_arrival_rate(pool: &SupervisorPool) -> Result<f64> {
    pool.validate()?;
    Ok(pool.ramp_arrival_rates.iter().sum::<f64>() * pool.reach_prob)
}

/// Erlang B blocking probability for `servers` servers at offered load
/// `load`, by the recurrence `B(m) = a B(m-1) / (m + a B(m-1))`.
pub fn erlang_loss(servers: u32, load: f64) -> f64 {
    debug_assert!(load >= 0.0);
    (1..=servers).fold(1.0, |b, m| {
        let ab = load * b;
        ab / (f64::from(m) + ab)
    })
}

/// Erlang B from `(a^M/M!) / sum_i a^i/i!`, with each term scaled by the
/// largest one and summed smallest first. Independent of [`erlang_loss`].
pub fn erlang_loss_direct(servers: u32, load: f64) -> f64 {
    if load == 0.0 {
        return if servers == 0 { 1.0 } else { 0.0 };
    }
    let ln_a = load.ln();
    let log_terms: Vec<f64> = (0..=servers)
        .map(|i| f64::from(i) * ln_a - ln_factorial(i))
        .collect();
    let peak = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut scaled: Vec<f64> = log_terms.iter().map(|t| (t - peak).exp()).collect();
    let top = scaled[servers as usize];
    scaled.sort_by(f64::total_cmp);
    top / scaled.iter().sum::<f64>()
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// Smallest pool size whose blocking probability is at most `epsilon`.
pub fn min_supervisors(arrival_rate: f64, service_rate: f64, epsilon: f64) -> Result<u32> {
    at_least("arrival_rate", arrival_rate, 0.0)?;
    positive("service_rate", service_rate)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(DomainError::OutOfRange {
            name: "epsilon",
            requirement: "in (0, 1]",
            value: epsilon,
        });
    }
    if arrival_rate == 0.0 {
        return Ok(0);
    }
    let load = arrival_rate / service_rate;
    let (mut m, mut b) = (0u32, 1.0f64);
    while b > epsilon {
        m += 1;
        b = load * b / (f64::from(m) + load * b);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSimulation {
    pub loss_fraction: f64,
    pub n_arrivals: u64,
    pub n_lost: u64,
}

impl LossSimulation {
    /// Binomial standard error of `loss_fraction` around probability `p`.
    pub fn std_err(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_arrivals.max(1) as f64).sqrt()
    }
}

/// Event-driven M/M/m/m simulation over `[0, duration)`. Arrivals that find
/// every server busy are lost, never queued.
pub fn simulate_loss_system(
    arrival_rate: f64,
    service_rate: f64,
    servers: u32,
    duration: f64,
    seed: u64,
) -> Result<LossSimulation> {
    positive("arrival_rate", arrival_rate)?;
    positive("service_rate", service_rate)?;
    positive("duration", duration)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interarrival = Exp::new(arrival_rate).expect("positive rate");
    let holding = Exp::new(service_rate).expect("positive rate");

    // Completion times of busy servers; f64 bits order like the values for
    // non-negative times.
    let mut busy: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
    let (mut n_arrivals, mut n_lost) = (0u64, 0u64);
    let mut now = interarrival.sample(&mut rng);
    while now < duration {
        while busy.peek().is_some_and(|&Reverse(t)| f64::from_bits(t) <= now) {
            busy.pop();
        }
        n_arrivals += 1;
        if busy.len() < servers as usize {
            busy.push(Reverse((now + holding.sample(&mut rng)).to_bits()));
        } else {
            n_lost += 1;
        }
        now += interarrival.sample(&mut rng);
    }
    Ok(LossSimulation {
        loss_fraction: if n_arrivals == 0 {
            0.0
        } else {
            n_lost as f64 / n_arrivals as f64
        },
        n_arrivals,
        n_lost,
    })
}

/// Event times of independent Poisson streams with the given rates, merged
/// and then thinned with keep-probability `keep`, until `n_events` survive.
pub fn superpose_and_thin(rates: &[f64], keep: f64, n_events: usize, seed: u64) -> Result<Vec<f64>> {
    unit_interval("keep", keep)?;
    if keep == 0.0 || rates.iter().all(|&r| r == 0.0) {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut streams = Vec::new();
    let mut next = BinaryHeap::new();
    for (i, &r) in rates.iter().enumerate() {
        at_least("rate", r, 0.0)?;
        if r > 0.0 {
            let exp = Exp::new(r).expect("positive rate");
            next.push(Reverse((exp.sample(&mut rng).to_bits(), i)));
            streams.push(Some(exp));
        } else {
            streams.push(None);
        }
    }
    let mut out = Vec::with_capacity(n_events);
    while out.len() < n_events {
        let Reverse((bits, i)) = next.pop().expect("at least one live stream");
        let t = f64::from_bits(bits);
        if rng.random::<f64>() < keep {
            out.push(t);
        }
        let exp = streams[i].as_ref().expect("live stream");
        next.push(Reverse(((t + exp.sample(&mut rng)).to_bits(), i)));
    }
    Ok(out)
}

/// Back-of-envelope fleet size one supervisor can cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FleetCapacity {
    /// Vehicles whose highway merges one supervisor can cover.
    pub per_highway_vehicle: u64,
    /// Including vehicles that never drive on limited-access roads.
    pub overall: u64,
}

/// Floor that ignores rounding noise just below an integer.
fn snap_floor(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

pub fn fleet_capacity_estimate(
    avg_speed_mph: f64,
    trip_length_miles: f64,
    takeover_time_s: f64,
    merges_per_trip: f64,
    highway_vmt_share: f64,
) -> Result<FleetCapacity> {
    positive("avg_speed", avg_speed_mph)?;
    positive("trip_length", trip_length_miles)?;
    positive("takeover_time", takeover_time_s)?;
    positive("merges_per_trip", merges_per_trip)?;
    if !(highway_vmt_share > 0.0 && highway_vmt_share <= 1.0) {
        return Err(DomainError::OutOfRange {
            name: "highway_vmt_share",
            requirement: "in (0, 1]",
            value: highway_vmt_share,
        });
    }
    let trip_s = trip_length_miles / avg_speed_mph * 3600.0;
    let duty = merges_per_trip * takeover_time_s / trip_s;
    if duty > 1.0 {
        return Ok(FleetCapacity {
            per_highway_vehicle: 0,
            overall: 0,
        });
    }
    let per_highway_vehicle = snap_floor(1.0 / duty);
    Ok(FleetCapacity {
        per_highway_vehicle,
        overall: snap_floor(per_highway_vehicle as f64 / highway_vmt_share),
    })
}
