//! Probability that some in-ring vehicle can reach the merge point.
//!
//! Two families live here:
//!
//! * union bounds over a concrete census of vehicles ([`RingScenario`]),
//!   for all-human rings, rings with connected AVs and rings with
//!   supervision-aware (cooperative) AVs;
//! * "typical case" per-vehicle probabilities when the nearest cooperative AV
//!   blocks every human driver behind it ([`DistributionSpec`]). Distances
//!   are normalised to a ring of circumference 1.
//!
//! Every closed form has an independent quadrature route
//! ([`quadrature_joint_prob`]) and a sampling route
//! ([`monte_carlo_typical`], [`monte_carlo_scenario`]).

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{at_least, positive, unit_interval, DomainError, Result};
use crate::quadrature::{integrate_2d, Estimate};

/// Absolute accuracy requested from the quadrature oracle.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Census of a ring at one instant, in physical units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RingScenario {
    /// Ring circumference, m.
    pub circumference: f64,
    /// Reachable distance of every human-driven (unconnected) vehicle, m.
    pub hv_reach: Vec<f64>,
    /// Length (optionally with buffer) of every connected AV, m.
    pub av_lengths: Vec<f64>,
    /// Number of cooperative AVs; they never contribute to the bounds.
    pub n_coop: usize,
    /// Reachable distance of the merging vehicle, m.
    pub onramp_reach: f64,
    /// On-ramp length, m.
    pub onramp_length: f64,
}

impl RingScenario {
    pub fn validate(&self) -> Result<()> {
        positive("circumference", self.circumference)?;
        for &d in self.hv_reach.iter().chain(&self.av_lengths) {
            at_least("reach distance", d, 0.0)?;
        }
        at_least("onramp_reach", self.onramp_reach, 0.0)?;
        at_least("onramp_length", self.onramp_length, 0.0)?;
        Ok(())
    }

    /// The on-ramp bound assumes the ramp is at least as long as the merging
    /// vehicle's reach. Callers may still evaluate it when this is false.
    pub fn ramp_long_enough(&self) -> bool {
        self.onramp_length >= self.onramp_reach
    }

    fn hv_sum(&self) -> f64 {
        self.hv_reach.iter().sum()
    }

    fn av_sum(&self) -> f64 {
        self.av_lengths.iter().sum()
    }
}

/// A probability upper bound before and after clamping to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub raw: f64,
    pub clamped: f64,
}

impl Bound {
    fn new(raw: f64) -> Self {
        Self {
            raw,
            clamped: raw.min(1.0),
        }
    }
}

/// Union bound for human drivers placed uniformly on the ring.
pub fn lemma1_bound(scenario: &RingScenario) -> Result<Bound> {
    scenario.validate()?;
    Ok(Bound::new(scenario.hv_sum() / scenario.circumference))
}

/// Joint bound with a merging vehicle placed uniformly on the on-ramp. Each
/// factor is clamped to 1 before multiplying.
pub fn lemma2_joint_bound(scenario: &RingScenario) -> Result<f64> {
    scenario.validate()?;
    positive("onramp_length", scenario.onramp_length)?;
    let ring = lemma1_bound(scenario)?.clamped;
    let ramp = (scenario.onramp_reach / scenario.onramp_length).min(1.0);
    Ok(ring * ramp)
}

/// Connected AVs contribute their length instead of their reach.
pub fn connected_bound(scenario: &RingScenario) -> Result<Bound> {
    scenario.validate()?;
    Ok(Bound::new(
        (scenario.hv_sum() + scenario.av_sum()) / scenario.circumference,
    ))
}

/// Cooperative AVs never trigger; only human drivers remain in the sum.
pub fn worstcase_coop_bound(scenario: &RingScenario) -> Result<Bound> {
    scenario.validate()?;
    Ok(Bound::new(scenario.hv_sum() / scenario.circumference))
}

/// Placement law for the typical-case probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistributionKind {
    /// Independent uniform humans and AVs; nearest AV is Beta(1, S).
    Uniform,
    /// Nearest AV truncated Exp(S); human position is a truncated Exp(1)
    /// offset behind it, wrapping around the ring.
    TruncatedExponential,
    /// As above behind the nearest AV, but uniform between the merge point
    /// and the nearest AV.
    AppendixMixed,
}

impl DistributionKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::TruncatedExponential => "truncexp",
            Self::AppendixMixed => "appendix",
        }
    }
}

/// Typical-case query: reach fraction `d` of a unit ring and `s`
/// cooperative AVs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub d: f64,
    pub s: u32,
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, d: f64, s: u32) -> Result<Self> {
        unit_interval("d", d)?;
        Ok(Self { kind, d, s })
    }

    /// Normalise a physical reach by the ring circumference.
    pub fn from_physical(
        kind: DistributionKind,
        reach_m: f64,
        circumference_m: f64,
        s: u32,
    ) -> Result<Self> {
        positive("circumference", circumference_m)?;
        at_least("reach", reach_m, 0.0)?;
        Self::new(kind, (reach_m / circumference_m).min(1.0), s)
    }

    /// Joint density of (nearest AV distance `a`, human distance `h`) on the
    /// unit square. Requires `s >= 1`.
    pub fn density(&self, a: f64, h: f64) -> f64 {
        let s = f64::from(self.s);
        match self.kind {
            DistributionKind::Uniform => s * (1.0 - a).powi(self.s as i32 - 1),
            DistributionKind::TruncatedExponential => {
                let behind = if h >= a { h - a } else { h + 1.0 - a };
                truncated_exp_pdf(behind, 1.0) * truncated_exp_pdf(a, s)
            }
            DistributionKind::AppendixMixed => {
                let conditional = if h >= a {
                    truncated_exp_pdf(h - a, 1.0)
                } else if a > 0.0 {
                    a.exp_m1() / (a * (E - 1.0))
                } else {
                    1.0 / (E - 1.0)
                };
                conditional * truncated_exp_pdf(a, s)
            }
        }
    }
}

/// Density of Exp(rate) truncated to [0, 1].
fn truncated_exp_pdf(x: f64, rate: f64) -> f64 {
    rate * (-rate * x).exp() / -(-rate).exp_m1()
}

/// Pr(H <= d, H <= A(1)) with uniform placements:
/// `(1 - (1-d)^(S+1)) / (S+1)`. Equals `d` when `s = 0`.
pub fn uniform_typical_prob(d: f64, s: u32) -> Result<f64> {
    unit_interval("d", d)?;
    if s == 0 {
        return Ok(d);
    }
    let n = f64::from(s) + 1.0;
    // 1 - (1-d)^n without cancellation for small d.
    Ok(-((n * (-d).ln_1p()).exp_m1()) / n)
}

/// Relative reduction of the per-vehicle term against the connected-AV
/// baseline `Pr(H <= d) = d`.
pub fn uniform_relative_improvement(d: f64, s: u32) -> Result<f64> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(DomainError::OutOfRange {
            name: "d",
            requirement: "in (0, 1]",
            value: d,
        });
    }
    Ok(1.0 - uniform_typical_prob(d, s)? / d)
}

/// `(joint, upper part)` of the truncated-exponential closed forms, i.e.
/// Pr(H <= d, H <= A(1)) and Pr(H <= d, H > A(1)). Singular at `s = 1`.
fn truncexp_parts(d: f64, s: f64) -> (f64, f64) {
    let norm = s / (-(-1.0f64).exp_m1() * -(-s).exp_m1());
    let k = norm / E;
    let m = s - 1.0;
    // int_0^d e^{-m a} da and int_0^d e^{-s a} da
    let decay_m = -(-m * d).exp_m1() / m;
    let decay_s = -(-s * d).exp_m1() / s;
    let below = decay_m - decay_s;
    let beyond = -(-d).exp_m1() * ((-m * d).exp() - (-m).exp()) / m;
    let joint = k * (below + beyond);
    let upper = norm * (decay_s - (-d).exp() * decay_m);
    (joint, upper)
}

fn truncexp_domain(d: f64) -> Result<()> {
    unit_interval("d", d).map(|_| ())
}

/// Pr(H <= d, H <= A(1)) under the truncated-exponential platoon law.
/// `s = 1` is evaluated by quadrature; `s = 0` is the no-AV baseline `d`.
pub fn truncexp_joint_prob(d: f64, s: u32) -> Result<f64> {
    truncexp_domain(d)?;
    match s {
        0 => Ok(d),
        1 => quadrature_joint_prob(&DistributionSpec::new(
            DistributionKind::TruncatedExponential,
            d,
            1,
        )?),
        _ => Ok(truncexp_parts(d, f64::from(s)).0),
    }
}

/// Pr(H <= d) under the truncated-exponential law; differs from `d` because
/// the AVs shift where humans sit.
pub fn truncexp_marginal_prob(d: f64, s: u32) -> Result<f64> {
    truncexp_domain(d)?;
    match s {
        0 => Ok(d),
        1 => quadrature_marginal_prob(&DistributionSpec::new(
            DistributionKind::TruncatedExponential,
            d,
            1,
        )?),
        _ => {
            let (joint, upper) = truncexp_parts(d, f64::from(s));
            Ok(joint + upper)
        }
    }
}

/// Joint probability by double quadrature over {h <= d, h <= a}.
pub fn quadrature_joint_prob(spec: &DistributionSpec) -> Result<f64> {
    quadrature_joint_estimate(spec, QUADRATURE_TOLERANCE).map(|e| e.value)
}

pub fn quadrature_joint_estimate(spec: &DistributionSpec, tolerance: f64) -> Result<Estimate> {
    unit_interval("d", spec.d)?;
    if spec.s == 0 {
        return Ok(Estimate {
            value: spec.d,
            error: 0.0,
        });
    }
    let d = spec.d;
    // Outer variable a (nearest AV), inner h (human) on [0, min(a, d)].
    integrate_2d(
        |a, h| spec.density(a, h),
        0.0,
        1.0,
        &[d],
        |_| 0.0,
        |a| a.min(d),
        |_| Vec::new(),
        tolerance,
    )
}

/// Pr(H <= d) by quadrature: the joint region plus {a < h <= d}.
pub fn quadrature_marginal_prob(spec: &DistributionSpec) -> Result<f64> {
    unit_interval("d", spec.d)?;
    if spec.s == 0 {
        return Ok(spec.d);
    }
    let d = spec.d;
    let joint = quadrature_joint_estimate(spec, QUADRATURE_TOLERANCE)?;
    let above = integrate_2d(
        |a, h| spec.density(a, h),
        0.0,
        d,
        &[],
        |a| a,
        |_| d,
        |_| Vec::new(),
        QUADRATURE_TOLERANCE,
    )?;
    Ok(joint.value + above.value)
}

/// Total mass of the joint density over the unit square.
pub fn density_mass(spec: &DistributionSpec) -> Result<f64> {
    if spec.s == 0 {
        return Ok(1.0);
    }
    integrate_2d(
        |a, h| spec.density(a, h),
        0.0,
        1.0,
        &[],
        |_| 0.0,
        |_| 1.0,
        |a| vec![a],
        QUADRATURE_TOLERANCE,
    )
    .map(|e| e.value)
}

/// Closed form where one exists, quadrature otherwise.
pub fn typical_joint_prob(spec: &DistributionSpec) -> Result<f64> {
    match spec.kind {
        DistributionKind::Uniform => uniform_typical_prob(spec.d, spec.s),
        DistributionKind::TruncatedExponential => truncexp_joint_prob(spec.d, spec.s),
        DistributionKind::AppendixMixed => quadrature_joint_prob(spec),
    }
}

pub fn typical_marginal_prob(spec: &DistributionSpec) -> Result<f64> {
    match spec.kind {
        DistributionKind::Uniform => {
            unit_interval("d", spec.d)?;
            Ok(spec.d)
        }
        DistributionKind::TruncatedExponential => truncexp_marginal_prob(spec.d, spec.s),
        DistributionKind::AppendixMixed => quadrature_marginal_prob(spec),
    }
}

/// `(d - joint) / d`: reduction against the connected-AV baseline.
pub fn relative_improvement(joint_prob: f64, d: f64) -> Result<f64> {
    positive("d", d)?;
    Ok((d - joint_prob) / d)
}

/// Bernoulli frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl McEstimate {
    fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }

    /// |p - expected| within `k` standard errors, with a floor of one count
    /// so a zero-variance estimate is not trivially rejected.
    pub fn agrees_with(&self, expected: f64, k: f64) -> bool {
        let slack = k * self.std_err.max(1.0 / self.trials as f64);
        (self.p - expected).abs() <= slack
    }
}

/// Trials are drawn in fixed-size chunks, each from its own ChaCha stream,
/// so results do not depend on how chunks are scheduled.
const CHUNK: u64 = 1 << 16;

fn for_each_chunk(trials: u64, seed: u64, mut f: impl FnMut(&mut ChaCha8Rng, u64)) {
    let mut start = 0;
    let mut stream = 0;
    while start < trials {
        let n = CHUNK.min(trials - start);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        f(&mut rng, n);
        start += n;
        stream += 1;
    }
}

/// Sample uniform, independent placements of every vehicle in `scenario` and
/// count how often some in-ring vehicle triggers (and, with `with_ramp`, the
/// merging vehicle too).
pub fn monte_carlo_scenario(
    scenario: &RingScenario,
    with_ramp: bool,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    scenario.validate()?;
    if trials == 0 {
        return Err(DomainError::OutOfRange {
            name: "trials",
            requirement: ">= 1",
            value: 0.0,
        });
    }
    if with_ramp {
        positive("onramp_length", scenario.onramp_length)?;
    }
    let c = scenario.circumference;
    let mut hits = 0u64;
    for_each_chunk(trials, seed, |rng, n| {
        for _ in 0..n {
            // Draw every position even after a hit so the stream layout is fixed.
            let hv = scenario
                .hv_reach
                .iter()
                .fold(false, |acc, &d| (rng.random::<f64>() * c <= d) | acc);
            let av = scenario
                .av_lengths
                .iter()
                .fold(false, |acc, &l| (rng.random::<f64>() * c <= l) | acc);
            let ramp = !with_ramp
                || rng.random::<f64>() * scenario.onramp_length <= scenario.onramp_reach;
            if (hv || av) && ramp {
                hits += 1;
            }
        }
    });
    Ok(McEstimate::from_counts(hits, trials))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalMc {
    /// Pr(H <= d, H <= A(1)).
    pub joint: McEstimate,
    /// Pr(H <= d).
    pub marginal: McEstimate,
}

/// Inverse CDF of Exp(rate) truncated to [0, width].
fn sample_truncated_exp(rng: &mut ChaCha8Rng, rate: f64, width: f64) -> f64 {
    let u: f64 = rng.random();
    -(u * (-rate * width).exp_m1()).ln_1p() / rate
}

/// Sample (nearest AV, human) pairs from the generative description of
/// each placement law.
pub fn monte_carlo_typical(spec: &DistributionSpec, trials: u64, seed: u64) -> Result<TypicalMc> {
    unit_interval("d", spec.d)?;
    if trials == 0 {
        return Err(DomainError::OutOfRange {
            name: "trials",
            requirement: ">= 1",
            value: 0.0,
        });
    }
    let s = spec.s;
    let (mut joint, mut marginal) = (0u64, 0u64);
    for_each_chunk(trials, seed, |rng, n| {
        for _ in 0..n {
            let (a, h) = match spec.kind {
                _ if s == 0 => (f64::INFINITY, rng.random::<f64>()),
                DistributionKind::Uniform => {
                    let a = (0..s).map(|_| rng.random::<f64>()).fold(1.0, f64::min);
                    (a, rng.random::<f64>())
                }
                DistributionKind::TruncatedExponential => {
                    let a = sample_truncated_exp(rng, f64::from(s), 1.0);
                    let behind = sample_truncated_exp(rng, 1.0, 1.0);
                    (a, (a + behind) % 1.0)
                }
                DistributionKind::AppendixMixed => {
                    let a = sample_truncated_exp(rng, f64::from(s), 1.0);
                    let ahead_mass = a.exp_m1() / (E - 1.0);
                    let h = if rng.random::<f64>() < ahead_mass {
                        rng.random::<f64>() * a
                    } else {
                        a + sample_truncated_exp(rng, 1.0, 1.0 - a)
                    };
                    (a, h)
                }
            };
            if h <= spec.d {
                marginal += 1;
                if h <= a {
                    joint += 1;
                }
            }
        }
    });
    Ok(TypicalMc {
        joint: McEstimate::from_counts(joint, trials),
        marginal: McEstimate::from_counts(marginal, trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ring(c: f64, hv: Vec<f64>, av: Vec<f64>) -> RingScenario {
        RingScenario {
            circumference: c,
            hv_reach: hv,
            av_lengths: av,
            n_coop: 0,
            onramp_reach: 0.0,
            onramp_length: 200.0,
        }
    }

    #[test]
    fn lemma1_examples() {
        assert_eq!(lemma1_bound(&ring(1000.0, vec![], vec![])).unwrap().raw, 0.0);
        assert_abs_diff_eq!(lemma1_bound(&ring(1000.0, vec![100.0], vec![])).unwrap().raw, 0.1);
        let b = lemma1_bound(&ring(1200.0, vec![262.0; 18], vec![])).unwrap();
        assert_abs_diff_eq!(b.raw, 3.93, epsilon = 1e-12);
        assert_eq!(b.clamped, 1.0);
        assert!(lemma1_bound(&ring(0.0, vec![], vec![])).is_err());
    }

    #[test]
    fn lemma2_examples() {
        let mut s = ring(1000.0, vec![100.0], vec![]);
        s.onramp_reach = 50.0;
        assert_abs_diff_eq!(lemma2_joint_bound(&s).unwrap(), 0.025, epsilon = 1e-15);
        s.onramp_reach = 0.0;
        assert_eq!(lemma2_joint_bound(&s).unwrap(), 0.0);
        let mut s = ring(1200.0, vec![262.0; 18], vec![]);
        s.onramp_reach = 60.0;
        assert_abs_diff_eq!(lemma2_joint_bound(&s).unwrap(), 0.3, epsilon = 1e-15);
        s.onramp_length = 0.0;
        assert!(lemma2_joint_bound(&s).is_err());
    }

    #[test]
    fn connected_examples() {
        let base = ring(1200.0, vec![262.0; 18], vec![]);
        assert_eq!(connected_bound(&base).unwrap(), lemma1_bound(&base).unwrap());
        let mixed = ring(1200.0, vec![262.0; 17], vec![5.0]);
        assert_abs_diff_eq!(
            connected_bound(&mixed).unwrap().raw,
            (17.0 * 262.0 + 5.0) / 1200.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(connected_bound(&mixed).unwrap().raw, 3.716, epsilon = 1e-3);
        let all_av = ring(1200.0, vec![], vec![5.0; 18]);
        assert_abs_diff_eq!(connected_bound(&all_av).unwrap().raw, 18.0 * 5.0 / 1200.0, epsilon = 1e-15);
    }

    #[test]
    fn worstcase_examples() {
        let mut all_coop = ring(1200.0, vec![], vec![]);
        all_coop.n_coop = 18;
        assert_eq!(worstcase_coop_bound(&all_coop).unwrap().raw, 0.0);
        let mixed = ring(1200.0, vec![262.0; 13], vec![5.0, 4.5, 6.0]);
        let diff = connected_bound(&mixed).unwrap().raw - worstcase_coop_bound(&mixed).unwrap().raw;
        assert_abs_diff_eq!(diff, 15.5 / 1200.0, epsilon = 1e-12);
        assert_abs_diff_eq!(worstcase_coop_bound(&mixed).unwrap().raw, 2.838, epsilon = 5e-4);
    }

    #[test]
    fn uniform_examples() {
        assert_abs_diff_eq!(uniform_typical_prob(0.1, 5).unwrap(), 0.078, epsilon = 5e-4);
        assert_eq!(uniform_typical_prob(0.37, 0).unwrap(), 0.37);
        for s in 0..20 {
            assert_abs_diff_eq!(uniform_typical_prob(1.0, s).unwrap(), 1.0 / f64::from(s + 1), epsilon = 1e-15);
        }
        assert!(uniform_typical_prob(1.1, 2).is_err());
        assert_abs_diff_eq!(uniform_relative_improvement(0.1, 5).unwrap(), 0.219, epsilon = 5e-4);
        assert_eq!(uniform_relative_improvement(0.3, 0).unwrap(), 0.0);
        // 1 - (1 - 0.9^16) / 1.6, evaluated independently in 50-digit arithmetic.
        assert_abs_diff_eq!(uniform_relative_improvement(0.1, 15).unwrap(), 0.490_813_761_803_240, epsilon = 1e-12);
        assert!(uniform_relative_improvement(0.0, 3).is_err());
    }

    #[test]
    fn truncexp_examples() {
        assert_abs_diff_eq!(truncexp_joint_prob(0.1, 5).unwrap(), 0.0564, epsilon = 5e-5);
        assert_abs_diff_eq!(truncexp_joint_prob(0.1, 2).unwrap(), 0.0749, epsilon = 5e-5);
        assert_abs_diff_eq!(truncexp_joint_prob(0.01, 5).unwrap(), 0.0070, epsilon = 5e-5);
        assert_abs_diff_eq!(truncexp_marginal_prob(0.1, 5).unwrap(), 0.0891, epsilon = 5e-5);
        assert_abs_diff_eq!(truncexp_marginal_prob(0.1, 16).unwrap(), 0.1074, epsilon = 5e-5);
        assert_abs_diff_eq!(truncexp_marginal_prob(0.01, 10).unwrap(), 0.0069, epsilon = 5e-5);
    }

    #[test]
    fn truncexp_singular_count_uses_quadrature() {
        // S = 1 has no closed form; S = 1 + tiny would. Compare against the
        // limit taken numerically from both sides of the closed form.
        let q = truncexp_joint_prob(0.2, 1).unwrap();
        let near = (truncexp_parts(0.2, 1.0 + 1e-6).0 + truncexp_parts(0.2, 1.0 - 1e-6).0) / 2.0;
        assert_abs_diff_eq!(q, near, epsilon = 1e-8);
        let m = truncexp_marginal_prob(0.2, 1).unwrap();
        let parts_hi = truncexp_parts(0.2, 1.0 + 1e-6);
        assert_abs_diff_eq!(m, parts_hi.0 + parts_hi.1, epsilon = 1e-5);
    }

    #[test]
    fn quadrature_examples() {
        let uni = DistributionSpec::new(DistributionKind::Uniform, 0.1, 5).unwrap();
        assert_abs_diff_eq!(quadrature_joint_prob(&uni).unwrap(), uniform_typical_prob(0.1, 5).unwrap(), epsilon = 1e-8);
        let app = DistributionSpec::new(DistributionKind::AppendixMixed, 0.1, 5).unwrap();
        assert_abs_diff_eq!(quadrature_joint_prob(&app).unwrap(), 0.0519237, epsilon = 1e-6);
        let app = DistributionSpec::new(DistributionKind::AppendixMixed, 0.01, 5).unwrap();
        assert_abs_diff_eq!(quadrature_joint_prob(&app).unwrap(), 0.00631588, epsilon = 1e-7);
    }

    #[test]
    fn relative_improvement_examples() {
        assert_abs_diff_eq!(relative_improvement(0.0564, 0.1).unwrap(), 0.4360, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_improvement(0.0639507, 0.1).unwrap(), 0.3605, epsilon = 1e-4);
        assert_eq!(relative_improvement(0.25, 0.25).unwrap(), 0.0);
        assert!(relative_improvement(0.0, 0.0).is_err());
    }

    #[test]
    fn monte_carlo_single_vehicle() {
        let s = ring(1.0, vec![0.1], vec![]);
        let est = monte_carlo_scenario(&s, false, 1_000_000, 7).unwrap();
        assert!(est.agrees_with(0.1, 3.0), "{est:?}");
    }

    #[test]
    fn monte_carlo_typical_examples() {
        let uni = DistributionSpec::new(DistributionKind::Uniform, 0.1, 5).unwrap();
        let est = monte_carlo_typical(&uni, 1_000_000, 11).unwrap();
        assert!(est.joint.agrees_with(uniform_typical_prob(0.1, 5).unwrap(), 3.0), "{est:?}");
        let app = DistributionSpec::new(DistributionKind::AppendixMixed, 0.1, 2).unwrap();
        let est = monte_carlo_typical(&app, 1_000_000, 12).unwrap();
        assert!(est.joint.agrees_with(0.0639507, 3.0), "{est:?}");
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let tr = DistributionSpec::new(DistributionKind::TruncatedExponential, 0.3, 4).unwrap();
        assert_eq!(
            monte_carlo_typical(&tr, 100_000, 3).unwrap(),
            monte_carlo_typical(&tr, 100_000, 3).unwrap()
        );
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(monte_carlo_scenario(&ring(1.0, vec![], vec![]), false, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn blocking_never_hurts(d in 0.0..=1.0f64, s in 0u32..64) {
            let p = uniform_typical_prob(d, s).unwrap();
            prop_assert!(p <= d);
            if s > 0 && d > 1e-9 {
                prop_assert!(p < d);
            }
        }

        #[test]
        fn uniform_improvement_monotone(d in 0.01..0.99f64, s in 1u32..40, step in 0.001..0.01f64) {
            let base = uniform_relative_improvement(d, s).unwrap();
            prop_assert!(uniform_relative_improvement(d, s + 1).unwrap() > base);
            prop_assert!(uniform_relative_improvement((d + step).min(1.0), s).unwrap() > base);
        }

        #[test]
        fn connected_scaling_is_linear(n in 1usize..30, k in 0usize..30, reach in 0.0..400.0f64,
                                       len in 0.0..10.0f64, c in 100.0..5000.0f64) {
            let k = k.min(n);
            let before = connected_bound(&ring(c, vec![reach; n - k], vec![len; k])).unwrap().raw;
            if k < n {
                let after = connected_bound(&ring(c, vec![reach; n - k - 1], vec![len; k + 1])).unwrap().raw;
                prop_assert!((before - after - (reach - len) / c).abs() < 1e-9);
            }
        }
    }
}
