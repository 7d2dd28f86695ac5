//! Multi-trial experiments with seed-indexed trials and Wilson intervals.
//!
//! Trial `i` draws all of its randomness from `substream(base_seed, TRIAL, i)`,
//! so aggregates do not depend on execution order or worker count.

mod convergence;
mod negative;
pub mod oracles;

pub use convergence::{
    run_bias_tightness, run_linear_rate, run_no_bias_target, run_random_init, run_symmetric_convergence,
};
pub use negative::{run_f0_computation, run_negative_bias_failure, run_stuck_at_init};

use crate::error::{LabError, Result};
use crate::optimizer::TrajectoryRecord;
use crate::rng::{domain, substream, LabRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const WILSON_Z: f64 = 1.959963984540054;

/// Wilson score interval for `k` successes out of `n`, clamped to [0, 1].
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    StuckAtInit,
    NegativeBiasFailure,
    F0Computation,
    LinearRate,
    RandomInit,
    SymmetricConvergence,
    NoBiasTarget,
    BiasTightness,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::StuckAtInit,
        ExperimentId::NegativeBiasFailure,
        ExperimentId::F0Computation,
        ExperimentId::LinearRate,
        ExperimentId::RandomInit,
        ExperimentId::SymmetricConvergence,
        ExperimentId::NoBiasTarget,
        ExperimentId::BiasTightness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::StuckAtInit => "stuck_at_init",
            ExperimentId::NegativeBiasFailure => "negative_bias_failure",
            ExperimentId::F0Computation => "f0_computation",
            ExperimentId::LinearRate => "linear_rate",
            ExperimentId::RandomInit => "random_init",
            ExperimentId::SymmetricConvergence => "symmetric_convergence",
            ExperimentId::NoBiasTarget => "no_bias_target",
            ExperimentId::BiasTightness => "bias_tightness",
        }
    }

    /// Default trial count: cheap predicates get more trials than full trajectories.
    pub fn default_trials(self) -> usize {
        match self {
            ExperimentId::StuckAtInit => 4000,
            ExperimentId::NegativeBiasFailure => 1000,
            ExperimentId::F0Computation | ExperimentId::LinearRate => 1,
            ExperimentId::BiasTightness => 100,
            _ => 500,
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown experiment id `{s}`"))
    }
}

/// How the aggregate success fraction must relate to the reference value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum VerdictRule {
    /// p̂ ≥ reference − (Wilson upper − Wilson lower)/2.
    AtLeastMinusHalfWidth { reference: f64 },
    /// p̂ ≥ reference.
    AtLeast { reference: f64 },
    /// lo ≤ p̂ ≤ hi.
    Within { lo: f64, hi: f64 },
    /// Every trial succeeds.
    All,
    /// Reported without a pass condition on the fraction.
    ReportOnly,
}

impl VerdictRule {
    pub fn reference(&self) -> Option<f64> {
        match self {
            VerdictRule::AtLeastMinusHalfWidth { reference } | VerdictRule::AtLeast { reference } => Some(*reference),
            VerdictRule::Within { lo, hi } => Some(0.5 * (lo + hi)),
            VerdictRule::All => Some(1.0),
            VerdictRule::ReportOnly => None,
        }
    }

    pub fn holds(&self, k: usize, n: usize) -> bool {
        let p = if n == 0 { 0.0 } else { k as f64 / n as f64 };
        match *self {
            VerdictRule::AtLeastMinusHalfWidth { reference } => {
                let (lo, hi) = wilson_interval(k, n, WILSON_Z);
                p >= reference - 0.5 * (hi - lo)
            }
            VerdictRule::AtLeast { reference } => p >= reference,
            VerdictRule::Within { lo, hi } => p >= lo && p <= hi,
            VerdictRule::All => k == n,
            VerdictRule::ReportOnly => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One trial outcome. `invariant_ok` carries the per-trial conditions that
/// must hold regardless of the success flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub success: bool,
    pub invariant_ok: bool,
    pub values: BTreeMap<String, f64>,
}

impl TrialRecord {
    pub fn new(index: u64, success: bool, invariant_ok: bool) -> Self {
        Self { index, success, invariant_ok, values: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, x: f64) -> Self {
        self.values.insert(key.to_string(), x);
        self
    }

    pub fn flag(self, key: &str, b: bool) -> Self {
        self.with(key, if b { 1.0 } else { 0.0 })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn is(&self, key: &str) -> bool {
        self.get(key).is_some_and(|x| x != 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub id: ExperimentId,
    pub n_trials: usize,
    pub successes: usize,
    pub fraction: f64,
    pub interval: [f64; 2],
    pub reference: Option<f64>,
    pub rule: VerdictRule,
    pub invariant_violations: usize,
    pub checks: Vec<AggregateCheck>,
    pub verdict: Verdict,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub trials: Vec<TrialRecord>,
    #[serde(skip)]
    pub trajectories: Vec<(u64, TrajectoryRecord<f64>)>,
}

impl ExperimentResult {
    /// Aggregates trial records under `rule`; aggregate checks are recomputed from the records.
    pub fn from_trials(id: ExperimentId, rule: VerdictRule, trials: Vec<TrialRecord>) -> Self {
        let n = trials.len();
        let successes = trials.iter().filter(|t| t.success).count();
        let (lo, hi) = wilson_interval(successes, n, WILSON_Z);
        let invariant_violations = trials.iter().filter(|t| !t.invariant_ok).count();
        let checks = aggregate_checks(id, &trials);
        let verdict = decide(rule, successes, n, invariant_violations, &checks);
        Self {
            id,
            n_trials: n,
            successes,
            fraction: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            interval: [lo, hi],
            reference: rule.reference(),
            rule,
            invariant_violations,
            checks,
            verdict,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            trials,
            trajectories: Vec::new(),
        }
    }

    pub fn metric(mut self, key: &str, x: f64) -> Self {
        self.metrics.insert(key.to_string(), x);
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Verdict as a pure function of the aggregate counts and checks.
pub fn decide(rule: VerdictRule, successes: usize, n: usize, invariant_violations: usize, checks: &[AggregateCheck]) -> Verdict {
    if n > 0 && rule.holds(successes, n) && invariant_violations == 0 && checks.iter().all(|c| c.passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Experiment-level checks that are functions of the trial records alone.
pub fn aggregate_checks(id: ExperimentId, trials: &[TrialRecord]) -> Vec<AggregateCheck> {
    match id {
        ExperimentId::BiasTightness => convergence::tightness_checks(trials),
        ExperimentId::F0Computation => negative::f0_checks(trials),
        ExperimentId::LinearRate => convergence::linear_rate_checks(trials),
        _ => Vec::new(),
    }
}

/// Runs `f` for trial indices `0..n` in parallel, each with its own substream.
pub(crate) fn run_trials<F>(base_seed: u64, n: usize, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64, &mut LabRng) -> Result<TrialRecord> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(base_seed, domain::TRIAL, i);
            f(i, &mut rng)
        })
        .collect()
}

/// Experiment parameters, one variant per experiment id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentParams {
    StuckAtInit(negative::StuckParams),
    NegativeBiasFailure(negative::NegativeBiasParams),
    F0Computation(negative::F0Params),
    LinearRate(convergence::LinearRateParams),
    RandomInit(convergence::RandomInitParams),
    SymmetricConvergence(convergence::SymmetricParams),
    NoBiasTarget(convergence::NoBiasParams),
    BiasTightness(convergence::TightnessParams),
}

pub use convergence::{random_init_rule, InitScheme, SymmetricInit, LinearRateParams, NoBiasParams, RandomInitParams, SymmetricParams, TightnessParams, TargetDist};
pub use negative::{F0Params, NegativeBiasParams, StuckParams};

impl ExperimentParams {
    pub fn id(&self) -> ExperimentId {
        match self {
            ExperimentParams::StuckAtInit(_) => ExperimentId::StuckAtInit,
            ExperimentParams::NegativeBiasFailure(_) => ExperimentId::NegativeBiasFailure,
            ExperimentParams::F0Computation(_) => ExperimentId::F0Computation,
            ExperimentParams::LinearRate(_) => ExperimentId::LinearRate,
            ExperimentParams::RandomInit(_) => ExperimentId::RandomInit,
            ExperimentParams::SymmetricConvergence(_) => ExperimentId::SymmetricConvergence,
            ExperimentParams::NoBiasTarget(_) => ExperimentId::NoBiasTarget,
            ExperimentParams::BiasTightness(_) => ExperimentId::BiasTightness,
        }
    }

    pub fn default_for(id: ExperimentId) -> Self {
        match id {
            ExperimentId::StuckAtInit => ExperimentParams::StuckAtInit(Default::default()),
            ExperimentId::NegativeBiasFailure => ExperimentParams::NegativeBiasFailure(Default::default()),
            ExperimentId::F0Computation => ExperimentParams::F0Computation(Default::default()),
            ExperimentId::LinearRate => ExperimentParams::LinearRate(Default::default()),
            ExperimentId::RandomInit => ExperimentParams::RandomInit(Default::default()),
            ExperimentId::SymmetricConvergence => ExperimentParams::SymmetricConvergence(Default::default()),
            ExperimentId::NoBiasTarget => ExperimentParams::NoBiasTarget(Default::default()),
            ExperimentId::BiasTightness => ExperimentParams::BiasTightness(Default::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub params: ExperimentParams,
    pub n_trials: usize,
    pub base_seed: u64,
    /// Number of leading trials whose trajectories are kept in the result.
    #[serde(default)]
    pub keep_trajectories: usize,
}

impl ExperimentSpec {
    pub fn new(params: ExperimentParams, n_trials: usize, base_seed: u64) -> Self {
        Self { params, n_trials, base_seed, keep_trajectories: 0 }
    }

    pub fn id(&self) -> ExperimentId {
        self.params.id()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(LabError::invalid("n_trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// Dispatches to the runner for `spec.params`.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let (n, seed, keep) = (spec.n_trials, spec.base_seed, spec.keep_trajectories);
    match &spec.params {
        ExperimentParams::StuckAtInit(p) => run_stuck_at_init(p, n, seed),
        ExperimentParams::NegativeBiasFailure(p) => run_negative_bias_failure(p, n, seed, keep),
        ExperimentParams::F0Computation(p) => run_f0_computation(p),
        ExperimentParams::LinearRate(p) => run_linear_rate(p, seed, keep),
        ExperimentParams::RandomInit(p) => run_random_init(p, n, seed),
        ExperimentParams::SymmetricConvergence(p) => run_symmetric_convergence(p, n, seed, keep),
        ExperimentParams::NoBiasTarget(p) => run_no_bias_target(p, n, seed),
        ExperimentParams::BiasTightness(p) => run_bias_tightness(p, n, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        let (lo, hi) = wilson_interval(50, 100, WILSON_Z);
        assert!((lo - 0.40383153).abs() < 1e-6 && (hi - 0.59616847).abs() < 1e-6);
        let (lo, hi) = wilson_interval(0, 10, WILSON_Z);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.27753279).abs() < 1e-6);
        let (lo, hi) = wilson_interval(10, 10, WILSON_Z);
        assert!(hi == 1.0 && lo > 0.7);
    }

    #[test]
    fn verdict_rules() {
        assert!(VerdictRule::AtLeast { reference: 0.5 }.holds(5, 10));
        assert!(!VerdictRule::AtLeast { reference: 0.51 }.holds(5, 10));
        assert!(VerdictRule::AtLeastMinusHalfWidth { reference: 0.6 }.holds(5, 10));
        assert!(VerdictRule::Within { lo: 0.4, hi: 0.6 }.holds(5, 10));
        assert!(!VerdictRule::All.holds(9, 10));
        assert!(VerdictRule::ReportOnly.holds(0, 10));
    }

    #[test]
    fn id_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
        }
    }
}
