//! Experiments where gradient descent reaches the target.

use super::oracles::{negative_bias_threshold, sphere_angle_tail};
use super::{run_trials, AggregateCheck, ExperimentId, ExperimentResult, TrialRecord, VerdictRule, WILSON_Z};
use crate::distributions::InputDistribution;
use crate::error::{LabError, Result};
use crate::objective::{GradientEngine, Objective};
use crate::optimizer::{run_gd, run_gd_observed, OptimizerConfig, StepRecord, StopCriteria, Termination};
use crate::params::NeuronParams;
use crate::rng::{domain, random_direction, substream, LabRng};
use crate::theory::{
    bias_ratio_cap, linear_rate_gamma, random_init_constants, symmetric_rate, symmetric_step_cap, target_bias_limit,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetDist {
    StandardGaussian,
    UniformBall { radius: f64 },
}

impl TargetDist {
    pub fn build(&self, dim: usize) -> Result<InputDistribution<f64>> {
        match *self {
            TargetDist::StandardGaussian => InputDistribution::gaussian(dim),
            TargetDist::UniformBall { radius } => InputDistribution::uniform_ball(dim, radius),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// w̃₀ uniform on the sphere of radius ρ, b = 0.
    Sphere,
    /// w̃₀ ~ N(0, ρ²/d·I), b = 0.
    Normal,
}

/// Constants of the small random initialization for a symmetric input.
#[derive(Clone, Copy, Debug)]
struct InitSetup {
    alpha: f64,
    beta: f64,
    c: f64,
    m: f64,
    rho: f64,
    delta: f64,
}

fn init_setup(dist: &InputDistribution<f64>, alpha: Option<f64>) -> Result<InitSetup> {
    let alpha = match alpha {
        Some(a) => a,
        None => dist.default_alpha()?,
    };
    let beta = dist.density_floor(alpha)?;
    let c = dist.lifted_radius();
    let k = random_init_constants(alpha, beta, c)?;
    Ok(InitSetup { alpha, beta, c, m: k.m, rho: k.rho, delta: k.delta })
}

fn draw_init(rng: &mut LabRng, dim: usize, rho: f64, scheme: InitScheme) -> NeuronParams<f64> {
    let w: Vec<f64> = match scheme {
        InitScheme::Sphere => random_direction::<f64>(rng, dim).into_iter().map(|x| x * rho).collect(),
        InitScheme::Normal => {
            let s = rho / (dim as f64).sqrt();
            (0..dim).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
        }
    };
    NeuronParams::new(w, 0.0)
}

/// F(w) − F(0) from the parts of one evaluation, avoiding cancellation.
fn loss_gap(obj: &Objective<f64>, w: &NeuronParams<f64>) -> Result<f64> {
    let ev = obj.evaluate(w)?;
    Ok(0.5 * ev.sq_w - ev.cross)
}

struct Descent {
    converged: bool,
    iterations: usize,
    final_dist: f64,
    termination: Termination,
}

fn descend(obj: &Objective<f64>, w0: &NeuronParams<f64>, eta: f64, max_iters: usize, tol: f64, freeze_bias: bool) -> Result<Descent> {
    let v = obj.target();
    if freeze_bias {
        let mut w = w0.clone();
        for t in 0..=max_iters {
            let dist = w.dist(v);
            if dist <= tol {
                return Ok(Descent { converged: true, iterations: t, final_dist: dist, termination: Termination::DistToTarget });
            }
            if t == max_iters {
                break;
            }
            let mut g = obj.evaluate(&w)?.grad;
            g[w.dim()] = 0.0;
            w = w.step(eta, &g);
        }
        let dist = w.dist(v);
        return Ok(Descent { converged: false, iterations: max_iters, final_dist: dist, termination: Termination::MaxIters });
    }
    let cfg = OptimizerConfig::gd(eta).with_max_iters(max_iters).with_stop(StopCriteria {
        grad_norm_tol: Some(1e-13),
        dist_to_v_tol: Some(tol),
        loss_tol: None,
    });
    let rec = run_gd(w0, obj, &cfg)?;
    let final_dist = rec.final_w.dist(v);
    Ok(Descent { converged: final_dist <= tol, iterations: rec.iterations, final_dist, termination: rec.termination })
}

fn termination_code(t: Termination) -> f64 {
    match t {
        Termination::GradNorm => 0.0,
        Termination::DistToTarget => 1.0,
        Termination::Loss => 2.0,
        Termination::MaxIters => 3.0,
        Termination::TimeLimit => 4.0,
        Termination::Diverged => 5.0,
        Termination::NonFinite => 6.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearRateParams {
    pub dim: usize,
    pub radius: f64,
    pub n_steps: usize,
    /// η = eta_factor·γ/c⁴; values above 1 leave the hypothesis and are only reported.
    pub eta_factor: f64,
    pub target_bias: f64,
    /// Explicit target; defaults to (e₁, target_bias).
    pub target: Option<NeuronParams<f64>>,
    pub alpha: Option<f64>,
    /// Start at w₀ = v instead of the random recipe.
    pub start_at_target: bool,
    /// Allowed relative excess of ‖w_t − v‖² over the envelope, in units of machine epsilon.
    pub roundoff_ulps: f64,
}

impl Default for LinearRateParams {
    fn default() -> Self {
        Self {
            dim: 6,
            radius: 1.0,
            n_steps: 10_000,
            eta_factor: 1.0,
            target_bias: 0.0,
            target: None,
            alpha: None,
            start_at_target: false,
            roundoff_ulps: 8.0,
        }
    }
}

impl LinearRateParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(LabError::invalid("dim", "must be at least 2"));
        }
        if !(self.radius > 0.0) {
            return Err(LabError::invalid("radius", "must be positive"));
        }
        if !(self.eta_factor > 0.0) || !self.eta_factor.is_finite() {
            return Err(LabError::invalid("eta_factor", "must be positive"));
        }
        if !(self.roundoff_ulps >= 0.0) {
            return Err(LabError::invalid("roundoff_ulps", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Checks ‖w_t − v‖² ≤ ‖w₀ − v‖²(1 − γη)^t at every step on the uniform ball.
pub fn run_linear_rate(p: &LinearRateParams, seed: u64, keep: usize) -> Result<ExperimentResult> {
    p.validate()?;
    let dist = InputDistribution::uniform_ball(p.dim, p.radius)?;
    let v = p.target.clone().unwrap_or_else(|| NeuronParams::axis(p.dim, 0, 1.0, p.target_bias));
    let obj = Objective::new(&dist, &v, &GradientEngine::quadrature())?;
    let setup = init_setup(&dist, p.alpha)?;
    let c_prime = dist.estimate_constants(None, seed)?.c_prime;
    let w0 = if p.start_at_target {
        v.clone()
    } else {
        draw_init(&mut substream(seed, domain::INIT, 0), p.dim, setup.rho, InitScheme::Sphere)
    };
    let gap = loss_gap(&obj, &w0)?;
    let gated = gap <= -setup.delta || p.start_at_target;
    let gamma = linear_rate_gamma(setup.delta, w0.norm(), setup.c, c_prime)?;
    let eta = p.eta_factor * gamma / setup.c.powi(4);
    let mut trial = TrialRecord::new(0, true, true)
        .flag("gated", gated)
        .with("loss_gap", gap)
        .with("delta", setup.delta)
        .with("gamma", gamma)
        .with("eta", eta);
    let mut trajectories = Vec::new();
    if gated {
        let d0 = w0.dist_sq(&v);
        let factor = 1.0 - gamma * eta;
        let slack = 1.0 + p.roundoff_ulps * f64::EPSILON;
        let mut violations = 0usize;
        let mut worst = 0.0f64;
        let mut obs = |s: &StepRecord<f64>| {
            let env = d0 * factor.powi(s.iter as i32);
            if s.dist_sq > env * slack {
                violations += 1;
            }
            if env > 0.0 {
                worst = worst.max(s.dist_sq / env);
            }
        };
        let cfg = OptimizerConfig::gd(eta).with_max_iters(p.n_steps).with_stop(StopCriteria {
            grad_norm_tol: Some(0.0),
            dist_to_v_tol: Some(0.0),
            loss_tol: None,
        });
        let rec = run_gd_observed(&w0, &obj, &cfg, &mut obs)?;
        trial.success = violations == 0;
        trial = trial
            .with("violations", violations as f64)
            .with("worst_ratio", worst)
            .with("steps", rec.iterations as f64)
            .with("final_dist_sq", rec.final_w.dist_sq(&v));
        if keep > 0 {
            trajectories.push((0, rec));
        }
    }
    let rule = if p.eta_factor <= 1.0 { VerdictRule::All } else { VerdictRule::ReportOnly };
    let mut res = ExperimentResult::from_trials(ExperimentId::LinearRate, rule, vec![trial])
        .metric("alpha", setup.alpha)
        .metric("beta", setup.beta)
        .metric("c", setup.c)
        .metric("c_prime", c_prime)
        .metric("m", setup.m)
        .metric("rho", setup.rho);
    if !gated {
        res = res.note("initial loss gap above −δ; envelope not checked");
    }
    res.trajectories = trajectories;
    Ok(res)
}

/// A run counts only if the loss-gap gate held.
pub(crate) fn linear_rate_checks(trials: &[TrialRecord]) -> Vec<AggregateCheck> {
    let gated = trials.iter().filter(|t| t.is("gated")).count();
    vec![AggregateCheck { name: "gate_held".into(), passed: gated > 0, detail: format!("{gated} gated runs") }]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomInitParams {
    pub dim: usize,
    pub dist: TargetDist,
    /// −b_v/‖ṽ‖ with ṽ = e₁.
    pub bias_ratio: f64,
    pub alpha: Option<f64>,
    pub init: InitScheme,
    pub eta: f64,
    pub max_iters: usize,
    pub success_tol: f64,
}

impl Default for RandomInitParams {
    fn default() -> Self {
        Self {
            dim: 25,
            dist: TargetDist::StandardGaussian,
            bias_ratio: 0.15,
            alpha: None,
            init: InitScheme::Sphere,
            eta: 0.5,
            max_iters: 20_000,
            success_tol: 1e-4,
        }
    }
}

impl RandomInitParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(LabError::invalid("dim", "must be at least 2"));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(LabError::invalid("eta", "must be positive and finite"));
        }
        if !(self.success_tol > 0.0) {
            return Err(LabError::invalid("success_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Threshold on the gate fraction: 0.99 when the competing cap θ > 3π/4 has measure below 10⁻³.
pub fn random_init_rule(dim: usize) -> (VerdictRule, f64) {
    let cap = sphere_angle_tail(dim, 0.75 * std::f64::consts::PI);
    let rule = if cap < 1e-3 { VerdictRule::AtLeast { reference: 0.99 } } else { VerdictRule::ReportOnly };
    (rule, cap)
}

fn random_init_trials(
    p: &RandomInitParams,
    n: usize,
    seed: u64,
    freeze_bias: bool,
) -> Result<(Vec<TrialRecord>, InitSetup)> {
    p.validate()?;
    let dist = p.dist.build(p.dim)?;
    let v = NeuronParams::axis(p.dim, 0, 1.0, -p.bias_ratio);
    let obj = Objective::new(&dist, &v, &GradientEngine::quadrature())?;
    let setup = init_setup(&dist, p.alpha)?;
    if p.bias_ratio > target_bias_limit(setup.alpha) {
        return Err(LabError::Precondition(format!(
            "target bias ratio {} exceeds alpha·sin(pi/8)/4 = {}",
            p.bias_ratio,
            target_bias_limit(setup.alpha)
        )));
    }
    let trials = run_trials(seed, n, |i, rng| {
        let w0 = draw_init(rng, p.dim, setup.rho, p.init);
        let gap = loss_gap(&obj, &w0)?;
        let gated = gap < 0.0;
        let mut rec = TrialRecord::new(i, false, true).flag("gated", gated).with("loss_gap", gap);
        if let Some(th) = w0.angle_with(&v) {
            rec = rec.with("theta0", th);
        }
        let d = descend(&obj, &w0, p.eta, p.max_iters, p.success_tol, freeze_bias)?;
        rec.success = gated && d.converged;
        rec.invariant_ok = !gated || d.converged;
        Ok(rec
            .flag("converged", d.converged)
            .with("iterations", d.iterations as f64)
            .with("final_dist", d.final_dist)
            .with("termination", termination_code(d.termination)))
    })?;
    Ok((trials, setup))
}

/// Small random initialization followed by gradient descent with a practical step size.
pub fn run_random_init(p: &RandomInitParams, n: usize, seed: u64) -> Result<ExperimentResult> {
    let (trials, setup) = random_init_trials(p, n, seed, false)?;
    let (rule, cap) = random_init_rule(p.dim);
    Ok(ExperimentResult::from_trials(ExperimentId::RandomInit, rule, trials)
        .metric("competing_cap_measure", cap)
        .metric("alpha", setup.alpha)
        .metric("beta", setup.beta)
        .metric("c", setup.c)
        .metric("rho", setup.rho)
        .metric("delta", setup.delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoBiasParams {
    pub dim: usize,
    pub dist: TargetDist,
    pub init: InitScheme,
    pub eta: f64,
    pub max_iters: usize,
    pub success_tol: f64,
    /// When false the learner's bias stays at 0 (ablation).
    pub learner_bias: bool,
}

impl Default for NoBiasParams {
    fn default() -> Self {
        Self {
            dim: 25,
            dist: TargetDist::StandardGaussian,
            init: InitScheme::Sphere,
            eta: 0.5,
            max_iters: 20_000,
            success_tol: 1e-4,
            learner_bias: true,
        }
    }
}

/// Target without bias; the learner keeps a bias coordinate started at 0.
pub fn run_no_bias_target(p: &NoBiasParams, n: usize, seed: u64) -> Result<ExperimentResult> {
    let rp = RandomInitParams {
        dim: p.dim,
        dist: p.dist,
        bias_ratio: 0.0,
        alpha: None,
        init: p.init,
        eta: p.eta,
        max_iters: p.max_iters,
        success_tol: p.success_tol,
    };
    let (trials, _) = random_init_trials(&rp, n, seed, !p.learner_bias)?;
    let (rule, cap) = random_init_rule(p.dim);
    let rule = if p.learner_bias { rule } else { VerdictRule::ReportOnly };
    let res = ExperimentResult::from_trials(ExperimentId::NoBiasTarget, rule, trials).metric("competing_cap_measure", cap);
    Ok(if p.learner_bias { res } else { res.note("ablation: learner bias held at 0") })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymmetricInit {
    /// w₀ = v + radius·u with u uniform on the unit sphere of R^{d+1}, resampled until b ≥ 0.
    Perturbation { radius: f64 },
    /// w̃₀ ~ N(0, scale²/d·I), b = 0; trials outside ‖w₀ − v‖ < 1 are not run.
    SmallGaussian { scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetricParams {
    pub dim: usize,
    pub target_bias: f64,
    pub alpha: f64,
    /// Universal constant C in η < C·β·min{1, τ}/(cα²).
    pub c_universal: f64,
    /// η as a fraction of the cap.
    pub eta_fraction: f64,
    pub init: SymmetricInit,
    pub max_iters: usize,
    pub success_tol: f64,
}

impl Default for SymmetricParams {
    fn default() -> Self {
        Self {
            dim: 5,
            target_bias: 0.3,
            alpha: 4.5,
            c_universal: 4e7,
            eta_fraction: 0.99,
            init: SymmetricInit::Perturbation { radius: 0.5 },
            max_iters: 100_000,
            success_tol: 1e-6,
        }
    }
}

impl SymmetricParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(LabError::invalid("dim", "must be at least 2"));
        }
        if !(self.target_bias >= 0.0) {
            return Err(LabError::Precondition("target bias must be nonnegative".into()));
        }
        if !(self.c_universal > 0.0 && self.alpha > 0.0) {
            return Err(LabError::invalid("c_universal", "C and alpha must be positive"));
        }
        if !(self.eta_fraction > 0.0 && self.eta_fraction < 1.0) {
            return Err(LabError::invalid("eta_fraction", "must lie in (0, 1)"));
        }
        match self.init {
            SymmetricInit::Perturbation { radius } if !(radius > 0.0 && radius < 1.0) => {
                Err(LabError::Precondition("perturbation radius must lie in (0, 1)".into()))
            }
            SymmetricInit::SmallGaussian { scale } if !(scale > 0.0) => {
                Err(LabError::invalid("scale", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Gradient descent on the standard Gaussian from inits within unit distance of v.
pub fn run_symmetric_convergence(p: &SymmetricParams, n: usize, seed: u64, keep: usize) -> Result<ExperimentResult> {
    p.validate()?;
    let dist = InputDistribution::gaussian(p.dim)?;
    let v = NeuronParams::axis(p.dim, 0, 1.0, p.target_bias);
    let obj = Objective::new(&dist, &v, &GradientEngine::quadrature())?;
    let d = p.dim as f64;
    let c = d * (d + 2.0);
    let tau = 2.0 / std::f64::consts::PI;
    let beta = dist.density_floor(p.alpha)?;
    let eta = p.eta_fraction * symmetric_step_cap(p.c_universal, beta, c, p.alpha, tau);
    let lambda = symmetric_rate(p.c_universal, beta, c, p.alpha);
    let b_cap = bias_ratio_cap(tau);
    let kept = std::sync::Mutex::new(Vec::new());
    let trials = run_trials(seed, n, |i, rng| {
        let (w0, draws) = match p.init {
            SymmetricInit::Perturbation { radius } => {
                let mut draws = 0;
                loop {
                    draws += 1;
                    let u: Vec<f64> = random_direction(rng, p.dim + 1);
                    let full: Vec<f64> = v.to_full().iter().zip(&u).map(|(a, b)| a + radius * b).collect();
                    let w = NeuronParams::from_full(&full)?;
                    if w.bias >= 0.0 {
                        break (w, draws);
                    }
                }
            }
            SymmetricInit::SmallGaussian { scale } => (draw_init(rng, p.dim, scale, InitScheme::Normal), 1),
        };
        let gated = w0.dist_sq(&v) < 1.0 && w0.bias >= 0.0;
        let mut rec = TrialRecord::new(i, gated, true).flag("gated", gated).with("draws", draws as f64);
        if !gated {
            return Ok(rec);
        }
        let mut prev = f64::INFINITY;
        let (mut monotone, mut angle_ok, mut bias_ok) = (true, true, true);
        let mut max_ratio = 0.0f64;
        let mut obs = |s: &StepRecord<f64>| {
            if s.iter > 0 {
                if !(s.dist_sq < prev) && s.dist_sq > 0.0 {
                    monotone = false;
                }
                if prev > 0.0 {
                    max_ratio = max_ratio.max(s.dist_sq / prev);
                }
            }
            prev = s.dist_sq;
            if s.flags.theta_le_threshold == Some(false) {
                angle_ok = false;
            }
            if s.flags.b_t_value.is_some_and(|b| b > b_cap) {
                bias_ok = false;
            }
        };
        let cfg = OptimizerConfig::gd(eta).with_max_iters(p.max_iters).with_stop(StopCriteria {
            grad_norm_tol: Some(0.0),
            dist_to_v_tol: Some(p.success_tol),
            loss_tol: None,
        });
        let tr = run_gd_observed(&w0, &obj, &cfg, &mut obs)?;
        let converged = tr.final_w.dist(&v) <= p.success_tol;
        let all = monotone && angle_ok && bias_ok && converged;
        let c_emp = (1.0 - max_ratio) * c * p.alpha * p.alpha / (eta * beta);
        rec.invariant_ok = all;
        rec = rec
            .flag("converged", converged)
            .flag("monotone", monotone)
            .flag("angle_invariant", angle_ok)
            .flag("bias_invariant", bias_ok)
            .with("iterations", tr.iterations as f64)
            .with("max_contraction", max_ratio)
            .with("empirical_c", c_emp);
        if (i as usize) < keep {
            kept.lock().unwrap().push((i, tr));
        }
        Ok(rec)
    })?;
    let rule = match p.init {
        SymmetricInit::Perturbation { .. } => VerdictRule::All,
        SymmetricInit::SmallGaussian { .. } => VerdictRule::ReportOnly,
    };
    let min_c = trials.iter().filter_map(|t| t.get("empirical_c")).fold(f64::INFINITY, f64::min);
    let mut res = ExperimentResult::from_trials(ExperimentId::SymmetricConvergence, rule, trials)
        .metric("eta", eta)
        .metric("lambda", lambda)
        .metric("beta", beta)
        .metric("c", c)
        .metric("tau", tau)
        .metric("bias_ratio_cap", b_cap)
        .metric("min_empirical_c", min_c);
    let mut kept = kept.into_inner().unwrap();
    kept.sort_by_key(|(i, _)| *i);
    res.trajectories = kept;
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightnessParams {
    pub dim: usize,
    pub radius: f64,
    pub n_ratios: usize,
    pub eta: f64,
    pub max_iters: usize,
    pub success_tol: f64,
}

impl Default for TightnessParams {
    fn default() -> Self {
        Self { dim: 10, radius: 1.0, n_ratios: 8, eta: 1.0, max_iters: 2000, success_tol: 1e-4 }
    }
}

impl TightnessParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(LabError::invalid("dim", "must be at least 3"));
        }
        if self.n_ratios < 2 {
            return Err(LabError::invalid("n_ratios", "must be at least 2"));
        }
        if !(self.radius > 0.0 && self.eta > 0.0) {
            return Err(LabError::invalid("eta", "radius and eta must be positive"));
        }
        Ok(())
    }

    pub fn ratios(&self) -> Vec<f64> {
        let top = negative_bias_threshold(self.dim, self.radius);
        (0..self.n_ratios).map(|k| top * k as f64 / (self.n_ratios - 1) as f64).collect()
    }
}

/// Success of the random-init recipe as the target bias ratio grows to the negative-bias construction.
///
/// `n` is the number of initializations per ratio; the same initializations are reused across ratios.
pub fn run_bias_tightness(p: &TightnessParams, n: usize, seed: u64) -> Result<ExperimentResult> {
    p.validate()?;
    let dist = InputDistribution::uniform_ball(p.dim, p.radius)?;
    let alpha = p.radius / 2.0;
    let setup = init_setup(&dist, Some(alpha))?;
    let ratios = p.ratios();
    let objs: Vec<Objective<f64>> = ratios
        .iter()
        .map(|&r| Objective::new(&dist, &NeuronParams::axis(p.dim, 0, 1.0, -r), &GradientEngine::quadrature()))
        .collect::<Result<_>>()?;
    let trials = run_trials(seed, n * ratios.len(), |i, _| {
        let k = i as usize / n;
        let j = i % n as u64;
        let w0 = draw_init(&mut substream(seed, domain::INIT, j), p.dim, setup.rho, InitScheme::Sphere);
        let obj = &objs[k];
        let event = obj.evaluate(&w0)?.joint_positive_prob == 0.0;
        let d = descend(obj, &w0, p.eta, p.max_iters, p.success_tol, false)?;
        Ok(TrialRecord::new(i, d.converged, true)
            .with("ratio_index", k as f64)
            .with("ratio", ratios[k])
            .flag("event", event)
            .with("final_dist", d.final_dist)
            .with("iterations", d.iterations as f64)
            .with("termination", termination_code(d.termination)))
    })?;
    Ok(ExperimentResult::from_trials(ExperimentId::BiasTightness, VerdictRule::ReportOnly, trials)
        .metric("alpha", alpha)
        .metric("admissible_ratio", target_bias_limit(alpha))
        .metric("rho", setup.rho))
}

/// Success curve non-increasing within noise; at the largest ratio, failure tracks the no-overlap event.
pub(crate) fn tightness_checks(trials: &[TrialRecord]) -> Vec<AggregateCheck> {
    let k_max = trials.iter().filter_map(|t| t.get("ratio_index")).fold(0.0f64, f64::max) as usize;
    let mut curve = Vec::new();
    for k in 0..=k_max {
        let rows: Vec<&TrialRecord> = trials.iter().filter(|t| t.get("ratio_index") == Some(k as f64)).collect();
        let m = rows.len();
        let s = rows.iter().filter(|t| t.success).count();
        let e = rows.iter().filter(|t| t.is("event")).count();
        curve.push((m, s, e));
    }
    let frac = |a: usize, m: usize| if m == 0 { 0.0 } else { a as f64 / m as f64 };
    let mut monotone = true;
    let mut detail = Vec::new();
    for w in curve.windows(2) {
        let (p0, p1) = (frac(w[0].1, w[0].0), frac(w[1].1, w[1].0));
        let se = (p0 * (1.0 - p0) / w[0].0.max(1) as f64 + p1 * (1.0 - p1) / w[1].0.max(1) as f64).sqrt();
        if p1 > p0 + WILSON_Z * se + 1e-12 {
            monotone = false;
        }
        detail.push(format!("{p0:.3}"));
    }
    if let Some(last) = curve.last() {
        detail.push(format!("{:.3}", frac(last.1, last.0)));
    }
    let (m, s, e) = curve.last().copied().unwrap_or((0, 0, 0));
    let fail = frac(m - s, m);
    let ev = frac(e, m);
    let se = (ev * (1.0 - ev) / m.max(1) as f64).sqrt().max(1.0 / m.max(1) as f64);
    vec![
        AggregateCheck { name: "success_non_increasing".into(), passed: monotone, detail: detail.join(" ") },
        AggregateCheck {
            name: "top_ratio_failure_covers_event".into(),
            passed: m > 0 && fail + 4.0 * se >= ev,
            detail: format!("failure {fail:.3}, event {ev:.3}"),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_rate_from_target_is_trivial() {
        let p = LinearRateParams { start_at_target: true, n_steps: 50, ..Default::default() };
        let r = run_linear_rate(&p, 1, 0).unwrap();
        assert!(r.passed());
        assert_eq!(r.trials[0].get("final_dist_sq"), Some(0.0));
    }

    #[test]
    fn linear_rate_short_run() {
        let p = LinearRateParams { n_steps: 200, ..Default::default() };
        let r = run_linear_rate(&p, 3, 0).unwrap();
        assert!(r.passed(), "{:?} {:?}", r.trials, r.notes);
    }

    #[test]
    fn random_init_rule_switches_with_dimension() {
        assert!(matches!(random_init_rule(25).0, VerdictRule::AtLeast { .. }));
        assert_eq!(random_init_rule(2).0, VerdictRule::ReportOnly);
    }

    #[test]
    fn random_init_precondition() {
        let p = RandomInitParams { bias_ratio: 0.5, ..Default::default() };
        assert!(matches!(run_random_init(&p, 2, 0), Err(LabError::Precondition(_))));
    }

    #[test]
    fn symmetric_small_run() {
        let p = SymmetricParams::default();
        let r = run_symmetric_convergence(&p, 3, 5, 0).unwrap();
        assert!(r.passed(), "{:?}", r.trials);
    }
}
