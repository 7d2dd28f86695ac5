//! Gradient descent and gradient flow on F, with per-step logging.

use crate::error::{LabError, Result};
use crate::objective::{is_dead, Evaluation, Objective};
use crate::params::NeuronParams;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Steps below this index are always stored; later steps are thinned geometrically.
pub const DENSE_STORE_STEPS: usize = 10_000;
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrator<T> {
    Euler,
    Rk4,
    /// Adaptive Dormand–Prince 5(4) with mixed absolute/relative error control.
    Dopri5 { rtol: T, atol: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptMethod<T> {
    GradientDescent { eta: T },
    GradientFlow { integrator: Integrator<T>, dt: T, t_max: T, step_halving_check: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopCriteria<T> {
    pub grad_norm_tol: Option<T>,
    pub dist_to_v_tol: Option<T>,
    pub loss_tol: Option<T>,
}

impl<T: Scalar> Default for StopCriteria<T> {
    fn default() -> Self {
        Self { grad_norm_tol: Some(T::lit(1e-10)), dist_to_v_tol: Some(T::lit(1e-8)), loss_tol: Some(T::zero()) }
    }
}

/// Quantities used to evaluate per-step flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagSpec<T> {
    pub theta_threshold: T,
    /// When set, flags F(w_t) ≤ F(0) − δ.
    pub delta: Option<T>,
}

impl<T: Scalar> Default for FlagSpec<T> {
    fn default() -> Self {
        Self { theta_threshold: T::FRAC_PI_2(), delta: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig<T> {
    pub method: OptMethod<T>,
    pub max_iters: usize,
    pub stop: StopCriteria<T>,
    pub flags: FlagSpec<T>,
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn gd(eta: T) -> Self {
        Self {
            method: OptMethod::GradientDescent { eta },
            max_iters: 1_000_000,
            stop: StopCriteria::default(),
            flags: FlagSpec::default(),
        }
    }

    pub fn flow(integrator: Integrator<T>, dt: T, t_max: T) -> Self {
        Self {
            method: OptMethod::GradientFlow { integrator, dt, t_max, step_halving_check: true },
            max_iters: 1_000_000,
            stop: StopCriteria::default(),
            flags: FlagSpec::default(),
        }
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_stop(mut self, stop: StopCriteria<T>) -> Self {
        self.stop = stop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.method {
            OptMethod::GradientDescent { eta } => {
                if !(*eta > T::zero()) || !eta.is_finite() {
                    return Err(LabError::invalid("eta", "must be positive and finite"));
                }
            }
            OptMethod::GradientFlow { integrator, dt, t_max, .. } => {
                if !(*dt > T::zero()) {
                    return Err(LabError::invalid("dt", "must be positive"));
                }
                if !(*t_max > T::zero()) {
                    return Err(LabError::invalid("t_max", "must be positive"));
                }
                if let Integrator::Dopri5 { rtol, atol } = integrator {
                    if !(*rtol > T::zero() && *atol > T::zero()) {
                        return Err(LabError::invalid("rtol", "tolerances must be positive"));
                    }
                }
            }
        }
        let s = &self.stop;
        let disabled = [s.grad_norm_tol.is_none(), s.dist_to_v_tol.is_none(), s.loss_tol.is_none()]
            .iter()
            .filter(|&&x| x)
            .count();
        if disabled > 1 {
            return Err(LabError::invalid("stop", "at most one stop criterion may be disabled"));
        }
        for (name, t) in [("grad_norm_tol", s.grad_norm_tol), ("dist_to_v_tol", s.dist_to_v_tol), ("loss_tol", s.loss_tol)]
        {
            if let Some(t) = t {
                if !(t >= T::zero()) {
                    return Err(LabError::invalid(name, "must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFlags<T> {
    pub is_dead_cone: bool,
    pub theta_le_threshold: Option<bool>,
    pub b_t_value: Option<T>,
    pub below_f0_minus_delta: Option<bool>,
    pub joint_positive_prob: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub iter: usize,
    pub time: T,
    pub w: NeuronParams<T>,
    pub loss: T,
    pub dist_sq: T,
    pub grad_norm: T,
    pub flags: StepFlags<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradNorm,
    DistToTarget,
    Loss,
    MaxIters,
    TimeLimit,
    Diverged,
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord<T> {
    pub steps: Vec<StepRecord<T>>,
    pub termination: Termination,
    pub final_w: NeuronParams<T>,
    pub iterations: usize,
    pub final_time: T,
    /// F(0) when it was needed for flags.
    pub f0: Option<T>,
    /// Largest joint activation probability over every gradient evaluation,
    /// including intermediate integrator stages.
    pub max_joint_positive_prob: T,
    /// Smallest loss over every evaluation.
    pub min_loss: T,
    /// Change of the final ‖w − v‖ when the flow is repeated with a halved step.
    pub halving_delta: Option<T>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn final_dist(&self) -> T {
        self.steps.last().map(|s| s.dist_sq.sqrt()).unwrap_or(T::nan())
    }

    pub fn diverged(&self) -> bool {
        matches!(self.termination, Termination::Diverged | Termination::NonFinite)
    }
}

struct Logger<'a, T: Scalar> {
    obj: &'a Objective<T>,
    flags: FlagSpec<T>,
    f0: Option<T>,
    steps: Vec<StepRecord<T>>,
    next_sparse: f64,
    max_joint: T,
    min_loss: T,
}

impl<'a, T: Scalar> Logger<'a, T> {
    fn new(obj: &'a Objective<T>, flags: &FlagSpec<T>) -> Result<Self> {
        let f0 = match flags.delta {
            Some(_) => Some(obj.loss_at_origin()?),
            None => None,
        };
        Ok(Self {
            obj,
            flags: flags.clone(),
            f0,
            steps: Vec::new(),
            next_sparse: DENSE_STORE_STEPS as f64,
            max_joint: T::zero(),
            min_loss: T::infinity(),
        })
    }

    fn see(&mut self, ev: &Evaluation<T>) {
        self.max_joint = self.max_joint.max(ev.joint_positive_prob);
        self.min_loss = self.min_loss.min(ev.loss);
    }

    fn record(&self, iter: usize, time: T, w: &NeuronParams<T>, ev: &Evaluation<T>) -> StepRecord<T> {
        let v = self.obj.target();
        StepRecord {
            iter,
            time,
            w: w.clone(),
            loss: ev.loss,
            dist_sq: w.dist_sq(v),
            grad_norm: ev.grad_norm(),
            flags: StepFlags {
                is_dead_cone: is_dead(w, self.obj.dist()),
                theta_le_threshold: w.angle_with(v).map(|t| t <= self.flags.theta_threshold),
                b_t_value: w.b_t(),
                below_f0_minus_delta: match (self.f0, self.flags.delta) {
                    (Some(f0), Some(d)) => Some(ev.loss <= f0 - d),
                    _ => None,
                },
                joint_positive_prob: ev.joint_positive_prob,
            },
        }
    }

    fn store(&mut self, rec: StepRecord<T>, force: bool) {
        let it = rec.iter;
        if it < DENSE_STORE_STEPS || force || it as f64 >= self.next_sparse {
            if it as f64 >= self.next_sparse {
                self.next_sparse = (self.next_sparse * 1.05).max(it as f64 + 1.0);
            }
            if self.steps.last().map(|s| s.iter) != Some(it) {
                self.steps.push(rec);
            }
        }
    }
}

fn check_stop<T: Scalar>(stop: &StopCriteria<T>, rec: &StepRecord<T>) -> Option<Termination> {
    if let Some(tol) = stop.dist_to_v_tol {
        if rec.dist_sq.sqrt() <= tol {
            return Some(Termination::DistToTarget);
        }
    }
    if let Some(tol) = stop.grad_norm_tol {
        if rec.grad_norm <= tol {
            return Some(Termination::GradNorm);
        }
    }
    if let Some(tol) = stop.loss_tol {
        if rec.loss <= tol {
            return Some(Termination::Loss);
        }
    }
    None
}

fn guard<T: Scalar>(w: &NeuronParams<T>) -> Option<Termination> {
    if !w.is_finite() {
        Some(Termination::NonFinite)
    } else if w.norm() > T::lit(DIVERGENCE_NORM) {
        Some(Termination::Diverged)
    } else {
        None
    }
}

/// Gradient descent; `observer` sees every step, stored or not.
pub fn run_gd_observed<T: Scalar>(
    w0: &NeuronParams<T>,
    obj: &Objective<T>,
    cfg: &OptimizerConfig<T>,
    observer: &mut dyn FnMut(&StepRecord<T>),
) -> Result<TrajectoryRecord<T>> {
    cfg.validate()?;
    let OptMethod::GradientDescent { eta } = cfg.method else {
        return Err(LabError::invalid("method", "run_gd requires gradient descent"));
    };
    w0.check_dim(obj.dist().dim)?;
    let mut log = Logger::new(obj, &cfg.flags)?;
    let mut w = w0.clone();
    let mut t = 0usize;
    let termination = loop {
        let ev = obj.evaluate(&w)?;
        log.see(&ev);
        let rec = log.record(t, T::lit_usize(t), &w, &ev);
        observer(&rec);
        let stop = check_stop(&cfg.stop, &rec).or(if t >= cfg.max_iters { Some(Termination::MaxIters) } else { None });
        if let Some(reason) = stop {
            log.store(rec, true);
            break reason;
        }
        log.store(rec, false);
        let next = w.step(eta, &ev.grad);
        if let Some(reason) = guard(&next) {
            if let Some(last) = log.steps.last() {
                if last.iter != t {
                    let again = log.record(t, T::lit_usize(t), &w, &ev);
                    log.steps.push(again);
                }
            }
            break reason;
        }
        w = next;
        t += 1;
    };
    Ok(TrajectoryRecord {
        steps: log.steps,
        termination,
        final_w: w,
        iterations: t,
        final_time: T::lit_usize(t),
        f0: log.f0,
        max_joint_positive_prob: log.max_joint,
        min_loss: log.min_loss,
        halving_delta: None,
        warnings: Vec::new(),
    })
}

pub fn run_gd<T: Scalar>(
    w0: &NeuronParams<T>,
    obj: &Objective<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<TrajectoryRecord<T>> {
    run_gd_observed(w0, obj, cfg, &mut |_| {})
}

fn axpy<T: Scalar>(w: &[T], a: T, k: &[T]) -> Vec<T> {
    w.iter().zip(k).map(|(&x, &y)| x + a * y).collect()
}

fn combo<T: Scalar>(w: &[T], h: T, terms: &[(f64, &Vec<T>)]) -> Vec<T> {
    let mut out = w.to_vec();
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        let c = T::lit(c) * h;
        for (o, &x) in out.iter_mut().zip(k.iter()) {
            *o += c * x;
        }
    }
    out
}

// Dormand–Prince 5(4) tableau
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct FlowRun<T> {
    record: TrajectoryRecord<T>,
}

fn integrate_flow<T: Scalar>(
    w0: &NeuronParams<T>,
    obj: &Objective<T>,
    cfg: &OptimizerConfig<T>,
    integrator: Integrator<T>,
    dt0: T,
    t_max: T,
    observer: &mut dyn FnMut(&StepRecord<T>),
) -> Result<FlowRun<T>> {
    let mut log = Logger::new(obj, &cfg.flags)?;
    let mut w = w0.to_full();
    let mut t = T::zero();
    let mut it = 0usize;
    let mut dt = dt0;
    let eval = |x: &[T], log: &mut Logger<T>| -> Result<(Evaluation<T>, Vec<T>)> {
        let ev = obj.evaluate(&NeuronParams::from_full(x)?)?;
        log.see(&ev);
        let k: Vec<T> = ev.grad.iter().map(|&g| -g).collect();
        Ok((ev, k))
    };
    let (mut ev, mut k1) = eval(&w, &mut log)?;
    let eps_t = T::lit(1e-12) * t_max;
    let termination = loop {
        let wp = NeuronParams::from_full(&w)?;
        let rec = log.record(it, t, &wp, &ev);
        observer(&rec);
        let mut stop = check_stop(&cfg.stop, &rec);
        if stop.is_none() && t >= t_max - eps_t {
            stop = Some(Termination::TimeLimit);
        }
        if stop.is_none() && it >= cfg.max_iters {
            stop = Some(Termination::MaxIters);
        }
        if let Some(reason) = stop {
            log.store(rec, true);
            break reason;
        }
        log.store(rec, false);
        let h = dt.min(t_max - t);
        let next = match integrator {
            Integrator::Euler => {
                let y = axpy(&w, h, &k1);
                t += h;
                y
            }
            Integrator::Rk4 => {
                let half = h * T::lit(0.5);
                let (_, k2) = eval(&axpy(&w, half, &k1), &mut log)?;
                let (_, k3) = eval(&axpy(&w, half, &k2), &mut log)?;
                let (_, k4) = eval(&axpy(&w, h, &k3), &mut log)?;
                let y = combo(&w, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
                t += h;
                y
            }
            Integrator::Dopri5 { rtol, atol } => {
                let mut h = h;
                loop {
                    let mut ks: Vec<Vec<T>> = vec![k1.clone()];
                    let mut last_ev = None;
                    for s in 1..7 {
                        let terms: Vec<(f64, &Vec<T>)> = (0..s).map(|j| (DP_A[s][j], &ks[j])).collect();
                        let y = combo(&w, h, &terms);
                        let (e, k) = eval(&y, &mut log)?;
                        if s == 6 {
                            last_ev = Some((y, e));
                        }
                        ks.push(k);
                    }
                    let (y, e_new) = last_ev.unwrap();
                    let mut err = T::zero();
                    for i in 0..w.len() {
                        let est = (0..7).fold(T::zero(), |acc, s| acc + T::lit(DP_E[s]) * ks[s][i]) * h;
                        let sc = atol + rtol * w[i].abs().max(y[i].abs());
                        err = err.max((est / sc).abs());
                    }
                    let _ = DP_C;
                    let factor = if err == T::zero() {
                        T::lit(5.0)
                    } else {
                        (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
                    };
                    if err <= T::one() || h <= T::lit(1e-14) * t_max {
                        t += h;
                        dt = (h * factor).min(t_max);
                        ev = e_new;
                        k1 = ks.pop().unwrap();
                        break y;
                    }
                    h = h * factor.min(T::one());
                }
            }
        };
        let np = NeuronParams::from_full(&next)?;
        if let Some(reason) = guard(&np) {
            break reason;
        }
        w = next;
        it += 1;
        if !matches!(integrator, Integrator::Dopri5 { .. }) {
            let (e, k) = eval(&w, &mut log)?;
            ev = e;
            k1 = k;
        }
    };
    let final_w = NeuronParams::from_full(&w)?;
    Ok(FlowRun {
        record: TrajectoryRecord {
            steps: log.steps,
            termination,
            final_w,
            iterations: it,
            final_time: t,
            f0: log.f0,
            max_joint_positive_prob: log.max_joint,
            min_loss: log.min_loss,
            halving_delta: None,
            warnings: Vec::new(),
        },
    })
}

/// Gradient flow ẇ = −∇F(w); `observer` sees every accepted step.
pub fn run_flow_observed<T: Scalar>(
    w0: &NeuronParams<T>,
    obj: &Objective<T>,
    cfg: &OptimizerConfig<T>,
    observer: &mut dyn FnMut(&StepRecord<T>),
) -> Result<TrajectoryRecord<T>> {
    cfg.validate()?;
    let OptMethod::GradientFlow { integrator, dt, t_max, step_halving_check } = cfg.method else {
        return Err(LabError::invalid("method", "run_flow requires gradient flow"));
    };
    w0.check_dim(obj.dist().dim)?;
    let mut run = integrate_flow(w0, obj, cfg, integrator, dt, t_max, observer)?.record;
    if step_halving_check && !run.diverged() {
        let finer = match integrator {
            Integrator::Dopri5 { rtol, atol } => Integrator::Dopri5 { rtol: rtol / T::lit(32.0), atol: atol / T::lit(32.0) },
            other => other,
        };
        let fine_cfg = cfg.clone().with_max_iters(cfg.max_iters.saturating_mul(2));
        let fine = integrate_flow(w0, obj, &fine_cfg, finer, dt * T::lit(0.5), t_max, &mut |_| {})?.record;
        let delta = (fine.final_dist() - run.final_dist()).abs();
        run.halving_delta = Some(delta);
        if !(delta < T::lit(1e-4)) {
            run.warnings.push(format!("step halving changed the final distance by {}", delta.as_f64()));
        }
    }
    Ok(run)
}

pub fn run_flow<T: Scalar>(
    w0: &NeuronParams<T>,
    obj: &Objective<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<TrajectoryRecord<T>> {
    run_flow_observed(w0, obj, cfg, &mut |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::InputDistribution;
    use crate::objective::GradientEngine;

    fn setup() -> (InputDistribution<f64>, NeuronParams<f64>, Objective<f64>) {
        let dist = InputDistribution::gaussian(3).unwrap();
        let v = NeuronParams::new(vec![1.0, 0.0, 0.0], 0.2);
        let obj = Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap();
        (dist, v, obj)
    }

    #[test]
    fn gd_from_target_stops_immediately() {
        let (_, v, obj) = setup();
        let r = run_gd(&v, &obj, &OptimizerConfig::gd(0.5)).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.termination, Termination::DistToTarget);
    }

    #[test]
    fn gd_converges_on_benign_gaussian_config() {
        let (_, _, obj) = setup();
        let w0 = NeuronParams::new(vec![0.6, 0.4, -0.2], 0.1);
        let r = run_gd(&w0, &obj, &OptimizerConfig::gd(1.0)).unwrap();
        assert_eq!(r.termination, Termination::DistToTarget);
        assert!(r.final_dist() <= 1e-8);
    }

    #[test]
    fn flow_integrators_agree() {
        let (_, _, obj) = setup();
        let w0 = NeuronParams::new(vec![0.6, 0.4, -0.2], 0.1);
        let rk4 = OptimizerConfig::flow(Integrator::Rk4, 0.05, 2.0);
        let eul = OptimizerConfig::flow(Integrator::Euler, 0.005, 2.0);
        let a = run_flow(&w0, &obj, &rk4).unwrap();
        let b = run_flow(&w0, &obj, &eul).unwrap();
        let diff = a.final_w.dist(&b.final_w);
        assert!(diff < 1e-3, "{diff}");
        assert!(a.halving_delta.unwrap() < 1e-4);
        let dp = OptimizerConfig::flow(Integrator::Dopri5 { rtol: 1e-9, atol: 1e-12 }, 0.05, 2.0);
        let c = run_flow(&w0, &obj, &dp).unwrap();
        assert!(c.final_w.dist(&a.final_w) < 1e-6);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(OptimizerConfig::<f64>::gd(0.0).validate().is_err());
        assert!(OptimizerConfig::<f64>::flow(Integrator::Rk4, -1.0, 1.0).validate().is_err());
        let two_off = StopCriteria { grad_norm_tol: None, dist_to_v_tol: None, loss_tol: Some(0.0) };
        assert!(OptimizerConfig::<f64>::gd(0.1).with_stop(two_off).validate().is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let (_, _, obj) = setup();
        let w0 = NeuronParams::new(vec![0.6, 0.4, -0.2], 0.1);
        let r = run_gd(&w0, &obj, &OptimizerConfig::gd(1e9)).unwrap();
        assert!(r.diverged());
        assert!(r.final_w.is_finite());
    }
}
