//! Population loss F(w) = E[½(σ(wᵀx) − σ(vᵀx))²] and its gradient.

mod arcs;
pub(crate) mod monte_carlo;
pub(crate) mod quadrature;

use crate::distributions::{DistKind, InputDistribution, SampleMatrix};
use crate::error::{LabError, Result};
use crate::params::NeuronParams;
use crate::quad::{integrate_panels, QuadSettings};
use crate::rng::{child_seed, domain};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// CRN sample sets larger than this many scalars are streamed instead of stored.
pub const MAX_CACHED_SCALARS: usize = 60_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureGrid<T> {
    /// Relative tolerance of the adaptive radial rule.
    pub rel_tol: T,
    /// Maximum bisection depth per radial panel.
    pub max_depth: u32,
}

impl<T: Scalar> Default for QuadratureGrid<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-10), max_depth: 24 }
    }
}

impl<T: Scalar> QuadratureGrid<T> {
    fn settings(&self) -> QuadSettings<T> {
        QuadSettings { rel_tol: self.rel_tol, abs_tol: T::min_positive_value(), max_depth: self.max_depth }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EngineMethod<T> {
    MonteCarlo { n_samples: usize, seed: u64, common_random_numbers: bool },
    Quadrature2D { grid: QuadratureGrid<T> },
    FiniteDiff { base: Box<EngineMethod<T>>, step: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEngine<T> {
    pub method: EngineMethod<T>,
    /// Value used for σ'(0).
    pub relu_deriv_at_zero: T,
}

impl<T: Scalar> GradientEngine<T> {
    pub fn quadrature() -> Self {
        Self { method: EngineMethod::Quadrature2D { grid: QuadratureGrid::default() }, relu_deriv_at_zero: T::zero() }
    }

    pub fn monte_carlo(n_samples: usize, seed: u64) -> Self {
        Self {
            method: EngineMethod::MonteCarlo { n_samples, seed, common_random_numbers: true },
            relu_deriv_at_zero: T::zero(),
        }
    }

    pub fn finite_diff(base: GradientEngine<T>, step: T) -> Self {
        Self {
            method: EngineMethod::FiniteDiff { base: Box::new(base.method), step },
            relu_deriv_at_zero: base.relu_deriv_at_zero,
        }
    }

    pub fn with_relu_deriv_at_zero(mut self, s: T) -> Self {
        self.relu_deriv_at_zero = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relu_deriv_at_zero >= T::zero() && self.relu_deriv_at_zero <= T::one()) {
            return Err(LabError::invalid("relu_deriv_at_zero", "must lie in [0, 1]"));
        }
        validate_method(&self.method, true)
    }
}

fn validate_method<T: Scalar>(m: &EngineMethod<T>, allow_fd: bool) -> Result<()> {
    match m {
        EngineMethod::MonteCarlo { n_samples, .. } => {
            if *n_samples < 2 {
                return Err(LabError::invalid("n_samples", "must be at least 2"));
            }
        }
        EngineMethod::Quadrature2D { grid } => {
            if !(grid.rel_tol > T::zero()) {
                return Err(LabError::invalid("rel_tol", "must be positive"));
            }
        }
        EngineMethod::FiniteDiff { base, step } => {
            if !allow_fd {
                return Err(LabError::invalid("base", "finite differences cannot be nested"));
            }
            if !(*step > T::zero()) {
                return Err(LabError::invalid("step", "must be positive"));
            }
            validate_method(base, false)?;
        }
    }
    Ok(())
}

/// Loss, gradient and estimation uncertainty at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossGradResult<T> {
    pub loss: T,
    pub grad: Vec<T>,
    /// Standard error of the loss (Monte Carlo only).
    pub std_error: Option<T>,
    /// Per-coordinate standard errors of the gradient (Monte Carlo only).
    pub grad_std_error: Option<Vec<T>>,
    /// Bound on the quadrature error of the gradient, summed over coordinates.
    pub error_estimate: Option<T>,
}

/// All expectations the checkers consume, from a single pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub loss: T,
    pub grad: Vec<T>,
    /// Pr[wᵀx ≥ 0 ∧ vᵀx ≥ 0].
    pub joint_positive_prob: T,
    /// E[σ(wᵀx)σ(vᵀx)].
    pub cross: T,
    /// E[σ(wᵀx)²].
    pub sq_w: T,
    pub loss_std_error: Option<T>,
    pub grad_std_error: Option<Vec<T>>,
    pub cross_std_error: Option<T>,
    pub loss_error_estimate: Option<T>,
    pub grad_error_estimate: Option<T>,
}

impl<T: Scalar> Evaluation<T> {
    pub fn grad_norm(&self) -> T {
        crate::scalar::norm(&self.grad)
    }

    pub fn to_loss_grad(&self) -> LossGradResult<T> {
        LossGradResult {
            loss: self.loss,
            grad: self.grad.clone(),
            std_error: self.loss_std_error,
            grad_std_error: self.grad_std_error.clone(),
            error_estimate: self.grad_error_estimate,
        }
    }
}

enum Backend<T> {
    Quad(QuadSettings<T>),
    Mc { n: usize, seed: u64, crn: bool, cache: Option<Arc<SampleMatrix<T>>> },
}

/// F(·) for a fixed target, distribution and engine.
pub struct Objective<T: Scalar> {
    dist: InputDistribution<T>,
    v: NeuronParams<T>,
    engine: GradientEngine<T>,
    backend: Backend<T>,
    fd_step: Option<T>,
}

impl<T: Scalar> Objective<T> {
    pub fn new(dist: &InputDistribution<T>, v: &NeuronParams<T>, engine: &GradientEngine<T>) -> Result<Self> {
        dist.validate()?;
        engine.validate()?;
        v.check_dim(dist.dim)?;
        if !v.is_finite() {
            return Err(LabError::NonFinite("target parameters".into()));
        }
        let (base, fd_step) = match &engine.method {
            EngineMethod::FiniteDiff { base, step } => (base.as_ref(), Some(*step)),
            m => (m, None),
        };
        let backend = match base {
            EngineMethod::Quadrature2D { grid } => {
                if !dist.is_symmetric() {
                    return Err(LabError::Unsupported(format!(
                        "quadrature requires a spherically symmetric distribution, got {}",
                        dist.name()
                    )));
                }
                if dist.dim < 2 {
                    return Err(LabError::Unsupported("quadrature requires dim >= 2".into()));
                }
                Backend::Quad(grid.settings())
            }
            EngineMethod::MonteCarlo { n_samples, seed, common_random_numbers } => {
                let cache = if *common_random_numbers && n_samples * (dist.dim + 1) <= MAX_CACHED_SCALARS {
                    Some(Arc::new(monte_carlo::materialize(dist, *n_samples, *seed)))
                } else {
                    None
                };
                Backend::Mc { n: *n_samples, seed: *seed, crn: *common_random_numbers, cache }
            }
            EngineMethod::FiniteDiff { .. } => unreachable!("validated"),
        };
        Ok(Self { dist: dist.clone(), v: v.clone(), engine: engine.clone(), backend, fd_step })
    }

    pub fn dist(&self) -> &InputDistribution<T> {
        &self.dist
    }

    pub fn target(&self) -> &NeuronParams<T> {
        &self.v
    }

    pub fn engine(&self) -> &GradientEngine<T> {
        &self.engine
    }

    pub fn is_quadrature(&self) -> bool {
        matches!(self.backend, Backend::Quad(_))
    }

    fn base_eval(&self, w: &NeuronParams<T>) -> Result<Evaluation<T>> {
        w.check_dim(self.dist.dim)?;
        if !w.is_finite() {
            return Err(LabError::NonFinite("learner parameters".into()));
        }
        let d0 = self.engine.relu_deriv_at_zero;
        let ev = match &self.backend {
            Backend::Quad(settings) => {
                let plane = quadrature::build_plane(w, &self.v)?;
                let pe = quadrature::evaluate_plane(&plane, &self.dist, d0, settings);
                let grad = quadrature::lift_gradient(&plane, &pe.grad);
                Evaluation {
                    loss: pe.loss.max(T::zero()),
                    grad,
                    joint_positive_prob: pe.joint.max(T::zero()).min(T::one()),
                    cross: pe.cross,
                    sq_w: pe.sq_w,
                    loss_std_error: None,
                    grad_std_error: None,
                    cross_std_error: None,
                    loss_error_estimate: Some(pe.loss_err),
                    grad_error_estimate: Some(pe.grad_err[0] + pe.grad_err[1] + pe.grad_err[2]),
                }
            }
            Backend::Mc { n, seed, crn, cache } => {
                let wf = w.to_full();
                let vf = self.v.to_full();
                let acc = match cache {
                    Some(samples) => monte_carlo::accumulate_matrix(samples, &wf, &vf, d0),
                    None => {
                        let s = if *crn { *seed } else { child_seed(*seed, domain::MC_CHUNK, hash_params(w)) };
                        monte_carlo::accumulate_stream(&self.dist, *n, s, &wf, &vf, d0)
                    }
                };
                let nf = T::lit_usize(acc.n);
                let grad: Vec<T> = acc.g.iter().map(|&g| g / nf).collect();
                let gse: Vec<T> =
                    acc.g.iter().zip(&acc.g2).map(|(&s, &s2)| monte_carlo::std_error(s, s2, acc.n)).collect();
                Evaluation {
                    loss: acc.loss / nf,
                    grad,
                    joint_positive_prob: T::lit_usize(acc.joint) / nf,
                    cross: acc.cross / nf,
                    sq_w: acc.sq / nf,
                    loss_std_error: Some(monte_carlo::std_error(acc.loss, acc.loss2, acc.n)),
                    grad_std_error: Some(gse),
                    cross_std_error: Some(monte_carlo::std_error(acc.cross, acc.cross2, acc.n)),
                    loss_error_estimate: None,
                    grad_error_estimate: None,
                }
            }
        };
        if !ev.loss.is_finite() || ev.grad.iter().any(|g| !g.is_finite()) {
            return Err(LabError::NonFinite("loss or gradient".into()));
        }
        Ok(ev)
    }

    /// Full evaluation at `w`.
    pub fn evaluate(&self, w: &NeuronParams<T>) -> Result<Evaluation<T>> {
        let mut ev = self.base_eval(w)?;
        if let Some(h) = self.fd_step {
            let full = w.to_full();
            let mut grad = Vec::with_capacity(full.len());
            for i in 0..full.len() {
                let mut p = full.clone();
                let mut m = full.clone();
                p[i] += h;
                m[i] -= h;
                let lp = self.base_eval(&NeuronParams::from_full(&p)?)?.loss;
                let lm = self.base_eval(&NeuronParams::from_full(&m)?)?.loss;
                grad.push((lp - lm) / (h + h));
            }
            ev.grad = grad;
            ev.grad_std_error = None;
            ev.grad_error_estimate = None;
        }
        Ok(ev)
    }

    pub fn loss(&self, w: &NeuronParams<T>) -> Result<T> {
        Ok(self.base_eval(w)?.loss)
    }

    pub fn gradient(&self, w: &NeuronParams<T>) -> Result<LossGradResult<T>> {
        Ok(self.evaluate(w)?.to_loss_grad())
    }

    pub fn joint_positive_prob(&self, w: &NeuronParams<T>) -> Result<T> {
        Ok(self.base_eval(w)?.joint_positive_prob)
    }

    /// E[σ(w̄ᵀx)σ(vᵀx)] with w̄ = w/‖w‖.
    pub fn correlation_term(&self, w: &NeuronParams<T>) -> Result<T> {
        let n = w.norm();
        if n == T::zero() {
            return Err(LabError::invalid("w", "correlation term undefined at w = 0"));
        }
        Ok(self.base_eval(w)?.cross / n)
    }

    /// F(0) = ½E[σ(vᵀx)²].
    pub fn loss_at_origin(&self) -> Result<T> {
        self.loss(&NeuronParams::zeros(self.dist.dim))
    }
}

fn hash_params<T: Scalar>(w: &NeuronParams<T>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in w.to_full() {
        let bits = x.as_f64().to_bits();
        h = (h ^ bits).wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn loss<T: Scalar>(
    w: &NeuronParams<T>,
    v: &NeuronParams<T>,
    dist: &InputDistribution<T>,
    engine: &GradientEngine<T>,
) -> Result<T> {
    Objective::new(dist, v, engine)?.loss(w)
}

pub fn gradient<T: Scalar>(
    w: &NeuronParams<T>,
    v: &NeuronParams<T>,
    dist: &InputDistribution<T>,
    engine: &GradientEngine<T>,
) -> Result<LossGradResult<T>> {
    Objective::new(dist, v, engine)?.gradient(w)
}

pub fn joint_positive_prob<T: Scalar>(
    w: &NeuronParams<T>,
    v: &NeuronParams<T>,
    dist: &InputDistribution<T>,
    engine: &GradientEngine<T>,
) -> Result<T> {
    Objective::new(dist, v, engine)?.joint_positive_prob(w)
}

pub fn correlation_term<T: Scalar>(
    w: &NeuronParams<T>,
    v: &NeuronParams<T>,
    dist: &InputDistribution<T>,
    engine: &GradientEngine<T>,
) -> Result<T> {
    Objective::new(dist, v, engine)?.correlation_term(w)
}

/// True when no point of the support activates the neuron.
///
/// With σ'(0) = 0 the gradient then vanishes identically.
pub fn is_dead<T: Scalar>(w: &NeuronParams<T>, dist: &InputDistribution<T>) -> bool {
    let Some(c) = dist.support_radius() else {
        return w.weight_norm() == T::zero() && w.bias < T::zero();
    };
    let wn = w.weight_norm();
    if wn == T::zero() {
        return w.bias < T::zero();
    }
    // wᵀx = w̃ᵀx̃ + b ≤ ‖w̃‖c + b
    w.bias <= -c * wn
}

/// F(0) by one-dimensional integration along ṽ.
///
/// Unlike the planar route this keeps full relative accuracy when only a thin
/// cap of the support activates the target.
pub fn origin_loss_1d<T: Scalar>(v: &NeuronParams<T>, dist: &InputDistribution<T>) -> Result<T> {
    v.check_dim(dist.dim)?;
    if !dist.is_symmetric() {
        return Err(LabError::Unsupported("origin_loss_1d requires a symmetric distribution".into()));
    }
    let vn = v.weight_norm();
    let half = T::lit(0.5);
    if vn == T::zero() {
        return Ok(half * v.bias.max(T::zero()).powi(2));
    }
    let t0 = -v.bias / vn;
    let (upper, ball_r) = match &dist.kind {
        DistKind::UniformBall { radius } => (*radius, Some(*radius)),
        _ => (T::lit(40.0), None),
    };
    if t0 >= upper {
        return Ok(T::zero());
    }
    let lo = t0.max(-upper);
    let dim_exp = T::lit((dist.dim as f64 - 1.0) / 2.0);
    let norm_const = T::lit(crate::distributions::ball_marginal_norm(dist.dim));
    let f = |t: T| -> [T; 1] {
        let s = t - t0;
        let dens = match ball_r {
            Some(r) => {
                // (1 − t/r)(1 + t/r) with the first factor taken from the panel end
                let gap = ((upper - t) / r).max(T::zero());
                norm_const / r * (gap * (T::one() + t / r)).powf(dim_exp)
            }
            None => (-t * t * half).exp() / T::TAU().sqrt(),
        };
        [half * vn * vn * s * s * dens]
    };
    let mut breaks = vec![lo, upper];
    if ball_r.is_none() && lo < T::zero() && upper > T::zero() {
        breaks = vec![lo, T::zero(), upper];
    }
    let settings = QuadSettings { rel_tol: T::lit(1e-13), abs_tol: T::min_positive_value(), max_depth: 30 };
    Ok(integrate_panels(f, &breaks, &settings).value[0])
}

/// Area of {y ∈ R² : pᵀy > b, qᵀy > b, ‖y‖ ≤ α} by exact arc lengths on each circle.
pub fn wedge_disk_area<T: Scalar>(p: [T; 2], q: [T; 2], b: T, alpha: T) -> Result<T> {
    if !(alpha > T::zero()) {
        return Err(LabError::invalid("alpha", "must be positive"));
    }
    let fp = [-b, p[0], p[1]];
    let fq = [-b, q[0], q[1]];
    let base = q[1].atan2(q[0]);
    let f = |rho: T| -> [T; 1] {
        let ia = arcs::Intervals::from_arc(arcs::positive_arc(&fp, rho), base);
        let ib = arcs::Intervals::from_arc(arcs::positive_arc(&fq, rho), base);
        let len: T = ia.intersect(&ib).iter().map(|&(lo, hi)| hi - lo).fold(T::zero(), |a, x| a + x);
        [rho * len]
    };
    let mut breaks = vec![T::zero(), alpha];
    let pn = p[0].hypot(p[1]);
    let qn = q[0].hypot(q[1]);
    for n in [pn, qn] {
        if n > T::zero() {
            breaks.push(b.abs() / n);
        }
    }
    let det = p[0] * q[1] - p[1] * q[0];
    if det != T::zero() {
        let y0 = b * (q[1] - p[1]) / det;
        let y1 = b * (p[0] - q[0]) / det;
        breaks.push(y0.hypot(y1));
    }
    breaks.retain(|x| *x >= T::zero() && *x <= alpha);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    breaks.dedup();
    let settings = QuadSettings { rel_tol: T::lit(1e-12), abs_tol: T::min_positive_value(), max_depth: 30 };
    Ok(integrate_panels(f, &breaks, &settings).value[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(d: usize) -> InputDistribution<f64> {
        InputDistribution::uniform_ball(d, 1.0).unwrap()
    }

    #[test]
    fn loss_vanishes_at_target() {
        let v = NeuronParams::new(vec![0.6, -0.8, 0.0], 0.2);
        let q = Objective::new(&ball(3), &v, &GradientEngine::quadrature()).unwrap();
        let ev = q.evaluate(&v).unwrap();
        assert!(ev.loss.abs() < 1e-15);
        assert!(ev.grad.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn gaussian_origin_loss_is_quarter() {
        let g = InputDistribution::<f64>::gaussian(4).unwrap();
        let v = NeuronParams::axis(4, 0, 1.0, 0.0);
        let q = Objective::new(&g, &v, &GradientEngine::quadrature()).unwrap();
        assert!((q.loss_at_origin().unwrap() - 0.25).abs() < 1e-12);
        assert!((origin_loss_1d(&v, &g).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn joint_probability_examples() {
        let g = InputDistribution::<f64>::gaussian(3).unwrap();
        let v = NeuronParams::axis(3, 0, 1.0, 0.0);
        let q = Objective::new(&g, &v, &GradientEngine::quadrature()).unwrap();
        assert!((q.joint_positive_prob(&v).unwrap() - 0.5).abs() < 1e-12);
        let anti = NeuronParams::axis(3, 0, -1.0, 0.0);
        assert_eq!(q.joint_positive_prob(&anti).unwrap(), 0.0);
    }

    #[test]
    fn correlation_at_target_is_half_for_gaussian() {
        let g = InputDistribution::<f64>::gaussian(3).unwrap();
        let v = NeuronParams::axis(3, 1, 1.0, 0.0);
        let q = Objective::new(&g, &v, &GradientEngine::quadrature()).unwrap();
        assert!((q.correlation_term(&v).unwrap() - 0.5).abs() < 1e-12);
        assert!(q.correlation_term(&NeuronParams::zeros(3)).is_err());
    }

    #[test]
    fn dead_cone_monte_carlo_gradient_is_exactly_zero() {
        let v = NeuronParams::axis(3, 1, 1.0, 0.0);
        let w = NeuronParams::axis(3, 0, 1.0, -2.0);
        assert!(is_dead(&w, &ball(3)));
        let mc = Objective::new(&ball(3), &v, &GradientEngine::monte_carlo(20_000, 5)).unwrap();
        assert!(mc.gradient(&w).unwrap().grad.iter().all(|&g| g == 0.0));
        let q = Objective::new(&ball(3), &v, &GradientEngine::quadrature()).unwrap();
        assert!(q.gradient(&w).unwrap().grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn quadrature_rejects_heavy_cap() {
        let h = InputDistribution::<f64>::heavy_cap(3, 1.0, 0.5, None).unwrap();
        let v = NeuronParams::axis(3, 0, 1.0, 0.0);
        assert!(matches!(Objective::new(&h, &v, &GradientEngine::quadrature()), Err(LabError::Unsupported(_))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let v = NeuronParams::axis(2, 0, 1.0, 0.0);
        assert!(Objective::new(&ball(3), &v, &GradientEngine::quadrature()).is_err());
    }

    #[test]
    fn single_precision_quadrature_runs() {
        let d = InputDistribution::<f32>::uniform_ball(3, 1.0).unwrap();
        let v = NeuronParams::axis(3, 0, 1.0f32, 0.0);
        let mut eng = GradientEngine::<f32>::quadrature();
        if let EngineMethod::Quadrature2D { grid } = &mut eng.method {
            grid.rel_tol = 1e-6;
        }
        let q = Objective::new(&d, &v, &eng).unwrap();
        let w = NeuronParams::axis(3, 1, 1.0f32, 0.1);
        let ev = q.evaluate(&w).unwrap();
        assert!(ev.loss > 0.0 && ev.loss.is_finite());
    }

    #[test]
    fn wedge_area_matches_closed_forms() {
        // half-disk and quarter-disk
        let a = wedge_disk_area([1.0, 0.0], [1.0, 0.0], 0.0, 1.0).unwrap();
        assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let a = wedge_disk_area([1.0, 0.0], [0.0, 1.0], 0.0, 2.0).unwrap();
        assert!((a - std::f64::consts::PI).abs() < 1e-12);
        // circular segment beyond a chord at distance h
        let h: f64 = 0.3;
        let seg = h.acos() - h * (1.0 - h * h).sqrt();
        let a = wedge_disk_area([1.0, 0.0], [1.0, 0.0], h, 1.0).unwrap();
        assert!((a - seg).abs() < 1e-12, "{a} {seg}");
        let a = wedge_disk_area([1.0, 0.0], [1.0, 0.0], -h, 1.0).unwrap();
        assert!((a - (std::f64::consts::PI - seg)).abs() < 1e-12);
    }
}
