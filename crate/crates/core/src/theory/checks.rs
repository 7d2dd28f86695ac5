//! Numerical checks of the lemma and theorem inequalities.
//!
//! Every check returns a [`TheoremReport`]. A check whose hypotheses fail is
//! reported as skipped together with the name of the violated hypothesis and
//! never claims pass or fail.

use super::constants::{
    bias_ratio_prime, descent_step_cap, inner_product_coefficient, random_init_constants, segment_lipschitz,
    symmetric_alpha_floor, target_bias_limit,
};
use crate::error::Result;
use crate::objective::{wedge_disk_area, Evaluation, Objective};
use crate::params::NeuronParams;
use crate::scalar::{dot, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem_id: String,
    pub inputs: BTreeMap<String, f64>,
    pub computed_constants: BTreeMap<String, f64>,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    /// Signed slack of the inequality; negative on failure.
    pub margin: Option<f64>,
    pub status: Status,
    /// Identity of the violated hypothesis for skipped reports.
    pub violated: Option<String>,
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub fn new(theorem_id: &str) -> Self {
        Self {
            theorem_id: theorem_id.to_string(),
            inputs: BTreeMap::new(),
            computed_constants: BTreeMap::new(),
            measured: None,
            bound: None,
            margin: None,
            status: Status::Skipped,
            violated: None,
            notes: Vec::new(),
        }
    }

    pub fn input<T: Scalar>(mut self, key: &str, x: T) -> Self {
        self.inputs.insert(key.to_string(), x.as_f64());
        self
    }

    pub fn params<T: Scalar>(mut self, key: &str, p: &NeuronParams<T>) -> Self {
        for (i, x) in p.to_full().iter().enumerate() {
            self.inputs.insert(format!("{key}[{i}]"), x.as_f64());
        }
        self
    }

    pub fn constant<T: Scalar>(mut self, key: &str, x: T) -> Self {
        self.computed_constants.insert(key.to_string(), x.as_f64());
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn skip(mut self, hypothesis: &str) -> Self {
        self.status = Status::Skipped;
        self.violated = Some(hypothesis.to_string());
        self
    }

    /// Pass iff measured ≤ bound + slack.
    pub fn at_most<T: Scalar>(mut self, measured: T, bound: T, slack: T) -> Self {
        let margin = bound - measured;
        self.measured = Some(measured.as_f64());
        self.bound = Some(bound.as_f64());
        self.margin = Some(margin.as_f64());
        self.status = if margin + slack >= T::zero() { Status::Pass } else { Status::Fail };
        self
    }

    /// Pass iff measured ≥ bound − slack.
    pub fn at_least<T: Scalar>(mut self, measured: T, bound: T, slack: T) -> Self {
        let margin = measured - bound;
        self.measured = Some(measured.as_f64());
        self.bound = Some(bound.as_f64());
        self.margin = Some(margin.as_f64());
        self.status = if margin + slack >= T::zero() { Status::Pass } else { Status::Fail };
        self
    }

    /// Downgrades a pass to a fail with a note.
    pub fn require(mut self, ok: bool, what: &str) -> Self {
        if !ok && self.status == Status::Pass {
            self.status = Status::Fail;
            self.notes.push(format!("failed: {what}"));
        }
        self
    }
}

pub mod ids {
    pub const WEDGE_AREA: &str = "wedge_area_lower";
    pub const INNER_PRODUCT: &str = "inner_product_lower";
    pub const NORM_PROB: &str = "norm_and_overlap_lower";
    pub const GRAD_NORM: &str = "grad_norm_upper";
    pub const GRAD_LIPSCHITZ: &str = "grad_lipschitz";
    pub const LOSS_DESCENT: &str = "loss_descent";
    pub const BIAS_PUSH: &str = "bias_grad_push";
    pub const NORM_PUSH: &str = "norm_grad_push";
    pub const SMALL_INIT: &str = "small_init_gain";
    pub const CRITICAL: &str = "critical_points";
    pub const GAMMA: &str = "linear_rate_gamma";
    pub const INIT_CONSTANTS: &str = "random_init_constants";
}

const ANGLE_SLACK: f64 = 1e-12;

/// Area of {y : pᵀy > b, qᵀy > b, ‖y‖ ≤ α} against (α·sin(δ/2) − b)² / (4·sin(δ/2)).
pub fn check_wedge_area<T: Scalar>(p: [T; 2], q: [T; 2], b: T, alpha: T, delta_angle: T) -> Result<TheoremReport> {
    let rep = TheoremReport::new(ids::WEDGE_AREA)
        .input("p0", p[0])
        .input("p1", p[1])
        .input("q0", q[0])
        .input("q1", q[1])
        .input("b", b)
        .input("alpha", alpha)
        .input("delta", delta_angle);
    let unit = |x: [T; 2]| (x[0].hypot(x[1]) - T::one()).abs() <= T::lit(1e-12);
    if !unit(p) || !unit(q) {
        return Ok(rep.skip("unit_directions"));
    }
    if !(delta_angle > T::zero() && delta_angle <= T::PI()) {
        return Ok(rep.skip("delta_in_open_closed_0_pi"));
    }
    if !(alpha > T::zero()) {
        return Ok(rep.skip("alpha_positive"));
    }
    if b < T::zero() {
        return Ok(rep.skip("b_nonnegative"));
    }
    let cos = (p[0] * q[0] + p[1] * q[1]).max(-T::one()).min(T::one());
    if cos.acos() > T::PI() - delta_angle + T::lit(ANGLE_SLACK) {
        return Ok(rep.skip("angle_le_pi_minus_delta"));
    }
    let s = (delta_angle * T::lit(0.5)).sin();
    if !(b < alpha * s) {
        return Ok(rep.skip("b_below_alpha_sin_half_delta"));
    }
    let area = wedge_disk_area(p, q, b, alpha)?;
    let bound = (alpha * s - b).powi(2) / (T::lit(4.0) * s);
    Ok(rep.at_least(area, bound, T::lit(1e-12) * (T::one() + area)))
}

/// Checks the population-loss inequalities against one objective.
pub struct Checker<'a, T: Scalar> {
    obj: &'a Objective<T>,
    f0: T,
    tolerance_scale: T,
}

struct Gap<T> {
    ev: Evaluation<T>,
    /// F(w) − F(0) = ½E[σ(wᵀx)²] − E[σ(wᵀx)σ(vᵀx)].
    value: T,
    err: T,
    grad_err: T,
}

impl<'a, T: Scalar> Checker<'a, T> {
    pub fn new(obj: &'a Objective<T>) -> Result<Self> {
        Ok(Self { obj, f0: obj.loss_at_origin()?, tolerance_scale: T::one() })
    }

    pub fn with_tolerance_scale(mut self, s: T) -> Self {
        self.tolerance_scale = s;
        self
    }

    pub fn f0(&self) -> T {
        self.f0
    }

    pub fn objective(&self) -> &Objective<T> {
        self.obj
    }

    fn gap(&self, w: &NeuronParams<T>) -> Result<Gap<T>> {
        let ev = self.obj.evaluate(w)?;
        let three = T::lit(3.0);
        let err = match (ev.loss_error_estimate, ev.loss_std_error, ev.cross_std_error) {
            (Some(e), _, _) => T::lit(10.0) * e,
            (None, Some(a), Some(b)) => three * (a + b),
            _ => T::zero(),
        };
        let grad_err = match (&ev.grad_error_estimate, &ev.grad_std_error) {
            (Some(e), _) => T::lit(10.0) * *e,
            (None, Some(se)) => three * crate::scalar::norm(se),
            _ => T::zero(),
        };
        let value = T::lit(0.5) * ev.sq_w - ev.cross;
        let floor = T::lit(64.0) * T::epsilon() * (ev.sq_w.abs() + ev.cross.abs());
        Ok(Gap { ev, value, err: (err + floor) * self.tolerance_scale, grad_err: grad_err * self.tolerance_scale })
    }

    fn grad_slack(&self, g: &Gap<T>, scale: T) -> T {
        g.grad_err * scale + T::lit(64.0) * T::epsilon() * g.ev.grad_norm() * scale * self.tolerance_scale
    }

    /// F(w) ≤ F(0) + ‖w‖²c²/2 − ‖w‖M < F(0) for small initializations with b_w = 0.
    pub fn small_init_gain(&self, w: &NeuronParams<T>, alpha: T, beta: T, c: T) -> Result<TheoremReport> {
        let v = self.obj.target();
        let rep = TheoremReport::new(ids::SMALL_INIT).params("w", w).input("alpha", alpha).input("beta", beta).input("c", c);
        let k = match random_init_constants(alpha, beta, c) {
            Ok(k) => k,
            Err(_) => return Ok(rep.skip("constants_admissible")),
        };
        let rep = rep.constant("M", k.m).constant("rho", k.rho).constant("delta", k.delta).constant("f0", self.f0);
        if (v.norm() - T::one()).abs() > T::lit(1e-9) {
            return Ok(rep.skip("target_unit_norm"));
        }
        match v.bias_ratio() {
            Some(r) if r <= target_bias_limit(alpha) => {}
            _ => return Ok(rep.skip("target_bias_ratio_limit")),
        }
        if w.bias != T::zero() {
            return Ok(rep.skip("learner_bias_zero"));
        }
        match w.angle_with(v) {
            Some(t) if t <= T::lit(0.75) * T::PI() + T::lit(ANGLE_SLACK) => {}
            _ => return Ok(rep.skip("angle_le_three_quarter_pi")),
        }
        let wn = w.norm();
        if !(wn < T::lit(2.0) * k.m / (c * c)) {
            return Ok(rep.skip("norm_below_two_m_over_c_sq"));
        }
        let g = self.gap(w)?;
        let bound = wn * wn * c * c * T::lit(0.5) - wn * k.m;
        Ok(rep.at_most(g.value, bound, g.err).require(bound < T::zero(), "bound below F(0)"))
    }

    /// ‖w‖ ≥ δ/c² and Pr[wᵀx ≥ 0, vᵀx ≥ 0] ≥ δ/(c²‖w‖) whenever F(w) ≤ F(0) − δ.
    pub fn norm_prob_lower(&self, w: &NeuronParams<T>, delta: T, c: T) -> Result<TheoremReport> {
        let rep = TheoremReport::new(ids::NORM_PROB).params("w", w).input("delta", delta).input("c", c).constant("f0", self.f0);
        if !(delta > T::zero()) {
            return Ok(rep.skip("delta_positive"));
        }
        let g = self.gap(w)?;
        if !(g.value <= -delta) {
            return Ok(rep.skip("loss_at_most_f0_minus_delta"));
        }
        let wn = w.norm();
        let c2 = c * c;
        let norm_margin = wn - delta / c2;
        let bound = delta / (c2 * wn);
        Ok(rep
            .constant("norm_bound", delta / c2)
            .at_least(g.ev.joint_positive_prob, bound, T::lit(1e-10) * self.tolerance_scale)
            .require(norm_margin >= T::zero(), "norm lower bound"))
    }

    /// ‖∇F(w)‖ ≤ c·√(2F(0)) whenever F(w) ≤ F(0).
    pub fn grad_norm_upper(&self, w: &NeuronParams<T>, c: T) -> Result<TheoremReport> {
        let rep = TheoremReport::new(ids::GRAD_NORM).params("w", w).input("c", c).constant("f0", self.f0);
        let g = self.gap(w)?;
        if !(g.value <= T::zero()) {
            return Ok(rep.skip("loss_at_most_f0"));
        }
        let bound = c * (T::lit(2.0) * self.f0).sqrt();
        let slack = self.grad_slack(&g, T::one());
        Ok(rep.at_most(g.ev.grad_norm(), bound, slack))
    }

    /// ‖∇F(w) − ∇F(w')‖ ≤ ‖w − w'‖·c²(1 + 8(B+1)c'c²/M) on segments with norms in [M, B].
    pub fn grad_lipschitz(
        &self,
        w: &NeuronParams<T>,
        w2: &NeuronParams<T>,
        m_lower: T,
        b_upper: T,
        c: T,
        c_prime: T,
    ) -> Result<TheoremReport> {
        let rep = TheoremReport::new(ids::GRAD_LIPSCHITZ)
            .params("w", w)
            .params("w_prime", w2)
            .input("m_lower", m_lower)
            .input("b_upper", b_upper)
            .input("c", c)
            .input("c_prime", c_prime);
        let Ok(l) = segment_lipschitz(c, c_prime, m_lower, b_upper) else {
            return Ok(rep.skip("segment_bounds_positive"));
        };
        let (a, b) = (w.to_full(), w2.to_full());
        for k in 0..=10 {
            let s = T::lit(k as f64 / 10.0);
            let p: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| x + s * (y - x)).collect();
            let n = crate::scalar::norm(&p);
            if n < m_lower || n > b_upper {
                return Ok(rep.skip("segment_norm_in_m_b"));
            }
        }
        let g1 = self.gap(w)?;
        let g2 = self.gap(w2)?;
        let diff: Vec<T> = g1.ev.grad.iter().zip(&g2.ev.grad).map(|(&x, &y)| x - y).collect();
        let measured = crate::scalar::norm(&diff);
        let bound = w.dist(w2) * l;
        let slack = self.grad_slack(&g1, T::one()) + self.grad_slack(&g2, T::one());
        Ok(rep.constant("lipschitz", l).at_most(measured, bound, slack))
    }

    /// One step with the descent step cap decreases F by at least η(1 − Lη/2)‖∇F‖².
    pub fn loss_descent(&self, w: &NeuronParams<T>, delta: T, b_upper: T, c: T, c_prime: T) -> Result<TheoremReport> {
        let rep = TheoremReport::new(ids::LOSS_DESCENT)
            .params("w", w)
            .input("delta", delta)
            .input("b_upper", b_upper)
            .input("c", c)
            .input("c_prime", c_prime)
            .constant("f0", self.f0);
        let Ok((l, eta)) = descent_step_cap(c, c_prime, b_upper, delta, self.f0) else {
            return Ok(rep.skip("step_cap_inputs_positive"));
        };
        let rep = rep.constant("L", l).constant("eta", eta);
        let g = self.gap(w)?;
        if !(g.value <= -delta) {
            return Ok(rep.skip("loss_at_most_f0_minus_delta"));
        }
        if w.norm() > b_upper {
            return Ok(rep.skip("norm_at_most_b"));
        }
        let next = w.step(eta, &g.ev.grad);
        if next.norm() > b_upper {
            return Ok(rep.skip("next_norm_at_most_b"));
        }
        let g2 = self.gap(&next)?;
        let gn2 = g.ev.grad_norm().powi(2);
        let measured = g2.value - g.value;
        let bound = -eta * (T::one() - l * eta * T::lit(0.5)) * gn2;
        Ok(rep.at_most(measured, bound, g.err + g2.err).require(g2.value <= -delta + g2.err, "loss stays below F(0) − δ"))
    }

    /// ⟨∇F(w), w − v⟩ ≥ κ‖w − v‖² with κ from the angle margin δ and spread constants (α, β).
    pub fn inner_product(&self, w: &NeuronParams<T>, alpha: T, beta: T, delta_angle: T) -> Result<TheoremReport> {
        let v = self.obj.target();
        let dist = self.obj.dist();
        let rep = TheoremReport::new(ids::INNER_PRODUCT)
            .params("w", w)
            .input("alpha", alpha)
            .input("beta", beta)
            .input("delta", delta_angle);
        if !dist.is_symmetric() {
            return Ok(rep.skip("spherically_symmetric"));
        }
        if !(delta_angle >= T::zero() && delta_angle < T::PI()) {
            return Ok(rep.skip("delta_in_closed_open_0_pi"));
        }
        match dist.density_floor(alpha) {
            Ok(floor) if beta <= floor * (T::one() + T::lit(1e-12)) && beta > T::zero() => {}
            _ => return Ok(rep.skip("density_floor_beta_on_alpha_disk")),
        }
        let Some(theta) = w.angle_with(v) else {
            return Ok(rep.skip("weights_nonzero"));
        };
        if theta > T::PI() - delta_angle + T::lit(ANGLE_SLACK) {
            return Ok(rep.skip("angle_le_pi_minus_delta"));
        }
        let Some(bp) = bias_ratio_prime(w, v, delta_angle) else {
            return Ok(rep.skip("weights_nonzero"));
        };
        if !(bp < alpha) {
            return Ok(rep.skip("b_prime_below_alpha"));
        }
        let kappa = inner_product_coefficient(alpha, beta, bp, delta_angle);
        let g = self.gap(w)?;
        let diff: Vec<T> = w.to_full().iter().zip(v.to_full()).map(|(&a, b)| a - b).collect();
        let measured = dot(&g.ev.grad, &diff);
        let d2 = dot(&diff, &diff);
        let slack = self.grad_slack(&g, d2.sqrt());
        Ok(rep.constant("b_prime", bp).constant("kappa", kappa).at_least(measured, kappa * d2, slack))
    }

    fn symmetric_hypotheses(&self, rep: TheoremReport, alpha: T, beta: T, tau: T) -> std::result::Result<TheoremReport, TheoremReport> {
        let v = self.obj.target();
        let dist = self.obj.dist();
        if !dist.is_symmetric() {
            return Err(rep.skip("spherically_symmetric"));
        }
        if v.bias < T::zero() {
            return Err(rep.skip("target_bias_nonnegative"));
        }
        if (v.weight_norm() - T::one()).abs() > T::lit(1e-9) {
            return Err(rep.skip("target_weights_unit_norm"));
        }
        if alpha < symmetric_alpha_floor(tau) {
            return Err(rep.skip("alpha_above_symmetric_floor"));
        }
        match dist.density_floor(alpha) {
            Ok(floor) if beta <= floor * (T::one() + T::lit(1e-12)) && beta > T::zero() => Ok(rep),
            _ => Err(rep.skip("density_floor_beta_on_alpha_disk")),
        }
    }

    /// Bias coordinate of ∇F is at most −α³β/640 for small w̃ and small nonnegative b_w.
    pub fn bias_push(&self, w: &NeuronParams<T>, alpha: T, beta: T, tau: T) -> Result<TheoremReport> {
        let v = self.obj.target();
        let rep = TheoremReport::new(ids::BIAS_PUSH).params("w", w).input("alpha", alpha).input("beta", beta).input("tau", tau);
        let rep = match self.symmetric_hypotheses(rep, alpha, beta, tau) {
            Ok(r) => r,
            Err(r) => return Ok(r),
        };
        let level = alpha.powi(3) * beta / T::lit(640.0);
        let rep = rep.constant("level", level);
        let dw: Vec<T> = w.weights.iter().zip(&v.weights).map(|(&a, &b)| a - b).collect();
        if dot(&dw, &dw) > T::one() {
            return Ok(rep.skip("weight_distance_at_most_one"));
        }
        if w.weight_norm() > T::lit(0.4) {
            return Ok(rep.skip("weight_norm_at_most_0.4"));
        }
        if w.bias < T::zero() || w.bias > level {
            return Ok(rep.skip("bias_in_zero_level"));
        }
        if w.is_zero() {
            return Ok(rep.skip("learner_not_origin"));
        }
        let g = self.gap(w)?;
        let slack = self.grad_slack(&g, T::one());
        Ok(rep.at_most(g.ev.grad[w.dim()], -level, slack))
    }

    /// ⟨∇F(w)_{1:d}, w̃⟩ ≤ 0 for ‖w̃‖ ≤ τ/2 and b_w ≤ 0.
    pub fn norm_push(&self, w: &NeuronParams<T>, alpha: T, beta: T, tau: T) -> Result<TheoremReport> {
        let v = self.obj.target();
        let rep = TheoremReport::new(ids::NORM_PUSH).params("w", w).input("alpha", alpha).input("beta", beta).input("tau", tau);
        let rep = match self.symmetric_hypotheses(rep, alpha, beta, tau) {
            Ok(r) => r,
            Err(r) => return Ok(r),
        };
        let dw: Vec<T> = w.weights.iter().zip(&v.weights).map(|(&a, &b)| a - b).collect();
        if !(dot(&dw, &dw) < T::one()) {
            return Ok(rep.skip("weight_distance_below_one"));
        }
        if w.weight_norm() > tau * T::lit(0.5) {
            return Ok(rep.skip("weight_norm_at_most_half_tau"));
        }
        if w.bias > T::zero() {
            return Ok(rep.skip("bias_nonpositive"));
        }
        let g = self.gap(w)?;
        let measured = dot(&g.ev.grad[..w.dim()], &w.weights);
        let slack = self.grad_slack(&g, w.weight_norm());
        Ok(rep.at_most(measured, T::zero(), slack))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::InputDistribution;
    use crate::objective::GradientEngine;

    #[test]
    fn wedge_area_reference_configuration() {
        let q = std::f64::consts::FRAC_PI_4;
        let p = [q.cos(), q.sin()];
        let r = [q.cos(), -q.sin()];
        let rep = check_wedge_area(p, r, 0.3, 1.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert_eq!(rep.status, Status::Pass);
        let b = rep.bound.unwrap();
        assert!((b - (q.sin() - 0.3f64).powi(2) / (4.0 * q.sin())).abs() < 1e-15);
        assert!((b - 0.0586).abs() < 1e-4);
        assert!(rep.measured.unwrap() >= 0.0586);
    }

    #[test]
    fn wedge_area_gates() {
        let e = [1.0, 0.0];
        let rep = check_wedge_area(e, [-1.0, 0.0], 0.1, 1.0, 0.5).unwrap();
        assert_eq!(rep.violated.as_deref(), Some("angle_le_pi_minus_delta"));
        let rep = check_wedge_area(e, e, -0.1, 1.0, 0.5).unwrap();
        assert_eq!(rep.violated.as_deref(), Some("b_nonnegative"));
        let rep = check_wedge_area(e, e, 0.0, 1.0, std::f64::consts::PI).unwrap();
        assert_eq!(rep.status, Status::Pass);
    }

    fn ball_checker_setup() -> Objective<f64> {
        let dist = InputDistribution::uniform_ball(4, 1.0).unwrap();
        let v = NeuronParams::new(vec![0.8, 0.0, 0.0, 0.0], 0.6);
        Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap()
    }

    #[test]
    fn target_passes_norm_prob_lower_with_delta_f0() {
        let obj = ball_checker_setup();
        let ck = Checker::new(&obj).unwrap();
        let c = 2f64.sqrt();
        let f0 = ck.f0();
        let rep = ck.norm_prob_lower(obj.target(), f0 * (1.0 - 1e-9), c).unwrap();
        assert_eq!(rep.status, Status::Pass, "{rep:?}");
        let dead = NeuronParams::new(vec![0.5, 0.0, 0.0, 0.0], -0.6);
        let rep = ck.norm_prob_lower(&dead, 0.01, c).unwrap();
        assert_eq!(rep.status, Status::Skipped);
    }

    #[test]
    fn lipschitz_trivial_pair_and_inner_product_at_target() {
        let obj = ball_checker_setup();
        let ck = Checker::new(&obj).unwrap();
        let w = NeuronParams::new(vec![0.5, 0.3, 0.0, 0.0], 0.2);
        let rep = ck.grad_lipschitz(&w, &w, 0.1, 2.0, 2f64.sqrt(), 1.0).unwrap();
        assert_eq!(rep.status, Status::Pass);
        assert_eq!(rep.measured, Some(0.0));
        let v = obj.target().clone();
        let rep = ck.inner_product(&v, 0.5, 0.01, 0.5).unwrap();
        assert_eq!(rep.status, Status::Pass, "{rep:?}");
    }

    #[test]
    fn gaussian_push_checks() {
        let dist = InputDistribution::gaussian(4).unwrap();
        let v = NeuronParams::new(vec![1.0, 0.0, 0.0, 0.0], 0.2);
        let obj = Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap();
        let ck = Checker::new(&obj).unwrap();
        let alpha = 4.5;
        let beta = dist.density_floor(alpha).unwrap();
        let tau = 2.0 / std::f64::consts::PI;
        let w = NeuronParams::new(vec![0.3, 0.0, 0.0, 0.0], 0.0);
        assert_eq!(ck.bias_push(&w, alpha, beta, tau).unwrap().status, Status::Pass);
        let w = NeuronParams::new(vec![tau / 4.0, 0.0, 0.0, 0.0], -0.01);
        assert_eq!(ck.norm_push(&w, alpha, beta, tau).unwrap().status, Status::Pass);
        let w = NeuronParams::new(vec![0.4, 0.0, 0.0, 0.0], 0.0);
        assert_eq!(ck.bias_push(&w, alpha, beta, tau).unwrap().status, Status::Pass);
        let w = NeuronParams::new(vec![0.5, 0.0, 0.0, 0.0], 0.0);
        assert_eq!(ck.bias_push(&w, alpha, beta, tau).unwrap().violated.as_deref(), Some("weight_norm_at_most_0.4"));
    }
}
