//! Closed-form constants appearing in the convergence bounds.

use crate::error::{LabError, Result};
use crate::params::NeuronParams;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, Ordering};

static FLIP_GAMMA_SIGN: AtomicBool = AtomicBool::new(false);

/// Test hook: makes [`linear_rate_gamma`] return −γ so the checker battery can be shown to fail.
#[doc(hidden)]
pub fn set_gamma_fault(on: bool) {
    FLIP_GAMMA_SIGN.store(on, Ordering::SeqCst);
}

#[doc(hidden)]
pub fn gamma_fault_enabled() -> bool {
    FLIP_GAMMA_SIGN.load(Ordering::SeqCst)
}

fn positive<T: Scalar>(name: &'static str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::invalid(name, "must be positive and finite"))
    }
}

fn at_least_one<T: Scalar>(name: &'static str, x: T) -> Result<()> {
    if x >= T::one() && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::invalid(name, "must be at least 1"))
    }
}

/// γ = δ³ / (3·12²·(‖w₀‖ + 2)³·c⁸·c'²), the contraction rate of the linear-rate bound.
pub fn linear_rate_gamma<T: Scalar>(delta: T, w0_norm: T, c: T, c_prime: T) -> Result<T> {
    positive("delta", delta)?;
    if !(w0_norm >= T::zero()) || !w0_norm.is_finite() {
        return Err(LabError::invalid("w0_norm", "must be nonnegative and finite"));
    }
    at_least_one("c", c)?;
    at_least_one("c_prime", c_prime)?;
    let b = w0_norm + T::lit(2.0);
    let g = delta.powi(3) / (T::lit(432.0) * b.powi(3) * c.powi(8) * c_prime * c_prime);
    Ok(if gamma_fault_enabled() { -g } else { g })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConstants<T> {
    /// M = α⁴β·sin³(π/8) / (256c).
    pub m: T,
    /// Initialization radius ρ = M/c².
    pub rho: T,
    /// Guaranteed loss gap δ = M²/(2c²).
    pub delta: T,
}

/// Constants of the small random initialization recipe.
pub fn random_init_constants<T: Scalar>(alpha: T, beta: T, c: T) -> Result<InitConstants<T>> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    at_least_one("c", c)?;
    let s = (T::PI() / T::lit(8.0)).sin();
    let m = alpha.powi(4) * beta * s.powi(3) / (T::lit(256.0) * c);
    Ok(InitConstants { m, rho: m / (c * c), delta: m * m / (T::lit(2.0) * c * c) })
}

/// Largest admissible −b_v/‖ṽ‖ for the random initialization result, α·sin(π/8)/4.
pub fn target_bias_limit<T: Scalar>(alpha: T) -> T {
    alpha * (T::PI() / T::lit(8.0)).sin() / T::lit(4.0)
}

/// Lipschitz constant of ∇F on a segment with norms in [M, B]: c²(1 + 8(B+1)c'c²/M).
pub fn segment_lipschitz<T: Scalar>(c: T, c_prime: T, m_lower: T, b_upper: T) -> Result<T> {
    positive("m_lower", m_lower)?;
    positive("b_upper", b_upper)?;
    Ok(c * c * (T::one() + T::lit(8.0) * (b_upper + T::one()) * c_prime * c * c / m_lower))
}

/// L = c²(1 + 16(B+1)c'c⁴/δ) and the step cap min{δ/(2c³√(2F(0))), 1/L}.
pub fn descent_step_cap<T: Scalar>(c: T, c_prime: T, b_upper: T, delta: T, f0: T) -> Result<(T, T)> {
    positive("delta", delta)?;
    positive("f0", f0)?;
    positive("b_upper", b_upper)?;
    let l = c * c * (T::one() + T::lit(16.0) * (b_upper + T::one()) * c_prime * c.powi(4) / delta);
    let eta = (delta / (T::lit(2.0) * c.powi(3) * (T::lit(2.0) * f0).sqrt())).min(T::one() / l);
    Ok((l, eta))
}

/// b' = max{−b_w/‖w̃‖, −b_v/‖ṽ‖, 0} / sin(δ/2); `None` when either weight vector vanishes.
pub fn bias_ratio_prime<T: Scalar>(w: &NeuronParams<T>, v: &NeuronParams<T>, delta_angle: T) -> Option<T> {
    let rw = w.bias_ratio()?;
    let rv = v.bias_ratio()?;
    Some(rw.max(rv).max(T::zero()) / (delta_angle * T::lit(0.5)).sin())
}

/// Coefficient κ with ⟨∇F(w), w − v⟩ ≥ κ‖w − v‖²: (α − b')⁴ sin³(δ/4) β / 8⁴ · min{1, 1/α²}.
pub fn inner_product_coefficient<T: Scalar>(alpha: T, beta: T, b_prime: T, delta_angle: T) -> T {
    let s = (delta_angle * T::lit(0.25)).sin();
    (alpha - b_prime).powi(4) * s.powi(3) * beta / T::lit(4096.0) * T::one().min(T::one() / (alpha * alpha))
}

/// λ = C·β/(cα²) for a supplied universal constant C.
pub fn symmetric_rate<T: Scalar>(c_universal: T, beta: T, c: T, alpha: T) -> T {
    c_universal * beta / (c * alpha * alpha)
}

/// Step cap C·β·min{1, τ}/(cα²).
pub fn symmetric_step_cap<T: Scalar>(c_universal: T, beta: T, c: T, alpha: T, tau: T) -> T {
    symmetric_rate(c_universal, beta, c, alpha) * T::one().min(tau)
}

/// Bound 2.4·max{1, 1/√τ} on b_t along symmetric-case trajectories.
pub fn bias_ratio_cap<T: Scalar>(tau: T) -> T {
    T::lit(2.4) * T::one().max(T::one() / tau.sqrt())
}

/// Smallest admissible α in the symmetric case, 2.5√2·max{1, 1/√τ}.
pub fn symmetric_alpha_floor<T: Scalar>(tau: T) -> T {
    T::lit(2.5) * T::SQRT_2() * T::one().max(T::one() / tau.sqrt())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants<T> {
    pub gamma: Option<T>,
    pub m: Option<T>,
    pub rho: Option<T>,
    pub delta_init: Option<T>,
    pub lambda: Option<T>,
    pub c_universal: Option<T>,
    pub l_smooth: Option<T>,
    pub eta_max: Option<T>,
    pub b_prime: Option<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_reference_values() {
        let g = linear_rate_gamma(0.1f64, 1.0, 1.0, 1.0).unwrap();
        let reference: f64 = 0.001 / 11664.0;
        let ulp = f64::from_bits(reference.to_bits() + 1) - reference;
        assert!((g - reference).abs() <= ulp, "{g} vs {reference}");
        let g = linear_rate_gamma(0.5f64, 0.0, 1.0, 1.0).unwrap();
        assert!((g - 0.125 / 3456.0).abs() <= f64::EPSILON * g);
        assert!(linear_rate_gamma(0.0f64, 1.0, 1.0, 1.0).is_err());
        assert!(linear_rate_gamma(0.1f64, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn gamma_homogeneity() {
        let a = linear_rate_gamma(0.1f64, 0.7, 1.3, 1.1).unwrap();
        let b = linear_rate_gamma(0.2f64, 0.7, 1.3, 1.1).unwrap();
        let c = linear_rate_gamma(0.1f64, 0.7, 2.6, 1.1).unwrap();
        assert!((b / a - 8.0).abs() < 1e-12);
        assert!((a / c - 256.0).abs() < 1e-10);
    }

    #[test]
    fn init_constants() {
        let k = random_init_constants(1.0f64, 1.0, 1.0).unwrap();
        let s = (std::f64::consts::PI / 8.0).sin();
        assert!((k.m - s.powi(3) / 256.0).abs() < 1e-18);
        assert!((k.m - 2.18917e-4).abs() < 1e-9);
        let k2 = random_init_constants(2.0f64, 1.0, 1.0).unwrap();
        assert!((k2.m / k.m - 16.0).abs() < 1e-12);
        let k3 = random_init_constants(4.5f64, 0.05, 3.0).unwrap();
        assert!((k3.rho - k3.m / 9.0).abs() < 1e-18);
        assert!((k3.delta - k3.m * k3.m / 18.0).abs() < 1e-20);
    }

    #[test]
    fn inner_product_coefficient_continuous_at_zero_bias() {
        let a = inner_product_coefficient(2.0f64, 0.1, 0.0, 1.0);
        let b = inner_product_coefficient(2.0f64, 0.1, 1e-9, 1.0);
        assert!(a > 0.0 && (a - b).abs() / a < 1e-8);
    }
}
