//! Neuron parameters w = (w̃, b_w).

use crate::error::{LabError, Result};
use crate::scalar::{dot, norm, Scalar};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronParams<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> NeuronParams<T> {
    pub fn new(weights: Vec<T>, bias: T) -> Self {
        Self { weights, bias }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![T::zero(); dim], bias: T::zero() }
    }

    /// Unit vector along axis `axis` scaled by `scale`, with the given bias.
    pub fn axis(dim: usize, axis: usize, scale: T, bias: T) -> Self {
        let mut weights = vec![T::zero(); dim];
        weights[axis] = scale;
        Self { weights, bias }
    }

    /// Builds from a flat vector of length d+1 whose last entry is the bias.
    pub fn from_full(full: &[T]) -> Result<Self> {
        if full.is_empty() {
            return Err(LabError::invalid("full", "empty parameter vector"));
        }
        let d = full.len() - 1;
        Ok(Self { weights: full[..d].to_vec(), bias: full[d] })
    }

    pub fn to_full(&self) -> Vec<T> {
        let mut out = self.weights.clone();
        out.push(self.bias);
        out
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_norm(&self) -> T {
        norm(&self.weights)
    }

    pub fn norm(&self) -> T {
        let wn = self.weight_norm();
        wn.hypot(self.bias)
    }

    pub fn is_zero(&self) -> bool {
        self.bias == T::zero() && self.weights.iter().all(|&x| x == T::zero())
    }

    pub fn dot_full(&self, other: &Self) -> T {
        dot(&self.weights, &other.weights) + self.bias * other.bias
    }

    pub fn dist_sq(&self, other: &Self) -> T {
        let s = self
            .weights
            .iter()
            .zip(&other.weights)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        s + (self.bias - other.bias) * (self.bias - other.bias)
    }

    pub fn dist(&self, other: &Self) -> T {
        self.dist_sq(other).sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { weights: self.weights.iter().map(|&x| x * s).collect(), bias: self.bias * s }
    }

    /// Returns `self - step * g` for a flat gradient `g` of length d+1.
    pub fn step(&self, step: T, g: &[T]) -> Self {
        let d = self.dim();
        Self {
            weights: self.weights.iter().zip(g).map(|(&w, &gi)| w - step * gi).collect(),
            bias: self.bias - step * g[d],
        }
    }

    /// θ(w̃, ṽ) in [0, π]; `None` when either weight part vanishes.
    pub fn angle_with(&self, other: &Self) -> Option<T> {
        let a = self.weight_norm();
        let b = other.weight_norm();
        if a == T::zero() || b == T::zero() {
            return None;
        }
        let c = dot(&self.weights, &other.weights) / (a * b);
        Some(c.max(-T::one()).min(T::one()).acos())
    }

    /// The ratio −b/‖w̃‖; `None` when w̃ = 0.
    pub fn bias_ratio(&self) -> Option<T> {
        let a = self.weight_norm();
        if a == T::zero() {
            None
        } else {
            Some(-self.bias / a)
        }
    }

    /// b_t = max{0, −b/‖w̃‖}.
    pub fn b_t(&self) -> Option<T> {
        self.bias_ratio().map(|r| r.max(T::zero()))
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|x| x.is_finite())
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(LabError::DimensionMismatch { expected: d, found: self.dim() });
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> NeuronParams<U> {
        NeuronParams {
            weights: self.weights.iter().map(|x| U::lit(x.as_f64())).collect(),
            bias: U::lit(self.bias.as_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_splits_into_weights_and_bias() {
        let w = NeuronParams::new(vec![3.0f64, 0.0], 4.0);
        assert_eq!(w.norm(), 5.0);
        assert_eq!(w.norm() * w.norm(), w.weight_norm().powi(2) + w.bias * w.bias);
    }

    #[test]
    fn full_roundtrip() {
        let w = NeuronParams::new(vec![1.0f32, 2.0], -0.5);
        assert_eq!(NeuronParams::from_full(&w.to_full()).unwrap(), w);
    }

    #[test]
    fn angle_and_ratio() {
        let w = NeuronParams::new(vec![0.5, 0.0], -0.6);
        let v = NeuronParams::new(vec![0.0, 1.0], 0.0);
        assert!((w.angle_with(&v).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((w.bias_ratio().unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(NeuronParams::<f64>::zeros(2).bias_ratio(), None);
        let pos = NeuronParams::new(vec![1.0, 0.0], 0.3);
        assert_eq!(pos.b_t(), Some(0.0));
    }
}
