//! Classification of critical points of F.

use crate::distributions::InputDistribution;
use crate::params::NeuronParams;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

pub const GLOBAL_MIN_TOL: f64 = 1e-12;
pub const DEAD_CONE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalTag {
    GlobalMin,
    FlatNegativeBias,
    DeadCone,
    NonCritical,
    OriginNonSmooth,
}

impl CriticalTag {
    /// Tags of the flat region where F(w) = F(0).
    pub fn is_flat(self) -> bool {
        matches!(self, CriticalTag::FlatNegativeBias | CriticalTag::DeadCone)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointClass<T> {
    pub tag: CriticalTag,
    /// Signed distance to the inequality that decides the tag; nonnegative inside.
    pub margin: T,
}

/// Tags `w` by the critical-point characterization. Unbounded distributions use
/// their effective radius as the support radius.
pub fn classify_critical<T: Scalar>(
    w: &NeuronParams<T>,
    v: &NeuronParams<T>,
    dist: &InputDistribution<T>,
) -> CriticalPointClass<T> {
    let c = dist.effective_radius();
    let wn = w.weight_norm();
    let tol = T::lit(GLOBAL_MIN_TOL);
    if w.is_zero() {
        return CriticalPointClass { tag: CriticalTag::OriginNonSmooth, margin: T::zero() };
    }
    let gap = w.dist(v);
    if gap <= tol {
        return CriticalPointClass { tag: CriticalTag::GlobalMin, margin: tol - gap };
    }
    if wn == T::zero() {
        return if w.bias < T::zero() {
            CriticalPointClass { tag: CriticalTag::FlatNegativeBias, margin: -w.bias }
        } else {
            CriticalPointClass { tag: CriticalTag::NonCritical, margin: w.bias.min(gap) }
        };
    }
    // distance from (w̃, b) to the cone b = −c‖w̃‖
    let signed = (-w.bias - c * wn) / c.hypot(T::one());
    if -w.bias / wn >= c - T::lit(DEAD_CONE_SLACK) {
        CriticalPointClass { tag: CriticalTag::DeadCone, margin: signed }
    } else {
        CriticalPointClass { tag: CriticalTag::NonCritical, margin: (-signed).min(gap) }
    }
}
