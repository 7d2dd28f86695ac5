//! Closed-form and one-dimensional oracles for experiment thresholds.

use crate::distributions::{ball_marginal_norm, DistKind, InputDistribution};
use crate::error::{LabError, Result};
use crate::params::NeuronParams;
use crate::quad::{integrate_panels, QuadSettings};
use statrs::function::beta::beta_reg;

/// Pr[u₁ ≥ s] for u uniform on the unit sphere in R^dim.
pub fn sphere_cap_fraction(dim: usize, s: f64) -> f64 {
    if dim < 2 {
        return if s <= -1.0 { 1.0 } else if s <= 1.0 { 0.5 } else { 0.0 };
    }
    if s >= 1.0 {
        return 0.0;
    }
    if s <= -1.0 {
        return 1.0;
    }
    let tail = 0.5 * beta_reg((dim as f64 - 1.0) / 2.0, 0.5, (1.0 - s) * (1.0 + s));
    if s >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Pr[θ(u, e₁) > angle] for u uniform on the sphere.
pub fn sphere_angle_tail(dim: usize, angle: f64) -> f64 {
    sphere_cap_fraction(dim, -angle.cos())
}

/// Target bias threshold a = r(1 − 1/(2d²)) used by the negative-bias construction.
pub fn negative_bias_threshold(dim: usize, radius: f64) -> f64 {
    let d = dim as f64;
    radius * (1.0 - 1.0 / (2.0 * d * d))
}

/// Pr over w̃ uniform on a sphere (b_w = 0) that {w̃ᵀx̃ ≥ 0} misses the cap {x̃₁ ≥ a} of the ball.
///
/// The half-space misses the cap iff w̃₁/‖w̃‖ ≤ −√(1 − a²/r²).
pub fn no_overlap_probability(dim: usize, radius: f64) -> f64 {
    let a = negative_bias_threshold(dim, radius) / radius;
    let t = ((1.0 - a) * (1.0 + a)).sqrt();
    sphere_cap_fraction(dim, t)
}

/// Geometric form of the same event for one direction.
pub fn misses_cap(w: &NeuronParams<f64>, radius: f64) -> bool {
    let a = negative_bias_threshold(w.dim(), radius) / radius;
    let t = ((1.0 - a) * (1.0 + a)).sqrt();
    let n = w.weight_norm();
    n > 0.0 && w.bias == 0.0 && w.weights[0] / n <= -t
}

/// F(0) for a heavy-cap input and a target with ṽ along e₁.
pub fn heavy_cap_origin_loss(dist: &InputDistribution<f64>, v: &NeuronParams<f64>) -> Result<f64> {
    let DistKind::HeavyCap { radius, cap_fraction, .. } = dist.kind else {
        return Err(LabError::Unsupported("heavy_cap_origin_loss needs a heavy-cap input".into()));
    };
    v.check_dim(dist.dim)?;
    let vn = v.weight_norm();
    if vn == 0.0 || v.weights[1..].iter().any(|&x| x != 0.0) || v.weights[0] <= 0.0 {
        return Err(LabError::invalid("v", "target weights must point along +e1"));
    }
    let r = radius;
    let t0 = dist.cap_threshold().unwrap();
    let tv = -v.bias / vn;
    if tv >= r {
        return Ok(0.0);
    }
    let k = (dist.dim as f64 - 1.0) / 2.0;
    let a = (dist.dim as f64 + 1.0) / 2.0;
    let u0 = t0 / r;
    let cap_mass = 0.5 * beta_reg(a, 0.5, (1.0 - u0) * (1.0 + u0));
    let norm = ball_marginal_norm(dist.dim) / r;
    let g = |t: f64| norm * ((r - t) / r * (1.0 + t / r)).max(0.0).powf(k);
    let f = |t: f64| -> [f64; 1] {
        let w = if t > t0 { cap_fraction / cap_mass } else { (1.0 - cap_fraction) / (1.0 - cap_mass) };
        let s = t - tv;
        [0.5 * vn * vn * s * s * g(t) * w]
    };
    let lo = tv.max(-r);
    let mut breaks = vec![lo];
    if t0 > lo {
        breaks.push(t0);
    }
    breaks.push(r);
    let settings = QuadSettings { rel_tol: 1e-12, abs_tol: f64::MIN_POSITIVE, max_depth: 30 };
    Ok(integrate_panels(f, &breaks, &settings).value[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_direction, substream};

    #[test]
    fn cap_fraction_reference_values() {
        assert!((sphere_cap_fraction(3, 0.5) - 0.25).abs() < 1e-15);
        assert!((sphere_cap_fraction(2, 0.0) - 0.5).abs() < 1e-15);
        // circle: Pr[cos φ ≥ cos(π/3)] = 1/3
        assert!((sphere_cap_fraction(2, 0.5) - 1.0 / 3.0).abs() < 1e-14);
        assert!((sphere_cap_fraction(7, -0.3) + sphere_cap_fraction(7, 0.3) - 1.0).abs() < 1e-14);
        assert!(sphere_angle_tail(25, 0.75 * std::f64::consts::PI) < 1e-3);
    }

    #[test]
    fn no_overlap_matches_sampling() {
        let p = no_overlap_probability(50, 1.0);
        assert!((p - 0.4437).abs() < 1e-3, "{p}");
        let mut rng = substream(11, 0, 0);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| misses_cap(&NeuronParams::new(random_direction(&mut rng, 50), 0.0), 1.0))
            .count();
        assert!((hits as f64 / n as f64 - p).abs() < 5e-3);
    }

    #[test]
    fn heavy_cap_loss_matches_monte_carlo() {
        let d = 10;
        let dist = InputDistribution::heavy_cap(d, 1.0, 0.5, None).unwrap();
        let v = NeuronParams::axis(d, 0, 1.0, -negative_bias_threshold(d, 1.0));
        let exact = heavy_cap_origin_loss(&dist, &v).unwrap();
        let s = dist.sample(400_000, 3).unwrap();
        let mc: f64 = (0..s.rows)
            .map(|i| {
                let z = (s.row(i)[0] + v.bias).max(0.0);
                0.5 * z * z
            })
            .sum::<f64>()
            / s.rows as f64;
        assert!((mc - exact).abs() < 0.02 * exact, "{mc} vs {exact}");
    }
}
