//! Input distributions D̃ on R^d and their lift D on R^{d+1}.
//!
//! Samplers always return lifted rows x = (x̃, 1). The lift is not a separate
//! kind: every descriptor exposes both the support radius of D̃ and of D.

use crate::error::{LabError, Result};
use crate::rng::{domain, substream, LabRng};
use crate::scalar::Scalar;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// Tail mass allowed beyond the effective radius of an unbounded distribution.
pub const GAUSSIAN_TAIL_MASS: f64 = 1e-12;
/// Samples behind the Monte Carlo estimate of τ.
pub const TAU_SAMPLES: usize = 400_000;
/// Radius of the disk on which the Gaussian 2D marginal is integrated.
pub const GAUSSIAN_PLANE_RADIUS: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistKind<T> {
    UniformBall { radius: T },
    StandardGaussian,
    /// Mass `cap_fraction` uniform on {x̃₁ > r − r·depth} ∩ ball, the rest
    /// uniform on the remainder of the ball. `depth` defaults to 1/(4d²).
    HeavyCap { radius: T, cap_fraction: T, cap_depth: Option<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDistribution<T> {
    pub kind: DistKind<T>,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SampleMatrix<T> {
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadConstants<T> {
    /// Support radius of D̃; absent for unbounded kinds.
    pub c: Option<T>,
    /// Radius used where a finite support radius is required.
    pub c_eff: T,
    /// Support radius of the lifted D, √(c_eff² + 1).
    pub c_lifted: T,
    /// Supremum of the 1D marginal density over directions.
    pub marginal_sup: T,
    /// max{1, marginal_sup}.
    pub c_prime: T,
    pub alpha: Option<T>,
    pub beta: Option<T>,
    pub tau: Option<T>,
    pub tau_std_error: Option<T>,
    /// E‖x̃‖⁴.
    pub c4: T,
    pub c4_std_error: Option<T>,
}

impl<T: Scalar> InputDistribution<T> {
    pub fn uniform_ball(dim: usize, radius: T) -> Result<Self> {
        let d = Self { kind: DistKind::UniformBall { radius }, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        let d = Self { kind: DistKind::StandardGaussian, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn heavy_cap(dim: usize, radius: T, cap_fraction: T, cap_depth: Option<T>) -> Result<Self> {
        let d = Self { kind: DistKind::HeavyCap { radius, cap_fraction, cap_depth }, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(LabError::invalid("dim", "must be positive"));
        }
        match &self.kind {
            DistKind::UniformBall { radius } => {
                if !(*radius > T::zero()) || !radius.is_finite() {
                    return Err(LabError::invalid("radius", "must be positive and finite"));
                }
            }
            DistKind::StandardGaussian => {}
            DistKind::HeavyCap { radius, cap_fraction, cap_depth } => {
                if !(*radius > T::zero()) || !radius.is_finite() {
                    return Err(LabError::invalid("radius", "must be positive and finite"));
                }
                if !(*cap_fraction >= T::zero() && *cap_fraction <= T::one()) {
                    return Err(LabError::invalid("cap_fraction", "must lie in [0, 1]"));
                }
                if let Some(depth) = cap_depth {
                    if !(*depth > T::zero() && *depth < T::one()) {
                        return Err(LabError::invalid("cap_depth", "must lie in (0, 1)"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self.kind, DistKind::HeavyCap { .. })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DistKind::UniformBall { .. } => "uniform_ball",
            DistKind::StandardGaussian => "standard_gaussian",
            DistKind::HeavyCap { .. } => "heavy_cap",
        }
    }

    /// Support radius of D̃, `None` for the Gaussian.
    pub fn support_radius(&self) -> Option<T> {
        match &self.kind {
            DistKind::UniformBall { radius } | DistKind::HeavyCap { radius, .. } => Some(*radius),
            DistKind::StandardGaussian => None,
        }
    }

    /// Support radius, or for the Gaussian the radius with tail mass below 1e−12.
    pub fn effective_radius(&self) -> T {
        match self.support_radius() {
            Some(r) => r,
            None => T::lit(gaussian_effective_radius(self.dim, GAUSSIAN_TAIL_MASS)),
        }
    }

    pub fn lifted_radius(&self) -> T {
        self.effective_radius().hypot(T::one())
    }

    /// Radius of the disk carrying the 2D marginal (used by quadrature).
    pub fn plane_radius(&self) -> T {
        match self.support_radius() {
            Some(r) => r,
            None => T::lit(GAUSSIAN_PLANE_RADIUS),
        }
    }

    /// Threshold t₀ of the heavy cap A = {x̃₁ > t₀}.
    pub fn cap_threshold(&self) -> Option<T> {
        match &self.kind {
            DistKind::HeavyCap { radius, cap_depth, .. } => {
                let d = T::lit_usize(self.dim);
                let depth = cap_depth.unwrap_or(T::one() / (T::lit(4.0) * d * d));
                Some(*radius - *radius * depth)
            }
            _ => None,
        }
    }

    /// Draws one x̃ into `out[..d]` and writes the lift coordinate `out[d] = 1`.
    pub fn draw_lifted(&self, rng: &mut LabRng, out: &mut [T]) {
        let d = self.dim;
        match &self.kind {
            DistKind::StandardGaussian => {
                for o in out.iter_mut().take(d) {
                    *o = T::lit(rng.sample::<f64, _>(StandardNormal));
                }
            }
            DistKind::UniformBall { radius } => {
                draw_ball(rng, &mut out[..d], *radius, |_| true);
            }
            DistKind::HeavyCap { radius, cap_fraction, .. } => {
                let t0 = self.cap_threshold().unwrap();
                let u: f64 = rng.random();
                if u < cap_fraction.as_f64() {
                    draw_cap(rng, &mut out[..d], *radius, t0);
                } else {
                    draw_ball(rng, &mut out[..d], *radius, |x| x[0] <= t0);
                }
            }
        }
        out[d] = T::one();
    }

    /// `n` lifted samples, row-major, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix<T>> {
        self.validate()?;
        if n == 0 {
            return Err(LabError::invalid("n", "must be at least 1"));
        }
        let cols = self.dim + 1;
        let mut data = vec![T::zero(); n * cols];
        let mut rng = substream(seed, domain::SAMPLES, 0);
        for row in data.chunks_mut(cols) {
            self.draw_lifted(&mut rng, row);
        }
        Ok(SampleMatrix { rows: n, cols, data })
    }

    fn require_symmetric(&self, what: &str) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(LabError::Unsupported(format!("{what} requires a spherically symmetric distribution")))
        }
    }

    /// Density of the projection of D̃ on a 2D subspace, as a function of ‖y‖.
    pub fn radial_density_2d(&self, rho: T) -> Result<T> {
        self.require_symmetric("marginal_density_2d")?;
        Ok(self.radial_density_2d_unchecked(rho))
    }

    pub(crate) fn radial_density_2d_unchecked(&self, rho: T) -> T {
        match &self.kind {
            DistKind::StandardGaussian => (-rho * rho * T::lit(0.5)).exp() / T::TAU(),
            DistKind::UniformBall { radius } => {
                let d = self.dim;
                if d < 2 || rho > *radius {
                    return T::zero();
                }
                let r = *radius;
                let norm = T::lit_usize(d) / (T::TAU() * r * r);
                let u = rho / r;
                let base = ((T::one() - u) * (T::one() + u)).max(T::zero());
                if d == 2 {
                    norm
                } else {
                    norm * base.powf(T::lit((d as f64 - 2.0) / 2.0))
                }
            }
            DistKind::HeavyCap { .. } => T::nan(),
        }
    }

    pub fn marginal_density_2d(&self, y: [T; 2]) -> Result<T> {
        if self.dim < 2 {
            return Err(LabError::Unsupported("2D marginal needs dim >= 2".into()));
        }
        self.radial_density_2d(y[0].hypot(y[1]))
    }

    /// Density of a single coordinate of D̃ (symmetric kinds).
    pub fn marginal_density_1d(&self, t: T) -> Result<T> {
        self.require_symmetric("marginal_density_1d")?;
        Ok(match &self.kind {
            DistKind::StandardGaussian => (-t * t * T::lit(0.5)).exp() / T::TAU().sqrt(),
            DistKind::UniformBall { radius } => {
                let r = *radius;
                if t.abs() >= r {
                    return Ok(T::zero());
                }
                let u = t / r;
                let base = (T::one() - u) * (T::one() + u);
                T::lit(ball_marginal_norm(self.dim)) / r * base.powf(T::lit((self.dim as f64 - 1.0) / 2.0))
            }
            DistKind::HeavyCap { .. } => unreachable!(),
        })
    }

    /// Pr[x̃₁ ≥ t] for symmetric kinds, from the regularized incomplete beta function.
    pub fn cap_probability(&self, t: T) -> Result<T> {
        self.require_symmetric("cap_probability")?;
        let tf = t.as_f64();
        Ok(T::lit(match &self.kind {
            DistKind::StandardGaussian => 0.5 * erfc(tf / std::f64::consts::SQRT_2),
            DistKind::UniformBall { radius } => {
                let u = tf / radius.as_f64();
                if u >= 1.0 {
                    0.0
                } else if u <= -1.0 {
                    1.0
                } else {
                    let a = (self.dim as f64 + 1.0) / 2.0;
                    let tail = 0.5 * beta_reg(a, 0.5, (1.0 - u) * (1.0 + u));
                    if u >= 0.0 {
                        tail
                    } else {
                        1.0 - tail
                    }
                }
            }
            DistKind::HeavyCap { .. } => unreachable!(),
        }))
    }

    /// 2D density floor β = inf over ‖y‖ ≤ α of the 2D marginal.
    pub fn density_floor(&self, alpha: T) -> Result<T> {
        if !(alpha > T::zero()) {
            return Err(LabError::invalid("alpha", "must be positive"));
        }
        self.radial_density_2d(alpha)
    }

    /// α maximizing α⁴β(α), the combination entering the random-init margin.
    pub fn default_alpha(&self) -> Result<T> {
        self.require_symmetric("default_alpha")?;
        Ok(match &self.kind {
            DistKind::StandardGaussian => T::lit(2.0),
            DistKind::UniformBall { radius } => {
                let k = (self.dim as f64 - 2.0).max(0.0) / 2.0;
                *radius * T::lit((2.0 / (2.0 + k)).sqrt())
            }
            DistKind::HeavyCap { .. } => unreachable!(),
        })
    }

    pub fn estimate_constants(&self, alpha: Option<T>, seed: u64) -> Result<SpreadConstants<T>> {
        self.validate()?;
        let d = self.dim as f64;
        let c = self.support_radius();
        let c_eff = self.effective_radius();
        let (marginal_sup, c4, c4_se) = match &self.kind {
            DistKind::StandardGaussian => {
                (T::one() / T::TAU().sqrt(), T::lit(d * (d + 2.0)), None)
            }
            DistKind::UniformBall { radius } => {
                let r = *radius;
                (
                    T::lit(ball_marginal_norm(self.dim)) / r,
                    r.powi(4) * T::lit(d / (d + 4.0)),
                    None,
                )
            }
            DistKind::HeavyCap { .. } => {
                let (m4, se) = self.mc_fourth_moment(200_000, seed)?;
                (self.heavy_cap_marginal_sup(), m4, Some(se))
            }
        };
        let (alpha, beta) = if self.is_symmetric() && self.dim >= 2 {
            let beta = match alpha {
                Some(a) => Some(self.density_floor(a)?),
                None => None,
            };
            (alpha, beta)
        } else {
            (None, None)
        };
        let (tau, tau_se) = match self.kind {
            _ if self.dim < 2 || !self.is_symmetric() => (None, None),
            DistKind::StandardGaussian => (Some(T::lit(2.0) / T::PI()), None),
            _ => {
                let (t, se) = self.estimate_tau(TAU_SAMPLES, seed)?;
                (Some(T::lit(t)), Some(T::lit(se)))
            }
        };
        Ok(SpreadConstants {
            c,
            c_eff,
            c_lifted: c_eff.hypot(T::one()),
            marginal_sup,
            c_prime: marginal_sup.max(T::one()),
            alpha,
            beta,
            tau,
            tau_std_error: tau_se,
            c4,
            c4_std_error: c4_se,
        })
    }

    /// Monte Carlo τ = E|x̃₁x̃₂| / E[x̃₁²] from `n` draws, with a delta-method standard error.
    pub fn estimate_tau(&self, n: usize, seed: u64) -> Result<(f64, f64)> {
        if !self.is_symmetric() {
            return Err(LabError::Unsupported(format!("tau is defined for spherically symmetric laws, got {}", self.name())));
        }
        if self.dim < 2 || n < 2 {
            return Err(LabError::invalid("dim", "tau needs d ≥ 2 and at least 2 draws"));
        }
        let mut rng = substream(seed, domain::CONSTANTS, 1);
        let mut row = vec![T::zero(); self.dim + 1];
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..n {
            self.draw_lifted(&mut rng, &mut row);
            let (x1, x2) = (row[0].as_f64(), row[1].as_f64());
            let a = (x1 * x2).abs();
            let b = x1 * x1;
            sa += a;
            sb += b;
            saa += a * a;
            sbb += b * b;
            sab += a * b;
        }
        let nf = n as f64;
        let (ma, mb) = (sa / nf, sb / nf);
        let r = ma / mb;
        let (va, vb, cab) = (saa / nf - ma * ma, sbb / nf - mb * mb, sab / nf - ma * mb);
        let var = (va - 2.0 * r * cab + r * r * vb) / (mb * mb * nf);
        Ok((r, var.max(0.0).sqrt()))
    }

    fn mc_fourth_moment(&self, n: usize, seed: u64) -> Result<(T, T)> {
        let mut rng = substream(seed, domain::CONSTANTS, 0);
        let mut row = vec![T::zero(); self.dim + 1];
        let (mut s, mut s2) = (0.0f64, 0.0f64);
        for _ in 0..n {
            self.draw_lifted(&mut rng, &mut row);
            let q: f64 = row[..self.dim].iter().map(|x| x.as_f64().powi(2)).sum::<f64>().powi(2);
            s += q;
            s2 += q * q;
        }
        let nf = n as f64;
        let mean = s / nf;
        let var = (s2 / nf - mean * mean).max(0.0);
        Ok((T::lit(mean), T::lit((var / (nf - 1.0)).sqrt())))
    }

    /// Sup of the x̃₁ marginal, the most concentrated direction of the heavy cap.
    fn heavy_cap_marginal_sup(&self) -> T {
        let DistKind::HeavyCap { radius, cap_fraction, .. } = &self.kind else { unreachable!() };
        let r = radius.as_f64();
        let q = cap_fraction.as_f64();
        let t0 = self.cap_threshold().unwrap().as_f64();
        let k = (self.dim as f64 - 1.0) / 2.0;
        let a = (self.dim as f64 + 1.0) / 2.0;
        // mass of the ball beyond t0 relative to the ball, from the beta tail
        let u0 = t0 / r;
        let frac_cap = 0.5 * beta_reg(a, 0.5, (1.0 - u0) * (1.0 + u0));
        let g = |t: f64| ball_marginal_norm(self.dim) / r * ((1.0 - t / r) * (1.0 + t / r)).max(0.0).powf(k);
        let cap_peak = if frac_cap > 0.0 { q * g(t0) / frac_cap } else { 0.0 };
        let body_peak = if frac_cap < 1.0 { (1.0 - q) * g(0.0f64.min(t0)) / (1.0 - frac_cap) } else { 0.0 };
        T::lit(cap_peak.max(body_peak))
    }
}

/// Γ(d/2 + 1) / (√π Γ((d+1)/2)), the peak of a coordinate marginal of the unit ball.
pub(crate) fn ball_marginal_norm(d: usize) -> f64 {
    let d = d as f64;
    (ln_gamma(d / 2.0 + 1.0) - ln_gamma((d + 1.0) / 2.0)).exp() / std::f64::consts::PI.sqrt()
}

/// Smallest radius whose χ_d tail mass is below `tail`.
pub fn gaussian_effective_radius(d: usize, tail: f64) -> f64 {
    let chi = ChiSquared::new(d as f64).expect("positive degrees of freedom");
    let (mut lo, mut hi) = (0.0f64, 8.0 + 2.0 * (d as f64).sqrt());
    while chi.sf(hi * hi) >= tail {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi.sf(mid * mid) < tail {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn draw_normal_dir<T: Scalar>(rng: &mut LabRng, out: &mut [T]) -> f64 {
    loop {
        let mut s = 0.0;
        for o in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *o = T::lit(g);
            s += g * g;
        }
        if s > 0.0 {
            return s.sqrt();
        }
    }
}

fn clamp_to_radius<T: Scalar>(out: &mut [T], r: T) {
    loop {
        let n = crate::scalar::norm(out);
        if n <= r {
            return;
        }
        let shrink = r / n * (T::one() - T::epsilon());
        for o in out.iter_mut() {
            *o *= shrink;
        }
    }
}

fn draw_ball<T: Scalar>(rng: &mut LabRng, out: &mut [T], r: T, accept: impl Fn(&[T]) -> bool) {
    let d = out.len() as f64;
    loop {
        let n = draw_normal_dir(rng, out);
        let u: f64 = rng.random();
        let rad = r.as_f64() * u.powf(1.0 / d);
        let s = T::lit(rad / n);
        for o in out.iter_mut() {
            *o *= s;
        }
        clamp_to_radius(out, r);
        if accept(out) {
            return;
        }
    }
}

/// Uniform draw from {x₁ > t0} ∩ ball(r): x₁ by rejection against s^k with
/// s = r − x₁, the remaining coordinates uniform in the slice disk.
fn draw_cap<T: Scalar>(rng: &mut LabRng, out: &mut [T], r: T, t0: T) {
    let d = out.len();
    let rf = r.as_f64();
    let smax = rf - t0.as_f64();
    let k = (d as f64 - 1.0) / 2.0;
    let s = loop {
        let u: f64 = rng.random();
        let s = smax * u.powf(1.0 / (k + 1.0));
        let acc = ((2.0 * rf - s) / (2.0 * rf)).powf(k);
        let a: f64 = rng.random();
        if a < acc && s > 0.0 {
            break s;
        }
    };
    out[0] = T::lit(rf - s);
    if d > 1 {
        let slice = (s * (2.0 * rf - s)).sqrt();
        let rest = &mut out[1..];
        let n = draw_normal_dir(rng, rest);
        let u: f64 = rng.random();
        let rad = slice * u.powf(1.0 / (d as f64 - 1.0));
        let sc = T::lit(rad / n);
        for o in rest.iter_mut() {
            *o *= sc;
        }
    }
    clamp_to_radius(out, r);
    if out[0] <= t0 {
        out[0] = t0 + (r - t0) * T::lit(0.5);
        clamp_to_radius(out, r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_peak_density() {
        let g = InputDistribution::<f64>::gaussian(3).unwrap();
        assert!((g.marginal_density_2d([0.0, 0.0]).unwrap() - 0.159_154_943_091_895_3).abs() < 1e-15);
    }

    #[test]
    fn ball_density_vanishes_on_boundary_and_integrates_to_one() {
        let b = InputDistribution::<f64>::uniform_ball(3, 1.0).unwrap();
        assert_eq!(b.marginal_density_2d([1.0, 0.0]).unwrap(), 0.0);
        for d in [2usize, 3, 5, 8] {
            let b = InputDistribution::<f64>::uniform_ball(d, 1.5).unwrap();
            let steps = 20_000;
            let h = 1.5 / steps as f64;
            let mass: f64 = (0..steps)
                .map(|i| {
                    let r = (i as f64 + 0.5) * h;
                    std::f64::consts::TAU * r * b.radial_density_2d(r).unwrap() * h
                })
                .sum();
            assert!((mass - 1.0).abs() < 1e-6, "d={d} mass={mass}");
        }
    }

    #[test]
    fn symmetric_only_operations_reject_heavy_cap() {
        let h = InputDistribution::<f64>::heavy_cap(4, 1.0, 0.5, None).unwrap();
        assert!(h.marginal_density_2d([0.0, 0.0]).is_err());
        assert!(h.cap_probability(0.1).is_err());
    }

    #[test]
    fn sample_is_deterministic_and_lifted() {
        let b = InputDistribution::<f64>::uniform_ball(3, 1.0).unwrap();
        let a = b.sample(500, 11).unwrap();
        let c = b.sample(500, 11).unwrap();
        assert_eq!(a, c);
        for i in 0..a.rows {
            assert_eq!(a.row(i)[3], 1.0);
        }
    }

    #[test]
    fn ball_constants() {
        let b = InputDistribution::<f64>::uniform_ball(5, 2.0).unwrap();
        let k = b.estimate_constants(None, 0).unwrap();
        assert_eq!(k.c, Some(2.0));
        assert!((k.c_lifted - 5f64.sqrt()).abs() < 1e-15);
        assert!(k.tau_std_error.unwrap() > 0.0);
    }

    #[test]
    fn tau_estimates() {
        // τ = 2/π for every spherically symmetric law
        let two_over_pi = 2.0 / std::f64::consts::PI;
        let k = InputDistribution::<f64>::uniform_ball(8, 1.0).unwrap().estimate_constants(None, 5).unwrap();
        let (tau, se) = (k.tau.unwrap(), k.tau_std_error.unwrap());
        assert!(se > 0.0 && se < 3e-3, "{se}");
        assert!((tau - two_over_pi).abs() < 3.0 * se, "{tau} ± {se}");
        let g = InputDistribution::<f64>::gaussian(4).unwrap();
        assert_eq!(g.estimate_constants(None, 0).unwrap().tau, Some(two_over_pi));
        let (t, se) = g.estimate_tau(200_000, 9).unwrap();
        assert!((t - two_over_pi).abs() < 4.0 * se);
        let h = InputDistribution::<f64>::heavy_cap(4, 1.0, 0.5, None).unwrap();
        assert!(h.estimate_constants(None, 0).unwrap().tau.is_none());
        assert!(h.estimate_tau(1000, 0).is_err());
    }

    #[test]
    fn gaussian_effective_radius_tail() {
        let r = gaussian_effective_radius(1, 1e-12);
        // two-sided normal tail at 1e-12 sits near 7.13
        assert!((r - 7.1305).abs() < 1e-3, "{r}");
    }

    #[test]
    fn cap_probability_matches_closed_form_in_three_dims() {
        // for d = 3 the coordinate is uniform on [-r, r] weighted by (1 - t^2): Pr[x1 >= t] = (1-t)^2 (2+t) / 4
        let b = InputDistribution::<f64>::uniform_ball(3, 1.0).unwrap();
        for t in [-0.5, 0.0, 0.3, 0.9] {
            let exact = (1.0 - t) * (1.0 - t) * (2.0 + t) / 4.0;
            assert!((b.cap_probability(t).unwrap() - exact).abs() < 1e-12);
        }
    }
}
