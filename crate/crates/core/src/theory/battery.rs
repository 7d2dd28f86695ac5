//! Built-in configuration grids for every checker, run as one battery.

use super::checks::{check_wedge_area, ids, Checker, Status, TheoremReport};
use super::classify::{classify_critical, CriticalTag};
use super::constants::{linear_rate_gamma, random_init_constants};
use crate::distributions::InputDistribution;
use crate::error::Result;
use crate::objective::{GradientEngine, Objective};
use crate::params::NeuronParams;
use crate::rng::{child_seed, domain, random_direction, substream, LabRng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemmas,
    Theorems,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "theorems" => Ok(Suite::Theorems),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite `{other}` (expected lemmas, theorems or all)")),
        }
    }
}

/// Grid sizes per family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryGrid {
    pub wedge_area: usize,
    pub inner_product: usize,
    pub norm_prob: usize,
    pub grad_norm: usize,
    pub grad_lipschitz: usize,
    pub loss_descent: usize,
    pub small_init: usize,
    /// Points per axis of the critical-point grid.
    pub critical_axis: usize,
}

impl Default for BatteryGrid {
    fn default() -> Self {
        Self {
            wedge_area: 200,
            inner_product: 100,
            norm_prob: 200,
            grad_norm: 100,
            grad_lipschitz: 100,
            loss_descent: 50,
            small_init: 50,
            critical_axis: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryRow {
    pub theorem_id: String,
    pub configs: usize,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub worst_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub suite: Suite,
    pub seed: u64,
    pub rows: Vec<BatteryRow>,
    pub reports: Vec<TheoremReport>,
}

impl BatteryReport {
    pub fn total_fails(&self) -> usize {
        self.rows.iter().map(|r| r.fail).sum()
    }

    pub fn total_skips(&self) -> usize {
        self.rows.iter().map(|r| r.skipped).sum()
    }

    pub fn failing_ids(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.fail > 0).map(|r| r.theorem_id.as_str()).collect()
    }

    /// Fixed-width table with one row per checker.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<26} {:>7} {:>6} {:>6} {:>8} {:>14}\n",
            "theorem_id", "configs", "pass", "fail", "skipped", "worst_margin"
        );
        for r in &self.rows {
            let wm = r.worst_margin.map(|m| format!("{m:.6e}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<26} {:>7} {:>6} {:>6} {:>8} {:>14}\n",
                r.theorem_id, r.configs, r.pass, r.fail, r.skipped, wm
            ));
        }
        out
    }
}

fn summarize(id: &str, reports: &[TheoremReport]) -> BatteryRow {
    let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
    let worst_margin = reports
        .iter()
        .filter(|r| r.status != Status::Skipped)
        .filter_map(|r| r.margin)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))));
    BatteryRow {
        theorem_id: id.to_string(),
        configs: reports.len(),
        pass: count(Status::Pass),
        fail: count(Status::Fail),
        skipped: count(Status::Skipped),
        worst_margin,
    }
}

fn run_family<F>(seed: u64, family: u64, n: usize, f: F) -> Result<Vec<TheoremReport>>
where
    F: Fn(&mut LabRng, usize) -> Result<TheoremReport> + Sync,
{
    let fam_seed = child_seed(seed, domain::BATTERY, family);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(fam_seed, domain::BATTERY, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

fn uniform(rng: &mut LabRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Unit-norm target with a random direction and bias ratio in [lo, hi].
fn unit_target(rng: &mut LabRng, dim: usize, lo: f64, hi: f64) -> NeuronParams<f64> {
    let dir: Vec<f64> = random_direction(rng, dim);
    let ratio = uniform(rng, lo, hi);
    let s = 1.0 / (1.0 + ratio * ratio).sqrt();
    NeuronParams::new(dir.iter().map(|x| x * s).collect(), -ratio * s)
}

fn perturb(rng: &mut LabRng, w: &NeuronParams<f64>, scale: f64) -> NeuronParams<f64> {
    let dir: Vec<f64> = random_direction(rng, w.dim() + 1);
    let full: Vec<f64> = w.to_full().iter().zip(&dir).map(|(a, b)| a + scale * b).collect();
    NeuronParams::from_full(&full).expect("nonempty")
}

fn quad_objective(dist: &InputDistribution<f64>, v: &NeuronParams<f64>) -> Result<Objective<f64>> {
    Objective::new(dist, v, &GradientEngine::quadrature())
}

/// Draws w near v with F(w) < F(0); returns w and its loss gap.
fn below_origin(rng: &mut LabRng, obj: &Objective<f64>) -> Result<(NeuronParams<f64>, f64)> {
    loop {
        let scale = uniform(rng, 0.05, 1.2);
        let w = perturb(rng, obj.target(), scale);
        let ev = obj.evaluate(&w)?;
        let gap = 0.5 * ev.sq_w - ev.cross;
        if gap < 0.0 {
            return Ok((w, gap));
        }
    }
}

const BALL_DIM: usize = 6;

fn ball() -> InputDistribution<f64> {
    InputDistribution::uniform_ball(BALL_DIM, 1.0).expect("valid ball")
}

fn wedge_family(seed: u64, n: usize) -> Result<Vec<TheoremReport>> {
    run_family(seed, 1, n, |rng, i| {
        if i == 0 {
            let q = PI / 4.0;
            return check_wedge_area([q.cos(), q.sin()], [q.cos(), -q.sin()], 0.3, 1.0, PI / 2.0);
        }
        let delta = uniform(rng, 0.05, PI);
        let alpha = uniform(rng, 0.2, 5.0);
        let s = (delta / 2.0).sin();
        let b = uniform(rng, 0.0, 0.999) * alpha * s;
        let theta = uniform(rng, 0.0, PI - delta);
        let phi = uniform(rng, -PI, PI);
        let p = [phi.cos(), phi.sin()];
        let q = [(phi + theta).cos(), (phi + theta).sin()];
        check_wedge_area(p, q, b, alpha, delta)
    })
}

fn inner_product_family(seed: u64, n: usize, tol: f64) -> Result<Vec<TheoremReport>> {
    run_family(seed, 2, n, |rng, i| {
        let dim = if i % 2 == 0 { 3 } else { 8 };
        let gaussian = (i / 2) % 2 == 0;
        let dist = if gaussian {
            InputDistribution::gaussian(dim)?
        } else {
            InputDistribution::uniform_ball(dim, 1.0)?
        };
        loop {
            let alpha = if gaussian { uniform(rng, 0.5, 3.0) } else { uniform(rng, 0.2, 0.9) };
            let beta = dist.density_floor(alpha)?;
            let v = unit_target(rng, dim, -0.3, 0.5);
            let wd: Vec<f64> = random_direction(rng, dim);
            let wn = uniform(rng, 0.2, 2.0);
            let w = NeuronParams::new(wd.iter().map(|x| x * wn).collect(), uniform(rng, -0.3, 0.6) * wn);
            let theta = w.angle_with(&v).expect("nonzero weights");
            let delta = (PI - theta) * uniform(rng, 0.2, 1.0);
            let bp = super::constants::bias_ratio_prime(&w, &v, delta).expect("nonzero weights");
            if !(bp < alpha) || delta <= 0.0 {
                continue;
            }
            let obj = quad_objective(&dist, &v)?;
            let ck = Checker::new(&obj)?.with_tolerance_scale(tol);
            return ck.inner_product(&w, alpha, beta, delta);
        }
    })
}

fn ball_lifted_c() -> (f64, f64) {
    let k = ball().estimate_constants(None, 0).expect("ball constants");
    (k.c_lifted, k.c_prime)
}

fn norm_prob_family(seed: u64, n: usize, tol: f64) -> Result<Vec<TheoremReport>> {
    let (c, _) = ball_lifted_c();
    run_family(seed, 3, n, |rng, _| {
        let v = unit_target(rng, BALL_DIM, -0.3, 0.3);
        let obj = quad_objective(&ball(), &v)?;
        let (w, gap) = below_origin(rng, &obj)?;
        let delta = -gap * uniform(rng, 0.05, 1.0);
        Checker::new(&obj)?.with_tolerance_scale(tol).norm_prob_lower(&w, delta, c)
    })
}

fn grad_norm_family(seed: u64, n: usize, tol: f64) -> Result<Vec<TheoremReport>> {
    let (c, _) = ball_lifted_c();
    run_family(seed, 4, n, |rng, _| {
        let v = unit_target(rng, BALL_DIM, -0.3, 0.3);
        let obj = quad_objective(&ball(), &v)?;
        let (w, _) = below_origin(rng, &obj)?;
        Checker::new(&obj)?.with_tolerance_scale(tol).grad_norm_upper(&w, c)
    })
}

fn segment_norm_range(a: &NeuronParams<f64>, b: &NeuronParams<f64>) -> (f64, f64) {
    let (x, y) = (a.to_full(), b.to_full());
    let d: Vec<f64> = y.iter().zip(&x).map(|(p, q)| p - q).collect();
    let dd: f64 = d.iter().map(|t| t * t).sum();
    let xd: f64 = x.iter().zip(&d).map(|(p, q)| p * q).sum();
    let s = if dd > 0.0 { (-xd / dd).clamp(0.0, 1.0) } else { 0.0 };
    let p: Vec<f64> = x.iter().zip(&d).map(|(p, q)| p + s * q).collect();
    let min = p.iter().map(|t| t * t).sum::<f64>().sqrt();
    (min, a.norm().max(b.norm()))
}

fn lipschitz_family(seed: u64, n: usize, tol: f64) -> Result<Vec<TheoremReport>> {
    let (c, c_prime) = ball_lifted_c();
    run_family(seed, 5, n, |rng, i| {
        let v = unit_target(rng, BALL_DIM, -0.3, 0.3);
        let obj = quad_objective(&ball(), &v)?;
        let scale = uniform(rng, 0.1, 1.0);
        let w = perturb(rng, &v, scale);
        let w2 = if i % 4 == 0 {
            // flip the sign of one weight coordinate while keeping the bias
            let mut w2 = w.clone();
            w2.weights[0] = -w2.weights[0];
            w2
        } else {
            let scale = uniform(rng, 0.01, 0.5);
            perturb(rng, &w, scale)
        };
        let (lo, hi) = segment_norm_range(&w, &w2);
        let (m, b) = (0.9 * lo, 1.1 * hi);
        if !(m > 0.0) {
            return Ok(TheoremReport::new(ids::GRAD_LIPSCHITZ).skip("segment_avoids_origin"));
        }
        Checker::new(&obj)?.with_tolerance_scale(tol).grad_lipschitz(&w, &w2, m, b, c, c_prime)
    })
}

fn descent_family(seed: u64, n: usize, tol: f64) -> Result<Vec<TheoremReport>> {
    let (c, c_prime) = ball_lifted_c();
    run_family(seed, 6, n, |rng, _| {
        let v = unit_target(rng, BALL_DIM, -0.3, 0.3);
        let obj = quad_objective(&ball(), &v)?;
        let (w, gap) = below_origin(rng, &obj)?;
        let delta = -gap * uniform(rng, 0.2, 1.0);
        Checker::new(&obj)?.with_tolerance_scale(tol).loss_descent(&w, delta, w.norm() + 1.0, c, c_prime)
    })
}

/// Boundary sweeps for the two gradient-direction propositions on the standard Gaussian.
fn push_families(tol: f64) -> Result<(Vec<TheoremReport>, Vec<TheoremReport>)> {
    let alpha: f64 = 4.5;
    let tau = 2.0 / PI;
    let mut cases = Vec::new();
    for &dim in &[3usize, 5, 8] {
        for &bv in &[0.0, 0.3, 1.0] {
            cases.push((dim, bv));
        }
    }
    let out: Vec<(Vec<TheoremReport>, Vec<TheoremReport>)> = cases
        .par_iter()
        .map(|&(dim, bv)| -> Result<_> {
            let dist = InputDistribution::gaussian(dim)?;
            let beta = dist.density_floor(alpha)?;
            let level = alpha.powi(3) * beta / 640.0;
            let v = NeuronParams::axis(dim, 0, 1.0, bv);
            let obj = quad_objective(&dist, &v)?;
            let ck = Checker::new(&obj)?.with_tolerance_scale(tol);
            let mut f1 = Vec::new();
            let mut f2 = Vec::new();
            for &r in &[0.0, 0.1, 0.2, 0.3, 0.4] {
                // angles keeping ‖w̃ − ṽ‖² ≤ 1, i.e. cos θ ≥ r/2
                for &cos in &[1.0f64, 0.5 + r / 4.0, r / 2.0] {
                    let sin = (1.0 - cos * cos).max(0.0).sqrt();
                    for &b in &[0.0, level / 2.0, level] {
                        if r == 0.0 && (b == 0.0 || cos != 1.0) {
                            continue;
                        }
                        let mut wt = vec![0.0; dim];
                        wt[0] = r * cos;
                        wt[1] = r * sin;
                        f1.push(ck.bias_push(&NeuronParams::new(wt, b), alpha, beta, tau)?);
                    }
                }
            }
            for &frac in &[0.125, 0.25, 0.375, 0.5] {
                let r = frac * tau;
                for &cos in &[1.0f64, 0.5, r / 2.0 + 1e-3] {
                    let sin = (1.0 - cos * cos).max(0.0).sqrt();
                    for &b in &[0.0, -0.01, -0.1, -0.5] {
                        let mut wt = vec![0.0; dim];
                        wt[0] = r * cos;
                        wt[1] = r * sin;
                        f2.push(ck.norm_push(&NeuronParams::new(wt, b), alpha, beta, tau)?);
                    }
                }
            }
            Ok((f1, f2))
        })
        .collect::<Result<_>>()?;
    let mut f1 = Vec::new();
    let mut f2 = Vec::new();
    for (a, b) in out {
        f1.extend(a);
        f2.extend(b);
    }
    Ok((f1, f2))
}

fn small_init_family(seed: u64, n: usize, tol: f64) -> Result<Vec<TheoremReport>> {
    run_family(seed, 7, n, |rng, i| {
        let gaussian = i % 2 == 1;
        let dist = if gaussian { InputDistribution::gaussian(8)? } else { ball() };
        let alpha = dist.default_alpha()?;
        let k = dist.estimate_constants(Some(alpha), 0)?;
        let (beta, c) = (k.beta.expect("symmetric"), k.c_lifted);
        let init = random_init_constants(alpha, beta, c)?;
        let limit = super::constants::target_bias_limit(alpha);
        let v = unit_target(rng, dist.dim, -0.5, limit);
        let obj = quad_objective(&dist, &v)?;
        let w = loop {
            let dir: Vec<f64> = if i < 2 {
                v.weights.iter().map(|x| x / v.weight_norm()).collect()
            } else {
                random_direction(rng, dist.dim)
            };
            let w = NeuronParams::new(dir.iter().map(|x| x * init.rho).collect(), 0.0);
            if w.angle_with(&v).expect("nonzero") <= 0.75 * PI {
                break w;
            }
        };
        Checker::new(&obj)?.with_tolerance_scale(tol).small_init_gain(&w, alpha, beta, c)
    })
}

/// Checks that the classifier tag at `w` matches gradient behaviour: flat tags
/// have an exactly zero sampled gradient and F(w) = F(0); non-critical points
/// away from v have a gradient well above the quadrature error.
pub fn critical_point_report(
    w: &NeuronParams<f64>,
    quad: &Objective<f64>,
    mc: &Objective<f64>,
    f0: f64,
    tolerance_scale: f64,
) -> Result<TheoremReport> {
    let k = classify_critical(w, quad.target(), quad.dist());
    let rep = TheoremReport::new(ids::CRITICAL).params("w", w).constant("margin", k.margin).note(format!("{:?}", k.tag));
    match k.tag {
        CriticalTag::FlatNegativeBias | CriticalTag::DeadCone => {
            let g = mc.evaluate(w)?;
            let zero = g.grad.iter().all(|&x| x == 0.0);
            let loss = quad.loss(w)?;
            Ok(rep.at_most((loss - f0).abs(), 1e-9 * tolerance_scale, 0.0).require(zero, "sampled gradient exactly zero"))
        }
        CriticalTag::NonCritical => {
            if w.dist(quad.target()) < 0.01 {
                return Ok(rep.skip("distance_to_target_at_least_0.01"));
            }
            let ev = quad.evaluate(w)?;
            let err = ev.grad_error_estimate.unwrap_or(0.0);
            Ok(rep.at_least(ev.grad_norm(), 10.0 * err * tolerance_scale, 0.0).require(ev.grad_norm() > 0.0, "nonzero gradient"))
        }
        CriticalTag::GlobalMin => {
            let ev = quad.evaluate(w)?;
            Ok(rep.at_most(ev.grad_norm(), 1e-9 * tolerance_scale, 0.0))
        }
        CriticalTag::OriginNonSmooth => Ok(rep.skip("origin_not_differentiable")),
    }
}

/// Grid over (‖w̃‖, b_w, θ) with `n` points per axis on the unit ball in R^d.
pub fn critical_grid(n: usize) -> Vec<(f64, f64, f64)> {
    let lin = |lo: f64, hi: f64, i: usize| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push((lin(0.0, 2.0, i), lin(-2.0, 2.0, j), lin(0.0, PI, k)));
            }
        }
    }
    out
}

/// Reports for every point of the critical-point grid.
pub fn critical_family(n: usize, dim: usize, seed: u64, mc_samples: usize, tol: f64) -> Result<Vec<TheoremReport>> {
    let dist = InputDistribution::uniform_ball(dim, 1.0)?;
    let v = NeuronParams::axis(dim, 0, 1.0, 0.2);
    let quad = quad_objective(&dist, &v)?;
    let mc = Objective::new(&dist, &v, &GradientEngine::monte_carlo(mc_samples, child_seed(seed, domain::BATTERY, 99)))?;
    let f0 = quad.loss_at_origin()?;
    critical_grid(n)
        .par_iter()
        .map(|&(r, b, theta)| {
            let mut wt = vec![0.0; dim];
            wt[0] = r * theta.cos();
            wt[1] = r * theta.sin();
            let w = NeuronParams::new(wt, b);
            critical_point_report(&w, &quad, &mc, f0, tol)
        })
        .collect()
}

fn constant_reports() -> Result<(TheoremReport, TheoremReport)> {
    let g = linear_rate_gamma(0.1f64, 1.0, 1.0, 1.0)?;
    let reference: f64 = 0.001 / 11664.0;
    let ulp = f64::from_bits(reference.to_bits() + 1) - reference;
    let scaled = linear_rate_gamma(0.2f64, 1.0, 1.0, 1.0)?;
    let gamma = TheoremReport::new(ids::GAMMA)
        .input("delta", 0.1)
        .input("w0_norm", 1.0)
        .input("c", 1.0)
        .input("c_prime", 1.0)
        .at_most((g - reference).abs(), ulp, 0.0)
        .require(g > 0.0, "gamma positive")
        .require(((scaled / g) - 8.0).abs() < 1e-12, "cubic in delta");
    let k = random_init_constants(1.0f64, 1.0, 1.0)?;
    let m_ref = (PI / 8.0).sin().powi(3) / 256.0;
    let init = TheoremReport::new(ids::INIT_CONSTANTS)
        .input("alpha", 1.0)
        .input("beta", 1.0)
        .input("c", 1.0)
        .constant("rho", k.rho)
        .constant("delta", k.delta)
        .at_most((k.m - m_ref).abs(), 4.0 * f64::EPSILON * m_ref, 0.0)
        .require(k.m > 0.0 && k.rho > 0.0 && k.delta > 0.0, "positive constants");
    Ok((gamma, init))
}

/// Runs the battery for `suite` with all randomness derived from `seed`.
pub fn verify(suite: Suite, seed: u64, grid: &BatteryGrid, tolerance_scale: f64) -> Result<BatteryReport> {
    let lemmas = matches!(suite, Suite::Lemmas | Suite::All);
    let theorems = matches!(suite, Suite::Theorems | Suite::All);
    let mut groups: Vec<(&str, Vec<TheoremReport>)> = Vec::new();
    if lemmas {
        groups.push((ids::WEDGE_AREA, wedge_family(seed, grid.wedge_area)?));
        groups.push((ids::NORM_PROB, norm_prob_family(seed, grid.norm_prob, tolerance_scale)?));
        groups.push((ids::GRAD_NORM, grad_norm_family(seed, grid.grad_norm, tolerance_scale)?));
        groups.push((ids::GRAD_LIPSCHITZ, lipschitz_family(seed, grid.grad_lipschitz, tolerance_scale)?));
        groups.push((ids::LOSS_DESCENT, descent_family(seed, grid.loss_descent, tolerance_scale)?));
        let (f1, f2) = push_families(tolerance_scale)?;
        groups.push((ids::BIAS_PUSH, f1));
        groups.push((ids::NORM_PUSH, f2));
    }
    if theorems {
        let (gamma, init) = constant_reports()?;
        groups.push((ids::GAMMA, vec![gamma]));
        groups.push((ids::INIT_CONSTANTS, vec![init]));
        groups.push((ids::INNER_PRODUCT, inner_product_family(seed, grid.inner_product, tolerance_scale)?));
        groups.push((ids::SMALL_INIT, small_init_family(seed, grid.small_init, tolerance_scale)?));
        groups.push((ids::CRITICAL, critical_family(grid.critical_axis, 3, seed, 100_000, tolerance_scale)?));
    }
    let rows = groups.iter().map(|(id, r)| summarize(id, r)).collect();
    let reports = groups.into_iter().flat_map(|(_, r)| r).collect();
    Ok(BatteryReport { suite, seed, rows, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_battery_is_clean_and_deterministic() {
        let grid = BatteryGrid {
            wedge_area: 10,
            inner_product: 6,
            norm_prob: 6,
            grad_norm: 6,
            grad_lipschitz: 6,
            loss_descent: 4,
            small_init: 4,
            critical_axis: 3,
        };
        let a = verify(Suite::All, 7, &grid, 1.0).unwrap();
        assert_eq!(a.total_fails(), 0, "{}", a.table());
        let b = verify(Suite::All, 7, &grid, 1.0).unwrap();
        assert_eq!(a, b);
    }
}
