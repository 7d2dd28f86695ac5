//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use neuron_lab::distributions::InputDistribution;
use neuron_lab::experiments::{
    run_linear_rate, run_negative_bias_failure, run_random_init, run_stuck_at_init, run_symmetric_convergence,
    LinearRateParams, NegativeBiasParams, RandomInitParams, StuckParams, SymmetricParams, Verdict, VerdictRule,
};
use neuron_lab::objective::{GradientEngine, Objective};
use neuron_lab::params::NeuronParams;
use neuron_lab::rng::{domain, substream};
use neuron_lab::theory::battery::{critical_family, verify, BatteryGrid, Suite};
use neuron_lab::theory::{check_wedge_area, linear_rate_gamma, Status};
use rand::Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 20240601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(t: Duration, minutes: u64) -> bool {
    t <= Duration::from_secs(60 * minutes)
}

fn gradient_oracles() -> Outcome {
    let t = Instant::now();
    let mut rng = substream(SEED, domain::BATTERY, 1);
    let (mut worst_rel, mut worst_z) = (0.0f64, 0.0f64);
    let mut quad_configs = 0;
    for k in 0..50u64 {
        let d = rng.random_range(2..=6usize);
        let dist = match k % 3 {
            0 => InputDistribution::uniform_ball(d, rng.random_range(0.5..2.0)).unwrap(),
            1 => InputDistribution::gaussian(d).unwrap(),
            _ => InputDistribution::heavy_cap(d, 1.0, 0.5, None).unwrap(),
        };
        let c = dist.support_radius().unwrap_or(f64::INFINITY);
        let mut draw = || loop {
            let wt: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let b: f64 = rng.random_range(-0.5..0.5);
            let w = NeuronParams::new(wt, b);
            let n = w.weight_norm();
            if n >= 0.1 && (c.is_infinite() || b > -c * n + 0.1) {
                break w;
            }
        };
        let (w, v) = (draw(), draw());
        let seed = SEED + k;
        let mc = Objective::new(&dist, &v, &GradientEngine::monte_carlo(1_000_000, seed)).unwrap().evaluate(&w).unwrap();
        let fd_engine = GradientEngine::finite_diff(GradientEngine::monte_carlo(1_000_000, seed), 1e-4);
        let fd = Objective::new(&dist, &v, &fd_engine).unwrap().gradient(&w).unwrap();
        let quad = Objective::new(&dist, &v, &GradientEngine::quadrature()).ok().map(|o| o.evaluate(&w).unwrap());
        quad_configs += quad.is_some() as usize;
        let se = mc.grad_std_error.clone().unwrap();
        for i in 0..=d {
            worst_rel = worst_rel.max((mc.grad[i] - fd.grad[i]).abs() / fd.grad[i].abs());
            if let Some(q) = &quad {
                worst_z = worst_z.max((q.grad[i] - mc.grad[i]).abs() / se[i]);
            }
        }
    }
    let e = t.elapsed();
    outcome(
        worst_rel <= 1e-2 && worst_z <= 3.0 && within(e, 2),
        format!("worst MC/FD rel err {worst_rel:.2e}, worst quad/MC z {worst_z:.2} over {quad_configs} configs, {e:.1?}"),
    )
}

fn stuck_at_init() -> Outcome {
    let t = Instant::now();
    let p = StuckParams { dim: 16, epsilon: 0.01, ..Default::default() };
    let r = run_stuck_at_init(&p, 4000, SEED).unwrap();
    let e = t.elapsed();
    let half = 0.5 * (r.interval[1] - r.interval[0]);
    let ok = r.fraction >= 0.46 - half && r.invariant_violations == 0 && r.verdict == Verdict::Pass && within(e, 1);
    outcome(
        ok,
        format!("stuck {:.4} vs 0.46 - {half:.4}, {} invariant violations, {e:.1?}", r.fraction, r.invariant_violations),
    )
}

fn negative_bias_failure() -> Outcome {
    let t = Instant::now();
    let p = NegativeBiasParams::default();
    let r = run_negative_bias_failure(&p, 1000, SEED, 0).unwrap();
    let e = t.elapsed();
    let events = r.trials.iter().filter(|x| x.is("event")).count();
    let held = r.trials.iter().filter(|x| x.is("event") && x.is("failure_checks")).count();
    let ok = r.verdict == Verdict::Pass && held == events && r.invariant_violations == 0 && within(e, 10);
    outcome(
        ok,
        format!(
            "event {:.3} in [{:.3}, {:.3}], failure checks held on {held}/{events}, {e:.1?}",
            r.fraction, r.metrics["band_lo"], r.metrics["band_hi"]
        ),
    )
}

fn critical_points() -> Outcome {
    let t = Instant::now();
    let reps = critical_family(10, 5, SEED, 200_000, 1.0).unwrap();
    let e = t.elapsed();
    let fails = reps.iter().filter(|r| r.status == Status::Fail).count();
    let passes = reps.iter().filter(|r| r.status == Status::Pass).count();
    let skips: Vec<_> = reps.iter().filter_map(|r| r.violated.clone()).collect();
    let explained = skips
        .iter()
        .all(|s| s == "distance_to_target_at_least_0.01" || s == "origin_not_differentiable");
    outcome(
        reps.len() == 1000 && fails == 0 && explained && within(e, 5),
        format!("{passes} pass, {fails} fail, {} skipped (origin or near v), {e:.1?}", skips.len()),
    )
}

fn linear_rate() -> Outcome {
    let t = Instant::now();
    let r = run_linear_rate(&LinearRateParams::default(), SEED, 0).unwrap();
    let e = t.elapsed();
    let ok = r.rule == VerdictRule::All && r.verdict == Verdict::Pass && r.invariant_violations == 0 && within(e, 5);
    let t0 = &r.trials[0];
    let steps = t0.get("steps").unwrap_or(0.0);
    let violations = t0.get("violations").unwrap_or(f64::NAN);
    let ok = ok && steps == 1e4 && violations == 0.0;
    outcome(ok, format!("{steps} steps, {violations} envelope violations, gamma {:.2e}, {e:.1?}", t0.get("gamma").unwrap_or(f64::NAN)))
}

fn random_init() -> Outcome {
    let t = Instant::now();
    let r = run_random_init(&RandomInitParams::default(), 500, SEED).unwrap();
    let e = t.elapsed();
    let gated = r.trials.iter().filter(|x| x.is("gated")).count();
    let ok = r.rule == (VerdictRule::AtLeast { reference: 0.99 })
        && r.verdict == Verdict::Pass
        && r.invariant_violations == 0
        && within(e, 10);
    outcome(ok, format!("gated {gated}/500, converged on {}/{gated}, {e:.1?}", r.successes))
}

fn symmetric_convergence() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for b in [0.0, 0.3] {
        let r = run_symmetric_convergence(&SymmetricParams { target_bias: b, ..Default::default() }, 100, SEED, 0).unwrap();
        ok &= r.verdict == Verdict::Pass && r.successes == 100 && r.invariant_violations == 0;
        parts.push(format!("b_v={b}: {}/100", r.successes));
    }
    let e = t.elapsed();
    outcome(ok && within(e, 5), format!("{}, {e:.1?}", parts.join(", ")))
}

fn constants() -> Outcome {
    let (tau, tau_se) = InputDistribution::<f64>::gaussian(5).unwrap().estimate_tau(400_000, SEED).unwrap();
    let tau_ok = (tau - 2.0 / PI).abs() <= 0.01;
    let g = linear_rate_gamma(0.1f64, 1.0, 1.0, 1.0).unwrap();
    let reference: f64 = 0.001 / 11664.0;
    let ulp = f64::from_bits(reference.to_bits() + 1) - reference;
    let gamma_ok = (g - reference).abs() <= ulp && (g - 8.5734e-8).abs() < 5e-13;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = check_wedge_area([1.0, 0.0], [0.0, 1.0], 0.3, 1.0, PI / 2.0).unwrap();
    let bound = (s - 0.3f64).powi(2) / (4.0 * s);
    let area = w.measured.unwrap_or(f64::NAN);
    let wedge_ok = w.status == Status::Pass && area >= 0.0586 && area >= bound;
    outcome(
        tau_ok && gamma_ok && wedge_ok,
        format!("measured tau {tau:.4} ± {tau_se:.4} (2/pi {:.4}), gamma {g:.5e}, wedge area {area:.4} vs bound {bound:.4}", 2.0 / PI),
    )
}

fn battery() -> Outcome {
    let t = Instant::now();
    let rep = verify(Suite::All, SEED, &BatteryGrid::default(), 1.0).unwrap();
    let e = t.elapsed();
    let configs: usize = rep.rows.iter().map(|r| r.configs).sum();
    let unexplained = rep
        .reports
        .iter()
        .filter(|r| r.status == Status::Skipped && r.violated.as_deref() != Some("origin_not_differentiable"))
        .count();
    outcome(
        rep.total_fails() == 0 && unexplained == 0 && within(e, 15),
        format!(
            "{configs} configs, {} fails, {} skips at the origin, {unexplained} unexplained skips, {e:.1?}",
            rep.total_fails(),
            rep.total_skips() - unexplained
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gradient oracle agreement", gradient_oracles),
        ("stuck at initialization", stuck_at_init),
        ("negative bias failure", negative_bias_failure),
        ("critical point classification", critical_points),
        ("linear rate envelope", linear_rate),
        ("small random initialization", random_init),
        ("symmetric convergence", symmetric_convergence),
        ("constants", constants),
        ("checker battery", battery),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {tag} ({})", i + 1, o.detail);
        failed += !o.passed as usize;
    }
    println!("acceptance: {}/9 passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
