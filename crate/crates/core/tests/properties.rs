use neuron_lab::distributions::InputDistribution;
use neuron_lab::experiments::{
    run_stuck_at_init, wilson_interval, ExperimentId, ExperimentResult, StuckParams, TrialRecord, VerdictRule,
    WILSON_Z,
};
use neuron_lab::objective::{GradientEngine, Objective};
use neuron_lab::optimizer::{run_gd, OptimizerConfig};
use neuron_lab::params::NeuronParams;
use neuron_lab::theory::{classify_critical, linear_rate_gamma, random_init_constants, CriticalTag};
use proptest::prelude::*;

fn params(dim: usize) -> impl Strategy<Value = NeuronParams<f64>> {
    (prop::collection::vec(-2.0f64..2.0, dim), -1.5f64..1.5).prop_map(|(w, b)| NeuronParams::new(w, b))
}

fn config() -> impl Strategy<Value = (usize, NeuronParams<f64>, NeuronParams<f64>)> {
    (2usize..7).prop_flat_map(|d| (Just(d), params(d), params(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samples_stay_in_support(dim in 1usize..12, radius in 0.1f64..5.0, q in 0.05f64..0.95, seed in any::<u64>()) {
        for dist in [
            InputDistribution::uniform_ball(dim, radius).unwrap(),
            InputDistribution::heavy_cap(dim, radius, q, None).unwrap(),
        ] {
            let s = dist.sample(500, seed).unwrap();
            for i in 0..s.rows {
                let row = s.row(i);
                prop_assert_eq!(row[dim], 1.0);
                let n2: f64 = row[..dim].iter().map(|x| x * x).sum();
                prop_assert!(n2.sqrt() <= radius * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn loss_is_nonnegative_and_vanishes_at_target((d, w, v) in config(), gaussian in any::<bool>()) {
        let dist = if gaussian { InputDistribution::gaussian(d).unwrap() } else { InputDistribution::uniform_ball(d, 1.3).unwrap() };
        let obj = Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap();
        prop_assert!(obj.loss(&w).unwrap() >= 0.0);
        prop_assert!(obj.loss(&v).unwrap() <= 1e-12);
    }

    #[test]
    fn loss_decomposition_identity((d, w, v) in config(), mc in any::<bool>()) {
        let dist = InputDistribution::uniform_ball(d, 1.0).unwrap();
        let engine = if mc { GradientEngine::monte_carlo(4000, 9) } else { GradientEngine::quadrature() };
        let obj = Objective::new(&dist, &v, &engine).unwrap();
        let ev = obj.evaluate(&w).unwrap();
        let f0 = obj.loss_at_origin().unwrap();
        let rhs = f0 + 0.5 * ev.sq_w - ev.cross;
        prop_assert!((ev.loss - rhs).abs() <= 1e-9 * (1.0 + ev.loss.abs()), "{} vs {}", ev.loss, rhs);
    }

    #[test]
    fn relu_derivative_at_zero_is_irrelevant((d, w, v) in config(), seed in any::<u64>()) {
        let dist = InputDistribution::uniform_ball(d, 1.0).unwrap();
        let grads: Vec<Vec<f64>> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&s| {
                let e = GradientEngine::monte_carlo(2000, seed).with_relu_deriv_at_zero(s);
                Objective::new(&dist, &v, &e).unwrap().evaluate(&w).unwrap().grad
            })
            .collect();
        prop_assert_eq!(&grads[0], &grads[1]);
        prop_assert_eq!(&grads[0], &grads[2]);
    }

    #[test]
    fn gradient_norm_below_origin_level((d, w, v) in config()) {
        let dist = InputDistribution::uniform_ball(d, 1.0).unwrap();
        let obj = Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap();
        let ev = obj.evaluate(&w).unwrap();
        let f0 = obj.loss_at_origin().unwrap();
        if ev.loss <= f0 {
            let c = dist.lifted_radius();
            prop_assert!(ev.grad_norm() <= c * (2.0 * f0).sqrt() + 1e-9);
        }
    }

    #[test]
    fn dead_points_are_flat(d in 2usize..7, w in prop::collection::vec(-1.0f64..1.0, 6), extra in 0.0f64..1.0, seed in any::<u64>()) {
        let dist = InputDistribution::uniform_ball(d, 1.0).unwrap();
        let wt = w[..d].to_vec();
        let n = wt.iter().map(|x| x * x).sum::<f64>().sqrt();
        let wp = NeuronParams::new(wt, -(n + extra + 1e-9));
        let v = NeuronParams::axis(d, 0, 1.0, 0.2);
        let tag = classify_critical(&wp, &v, &dist).tag;
        prop_assert!(tag.is_flat());
        let mc = Objective::new(&dist, &v, &GradientEngine::monte_carlo(3000, seed)).unwrap();
        let ev = mc.evaluate(&wp).unwrap();
        prop_assert!(ev.grad.iter().all(|&g| g == 0.0));
        let quad = Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap();
        prop_assert!((quad.loss(&wp).unwrap() - quad.loss_at_origin().unwrap()).abs() <= 1e-12);
        prop_assert!(tag == CriticalTag::DeadCone || tag == CriticalTag::FlatNegativeBias);
    }

    #[test]
    fn gamma_and_m_homogeneity(delta in 1e-3f64..1.0, w0 in 0.0f64..3.0, c in 1.0f64..4.0, cp in 1.0f64..3.0, alpha in 0.1f64..5.0, beta in 1e-3f64..1.0) {
        let g = linear_rate_gamma(delta, w0, c, cp).unwrap();
        prop_assert!(g > 0.0);
        let g2 = linear_rate_gamma(2.0 * delta, w0, c, cp).unwrap();
        prop_assert!((g2 / g - 8.0).abs() < 1e-12);
        let gc = linear_rate_gamma(delta, w0, 2.0 * c, cp).unwrap();
        prop_assert!((g / gc - 256.0).abs() < 1e-9);
        let m = random_init_constants(alpha, beta, c).unwrap().m;
        let m2 = random_init_constants(2.0 * alpha, beta, c).unwrap().m;
        prop_assert!((m2 / m - 16.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_is_inside_unit_and_covers_estimate(n in 1usize..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = wilson_interval(k, n, WILSON_Z);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }

    #[test]
    fn verdict_recomputes_from_trials(flags in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60), r in 0.0f64..1.0) {
        let trials: Vec<TrialRecord> =
            flags.iter().enumerate().map(|(i, &(s, ok))| TrialRecord::new(i as u64, s, ok).with("x", i as f64)).collect();
        for rule in [VerdictRule::AtLeast { reference: r }, VerdictRule::AtLeastMinusHalfWidth { reference: r }, VerdictRule::All] {
            let a = ExperimentResult::from_trials(ExperimentId::StuckAtInit, rule, trials.clone());
            let mut shuffled = trials.clone();
            shuffled.reverse();
            let b = ExperimentResult::from_trials(ExperimentId::StuckAtInit, rule, shuffled);
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert_eq!(a.interval, b.interval);
        }
    }

    #[test]
    fn params_round_trip(p in params(5)) {
        let q = NeuronParams::from_full(&p.to_full()).unwrap();
        prop_assert_eq!(&p, &q);
        prop_assert!((p.norm().powi(2) - p.dot_full(&p)).abs() <= 1e-12 * (1.0 + p.dot_full(&p)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trial_outcomes_depend_only_on_seed_and_index(seed in any::<u64>(), n in 5usize..40) {
        let p = StuckParams { dim: 6, epsilon: 0.05, gd_steps: 5, eta: 0.1 };
        let short = run_stuck_at_init(&p, n, seed).unwrap();
        let long = run_stuck_at_init(&p, n + 7, seed).unwrap();
        prop_assert_eq!(&short.trials[..], &long.trials[..n]);
        prop_assert_eq!(short.invariant_violations, 0);
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo((d, w, v) in config(), seed in any::<u64>()) {
        let dist = InputDistribution::uniform_ball(d, 1.0).unwrap();
        let quad = Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap().evaluate(&w).unwrap();
        let mc = Objective::new(&dist, &v, &GradientEngine::monte_carlo(200_000, seed)).unwrap().evaluate(&w).unwrap();
        let se = mc.loss_std_error.unwrap();
        prop_assert!((quad.loss - mc.loss).abs() <= 5.0 * se + 1e-12, "{} {} {}", quad.loss, mc.loss, se);
        for (i, (q, m)) in quad.grad.iter().zip(&mc.grad).enumerate() {
            let s = mc.grad_std_error.as_ref().unwrap()[i];
            prop_assert!((q - m).abs() <= 5.0 * s + 1e-12, "coord {}: {} {} {}", i, q, m, s);
        }
    }

    #[test]
    fn descent_is_deterministic((d, w, v) in config()) {
        let dist = InputDistribution::gaussian(d).unwrap();
        let obj = Objective::new(&dist, &v, &GradientEngine::quadrature()).unwrap();
        let cfg = OptimizerConfig::gd(0.3).with_max_iters(30);
        let a = run_gd(&w, &obj, &cfg).unwrap();
        let b = run_gd(&w, &obj, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
