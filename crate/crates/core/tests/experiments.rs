use neuron_lab::experiments::{
    self, run_bias_tightness, run_linear_rate, run_negative_bias_failure, run_no_bias_target, run_random_init,
    run_symmetric_convergence, wilson_interval, ExperimentId, ExperimentParams, ExperimentSpec, InitScheme,
    LinearRateParams, NegativeBiasParams, NoBiasParams, RandomInitParams, SymmetricInit, SymmetricParams,
    TargetDist, TightnessParams, Verdict, VerdictRule, WILSON_Z,
};

fn events(r: &experiments::ExperimentResult) -> Vec<bool> {
    r.trials.iter().map(|t| t.is("event")).collect()
}

#[test]
fn no_overlap_event_ignores_init_scale() {
    let base = NegativeBiasParams { dim: 20, normalization_check_trials: 0, ..Default::default() };
    let small = run_negative_bias_failure(&NegativeBiasParams { rho: 0.1, ..base.clone() }, 150, 7, 0).unwrap();
    let large = run_negative_bias_failure(&NegativeBiasParams { rho: 10.0, ..base }, 150, 7, 0).unwrap();
    assert_eq!(events(&small), events(&large));
    assert_eq!(small.invariant_violations, 0);
    assert_eq!(large.invariant_violations, 0);
}

#[test]
fn normalized_target_gives_same_verdict() {
    let base = NegativeBiasParams { dim: 20, normalization_check_trials: 10, ..Default::default() };
    let a = run_negative_bias_failure(&base, 120, 3, 0).unwrap();
    let b = run_negative_bias_failure(&NegativeBiasParams { normalize_target: true, ..base }, 120, 3, 0).unwrap();
    assert_eq!(events(&a), events(&b));
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.invariant_violations + b.invariant_violations, 0);
    let checked = a.trials.iter().filter(|t| t.get("other_normalization_checks").is_some()).count();
    assert!(checked > 0);
}

#[test]
fn sphere_and_normal_init_agree() {
    let base = RandomInitParams { dim: 25, max_iters: 5000, ..Default::default() };
    let s = run_random_init(&base, 60, 11).unwrap();
    let n = run_random_init(&RandomInitParams { init: InitScheme::Normal, ..base }, 60, 11).unwrap();
    let gate = |r: &experiments::ExperimentResult| r.trials.iter().filter(|t| t.is("gated")).count();
    let (gs, gn) = (gate(&s), gate(&n));
    let (lo_s, hi_s) = wilson_interval(gs, 60, WILSON_Z);
    let (lo_n, hi_n) = wilson_interval(gn, 60, WILSON_Z);
    assert!(lo_s <= hi_n && lo_n <= hi_s, "{gs} vs {gn}");
    assert_eq!(s.invariant_violations, 0);
    assert_eq!(n.invariant_violations, 0);
}

#[test]
fn random_init_is_reproducible() {
    let p = RandomInitParams { dim: 8, dist: TargetDist::UniformBall { radius: 1.0 }, bias_ratio: 0.0, ..Default::default() };
    let a = run_random_init(&p, 20, 99).unwrap();
    let b = run_random_init(&p, 20, 99).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn no_bias_ablation_is_report_only() {
    let p = NoBiasParams { dim: 25, max_iters: 5000, ..Default::default() };
    let with_bias = run_no_bias_target(&p, 30, 5).unwrap();
    let frozen = run_no_bias_target(&NoBiasParams { learner_bias: false, ..p }, 30, 5).unwrap();
    assert_eq!(with_bias.id, ExperimentId::NoBiasTarget);
    assert_eq!(frozen.rule, VerdictRule::ReportOnly);
    assert!(!frozen.notes.is_empty());
    assert_eq!(with_bias.invariant_violations, 0);
}

#[test]
fn small_gaussian_start_gates_about_half() {
    let p = SymmetricParams {
        target_bias: 0.0,
        init: SymmetricInit::SmallGaussian { scale: 0.1 },
        ..Default::default()
    };
    let r = run_symmetric_convergence(&p, 80, 17, 0).unwrap();
    let gated = r.trials.iter().filter(|t| t.is("gated")).count();
    let (lo, hi) = wilson_interval(gated, 80, 3.0);
    assert!(lo <= 0.5 && 0.5 <= hi, "{gated}/80");
    assert!(r.trials.iter().filter(|t| t.is("gated")).all(|t| t.is("converged")));
    assert_eq!(r.rule, VerdictRule::ReportOnly);
}

#[test]
fn small_tightness_run_passes_checks() {
    let p = TightnessParams { dim: 6, n_ratios: 3, max_iters: 500, ..Default::default() };
    let r = run_bias_tightness(&p, 40, 2).unwrap();
    assert_eq!(r.n_trials, 120);
    assert!(r.checks.iter().all(|c| c.passed), "{:?}", r.checks);
}

#[test]
fn oversized_step_is_report_only() {
    let p = LinearRateParams { eta_factor: 2.0, n_steps: 50, ..Default::default() };
    let r = run_linear_rate(&p, 1, 0).unwrap();
    assert_eq!(r.rule, VerdictRule::ReportOnly);
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn spec_round_trips_through_json() {
    for id in ExperimentId::ALL {
        let spec = ExperimentSpec::new(ExperimentParams::default_for(id), id.default_trials(), 42);
        spec.validate().unwrap();
        let s = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.id(), id);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
