use mdpconc::bounds::{vanishing_discount_check, BoundKind, BoundParams, TwoPolicyForm};
use mdpconc::fixtures;
use mdpconc::model::{random_model, FiniteHorizonPolicy, StationaryPolicy, Structure};
use mdpconc::sim::{
    clt_experiment, coverage_experiment, lln_experiment, regret_gap_experiment, CoverageConfig, Flavor, Initial,
    Reading, RegretGapConfig, Subject, UniformRandomLearner,
};
use mdpconc::solvers::{solve_aroe, solve_arpe, solve_drpe, solve_fhpe, AroeOptions};
use mdpconc::stats::{fh_dispersion, max_abs_deviation, span};

fn run(kind: BoundKind, params: BoundParams<f64>, subject: Subject<'_, f64>, reading: Reading) -> mdpconc::sim::CoverageReport {
    let model = fixtures::symmetric::<f64>(&[1.0, 0.0]);
    coverage_experiment(
        &model,
        subject,
        &CoverageConfig {
            kind,
            params,
            n_runs: 2000,
            base_seed: 2024,
            reading,
            initial: Initial::Fixed(0),
        },
    )
    .unwrap()
}

#[test]
fn average_family_coverage_meets_floor() {
    let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
    let pi = StationaryPolicy::new(vec![0, 0]);
    let other = StationaryPolicy::new(vec![1, 1]);
    let sol = solve_arpe(&m, &pi, 0).unwrap();
    let k = max_abs_deviation(&m, &pi, &sol.v);
    let h = span(&sol.v).unwrap();
    let f = Flavor::Average { policy: &pi, lambda: sol.lambda, v: &sol.v };
    let g = Flavor::Average { policy: &other, lambda: sol.lambda, v: &sol.v };
    let mut p = BoundParams::new(300, 0.05);
    p.k = Some(k);
    p.h = Some(h);
    p.k2 = Some(k);
    p.h2 = Some(h);
    p.diameter = Some(2.0);
    p.r_max = Some(1.0);
    for kind in [
        BoundKind::AzumaCentered,
        BoundKind::AzumaUncentered,
        BoundKind::PolicyIndependentAzuma,
        BoundKind::RegretGapAzuma,
        BoundKind::LilCentered,
    ] {
        let r = run(kind, p.clone(), Subject::Single(f), Reading::PerT);
        assert!(r.meets_floor(), "{kind}: {}", r.coverage);
    }
    for kind in [BoundKind::TwoPolicyAzuma, BoundKind::TwoOptimalAzuma] {
        let r = run(kind, p.clone(), Subject::Pair(f, g), Reading::PerT);
        assert!(r.meets_floor(), "{kind}: {}", r.coverage);
    }
}

/// Azuma-type bounds hold at each fixed `T`; asking for all `t <= T` at once
/// is a stronger event and is covered less often.
#[test]
fn uniform_reading_is_never_more_covered() {
    let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
    let pi = StationaryPolicy::new(vec![0, 0]);
    let sol = solve_arpe(&m, &pi, 0).unwrap();
    let f = Flavor::Average { policy: &pi, lambda: sol.lambda, v: &sol.v };
    let mut p = BoundParams::new(300, 0.05);
    p.k = Some(max_abs_deviation(&m, &pi, &sol.v));
    let per_t = run(BoundKind::AzumaCentered, p.clone(), Subject::Single(f), Reading::PerT);
    let uniform = run(BoundKind::AzumaCentered, p, Subject::Single(f), Reading::Uniform);
    assert!(uniform.coverage <= per_t.coverage);
    assert_eq!(uniform.t_start, 1);
}

#[test]
fn lil_bounds_hold_uniformly_past_their_threshold() {
    let m = fixtures::symmetric::<f64>(&[10.0, 0.0]);
    let pi = StationaryPolicy::new(vec![0, 0]);
    let sol = solve_arpe(&m, &pi, 0).unwrap();
    let k = max_abs_deviation(&m, &pi, &sol.v);
    let f = Flavor::Average { policy: &pi, lambda: sol.lambda, v: &sol.v };
    let mut p = BoundParams::new(400, 0.05);
    p.k = Some(k);
    p.h = Some(span(&sol.v).unwrap());
    for kind in [BoundKind::LilCentered, BoundKind::LilUncentered] {
        let r = coverage_experiment(
            &m,
            Subject::Single(f),
            &CoverageConfig {
                kind,
                params: p.clone(),
                n_runs: 1000,
                base_seed: 8,
                reading: Reading::Uniform,
                initial: Initial::Fixed(1),
            },
        )
        .unwrap();
        assert!(r.applicable);
        assert!(r.t_start > 1 && r.t_start < 400);
        assert!(r.meets_floor(), "{kind}: {}", r.coverage);
    }
}

#[test]
fn discounted_and_finite_horizon_coverage_meets_floor() {
    let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
    let pi = StationaryPolicy::new(vec![0, 0]);
    let sol = solve_drpe(&m, &pi, 0.9).unwrap();
    let k = max_abs_deviation(&m, &pi, &sol.v);
    let f = Flavor::Discounted { policy: &pi, gamma: 0.9, v: &sol.v };
    let mut p = BoundParams::new(300, 0.05);
    p.k = Some(k);
    p.k2 = Some(k);
    p.gamma = Some(0.9);
    p.r_max = Some(1.0);
    for kind in [BoundKind::DiscAzuma, BoundKind::DiscUncenteredAzuma] {
        assert!(run(kind, p.clone(), Subject::Single(f), Reading::PerT).meets_floor());
    }
    p.two_policy_form = TwoPolicyForm::Azuma;
    assert!(run(BoundKind::DiscTwoPolicy, p.clone(), Subject::Pair(f, f), Reading::PerT).meets_floor());

    let h = 120;
    let fpi = FiniteHorizonPolicy::stationary(pi.clone(), h);
    let fsol = solve_fhpe(&m, &fpi).unwrap();
    let fd = fh_dispersion(&m, &fpi, &fsol).unwrap();
    let ff = Flavor::FiniteHorizon { policy: &fpi, v: &fsol.v };
    let mut q = BoundParams::new(h + 1, 0.05);
    q.fh = Some(fd.clone());
    q.fh2 = Some(fd);
    for kind in [BoundKind::FhAzuma, BoundKind::FhUncenteredAzuma] {
        assert!(run(kind, q.clone(), Subject::Single(ff), Reading::PerT).meets_floor());
    }
    assert!(run(BoundKind::FhTwoPolicy, q, Subject::Pair(ff, ff), Reading::PerT).meets_floor());
}

#[test]
fn coverage_is_a_pure_function_of_the_seed() {
    let m = random_model::<f64>(4, 2, 1.0, Structure::Unichain, 3);
    let pi = StationaryPolicy::new(vec![0, 1, 0, 1]);
    let sol = solve_arpe(&m, &pi, 0).unwrap();
    let mut p = BoundParams::new(200, 0.2);
    p.k = Some(max_abs_deviation(&m, &pi, &sol.v));
    let cfg = CoverageConfig {
        kind: BoundKind::AzumaCentered,
        params: p,
        n_runs: 500,
        base_seed: 99,
        reading: Reading::PerT,
        initial: Initial::Distribution(vec![0.25; 4]),
    };
    let f = Flavor::Average { policy: &pi, lambda: sol.lambda, v: &sol.v };
    let a = coverage_experiment(&m, Subject::Single(f), &cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| coverage_experiment(&m, Subject::Single(f), &cfg).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn lln_and_clt_at_reduced_scale() {
    let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
    let pi = StationaryPolicy::new(vec![0, 0]);
    let lln = lln_experiment(&m, &pi, 20_000, 8, 1, &Initial::Fixed(0), 0.02).unwrap();
    assert!(lln.pass, "{}", lln.max_deviation);
    let clt = clt_experiment(&m, &pi, 500.0, 500, 1, &Initial::Fixed(0)).unwrap();
    assert!(clt.ks_distance < 0.08, "{}", clt.ks_distance);
    assert!((clt.var_z - 1.0).abs() < 0.2);
}

#[test]
fn vanishing_discount_gaps_shrink() {
    let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
    let pi = StationaryPolicy::new(vec![0, 0]);
    let r = vanishing_discount_check(&m, &pi, 10, 0.1, &[0.9, 0.99, 0.999]).unwrap();
    assert!(r.f_gap_shrinking && r.k_gap_shrinking && r.azuma_gap_shrinking);
    assert!(r.final_relative_gap() < 0.02);
}

#[test]
fn regret_gap_is_learner_independent() {
    let m = fixtures::symmetric_table::<f64>(vec![vec![1.0, 0.2], vec![0.0, 0.3]]);
    let opt = solve_aroe(&m, &AroeOptions::default()).unwrap();
    let cfg = RegretGapConfig::new(300, 400, 0.05, 5);
    let a = regret_gap_experiment(&m, &opt, &UniformRandomLearner { n_actions: 2 }, &cfg).unwrap();
    let b = regret_gap_experiment(&m, &opt, opt.policy(), &cfg).unwrap();
    assert!(a.identity_holds && b.identity_holds);
    assert_eq!(a.mean_gap, b.mean_gap);
    assert_eq!(a.coverage, b.coverage);
    assert!(a.mean_cumulative_regret > b.mean_cumulative_regret);
    assert!(a.coverage.iter().filter(|c| c.applicable).all(|c| c.meets_floor()));
}
