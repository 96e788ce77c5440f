use mdpconc::classify::in_pi_ar;
use mdpconc::model::{enumerate_policies, random_model, FiniteHorizonPolicy, MdpModel, Structure};
use mdpconc::solvers::{solve_aroe, solve_arpe, solve_droe, solve_drpe, solve_fhdp, solve_fhpe, AroeOptions};

fn unichain_models() -> Vec<MdpModel<f64>> {
    (0..20u64)
        .map(|i| {
            let n = 1 + (i as usize) % 4;
            let a = 1 + (i as usize / 4) % 3;
            random_model(n, a, 1.0, Structure::Unichain, 300 + i)
        })
        .collect()
}

#[test]
fn relative_value_iteration_matches_policy_enumeration() {
    for (i, m) in unichain_models().iter().enumerate() {
        let opt = solve_aroe(m, &AroeOptions::default()).unwrap();
        let best = enumerate_policies(m, 1 << 20)
            .unwrap()
            .filter(|p| in_pi_ar(m, p).unwrap())
            .map(|p| solve_arpe(m, &p, 0).unwrap().lambda)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((opt.lambda_star - best).abs() <= 1e-6, "model {i}: {} vs {best}", opt.lambda_star);
        assert!(opt.residual(m) < 1e-8);
        let greedy = solve_arpe(m, opt.policy(), 0).unwrap();
        assert!((greedy.lambda - opt.lambda_star).abs() <= 1e-6);
    }
}

#[test]
fn value_iteration_matches_policy_enumeration_discounted() {
    for m in unichain_models() {
        let opt = solve_droe(&m, 0.9, 1e-10).unwrap();
        for p in enumerate_policies(&m, 1 << 20).unwrap() {
            let v = solve_drpe(&m, &p, 0.9).unwrap().v;
            for s in 0..m.n_states() {
                assert!(v[s] <= opt.solution.v[s] + 1e-9);
            }
        }
        let v = solve_drpe(&m, opt.policy(), 0.9).unwrap().v;
        assert!(v.iter().zip(&opt.solution.v).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}

/// Best expected total reward over `steps` remaining decisions from `s`,
/// optimizing over every action at every node of the outcome tree.
fn tree_optimum(m: &MdpModel<f64>, s: usize, steps: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    (0..m.n_actions())
        .map(|a| {
            m.reward(s, a)
                + (0..m.n_states())
                    .filter(|&n| m.prob(s, a, n) > 0.0)
                    .map(|n| m.prob(s, a, n) * tree_optimum(m, n, steps - 1))
                    .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Expected total reward of `pi` from `s`, summing over every state path.
fn path_expectation(m: &MdpModel<f64>, pi: &FiniteHorizonPolicy, s: usize) -> f64 {
    fn walk(m: &MdpModel<f64>, pi: &FiniteHorizonPolicy, s: usize, t: usize, prob: f64, acc: f64) -> f64 {
        if t > pi.horizon() {
            return prob * acc;
        }
        let a = pi.stage(t).action(s);
        let acc = acc + m.reward(s, a);
        (0..m.n_states())
            .filter(|&n| m.prob(s, a, n) > 0.0)
            .map(|n| walk(m, pi, n, t + 1, prob * m.prob(s, a, n), acc))
            .sum()
    }
    walk(m, pi, s, 0, 1.0, 0.0)
}

#[test]
fn finite_horizon_dp_matches_outcome_enumeration() {
    for m in unichain_models() {
        for h in 0..=2 {
            let (sol, pi) = solve_fhdp(&m, h);
            for s in 0..m.n_states() {
                let brute = tree_optimum(&m, s, h + 1);
                assert!((sol.v[0][s] - brute).abs() <= 1e-10, "h={h} s={s}: {} vs {brute}", sol.v[0][s]);
                assert!((path_expectation(&m, &pi, s) - brute).abs() <= 1e-10);
            }
            let eval = solve_fhpe(&m, &pi).unwrap();
            assert_eq!(eval.v, sol.v);
        }
    }
}
