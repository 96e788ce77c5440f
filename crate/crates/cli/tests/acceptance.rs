use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use mdpconc::classify::in_pi_ar;
use mdpconc::fixtures;
use mdpconc::model::{enumerate_policies, random_model, FiniteHorizonPolicy, MdpModel, StationaryPolicy, Structure};
use mdpconc::sim::{martingale_trace, simulate, Flavor, Initial, RunKey, SimRng};
use mdpconc::solvers::{solve_aroe, solve_arpe, solve_drpe, solve_fhdp, solve_fhpe, AroeOptions};
use mdpconc::stats::{conditional_std, diameter, DispersionStats, KScope};
use serde_json::Value;

const SYMMETRIC: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/symmetric.json");

/// Writes straight to the stderr handle so the line survives output capture.
fn report(n: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n}: {verdict} {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn cli(args: &[&str]) -> (i32, String, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_mdpconc"))
        .args(args)
        .output()
        .expect("binary runs");
    let text = String::from_utf8(out.stdout).expect("utf-8 report");
    let json = serde_json::from_str(&text).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), text, json)
}

fn f(v: &Value, path: &[&str]) -> f64 {
    path.iter()
        .fold(v, |v, k| &v[*k])
        .as_f64()
        .unwrap_or_else(|| panic!("missing number at {path:?}"))
}

fn random_policy(rng: &mut SimRng, n_states: usize, n_actions: usize) -> StationaryPolicy {
    StationaryPolicy::new((0..n_states).map(|_| rng.below(n_actions)).collect())
}

#[test]
fn criterion_1_decomposition_identities() {
    let start = Instant::now();
    let mut worst = [0.0f64; 3];
    for i in 0..200u64 {
        let n = 1 + (i as usize * 7) % 6;
        let a = 1 + (i as usize * 5) % 3;
        let m: MdpModel<f64> = random_model(n, a, 1.0, Structure::Unichain, 1000 + i);
        let mut rng = SimRng::new(RunKey::new(i, 0));
        let pi = random_policy(&mut rng, n, a);
        let tr = simulate(&m, &pi, 1000, i, &Initial::Fixed(0)).unwrap();

        let avg = solve_arpe(&m, &pi, 0).unwrap();
        let flavor = Flavor::Average { policy: &pi, lambda: avg.lambda, v: &avg.v };
        worst[0] = worst[0].max(martingale_trace(&m, &tr, flavor).unwrap().relative_residual());

        let disc = solve_drpe(&m, &pi, 0.9).unwrap();
        let flavor = Flavor::Discounted { policy: &pi, gamma: 0.9, v: &disc.v };
        worst[1] = worst[1].max(martingale_trace(&m, &tr, flavor).unwrap().relative_residual());

        let h = 50;
        let stages = (0..=h).map(|_| random_policy(&mut rng, n, a)).collect();
        let fpi = FiniteHorizonPolicy::new(stages).unwrap();
        let fsol = solve_fhpe(&m, &fpi).unwrap();
        let ftr = simulate(&m, &fpi, h + 1, i, &Initial::Fixed(0)).unwrap();
        let flavor = Flavor::FiniteHorizon { policy: &fpi, v: &fsol.v };
        worst[2] = worst[2].max(martingale_trace(&m, &ftr, flavor).unwrap().relative_residual());
    }
    let elapsed = start.elapsed();
    let pass = worst.iter().all(|&w| w <= 1e-9) && elapsed < Duration::from_secs(30);
    report(
        1,
        pass,
        &format!("worst relative residual average={:.3e} discounted={:.3e} finite-horizon={:.3e} in {elapsed:.1?}", worst[0], worst[1], worst[2]),
    );
    assert!(pass);
}

#[test]
fn criterion_2_dispersion_chain() {
    let start = Instant::now();
    let mut violations = Vec::new();
    for i in 0..200u64 {
        let n = 2 + (i as usize) % 5;
        let a = 1 + (i as usize) % 3;
        let m: MdpModel<f64> = random_model(n, a, 1.0, Structure::Communicating, 5000 + i);
        let d_rmax = diameter(&m, 1e-10, 100_000).unwrap() * m.r_max();
        let opt = solve_aroe(&m, &AroeOptions::default()).unwrap();
        let mut policies = vec![opt.policy().clone()];
        let mut rng = SimRng::new(RunKey::new(i, 0));
        while policies.len() < 6 {
            let pi = random_policy(&mut rng, n, a);
            if in_pi_ar(&m, &pi).unwrap() {
                policies.push(pi);
            }
        }
        policies.sort_by(|x, y| x.actions().cmp(y.actions()));
        policies.dedup();
        for pi in &policies {
            let sol = solve_arpe(&m, pi, 0).unwrap();
            let st = DispersionStats::compute(&m, pi, &sol.v, KScope::AllStates).unwrap();
            let sigma = conditional_std(&m, pi, &sol.v).into_iter().fold(0.0, f64::max);
            let ok = sigma <= st.k_dev + 1e-9 && st.k_dev <= st.h_span + 1e-9 && st.h_span <= d_rmax + 1e-9;
            if !ok {
                violations.push(format!(
                    "model {i} policy {:?}: sigma={sigma:.6} K={:.6} H={:.6} D*r_max={d_rmax:.6}",
                    pi.actions(),
                    st.k_dev,
                    st.h_span
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && elapsed < Duration::from_secs(60);
    report(
        2,
        pass,
        &format!("{} violating (model, policy) pair(s) in {elapsed:.1?}; {}", violations.len(), violations.join("; ")),
    );
    assert!(pass, "{violations:?}");
}

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

#[test]
fn criterion_3_solver_cross_validation() {
    let mut gain_err = 0.0f64;
    let mut dp_err = 0.0f64;
    for i in 0..20u64 {
        let n = 1 + (i as usize) % 4;
        let a = 1 + (i as usize / 4) % 3;
        let m: MdpModel<f64> = random_model(n, a, 1.0, Structure::Unichain, 300 + i);
        let opt = solve_aroe(&m, &AroeOptions::default()).unwrap();
        let best = enumerate_policies(&m, 1 << 20)
            .unwrap()
            .map(|p| solve_arpe(&m, &p, 0).unwrap().lambda)
            .fold(f64::NEG_INFINITY, f64::max);
        gain_err = gain_err.max((opt.lambda_star - best).abs());
        for h in 0..=2 {
            let (sol, _) = solve_fhdp(&m, h);
            for s in 0..n {
                dp_err = dp_err.max((sol.v[0][s] - tree_optimum(&m, s, h + 1)).abs());
            }
        }
    }
    let pass = gain_err <= 1e-6 && dp_err <= 1e-10;
    report(3, pass, &format!("max gain error {gain_err:.3e}, max FHDP error {dp_err:.3e}"));
    assert!(pass);
}

fn coverage_of(json: &Value, kind: &str) -> (f64, bool) {
    let r = &json["result"]["coverage"][kind];
    (f(r, &["coverage"]), r["applicable"].as_bool().unwrap_or(false))
}

#[test]
fn criterion_4_coverage() {
    let base = ["verify", "--model", SYMMETRIC, "--policy", "0,0", "-T", "500", "--delta", "0.05", "--runs", "20000", "--seed", "4"];
    let suites: [(&str, &[&str]); 4] = [
        ("azuma_centered", &["--bound", "azuma_centered"]),
        ("azuma_uncentered", &["--bound", "azuma_uncentered"]),
        ("disc_azuma", &["--bound", "disc_azuma", "--gamma", "0.9"]),
        ("fh_azuma", &["--bound", "fh_azuma", "--horizon", "500"]),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (kind, extra) in suites {
        let start = Instant::now();
        let args: Vec<&str> = base.iter().chain(extra.iter()).copied().collect();
        let (code, _, json) = cli(&args);
        let (coverage, applicable) = coverage_of(&json, kind);
        let elapsed = start.elapsed();
        let ok = code == 0 && applicable && coverage >= 0.95 && elapsed < Duration::from_secs(120);
        pass &= ok;
        lines.push(format!("{kind}={coverage} ({elapsed:.1?})"));
    }

    let start = Instant::now();
    let (code, _, json) = cli(&[
        "verify", "--model", SYMMETRIC, "--experiment", "regret", "--learner", "uniform", "-T", "500", "--runs", "20000", "--seed", "4",
    ]);
    let elapsed = start.elapsed();
    let regret = json["result"]["coverage"]
        .as_array()
        .and_then(|v| v.iter().find(|c| c["bound_kind"] == "regret_gap_azuma"))
        .map(|c| f(c, &["coverage"]))
        .unwrap_or(f64::NAN);
    let ok = code == 0 && regret >= 0.95 && elapsed < Duration::from_secs(120);
    pass &= ok;
    lines.push(format!("regret_gap_azuma={regret} ({elapsed:.1?})"));

    report(4, pass, &format!("coverage {}", lines.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_5_law_of_large_numbers() {
    let (code, _, json) = cli(&[
        "verify", "--model", SYMMETRIC, "--policy", "0,0", "--experiment", "lln", "-T", "100000", "--runs", "20", "--seed", "5",
    ]);
    let dev = f(&json, &["result", "max_deviation"]);
    let pass = code == 0 && dev < 0.02;
    report(5, pass, &format!("max |R_T/T - 0.5| = {dev}"));
    assert!(pass);
}

#[test]
fn criterion_6_central_limit() {
    let (code, _, json) = cli(&[
        "verify", "--model", SYMMETRIC, "--policy", "0,0", "--experiment", "clt", "--t-level", "2000", "--runs", "2000", "--seed", "6",
    ]);
    let ks = f(&json, &["result", "report", "ks_distance"]);
    let pass = code == 0 && ks < 0.05;
    report(6, pass, &format!("KS distance {ks}"));
    assert!(pass);
}

/// Heuristic and non-gating: the outcome is printed but never asserted.
#[test]
fn criterion_7_iterated_logarithm_envelope() {
    let (code, _, json) = cli(&[
        "verify", "--model", SYMMETRIC, "--policy", "0,0", "--experiment", "lil", "-T", "100000", "--runs", "50", "--seed", "7",
    ]);
    let sup = f(&json, &["result", "sup_ratio"]);
    let median = f(&json, &["result", "median_run_sup"]);
    let late = f(&json, &["result", "late_sup_ratio"]);
    let pass = code == 0 && sup > 0.5 && sup < 1.5;
    report(
        7,
        pass,
        &format!("sup ratio {sup} (band 0.5..1.5, non-gating); median per-run sup {median}; sup past e^e {late}"),
    );
}

#[test]
fn criterion_8_vanishing_discount() {
    let (code, _, json) = cli(&[
        "verify", "--model", SYMMETRIC, "--policy", "0,0", "--experiment", "vanishing", "-T", "10", "--delta", "0.1", "--gammas", "0.9,0.99,0.999",
    ]);
    let gap = f(&json, &["result", "final_relative_gap"]);
    let pass = code == 0 && gap < 0.02;
    report(8, pass, &format!("all gaps strictly decreasing: {}, final relative gap {gap}", code == 0));
    assert!(pass);
}

#[test]
fn criterion_9_diameter_oracles() {
    let cycle = diameter(&fixtures::cycle::<f64>(4), 1e-12, 100_000).unwrap();
    let swap = diameter(&fixtures::swap::<f64>(1.0, 0.0), 1e-12, 100_000).unwrap();
    let symmetric = diameter(&fixtures::symmetric::<f64>(&[1.0, 0.0]), 1e-12, 100_000).unwrap();
    let (_, _, stats) = cli(&["stats", "--model", SYMMETRIC, "--policy", "0,0"]);
    let cli_d = f(&stats, &["result", "diameter"]);
    let pass = cycle == 3.0 && swap == 1.0 && (symmetric - 2.0).abs() <= 1e-9 && (cli_d - 2.0).abs() <= 1e-9;
    report(9, pass, &format!("cycle4 D={cycle}, swap D={swap}, symmetric D={symmetric} (cli {cli_d})"));
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    let args = [
        "verify", "--model", SYMMETRIC, "--policy", "0,0", "--bound", "azuma_centered", "-T", "500", "--runs", "20000", "--seed", "10",
    ];
    let (c1, first, _) = cli(&args);
    let (c2, second, _) = cli(&args);
    let one_thread = Command::new(env!("CARGO_BIN_EXE_mdpconc"))
        .args(args)
        .env("MDPCONC_THREADS", "1")
        .output()
        .expect("binary runs");
    let third = String::from_utf8(one_thread.stdout).unwrap();
    let pass = c1 == 0 && c2 == 0 && first == second && first == third;
    report(10, pass, &format!("{} report bytes, identical across repeats and thread counts: {}", first.len(), pass));
    assert!(pass);
}

/// Exit-code and report-shape contract of the binary.
mod contract {
    use std::path::PathBuf;
    use std::process::Command;

    use serde_json::Value;

    fn model(name: &str) -> String {
        format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn run(args: &[&str]) -> (i32, String) {
        let out = Command::new(env!("CARGO_BIN_EXE_mdpconc")).args(args).output().unwrap();
        (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
    }

    fn run_json(args: &[&str]) -> (i32, Value) {
        let (code, text) = run(args);
        (code, serde_json::from_str(&text).unwrap())
    }

    fn scratch(name: &str, contents: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("mdpconc-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn validate_accepts_shipped_models() {
        for name in ["symmetric.json", "swap.json", "cycle4.json", "riverswim.json"] {
            let (code, json) = run_json(&["validate", "--model", &model(name)]);
            assert_eq!(code, 0, "{name}");
            assert_eq!(json["result"]["valid"], true);
            assert_eq!(json["model_sha256"].as_str().unwrap().len(), 64);
        }
    }

    #[test]
    fn validate_reports_substochastic_rows() {
        let path = scratch(
            "short_row.json",
            r#"{"n_states":2,"n_actions":1,"r_max":1,"transition":[[[0.5,0.4]],[[0.5,0.5]]],"reward":[[1],[0]]}"#,
        );
        let (code, json) = run_json(&["validate", "--model", path.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert_eq!(json["status"], "error");
        let errors = json["error"]["details"]["errors"].as_array().unwrap();
        assert!(errors.iter().any(|e| e["code"] == "NonStochasticRow"));
    }

    #[test]
    fn missing_and_malformed_files_exit_with_input_error() {
        let (code, json) = run_json(&["validate", "--model", "/nonexistent/model.json"]);
        assert_eq!(code, 2);
        assert_eq!(json["error"]["code"], "FileNotFound");
        assert!(json["model_sha256"].is_null());

        let path = scratch("garbage.json", "{ not json");
        let (code, json) = run_json(&["stats", "--model", path.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert_eq!(json["error"]["code"], "ParseError");
    }

    #[test]
    fn stats_on_symmetric_model() {
        let (code, json) = run_json(&["stats", "--model", &model("symmetric.json")]);
        assert_eq!(code, 0);
        let r = &json["result"];
        assert_eq!(r["h_span"], 1.0);
        assert_eq!(r["k_dev"], 0.5);
        assert_eq!(r["sigma"], serde_json::json!([0.5, 0.5]));
        assert_eq!(r["diameter"], 2.0);
        assert_eq!(r["lambda"], 0.5);
    }

    #[test]
    fn criterion_follows_model_and_flags() {
        let (_, json) = run_json(&["solve", "--model", &model("riverswim.json")]);
        assert_eq!(json["result"]["criterion"], "discounted");
        let (_, json) = run_json(&["solve", "--model", &model("riverswim.json"), "--criterion", "average"]);
        assert_eq!(json["result"]["criterion"], "average");
        let (_, json) = run_json(&["solve", "--model", &model("swap.json"), "--horizon", "3"]);
        assert_eq!(json["result"]["criterion"], "finite-horizon");
        let (code, json) = run_json(&["solve", "--model", &model("swap.json"), "--criterion", "discounted"]);
        assert_eq!(code, 2);
        assert_eq!(json["error"]["code"], "MissingParameter");
    }

    #[test]
    fn bad_policies_are_input_errors() {
        let (code, json) = run_json(&["stats", "--model", &model("symmetric.json"), "--policy", "0,7"]);
        assert_eq!(code, 2);
        assert_eq!(json["error"]["code"], "InvalidPolicy");
        let (code, _) = run_json(&["stats", "--model", &model("symmetric.json"), "--policy", "x"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn bounds_csv_is_monotone_in_t() {
        let (code, text) = run(&["bounds", "--model", &model("symmetric.json"), "-T", "1000", "--format", "csv"]);
        assert_eq!(code, 0);
        let mut last: std::collections::BTreeMap<String, f64> = Default::default();
        let mut rows = 0;
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let value: f64 = cols[2].parse().unwrap();
            let prev = last.insert(cols[1].to_string(), value).unwrap_or(f64::NEG_INFINITY);
            assert!(value >= prev, "{line}");
            rows += 1;
        }
        assert_eq!(rows, 4000);
    }

    #[test]
    fn classify_reports_flags() {
        let (code, json) = run_json(&["classify", "--model", &model("cycle4.json")]);
        assert_eq!(code, 0);
        assert_eq!(json["result"]["policy_count"], "1");
        assert!(json["result"]["class"].is_object());
    }

    #[test]
    fn failed_experiment_exits_with_criteria_code() {
        let (code, json) = run_json(&[
            "verify", "--model", &model("symmetric.json"), "--policy", "0,0", "--experiment", "lln", "-T", "20", "--runs", "20",
            "--tolerance", "0.001",
        ]);
        assert_eq!(code, 1);
        assert_eq!(json["status"], "criteria_failed");
    }

    #[test]
    fn out_flag_writes_the_report() {
        let dir = std::env::temp_dir().join(format!("mdpconc-cli-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        let (code, stdout) = run(&["simulate", "--model", &model("swap.json"), "-T", "4", "--out", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(stdout.is_empty());
        let json: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(json["result"]["trajectory"]["states"], serde_json::json!([0, 1, 0, 1, 0]));
    }
}
