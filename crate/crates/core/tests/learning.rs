use bnlearn_core::dataio::{forward_sample, mask_mcar, parse_dataset, parse_network, write_summary};
use bnlearn_core::learn::{run, run_with_observer};
use bnlearn_core::oracle::{compare_runs, random_parameters, random_structure, CompareConfig};
use bnlearn_core::rng::{domain, SplitMix64};
use bnlearn_core::{compute_bounds, Algorithm, Init, LearnConfig, MStep, NetworkStructure, ParameterSet, PriorSpec};
use proptest::prelude::*;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).unwrap()
}

fn ab() -> (NetworkStructure, ParameterSet) {
    let parsed = parse_network(&fixture("ab.net")).unwrap();
    (parsed.structure, parsed.params.unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn em_never_decreases_observed_loglik(seed in any::<u64>(), rate in 0.05f64..0.6) {
        let mut rng = SplitMix64::stream(seed, domain::SYNTH, 3);
        let s = random_structure(&mut rng, 5, 3, 2);
        let p = random_parameters(&mut rng, &s);
        let d = mask_mcar(&forward_sample(&s, &p, 60, rng.next_u64()), rate, rng.next_u64()).unwrap();
        let cfg = LearnConfig { seed: rng.next_u64(), max_iterations: 60, ..Default::default() };
        let res = run(&s, &d, &cfg, None).unwrap();
        let mut prev = res.initial_loglik;
        for row in &res.trace {
            prop_assert!(row.observed_loglik >= prev - 1e-9, "{} after {}", row.observed_loglik, prev);
            prev = row.observed_loglik;
        }
    }

    #[test]
    fn threshold_em_rows_stay_normalized(seed in any::<u64>()) {
        let mut rng = SplitMix64::stream(seed, domain::SYNTH, 4);
        let s = random_structure(&mut rng, 5, 3, 2);
        let p = random_parameters(&mut rng, &s);
        let d = mask_mcar(&forward_sample(&s, &p, 60, rng.next_u64()), 0.3, rng.next_u64()).unwrap();
        let bounds = compute_bounds(&s, &d, &PriorSpec::uniform(&s, 1.0).unwrap()).unwrap();
        let cfg = LearnConfig { algorithm: Algorithm::ThresholdEm, seed: rng.next_u64(), max_iterations: 40, ..Default::default() };
        let mut ok = true;
        run_with_observer(&s, &d, &cfg, Some(&bounds), |st| {
            ok &= bounds.violations(st.regularized.unwrap()) == 0;
            for t in st.params.tables() {
                for r in t.row_iter() {
                    ok &= (r.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
                }
            }
        }).unwrap();
        prop_assert!(ok);
    }
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let (s, p) = ab();
    let d = mask_mcar(&forward_sample(&s, &p, 100, 1), 0.4, 2).unwrap();
    let bounds = compute_bounds(&s, &d, &PriorSpec::uniform(&s, 1.0).unwrap()).unwrap();
    for algorithm in [Algorithm::Em, Algorithm::ThresholdEm] {
        let cfg = LearnConfig { algorithm, seed: 5, ..Default::default() };
        let b = (algorithm == Algorithm::ThresholdEm).then_some(&bounds);
        assert_eq!(run(&s, &d, &cfg, b).unwrap(), run(&s, &d, &cfg, b).unwrap());
    }
}

#[test]
fn posterior_mean_m_step_keeps_parameters_positive() {
    let (s, p) = ab();
    let d = mask_mcar(&forward_sample(&s, &p, 50, 8), 0.5, 9).unwrap();
    let cfg = LearnConfig {
        m_step: MStep::PosteriorMean(PriorSpec::uniform(&s, 2.0).unwrap()),
        init: Init::Uniform,
        ..Default::default()
    };
    let res = run(&s, &d, &cfg, None).unwrap();
    assert_eq!(res.params.zero_count(), 0);
    assert!(res.converged);
}

#[test]
fn threshold_em_on_d4_regression() {
    let (s, _) = ab();
    let d = parse_dataset(&fixture("d4.csv"), &s).unwrap();
    let bounds = compute_bounds(&s, &d, &PriorSpec::uniform(&s, 1.0).unwrap()).unwrap();
    let cfg = LearnConfig { algorithm: Algorithm::ThresholdEm, seed: 7, ..Default::default() };
    let res = run(&s, &d, &cfg, Some(&bounds)).unwrap();

    assert!(res.converged);
    assert_eq!(res.iterations_used, 10);
    assert!(res.trace.iter().all(|r| r.clip_count == 4 && r.post_norm_violations == 0 && r.skipped_records == 0));
    assert!((res.final_loglik() - -3.3088327856695279).abs() < 1e-12);
    let expected = [vec![0.5784647615334959, 0.42153523846650415], vec![0.75, 0.25, 0.25, 0.75]];
    for (t, e) in res.params.tables().iter().zip(&expected) {
        for (a, b) in t.values().iter().zip(e) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn compare_runs_regression() {
    let (s, p) = ab();
    let cfg = CompareConfig { records: 200, mask_rate: 0.37, trials: 20, seed: 11, ..Default::default() };
    let summary = compare_runs(&s, &p, &cfg).unwrap();
    assert_eq!(summary.trials.len(), 20);
    assert!(summary.trials.iter().all(|t| t.them_zero_params == 0 && t.them_violations == 0));
    assert!(summary.trials.iter().all(|t| t.em_converged && t.them_converged));
    let em_iters: Vec<usize> = summary.trials.iter().map(|t| t.em_iters).collect();
    assert_eq!(em_iters, [26, 25, 26, 22, 20, 24, 24, 26, 23, 26, 28, 31, 24, 25, 25, 20, 24, 22, 22, 25]);
    let first = write_summary(&summary.trials[..1]);
    assert_eq!(
        first.lines().nth(1).unwrap(),
        "0,26,26,-165.32761718030577,-165.32761718030577,0,0,0"
    );
}
