use bnlearn_core::inference::{evidence_probability, family_posterior, marginal, record_log_likelihood, record_posteriors};
use bnlearn_core::model::joint_probability;
use bnlearn_core::oracle::{brute_marginal, random_parameters, random_structure};
use bnlearn_core::rng::{domain, SplitMix64};
use bnlearn_core::{NetworkStructure, ParameterSet};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn instance(seed: u64, max_nodes: usize, max_states: usize) -> (NetworkStructure, ParameterSet, SplitMix64) {
    let mut rng = SplitMix64::stream(seed, domain::SYNTH, 0);
    let s = random_structure(&mut rng, max_nodes, max_states, 3);
    let p = random_parameters(&mut rng, &s);
    (s, p, rng)
}

fn random_evidence(rng: &mut SplitMix64, s: &NetworkStructure, p_obs: f64) -> Vec<Option<usize>> {
    (0..s.len())
        .map(|i| (rng.next_f64() < p_obs).then(|| rng.below(s.cardinality(i) as u64) as usize))
        .collect()
}

fn all_assignments(s: &NetworkStructure) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 0..s.len() {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..s.cardinality(i)).map(move |k| {
                    let mut b = a.clone();
                    b.push(k);
                    b
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_sums_to_one(seed in any::<u64>()) {
        let (s, p, _) = instance(seed, 6, 3);
        let total: f64 = all_assignments(&s).iter().map(|a| joint_probability(&s, &p, a).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < TOL, "total {total}");
    }

    #[test]
    fn marginal_matches_enumeration(seed in any::<u64>()) {
        let (s, p, mut rng) = instance(seed, 8, 3);
        let ev = random_evidence(&mut rng, &s, 0.4);
        let mut targets: Vec<usize> = (0..s.len()).filter(|_| rng.next_f64() < 0.35).collect();
        if targets.is_empty() {
            targets.push(s.len() - 1);
        }
        let ve = marginal(&s, &p, &ev, &targets).unwrap();
        let bf = brute_marginal(&s, &p, &ev, &targets).unwrap();
        prop_assert!((ve.evidence_probability - bf.evidence_probability).abs() < TOL);
        for (a, b) in ve.table.iter().zip(&bf.table) {
            prop_assert!((a - b).abs() < TOL, "{a} vs {b}");
        }
    }

    #[test]
    fn family_posteriors_match_enumeration(seed in any::<u64>()) {
        let (s, p, mut rng) = instance(seed, 7, 3);
        let ev = random_evidence(&mut rng, &s, 0.5);
        let fast = record_posteriors(&s, &p, &ev).unwrap();
        prop_assert!((fast.evidence_probability - evidence_probability(&s, &p, &ev).unwrap()).abs() < TOL);
        for i in 0..s.len() {
            let mut family = s.parents(i).to_vec();
            family.push(i);
            let bf = brute_marginal(&s, &p, &ev, &family).unwrap();
            let ve = family_posterior(&s, &p, &ev, i).unwrap();
            for ((a, b), c) in ve.values().iter().zip(&bf.table).zip(fast.families[i].values()) {
                prop_assert!((a - b).abs() < TOL && (c - b).abs() < TOL);
            }
        }
    }

    #[test]
    fn record_likelihood_is_log_evidence(seed in any::<u64>()) {
        let (s, p, mut rng) = instance(seed, 8, 3);
        let ev = random_evidence(&mut rng, &s, 0.6);
        let ll = record_log_likelihood(&s, &p, &ev).unwrap();
        let bf = brute_marginal(&s, &p, &ev, &[]).unwrap();
        prop_assert!(!ll.impossible);
        prop_assert!((ll.log_prob - bf.evidence_probability.ln()).abs() < 1e-9);
    }
}

#[test]
fn fully_observed_record_has_joint_probability() {
    let (s, p, mut rng) = instance(3, 6, 4);
    for _ in 0..20 {
        let a: Vec<usize> = (0..s.len()).map(|i| rng.below(s.cardinality(i) as u64) as usize).collect();
        let ev: Vec<Option<usize>> = a.iter().map(|&k| Some(k)).collect();
        let pe = evidence_probability(&s, &p, &ev).unwrap();
        assert!((pe - joint_probability(&s, &p, &a).unwrap()).abs() < 1e-12);
    }
}
