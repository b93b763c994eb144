use bnlearn_core::dataio::{forward_sample, mask_mcar};
use bnlearn_core::oracle::{random_parameters, random_structure, sandwich_report};
use bnlearn_core::rng::{domain, SplitMix64};
use bnlearn_core::{compute_bounds, Dataset, NetworkStructure, PriorSpec};
use proptest::prelude::*;

/// Small dataset with a bounded number of missing cells.
fn small_instance(seed: u64) -> (NetworkStructure, Dataset, SplitMix64) {
    let mut rng = SplitMix64::stream(seed, domain::SYNTH, 1);
    let s = random_structure(&mut rng, 4, 3, 2);
    let p = random_parameters(&mut rng, &s);
    let complete = forward_sample(&s, &p, 5, rng.next_u64());
    let mut records = mask_mcar(&complete, 0.25, rng.next_u64()).unwrap().records().to_vec();
    // keep the completion space small enough to enumerate
    let mut kept = 0;
    for (r, truth) in records.iter_mut().zip(complete.records()) {
        for (cell, value) in r.iter_mut().zip(truth) {
            if cell.is_none() {
                if kept < 8 {
                    kept += 1;
                } else {
                    *cell = *value;
                }
            }
        }
    }
    let d = Dataset::new(&s, records).unwrap();
    (s, d, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounds_sandwich_every_completion(seed in any::<u64>(), alpha in 1.0f64..4.0) {
        let (s, d, _) = small_instance(seed);
        let prior = PriorSpec::uniform(&s, alpha).unwrap();
        for e in sandwich_report(&s, &d, &prior).unwrap() {
            prop_assert!(e.conforms, "{e:?}");
            prop_assert!(e.tight, "{e:?}");
        }
    }

    #[test]
    fn revealing_a_cell_nests_the_interval(seed in any::<u64>()) {
        let (s, d, mut rng) = small_instance(seed);
        let missing: Vec<(usize, usize)> = d.records().iter().enumerate()
            .flat_map(|(l, r)| r.iter().enumerate().filter(|(_, c)| c.is_none()).map(move |(i, _)| (l, i)))
            .collect();
        prop_assume!(!missing.is_empty());
        let (l, i) = missing[rng.below(missing.len() as u64) as usize];
        let mut records = d.records().to_vec();
        records[l][i] = Some(rng.below(s.cardinality(i) as u64) as usize);
        let revealed = Dataset::new(&s, records).unwrap();

        let prior = PriorSpec::uniform(&s, 1.0).unwrap();
        let before = compute_bounds(&s, &d, &prior).unwrap();
        let after = compute_bounds(&s, &revealed, &prior).unwrap();
        for n in 0..s.len() {
            for j in 0..s.parent_configs(n) {
                for k in 0..s.cardinality(n) {
                    prop_assert!(after.min(n, j, k) >= before.min(n, j, k) - 1e-12);
                    prop_assert!(after.max(n, j, k) <= before.max(n, j, k) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn bounds_are_ordered_and_inside_unit_interval(seed in any::<u64>()) {
        let mut rng = SplitMix64::stream(seed, domain::SYNTH, 2);
        let s = random_structure(&mut rng, 6, 4, 3);
        let p = random_parameters(&mut rng, &s);
        let d = mask_mcar(&forward_sample(&s, &p, 80, rng.next_u64()), 0.4, rng.next_u64()).unwrap();
        let b = compute_bounds(&s, &d, &PriorSpec::uniform(&s, 1.0).unwrap()).unwrap();
        for n in 0..s.len() {
            for j in 0..s.parent_configs(n) {
                for k in 0..s.cardinality(n) {
                    let (lo, hi) = (b.min(n, j, k), b.max(n, j, k));
                    prop_assert!(0.0 < lo && lo <= hi && hi < 1.0);
                }
            }
        }
    }
}
