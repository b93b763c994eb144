//! Brute-force oracles and the paired EM / threshold-EM comparison runner.
//!
//! Nothing here shares code with the elimination engine or the bound
//! formulas: marginals come from summing the joint over every full
//! assignment, and bound checks come from estimating on every completion
//! of a dataset.

use rayon::prelude::*;

use crate::bounds::compute_bounds;
use crate::dataio::{forward_sample, mask_mcar, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{count_complete, posterior_mean_estimate};
use crate::inference::{check_evidence, Evidence};
use crate::learn::{run, Algorithm, Init, LearnConfig, MStep};
use crate::model::{joint_probability, NetworkStructure, NodeSpec, ParameterSet, PriorSpec, Table};
use crate::rng::{domain, SplitMix64};

/// Largest joint state space [`brute_marginal`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1 << 20;

/// Default cap on the number of completions.
pub const DEFAULT_COMPLETION_CAP: u128 = 1 << 16;

/// Tolerance of the sandwich and tightness checks.
pub const SANDWICH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteMarginal {
    /// Normalized table over the targets, last fastest; all zero when the
    /// evidence is impossible.
    pub table: Vec<f64>,
    pub evidence_probability: f64,
    pub zero_evidence: bool,
}

fn mixed_radix_next(digits: &mut [usize], cards: &[usize]) -> bool {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < cards[pos] {
            return true;
        }
        digits[pos] = 0;
    }
    false
}

/// P(targets | evidence) by summing the joint over all full assignments.
pub fn brute_marginal(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
    targets: &[usize],
) -> Result<BruteMarginal> {
    check_evidence(structure, evidence)?;
    let cards: Vec<usize> = (0..structure.len()).map(|i| structure.cardinality(i)).collect();
    let space: u128 = cards.iter().map(|&c| c as u128).product();
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity {
            count: space,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let target_cards: Vec<usize> = targets.iter().map(|&t| cards[t]).collect();
    let mut table = vec![0.0; target_cards.iter().product()];
    let mut total = 0.0;
    let mut assignment = vec![0; structure.len()];
    loop {
        let consistent = evidence
            .iter()
            .zip(&assignment)
            .all(|(e, &a)| e.map_or(true, |v| v == a));
        if consistent {
            let p = joint_probability(structure, params, &assignment)?;
            total += p;
            let idx = targets
                .iter()
                .zip(&target_cards)
                .fold(0, |acc, (&t, &c)| acc * c + assignment[t]);
            table[idx] += p;
        }
        if !mixed_radix_next(&mut assignment, &cards) {
            break;
        }
    }
    let zero_evidence = !(total > 0.0);
    if zero_evidence {
        table.iter_mut().for_each(|v| *v = 0.0);
    } else {
        table.iter_mut().for_each(|v| *v /= total);
    }
    Ok(BruteMarginal {
        table,
        evidence_probability: total,
        zero_evidence,
    })
}

/// Number of completions of a dataset: the product of the cardinalities of
/// its missing cells.
pub fn completion_count(dataset: &Dataset, structure: &NetworkStructure) -> u128 {
    dataset
        .records()
        .iter()
        .flat_map(|r| r.iter().enumerate())
        .filter(|(_, c)| c.is_none())
        .map(|(i, _)| structure.cardinality(i) as u128)
        .try_fold(1u128, |acc, c| acc.checked_mul(c))
        .unwrap_or(u128::MAX)
}

/// Iterator over every completion of a dataset.
#[derive(Debug, Clone)]
pub struct Completions {
    template: Dataset,
    cells: Vec<(usize, usize)>,
    cards: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for Completions {
    type Item = Dataset;

    fn next(&mut self) -> Option<Dataset> {
        if self.done {
            return None;
        }
        let mut out = self.template.clone();
        for (&(l, i), &d) in self.cells.iter().zip(&self.digits) {
            out.records_mut()[l][i] = Some(d);
        }
        self.done = !mixed_radix_next(&mut self.digits, &self.cards);
        Some(out)
    }
}

/// Every completion exactly once, in lexicographic order of the missing
/// cells taken record by record, column by column (first cell most
/// significant).
pub fn enumerate_completions(
    dataset: &Dataset,
    structure: &NetworkStructure,
    cap: u128,
) -> Result<Completions> {
    let count = completion_count(dataset, structure);
    if count > cap {
        return Err(Error::Capacity { count, limit: cap });
    }
    let cells: Vec<(usize, usize)> = dataset
        .records()
        .iter()
        .enumerate()
        .flat_map(|(l, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, c)| c.is_none())
                .map(move |(i, _)| (l, i))
        })
        .collect();
    let cards = cells.iter().map(|&(_, i)| structure.cardinality(i)).collect();
    Ok(Completions {
        template: dataset.clone(),
        digits: vec![0; cells.len()],
        cells,
        cards,
        done: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichEntry {
    pub node: usize,
    pub row: usize,
    pub col: usize,
    pub bound_min: f64,
    pub bound_max: f64,
    pub completion_min: f64,
    pub completion_max: f64,
    pub conforms: bool,
    pub tight: bool,
}

/// Compares the bounds of every parameter with the range of posterior-mean
/// estimates over all completions of the dataset.
pub fn sandwich_report(
    structure: &NetworkStructure,
    dataset: &Dataset,
    prior: &PriorSpec,
) -> Result<Vec<SandwichEntry>> {
    let bounds = compute_bounds(structure, dataset, prior)?;
    let mut lo: Vec<Table> = Vec::new();
    let mut hi: Vec<Table> = Vec::new();
    for completion in enumerate_completions(dataset, structure, DEFAULT_COMPLETION_CAP)? {
        let est = posterior_mean_estimate(structure, &count_complete(structure, &completion)?, prior)?;
        if lo.is_empty() {
            lo = est.tables().to_vec();
            hi = est.tables().to_vec();
            continue;
        }
        for (i, t) in est.tables().iter().enumerate() {
            for (idx, &v) in t.values().iter().enumerate() {
                let l = &mut lo[i].values_mut()[idx];
                *l = l.min(v);
                let h = &mut hi[i].values_mut()[idx];
                *h = h.max(v);
            }
        }
    }
    let mut out = Vec::with_capacity(structure.parameter_count());
    for i in 0..structure.len() {
        for j in 0..structure.parent_configs(i) {
            for k in 0..structure.cardinality(i) {
                let (bmin, bmax) = (bounds.min(i, j, k), bounds.max(i, j, k));
                let (cmin, cmax) = (lo[i].get(j, k), hi[i].get(j, k));
                out.push(SandwichEntry {
                    node: i,
                    row: j,
                    col: k,
                    bound_min: bmin,
                    bound_max: bmax,
                    completion_min: cmin,
                    completion_max: cmax,
                    conforms: cmin >= bmin - SANDWICH_TOLERANCE
                        && cmax <= bmax + SANDWICH_TOLERANCE,
                    tight: (cmin - bmin).abs() <= SANDWICH_TOLERANCE
                        && (cmax - bmax).abs() <= SANDWICH_TOLERANCE,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub records: usize,
    pub mask_rate: f64,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub max_iterations: usize,
    pub param_tolerance: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            records: 200,
            mask_rate: 0.3716,
            trials: 20,
            seed: 0,
            alpha: 1.0,
            max_iterations: 200,
            param_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trial: usize,
    pub em_iters: usize,
    pub them_iters: usize,
    pub em_final_ll: f64,
    pub them_final_ll: f64,
    pub em_zero_params: usize,
    pub them_zero_params: usize,
    /// Entries of the final threshold-EM parameters outside their bounds.
    pub them_violations: usize,
    pub em_converged: bool,
    pub them_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompareSummary {
    pub trials: Vec<TrialSummary>,
}

impl CompareSummary {
    /// Share of trials where threshold EM needed fewer iterations than EM;
    /// `None` without trials.
    pub fn threshold_faster_fraction(&self) -> Option<f64> {
        if self.trials.is_empty() {
            return None;
        }
        let faster = self
            .trials
            .iter()
            .filter(|t| t.them_iters < t.em_iters)
            .count();
        Some(faster as f64 / self.trials.len() as f64)
    }
}

/// Seeds of trial `t`: (sample, mask, init), derived from the run seed.
pub fn trial_seeds(seed: u64, trial: usize) -> (u64, u64, u64) {
    let mut rng = SplitMix64::stream(seed, domain::COMPARE, trial as u64);
    (rng.next_u64(), rng.next_u64(), rng.next_u64())
}

/// Paired comparison: per trial, sample and mask a dataset, compute bounds,
/// and run EM and threshold EM from the same random start.
pub fn compare_runs(
    structure: &NetworkStructure,
    true_params: &ParameterSet,
    config: &CompareConfig,
) -> Result<CompareSummary> {
    true_params.validate(structure)?;
    if !(0.0..=1.0).contains(&config.mask_rate) {
        return Err(Error::Domain(format!(
            "mask rate {} is not in [0, 1]",
            config.mask_rate
        )));
    }
    let prior = PriorSpec::uniform(structure, config.alpha)?;
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let (sample_seed, mask_seed, init_seed) = trial_seeds(config.seed, trial);
            let complete = forward_sample(structure, true_params, config.records, sample_seed);
            let data = mask_mcar(&complete, config.mask_rate, mask_seed)?;
            let bounds = compute_bounds(structure, &data, &prior)?;
            let base = LearnConfig {
                algorithm: Algorithm::Em,
                max_iterations: config.max_iterations,
                param_tolerance: config.param_tolerance,
                init: Init::RandomSimplex,
                seed: init_seed,
                m_step: MStep::Ml,
            };
            let em = run(structure, &data, &base, None)?;
            let them_cfg = LearnConfig {
                algorithm: Algorithm::ThresholdEm,
                ..base
            };
            let them = run(structure, &data, &them_cfg, Some(&bounds))?;
            Ok(TrialSummary {
                trial,
                em_iters: em.iterations_used,
                them_iters: them.iterations_used,
                em_final_ll: em.final_loglik(),
                them_final_ll: them.final_loglik(),
                em_zero_params: em.params.zero_count(),
                them_zero_params: them.params.zero_count(),
                them_violations: bounds.violations(&them.params),
                em_converged: em.converged,
                them_converged: them.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareSummary { trials })
}

/// Random DAG over at most `max_nodes` nodes with 2..=`max_states` states
/// each and at most `max_parents` parents per node, drawn from earlier
/// nodes. Used to generate test instances.
pub fn random_structure(
    rng: &mut SplitMix64,
    max_nodes: usize,
    max_states: usize,
    max_parents: usize,
) -> NetworkStructure {
    assert!(max_nodes >= 1 && max_states >= 2);
    let n = 1 + rng.below(max_nodes as u64) as usize;
    let nodes = (0..n)
        .map(|i| {
            let r = 2 + rng.below((max_states - 1) as u64) as usize;
            let states: Vec<String> = (0..r).map(|k| format!("s{k}")).collect();
            let mut parents: Vec<usize> = (0..i).filter(|_| rng.below(2) == 0).collect();
            while parents.len() > max_parents {
                let drop = rng.below(parents.len() as u64) as usize;
                parents.remove(drop);
            }
            NodeSpec {
                name: format!("X{i}"),
                states,
                parents,
            }
        })
        .collect();
    NetworkStructure::new(nodes).expect("parents precede children")
}

/// Row-stochastic tables with every row uniform on the simplex.
pub fn random_parameters(rng: &mut SplitMix64, structure: &NetworkStructure) -> ParameterSet {
    let tables = (0..structure.len())
        .map(|i| {
            let rows = (0..structure.parent_configs(i))
                .map(|_| rng.simplex(structure.cardinality(i)))
                .collect();
            Table::from_rows(rows).expect("rectangular")
        })
        .collect();
    ParameterSet::new(structure, tables).expect("simplex rows")
}
