//! Interval bounds on every CPT entry from observed and virtual frequencies.
//!
//! For a parameter θ_{i,j,k} the incomplete records are classified by how
//! their family cells can be completed:
//!
//! * `completable_to_jk` (n_max): records that can be completed to
//!   X_i = x_k with pa(X_i) = x_j. Completing all of them that way gives
//!   the largest estimate, so they enter numerator and denominator.
//! * `completable_to_j_not_k` (n_min): records that can be completed to
//!   pa(X_i) = x_j with X_i some x_h, h ≠ k. Completing them that way gives
//!   the smallest estimate, so they enter the denominator only.
//!
//! ```text
//! min = (α_ijk + n(x_k|x_j))         / (α_ij + n(x_j) + n_min)
//! max = (α_ijk + n(x_k|x_j) + n_max) / (α_ij + n(x_j) + n_max)
//! ```
//!
//! The bounds depend only on the data, never on current parameter values.
//! They bracket the posterior-mean estimate over every completion of the
//! dataset and are attained by some completion.

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::estimators::posterior_mean;
use crate::model::{NetworkStructure, ParameterSet, PriorSpec, Table};

/// How one record relates to a family event (X_i = x_k, pa(X_i) = x_j).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMatch {
    /// Whole family observed and equal to the event.
    FullyObservedMatch,
    /// Some family cell missing, every observed family cell agrees.
    Completable,
    Inconsistent,
}

/// Classifies `record` against parent configuration `j` and child state
/// `k`. `k = None` accepts any child state.
pub fn family_consistency(
    structure: &NetworkStructure,
    record: &[Option<usize>],
    node: usize,
    j: usize,
    k: Option<usize>,
) -> Result<FamilyMatch> {
    let parent_values = structure.parent_config_values(node, j)?;
    let mut any_missing = false;
    for (&p, &want) in structure.parents(node).iter().zip(&parent_values) {
        match record[p] {
            Some(v) if v != want => return Ok(FamilyMatch::Inconsistent),
            Some(_) => {}
            None => any_missing = true,
        }
    }
    match (record[node], k) {
        (Some(v), Some(want)) if v != want => return Ok(FamilyMatch::Inconsistent),
        (None, _) => any_missing = true,
        _ => {}
    }
    Ok(if any_missing {
        FamilyMatch::Completable
    } else {
        FamilyMatch::FullyObservedMatch
    })
}

/// Observed and virtual frequencies of one node, each a q_i × r_i grid of
/// counts (row totals are per row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualFrequencies {
    rows: usize,
    cols: usize,
    fully_observed: Vec<u64>,
    completable_to_jk: Vec<u64>,
    completable_to_j_not_k: Vec<u64>,
    row_observed_total: Vec<u64>,
}

impl VirtualFrequencies {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// n(X_i = x_k | pa(X_i) = x_j) over records with the family observed.
    pub fn fully_observed(&self, j: usize, k: usize) -> u64 {
        self.fully_observed[j * self.cols + k]
    }

    /// n_max
    pub fn completable_to_jk(&self, j: usize, k: usize) -> u64 {
        self.completable_to_jk[j * self.cols + k]
    }

    /// n_min
    pub fn completable_to_j_not_k(&self, j: usize, k: usize) -> u64 {
        self.completable_to_j_not_k[j * self.cols + k]
    }

    /// n(pa(X_i) = x_j) over records with the family observed.
    pub fn row_observed_total(&self, j: usize) -> u64 {
        self.row_observed_total[j]
    }
}

/// One pass over the dataset for node `node`.
pub fn virtual_frequencies(
    structure: &NetworkStructure,
    dataset: &Dataset,
    node: usize,
) -> VirtualFrequencies {
    let (q, r) = (structure.parent_configs(node), structure.cardinality(node));
    let parents = structure.parents(node);
    let configs: Vec<Vec<usize>> = (0..q)
        .map(|j| structure.parent_config_values(node, j).expect("j < q"))
        .collect();
    let mut vf = VirtualFrequencies {
        rows: q,
        cols: r,
        fully_observed: vec![0; q * r],
        completable_to_jk: vec![0; q * r],
        completable_to_j_not_k: vec![0; q * r],
        row_observed_total: vec![0; q],
    };
    for record in dataset.records() {
        let family_complete =
            record[node].is_some() && parents.iter().all(|&p| record[p].is_some());
        if family_complete {
            let full: Vec<usize> = record.iter().map(|c| c.unwrap_or(0)).collect();
            let j = structure.config_of(node, &full);
            vf.fully_observed[j * r + full[node]] += 1;
            vf.row_observed_total[j] += 1;
            continue;
        }
        for (j, values) in configs.iter().enumerate() {
            let parents_agree = parents
                .iter()
                .zip(values)
                .all(|(&p, &v)| record[p].map_or(true, |o| o == v));
            if !parents_agree {
                continue;
            }
            for k in 0..r {
                match record[node] {
                    Some(c) if c == k => vf.completable_to_jk[j * r + k] += 1,
                    Some(_) => vf.completable_to_j_not_k[j * r + k] += 1,
                    None => {
                        // r ≥ 2, so some h ≠ k is always available
                        vf.completable_to_jk[j * r + k] += 1;
                        vf.completable_to_j_not_k[j * r + k] += 1;
                    }
                }
            }
        }
    }
    vf
}

/// Lower and upper bound tables, one pair per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBounds {
    lower: Vec<Table>,
    upper: Vec<Table>,
}

impl ParameterBounds {
    /// Checks shapes and 0 ≤ min ≤ max ≤ 1.
    pub fn new(structure: &NetworkStructure, lower: Vec<Table>, upper: Vec<Table>) -> Result<Self> {
        ParameterSet::from_raw(structure, lower.clone())?;
        ParameterSet::from_raw(structure, upper.clone())?;
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            for j in 0..lo.rows() {
                for k in 0..lo.cols() {
                    let (a, b) = (lo.get(j, k), hi.get(j, k));
                    if !(0.0 <= a && a <= b && b <= 1.0) {
                        return Err(Error::CorruptBounds {
                            node: structure.name(i).to_string(),
                            row: j,
                            col: k,
                            min: a,
                            max: b,
                        });
                    }
                }
            }
        }
        Ok(ParameterBounds { lower, upper })
    }

    /// Wraps tables without any checks. Consumers such as
    /// [`regularize`](crate::learn::regularize) re-validate.
    pub fn from_raw(lower: Vec<Table>, upper: Vec<Table>) -> Self {
        ParameterBounds { lower, upper }
    }

    pub fn lower(&self, i: usize) -> &Table {
        &self.lower[i]
    }

    pub fn upper(&self, i: usize) -> &Table {
        &self.upper[i]
    }

    pub fn min(&self, i: usize, j: usize, k: usize) -> f64 {
        self.lower[i].get(j, k)
    }

    pub fn max(&self, i: usize, j: usize, k: usize) -> f64 {
        self.upper[i].get(j, k)
    }

    pub fn node_count(&self) -> usize {
        self.lower.len()
    }

    /// Number of entries of `params` outside their interval.
    pub fn violations(&self, params: &ParameterSet) -> usize {
        params
            .tables()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .flat_map(|(t, (lo, hi))| {
                t.values()
                    .iter()
                    .zip(lo.values().iter().zip(hi.values()))
            })
            .filter(|(v, (lo, hi))| *v < *lo || *v > *hi)
            .count()
    }
}

/// Bounds for every parameter of the network under a Dirichlet prior.
pub fn compute_bounds(
    structure: &NetworkStructure,
    dataset: &Dataset,
    prior: &PriorSpec,
) -> Result<ParameterBounds> {
    let mut lower = Vec::with_capacity(structure.len());
    let mut upper = Vec::with_capacity(structure.len());
    for i in 0..structure.len() {
        let vf = virtual_frequencies(structure, dataset, i);
        let (q, r) = (vf.rows(), vf.cols());
        let mut lo = Table::zeros(q, r);
        let mut hi = Table::zeros(q, r);
        for j in 0..q {
            let alpha_row = prior.alpha_row(i, j);
            if !(alpha_row > 0.0) {
                return Err(Error::PriorDomain(format!(
                    "node `{}` row {j} has zero prior mass",
                    structure.name(i)
                )));
            }
            let base = alpha_row + vf.row_observed_total(j) as f64;
            for k in 0..r {
                let alpha = prior.alpha(i, j, k);
                let n = vf.fully_observed(j, k) as f64;
                let n_min = vf.completable_to_j_not_k(j, k) as f64;
                let n_max = vf.completable_to_jk(j, k) as f64;
                lo.set(j, k, posterior_mean(alpha, n, base + n_min));
                hi.set(j, k, posterior_mean(alpha, n + n_max, base + n_max));
            }
        }
        lower.push(lo);
        upper.push(hi);
    }
    ParameterBounds::new(structure, lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{count_complete, posterior_mean_estimate};
    use crate::model::fixture_ab;

    fn d4() -> Dataset {
        Dataset::from_records(vec![
            vec![Some(0), Some(0)],
            vec![Some(0), None],
            vec![None, Some(1)],
            vec![Some(1), Some(1)],
        ])
    }

    #[test]
    fn consistency_classes() {
        let (s, _) = fixture_ab();
        let d = d4();
        let cls = |l: usize| family_consistency(&s, &d.records()[l], 1, 0, Some(0)).unwrap();
        assert_eq!(cls(1), FamilyMatch::Completable);
        assert_eq!(cls(0), FamilyMatch::FullyObservedMatch);
        assert_eq!(cls(3), FamilyMatch::Inconsistent);
        assert_eq!(cls(2), FamilyMatch::Inconsistent);
        assert_eq!(
            family_consistency(&s, &d.records()[2], 1, 0, None).unwrap(),
            FamilyMatch::Completable
        );
    }

    #[test]
    fn d4_frequencies() {
        let (s, _) = fixture_ab();
        let vf = virtual_frequencies(&s, &d4(), 1);
        assert_eq!(vf.fully_observed(0, 0), 1);
        assert_eq!(vf.completable_to_jk(0, 0), 1);
        assert_eq!(vf.completable_to_j_not_k(0, 0), 2);
        assert_eq!(vf.row_observed_total(0), 1);
    }

    #[test]
    fn complete_data_has_no_virtual_counts() {
        let (s, _) = fixture_ab();
        let d = Dataset::from_records(vec![vec![Some(0), Some(1)], vec![Some(1), Some(1)]]);
        for i in 0..2 {
            let vf = virtual_frequencies(&s, &d, i);
            for j in 0..vf.rows() {
                for k in 0..vf.cols() {
                    assert_eq!(vf.completable_to_jk(j, k), 0);
                    assert_eq!(vf.completable_to_j_not_k(j, k), 0);
                }
            }
        }
    }

    #[test]
    fn fully_missing_record_counts_everywhere() {
        let (s, _) = fixture_ab();
        let d = Dataset::from_records(vec![vec![None, None]]);
        let vf = virtual_frequencies(&s, &d, 1);
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(vf.completable_to_jk(j, k), 1);
                assert_eq!(vf.completable_to_j_not_k(j, k), 1);
            }
        }
    }

    #[test]
    fn d4_bounds() {
        let (s, _) = fixture_ab();
        let b = compute_bounds(&s, &d4(), &PriorSpec::uniform(&s, 1.0).unwrap()).unwrap();
        assert_eq!(b.min(1, 0, 0), 0.4);
        assert_eq!(b.max(1, 0, 0), 0.75);
    }

    #[test]
    fn single_missing_record_bounds() {
        let (s, _) = fixture_ab();
        let d = Dataset::from_records(vec![vec![None, None]]);
        let b = compute_bounds(&s, &d, &PriorSpec::uniform(&s, 1.0).unwrap()).unwrap();
        assert!((b.min(1, 0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((b.max(1, 0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.min(0, 0, 0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn complete_data_bounds_equal_posterior_mean_exactly() {
        let (s, _) = fixture_ab();
        let d = Dataset::from_records(vec![
            vec![Some(0), Some(1)],
            vec![Some(1), Some(1)],
            vec![Some(0), Some(0)],
        ]);
        let prior = PriorSpec::uniform(&s, 1.0).unwrap();
        let b = compute_bounds(&s, &d, &prior).unwrap();
        let pm = posterior_mean_estimate(&s, &count_complete(&s, &d).unwrap(), &prior).unwrap();
        for i in 0..2 {
            assert_eq!(b.lower(i), pm.table(i));
            assert_eq!(b.upper(i), pm.table(i));
        }
    }

    #[test]
    fn zero_prior_row_rejected() {
        let (s, _) = fixture_ab();
        assert!(matches!(
            compute_bounds(&s, &d4(), &PriorSpec::uniform(&s, 0.0).unwrap()),
            Err(Error::PriorDomain(_))
        ));
    }

    #[test]
    fn corrupt_bounds_rejected() {
        let (s, _) = fixture_ab();
        let lo = vec![Table::filled(1, 2, 0.6), Table::filled(2, 2, 0.1)];
        let hi = vec![Table::filled(1, 2, 0.5), Table::filled(2, 2, 0.9)];
        assert!(matches!(
            ParameterBounds::new(&s, lo, hi),
            Err(Error::CorruptBounds { .. })
        ));
    }
}
