//! Sufficient statistics and the closed-form CPT estimators: relative
//! frequency (ML), Dirichlet posterior mode (MAP) and Dirichlet posterior
//! mean.

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::model::{NetworkStructure, ParameterSet, PriorSpec, Table};

/// Counts N_{i,j,k}, one q_i × r_i table per node. Integer-valued for
/// complete data, fractional after an E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStatistics {
    counts: Vec<Table>,
}

impl SufficientStatistics {
    pub fn zeros(structure: &NetworkStructure) -> Self {
        SufficientStatistics {
            counts: (0..structure.len())
                .map(|i| Table::zeros(structure.parent_configs(i), structure.cardinality(i)))
                .collect(),
        }
    }

    pub fn from_tables(structure: &NetworkStructure, counts: Vec<Table>) -> Result<Self> {
        let zero = Self::zeros(structure);
        if counts.len() != zero.counts.len()
            || counts
                .iter()
                .zip(&zero.counts)
                .any(|(a, b)| a.rows() != b.rows() || a.cols() != b.cols())
        {
            return Err(Error::Shape("count tables do not match the network".into()));
        }
        if counts.iter().flat_map(|t| t.values()).any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("counts must be nonnegative".into()));
        }
        Ok(SufficientStatistics { counts })
    }

    pub fn table(&self, i: usize) -> &Table {
        &self.counts[i]
    }

    pub(crate) fn table_mut(&mut self, i: usize) -> &mut Table {
        &mut self.counts[i]
    }

    pub fn tables(&self) -> &[Table] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.counts[i].get(j, k)
    }

    /// N_{i,j} = Σ_k N_{i,j,k}
    pub fn row_total(&self, i: usize, j: usize) -> f64 {
        self.counts[i].row(j).iter().sum()
    }

    /// Σ_{j,k} N_{i,j,k}
    pub fn node_total(&self, i: usize) -> f64 {
        self.counts[i].sum()
    }
}

/// Counts family events in a fully observed dataset.
pub fn count_complete(
    structure: &NetworkStructure,
    dataset: &Dataset,
) -> Result<SufficientStatistics> {
    let mut stats = SufficientStatistics::zeros(structure);
    let mut full = vec![0; structure.len()];
    for (l, record) in dataset.records().iter().enumerate() {
        for (i, cell) in record.iter().enumerate() {
            full[i] = cell.ok_or_else(|| Error::IncompleteData {
                record: l + 1,
                node: structure.name(i).to_string(),
            })?;
        }
        for i in 0..structure.len() {
            stats.counts[i].add(structure.config_of(i, &full), full[i], 1.0);
        }
    }
    Ok(stats)
}

/// An estimated parameter set along with the rows that had no support and
/// were set uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub params: ParameterSet,
    /// (node, parent configuration) pairs filled with the uniform fallback.
    pub fallback_rows: Vec<(usize, usize)>,
}

fn normalize_or_uniform(
    structure: &NetworkStructure,
    mut weight: impl FnMut(usize, usize, usize) -> f64,
) -> Estimate {
    let mut fallback_rows = Vec::new();
    let tables = (0..structure.len())
        .map(|i| {
            let (q, r) = (structure.parent_configs(i), structure.cardinality(i));
            let mut t = Table::zeros(q, r);
            for j in 0..q {
                let row: Vec<f64> = (0..r).map(|k| weight(i, j, k)).collect();
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    for (k, w) in row.into_iter().enumerate() {
                        t.set(j, k, w / total);
                    }
                } else {
                    t.row_mut(j).fill(1.0 / r as f64);
                    fallback_rows.push((i, j));
                }
            }
            t
        })
        .collect();
    Estimate {
        params: ParameterSet::from_raw(structure, tables).expect("shapes follow the structure"),
        fallback_rows,
    }
}

/// θ_{i,j,k} = N_{i,j,k} / N_{i,j}; zero-total rows become uniform and flagged.
pub fn ml_estimate(structure: &NetworkStructure, stats: &SufficientStatistics) -> Estimate {
    normalize_or_uniform(structure, |i, j, k| stats.get(i, j, k))
}

/// Dirichlet posterior mode, (N + α − 1) / Σ_k (N + α − 1). Requires α ≥ 1.
pub fn map_estimate(
    structure: &NetworkStructure,
    stats: &SufficientStatistics,
    prior: &PriorSpec,
) -> Result<Estimate> {
    let lowest = prior.min_alpha();
    if lowest < 1.0 {
        return Err(Error::PriorDomain(format!(
            "MAP estimation needs every alpha >= 1, found {lowest}"
        )));
    }
    Ok(normalize_or_uniform(structure, |i, j, k| {
        stats.get(i, j, k) + (prior.alpha(i, j, k) - 1.0)
    }))
}

/// Dirichlet posterior mean, (α_{i,j,k} + N_{i,j,k}) / (α_{i,j} + N_{i,j}).
pub fn posterior_mean_estimate(
    structure: &NetworkStructure,
    stats: &SufficientStatistics,
    prior: &PriorSpec,
) -> Result<ParameterSet> {
    let mut tables = Vec::with_capacity(structure.len());
    for i in 0..structure.len() {
        let (q, r) = (structure.parent_configs(i), structure.cardinality(i));
        let mut t = Table::zeros(q, r);
        for j in 0..q {
            let denom = prior.alpha_row(i, j) + stats.row_total(i, j);
            if !(denom > 0.0) {
                return Err(Error::PriorDomain(format!(
                    "node `{}` row {j} has zero prior mass and no data",
                    structure.name(i)
                )));
            }
            for k in 0..r {
                t.set(j, k, posterior_mean(prior.alpha(i, j, k), stats.get(i, j, k), denom));
            }
        }
        tables.push(t);
    }
    ParameterSet::from_raw(structure, tables)
}

/// Shared with the bound computation so that complete-data bounds coincide
/// bit for bit with this estimator.
#[inline]
pub(crate) fn posterior_mean(alpha: f64, count: f64, denom: f64) -> f64 {
    (alpha + count) / denom
}
