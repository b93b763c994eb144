use super::Dataset;
use crate::error::{Error, Result};
use crate::model::{NetworkStructure, ParameterSet};
use crate::rng::{domain, SplitMix64};

/// Draws `n` complete records ancestrally. Record `l` uses the stream
/// `(seed, SAMPLE, l)` and consumes one uniform per node in topological
/// order, choosing the first state whose cumulative probability exceeds it.
pub fn forward_sample(
    structure: &NetworkStructure,
    params: &ParameterSet,
    n: usize,
    seed: u64,
) -> Dataset {
    let records = (0..n)
        .map(|l| {
            let mut rng = SplitMix64::stream(seed, domain::SAMPLE, l as u64);
            let mut full = vec![0usize; structure.len()];
            for &i in structure.topological_order() {
                let row = params.table(i).row(structure.config_of(i, &full));
                full[i] = pick(row, rng.next_f64());
            }
            full.into_iter().map(Some).collect()
        })
        .collect();
    Dataset::from_records(records)
}

fn pick(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the final cumulative sum
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Hides each cell independently with probability `rate`. Record `l` uses
/// the stream `(seed, MASK, l)`, one uniform per cell in column order,
/// drawn for every cell whether or not it is already missing.
pub fn mask_mcar(dataset: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Domain(format!("mask rate {rate} is not in [0, 1]")));
    }
    let mut out = dataset.clone();
    for (l, record) in out.records_mut().iter_mut().enumerate() {
        let mut rng = SplitMix64::stream(seed, domain::MASK, l as u64);
        for cell in record.iter_mut() {
            if rng.next_f64() < rate {
                *cell = None;
            }
        }
    }
    Ok(out)
}

/// Fraction of missing cells; 0 for an empty dataset.
pub fn missingness_rate(dataset: &Dataset) -> f64 {
    let total = dataset.total_cells();
    if total == 0 {
        0.0
    } else {
        dataset.missing_cells() as f64 / total as f64
    }
}
