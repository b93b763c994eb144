//! Exact inference on discrete networks.
//!
//! Queries run variable elimination over the evidence-reduced CPT factors,
//! restricted to the ancestors of the query and evidence nodes. The E-step
//! entry point [`record_posteriors`] enumerates the missing cells directly
//! when their joint state space is small, which is the common case for a
//! partially observed record, and falls back to elimination otherwise.

mod factor;

pub use factor::Factor;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::model::{NetworkStructure, ParameterSet, Table};

use factor::advance;

/// Observed state index or `None` for a missing cell, one entry per node.
pub type Evidence = [Option<usize>];

/// Largest missing-cell state space handled by direct enumeration in
/// [`record_posteriors`].
pub const ENUMERATION_LIMIT: usize = 4096;

pub fn check_evidence(structure: &NetworkStructure, evidence: &Evidence) -> Result<()> {
    if evidence.len() != structure.len() {
        return Err(Error::Shape(format!(
            "evidence has {} cells for {} nodes",
            evidence.len(),
            structure.len()
        )));
    }
    for (i, cell) in evidence.iter().enumerate() {
        if let Some(v) = *cell {
            if v >= structure.cardinality(i) {
                return Err(Error::Index {
                    node: structure.name(i).to_string(),
                    detail: format!("observed state {v} not below {}", structure.cardinality(i)),
                });
            }
        }
    }
    Ok(())
}

/// Posterior over a set of target nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub targets: Vec<usize>,
    pub cards: Vec<usize>,
    /// Normalized table over the targets, last target fastest.
    pub table: Vec<f64>,
    pub evidence_probability: f64,
}

impl Marginal {
    pub fn get(&self, states: &[usize]) -> f64 {
        let idx = states
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&s, &c)| acc * c + s);
        self.table[idx]
    }
}

/// P(targets | evidence) and P(evidence). A target may also be observed, in
/// which case its posterior is a point mass.
pub fn marginal(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
    targets: &[usize],
) -> Result<Marginal> {
    check_evidence(structure, evidence)?;
    check_targets(structure, targets)?;
    let joint = query(structure, params, evidence, targets);
    let cards: Vec<usize> = targets.iter().map(|&t| structure.cardinality(t)).collect();
    let pe: f64 = joint.iter().sum();
    if !(pe > 0.0) {
        return Err(Error::ZeroProbabilityEvidence { record: None });
    }
    Ok(Marginal {
        targets: targets.to_vec(),
        cards,
        table: joint.into_iter().map(|v| v / pe).collect(),
        evidence_probability: pe,
    })
}

/// q_i × r_i table of P(X_i = k, pa(X_i) = j | evidence).
pub fn family_posterior(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
    node: usize,
) -> Result<Table> {
    if node >= structure.len() {
        return Err(Error::Shape(format!("no node with index {node}")));
    }
    let mut targets = structure.parents(node).to_vec();
    targets.push(node);
    let m = marginal(structure, params, evidence, &targets)?;
    Ok(family_table(structure, node, m.table))
}

fn family_table(structure: &NetworkStructure, node: usize, values: Vec<f64>) -> Table {
    let r = structure.cardinality(node);
    let rows = values.chunks(r).map(<[f64]>::to_vec).collect();
    Table::from_rows(rows).expect("family table is rectangular")
}

/// P(evidence); 1 when nothing is observed.
pub fn evidence_probability(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
) -> Result<f64> {
    check_evidence(structure, evidence)?;
    Ok(query(structure, params, evidence, &[])[0])
}

/// Log-probability of the observed cells of one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordLikelihood {
    /// `f64::NEG_INFINITY` when the observed cells are impossible.
    pub log_prob: f64,
    pub impossible: bool,
}

pub fn record_log_likelihood(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
) -> Result<RecordLikelihood> {
    let pe = evidence_probability(structure, params, evidence)?;
    Ok(likelihood_from(pe))
}

/// Observed-data log-likelihood of a whole dataset, summed in record order.
/// `-inf` as soon as one record is impossible.
pub fn dataset_log_likelihood(
    structure: &NetworkStructure,
    params: &ParameterSet,
    dataset: &Dataset,
) -> Result<f64> {
    params.validate(structure)?;
    let mut total = 0.0;
    for record in dataset.records() {
        let ll = record_log_likelihood(structure, params, record)?;
        if ll.impossible {
            return Ok(f64::NEG_INFINITY);
        }
        total += ll.log_prob;
    }
    Ok(total)
}

pub(crate) fn likelihood_from(pe: f64) -> RecordLikelihood {
    if pe > 0.0 {
        RecordLikelihood {
            log_prob: pe.ln(),
            impossible: false,
        }
    } else {
        RecordLikelihood {
            log_prob: f64::NEG_INFINITY,
            impossible: true,
        }
    }
}

/// Everything the E-step needs from one record: P(evidence) and the family
/// posterior of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordPosterior {
    pub evidence_probability: f64,
    pub families: Vec<Table>,
}

pub fn record_posteriors(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
) -> Result<RecordPosterior> {
    check_evidence(structure, evidence)?;
    let missing: Vec<usize> = (0..structure.len())
        .filter(|&i| evidence[i].is_none())
        .collect();
    let space = missing
        .iter()
        .try_fold(1usize, |acc, &i| acc.checked_mul(structure.cardinality(i)));
    match space {
        Some(size) if size <= ENUMERATION_LIMIT => enumerate_missing(structure, params, evidence, &missing),
        _ => {
            let pe = evidence_probability(structure, params, evidence)?;
            if !(pe > 0.0) {
                return Err(Error::ZeroProbabilityEvidence { record: None });
            }
            let families = (0..structure.len())
                .map(|i| family_posterior(structure, params, evidence, i))
                .collect::<Result<_>>()?;
            Ok(RecordPosterior {
                evidence_probability: pe,
                families,
            })
        }
    }
}

fn enumerate_missing(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
    missing: &[usize],
) -> Result<RecordPosterior> {
    let n = structure.len();
    let mut assignment: Vec<usize> = evidence.iter().map(|c| c.unwrap_or(0)).collect();
    let cards: Vec<usize> = missing.iter().map(|&i| structure.cardinality(i)).collect();
    let mut digits = vec![0; missing.len()];
    let mut families: Vec<Table> = (0..n)
        .map(|i| Table::zeros(structure.parent_configs(i), structure.cardinality(i)))
        .collect();
    let mut pe = 0.0;
    loop {
        for (&i, &d) in missing.iter().zip(&digits) {
            assignment[i] = d;
        }
        let mut w = 1.0;
        let mut cells = Vec::with_capacity(n);
        for i in 0..n {
            let j = structure.config_of(i, &assignment);
            w *= params.theta(i, j, assignment[i]);
            cells.push(j);
        }
        if w > 0.0 {
            pe += w;
            for (i, &j) in cells.iter().enumerate() {
                families[i].add(j, assignment[i], w);
            }
        }
        if !advance(&mut digits, &cards) {
            break;
        }
    }
    if !(pe > 0.0) {
        return Err(Error::ZeroProbabilityEvidence { record: None });
    }
    if missing.is_empty() {
        // a fully observed record contributes exactly one unit of mass
        for (i, t) in families.iter_mut().enumerate() {
            let j = structure.config_of(i, &assignment);
            t.set(j, assignment[i], 1.0);
        }
    } else {
        for t in &mut families {
            for v in t.values_mut() {
                *v /= pe;
            }
        }
    }
    Ok(RecordPosterior {
        evidence_probability: pe,
        families,
    })
}

fn check_targets(structure: &NetworkStructure, targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Config("query targets must be nonempty".into()));
    }
    for (n, &t) in targets.iter().enumerate() {
        if t >= structure.len() {
            return Err(Error::Shape(format!("no node with index {t}")));
        }
        if targets[..n].contains(&t) {
            return Err(Error::Config(format!(
                "target `{}` listed twice",
                structure.name(t)
            )));
        }
    }
    Ok(())
}

/// Unnormalized P(targets, evidence) as a dense table over `targets`, last
/// target fastest. With no targets the result is the single value P(evidence).
fn query(
    structure: &NetworkStructure,
    params: &ParameterSet,
    evidence: &Evidence,
    targets: &[usize],
) -> Vec<f64> {
    let n = structure.len();

    // Only ancestors of query and evidence nodes matter; everything else
    // sums to one and is dropped.
    let mut relevant = vec![false; n];
    let mut stack: Vec<usize> = targets
        .iter()
        .copied()
        .chain((0..n).filter(|&i| evidence[i].is_some()))
        .collect();
    while let Some(v) = stack.pop() {
        if !relevant[v] {
            relevant[v] = true;
            stack.extend_from_slice(structure.parents(v));
        }
    }

    let mut factors: Vec<Factor> = Vec::new();
    for i in (0..n).filter(|&i| relevant[i]) {
        let mut scope = structure.parents(i).to_vec();
        scope.push(i);
        let cards = scope.iter().map(|&v| structure.cardinality(v)).collect();
        let mut f = Factor::new(scope, cards, params.table(i).values().to_vec());
        for v in f.scope().to_vec() {
            if let Some(s) = evidence[v] {
                f = f.reduce(v, s);
            }
        }
        factors.push(f);
    }

    let free_targets: Vec<usize> = targets
        .iter()
        .copied()
        .filter(|&t| evidence[t].is_none())
        .collect();
    let mut hidden: Vec<usize> = (0..n)
        .filter(|&i| relevant[i] && evidence[i].is_none() && !targets.contains(&i))
        .collect();

    // interaction graph of the reduced factors (the moral graph with
    // evidence nodes removed)
    let mut adjacent = vec![vec![false; n]; n];
    for f in &factors {
        for &a in f.scope() {
            for &b in f.scope() {
                if a != b {
                    adjacent[a][b] = true;
                }
            }
        }
    }

    while !hidden.is_empty() {
        // min-degree, ties by declaration order
        let (pos, &var) = hidden
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| (adjacent[v].iter().filter(|&&e| e).count(), v))
            .expect("nonempty");
        hidden.remove(pos);

        let neighbours: Vec<usize> = (0..n).filter(|&u| adjacent[var][u]).collect();
        for &a in &neighbours {
            adjacent[a][var] = false;
            adjacent[var][a] = false;
            for &b in &neighbours {
                if a != b {
                    adjacent[a][b] = true;
                }
            }
        }

        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(var));
        factors = without;
        let merged = with
            .iter()
            .fold(Factor::scalar(1.0), |acc, f| acc.product(f));
        factors.push(merged.sum_out(var));
    }

    let result = factors
        .iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(f))
        .reorder(&free_targets);
    let free_values = result.into_values();

    if free_targets.len() == targets.len() {
        return free_values;
    }

    // Spread back over the full target tuple; observed targets are point
    // masses at their evidence state.
    let cards: Vec<usize> = targets.iter().map(|&t| structure.cardinality(t)).collect();
    let free_cards: Vec<usize> = free_targets
        .iter()
        .map(|&t| structure.cardinality(t))
        .collect();
    let mut out = vec![0.0; cards.iter().product()];
    let mut digits = vec![0; targets.len()];
    loop {
        let consistent = targets
            .iter()
            .zip(&digits)
            .all(|(&t, &d)| evidence[t].map_or(true, |s| s == d));
        if consistent {
            let free_idx = targets
                .iter()
                .zip(&digits)
                .filter(|(&t, _)| evidence[t].is_none())
                .zip(&free_cards)
                .fold(0, |acc, ((_, &d), &c)| acc * c + d);
            let idx = digits.iter().zip(&cards).fold(0, |acc, (&d, &c)| acc * c + d);
            out[idx] = free_values[free_idx];
        }
        if !advance(&mut digits, &cards) {
            break;
        }
    }
    out
}
