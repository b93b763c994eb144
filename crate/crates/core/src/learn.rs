//! EM and threshold EM for CPT learning from incomplete data.
//!
//! One threshold-EM iteration is: expectation, maximization, clip every
//! entry into its `[min, max]` interval, renormalize rows. The normalized
//! parameters feed the next expectation. Plain EM skips the middle two
//! steps.

use rayon::prelude::*;

use crate::bounds::ParameterBounds;
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{ml_estimate, posterior_mean_estimate, Estimate, SufficientStatistics};
use crate::inference::{record_posteriors, RecordPosterior};
use crate::model::{NetworkStructure, ParameterSet, PriorSpec, Table};
use crate::rng::{domain, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Em,
    ThresholdEm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Each row drawn uniformly from the simplex, from the config seed.
    RandomSimplex,
    Uniform,
    Provided(ParameterSet),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MStep {
    Ml,
    PosteriorMean(PriorSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub algorithm: Algorithm,
    pub max_iterations: usize,
    pub param_tolerance: f64,
    pub init: Init,
    pub seed: u64,
    pub m_step: MStep,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            algorithm: Algorithm::Em,
            max_iterations: 200,
            param_tolerance: 1e-6,
            init: Init::RandomSimplex,
            seed: 0,
            m_step: MStep::Ml,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.param_tolerance > 0.0) {
            return Err(Error::Config("param_tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Σ_l log P(observed cells of record l) under this iteration's output.
    pub observed_loglik: f64,
    /// Σ N log θ with this iteration's expected counts and output.
    pub expected_loglik: f64,
    /// Largest entry change from the previous parameters.
    pub max_param_delta: f64,
    /// Entries changed by clipping (threshold EM only).
    pub clip_count: usize,
    /// Entries outside the bounds after normalization (0 without bounds).
    pub post_norm_violations: usize,
    /// Records with zero probability skipped by this iteration's E-step.
    pub skipped_records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub params: ParameterSet,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Observed-data log-likelihood of the initial parameters.
    pub initial_loglik: f64,
}

impl LearnResult {
    /// Observed-data log-likelihood of the returned parameters.
    pub fn final_loglik(&self) -> f64 {
        self.trace
            .last()
            .map_or(self.initial_loglik, |r| r.observed_loglik)
    }
}

/// Parameters at the end of one iteration, before and after the threshold
/// steps. Handed to the observer of [`run_with_observer`].
#[derive(Debug)]
pub struct IterationState<'a> {
    pub iteration: usize,
    pub maximized: &'a ParameterSet,
    /// Clipped, not yet normalized. `None` for plain EM.
    pub regularized: Option<&'a ParameterSet>,
    pub params: &'a ParameterSet,
}

pub fn init_params(structure: &NetworkStructure, config: &LearnConfig) -> Result<ParameterSet> {
    match &config.init {
        Init::Uniform => Ok(ParameterSet::uniform(structure)),
        Init::Provided(p) => {
            p.validate(structure)?;
            Ok(p.clone())
        }
        Init::RandomSimplex => {
            let mut rng = SplitMix64::stream(config.seed, domain::INIT, 0);
            let tables = (0..structure.len())
                .map(|i| {
                    let rows = (0..structure.parent_configs(i))
                        .map(|_| rng.simplex(structure.cardinality(i)))
                        .collect();
                    Table::from_rows(rows)
                })
                .collect::<Result<Vec<_>>>()?;
            ParameterSet::new(structure, tables)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EStepResult {
    pub stats: SufficientStatistics,
    pub skipped: usize,
    /// Observed-data log-likelihood of the parameters the step used;
    /// `-inf` when any record was skipped.
    pub observed_loglik: f64,
}

/// Expected counts E[N_{i,j,k}] summed over records in input order.
pub fn e_step(
    structure: &NetworkStructure,
    params: &ParameterSet,
    dataset: &Dataset,
) -> Result<EStepResult> {
    params.validate(structure)?;
    let posteriors: Vec<Result<Option<RecordPosterior>>> = dataset
        .records()
        .par_iter()
        .map(|record| match record_posteriors(structure, params, record) {
            Ok(p) => Ok(Some(p)),
            Err(Error::ZeroProbabilityEvidence { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();

    let mut stats = SufficientStatistics::zeros(structure);
    let mut skipped = 0;
    let mut loglik = 0.0;
    for p in posteriors {
        match p? {
            Some(post) => {
                loglik += post.evidence_probability.ln();
                for (i, family) in post.families.iter().enumerate() {
                    let acc = stats.table_mut(i);
                    for (a, v) in acc.values_mut().iter_mut().zip(family.values()) {
                        *a += v;
                    }
                }
            }
            None => skipped += 1,
        }
    }
    Ok(EStepResult {
        stats,
        skipped,
        observed_loglik: if skipped > 0 { f64::NEG_INFINITY } else { loglik },
    })
}

pub fn m_step(
    structure: &NetworkStructure,
    stats: &SufficientStatistics,
    m_step: &MStep,
) -> Result<Estimate> {
    match m_step {
        MStep::Ml => Ok(ml_estimate(structure, stats)),
        MStep::PosteriorMean(prior) => Ok(Estimate {
            params: posterior_mean_estimate(structure, stats, prior)?,
            fallback_rows: Vec::new(),
        }),
    }
}

/// Clips every entry into its interval. Rows may no longer sum to one.
/// Returns the clipped parameters and the number of entries changed.
pub fn regularize(
    structure: &NetworkStructure,
    params: &ParameterSet,
    bounds: &ParameterBounds,
) -> Result<(ParameterSet, usize)> {
    let mut clips = 0;
    let mut tables = Vec::with_capacity(structure.len());
    if bounds.node_count() != structure.len() {
        return Err(Error::Shape("bounds do not match the network".into()));
    }
    for i in 0..structure.len() {
        let (lo, hi) = (bounds.lower(i), bounds.upper(i));
        let mut t = params.table(i).clone();
        if lo.rows() != t.rows() || lo.cols() != t.cols() || hi.rows() != t.rows() || hi.cols() != t.cols() {
            return Err(Error::Shape(format!(
                "bounds for node `{}` do not match its CPT",
                structure.name(i)
            )));
        }
        for j in 0..t.rows() {
            for k in 0..t.cols() {
                let (min, max) = (lo.get(j, k), hi.get(j, k));
                if min > max {
                    return Err(Error::CorruptBounds {
                        node: structure.name(i).to_string(),
                        row: j,
                        col: k,
                        min,
                        max,
                    });
                }
                let v = t.get(j, k);
                let clipped = if v < min {
                    min
                } else if v > max {
                    max
                } else {
                    v
                };
                if clipped != v {
                    clips += 1;
                    t.set(j, k, clipped);
                }
            }
        }
        tables.push(t);
    }
    Ok((ParameterSet::from_raw(structure, tables)?, clips))
}

/// Divides every entry by its row sum.
pub fn normalize_rows(structure: &NetworkStructure, params: &ParameterSet) -> Result<ParameterSet> {
    let mut tables = Vec::with_capacity(structure.len());
    for i in 0..structure.len() {
        let mut t = params.table(i).clone();
        for j in 0..t.rows() {
            let row = t.row_mut(j);
            let sum: f64 = row.iter().sum();
            if !(sum > 0.0) {
                return Err(Error::DegenerateRow {
                    node: structure.name(i).to_string(),
                    row: j,
                });
            }
            if sum != 1.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
        tables.push(t);
    }
    ParameterSet::from_raw(structure, tables)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteLogLik {
    /// `-inf` when a positive count meets a zero parameter.
    pub value: f64,
    pub impossible: bool,
}

/// Σ_{i,j,k} N_{i,j,k} log θ_{i,j,k}, skipping zero counts.
pub fn expected_complete_loglik(stats: &SufficientStatistics, params: &ParameterSet) -> CompleteLogLik {
    let mut value = 0.0;
    for (n, theta) in stats.tables().iter().zip(params.tables()) {
        for (&c, &t) in n.values().iter().zip(theta.values()) {
            if c > 0.0 {
                if t > 0.0 {
                    value += c * t.ln();
                } else {
                    return CompleteLogLik {
                        value: f64::NEG_INFINITY,
                        impossible: true,
                    };
                }
            }
        }
    }
    CompleteLogLik {
        value,
        impossible: false,
    }
}

pub fn run(
    structure: &NetworkStructure,
    dataset: &Dataset,
    config: &LearnConfig,
    bounds: Option<&ParameterBounds>,
) -> Result<LearnResult> {
    run_with_observer(structure, dataset, config, bounds, |_| {})
}

/// [`run`], calling `observer` at the end of every iteration.
///
/// Stops once two successive estimates differ by less than the tolerance
/// in every entry. The initial parameters are not an estimate, so the
/// earliest possible stop is iteration 2.
pub fn run_with_observer(
    structure: &NetworkStructure,
    dataset: &Dataset,
    config: &LearnConfig,
    bounds: Option<&ParameterBounds>,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<LearnResult> {
    config.validate()?;
    if config.algorithm == Algorithm::ThresholdEm && bounds.is_none() {
        return Err(Error::Config("threshold EM needs parameter bounds".into()));
    }
    let mut current = init_params(structure, config)?;
    let mut estep = e_step(structure, &current, dataset)?;
    let initial_loglik = estep.observed_loglik;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_iterations {
        let maximized = m_step(structure, &estep.stats, &config.m_step)?.params;
        let mut clip_count = 0;
        let mut regularized = None;
        let next = match (config.algorithm, bounds) {
            (Algorithm::ThresholdEm, Some(b)) => {
                let (clipped, clips) = regularize(structure, &maximized, b)?;
                if b.violations(&clipped) != 0 {
                    return Err(Error::Invariant(format!(
                        "iteration {iteration}: clipped parameters outside bounds"
                    )));
                }
                clip_count = clips;
                let normalized = normalize_rows(structure, &clipped)?;
                regularized = Some(clipped);
                normalized
            }
            _ => maximized.clone(),
        };

        observer(&IterationState {
            iteration,
            maximized: &maximized,
            regularized: regularized.as_ref(),
            params: &next,
        });

        let delta = next.max_abs_diff(&current);
        let expected_loglik = expected_complete_loglik(&estep.stats, &next).value;
        let skipped = estep.skipped;
        estep = e_step(structure, &next, dataset)?;
        trace.push(TraceRow {
            iteration,
            observed_loglik: estep.observed_loglik,
            expected_loglik,
            max_param_delta: delta,
            clip_count,
            post_norm_violations: bounds.map_or(0, |b| b.violations(&next)),
            skipped_records: skipped,
        });
        current = next;
        if iteration >= 2 && delta < config.param_tolerance {
            converged = true;
            break;
        }
    }

    Ok(LearnResult {
        iterations_used: trace.len(),
        params: current,
        trace,
        converged,
        initial_loglik,
    })
}
