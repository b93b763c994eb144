use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state index out of range for node `{node}`: {detail}")]
    Index { node: String, detail: String },

    #[error("assignment is missing a value for node `{node}`")]
    MissingValue { node: String },

    #[error("evidence has probability zero{}", record_suffix(*.record))]
    ZeroProbabilityEvidence { record: Option<usize> },

    #[error("record {record} has a missing value for node `{node}`; complete data required")]
    IncompleteData { record: usize, node: String },

    #[error("prior out of domain: {0}")]
    PriorDomain(String),

    #[error("corrupt bounds for node `{node}` row {row} column {col}: min {min} > max {max}")]
    CorruptBounds {
        node: String,
        row: usize,
        col: usize,
        min: f64,
        max: f64,
    },

    #[error("row {row} of node `{node}` has zero sum and cannot be normalized")]
    DegenerateRow { node: String, row: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("node `{node}` lists unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },

    #[error("node `{node}`: {message}")]
    Table { node: String, message: String },

    #[error("row {row} of node `{node}` sums to {sum}, outside renormalization tolerance")]
    RowSum { node: String, row: usize, sum: f64 },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("missing column for node `{0}`")]
    MissingColumn(String),

    #[error("record {record}: unknown state `{label}` for node `{node}`")]
    UnknownState {
        record: usize,
        node: String,
        label: String,
    },

    #[error("record {record}: expected {expected} cells, found {found}")]
    RaggedRow {
        record: usize,
        expected: usize,
        found: usize,
    },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("capacity exceeded: {count} exceeds limit {limit}")]
    Capacity { count: u128, limit: u128 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn record_suffix(record: Option<usize>) -> String {
    match record {
        Some(r) => format!(" (record {r})"),
        None => String::new(),
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
