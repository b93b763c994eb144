//! Network structure, parameter containers and the index arithmetic that
//! ties parent-value tuples to CPT rows.
//!
//! States are dense integer indices everywhere in this module; labels are
//! carried only so the I/O layer can map them back.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Row-sum tolerance for a valid [`ParameterSet`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A node as declared, before validation. Parents are indices into the
/// declaring list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<usize>,
}

impl NodeSpec {
    pub fn new<S: Into<String>>(name: S, states: &[&str], parents: &[usize]) -> Self {
        NodeSpec {
            name: name.into(),
            states: states.iter().map(|s| s.to_string()).collect(),
            parents: parents.to_vec(),
        }
    }
}

/// A single structural problem found by [`validate_network`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNode { name: String },
    DuplicateState { node: String, label: String },
    Cardinality { node: String, states: usize },
    ParentOutOfRange { node: String, parent: usize },
    DuplicateParent { node: String, parent: String },
    /// Nodes that cannot be placed in any topological order.
    Cycle { nodes: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode { name } => write!(f, "duplicate node name `{name}`"),
            Violation::DuplicateState { node, label } => {
                write!(f, "node `{node}` declares state `{label}` twice")
            }
            Violation::Cardinality { node, states } => {
                write!(f, "node `{node}` has {states} state(s); at least 2 required")
            }
            Violation::ParentOutOfRange { node, parent } => {
                write!(f, "node `{node}` references parent index {parent}, which does not exist")
            }
            Violation::DuplicateParent { node, parent } => {
                write!(f, "node `{node}` lists parent `{parent}` more than once")
            }
            Violation::Cycle { nodes } => write!(f, "cycle through nodes {}", nodes.join(", ")),
        }
    }
}

/// Checks every structural invariant and returns one entry per violation.
/// An empty list means the nodes form a valid network.
pub fn validate_network(nodes: &[NodeSpec]) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for node in nodes {
        if !seen.insert(node.name.as_str()) {
            out.push(Violation::DuplicateNode {
                name: node.name.clone(),
            });
        }
    }

    for node in nodes {
        if node.states.len() < 2 {
            out.push(Violation::Cardinality {
                node: node.name.clone(),
                states: node.states.len(),
            });
        }
        let mut labels = HashSet::new();
        for s in &node.states {
            if !labels.insert(s.as_str()) {
                out.push(Violation::DuplicateState {
                    node: node.name.clone(),
                    label: s.clone(),
                });
            }
        }
        let mut ps = HashSet::new();
        for &p in &node.parents {
            if p >= nodes.len() {
                out.push(Violation::ParentOutOfRange {
                    node: node.name.clone(),
                    parent: p,
                });
            } else if !ps.insert(p) {
                out.push(Violation::DuplicateParent {
                    node: node.name.clone(),
                    parent: nodes[p].name.clone(),
                });
            }
        }
    }

    if let Err(stuck) = topological_sort(nodes) {
        out.push(Violation::Cycle {
            nodes: stuck.into_iter().map(|i| nodes[i].name.clone()).collect(),
        });
    }
    out
}

/// Kahn's algorithm, ties broken by declaration order. On failure returns
/// the nodes that could not be ordered. Out-of-range parents are ignored.
fn topological_sort(nodes: &[NodeSpec]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let n = nodes.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (i, node) in nodes.iter().enumerate() {
        let mut uniq: Vec<usize> = node.parents.iter().copied().filter(|&p| p < n).collect();
        uniq.sort_unstable();
        uniq.dedup();
        for p in uniq {
            indegree[i] += 1;
            children[p].push(i);
        }
    }
    let mut ready: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_front() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push_back(c);
            }
        }
        // keep ready sorted so ties resolve by declaration order
        ready.make_contiguous().sort_unstable();
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

/// A validated discrete network skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStructure {
    nodes: Vec<NodeSpec>,
    order: Vec<usize>,
    configs: Vec<usize>,
    by_name: HashMap<String, usize>,
}

impl NetworkStructure {
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Self> {
        let violations = validate_network(&nodes);
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        let order = topological_sort(&nodes).expect("validated acyclic");
        let configs = nodes
            .iter()
            .map(|n| n.parents.iter().map(|&p| nodes[p].states.len()).product())
            .collect();
        let by_name = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        Ok(NetworkStructure {
            nodes,
            order,
            configs,
            by_name,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeSpec {
        &self.nodes[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// r_i
    pub fn cardinality(&self, i: usize) -> usize {
        self.nodes[i].states.len()
    }

    /// q_i, the number of parent configurations (1 for roots).
    pub fn parent_configs(&self, i: usize) -> usize {
        self.configs[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.nodes[i].parents
    }

    /// Node indices in a topological order (parents before children).
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn state_index(&self, i: usize, label: &str) -> Option<usize> {
        self.nodes[i].states.iter().position(|s| s == label)
    }

    /// Total number of free and constrained parameters, Σ q_i r_i.
    pub fn parameter_count(&self) -> usize {
        (0..self.len())
            .map(|i| self.configs[i] * self.cardinality(i))
            .sum()
    }

    /// Maps a tuple of parent states to the row index j. Mixed radix with
    /// the last listed parent varying fastest.
    pub fn parent_config_index(&self, node: usize, parent_values: &[usize]) -> Result<usize> {
        let parents = self.parents(node);
        if parent_values.len() != parents.len() {
            return Err(Error::Index {
                node: self.name(node).to_string(),
                detail: format!(
                    "expected {} parent values, got {}",
                    parents.len(),
                    parent_values.len()
                ),
            });
        }
        let mut j = 0;
        for (&p, &v) in parents.iter().zip(parent_values) {
            let card = self.cardinality(p);
            if v >= card {
                return Err(Error::Index {
                    node: self.name(node).to_string(),
                    detail: format!(
                        "parent `{}` value {} not below cardinality {}",
                        self.name(p),
                        v,
                        card
                    ),
                });
            }
            j = j * card + v;
        }
        Ok(j)
    }

    /// Inverse of [`parent_config_index`](Self::parent_config_index).
    pub fn parent_config_values(&self, node: usize, j: usize) -> Result<Vec<usize>> {
        if j >= self.parent_configs(node) {
            return Err(Error::Index {
                node: self.name(node).to_string(),
                detail: format!(
                    "configuration {} not below {}",
                    j,
                    self.parent_configs(node)
                ),
            });
        }
        let parents = self.parents(node);
        let mut values = vec![0; parents.len()];
        let mut rest = j;
        for (slot, &p) in values.iter_mut().zip(parents).rev() {
            let card = self.cardinality(p);
            *slot = rest % card;
            rest /= card;
        }
        Ok(values)
    }

    /// Row index of `node` under a full assignment. No range checks.
    pub(crate) fn config_of(&self, node: usize, assignment: &[usize]) -> usize {
        self.parents(node)
            .iter()
            .fold(0, |j, &p| j * self.cardinality(p) + assignment[p])
    }
}

/// Dense row-major q × r matrix used for CPTs, counts, priors and bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Table {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Table {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("rows of unequal length".into()));
        }
        Ok(Table {
            rows: rows.len(),
            cols,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.cols + k]
    }

    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.values[j * self.cols + k] = v;
    }

    pub fn add(&mut self, j: usize, k: usize, v: f64) {
        self.values[j * self.cols + k] += v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(<[f64]>::to_vec).collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_shapes(structure: &NetworkStructure, tables: &[Table], what: &str) -> Result<()> {
    if tables.len() != structure.len() {
        return Err(Error::Shape(format!(
            "{what}: {} tables for {} nodes",
            tables.len(),
            structure.len()
        )));
    }
    for (i, t) in tables.iter().enumerate() {
        let (q, r) = (structure.parent_configs(i), structure.cardinality(i));
        if t.rows() != q || t.cols() != r {
            return Err(Error::Shape(format!(
                "{what}: node `{}` expects {q}x{r}, got {}x{}",
                structure.name(i),
                t.rows(),
                t.cols()
            )));
        }
    }
    Ok(())
}

/// One CPT per node, row j = parent configuration, column k = state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    tables: Vec<Table>,
}

impl ParameterSet {
    /// Builds a parameter set and checks it is row-stochastic.
    pub fn new(structure: &NetworkStructure, tables: Vec<Table>) -> Result<Self> {
        let p = Self::from_raw(structure, tables)?;
        p.validate(structure)?;
        Ok(p)
    }

    /// Builds a parameter set checking only shapes. Used for intermediate
    /// values such as clipped rows that no longer sum to one.
    pub fn from_raw(structure: &NetworkStructure, tables: Vec<Table>) -> Result<Self> {
        check_shapes(structure, &tables, "parameters")?;
        Ok(ParameterSet { tables })
    }

    pub fn uniform(structure: &NetworkStructure) -> Self {
        let tables = (0..structure.len())
            .map(|i| {
                let r = structure.cardinality(i);
                Table::filled(structure.parent_configs(i), r, 1.0 / r as f64)
            })
            .collect();
        ParameterSet { tables }
    }

    pub fn validate(&self, structure: &NetworkStructure) -> Result<()> {
        check_shapes(structure, &self.tables, "parameters")?;
        for (i, t) in self.tables.iter().enumerate() {
            for (j, row) in t.row_iter().enumerate() {
                if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::Table {
                        node: structure.name(i).to_string(),
                        message: format!("row {j} has an entry outside [0, 1]"),
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::RowSum {
                        node: structure.name(i).to_string(),
                        row: j,
                        sum,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn table(&self, i: usize) -> &Table {
        &self.tables[i]
    }

    pub fn table_mut(&mut self, i: usize) -> &mut Table {
        &mut self.tables[i]
    }

    pub fn into_tables(self) -> Vec<Table> {
        self.tables
    }

    pub fn theta(&self, i: usize, j: usize, k: usize) -> f64 {
        self.tables[i].get(j, k)
    }

    /// Largest absolute entrywise difference. Both sets must share a shape.
    pub fn max_abs_diff(&self, other: &ParameterSet) -> f64 {
        self.tables
            .iter()
            .zip(&other.tables)
            .flat_map(|(a, b)| a.values().iter().zip(b.values()))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Number of entries exactly equal to zero.
    pub fn zero_count(&self) -> usize {
        self.tables
            .iter()
            .flat_map(|t| t.values())
            .filter(|&&v| v == 0.0)
            .count()
    }
}

/// Dirichlet hyperparameters α_{i,j,k}, one table per node.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    alpha: Vec<Table>,
}

impl PriorSpec {
    pub fn new(structure: &NetworkStructure, alpha: Vec<Table>) -> Result<Self> {
        check_shapes(structure, &alpha, "prior")?;
        if alpha
            .iter()
            .flat_map(|t| t.values())
            .any(|&a| !(a >= 0.0) || !a.is_finite())
        {
            return Err(Error::PriorDomain(
                "hyperparameters must be finite and nonnegative".into(),
            ));
        }
        Ok(PriorSpec { alpha })
    }

    /// The same α for every parameter.
    pub fn uniform(structure: &NetworkStructure, alpha: f64) -> Result<Self> {
        let tables = (0..structure.len())
            .map(|i| {
                Table::filled(
                    structure.parent_configs(i),
                    structure.cardinality(i),
                    alpha,
                )
            })
            .collect();
        Self::new(structure, tables)
    }

    pub fn alpha(&self, i: usize, j: usize, k: usize) -> f64 {
        self.alpha[i].get(j, k)
    }

    /// α_{i,j} = Σ_k α_{i,j,k}
    pub fn alpha_row(&self, i: usize, j: usize) -> f64 {
        self.alpha[i].row(j).iter().sum()
    }

    pub fn table(&self, i: usize) -> &Table {
        &self.alpha[i]
    }

    pub fn min_alpha(&self) -> f64 {
        self.alpha
            .iter()
            .flat_map(|t| t.values())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Π_i θ_{i, j(x), k(x)} for a full assignment given as one state index
/// per node.
pub fn joint_probability(
    structure: &NetworkStructure,
    params: &ParameterSet,
    assignment: &[usize],
) -> Result<f64> {
    if assignment.len() < structure.len() {
        return Err(Error::MissingValue {
            node: structure.name(assignment.len()).to_string(),
        });
    }
    if assignment.len() > structure.len() {
        return Err(Error::Shape(format!(
            "assignment has {} values for {} nodes",
            assignment.len(),
            structure.len()
        )));
    }
    for (i, &v) in assignment.iter().enumerate() {
        if v >= structure.cardinality(i) {
            return Err(Error::Index {
                node: structure.name(i).to_string(),
                detail: format!("state {v} not below {}", structure.cardinality(i)),
            });
        }
    }
    Ok(joint_unchecked(structure, params, assignment))
}

pub(crate) fn joint_unchecked(
    structure: &NetworkStructure,
    params: &ParameterSet,
    assignment: &[usize],
) -> f64 {
    (0..structure.len())
        .map(|i| params.theta(i, structure.config_of(i, assignment), assignment[i]))
        .product()
}

/// Two-node network A → B with binary states, used throughout the tests
/// and shipped as `fixtures/ab.net`.
pub fn fixture_ab() -> (NetworkStructure, ParameterSet) {
    let structure = NetworkStructure::new(vec![
        NodeSpec::new("A", &["a0", "a1"], &[]),
        NodeSpec::new("B", &["b0", "b1"], &[0]),
    ])
    .expect("fixture is valid");
    let params = ParameterSet::new(
        &structure,
        vec![
            Table::from_rows(vec![vec![0.6, 0.4]]).unwrap(),
            Table::from_rows(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap(),
        ],
    )
    .expect("fixture is row-stochastic");
    (structure, params)
}
