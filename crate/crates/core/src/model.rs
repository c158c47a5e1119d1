//! Discrete Bayesian networks: a DAG plus one conditional probability table
//! per node, with joint evaluation and brute-force marginals.
//!
//! CPT rows are keyed by the mixed-radix index of the parent-state tuple in
//! `parent_order`, first parent least significant.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{Dag, GraphError, NodeId};

/// Row-sum tolerance for CPT validation.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Default cap on `∏ |𝒴_j|` for exhaustive enumeration (2²⁴).
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Observed,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: NodeId,
    pub name: String,
    pub states: Vec<String>,
    pub kind: VarKind,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn is_observed(&self) -> bool {
        self.kind == VarKind::Observed
    }

    pub fn is_hidden(&self) -> bool {
        self.kind == VarKind::Hidden
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional distribution of `owner` given its parents.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub owner: NodeId,
    pub parent_order: Vec<NodeId>,
    rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(owner: NodeId, parent_order: Vec<NodeId>, rows: Vec<Vec<f64>>) -> Self {
        Cpt {
            owner,
            parent_order,
            rows,
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Number of owner states, read off the first row.
    pub fn states(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Mixed-radix index of a parent tuple; `digits[0]` is least significant.
pub fn mixed_radix_index(digits: impl IntoIterator<Item = (usize, usize)>) -> usize {
    let mut index = 0;
    let mut stride = 1;
    for (digit, radix) in digits {
        debug_assert!(digit < radix);
        index += digit * stride;
        stride *= radix;
    }
    index
}

/// Per-variable state indices over some scope of variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: Vec<Option<usize>>,
}

impl Assignment {
    /// Empty assignment over `n` variables.
    pub fn new(n: usize) -> Self {
        Assignment { values: vec![None; n] }
    }

    pub fn from_values(values: Vec<Option<usize>>) -> Self {
        Assignment { values }
    }

    pub fn with(mut self, var: NodeId, state: usize) -> Self {
        self.set(var, state);
        self
    }

    pub fn set(&mut self, var: NodeId, state: usize) {
        self.values[var.0] = Some(state);
    }

    pub fn clear(&mut self, var: NodeId) {
        self.values[var.0] = None;
    }

    #[inline]
    pub fn get(&self, var: NodeId) -> Option<usize> {
        self.values[var.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<usize>] {
        &self.values
    }

    /// Assigned `(variable, state)` pairs in id order.
    pub fn assigned(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|s| (NodeId(i), s)))
    }

    /// Restriction to the variables selected by `keep`.
    pub fn restrict(&self, keep: impl Fn(NodeId) -> bool) -> Assignment {
        Assignment {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| if keep(NodeId(i)) { *v } else { None })
                .collect(),
        }
    }
}

/// A single problem found by [`NetworkModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoVariables,
    VariableId {
        position: usize,
        found: NodeId,
    },
    VariableCount {
        variables: usize,
        nodes: usize,
    },
    CptCount {
        cpts: usize,
        nodes: usize,
    },
    CptOwner {
        position: usize,
        found: NodeId,
    },
    EmptyStates {
        node: String,
    },
    DuplicateStateLabel {
        node: String,
        label: String,
    },
    DuplicateName {
        name: String,
    },
    ParentOrder {
        node: String,
    },
    RowCount {
        node: String,
        expected: usize,
        found: usize,
    },
    RowLength {
        node: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    EntryOutOfRange {
        node: String,
        row: usize,
        state: usize,
        value: f64,
    },
    RowSum {
        node: String,
        row: usize,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoVariables => write!(f, "network has no variables"),
            VariableId { position, found } => {
                write!(f, "variable at position {position} carries id {found}")
            }
            VariableCount { variables, nodes } => {
                write!(f, "{variables} variables for a graph with {nodes} nodes")
            }
            CptCount { cpts, nodes } => write!(f, "{cpts} CPTs for {nodes} nodes"),
            CptOwner { position, found } => {
                write!(f, "CPT at position {position} belongs to node {found}")
            }
            EmptyStates { node } => write!(f, "{node}: empty state set"),
            DuplicateStateLabel { node, label } => {
                write!(f, "{node}: duplicate state label {label:?}")
            }
            DuplicateName { name } => write!(f, "duplicate variable name {name:?}"),
            ParentOrder { node } => {
                write!(f, "{node}: CPT parent order differs from the graph's parent list")
            }
            RowCount { node, expected, found } => write!(f, "{node}: expected {expected} CPT rows, found {found}"),
            RowLength {
                node,
                row,
                expected,
                found,
            } => write!(f, "{node}: row {row} has {found} entries, expected {expected}"),
            EntryOutOfRange {
                node,
                row,
                state,
                value,
            } => write!(f, "{node}: row {row} entry {state} = {value} outside [0, 1]"),
            RowSum { node, row, sum } => write!(f, "{node}: row {row} sums to {sum}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid network: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("variable {0} is not assigned")]
    UnassignedVariable(String),
    #[error("variable {0} is hidden and must not be part of the evidence")]
    HiddenInEvidence(String),
    #[error("state {state} out of range for variable {var}")]
    InvalidState { var: String, state: usize },
    #[error("hidden state space has {size} configurations, above the cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: u64 },
    #[error("unknown variable {0:?}")]
    UnknownName(String),
}

/// The pair (G, p).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    dag: Dag,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
}

impl NetworkModel {
    /// Assembles a model without checking it; see [`NetworkModel::validate`].
    ///
    /// # Panics
    /// If the part counts disagree with the graph.
    pub fn from_parts(dag: Dag, variables: Vec<Variable>, cpts: Vec<Cpt>) -> Self {
        assert_eq!(dag.node_count(), variables.len());
        assert_eq!(dag.node_count(), cpts.len());
        NetworkModel { dag, variables, cpts }
    }

    /// Assembles and validates.
    pub fn new(dag: Dag, variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self, ModelError> {
        if dag.node_count() != variables.len() || dag.node_count() != cpts.len() {
            return Err(ModelError::Invalid(vec![
                Violation::VariableCount {
                    variables: variables.len(),
                    nodes: dag.node_count(),
                },
                Violation::CptCount {
                    cpts: cpts.len(),
                    nodes: dag.node_count(),
                },
            ]));
        }
        let net = NetworkModel::from_parts(dag, variables, cpts);
        let report = net.validate();
        if report.is_empty() {
            Ok(net)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: NodeId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, id: NodeId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.variables.iter().position(|v| v.name == name).map(NodeId)
    }

    pub fn observed(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.variables.iter().filter(|v| v.is_observed()).map(|v| v.id)
    }

    pub fn hidden(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.variables.iter().filter(|v| v.is_hidden()).map(|v| v.id)
    }

    /// `∏ |𝒴_j|` over the hidden variables, saturating at `u128::MAX`.
    pub fn hidden_space_size(&self) -> u128 {
        self.hidden()
            .map(|h| self.variable(h).cardinality() as u128)
            .fold(1u128, |acc, k| acc.saturating_mul(k))
    }

    /// Every structural or numerical problem in the model. Empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.variables.is_empty() {
            out.push(Violation::NoVariables);
        }
        let mut names = HashSet::new();
        for (i, v) in self.variables.iter().enumerate() {
            if v.id.0 != i {
                out.push(Violation::VariableId {
                    position: i,
                    found: v.id,
                });
            }
            if !names.insert(v.name.as_str()) {
                out.push(Violation::DuplicateName { name: v.name.clone() });
            }
            if v.states.is_empty() {
                out.push(Violation::EmptyStates { node: v.name.clone() });
            }
            let mut labels = HashSet::new();
            for s in &v.states {
                if !labels.insert(s.as_str()) {
                    out.push(Violation::DuplicateStateLabel {
                        node: v.name.clone(),
                        label: s.clone(),
                    });
                }
            }
        }
        for (i, cpt) in self.cpts.iter().enumerate() {
            if cpt.owner.0 != i {
                out.push(Violation::CptOwner {
                    position: i,
                    found: cpt.owner,
                });
                continue;
            }
            let node = self.variables[i].name.clone();
            let parents = self.dag.parents(NodeId(i));
            if cpt.parent_order != parents {
                out.push(Violation::ParentOrder { node });
                continue;
            }
            let expected_rows: usize = parents.iter().map(|p| self.variables[p.0].cardinality()).product();
            if cpt.rows.len() != expected_rows {
                out.push(Violation::RowCount {
                    node: node.clone(),
                    expected: expected_rows,
                    found: cpt.rows.len(),
                });
            }
            let k = self.variables[i].cardinality();
            for (r, row) in cpt.rows.iter().enumerate() {
                if row.len() != k {
                    out.push(Violation::RowLength {
                        node: node.clone(),
                        row: r,
                        expected: k,
                        found: row.len(),
                    });
                    continue;
                }
                let mut bad_entry = false;
                for (s, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        bad_entry = true;
                        out.push(Violation::EntryOutOfRange {
                            node: node.clone(),
                            row: r,
                            state: s,
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if !bad_entry && (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    out.push(Violation::RowSum {
                        node: node.clone(),
                        row: r,
                        sum,
                    });
                }
            }
        }
        out
    }

    /// Row of `v`'s CPT selected by the parent states in `a`.
    ///
    /// Returns `None` if some parent is unassigned.
    #[inline]
    pub fn row_index(&self, v: NodeId, a: &Assignment) -> Option<usize> {
        let mut index = 0;
        let mut stride = 1;
        for &p in self.dag.parents(v) {
            index += a.get(p)? * stride;
            stride *= self.variables[p.0].cardinality();
        }
        Some(index)
    }

    /// `p(v = a[v] | parents = a[Π(v)])`.
    pub fn conditional(&self, v: NodeId, a: &Assignment) -> Result<f64, ModelError> {
        let state = a
            .get(v)
            .ok_or_else(|| ModelError::UnassignedVariable(self.variable(v).name.clone()))?;
        let row = self.row_index(v, a).ok_or_else(|| {
            let missing = self
                .dag
                .parents(v)
                .iter()
                .find(|p| a.get(**p).is_none())
                .expect("some parent is unassigned");
            ModelError::UnassignedVariable(self.variable(*missing).name.clone())
        })?;
        Ok(self.cpts[v.0].rows[row][state])
    }

    /// Product of all conditionals at a full assignment.
    pub fn joint_probability(&self, full: &Assignment) -> Result<f64, ModelError> {
        self.check_states(full)?;
        let mut p = 1.0;
        for &v in self.dag.topological_order() {
            p *= self.conditional(v, full)?;
        }
        Ok(p)
    }

    /// `Σ_y p(x, y)` by exhaustive enumeration of the hidden variables.
    pub fn marginal_brute_force(&self, x: &Assignment, cap: u64) -> Result<f64, ModelError> {
        let mut total = 0.0;
        self.for_each_completion(x, cap, |full| {
            total += self.joint_probability(full).expect("complete assignment");
        })?;
        Ok(total)
    }

    /// Checks that `x` assigns exactly the observed variables with in-range states.
    pub fn check_evidence(&self, x: &Assignment) -> Result<(), ModelError> {
        if x.len() != self.len() {
            return Err(ModelError::UnknownName(format!(
                "evidence over {} variables for a network of {}",
                x.len(),
                self.len()
            )));
        }
        for v in &self.variables {
            match (v.kind, x.get(v.id)) {
                (VarKind::Observed, None) => return Err(ModelError::UnassignedVariable(v.name.clone())),
                (VarKind::Hidden, Some(_)) => return Err(ModelError::HiddenInEvidence(v.name.clone())),
                _ => {}
            }
        }
        self.check_states(x)
    }

    fn check_states(&self, a: &Assignment) -> Result<(), ModelError> {
        for (v, s) in a.assigned() {
            if s >= self.variable(v).cardinality() {
                return Err(ModelError::InvalidState {
                    var: self.variable(v).name.clone(),
                    state: s,
                });
            }
        }
        Ok(())
    }

    /// Calls `f` once per completion of the evidence `x` over all hidden
    /// variables, hidden variables enumerated in id order with the first one
    /// varying fastest.
    pub fn for_each_completion(
        &self,
        x: &Assignment,
        cap: u64,
        mut f: impl FnMut(&Assignment),
    ) -> Result<(), ModelError> {
        self.check_evidence(x)?;
        let size = self.hidden_space_size();
        if size > cap as u128 {
            return Err(ModelError::StateSpaceTooLarge { size, cap });
        }
        let hidden: Vec<(NodeId, usize)> = self.hidden().map(|h| (h, self.variable(h).cardinality())).collect();
        let mut full = x.clone();
        for &(h, _) in &hidden {
            full.set(h, 0);
        }
        'outer: loop {
            f(&full);
            for &(h, k) in &hidden {
                let s = full.get(h).unwrap() + 1;
                if s < k {
                    full.set(h, s);
                    continue 'outer;
                }
                full.set(h, 0);
            }
            break;
        }
        Ok(())
    }

    /// Number of conditional distributions (CPT rows) the model specifies.
    pub fn conditional_distribution_count(&self) -> u64 {
        self.cpts.iter().map(|c| c.rows.len() as u64).sum()
    }
}

/// `Σ_v 2^{|Π(v)|}` for an all-binary network, from `(in_degree, node_count)` pairs.
pub fn parameter_count(profile: &[(u32, u64)]) -> u64 {
    profile.iter().map(|&(deg, count)| count << deg).sum()
}

/// In-degree histogram of a graph, in the form [`parameter_count`] expects.
pub fn in_degree_profile(dag: &Dag) -> Vec<(u32, u64)> {
    let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
    for d in dag.in_degrees() {
        *hist.entry(d as u32).or_default() += 1;
    }
    hist.into_iter().collect()
}

/// Entries of the full joint table over `n` binary variables.
pub fn full_joint_size(n: u32) -> u64 {
    1u64 << n
}

/// Name-based construction of a [`NetworkModel`].
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    variables: Vec<Variable>,
    index: HashMap<String, NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    rows: HashMap<NodeId, Vec<Vec<f64>>>,
    duplicate: Option<String>,
    unknown: Option<String>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variable<S: AsRef<str>>(mut self, name: &str, states: &[S], kind: VarKind) -> Self {
        let id = NodeId(self.variables.len());
        if self.index.insert(name.to_string(), id).is_some() {
            self.duplicate.get_or_insert_with(|| name.to_string());
        }
        self.variables.push(Variable {
            id,
            name: name.to_string(),
            states: states.iter().map(|s| s.as_ref().to_string()).collect(),
            kind,
        });
        self
    }

    pub fn observed<S: AsRef<str>>(self, name: &str, states: &[S]) -> Self {
        self.variable(name, states, VarKind::Observed)
    }

    pub fn hidden<S: AsRef<str>>(self, name: &str, states: &[S]) -> Self {
        self.variable(name, states, VarKind::Hidden)
    }

    fn lookup(&mut self, name: &str) -> Option<NodeId> {
        let id = self.index.get(name).copied();
        if id.is_none() {
            self.unknown.get_or_insert_with(|| name.to_string());
        }
        id
    }

    pub fn edge(mut self, parent: &str, child: &str) -> Self {
        if let (Some(p), Some(c)) = (self.lookup(parent), self.lookup(child)) {
            self.edges.push((p, c));
        }
        self
    }

    /// Rows in mixed-radix order of the parents, first-added parent least significant.
    pub fn cpt(mut self, name: &str, rows: Vec<Vec<f64>>) -> Self {
        if let Some(v) = self.lookup(name) {
            self.rows.insert(v, rows);
        }
        self
    }

    pub fn variable_list(&self) -> &[Variable] {
        &self.variables
    }

    pub fn edge_list(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Builds without numerical validation. Missing CPTs become empty tables.
    pub fn build_unchecked(self) -> Result<NetworkModel, ModelError> {
        if let Some(name) = self.unknown {
            return Err(ModelError::UnknownName(name));
        }
        if let Some(name) = self.duplicate {
            return Err(ModelError::Invalid(vec![Violation::DuplicateName { name }]));
        }
        let dag = Dag::new(self.variables.len(), &self.edges)?;
        let mut rows = self.rows;
        let cpts = dag
            .nodes()
            .map(|v| Cpt::new(v, dag.parents(v).to_vec(), rows.remove(&v).unwrap_or_default()))
            .collect();
        Ok(NetworkModel::from_parts(dag, self.variables, cpts))
    }

    pub fn build(self) -> Result<NetworkModel, ModelError> {
        let net = self.build_unchecked()?;
        let report = net.validate();
        if report.is_empty() {
            Ok(net)
        } else {
            Err(ModelError::Invalid(report))
        }
    }
}
