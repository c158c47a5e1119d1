//! JSON network and evidence files.
//!
//! Network file:
//!
//! ```json
//! {
//!   "variables": [{"name": "Y1", "states": ["a", "b"], "observed": false}],
//!   "edges": [["Y1", "X1"]],
//!   "cpts": {"Y1": {"parents": [], "rows": [[0.5, 0.5]]}}
//! }
//! ```
//!
//! Rows follow the mixed-radix order of `parents`, first parent least
//! significant. `parents` must list the same variables as the edges into the
//! node, in edge order. Serialization is canonical: fixed key order, one
//! variable, edge and CPT per line, floats with 17 significant digits.
//!
//! Evidence file: `{"X1": "a", ...}` over every observed variable.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::Deserialize;
use thiserror::Error;

use crate::graph::{Dag, GraphError, NodeId};
use crate::model::{Assignment, Cpt, NetworkModel, VarKind, Variable, Violation};
use crate::tropical::Weight;

/// A problem located by a JSON path such as `cpts.Y2.rows[3]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Issue>),
    #[error("{path}: unknown name {name:?}")]
    UnknownName { path: String, name: String },
}

impl IoError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        IoError::Validation(vec![Issue {
            path: path.into(),
            message: message.into(),
        }])
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    variables: Vec<VariableEntry>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    cpts: BTreeMap<String, CptEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    name: String,
    states: Vec<String>,
    observed: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CptEntry {
    #[serde(default)]
    parents: Vec<String>,
    rows: Vec<Vec<f64>>,
}

pub fn parse_network(bytes: &[u8]) -> Result<NetworkModel, IoError> {
    let file: NetworkFile = serde_json::from_slice(bytes)?;
    if file.variables.is_empty() {
        return Err(IoError::invalid("variables", "network has no variables"));
    }

    let mut index: HashMap<&str, NodeId> = HashMap::new();
    let mut variables = Vec::with_capacity(file.variables.len());
    for (i, v) in file.variables.iter().enumerate() {
        if index.insert(v.name.as_str(), NodeId(i)).is_some() {
            return Err(IoError::invalid(
                format!("variables[{i}].name"),
                format!("duplicate variable name {:?}", v.name),
            ));
        }
        variables.push(Variable {
            id: NodeId(i),
            name: v.name.clone(),
            states: v.states.clone(),
            kind: if v.observed { VarKind::Observed } else { VarKind::Hidden },
        });
    }
    let resolve = |name: &str, path: String| {
        index.get(name).copied().ok_or_else(|| IoError::UnknownName {
            path,
            name: name.to_string(),
        })
    };

    let mut edges = Vec::with_capacity(file.edges.len());
    for (i, (p, c)) in file.edges.iter().enumerate() {
        edges.push((
            resolve(p, format!("edges[{i}][0]"))?,
            resolve(c, format!("edges[{i}][1]"))?,
        ));
    }
    let dag = Dag::new(variables.len(), &edges).map_err(|e| {
        let name = |id: NodeId| variables[id.0].name.clone();
        let message = match e {
            GraphError::CycleDetected(v) => format!("directed cycle through {}", name(v)),
            GraphError::DuplicateEdge(p, c) => format!("duplicate edge {} -> {}", name(p), name(c)),
            GraphError::SelfLoop(v) => format!("self-loop on {}", name(v)),
            other => other.to_string(),
        };
        IoError::invalid("edges", message)
    })?;

    for key in file.cpts.keys() {
        resolve(key, format!("cpts.{key}"))?;
    }
    let mut cpts = Vec::with_capacity(variables.len());
    for v in &variables {
        let entry = file
            .cpts
            .get(&v.name)
            .ok_or_else(|| IoError::invalid(format!("cpts.{}", v.name), "missing CPT"))?;
        let parents = entry
            .parents
            .iter()
            .enumerate()
            .map(|(j, p)| resolve(p, format!("cpts.{}.parents[{j}]", v.name)))
            .collect::<Result<Vec<_>, _>>()?;
        if parents != dag.parents(v.id) {
            let expected: Vec<&str> = dag.parents(v.id).iter().map(|p| variables[p.0].name.as_str()).collect();
            return Err(IoError::invalid(
                format!("cpts.{}.parents", v.name),
                format!("must be {expected:?} (the edges into {}, in edge order)", v.name),
            ));
        }
        cpts.push(Cpt::new(v.id, parents, entry.rows.clone()));
    }

    let net = NetworkModel::from_parts(dag, variables, cpts);
    let report = net.validate();
    if report.is_empty() {
        Ok(net)
    } else {
        Err(IoError::Validation(report.iter().map(locate).collect()))
    }
}

fn locate(v: &Violation) -> Issue {
    use Violation::*;
    let path = match v {
        EmptyStates { node } | DuplicateStateLabel { node, .. } => format!("variables.{node}.states"),
        DuplicateName { name } => format!("variables.{name}"),
        ParentOrder { node } => format!("cpts.{node}.parents"),
        RowCount { node, .. } => format!("cpts.{node}.rows"),
        RowLength { node, row, .. } | RowSum { node, row, .. } => format!("cpts.{node}.rows[{row}]"),
        EntryOutOfRange { node, row, state, .. } => format!("cpts.{node}.rows[{row}][{state}]"),
        _ => String::from("$"),
    };
    Issue {
        path,
        message: v.to_string(),
    }
}

/// Canonical network file text. Identical models give identical bytes.
pub fn serialize_network(net: &NetworkModel) -> String {
    let q = |s: &str| serde_json::to_string(s).expect("string");
    let list = |items: &mut dyn Iterator<Item = String>| items.collect::<Vec<_>>().join(", ");
    let mut out = String::from("{\n  \"variables\": [\n");
    let n = net.len();
    for (i, v) in net.variables().iter().enumerate() {
        let _ = writeln!(
            out,
            "    {{\"name\": {}, \"states\": [{}], \"observed\": {}}}{}",
            q(&v.name),
            list(&mut v.states.iter().map(|s| q(s))),
            v.is_observed(),
            if i + 1 < n { "," } else { "" }
        );
    }
    out.push_str("  ],\n  \"edges\": [\n");
    let edges = net.dag().edges();
    for (i, (p, c)) in edges.iter().enumerate() {
        let _ = writeln!(
            out,
            "    [{}, {}]{}",
            q(&net.variable(*p).name),
            q(&net.variable(*c).name),
            if i + 1 < edges.len() { "," } else { "" }
        );
    }
    out.push_str("  ],\n  \"cpts\": {\n");
    for (i, cpt) in net.cpts().iter().enumerate() {
        let rows = list(
            &mut cpt
                .rows()
                .iter()
                .map(|row| format!("[{}]", list(&mut row.iter().map(|&p| format_significant(p, 17))))),
        );
        let _ = writeln!(
            out,
            "    {}: {{\"parents\": [{}], \"rows\": [{}]}}{}",
            q(&net.variable(cpt.owner).name),
            list(&mut cpt.parent_order.iter().map(|p| q(&net.variable(*p).name))),
            rows,
            if i + 1 < n { "," } else { "" }
        );
    }
    out.push_str("  }\n}\n");
    out
}

/// Evidence `{"name": "label", …}`, total over the observed variables.
pub fn parse_evidence(net: &NetworkModel, bytes: &[u8]) -> Result<Assignment, IoError> {
    let map: BTreeMap<String, String> = serde_json::from_slice(bytes)?;
    let mut x = Assignment::new(net.len());
    for (name, label) in &map {
        let id = net.find(name).ok_or_else(|| IoError::UnknownName {
            path: "$".into(),
            name: name.clone(),
        })?;
        let var = net.variable(id);
        if var.is_hidden() {
            return Err(IoError::invalid(name.clone(), "hidden variables cannot be observed"));
        }
        let state = var.state_index(label).ok_or_else(|| IoError::UnknownName {
            path: name.clone(),
            name: label.clone(),
        })?;
        x.set(id, state);
    }
    let missing: Vec<Issue> = net
        .observed()
        .filter(|v| x.get(*v).is_none())
        .map(|v| Issue {
            path: net.variable(v).name.clone(),
            message: "observed variable has no value".into(),
        })
        .collect();
    if !missing.is_empty() {
        return Err(IoError::Validation(missing));
    }
    Ok(x)
}

/// Object mapping each variable assigned in `a` to its state label, in id order.
pub fn assignment_json(net: &NetworkModel, a: &Assignment) -> String {
    let body: Vec<String> = a
        .assigned()
        .map(|(v, s)| {
            let var = net.variable(v);
            format!(
                "{}: {}",
                serde_json::to_string(&var.name).expect("string"),
                serde_json::to_string(&var.states[s]).expect("string")
            )
        })
        .collect();
    format!("{{{}}}", body.join(", "))
}

/// `x` with `digits` significant digits; positional for moderate exponents.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// A weight with 12 significant digits, `inf` for `∞`.
pub fn format_weight(w: Weight) -> String {
    format_significant(w.value(), 12)
}
