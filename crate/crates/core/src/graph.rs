//! Directed acyclic graphs with ordered parent lists.
//!
//! Parent order is the edge-insertion order. It is the axis order used for
//! indexing conditional probability tables, so it is never re-sorted.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use thiserror::Error;

/// Dense identifier of a node, `0..node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(value: usize) -> Self {
        NodeId(value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge ({parent}, {child}) references a node outside 0..{node_count}")]
    InvalidNode {
        parent: NodeId,
        child: NodeId,
        node_count: usize,
    },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("graph contains a directed cycle through node {0}")]
    CycleDetected(NodeId),
}

/// An immutable DAG. Acyclicity is checked once, at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
}

impl Dag {
    pub fn new(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut parents = vec![Vec::new(); node_count];
        let mut children = vec![Vec::new(); node_count];
        let mut seen = HashSet::with_capacity(edges.len());
        for &(p, c) in edges {
            if p.0 >= node_count || c.0 >= node_count {
                return Err(GraphError::InvalidNode {
                    parent: p,
                    child: c,
                    node_count,
                });
            }
            if p == c {
                return Err(GraphError::SelfLoop(p));
            }
            if !seen.insert((p, c)) {
                return Err(GraphError::DuplicateEdge(p, c));
            }
            parents[c.0].push(p);
            children[p.0].push(c);
        }
        let topo = kahn(node_count, &parents, &children)?;
        Ok(Dag {
            node_count,
            edges: edges.to_vec(),
            parents,
            children,
            topo,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Parents of `v` in edge-insertion order.
    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.parents[v.0]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count).map(NodeId)
    }

    /// Topological order with ties broken by smallest id first.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// In-degree of every node, indexed by node id.
    pub fn in_degrees(&self) -> Vec<usize> {
        self.parents.iter().map(Vec::len).collect()
    }
}

/// Free-function form of [`Dag::topological_order`].
pub fn topological_sort(g: &Dag) -> Vec<NodeId> {
    g.topo.clone()
}

fn kahn(node_count: usize, parents: &[Vec<NodeId>], children: &[Vec<NodeId>]) -> Result<Vec<NodeId>, GraphError> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut frontier: BinaryHeap<Reverse<usize>> = indegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(v, _)| Reverse(v))
        .collect();
    let mut order = Vec::with_capacity(node_count);
    while let Some(Reverse(v)) = frontier.pop() {
        order.push(NodeId(v));
        for &c in &children[v] {
            indegree[c.0] -= 1;
            if indegree[c.0] == 0 {
                frontier.push(Reverse(c.0));
            }
        }
    }
    if order.len() != node_count {
        let stuck = indegree.iter().position(|&d| d > 0).unwrap_or(0);
        return Err(GraphError::CycleDetected(NodeId(stuck)));
    }
    Ok(order)
}
