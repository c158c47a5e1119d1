//! Semi-ranks, rank slices and gradedness.
//!
//! A variable without hidden parents has semi-rank 0. A hidden variable sits
//! one above its highest hidden parent; an observed variable sits level with
//! its highest hidden parent. The network is graded when every hidden
//! variable's hidden parents are all exactly one rank below it and every
//! observed variable's hidden parents all share its rank. Under that
//! condition each slice only talks to the slice right before it.

use std::fmt;

use crate::graph::NodeId;
use crate::model::NetworkModel;

/// Variables of one semi-rank, each list in topological order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Slice {
    pub observed: Vec<NodeId>,
    pub hidden: Vec<NodeId>,
}

/// A hidden-parent edge that breaks gradedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradingWitness {
    pub variable: NodeId,
    pub parent: NodeId,
    pub parent_rank: usize,
    pub expected_rank: usize,
}

impl fmt::Display for GradingWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: hidden parent {} has rank {}, expected {}",
            self.variable, self.parent, self.parent_rank, self.expected_rank
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    rho: Vec<usize>,
    slices: Vec<Slice>,
    witness: Option<GradingWitness>,
}

impl RankAssignment {
    pub fn rho(&self, v: NodeId) -> usize {
        self.rho[v.0]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rho
    }

    pub fn rho_max(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn slice(&self, r: usize) -> &Slice {
        &self.slices[r]
    }

    pub fn graded(&self) -> bool {
        self.witness.is_none()
    }

    pub fn witness(&self) -> Option<GradingWitness> {
        self.witness
    }

    /// `s_r` for every rank.
    pub fn observed_counts(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.observed.len()).collect()
    }

    /// `t_r` for every rank.
    pub fn hidden_counts(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.hidden.len()).collect()
    }

    /// The hidden state space `D(r)` of slice `r`.
    pub fn slice_states(&self, net: &NetworkModel, r: usize) -> SliceStateSpace {
        let vars = self.slices[r].hidden.clone();
        let radices = vars.iter().map(|&v| net.variable(v).cardinality()).collect();
        SliceStateSpace {
            rank: r,
            variables: vars,
            radices,
        }
    }
}

pub fn compute_semi_ranks(net: &NetworkModel) -> RankAssignment {
    let dag = net.dag();
    let mut rho = vec![0usize; net.len()];
    for &v in dag.topological_order() {
        let top = dag
            .parents(v)
            .iter()
            .filter(|p| net.variable(**p).is_hidden())
            .map(|p| rho[p.0])
            .max();
        rho[v.0] = match (net.variable(v).is_hidden(), top) {
            (_, None) => 0,
            (true, Some(m)) => m + 1,
            (false, Some(m)) => m,
        };
    }
    let rho_max = rho.iter().copied().max().unwrap_or(0);
    let mut slices = vec![Slice::default(); rho_max + 1];
    for &v in dag.topological_order() {
        let slice = &mut slices[rho[v.0]];
        if net.variable(v).is_hidden() {
            slice.hidden.push(v);
        } else {
            slice.observed.push(v);
        }
    }
    let witness = find_witness(net, &rho);
    RankAssignment { rho, slices, witness }
}

/// Gradedness verdict for `ranks`; `Err` carries the first violation in
/// topological order.
pub fn is_graded(net: &NetworkModel, ranks: &RankAssignment) -> Result<(), GradingWitness> {
    match find_witness(net, &ranks.rho) {
        None => Ok(()),
        Some(w) => Err(w),
    }
}

fn find_witness(net: &NetworkModel, rho: &[usize]) -> Option<GradingWitness> {
    let dag = net.dag();
    for &v in dag.topological_order() {
        let hidden = net.variable(v).is_hidden();
        for &p in dag.parents(v) {
            if !net.variable(p).is_hidden() {
                continue;
            }
            // A hidden parent forces rho(v) >= 1 for hidden v.
            let expected = if hidden { rho[v.0] - 1 } else { rho[v.0] };
            if rho[p.0] != expected {
                return Some(GradingWitness {
                    variable: v,
                    parent: p,
                    parent_rank: rho[p.0],
                    expected_rank: expected,
                });
            }
        }
    }
    None
}

/// `D(r)`: the product of the hidden state sets of one slice, enumerated in
/// mixed-radix order with the first variable as least significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceStateSpace {
    pub rank: usize,
    pub variables: Vec<NodeId>,
    pub radices: Vec<usize>,
}

impl SliceStateSpace {
    /// `|D(r)|`, saturating. An empty slice has exactly one state, `()`.
    pub fn size(&self) -> u128 {
        self.radices.iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }

    /// Digits of state `index`.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        self.radices
            .iter()
            .map(|&k| {
                let d = index % k;
                index /= k;
                d
            })
            .collect()
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        crate::model::mixed_radix_index(digits.iter().copied().zip(self.radices.iter().copied()))
    }

    /// All states in enumeration order.
    pub fn states(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.size() as usize).map(|i| self.decode(i))
    }
}
