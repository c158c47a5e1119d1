//! MAP inference in weight space.
//!
//! Two engines compute the same quantity `w_X(x) = min_y w_{X,Y}(x, y)`
//! together with its minimizers:
//!
//! * [`forward_dp`] + [`backtrace`]: the rank-by-rank dynamic program. It
//!   needs a graded network and costs `Σ_r |D(r)|·|D(r−1)|` cell updates.
//! * [`trop_brute_force`]: enumeration of every hidden assignment. Works on
//!   any network and serves as the oracle for the first engine.
//!
//! [`viterbi`] holds the classic HMM trellis and the mapping of an HMM onto
//! a chain-shaped network, which the DP must reproduce bit for bit.

mod dp;
mod oracle;
pub mod viterbi;

use thiserror::Error;

pub use dp::{backtrace, forward_dp, slice_term_weight, SlicePlan, Trellis};
pub use oracle::{joint_weight, trop_brute_force, BruteForce};
pub use viterbi::{hmm_evidence, hmm_path, hmm_to_network, viterbi_hmm, Hmm};

use crate::graph::NodeId;
use crate::model::{Assignment, ModelError, NetworkModel, DEFAULT_ENUMERATION_CAP};
use crate::ranking::{compute_semi_ranks, GradingWitness, RankAssignment};
use crate::tropical::{tropicalize_model, Weight, WeightModel};

/// Default cap on `|D(r)|` for any slice.
pub const DEFAULT_SLICE_CAP: u64 = 1_000_000;

/// Two weights closer than this are tied when recording minimizers.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("network is not graded: {variable} has hidden parent {parent} at rank {}, expected {}", .witness.parent_rank, .witness.expected_rank)]
    NotGraded {
        variable: String,
        parent: String,
        witness: GradingWitness,
    },
    #[error("slice {rank} has {size} joint states, above the cap of {cap}")]
    SliceTooLarge { rank: usize, size: u128, cap: u64 },
    #[error("hidden state space has {size} configurations, above the cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: u64 },
    #[error("no explanation: the evidence has probability zero")]
    NoExplanation,
    #[error("slice {rank}: {variable} needs parent {parent}, which is neither observed nor in slice {rank} or {}", .rank.saturating_sub(1))]
    UngradedSlice {
        rank: usize,
        variable: String,
        parent: String,
    },
    #[error("invalid hidden Markov model: {0}")]
    InvalidHmm(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How many explanations to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// The smallest optimum in slice-major, mixed-radix order.
    #[default]
    One,
    /// Every optimum, in that same order.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// The DP when the network is graded, enumeration otherwise.
    #[default]
    Auto,
    Dp,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceOptions {
    pub mode: Mode,
    pub engine: Engine,
    pub slice_cap: u64,
    pub enumeration_cap: u64,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            mode: Mode::One,
            engine: Engine::Auto,
            slice_cap: DEFAULT_SLICE_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    /// `w_X(x)`.
    pub weight: Weight,
    /// `p_X(x)`, present when the hidden space fits the enumeration cap.
    pub marginal: Option<f64>,
    /// Hidden assignments attaining `weight`; only hidden variables are set.
    pub explanations: Vec<Assignment>,
    /// Number of optimal hidden assignments, saturating.
    pub explanation_count: u64,
    /// Engine that actually ran (never `Auto`).
    pub engine: Engine,
}

/// Precomputed weights and ranks for repeated queries on one network.
#[derive(Debug, Clone)]
pub struct Inferencer<'a> {
    net: &'a NetworkModel,
    weights: WeightModel,
    ranks: RankAssignment,
}

impl<'a> Inferencer<'a> {
    pub fn new(net: &'a NetworkModel) -> Self {
        Inferencer {
            net,
            weights: tropicalize_model(net),
            ranks: compute_semi_ranks(net),
        }
    }

    /// Uses caller-supplied weights instead of tropicalizing the CPTs.
    pub fn with_weights(net: &'a NetworkModel, weights: WeightModel) -> Self {
        Inferencer {
            net,
            weights,
            ranks: compute_semi_ranks(net),
        }
    }

    pub fn net(&self) -> &NetworkModel {
        self.net
    }

    pub fn weights(&self) -> &WeightModel {
        &self.weights
    }

    pub fn ranks(&self) -> &RankAssignment {
        &self.ranks
    }

    pub fn not_graded_error(&self) -> Option<InferenceError> {
        self.ranks.witness().map(|w| InferenceError::NotGraded {
            variable: self.net.variable(w.variable).name.clone(),
            parent: self.net.variable(w.parent).name.clone(),
            witness: w,
        })
    }

    pub fn forward_dp(&self, x: &Assignment, slice_cap: u64) -> Result<Trellis, InferenceError> {
        forward_dp(self.net, &self.weights, &self.ranks, x, slice_cap)
    }

    pub fn brute_force(&self, x: &Assignment, cap: u64) -> Result<BruteForce, InferenceError> {
        trop_brute_force(self.net, &self.weights, x, cap)
    }

    /// Slice-major key of a hidden assignment: its state index in each `D(r)`.
    pub fn slice_key(&self, y: &Assignment) -> Vec<usize> {
        slice_key(self.net, &self.ranks, y)
    }

    pub fn infer(&self, x: &Assignment, opts: &InferenceOptions) -> Result<InferenceResult, InferenceError> {
        self.net.check_evidence(x)?;
        let engine = match opts.engine {
            Engine::Auto if self.ranks.graded() => Engine::Dp,
            Engine::Auto => Engine::Oracle,
            e => e,
        };
        let (weight, explanations, explanation_count) = match engine {
            Engine::Dp => {
                if let Some(e) = self.not_graded_error() {
                    return Err(e);
                }
                let trellis = self.forward_dp(x, opts.slice_cap)?;
                let weight = trellis.weight();
                if weight.is_infinite() {
                    (weight, Vec::new(), 0)
                } else {
                    let explanations = backtrace(&trellis, opts.mode)?;
                    (weight, explanations, trellis.optimal_path_count())
                }
            }
            _ => {
                let mut bf = self.brute_force(x, opts.enumeration_cap)?;
                bf.minimizers.sort_by_cached_key(|y| self.slice_key(y));
                let count = bf.minimizers.len() as u64;
                if opts.mode == Mode::One {
                    bf.minimizers.truncate(1);
                }
                (bf.weight, bf.minimizers, count)
            }
        };
        let marginal = if self.net.hidden_space_size() <= opts.enumeration_cap as u128 {
            Some(self.net.marginal_brute_force(x, opts.enumeration_cap)?)
        } else {
            None
        };
        Ok(InferenceResult {
            weight,
            marginal,
            explanations,
            explanation_count,
            engine,
        })
    }
}

/// One-shot inference; see [`Inferencer::infer`].
pub fn infer(net: &NetworkModel, x: &Assignment, opts: &InferenceOptions) -> Result<InferenceResult, InferenceError> {
    Inferencer::new(net).infer(x, opts)
}

/// State index of `y` restricted to each slice's hidden variables.
pub fn slice_key(net: &NetworkModel, ranks: &RankAssignment, y: &Assignment) -> Vec<usize> {
    ranks
        .slices()
        .iter()
        .map(|s| {
            let mut index = 0;
            let mut stride = 1;
            for &h in &s.hidden {
                index += y.get(h).unwrap_or(0) * stride;
                stride *= net.variable(h).cardinality();
            }
            index
        })
        .collect()
}

fn name(net: &NetworkModel, v: NodeId) -> String {
    net.variable(v).name.clone()
}

#[cfg(test)]
mod tests;
