//! Classic Viterbi decoding in weight space, and the chain-shaped network an
//! HMM corresponds to.

use crate::graph::NodeId;
use crate::model::{Assignment, NetworkBuilder, NetworkModel, NORMALIZATION_TOLERANCE};
use crate::netgen::state_labels;
use crate::tropical::{tropicalize, Weight};

use super::InferenceError;

/// A discrete HMM with `l` hidden states and `k` output symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Hmm {
    /// Length `l`.
    pub initial: Vec<f64>,
    /// `l × l`, `transition[from][to]`.
    pub transition: Vec<Vec<f64>>,
    /// `l × k`, `emission[state][symbol]`.
    pub emission: Vec<Vec<f64>>,
}

impl Hmm {
    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn symbols(&self) -> usize {
        self.emission.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let l = self.states();
        let k = self.symbols();
        let bad = |m: String| Err(InferenceError::InvalidHmm(m));
        if l == 0 || k == 0 {
            return bad("empty state or symbol set".into());
        }
        if self.transition.len() != l || self.transition.iter().any(|r| r.len() != l) {
            return bad(format!("transition matrix must be {l}×{l}"));
        }
        if self.emission.len() != l || self.emission.iter().any(|r| r.len() != k) {
            return bad(format!("emission matrix must be {l}×{k}"));
        }
        let rows = std::iter::once(("initial", &self.initial))
            .chain(self.transition.iter().map(|r| ("transition", r)))
            .chain(self.emission.iter().map(|r| ("emission", r)));
        for (what, row) in rows {
            if row.iter().any(|p| !(0.0..=1.0).contains(p))
                || (row.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOLERANCE
            {
                return bad(format!("{what} row {row:?} is not a probability vector"));
            }
        }
        Ok(())
    }
}

fn weights(row: &[f64]) -> Vec<Weight> {
    row.iter().map(|&p| tropicalize(p).expect("validated")).collect()
}

/// Best hidden path for `obs` and its weight `−ln max_y p(x, y)`.
///
/// Ties go to the smallest state index. The path is empty when the weight
/// is `∞`.
pub fn viterbi_hmm(hmm: &Hmm, obs: &[usize]) -> Result<(Weight, Vec<usize>), InferenceError> {
    hmm.validate()?;
    if obs.is_empty() {
        return Err(InferenceError::InvalidHmm("empty observation sequence".into()));
    }
    if let Some(&o) = obs.iter().find(|&&o| o >= hmm.symbols()) {
        return Err(InferenceError::InvalidHmm(format!("symbol {o} out of range")));
    }
    let l = hmm.states();
    let init = weights(&hmm.initial);
    let trans: Vec<Vec<Weight>> = hmm.transition.iter().map(|r| weights(r)).collect();
    let emit: Vec<Vec<Weight>> = hmm.emission.iter().map(|r| weights(r)).collect();

    // Same association as the slice DP: A[r-1] ⊙ (emission ⊙ transition).
    let mut col: Vec<Weight> = (0..l).map(|y| emit[y][obs[0]].otimes(init[y])).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(obs.len());
    for &o in &obs[1..] {
        let mut next = Vec::with_capacity(l);
        let mut arg = Vec::with_capacity(l);
        for y in 0..l {
            let (mut best, mut best_prev) = (Weight::INFINITY, 0);
            for (yp, &a) in col.iter().enumerate() {
                let c = a.otimes(emit[y][o].otimes(trans[yp][y]));
                if c < best {
                    best = c;
                    best_prev = yp;
                }
            }
            next.push(best);
            arg.push(best_prev);
        }
        col = next;
        back.push(arg);
    }
    let (mut last, mut weight) = (0, Weight::INFINITY);
    for (y, &a) in col.iter().enumerate() {
        if a < weight {
            weight = a;
            last = y;
        }
    }
    if weight.is_infinite() {
        return Ok((weight, Vec::new()));
    }
    let mut path = vec![last];
    for arg in back.iter().rev() {
        path.push(arg[*path.last().unwrap()]);
    }
    path.reverse();
    Ok((weight, path))
}

/// The network `Y1 → … → Yn`, `Yi → Xi` carrying the HMM's tables.
///
/// Variable ids: `Y1..Yn` are `0..n`, `X1..Xn` are `n..2n`.
pub fn hmm_to_network(hmm: &Hmm, n: usize) -> Result<NetworkModel, InferenceError> {
    hmm.validate()?;
    if n == 0 {
        return Err(InferenceError::InvalidHmm("sequence length must be at least 1".into()));
    }
    let hidden = state_labels(hmm.states());
    let symbols = state_labels(hmm.symbols());
    let mut b = NetworkBuilder::new();
    for i in 1..=n {
        b = b.hidden(&format!("Y{i}"), &hidden);
    }
    for i in 1..=n {
        b = b.observed(&format!("X{i}"), &symbols);
    }
    for i in 1..=n {
        if i < n {
            b = b.edge(&format!("Y{i}"), &format!("Y{}", i + 1));
        }
        b = b.edge(&format!("Y{i}"), &format!("X{i}"));
    }
    b = b.cpt("Y1", vec![hmm.initial.clone()]);
    for i in 2..=n {
        b = b.cpt(&format!("Y{i}"), hmm.transition.clone());
    }
    for i in 1..=n {
        b = b.cpt(&format!("X{i}"), hmm.emission.clone());
    }
    Ok(b.build()?)
}

/// Evidence `X_i = obs[i-1]` for [`hmm_to_network`]'s layout.
pub fn hmm_evidence(obs: &[usize]) -> Assignment {
    let n = obs.len();
    let mut x = Assignment::new(2 * n);
    for (i, &o) in obs.iter().enumerate() {
        x.set(NodeId(n + i), o);
    }
    x
}

/// Hidden path of an explanation of [`hmm_to_network`].
pub fn hmm_path(y: &Assignment, n: usize) -> Vec<usize> {
    (0..n).map(|i| y.get(NodeId(i)).expect("hidden state")).collect()
}
