use crate::model::{Assignment, NetworkModel};
use crate::tropical::{Weight, WeightModel};

use super::{InferenceError, TIE_TOLERANCE};

/// Result of exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    /// `w_X(x) = ⊕_y w_{X,Y}(x, y)`.
    pub weight: Weight,
    /// Every hidden assignment within [`TIE_TOLERANCE`] of `weight`, in
    /// enumeration order; empty when `weight` is `∞`.
    pub minimizers: Vec<Assignment>,
}

/// `w_{X,Y}(x, y)`: the sum of every node's weight, in topological order.
///
/// # Panics
/// If `full` leaves a variable unassigned.
pub fn joint_weight(net: &NetworkModel, wm: &WeightModel, full: &Assignment) -> Weight {
    net.dag()
        .topological_order()
        .iter()
        .map(|&v| {
            let row = net.row_index(v, full).expect("full assignment");
            wm.table(v.0).get(row, full.get(v).expect("full assignment"))
        })
        .sum()
}

/// Minimizes `w_{X,Y}(x, ·)` over all hidden assignments. Works on any network.
pub fn trop_brute_force(
    net: &NetworkModel,
    wm: &WeightModel,
    x: &Assignment,
    cap: u64,
) -> Result<BruteForce, InferenceError> {
    let mut best = Weight::INFINITY;
    let mut kept: Vec<(Weight, Assignment)> = Vec::new();
    net.for_each_completion(x, cap, |full| {
        let w = joint_weight(net, wm, full);
        if w.is_infinite() {
            return;
        }
        if w.value() < best.value() - TIE_TOLERANCE {
            kept.retain(|(k, _)| k.value() <= w.value() + TIE_TOLERANCE);
        }
        best = best.oplus(w);
        if w.value() <= best.value() + TIE_TOLERANCE {
            kept.push((w, full.restrict(|v| net.variable(v).is_hidden())));
        }
    })
    .map_err(|e| match e {
        crate::model::ModelError::StateSpaceTooLarge { size, cap } => InferenceError::StateSpaceTooLarge { size, cap },
        other => InferenceError::Model(other),
    })?;
    let minimizers = kept
        .into_iter()
        .filter(|(k, _)| k.value() <= best.value() + TIE_TOLERANCE)
        .map(|(_, y)| y)
        .collect();
    Ok(BruteForce {
        weight: best,
        minimizers,
    })
}
