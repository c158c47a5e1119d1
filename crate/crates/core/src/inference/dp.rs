use crate::graph::NodeId;
use crate::model::{Assignment, NetworkModel};
use crate::ranking::{RankAssignment, SliceStateSpace};
use crate::tropical::{Weight, WeightModel};

use super::{name, InferenceError, Mode, TIE_TOLERANCE};

/// Where a factor reads a variable's value from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Evidence(NodeId),
    /// Digit of the current slice state.
    Current(usize),
    /// Digit of the previous slice state.
    Previous(usize),
}

#[derive(Debug, Clone)]
struct Factor {
    node: NodeId,
    value: Source,
    /// `(source, radix)` per parent in CPT axis order.
    parents: Vec<(Source, usize)>,
}

/// The factors of one slice with every variable reference resolved against
/// the evidence, the current slice state and the previous slice state.
///
/// Compiling fails with [`InferenceError::UngradedSlice`] when some factor
/// needs a hidden value from anywhere else.
#[derive(Debug, Clone)]
pub struct SlicePlan {
    rank: usize,
    factors: Vec<Factor>,
}

impl SlicePlan {
    pub fn compile(net: &NetworkModel, ranks: &RankAssignment, r: usize) -> Result<SlicePlan, InferenceError> {
        let slice = ranks.slice(r);
        let empty = Vec::new();
        let prev = if r > 0 { &ranks.slice(r - 1).hidden } else { &empty };
        let resolve = |var: NodeId, child: NodeId| -> Result<Source, InferenceError> {
            if net.variable(var).is_observed() {
                return Ok(Source::Evidence(var));
            }
            if let Some(j) = slice.hidden.iter().position(|&h| h == var) {
                return Ok(Source::Current(j));
            }
            if let Some(j) = prev.iter().position(|&h| h == var) {
                return Ok(Source::Previous(j));
            }
            Err(InferenceError::UngradedSlice {
                rank: r,
                variable: name(net, child),
                parent: name(net, var),
            })
        };
        let mut factors = Vec::with_capacity(slice.observed.len() + slice.hidden.len());
        for &v in slice.observed.iter().chain(&slice.hidden) {
            let mut parents = Vec::new();
            for &p in net.dag().parents(v) {
                let src = resolve(p, v)?;
                // Hidden rank-r variables read hidden parents only from r-1;
                // observed ones only from r.
                let ok = match src {
                    Source::Evidence(_) => true,
                    Source::Current(_) => net.variable(v).is_observed(),
                    Source::Previous(_) => net.variable(v).is_hidden(),
                };
                if !ok {
                    return Err(InferenceError::UngradedSlice {
                        rank: r,
                        variable: name(net, v),
                        parent: name(net, p),
                    });
                }
                parents.push((src, net.variable(p).cardinality()));
            }
            let value = resolve(v, v)?;
            factors.push(Factor {
                node: v,
                value,
                parents,
            });
        }
        Ok(SlicePlan { rank: r, factors })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `Σ_i w(x_i | ·) + Σ_j w(y_j | ·)` over the slice's observed then hidden
    /// variables, summed in that order starting from zero.
    #[inline]
    pub fn term_weight(&self, wm: &WeightModel, x: &Assignment, current: &[usize], previous: &[usize]) -> Weight {
        let read = |src: Source| -> usize {
            match src {
                Source::Evidence(v) => x.get(v).expect("evidence covers observed variables"),
                Source::Current(j) => current[j],
                Source::Previous(j) => previous[j],
            }
        };
        let mut total = Weight::ZERO;
        for f in &self.factors {
            let mut row = 0;
            let mut stride = 1;
            for &(src, radix) in &f.parents {
                row += read(src) * stride;
                stride *= radix;
            }
            total = total.otimes(wm.table(f.node.0).get(row, read(f.value)));
        }
        total
    }
}

/// Weight contributed by slice `r` given the slice states `y_r` and `y_prev`
/// (digits in slice order; `y_prev` is ignored for `r = 0`).
pub fn slice_term_weight(
    net: &NetworkModel,
    wm: &WeightModel,
    ranks: &RankAssignment,
    r: usize,
    x: &Assignment,
    y_r: &[usize],
    y_prev: &[usize],
) -> Result<Weight, InferenceError> {
    let plan = SlicePlan::compile(net, ranks, r)?;
    Ok(plan.term_weight(wm, x, y_r, y_prev))
}

/// Completed forward pass: one column per rank, plus for every finite cell
/// of rank `r ≥ 1` the full set of minimizing predecessors in `D(r − 1)`.
#[derive(Debug, Clone)]
pub struct Trellis {
    spaces: Vec<SliceStateSpace>,
    columns: Vec<Vec<Weight>>,
    backpointers: Vec<Vec<Vec<usize>>>,
    node_count: usize,
    cell_updates: u64,
}

impl Trellis {
    pub fn columns(&self) -> &[Vec<Weight>] {
        &self.columns
    }

    pub fn column(&self, r: usize) -> &[Weight] {
        &self.columns[r]
    }

    /// Minimizing predecessors of `A[r, y]`; empty for `r = 0` and for `∞` cells.
    pub fn backpointers(&self, r: usize, y: usize) -> &[usize] {
        if r == 0 {
            &[]
        } else {
            &self.backpointers[r][y]
        }
    }

    pub fn space(&self, r: usize) -> &SliceStateSpace {
        &self.spaces[r]
    }

    /// Number of `(y, y')` evaluations, counting each base cell once.
    pub fn cell_updates(&self) -> u64 {
        self.cell_updates
    }

    /// `w_X(x) = min_y A[ρ_max, y]`.
    pub fn weight(&self) -> Weight {
        self.columns
            .last()
            .expect("at least one column")
            .iter()
            .fold(Weight::INFINITY, |acc, &w| acc.oplus(w))
    }

    /// For each rank, whether each cell lies on some optimal chain.
    fn optimal_cells(&self) -> Vec<Vec<bool>> {
        let w = self.weight();
        let last = self.columns.len() - 1;
        let mut marks: Vec<Vec<bool>> = self.columns.iter().map(|c| vec![false; c.len()]).collect();
        if w.is_infinite() {
            return marks;
        }
        for (y, &a) in self.columns[last].iter().enumerate() {
            marks[last][y] = a.value() <= w.value() + TIE_TOLERANCE;
        }
        for r in (1..=last).rev() {
            for y in 0..marks[r].len() {
                if marks[r][y] {
                    for &p in &self.backpointers[r][y] {
                        marks[r - 1][p] = true;
                    }
                }
            }
        }
        marks
    }

    /// Number of optimal chains through the trellis, saturating.
    pub fn optimal_path_count(&self) -> u64 {
        let marks = self.optimal_cells();
        // paths[y] = number of optimal chains from slice 0 ending at cell y.
        let mut paths: Vec<u64> = marks[0].iter().map(|&m| m as u64).collect();
        for (r, marked) in marks.iter().enumerate().skip(1) {
            paths = marked
                .iter()
                .enumerate()
                .map(|(y, &m)| {
                    if !m {
                        return 0;
                    }
                    self.backpointers[r][y]
                        .iter()
                        .fold(0u64, |acc, &p| acc.saturating_add(paths[p]))
                })
                .collect();
        }
        paths.into_iter().fold(0u64, u64::saturating_add)
    }

    fn assignment(&self, chain: &[usize]) -> Assignment {
        let mut y = Assignment::new(self.node_count);
        for (space, &state) in self.spaces.iter().zip(chain) {
            for (&v, d) in space.variables.iter().zip(space.decode(state)) {
                y.set(v, d);
            }
        }
        y
    }
}

/// The forward pass over a graded network.
pub fn forward_dp(
    net: &NetworkModel,
    wm: &WeightModel,
    ranks: &RankAssignment,
    x: &Assignment,
    slice_cap: u64,
) -> Result<Trellis, InferenceError> {
    if let Some(w) = ranks.witness() {
        return Err(InferenceError::NotGraded {
            variable: name(net, w.variable),
            parent: name(net, w.parent),
            witness: w,
        });
    }
    net.check_evidence(x)?;
    let spaces: Vec<SliceStateSpace> = (0..=ranks.rho_max()).map(|r| ranks.slice_states(net, r)).collect();
    for s in &spaces {
        if s.size() > slice_cap as u128 {
            return Err(InferenceError::SliceTooLarge {
                rank: s.rank,
                size: s.size(),
                cap: slice_cap,
            });
        }
    }
    let plans = (0..spaces.len())
        .map(|r| SlicePlan::compile(net, ranks, r))
        .collect::<Result<Vec<_>, _>>()?;

    let digits = |space: &SliceStateSpace| -> Vec<Vec<usize>> { space.states().collect() };

    let mut prev_digits = digits(&spaces[0]);
    let base: Vec<Weight> = prev_digits
        .iter()
        .map(|y| plans[0].term_weight(wm, x, y, &[]))
        .collect();
    let mut cell_updates = base.len() as u64;
    let mut columns = vec![base];
    let mut backpointers = vec![Vec::new()];

    for r in 1..spaces.len() {
        let cur_digits = digits(&spaces[r]);
        let prev_col = &columns[r - 1];
        let mut col = Vec::with_capacity(cur_digits.len());
        let mut bps = Vec::with_capacity(cur_digits.len());
        let mut candidates = vec![Weight::INFINITY; prev_digits.len()];
        for y in &cur_digits {
            let mut best = Weight::INFINITY;
            for (yp, (&a, dp)) in prev_col.iter().zip(&prev_digits).enumerate() {
                let c = a.otimes(plans[r].term_weight(wm, x, y, dp));
                candidates[yp] = c;
                best = best.oplus(c);
            }
            cell_updates += prev_digits.len() as u64;
            let bp: Vec<usize> = if best.is_infinite() {
                Vec::new()
            } else {
                candidates
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.value() <= best.value() + TIE_TOLERANCE)
                    .map(|(yp, _)| yp)
                    .collect()
            };
            col.push(best);
            bps.push(bp);
        }
        columns.push(col);
        backpointers.push(bps);
        prev_digits = cur_digits;
    }

    Ok(Trellis {
        spaces,
        columns,
        backpointers,
        node_count: net.len(),
        cell_updates,
    })
}

/// Explanations recovered from the recorded minimizers.
///
/// `Mode::One` yields the optimum whose sequence of slice states is
/// lexicographically smallest; `Mode::All` yields every optimum in that order.
pub fn backtrace(trellis: &Trellis, mode: Mode) -> Result<Vec<Assignment>, InferenceError> {
    if trellis.weight().is_infinite() {
        return Err(InferenceError::NoExplanation);
    }
    let marks = trellis.optimal_cells();
    let last = trellis.columns.len() - 1;
    // succ[r][y'] = optimal cells at rank r+1 that list y' as a minimizer, ascending.
    let mut succ: Vec<Vec<Vec<usize>>> = marks.iter().map(|m| vec![Vec::new(); m.len()]).collect();
    for r in 1..=last {
        for (y, &on) in marks[r].iter().enumerate() {
            if on {
                for &p in &trellis.backpointers[r][y] {
                    succ[r - 1][p].push(y);
                }
            }
        }
    }
    let starts: Vec<usize> = (0..marks[0].len()).filter(|&y| marks[0][y]).collect();

    let mut out = Vec::new();
    match mode {
        Mode::One => {
            let mut chain = vec![starts[0]];
            for r in 0..last {
                chain.push(succ[r][chain[r]][0]);
            }
            out.push(trellis.assignment(&chain));
        }
        Mode::All => {
            let mut chain = Vec::with_capacity(last + 1);
            let mut stack: Vec<(usize, usize)> = starts.iter().rev().map(|&y| (0, y)).collect();
            while let Some((r, y)) = stack.pop() {
                chain.truncate(r);
                chain.push(y);
                if r == last {
                    out.push(trellis.assignment(&chain));
                } else {
                    stack.extend(succ[r][y].iter().rev().map(|&n| (r + 1, n)));
                }
            }
        }
    }
    Ok(out)
}
