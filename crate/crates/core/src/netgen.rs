//! Seeded network generation and the fixed fixture topologies.
//!
//! Random draws come from ChaCha8 keyed by `(seed, domain)` with the stream
//! selected by `(node, row)`, so every CPT row has its own independent
//! sequence and adding nodes never changes the rows of existing ones.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::NodeId;
use crate::model::{Assignment, Cpt, NetworkModel, VarKind, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),
    #[error("unknown fixture {0:?} (expected fig1, fig2, fig3, star(n), hmm(n) or fan(n))")]
    UnknownFixture(String),
}

const DOMAIN_CPT: u64 = 1;
const DOMAIN_TOPOLOGY: u64 = 2;
const DOMAIN_EVIDENCE: u64 = 3;

/// Independent generator for `(seed, domain, stream)`.
pub fn keyed_rng(seed: u64, domain: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

fn row_stream(node: usize, row: usize) -> u64 {
    ((node as u64) << 32) | row as u64
}

/// A random probability vector of length `k`: independent uniforms, normalized.
pub fn simplex_row(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.gen_range(f64::EPSILON..1.0)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|u| u / total).collect()
}

/// State labels `a, b, c, …` (`s<i>` beyond 26).
pub fn state_labels(k: usize) -> Vec<String> {
    (0..k)
        .map(|i| {
            if k <= 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("s{i}")
            }
        })
        .collect()
}

/// Topology plus state sets, without CPTs.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub variables: Vec<Variable>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Skeleton {
    fn push(&mut self, name: String, k: usize, kind: VarKind) -> NodeId {
        let id = NodeId(self.variables.len());
        self.variables.push(Variable {
            id,
            name,
            states: state_labels(k),
            kind,
        });
        id
    }

    fn edge(&mut self, p: NodeId, c: NodeId) {
        self.edges.push((p, c));
    }

    fn find(&self, name: &str) -> NodeId {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(NodeId)
            .expect("fixture name")
    }

    /// Gives every variable `k` states.
    pub fn with_states(mut self, k: usize) -> Self {
        for v in &mut self.variables {
            v.states = state_labels(k);
        }
        self
    }

    /// Fills every CPT row via `row(node, row_index, k)`.
    pub fn with_cpts(self, mut row: impl FnMut(NodeId, usize, usize) -> Vec<f64>) -> NetworkModel {
        let dag = crate::graph::Dag::new(self.variables.len(), &self.edges).expect("skeleton edges form a DAG");
        let cpts = dag
            .nodes()
            .map(|v| {
                let k = self.variables[v.0].cardinality();
                let rows: usize = dag
                    .parents(v)
                    .iter()
                    .map(|p| self.variables[p.0].cardinality())
                    .product();
                let table = (0..rows).map(|r| row(v, r, k)).collect();
                Cpt::new(v, dag.parents(v).to_vec(), table)
            })
            .collect();
        NetworkModel::from_parts(dag, self.variables, cpts)
    }

    pub fn with_uniform_cpts(self) -> NetworkModel {
        self.with_cpts(|_, _, k| vec![1.0 / k as f64; k])
    }

    /// Rows drawn from the keyed generator; stable per `(seed, node, row)`.
    pub fn with_random_cpts(self, seed: u64) -> NetworkModel {
        self.with_cpts(|v, r, k| simplex_row(&mut keyed_rng(seed, DOMAIN_CPT, row_stream(v.0, r)), k))
    }
}

/// The fixed topologies used throughout the tests and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// Diamond `X1 → X2, X1 → X3, X2 → X4, X3 → X4`, all observed.
    Fig1,
    /// Non-graded: `X1 → Y1 → {Y2, Y3}`, `Y2 → Y4`, `{Y3, Y4} → Y5`.
    Fig2,
    /// Graded: ranks 0/1/2 with three observed and four hidden variables.
    Fig3,
    /// `X1 → Y1 … Yn`.
    Star(usize),
    /// Chain `Y1 → … → Yn` with emissions `Yi → Xi`.
    Hmm(usize),
    /// `Y1 … Yn → X1`.
    Fan(usize),
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fixture::Fig1 => write!(f, "fig1"),
            Fixture::Fig2 => write!(f, "fig2"),
            Fixture::Fig3 => write!(f, "fig3"),
            Fixture::Star(n) => write!(f, "star({n})"),
            Fixture::Hmm(n) => write!(f, "hmm({n})"),
            Fixture::Fan(n) => write!(f, "fan({n})"),
        }
    }
}

impl FromStr for Fixture {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || GenError::UnknownFixture(s.to_string());
        match s {
            "fig1" => return Ok(Fixture::Fig1),
            "fig2" => return Ok(Fixture::Fig2),
            "fig3" => return Ok(Fixture::Fig3),
            _ => {}
        }
        let (family, rest) = s.split_once('(').ok_or_else(unknown)?;
        let n: usize = rest
            .strip_suffix(')')
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(unknown)?;
        match family {
            "star" => Ok(Fixture::Star(n)),
            "hmm" => Ok(Fixture::Hmm(n)),
            "fan" => Ok(Fixture::Fan(n)),
            _ => Err(unknown()),
        }
    }
}

/// Binary-state skeleton of a fixture.
pub fn fixture(which: Fixture) -> Result<Skeleton, GenError> {
    use VarKind::{Hidden, Observed};
    let mut sk = Skeleton {
        variables: Vec::new(),
        edges: Vec::new(),
    };
    let named = |sk: &mut Skeleton, names: &[(&str, VarKind)]| {
        for &(n, kind) in names {
            sk.push(n.to_string(), 2, kind);
        }
    };
    let wire = |sk: &mut Skeleton, edges: &[(&str, &str)]| {
        for &(p, c) in edges {
            let (p, c) = (sk.find(p), sk.find(c));
            sk.edge(p, c);
        }
    };
    match which {
        Fixture::Fig1 => {
            named(
                &mut sk,
                &[("X1", Observed), ("X2", Observed), ("X3", Observed), ("X4", Observed)],
            );
            wire(&mut sk, &[("X1", "X2"), ("X1", "X3"), ("X2", "X4"), ("X3", "X4")]);
        }
        Fixture::Fig2 => {
            named(
                &mut sk,
                &[
                    ("X1", Observed),
                    ("Y1", Hidden),
                    ("Y2", Hidden),
                    ("Y3", Hidden),
                    ("Y4", Hidden),
                    ("Y5", Hidden),
                ],
            );
            wire(
                &mut sk,
                &[
                    ("X1", "Y1"),
                    ("Y1", "Y2"),
                    ("Y1", "Y3"),
                    ("Y2", "Y4"),
                    ("Y3", "Y5"),
                    ("Y4", "Y5"),
                ],
            );
        }
        Fixture::Fig3 => {
            named(
                &mut sk,
                &[
                    ("X1", Observed),
                    ("X2", Observed),
                    ("X3", Observed),
                    ("Y1", Hidden),
                    ("Y2", Hidden),
                    ("Y3", Hidden),
                    ("Y4", Hidden),
                ],
            );
            wire(
                &mut sk,
                &[
                    ("X1", "X2"),
                    ("X1", "Y1"),
                    ("X2", "Y2"),
                    ("Y1", "Y2"),
                    ("Y1", "Y3"),
                    ("Y2", "X3"),
                    ("Y2", "Y4"),
                    ("Y3", "Y4"),
                ],
            );
        }
        Fixture::Star(n) | Fixture::Hmm(n) | Fixture::Fan(n) if n == 0 => {
            return Err(GenError::InfeasibleConfig(format!("{which} needs n >= 1")));
        }
        Fixture::Star(n) => {
            let x = sk.push("X1".into(), 2, Observed);
            for j in 1..=n {
                let y = sk.push(format!("Y{j}"), 2, Hidden);
                sk.edge(x, y);
            }
        }
        Fixture::Hmm(n) => {
            let ys: Vec<NodeId> = (1..=n).map(|i| sk.push(format!("Y{i}"), 2, Hidden)).collect();
            let xs: Vec<NodeId> = (1..=n).map(|i| sk.push(format!("X{i}"), 2, Observed)).collect();
            for i in 0..n {
                if i + 1 < n {
                    sk.edge(ys[i], ys[i + 1]);
                }
                sk.edge(ys[i], xs[i]);
            }
        }
        Fixture::Fan(n) => {
            let ys: Vec<NodeId> = (1..=n).map(|i| sk.push(format!("Y{i}"), 2, Hidden)).collect();
            let x = sk.push("X1".into(), 2, Observed);
            for y in ys {
                sk.edge(y, x);
            }
        }
    }
    Ok(sk)
}

/// Parameters of [`gen_graded`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// `t_r`, one entry per rank.
    pub hidden_per_rank: Vec<usize>,
    /// `s_r`, one entry per rank.
    pub observed_per_rank: Vec<usize>,
    /// Common state-set size `l`.
    pub states_per_var: usize,
    /// Probability of each optional edge, in `(0, 1]`.
    pub edge_density: f64,
    /// Upper bound on parents per variable (mandatory parents always kept).
    pub max_parents: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            hidden_per_rank: vec![1],
            observed_per_rank: vec![1],
            states_per_var: 2,
            edge_density: 0.5,
            max_parents: 4,
        }
    }
}

impl GenConfig {
    pub fn ranks(&self) -> usize {
        self.hidden_per_rank.len()
    }

    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InfeasibleConfig(m));
        if self.hidden_per_rank.is_empty() {
            return bad("at least one rank is required".into());
        }
        if self.hidden_per_rank.len() != self.observed_per_rank.len() {
            return bad(format!(
                "{} hidden counts but {} observed counts",
                self.hidden_per_rank.len(),
                self.observed_per_rank.len()
            ));
        }
        if let Some(r) = self.hidden_per_rank.iter().position(|&t| t == 0) {
            return bad(format!(
                "rank {r} has no hidden variables; every rank needs one to exist"
            ));
        }
        if self.states_per_var == 0 {
            return bad("states_per_var must be at least 1".into());
        }
        if !(self.edge_density > 0.0 && self.edge_density <= 1.0) {
            return bad(format!("edge_density {} not in (0, 1]", self.edge_density));
        }
        if self.max_parents == 0 {
            return bad("max_parents must be at least 1".into());
        }
        Ok(())
    }
}

/// A random graded network with exactly the requested slice sizes.
///
/// Per rank `r`, hidden variables are created first (for `r = 0`, half of
/// the observed ones come before them). Each rank-`r ≥ 1` hidden variable
/// gets one mandatory parent from slice `r − 1` plus optional extras from
/// the same slice; each rank-`r ≥ 1` observed variable gets a mandatory
/// hidden parent from slice `r`. Observed parents are drawn from any
/// previously created observed variable.
pub fn gen_graded(cfg: &GenConfig) -> Result<NetworkModel, GenError> {
    cfg.check()?;
    let mut rng = keyed_rng(cfg.seed, DOMAIN_TOPOLOGY, 0);
    let mut sk = Skeleton {
        variables: Vec::new(),
        edges: Vec::new(),
    };
    let l = cfg.states_per_var;
    let p = cfg.edge_density;
    let mut observed: Vec<NodeId> = Vec::new();
    let mut prev_hidden: Vec<NodeId> = Vec::new();
    let (mut nx, mut ny) = (0usize, 0usize);

    let mut add = |sk: &mut Skeleton,
                   rng: &mut ChaCha8Rng,
                   kind: VarKind,
                   observed: &[NodeId],
                   mandatory: &[NodeId],
                   optional_hidden: &[NodeId]| {
        let name = match kind {
            VarKind::Hidden => {
                ny += 1;
                format!("Y{ny}")
            }
            VarKind::Observed => {
                nx += 1;
                format!("X{nx}")
            }
        };
        let v = sk.push(name, l, kind);
        let mut parents: Vec<NodeId> = mandatory.to_vec();
        for &h in optional_hidden {
            if !parents.contains(&h) && rng.gen_bool(p) {
                parents.push(h);
            }
        }
        for &o in observed {
            if rng.gen_bool(p / 2.0) {
                parents.push(o);
            }
        }
        let keep = cfg.max_parents.max(mandatory.len());
        parents.truncate(keep);
        for q in parents {
            sk.edge(q, v);
        }
        v
    };

    for r in 0..cfg.ranks() {
        let t = cfg.hidden_per_rank[r];
        let s = cfg.observed_per_rank[r];
        let mut hidden = Vec::with_capacity(t);
        if r == 0 {
            let early = s - s / 2;
            for _ in 0..early {
                let v = add(&mut sk, &mut rng, VarKind::Observed, &observed, &[], &[]);
                observed.push(v);
            }
            for _ in 0..t {
                hidden.push(add(&mut sk, &mut rng, VarKind::Hidden, &observed, &[], &[]));
            }
            for _ in early..s {
                let v = add(&mut sk, &mut rng, VarKind::Observed, &observed, &[], &hidden);
                observed.push(v);
            }
        } else {
            for _ in 0..t {
                let anchor = prev_hidden[rng.gen_range(0..prev_hidden.len())];
                hidden.push(add(
                    &mut sk,
                    &mut rng,
                    VarKind::Hidden,
                    &observed,
                    &[anchor],
                    &prev_hidden,
                ));
            }
            for _ in 0..s {
                let anchor = hidden[rng.gen_range(0..hidden.len())];
                let v = add(&mut sk, &mut rng, VarKind::Observed, &observed, &[anchor], &hidden);
                observed.push(v);
            }
        }
        prev_hidden = hidden;
    }
    Ok(sk.with_random_cpts(cfg.seed))
}

/// A uniformly random full assignment of the observed variables.
pub fn random_evidence(net: &NetworkModel, seed: u64) -> Assignment {
    let mut rng = keyed_rng(seed, DOMAIN_EVIDENCE, 0);
    let mut x = Assignment::new(net.len());
    for v in net.observed() {
        x.set(v, rng.gen_range(0..net.variable(v).cardinality()));
    }
    x
}
