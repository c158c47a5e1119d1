//! Exact MAP inference for discrete Bayesian networks.
//!
//! Probabilities are mapped to weights `w = −ln p`, turning the search for
//! the most probable hidden assignment into a `(min, +)` minimization. On
//! graded networks the minimization runs slice by slice over the semi-rank
//! levels of the hidden variables, a direct generalization of the Viterbi
//! trellis. Exhaustive enumeration is kept alongside as an oracle and as
//! the fallback for networks that are not graded.
//!
//! ```
//! use tropnet::prelude::*;
//!
//! let net = fixture(Fixture::Fig3).unwrap().with_random_cpts(7);
//! let x = random_evidence(&net, 1);
//! let result = infer(&net, &x, &InferenceOptions::default()).unwrap();
//! let oracle = infer(
//!     &net,
//!     &x,
//!     &InferenceOptions { engine: Engine::Oracle, ..Default::default() },
//! )
//! .unwrap();
//! assert!((result.weight.value() - oracle.weight.value()).abs() < 1e-9);
//! assert_eq!(result.explanations, oracle.explanations);
//! ```

pub mod graph;
pub mod inference;
pub mod io;
pub mod model;
pub mod netgen;
pub mod ranking;
pub mod tropical;

pub use graph::{Dag, GraphError, NodeId};
pub use inference::{infer, Engine, InferenceError, InferenceOptions, InferenceResult, Inferencer, Mode, Trellis};
pub use io::IoError;
pub use model::{Assignment, Cpt, ModelError, NetworkBuilder, NetworkModel, VarKind, Variable};
pub use netgen::{Fixture, GenConfig, GenError};
pub use ranking::{compute_semi_ranks, is_graded, RankAssignment};
pub use tropical::{tropicalize, tropicalize_model, Weight, WeightModel};

pub mod prelude {
    pub use crate::graph::{topological_sort, Dag, NodeId};
    pub use crate::inference::{
        backtrace, forward_dp, infer, slice_term_weight, trop_brute_force, Engine, InferenceError, InferenceOptions,
        InferenceResult, Inferencer, Mode, Trellis,
    };
    pub use crate::model::{Assignment, NetworkBuilder, NetworkModel, VarKind};
    pub use crate::netgen::{fixture, gen_graded, random_evidence, Fixture, GenConfig};
    pub use crate::ranking::{compute_semi_ranks, is_graded, RankAssignment};
    pub use crate::tropical::{tropicalize, tropicalize_model, Weight, WeightModel};
}
