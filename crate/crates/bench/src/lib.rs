//! Workloads shared by the criterion benches.

use tropnet::netgen::{fixture, gen_graded, random_evidence};
use tropnet::{Assignment, Fixture, GenConfig, NetworkModel};

/// A fixture with `l` states per variable, random CPTs and random evidence.
pub fn fixture_workload(which: Fixture, l: usize, seed: u64) -> (NetworkModel, Assignment) {
    let net = fixture(which)
        .expect("valid fixture")
        .with_states(l)
        .with_random_cpts(seed);
    let x = random_evidence(&net, seed);
    (net, x)
}

/// A random graded network with `ranks` slices of `width` hidden and one
/// observed variable each.
pub fn layered_workload(ranks: usize, width: usize, l: usize, seed: u64) -> (NetworkModel, Assignment) {
    let cfg = GenConfig {
        seed,
        hidden_per_rank: vec![width; ranks],
        observed_per_rank: vec![1; ranks],
        states_per_var: l,
        edge_density: 0.5,
        max_parents: 4,
    };
    let net = gen_graded(&cfg).expect("feasible config");
    let x = random_evidence(&net, seed);
    (net, x)
}
