use std::f64::consts::LN_2;

use proptest::prelude::*;

use super::*;
use crate::model::NetworkBuilder;
use crate::netgen::{fixture, gen_graded, random_evidence, Fixture, GenConfig};
use crate::tropical::tropicalize_model;

/// Probability-space oracle: all hidden assignments with maximal joint
/// probability, found by a plain odometer over hidden variables and
/// `joint_probability`. Shares no code with the weight-space engines.
fn oracle_argmax(net: &NetworkModel, x: &Assignment) -> (f64, Vec<Assignment>) {
    let hidden: Vec<NodeId> = net.hidden().collect();
    let mut digits = vec![0usize; hidden.len()];
    let mut best = 0.0f64;
    let mut all: Vec<(f64, Assignment)> = Vec::new();
    loop {
        let mut full = x.clone();
        for (h, d) in hidden.iter().zip(&digits) {
            full.set(*h, *d);
        }
        let p = net.joint_probability(&full).unwrap();
        best = best.max(p);
        let mut y = Assignment::new(net.len());
        for (h, d) in hidden.iter().zip(&digits) {
            y.set(*h, *d);
        }
        all.push((p, y));
        let mut i = 0;
        loop {
            if i == hidden.len() {
                let arg = if best > 0.0 {
                    all.into_iter()
                        .filter(|(p, _)| (best - p) <= 1e-10 * best)
                        .map(|(_, y)| y)
                        .collect()
                } else {
                    Vec::new()
                };
                return (best, arg);
            }
            digits[i] += 1;
            if digits[i] < net.variable(hidden[i]).cardinality() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn sorted(mut v: Vec<Assignment>) -> Vec<Assignment> {
    v.sort();
    v
}

fn fig3(seed: u64) -> NetworkModel {
    fixture(Fixture::Fig3).unwrap().with_random_cpts(seed)
}

fn by_name(net: &NetworkModel, pairs: &[(&str, usize)]) -> Assignment {
    let mut a = Assignment::new(net.len());
    for &(n, s) in pairs {
        a.set(net.find(n).unwrap(), s);
    }
    a
}

fn w(net: &NetworkModel, wm: &WeightModel, var: &str, state: usize, parents: &[(&str, usize)]) -> f64 {
    let v = net.find(var).unwrap();
    let a = by_name(net, parents);
    wm.table(v.0).get(net.row_index(v, &a).unwrap(), state).value()
}

#[test]
fn slice_term_matches_hand_expansion() {
    let net = fig3(21);
    let wm = tropicalize_model(&net);
    let ranks = compute_semi_ranks(&net);
    let (x1, x2, x3) = (1, 0, 1);
    let x = by_name(&net, &[("X1", x1), ("X2", x2), ("X3", x3)]);
    for y1 in 0..2 {
        for (y2, y3) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let expected = w(&net, &wm, "Y2", y2, &[("X2", x2), ("Y1", y1)])
                + w(&net, &wm, "Y3", y3, &[("Y1", y1)])
                + w(&net, &wm, "X3", x3, &[("Y2", y2)]);
            let got = slice_term_weight(&net, &wm, &ranks, 1, &x, &[y2, y3], &[y1]).unwrap();
            assert!((got.value() - expected).abs() < 1e-12);
        }
    }
    // Rank 0 carries X1, X2 and Y1 | X1.
    let base = slice_term_weight(&net, &wm, &ranks, 0, &x, &[1], &[]).unwrap();
    let expected =
        w(&net, &wm, "X1", x1, &[]) + w(&net, &wm, "X2", x2, &[("X1", x1)]) + w(&net, &wm, "Y1", 1, &[("X1", x1)]);
    assert!((base.value() - expected).abs() < 1e-12);
}

#[test]
fn slice_term_single_uniform_variable() {
    let net = fixture(Fixture::Hmm(2)).unwrap().with_uniform_cpts();
    let wm = tropicalize_model(&net);
    let ranks = compute_semi_ranks(&net);
    let x = random_evidence(&net, 0);
    // Slice 1 = {Y2, X2}: two uniform binary factors.
    for y in 0..2 {
        let t = slice_term_weight(&net, &wm, &ranks, 1, &x, &[y], &[0]).unwrap();
        assert!((t.value() - 2.0 * LN_2).abs() < 1e-15);
    }
    let star = NetworkBuilder::new()
        .hidden("Y1", &["a", "b"])
        .hidden("Y2", &["a", "b"])
        .edge("Y1", "Y2")
        .cpt("Y1", vec![vec![0.3, 0.7]])
        .cpt("Y2", vec![vec![0.5, 0.5], vec![0.5, 0.5]])
        .build()
        .unwrap();
    let wm = tropicalize_model(&star);
    let ranks = compute_semi_ranks(&star);
    let x = Assignment::new(2);
    for y in 0..2 {
        let t = slice_term_weight(&star, &wm, &ranks, 1, &x, &[y], &[1]).unwrap();
        assert!((t.value() - LN_2).abs() < 1e-15);
    }
}

#[test]
fn slice_term_is_minus_log_of_factor_product() {
    for seed in 0..10 {
        let cfg = GenConfig {
            seed,
            hidden_per_rank: vec![2, 2, 1],
            observed_per_rank: vec![1, 2, 1],
            states_per_var: 3,
            edge_density: 0.7,
            max_parents: 4,
        };
        let net = gen_graded(&cfg).unwrap();
        let wm = tropicalize_model(&net);
        let ranks = compute_semi_ranks(&net);
        let x = random_evidence(&net, seed);
        for r in 1..=ranks.rho_max() {
            let cur = ranks.slice_states(&net, r);
            let prev = ranks.slice_states(&net, r - 1);
            for yc in cur.states() {
                for yp in prev.states() {
                    let mut full = x.clone();
                    for (v, d) in cur.variables.iter().zip(&yc) {
                        full.set(*v, *d);
                    }
                    for (v, d) in prev.variables.iter().zip(&yp) {
                        full.set(*v, *d);
                    }
                    let slice = ranks.slice(r);
                    let p: f64 = slice
                        .observed
                        .iter()
                        .chain(&slice.hidden)
                        .map(|&v| net.conditional(v, &full).unwrap())
                        .product();
                    let t = slice_term_weight(&net, &wm, &ranks, r, &x, &yc, &yp).unwrap();
                    assert!((t.value() + p.ln()).abs() < 1e-12, "seed {seed} r {r}");
                }
            }
        }
    }
}

#[test]
fn slice_plan_rejects_non_graded_slice() {
    let net = fixture(Fixture::Fig2).unwrap().with_uniform_cpts();
    let ranks = compute_semi_ranks(&net);
    let err = SlicePlan::compile(&net, &ranks, 3).unwrap_err();
    assert!(matches!(
        err,
        InferenceError::UngradedSlice { rank: 3, ref variable, ref parent } if variable == "Y5" && parent == "Y3"
    ));
}

#[test]
fn fig3_forward_pass_matches_enumeration() {
    for seed in 0..16 {
        let net = fig3(seed);
        let inf = Inferencer::new(&net);
        for code in 0..8 {
            let x = by_name(
                &net,
                &[("X1", code & 1), ("X2", (code >> 1) & 1), ("X3", (code >> 2) & 1)],
            );
            let trellis = inf.forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
            let (pmax, arg) = oracle_argmax(&net, &x);
            assert!((trellis.weight().value() + pmax.ln()).abs() < 1e-9);
            assert_eq!(sorted(backtrace(&trellis, Mode::All).unwrap()), sorted(arg));
            let sizes: Vec<usize> = trellis.columns().iter().map(Vec::len).collect();
            assert_eq!(sizes, vec![2, 4, 2]);
            assert_eq!(trellis.cell_updates(), 2 + 4 * 2 + 2 * 4);
        }
    }
}

#[test]
fn uniform_fig3_weight_is_seven_ln2() {
    let net = fixture(Fixture::Fig3).unwrap().with_uniform_cpts();
    let x = random_evidence(&net, 3);
    let r = infer(
        &net,
        &x,
        &InferenceOptions {
            mode: Mode::All,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((r.weight.value() - 7.0 * LN_2).abs() < 1e-12);
    assert_eq!(r.explanations.len(), 16);
    assert_eq!(r.explanation_count, 16);
    assert!((r.marginal.unwrap() - 0.125).abs() < 1e-15);
    // Backtrace order is slice-major and therefore already sorted by slice key.
    let inf = Inferencer::new(&net);
    let keys: Vec<Vec<usize>> = r.explanations.iter().map(|y| inf.slice_key(y)).collect();
    let mut expected = keys.clone();
    expected.sort();
    assert_eq!(keys, expected);
}

#[test]
fn deterministic_chain_has_single_explanation() {
    // Y1 = b, Y2 copies Y1, X copies Y2.
    let copy = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let net = NetworkBuilder::new()
        .hidden("Y1", &["a", "b"])
        .hidden("Y2", &["a", "b"])
        .observed("X", &["a", "b"])
        .edge("Y1", "Y2")
        .edge("Y2", "X")
        .cpt("Y1", vec![vec![0.0, 1.0]])
        .cpt("Y2", copy.clone())
        .cpt("X", copy)
        .build()
        .unwrap();
    let x = Assignment::new(3).with(NodeId(2), 1);
    let r = infer(
        &net,
        &x,
        &InferenceOptions {
            mode: Mode::All,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.weight, Weight::ZERO);
    assert_eq!(
        r.explanations,
        vec![Assignment::new(3).with(NodeId(0), 1).with(NodeId(1), 1)]
    );
    assert_eq!(r.marginal, Some(1.0));
}

#[test]
fn zero_probability_evidence() {
    // Fan network whose X1 never takes state b.
    let net = fixture(Fixture::Fan(3)).unwrap().with_cpts(|v, _, k| {
        if v.0 == 3 {
            vec![1.0, 0.0]
        } else {
            vec![1.0 / k as f64; k]
        }
    });
    let x = Assignment::new(4).with(NodeId(3), 1);
    for engine in [Engine::Auto, Engine::Dp, Engine::Oracle] {
        let r = infer(
            &net,
            &x,
            &InferenceOptions {
                engine,
                mode: Mode::All,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.weight.is_infinite());
        assert!(r.explanations.is_empty());
        assert_eq!(r.explanation_count, 0);
        assert_eq!(r.marginal, Some(0.0));
    }
    let inf = Inferencer::new(&net);
    let trellis = inf.forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
    assert_eq!(backtrace(&trellis, Mode::One), Err(InferenceError::NoExplanation));
}

#[test]
fn infinity_propagates_through_later_slices() {
    // Y2 | Y1 forbids everything when Y1 = a; Y1 = a is forced.
    let net = NetworkBuilder::new()
        .hidden("Y1", &["a", "b"])
        .hidden("Y2", &["a", "b"])
        .observed("X", &["a", "b"])
        .edge("Y1", "Y2")
        .edge("Y2", "X")
        .cpt("Y1", vec![vec![1.0, 0.0]])
        .cpt("Y2", vec![vec![0.5, 0.5], vec![0.5, 0.5]])
        .cpt("X", vec![vec![1.0, 0.0], vec![1.0, 0.0]])
        .build()
        .unwrap();
    let x = Assignment::new(3).with(NodeId(2), 1);
    let trellis = Inferencer::new(&net).forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
    assert!(trellis.weight().is_infinite());
    for r in 1..trellis.columns().len() {
        for (y, a) in trellis.column(r).iter().enumerate() {
            assert_eq!(a.is_infinite(), trellis.backpointers(r, y).is_empty());
        }
    }
}

#[test]
fn brute_force_single_hidden_variable() {
    let net = NetworkBuilder::new()
        .observed("X", &["a", "b"])
        .hidden("Y", &["a", "b"])
        .edge("X", "Y")
        .cpt("X", vec![vec![0.4, 0.6]])
        .cpt("Y", vec![vec![0.9, 0.1], vec![0.2, 0.8]])
        .build()
        .unwrap();
    let wm = tropicalize_model(&net);
    let x = Assignment::new(2).with(NodeId(0), 0);
    let bf = trop_brute_force(&net, &wm, &x, 16).unwrap();
    assert!((bf.weight.value() - (-(0.4f64.ln()) - 0.9f64.ln())).abs() < 1e-15);
    assert_eq!(bf.minimizers, vec![Assignment::new(2).with(NodeId(1), 0)]);
}

#[test]
fn brute_force_handles_non_graded_network() {
    let net = fixture(Fixture::Fig2).unwrap().with_random_cpts(8);
    let wm = tropicalize_model(&net);
    for x1 in 0..2 {
        let x = Assignment::new(6).with(NodeId(0), x1);
        let bf = trop_brute_force(&net, &wm, &x, 64).unwrap();
        let (pmax, arg) = oracle_argmax(&net, &x);
        assert!(bf.weight.is_finite());
        assert!(!bf.minimizers.is_empty());
        assert!((bf.weight.to_probability() - pmax).abs() <= 1e-9 * pmax);
        assert_eq!(sorted(bf.minimizers), sorted(arg));
    }
    assert!(matches!(
        trop_brute_force(&net, &wm, &Assignment::new(6).with(NodeId(0), 0), 31),
        Err(InferenceError::StateSpaceTooLarge { size: 32, cap: 31 })
    ));
}

#[test]
fn auto_falls_back_and_dp_refuses_non_graded() {
    let net = fixture(Fixture::Fig2).unwrap().with_random_cpts(2);
    let x = Assignment::new(6).with(NodeId(0), 1);
    let auto = infer(&net, &x, &InferenceOptions::default()).unwrap();
    assert_eq!(auto.engine, Engine::Oracle);
    assert_eq!(auto.explanations.len(), 1);
    let err = infer(
        &net,
        &x,
        &InferenceOptions {
            engine: Engine::Dp,
            ..Default::default()
        },
    )
    .unwrap_err();
    match err {
        InferenceError::NotGraded {
            variable,
            parent,
            witness,
        } => {
            assert_eq!((variable.as_str(), parent.as_str()), ("Y5", "Y3"));
            assert_eq!((witness.parent_rank, witness.expected_rank), (1, 2));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn slice_cap_is_enforced() {
    let net = fixture(Fixture::Fan(10)).unwrap().with_uniform_cpts();
    let x = Assignment::new(11).with(NodeId(10), 0);
    let opts = InferenceOptions {
        slice_cap: 1023,
        ..Default::default()
    };
    assert!(matches!(
        infer(&net, &x, &opts),
        Err(InferenceError::SliceTooLarge {
            rank: 0,
            size: 1024,
            cap: 1023
        })
    ));
    let opts = InferenceOptions {
        enumeration_cap: 1023,
        ..Default::default()
    };
    let r = infer(&net, &x, &opts).unwrap();
    assert_eq!(r.marginal, None);
}

#[test]
fn evidence_must_cover_observed_variables() {
    let net = fig3(1);
    let err = infer(&net, &Assignment::new(7), &InferenceOptions::default()).unwrap_err();
    assert!(matches!(
        err,
        InferenceError::Model(crate::model::ModelError::UnassignedVariable(_))
    ));
}

#[test]
fn star_decouples_per_leaf() {
    for seed in 0..6 {
        let n = 3 + seed as usize;
        let net = fixture(Fixture::Star(n)).unwrap().with_states(3).with_random_cpts(seed);
        let wm = tropicalize_model(&net);
        for x1 in 0..3 {
            let x = Assignment::new(n + 1).with(NodeId(0), x1);
            let trellis = Inferencer::new(&net).forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
            let decoupled: f64 = wm.table(0).get(0, x1).value()
                + (1..=n)
                    .map(|j| wm.table(j).row(x1).iter().copied().min().unwrap().value())
                    .sum::<f64>();
            assert!((trellis.weight().value() - decoupled).abs() < 1e-9);
            assert_eq!(trellis.column(0).len(), 3usize.pow(n as u32));
        }
    }
}

#[test]
fn fan_is_fully_coupled() {
    let n = 5;
    let net = fixture(Fixture::Fan(n)).unwrap().with_random_cpts(4);
    let wm = tropicalize_model(&net);
    let x = Assignment::new(n + 1).with(NodeId(n), 1);
    let trellis = Inferencer::new(&net).forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
    assert_eq!(trellis.columns().len(), 1);
    assert_eq!(trellis.column(0).len(), 1 << n);
    let mut best = f64::INFINITY;
    for code in 0..(1usize << n) {
        // Y1 is the least significant parent digit of X1's table.
        let mut total = wm.table(n).get(code, 1).value();
        for j in 0..n {
            total += wm.table(j).get(0, (code >> j) & 1).value();
        }
        best = best.min(total);
    }
    assert!((trellis.weight().value() - best).abs() < 1e-9);
}

#[test]
fn constant_shift_of_observed_weights() {
    for seed in 0..10 {
        let net = fig3(seed);
        let x = random_evidence(&net, seed + 100);
        let base = Inferencer::new(&net);
        let before = base.forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
        let x3 = net.find("X3").unwrap();
        let mut shifted = base.weights().clone();
        for e in shifted.table_mut(x3.0).entries_mut() {
            *e = e.otimes(Weight::new(0.75));
        }
        let after = Inferencer::with_weights(&net, shifted)
            .forward_dp(&x, DEFAULT_SLICE_CAP)
            .unwrap();
        assert!((after.weight().value() - before.weight().value() - 0.75).abs() < 1e-12);
        assert_eq!(
            backtrace(&after, Mode::All).unwrap(),
            backtrace(&before, Mode::All).unwrap()
        );
    }
}

#[test]
fn viterbi_single_column() {
    let hmm = Hmm {
        initial: vec![0.3, 0.7],
        transition: vec![vec![0.6, 0.4], vec![0.1, 0.9]],
        emission: vec![vec![0.8, 0.2], vec![0.5, 0.5]],
    };
    let (weight, path) = viterbi_hmm(&hmm, &[0]).unwrap();
    // candidates: 0.3*0.8 = 0.24, 0.7*0.5 = 0.35
    assert!((weight.value() + 0.35f64.ln()).abs() < 1e-15);
    assert_eq!(path, vec![1]);
}

#[test]
fn viterbi_forced_chain() {
    let hmm = Hmm {
        initial: vec![0.2, 0.5, 0.3],
        transition: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        emission: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    };
    let (weight, path) = viterbi_hmm(&hmm, &[2, 2, 2, 2]).unwrap();
    assert_eq!(path, vec![2, 2, 2, 2]);
    assert!((weight.value() + 0.3f64.ln()).abs() < 1e-15);
    let (weight, path) = viterbi_hmm(&hmm, &[2, 1]).unwrap();
    assert!(weight.is_infinite());
    assert!(path.is_empty());
}

#[test]
fn viterbi_agrees_with_chain_network() {
    let mut rng = crate::netgen::keyed_rng(5, 77, 0);
    let l = 3;
    let row = |rng: &mut _, k| crate::netgen::simplex_row(rng, k);
    let hmm = Hmm {
        initial: row(&mut rng, l),
        transition: (0..l).map(|_| row(&mut rng, l)).collect(),
        emission: (0..l).map(|_| row(&mut rng, 2)).collect(),
    };
    let obs = [0, 1, 1, 0, 0, 1, 0, 1];
    let (weight, path) = viterbi_hmm(&hmm, &obs).unwrap();
    let net = hmm_to_network(&hmm, obs.len()).unwrap();
    let x = hmm_evidence(&obs);
    let trellis = Inferencer::new(&net).forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
    assert_eq!(weight.value().to_bits(), trellis.weight().value().to_bits());
    let all: Vec<Vec<usize>> = backtrace(&trellis, Mode::All)
        .unwrap()
        .iter()
        .map(|y| hmm_path(y, obs.len()))
        .collect();
    assert!(all.contains(&path));
    let (pmax, _) = oracle_argmax(&net, &x);
    assert!((weight.value() + pmax.ln()).abs() < 1e-9);
}

#[test]
fn invalid_hmms() {
    let good = Hmm {
        initial: vec![1.0],
        transition: vec![vec![1.0]],
        emission: vec![vec![0.5, 0.5]],
    };
    assert!(viterbi_hmm(&good, &[]).is_err());
    assert!(viterbi_hmm(&good, &[2]).is_err());
    assert!(hmm_to_network(&good, 0).is_err());
    let bad = Hmm {
        initial: vec![0.5],
        ..good.clone()
    };
    assert!(matches!(viterbi_hmm(&bad, &[0]), Err(InferenceError::InvalidHmm(_))));
    let bad = Hmm {
        transition: vec![vec![1.0, 0.0]],
        ..good
    };
    assert!(matches!(viterbi_hmm(&bad, &[0]), Err(InferenceError::InvalidHmm(_))));
}

fn small_graded() -> impl Strategy<Value = GenConfig> {
    (0u64..u64::MAX, 1usize..4, 2usize..4, 0.2f64..1.0).prop_flat_map(|(seed, ranks, l, density)| {
        (
            proptest::collection::vec(1usize..3, ranks),
            proptest::collection::vec(0usize..2, ranks),
        )
            .prop_map(move |(t, s)| GenConfig {
                seed,
                hidden_per_rank: t,
                observed_per_rank: s,
                states_per_var: l,
                edge_density: density,
                max_parents: 3,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_agrees_with_probability_oracle(cfg in small_graded(), ev in 0u64..1000) {
        let net = gen_graded(&cfg).unwrap();
        let x = random_evidence(&net, ev);
        let inf = Inferencer::new(&net);
        let trellis = inf.forward_dp(&x, DEFAULT_SLICE_CAP).unwrap();
        let (pmax, arg) = oracle_argmax(&net, &x);
        prop_assert!((trellis.weight().to_probability() - pmax).abs() <= 1e-9 * pmax);
        prop_assert_eq!(sorted(backtrace(&trellis, Mode::All).unwrap()), sorted(arg));
        prop_assert_eq!(trellis.optimal_path_count(), backtrace(&trellis, Mode::All).unwrap().len() as u64);

        let ranks = inf.ranks();
        for (r, col) in trellis.columns().iter().enumerate() {
            prop_assert_eq!(col.len() as u128, ranks.slice_states(&net, r).size());
        }
        prop_assert_eq!(trellis.columns().len(), ranks.rho_max() + 1);
    }

    #[test]
    fn one_is_first_of_all(cfg in small_graded(), ev in 0u64..1000) {
        let net = gen_graded(&cfg).unwrap();
        let x = random_evidence(&net, ev);
        let one = infer(&net, &x, &InferenceOptions::default()).unwrap();
        let all = infer(&net, &x, &InferenceOptions { mode: Mode::All, ..Default::default() }).unwrap();
        let oracle = infer(&net, &x, &InferenceOptions { mode: Mode::One, engine: Engine::Oracle, ..Default::default() }).unwrap();
        prop_assert_eq!(&one.explanations[..], &all.explanations[..1]);
        prop_assert_eq!(&one.explanations, &oracle.explanations);
        prop_assert_eq!(one.explanation_count, oracle.explanation_count);
        let wm = tropicalize_model(&net);
        for y in &all.explanations {
            let mut full = x.clone();
            for (v, s) in y.assigned() {
                full.set(v, s);
            }
            prop_assert!((joint_weight(&net, &wm, &full).value() - all.weight.value()).abs() < 1e-9);
        }
    }
}
