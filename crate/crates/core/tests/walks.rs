mod common;

use std::collections::{HashMap, HashSet};

use neighbor_walk::fixtures::g3;
use neighbor_walk::{
    generate_dba, walk, walk_into, ApiSession, DirectedGraph, EstimatorSink, FeatureFn, SampleKind,
    SampleRecord, WalkLimits, Walker, Weighting,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_connected_digraph, random_labels, reference_uniform_mean};

fn unlimited(g: &DirectedGraph) -> ApiSession<'_> {
    ApiSession::new(g, &[], usize::MAX).unwrap()
}

#[test]
fn g3_pair_occupancy_matches_closed_form() {
    // closed form at alpha = 1/2 on 1->2, 2->1, 2->3 (dense ids 0, 1, 2):
    // d_sum = (2, 3, 1), 2|E| = 6
    let expected: HashMap<(usize, usize), f64> = [
        ((0, 0), 1.0 / 6.0),
        ((1, 1), 1.0 / 4.0),
        ((2, 2), 1.0 / 12.0),
        ((0, 1), 1.0 / 6.0),
        ((1, 0), 1.0 / 6.0),
        ((1, 2), 1.0 / 12.0),
        ((2, 1), 1.0 / 12.0),
    ]
    .into_iter()
    .collect();
    assert!((expected.values().sum::<f64>() - 1.0).abs() < 1e-15);

    let g = g3();
    let steps = 1_000_000;
    let mut freq: HashMap<(usize, usize), f64> = HashMap::new();
    for seed in 0..3 {
        let mut session = unlimited(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sink = |s: usize, r: SampleRecord| *freq.entry((s, r.node)).or_default() += 1.0;
        walk_into(
            Walker::Proposed { alpha: 0.5 },
            &mut session,
            0,
            WalkLimits::records(steps),
            &mut rng,
            &mut sink,
        )
        .unwrap();
    }
    assert_eq!(freq.len(), expected.len());
    for (state, p) in &expected {
        let observed = freq[state] / (3 * steps) as f64;
        assert!((observed - p).abs() < 0.01, "{state:?}: {observed} vs {p}");
    }
}

#[test]
fn neighbor_bursts_are_geometric() {
    let g = generate_dba(500, 4, 1.0, 3).unwrap();
    for (alpha, records) in [(0.5, 400_000), (0.9, 2_000_000)] {
        let mut session = unlimited(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut neighbors, mut transitions) = (0usize, 0usize);
        let mut sink = |_: usize, r: SampleRecord| match r.kind {
            SampleKind::Neighbor => neighbors += 1,
            SampleKind::Transition => transitions += 1,
        };
        walk_into(
            Walker::Proposed { alpha },
            &mut session,
            0,
            WalkLimits::records(records),
            &mut rng,
            &mut sink,
        )
        .unwrap();
        assert!(transitions >= 100_000);
        let mean = neighbors as f64 / transitions as f64;
        let target = alpha / (1.0 - alpha);
        assert!(
            (mean - target).abs() / target < 0.05,
            "alpha {alpha}: {mean} vs {target}"
        );
    }
}

#[test]
fn srw_visits_follow_degree_on_g3() {
    let g = g3();
    let mut session = unlimited(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut visits = [0usize; 3];
    let mut sink = |_: usize, r: SampleRecord| visits[r.node] += 1;
    walk_into(
        Walker::Srw,
        &mut session,
        2,
        WalkLimits::records(1_000_000),
        &mut rng,
        &mut sink,
    )
    .unwrap();
    for (v, expected) in visits.iter().zip([1.0 / 3.0, 0.5, 1.0 / 6.0]) {
        assert!((*v as f64 / 1e6 - expected).abs() < 0.005);
    }
}

#[test]
fn mhrw_visits_are_uniform() {
    let (n, edges) = random_connected_digraph(21);
    let g = DirectedGraph::from_edges(n, &edges).unwrap();
    let mut session = unlimited(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut visits = vec![0usize; n];
    let mut sink = |_: usize, r: SampleRecord| visits[r.node] += 1;
    walk_into(
        Walker::Mhrw,
        &mut session,
        0,
        WalkLimits::records(2_000_000),
        &mut rng,
        &mut sink,
    )
    .unwrap();
    for v in visits {
        assert!((v as f64 / 2e6 - 1.0 / n as f64).abs() < 0.005);
    }
}

/// Mean absolute error over 10 seeds of each feature estimate after 10^3
/// and after 10^6 records.
fn convergence_errors(
    g: &DirectedGraph,
    props: &[neighbor_walk::PropertyMap],
    walker: Walker,
    truth: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let names: Vec<String> = props.iter().map(|p| p.name.clone()).collect();
    let features = [FeatureFn::OutDegree, FeatureFn::label_rate("a")];
    let weighting = if walker.needs_reweighting() {
        Weighting::InverseDegree
    } else {
        Weighting::Uniform
    };
    let mut early = vec![0.0; features.len()];
    let mut late = vec![0.0; features.len()];
    for seed in 0..10u64 {
        let bound = features.iter().map(|f| f.bind(&names).unwrap()).collect();
        let mut acc = EstimatorSink::new(bound, weighting);
        let mut snapshot = None;
        let mut sink = |_: usize, r: SampleRecord| {
            acc.add(&r);
            if acc.sample_size() == 1000 {
                snapshot = Some(acc.finish().unwrap());
            }
        };
        let mut session = ApiSession::new(g, props, usize::MAX).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = seed as usize % g.node_count();
        walk_into(
            walker,
            &mut session,
            start,
            WalkLimits::records(1_000_000),
            &mut rng,
            &mut sink,
        )
        .unwrap();
        let last = acc.finish().unwrap();
        for k in 0..features.len() {
            early[k] += (snapshot.as_ref().unwrap()[k].value - truth[k]).abs() / 10.0;
            late[k] += (last[k].value - truth[k]).abs() / 10.0;
        }
    }
    (early, late)
}

#[test]
fn every_walker_estimator_pair_converges() {
    let walkers = [
        Walker::Proposed { alpha: 0.5 },
        Walker::Proposed { alpha: 0.9 },
        Walker::Srw,
        Walker::Nbrw,
        Walker::Mhrw,
    ];
    for graph_seed in [4u64, 9] {
        let (n, edges) = random_connected_digraph(graph_seed);
        let g = DirectedGraph::from_edges(n, &edges).unwrap();
        let props = random_labels(n, graph_seed);
        let truth: Vec<f64> = [FeatureFn::OutDegree, FeatureFn::label_rate("a")]
            .iter()
            .map(|f| reference_uniform_mean(n, &edges, &props, f))
            .collect();
        for walker in walkers {
            let (early, late) = convergence_errors(&g, &props, walker, &truth);
            for k in 0..truth.len() {
                assert!(
                    late[k] < early[k],
                    "{walker} graph {graph_seed} feature {k}: {early:?} -> {late:?}"
                );
                assert!(
                    late[k] < 0.01 * truth[k].abs().max(1.0),
                    "{walker}: {late:?}"
                );
            }
        }
    }
}

fn walker_strategy() -> impl Strategy<Value = Walker> {
    prop_oneof![
        (0.0f64..0.99).prop_map(|alpha| Walker::Proposed { alpha }),
        Just(Walker::Srw),
        Just(Walker::Nbrw),
        Just(Walker::Mhrw),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn budget_law(graph_seed in any::<u64>(), walker in walker_strategy(), budget_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let (n, edges) = random_connected_digraph(graph_seed);
        let g = DirectedGraph::from_edges(n, &edges).unwrap();
        let budget = 1 + (budget_frac * n as f64) as usize % n;
        let mut session = ApiSession::new(&g, &[], budget).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = seed as usize % n;
        let mut staying = HashSet::new();
        let mut sink = |s: usize, _: SampleRecord| {
            staying.insert(s);
        };
        let summary = walk_into(walker, &mut session, start, WalkLimits::default(), &mut rng, &mut sink).unwrap();
        prop_assert_eq!(summary.queries_used, staying.len());
        // every node is reachable, so the walk runs until the budget is spent
        prop_assert_eq!(summary.queries_used, budget);
    }

    #[test]
    fn walks_are_deterministic(graph_seed in any::<u64>(), walker in walker_strategy(), seed in any::<u64>()) {
        let (n, edges) = random_connected_digraph(graph_seed);
        let g = DirectedGraph::from_edges(n, &edges).unwrap();
        let props = random_labels(n, graph_seed);
        let run = || {
            let mut session = ApiSession::new(&g, &props, n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            walk(walker, &mut session, 0, WalkLimits::default(), &mut rng).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}
