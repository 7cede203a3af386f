#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use neighbor_walk::oracle::{build_transition_matrix, enumerate_states, stationary};
use neighbor_walk::{DirectedGraph, FeatureFn, NodeId, PropertyMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHAS: [f64; 4] = [0.1, 0.5, 0.9, 0.99];

/// A random weakly connected digraph on 2..=12 nodes: a random tree with
/// random orientations (some reciprocal) plus a sprinkle of extra edges.
pub fn random_connected_digraph(seed: u64) -> (usize, Vec<(NodeId, NodeId)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=12usize);
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let p = rng.random_range(0..v);
        match rng.random_range(0..3) {
            0 => {
                edges.insert((v, p));
            }
            1 => {
                edges.insert((p, v));
            }
            _ => {
                edges.insert((v, p));
                edges.insert((p, v));
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random::<f64>() < 0.12 {
                edges.insert((u, v));
            }
        }
    }
    (n, edges.into_iter().collect())
}

pub fn oracle_graphs(count: u64) -> Vec<(usize, Vec<(NodeId, NodeId)>)> {
    (0..count)
        .map(|s| random_connected_digraph(1000 + s))
        .collect()
}

/// Closed-form stationary mass of every `(staying, sampling)` state,
/// computed straight from the edge list.
pub fn reference_stationary(
    n: usize,
    edges: &[(NodeId, NodeId)],
    alpha: f64,
) -> HashMap<(NodeId, NodeId), f64> {
    let set: BTreeSet<_> = edges.iter().copied().collect();
    let two_e = 2.0 * set.len() as f64;
    let mut d_sum = vec![0usize; n];
    for &(u, v) in &set {
        d_sum[u] += 1;
        d_sum[v] += 1;
    }
    let mut pi = HashMap::new();
    for (i, &d) in d_sum.iter().enumerate() {
        pi.insert((i, i), (1.0 - alpha) * d as f64 / two_e);
        for j in 0..n {
            let m = usize::from(set.contains(&(i, j))) + usize::from(set.contains(&(j, i)));
            if i != j && m > 0 {
                pi.insert((i, j), alpha * m as f64 / two_e);
            }
        }
    }
    pi
}

/// L∞ distance between the power-iterated law and the edge-list reference.
/// States missing from either side count as a full mismatch.
pub fn power_vs_reference(n: usize, edges: &[(NodeId, NodeId)], alpha: f64) -> f64 {
    let g = DirectedGraph::from_edges(n, edges).expect("valid graph");
    let p = build_transition_matrix(&g, alpha).expect("valid alpha");
    let dist = stationary(&p).expect("power iteration converges");
    let reference = reference_stationary(n, edges, alpha);
    let space = enumerate_states(&g);
    if space.len() != reference.len() {
        return f64::INFINITY;
    }
    space
        .states()
        .iter()
        .zip(dist.values())
        .map(|(s, &x)| reference.get(s).map_or(f64::INFINITY, |&r| (r - x).abs()))
        .fold(0.0, f64::max)
}

/// Two random 0/1 label columns, so label features have something to check.
pub fn random_labels(n: usize, seed: u64) -> Vec<PropertyMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ["a", "b"]
        .iter()
        .map(|name| {
            let values = (0..n)
                .map(|_| f64::from(u8::from(rng.random::<f64>() < 0.4)))
                .collect();
            PropertyMap::new(*name, values)
        })
        .collect()
}

pub fn oracle_features() -> Vec<FeatureFn> {
    vec![
        FeatureFn::OutDegree,
        FeatureFn::InDegree,
        FeatureFn::TotalDegree,
        FeatureFn::OutDegreeIs(1),
        FeatureFn::label_rate("a"),
        FeatureFn::label_rate("b"),
        FeatureFn::constant(1.0),
    ]
}

/// Uniform node average of `f`, from raw degrees and label columns.
pub fn reference_uniform_mean(
    n: usize,
    edges: &[(NodeId, NodeId)],
    props: &[PropertyMap],
    f: &FeatureFn,
) -> f64 {
    let mut d_out = vec![0usize; n];
    let mut d_in = vec![0usize; n];
    for &(u, v) in edges {
        d_out[u] += 1;
        d_in[v] += 1;
    }
    let value = |v: usize| -> f64 {
        match f {
            FeatureFn::OutDegree => d_out[v] as f64,
            FeatureFn::InDegree => d_in[v] as f64,
            FeatureFn::TotalDegree => (d_out[v] + d_in[v]) as f64,
            FeatureFn::OutDegreeIs(d) => f64::from(u8::from(d_out[v] == *d)),
            FeatureFn::Property(name) => {
                props
                    .iter()
                    .find(|p| &p.name == name)
                    .expect("label")
                    .values[v]
            }
            FeatureFn::Constant(c) => *c,
            FeatureFn::Scaled(..) => unimplemented!(),
        }
    };
    (0..n).map(value).sum::<f64>() / n as f64
}
