//! Brute-force Markov-chain checks on small graphs.
//!
//! The proposed walk is a chain on `(staying, sampling)` pairs: diagonal
//! states `(i, i)` after a transition, off-diagonal `(i, j)` after sampling
//! neighbor `j` while staying at `i`. This module builds that chain densely,
//! solves it by power iteration and compares against the closed-form
//! stationary law
//!
//! ```text
//! π(i, j) = α · m(i, j) / 2|E|          i ≠ j
//! π(i, i) = (1 − α) · d_sum(i) / 2|E|
//! ```
//!
//! together with the identities behind the `1 / d_sum` reweighted estimator.
//! Dense storage limits it to a few hundred states.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::estimators::{EstimateError, FeatureFn};
use crate::graph::{DirectedGraph, NodeId};
use crate::labeling::PropertyMap;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error(
        "power iteration did not converge in {iterations} iterations (last change {last_change:e})"
    )]
    NotConverged { iterations: usize, last_change: f64 },
    #[error("graph has no edges")]
    Empty,
    #[error(transparent)]
    Feature(#[from] EstimateError),
}

/// Ordered chain states with a reverse index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    states: Vec<(NodeId, NodeId)>,
    index: HashMap<(NodeId, NodeId), usize>,
}

impl StateSpace {
    pub fn from_states(states: Vec<(NodeId, NodeId)>) -> Self {
        let index = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        StateSpace { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[(NodeId, NodeId)] {
        &self.states
    }

    pub fn position(&self, state: (NodeId, NodeId)) -> Option<usize> {
        self.index.get(&state).copied()
    }
}

/// Diagonal states by node id, then adjacent ordered pairs lexicographically.
pub fn enumerate_states(g: &DirectedGraph) -> StateSpace {
    let n = g.node_count();
    let mut states: Vec<(NodeId, NodeId)> = (0..n).map(|i| (i, i)).collect();
    for i in 0..n {
        states.extend(g.distinct_neighbors(i).into_iter().map(|j| (i, j)));
    }
    StateSpace::from_states(states)
}

/// Dense row-stochastic matrix over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    space: StateSpace,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    fn zeros(space: StateSpace) -> Self {
        let dim = space.len();
        TransitionMatrix {
            space,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim() + to]
    }

    fn add(&mut self, from: usize, to: usize, p: f64) {
        let dim = self.dim();
        self.entries[from * dim + to] += p;
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let dim = self.dim();
        &self.entries[from * dim..(from + 1) * dim]
    }

    /// Probability between two named states, 0 if either is absent.
    pub fn prob(&self, from: (NodeId, NodeId), to: (NodeId, NodeId)) -> f64 {
        match (self.space.position(from), self.space.position(to)) {
            (Some(a), Some(b)) => self.get(a, b),
            _ => 0.0,
        }
    }

    /// Largest `|Σ_row − 1|`.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dim())
            .map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Probability vector over a state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(pub Vec<f64>);

impl Distribution {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        assert_eq!(
            self.0.len(),
            other.0.len(),
            "distributions over different spaces"
        );
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_alpha(alpha: f64) -> Result<(), OracleError> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(OracleError::InvalidAlpha(alpha))
    }
}

/// Transition matrix of the proposed walk on `(staying, sampling)` states.
///
/// From any state staying at `i`: move to `(i, k)` with `α m(i,k) / d_sum(i)`
/// and to `(k, k)` with `(1 − α) m(i,k) / d_sum(i)`.
pub fn build_transition_matrix(
    g: &DirectedGraph,
    alpha: f64,
) -> Result<TransitionMatrix, OracleError> {
    check_alpha(alpha)?;
    let mut p = TransitionMatrix::zeros(enumerate_states(g));
    for from in 0..p.dim() {
        let (i, _) = p.space.states[from];
        let d_sum = g.total_degree(i) as f64;
        for k in g.distinct_neighbors(i) {
            let share = g.multiplicity(i, k) as f64 / d_sum;
            let to_neighbor = p.space.position((i, k)).expect("adjacent pair is a state");
            let to_transition = p.space.position((k, k)).expect("diagonal state");
            p.add(from, to_neighbor, alpha * share);
            p.add(from, to_transition, (1.0 - alpha) * share);
        }
    }
    Ok(p)
}

/// The closed-form stationary law, in [`enumerate_states`] order.
pub fn closed_form_stationary(g: &DirectedGraph, alpha: f64) -> Result<Distribution, OracleError> {
    check_alpha(alpha)?;
    if g.edge_count() == 0 {
        return Err(OracleError::Empty);
    }
    let two_e = 2.0 * g.edge_count() as f64;
    let space = enumerate_states(g);
    Ok(Distribution(
        space
            .states()
            .iter()
            .map(|&(i, j)| {
                if i == j {
                    (1.0 - alpha) * g.total_degree(i) as f64 / two_e
                } else {
                    alpha * g.multiplicity(i, j) as f64 / two_e
                }
            })
            .collect(),
    ))
}

/// Iterates `x ← x P` from the uniform vector until the largest coordinate
/// change drops below `tol`.
pub fn stationary_power_iteration(
    p: &TransitionMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<Distribution, OracleError> {
    let dim = p.dim();
    // sparse copy of the rows: (to, prob)
    let rows: Vec<Vec<(usize, f64)>> = (0..dim)
        .map(|r| {
            p.row(r)
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(c, &x)| (c, x))
                .collect()
        })
        .collect();
    let mut x = vec![1.0 / dim as f64; dim];
    let mut next = vec![0.0; dim];
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (r, row) in rows.iter().enumerate() {
            let mass = x[r];
            if mass == 0.0 {
                continue;
            }
            for &(c, prob) in row {
                next[c] += mass * prob;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        change = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if change < tol {
            return Ok(Distribution(x));
        }
    }
    Err(OracleError::NotConverged {
        iterations: max_iters,
        last_change: change,
    })
}

/// Power iteration with the default tolerance `1e-13` and iteration cap `1e6`.
pub fn stationary(p: &TransitionMatrix) -> Result<Distribution, OracleError> {
    stationary_power_iteration(p, 1e-13, 1_000_000)
}

/// Checks `Σ_{j ∈ N(i)} m(i, j) = d_sum(i)` for every node, in integers.
pub fn verify_lemma_mdsum(g: &DirectedGraph) -> bool {
    (0..g.node_count()).all(|i| {
        let total: usize = g
            .distinct_neighbors(i)
            .into_iter()
            .map(|j| {
                usize::from(g.out_neighbors(i).contains(&j))
                    + usize::from(g.in_neighbors(i).contains(&j))
            })
            .sum();
        total == g.out_degree(i) + g.in_degree(i)
    })
}

/// Checks `m(i, j) = m(j, i)` for every adjacent pair.
pub fn verify_multiplicity_symmetry(g: &DirectedGraph) -> bool {
    (0..g.node_count()).all(|i| {
        g.distinct_neighbors(i)
            .into_iter()
            .all(|j| g.multiplicity(i, j) == g.multiplicity(j, i))
    })
}

/// Absolute errors of the two estimator identities under the exact
/// stationary law: `(2|E|/n) E_π(w g) = E_u(f)` and `(2|E|/n) E_π(w) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub weighted_feature: f64,
    pub uniform_mean: f64,
    pub weighted_feature_error: f64,
    pub weight_error: f64,
}

pub fn verify_estimator_identities(
    g: &DirectedGraph,
    props: &[PropertyMap],
    alpha: f64,
    f: &FeatureFn,
) -> Result<IdentityReport, OracleError> {
    let pi = closed_form_stationary(g, alpha)?;
    let space = enumerate_states(g);
    let names: Vec<String> = props.iter().map(|p| p.name.clone()).collect();
    let bound = f.bind(&names)?;
    let n = g.node_count();
    let node_value: Vec<f64> = (0..n)
        .map(|v| {
            let row: Vec<f64> = props.iter().map(|p| p.values[v]).collect();
            bound.eval(g.out_degree(v), g.in_degree(v), &row)
        })
        .collect();
    let scale = 2.0 * g.edge_count() as f64 / n as f64;
    let mut e_wg = 0.0;
    let mut e_w = 0.0;
    for (&(_, j), &mass) in space.states().iter().zip(pi.values()) {
        let w = 1.0 / g.total_degree(j) as f64;
        e_wg += mass * w * node_value[j];
        e_w += mass * w;
    }
    let uniform_mean = node_value.iter().sum::<f64>() / n as f64;
    let weighted_feature = scale * e_wg;
    Ok(IdentityReport {
        weighted_feature,
        uniform_mean,
        weighted_feature_error: (weighted_feature - uniform_mean).abs(),
        weight_error: (scale * e_w - 1.0).abs(),
    })
}

/// Simple random walk on nodes, states `(i, i)`.
pub fn srw_transition_matrix(g: &DirectedGraph) -> TransitionMatrix {
    let n = g.node_count();
    let mut p = TransitionMatrix::zeros(StateSpace::from_states((0..n).map(|i| (i, i)).collect()));
    for i in 0..n {
        let d = g.total_degree(i) as f64;
        for j in g.distinct_neighbors(i) {
            p.add(i, j, g.multiplicity(i, j) as f64 / d);
        }
    }
    p
}

/// Metropolis–Hastings walk on nodes with uniform target, states `(i, i)`.
pub fn mhrw_transition_matrix(g: &DirectedGraph) -> TransitionMatrix {
    let n = g.node_count();
    let mut p = TransitionMatrix::zeros(StateSpace::from_states((0..n).map(|i| (i, i)).collect()));
    for i in 0..n {
        let di = g.total_degree(i) as f64;
        let mut stay = 1.0;
        for j in g.distinct_neighbors(i) {
            let dj = g.total_degree(j) as f64;
            let move_p = g.multiplicity(i, j) as f64 / di * (di / dj).min(1.0);
            p.add(i, j, move_p);
            stay -= move_p;
        }
        p.add(i, i, stay);
    }
    p
}

/// Non-backtracking walk on directed pairs `(previous, current)`, one
/// occurrence of `previous` removed from the current node's multiset.
pub fn nbrw_transition_matrix(g: &DirectedGraph) -> TransitionMatrix {
    let mut pairs = Vec::new();
    for u in 0..g.node_count() {
        pairs.extend(g.distinct_neighbors(u).into_iter().map(|v| (u, v)));
    }
    let mut p = TransitionMatrix::zeros(StateSpace::from_states(pairs));
    for from in 0..p.dim() {
        let (u, v) = p.space.states[from];
        let d = g.total_degree(v);
        for w in g.distinct_neighbors(v) {
            let to = p.space.position((v, w)).expect("adjacent pair");
            let prob = if d == 1 {
                1.0
            } else {
                (g.multiplicity(v, w) - usize::from(w == u)) as f64 / (d - 1) as f64
            };
            if prob > 0.0 {
                p.add(from, to, prob);
            }
        }
    }
    p
}

/// Node marginal of a distribution, keyed by the second element of each
/// state (the sampling node for the proposed chain, the current node for
/// NBRW pairs, the node itself for node chains).
pub fn sampling_marginal(space: &StateSpace, dist: &Distribution, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&(_, j), &mass) in space.states().iter().zip(dist.values()) {
        out[j] += mass;
    }
    out
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    fn push(&mut self, name: impl Into<String>, error: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            max_abs_error: error,
            tolerance,
            passed: error <= tolerance,
        });
    }

    fn push_bool(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push(Check {
            name: name.into(),
            max_abs_error: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<48} max_abs_err={:.3e} tol={:.0e} {}",
                c.name,
                c.max_abs_error,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        if self.all_passed() {
            writeln!(f, "all identities pass")
        } else {
            writeln!(f, "some identities FAILED")
        }
    }
}

/// Runs every oracle check on `g` for each `alpha` and feature.
pub fn verify_suite(
    g: &DirectedGraph,
    props: &[PropertyMap],
    alphas: &[f64],
    features: &[FeatureFn],
) -> Result<VerificationReport, OracleError> {
    let mut report = VerificationReport::default();
    report.push_bool("lemma: sum_j m(e_ij) = d_sum(i)", verify_lemma_mdsum(g));
    report.push_bool(
        "symmetry: m(e_ij) = m(e_ji)",
        verify_multiplicity_symmetry(g),
    );
    for &alpha in alphas {
        let p = build_transition_matrix(g, alpha)?;
        report.push(
            format!("alpha={alpha}: row sums"),
            p.max_row_sum_error(),
            1e-12,
        );
        let closed = closed_form_stationary(g, alpha)?;
        report.push(
            format!("alpha={alpha}: closed form total mass"),
            (closed.total() - 1.0).abs(),
            1e-12,
        );
        match stationary(&p) {
            Ok(iterated) => report.push(
                format!("alpha={alpha}: power iteration vs closed form"),
                iterated.max_abs_diff(&closed),
                1e-9,
            ),
            Err(OracleError::NotConverged { .. }) => {
                report.push_bool(format!("alpha={alpha}: power iteration converged"), false)
            }
            Err(e) => return Err(e),
        }
        for f in features {
            let id = verify_estimator_identities(g, props, alpha, f)?;
            report.push(
                format!("alpha={alpha}: 2|E|/n E_pi(wg) = E_u({f})"),
                id.weighted_feature_error,
                1e-12,
            );
        }
        let id = verify_estimator_identities(g, props, alpha, &FeatureFn::constant(1.0))?;
        report.push(
            format!("alpha={alpha}: 2|E|/n E_pi(w) = 1"),
            id.weight_error,
            1e-12,
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::g3;

    fn state(g: &DirectedGraph, a: u64, b: u64) -> (NodeId, NodeId) {
        (g.dense_id(a).unwrap(), g.dense_id(b).unwrap())
    }

    #[test]
    fn g3_states() {
        let g = g3();
        let space = enumerate_states(&g);
        let expected: Vec<_> = [(1, 1), (2, 2), (3, 3), (1, 2), (2, 1), (2, 3), (3, 2)]
            .iter()
            .map(|&(a, b)| state(&g, a, b))
            .collect();
        assert_eq!(space.states(), expected.as_slice());
    }

    #[test]
    fn single_edge_states() {
        let g = DirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(enumerate_states(&g).len(), 4);
    }

    #[test]
    fn g3_transition_entries() {
        let g = g3();
        for alpha in [0.0, 0.3, 0.5, 0.9] {
            let p = build_transition_matrix(&g, alpha).unwrap();
            assert_eq!(p.prob(state(&g, 3, 3), state(&g, 3, 2)), alpha);
            assert_eq!(p.prob(state(&g, 1, 1), state(&g, 2, 2)), 1.0 - alpha);
            // any state staying at 3 behaves the same
            assert_eq!(p.prob(state(&g, 3, 2), state(&g, 2, 2)), 1.0 - alpha);
            assert_eq!(p.prob(state(&g, 1, 1), state(&g, 3, 3)), 0.0);
            assert!(p.max_row_sum_error() < 1e-12);
            assert!(p.min_entry() >= 0.0);
        }
        assert_eq!(
            build_transition_matrix(&g, 1.0),
            Err(OracleError::InvalidAlpha(1.0))
        );
    }

    #[test]
    fn g3_closed_form_values() {
        let g = g3();
        let pi = closed_form_stationary(&g, 0.5).unwrap();
        let space = enumerate_states(&g);
        let at = |a, b| pi.values()[space.position(state(&g, a, b)).unwrap()];
        assert_eq!(at(2, 2), 0.25);
        assert!((at(1, 2) - 1.0 / 6.0).abs() < 1e-16);
        // in twelfths: (1,1)=2 (2,2)=3 (3,3)=1 (1,2)=2 (2,1)=2 (2,3)=1 (3,2)=1
        let twelfths: Vec<f64> = pi.values().iter().map(|x| x * 12.0).collect();
        let expected = [2.0, 3.0, 1.0, 2.0, 2.0, 1.0, 1.0];
        for (a, b) in twelfths.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((pi.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn g3_power_iteration_matches() {
        let g = g3();
        let p = build_transition_matrix(&g, 0.5).unwrap();
        let iterated = stationary(&p).unwrap();
        let closed = closed_form_stationary(&g, 0.5).unwrap();
        assert!(iterated.max_abs_diff(&closed) < 1e-9);
    }

    #[test]
    fn one_state_chain() {
        let p = TransitionMatrix {
            space: StateSpace::from_states(vec![(0, 0)]),
            entries: vec![1.0],
        };
        assert_eq!(stationary(&p).unwrap(), Distribution(vec![1.0]));
    }

    #[test]
    fn periodic_chain_flagged() {
        // G3 is bipartite; with alpha = 0 the transition chain alternates
        let g = g3();
        let p = build_transition_matrix(&g, 0.0).unwrap();
        assert!(matches!(
            stationary_power_iteration(&p, 1e-13, 10_000),
            Err(OracleError::NotConverged { .. })
        ));
    }

    #[test]
    fn alpha_zero_on_aperiodic_graph() {
        // a triangle with a pendant node is not bipartite
        let g = DirectedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 2)]).unwrap();
        let p = build_transition_matrix(&g, 0.0).unwrap();
        let iterated = stationary(&p).unwrap();
        let closed = closed_form_stationary(&g, 0.0).unwrap();
        assert!(iterated.max_abs_diff(&closed) < 1e-9);
        let n = g.node_count();
        assert!(closed.values()[n..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lemma_holds_and_detects_corruption() {
        let g = g3();
        assert!(verify_lemma_mdsum(&g));
        assert!(verify_multiplicity_symmetry(&g));
        // node 0 lists friend 1 twice: d_sum = 3 but Σ m = 2
        let broken = DirectedGraph::from_adjacency_unchecked(
            vec![vec![1, 1], vec![0]],
            vec![vec![1], vec![0]],
            vec![0, 1],
        );
        assert!(!verify_lemma_mdsum(&broken));
    }

    #[test]
    fn estimator_identities_on_g3() {
        let g = g3();
        for alpha in [0.0, 0.5, 0.9] {
            let r = verify_estimator_identities(&g, &[], alpha, &FeatureFn::OutDegree).unwrap();
            assert!(r.weighted_feature_error < 1e-12);
            assert!(r.weight_error < 1e-12);
            assert!((r.uniform_mean - 1.0).abs() < 1e-15);
            // f ≡ 1 turns the first identity into the second
            let one =
                verify_estimator_identities(&g, &[], alpha, &FeatureFn::constant(1.0)).unwrap();
            assert!((one.weighted_feature_error - one.weight_error).abs() < 1e-15);
        }
    }

    #[test]
    fn baseline_chains() {
        let g = g3();
        let proposed = stationary(&build_transition_matrix(&g, 0.5).unwrap()).unwrap();
        let marginal = sampling_marginal(&enumerate_states(&g), &proposed, 3);
        assert!((marginal[1] - 0.5).abs() < 1e-9);

        let mh = mhrw_transition_matrix(&g);
        assert!(mh.max_row_sum_error() < 1e-12);
        let uniform = stationary(&mh).unwrap();
        for x in uniform.values() {
            assert!((x - 1.0 / 3.0).abs() < 1e-9);
        }

        let nb = nbrw_transition_matrix(&g);
        assert!(nb.max_row_sum_error() < 1e-12);
        let nb_pi = stationary(&nb).unwrap();
        let nodes = sampling_marginal(nb.space(), &nb_pi, 3);
        for (v, expected) in [(0, 1.0 / 3.0), (1, 0.5), (2, 1.0 / 6.0)] {
            assert!((nodes[v] - expected).abs() < 1e-9, "{v}: {}", nodes[v]);
        }

        assert!(srw_transition_matrix(&g).max_row_sum_error() < 1e-12);
    }

    #[test]
    fn suite_passes_on_g3() {
        let g = g3();
        let report = verify_suite(&g, &[], &[0.1, 0.5, 0.9], &[FeatureFn::OutDegree]).unwrap();
        assert!(report.all_passed(), "{report}");
        assert!(report.to_string().contains("all identities pass"));
    }
}
