//! Immutable directed graph with out/in adjacency, SNAP edge-list ingestion,
//! weakly-connected-component extraction and the directed Barabási–Albert
//! generator.
//!
//! Every node keeps its friend list (out-neighbors) and follower list
//! (in-neighbors) back to back in one contiguous slice, so the concatenated
//! neighbor multiset of a node is a borrowed slice of length `d_sum`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dense node index, `0..n` within a finalized graph.
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph has no edges after dropping self-loops")]
    Empty,
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Degree counts of a single node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeSummary {
    pub d_out: usize,
    pub d_in: usize,
    pub d_sum: usize,
    /// Number of reciprocal neighbors, `|N_out ∩ N_in|`.
    pub d_in_out: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    /// `offsets[v]..offsets[v + 1]` is the neighbor multiset of `v`.
    offsets: Vec<usize>,
    /// Number of out-neighbors at the front of each node's slice.
    out_len: Vec<usize>,
    adjacency: Vec<NodeId>,
    original_ids: Vec<u64>,
    edge_count: usize,
}

impl DirectedGraph {
    /// Builds a graph over `n` dense nodes. Self-loops are dropped and
    /// duplicate edges collapse to one.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        Self::from_edges_with_ids(edges, (0..n as u64).collect())
    }

    /// Like [`DirectedGraph::from_edges`] but keeps `original_ids[v]` as the
    /// external label of dense node `v`.
    pub fn from_edges_with_ids(
        edges: &[(NodeId, NodeId)],
        original_ids: Vec<u64>,
    ) -> Result<Self, GraphError> {
        let n = original_ids.len();
        let mut out_lists: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut in_lists: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                continue;
            }
            out_lists[u].push(v);
            in_lists[v].push(u);
        }
        for list in out_lists.iter_mut().chain(in_lists.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let graph = Self::from_adjacency_unchecked(out_lists, in_lists, original_ids);
        if graph.edge_count == 0 {
            return Err(GraphError::Empty);
        }
        Ok(graph)
    }

    /// Assembles a graph from raw per-node lists without checking that the
    /// out- and in-lists agree. Only meant for building deliberately broken
    /// fixtures in tests; use [`DirectedGraph::from_edges`] otherwise.
    #[doc(hidden)]
    pub fn from_adjacency_unchecked(
        out_lists: Vec<Vec<NodeId>>,
        in_lists: Vec<Vec<NodeId>>,
        original_ids: Vec<u64>,
    ) -> Self {
        let n = original_ids.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut out_len = Vec::with_capacity(n);
        let total: usize = out_lists.iter().chain(in_lists.iter()).map(Vec::len).sum();
        let mut adjacency = Vec::with_capacity(total);
        offsets.push(0);
        for (outs, ins) in out_lists.iter().zip(&in_lists) {
            out_len.push(outs.len());
            adjacency.extend_from_slice(outs);
            adjacency.extend_from_slice(ins);
            offsets.push(adjacency.len());
        }
        let edge_count = out_len.iter().sum();
        DirectedGraph {
            offsets,
            out_len,
            adjacency,
            original_ids,
            edge_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.out_len.len()
    }

    /// `|E|`, the number of distinct directed edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn original_id(&self, v: NodeId) -> u64 {
        self.original_ids[v]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    /// Dense id of the node labelled `original` in the source data.
    pub fn dense_id(&self, original: u64) -> Option<NodeId> {
        // original ids are kept in ascending order for loaded graphs, but not
        // necessarily for hand-built ones
        match self.original_ids.binary_search(&original) {
            Ok(v) => Some(v),
            Err(_) => self.original_ids.iter().position(|&id| id == original),
        }
    }

    fn check(&self, v: NodeId) -> Result<(), GraphError> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node: v,
                n: self.node_count(),
            })
        }
    }

    /// Friend list of `v`, sorted ascending. Panics if `v` is out of range.
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        let start = self.offsets[v];
        &self.adjacency[start..start + self.out_len[v]]
    }

    /// Follower list of `v`, sorted ascending. Panics if `v` is out of range.
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[self.offsets[v] + self.out_len[v]..self.offsets[v + 1]]
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out_len[v]
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v] - self.out_len[v]
    }

    pub fn total_degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self, v: NodeId) -> Result<DegreeSummary, GraphError> {
        self.check(v)?;
        let outs = self.out_neighbors(v);
        let ins = self.in_neighbors(v);
        let d_in_out = outs.iter().filter(|j| ins.binary_search(j).is_ok()).count();
        Ok(DegreeSummary {
            d_out: outs.len(),
            d_in: ins.len(),
            d_sum: outs.len() + ins.len(),
            d_in_out,
        })
    }

    /// The concatenation of the friend list and the follower list of `v`.
    /// A reciprocal neighbor appears twice.
    pub fn neighbor_multiset(&self, v: NodeId) -> Result<&[NodeId], GraphError> {
        self.check(v)?;
        Ok(self.multiset(v))
    }

    pub(crate) fn multiset(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Distinct members of `N(v) = N_out(v) ∪ N_in(v)`, ascending.
    pub fn distinct_neighbors(&self, v: NodeId) -> Vec<NodeId> {
        let mut all = self.multiset(v).to_vec();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Number of directed edges between `i` and `j` in either orientation:
    /// `1{j ∈ N_out(i)} + 1{j ∈ N_in(i)}`. Zero for `i == j` or any
    /// out-of-range id.
    pub fn multiplicity(&self, i: NodeId, j: NodeId) -> usize {
        if i == j || i >= self.node_count() || j >= self.node_count() {
            return 0;
        }
        usize::from(self.out_neighbors(i).binary_search(&j).is_ok())
            + usize::from(self.in_neighbors(i).binary_search(&j).is_ok())
    }

    /// All `(src, dst)` edges in dense ids, grouped by source.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Writes the graph as a SNAP edge list using the original node ids.
    pub fn write_edge_list<W: Write>(&self, mut sink: W) -> Result<(), GraphError> {
        writeln!(sink, "# Directed graph")?;
        writeln!(
            sink,
            "# Nodes: {} Edges: {}",
            self.node_count(),
            self.edge_count()
        )?;
        writeln!(sink, "# FromNodeId\tToNodeId")?;
        for (u, v) in self.edges() {
            writeln!(sink, "{}\t{}", self.original_ids[u], self.original_ids[v])?;
        }
        Ok(())
    }
}

/// Parses a SNAP-style edge list held in memory.
pub fn load_edge_list(text: &str) -> Result<DirectedGraph, GraphError> {
    read_edge_list(text.as_bytes())
}

/// Parses a SNAP-style edge list: `#` comment lines, then one `src dst` pair
/// of non-negative integers per line. Node ids are remapped to `0..n` in
/// ascending order of their original value.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<DirectedGraph, GraphError> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next = |what: &str| -> Result<u64, GraphError> {
            let token = fields.next().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: format!("missing {what} node id"),
            })?;
            token.parse().map_err(|e| GraphError::Parse {
                line: line_no,
                message: format!("bad {what} node id {token:?}: {e}"),
            })
        };
        let src = next("source")?;
        let dst = next("target")?;
        if fields.next().is_some() {
            return Err(GraphError::Parse {
                line: line_no,
                message: "expected exactly two fields".into(),
            });
        }
        if src != dst {
            raw.push((src, dst));
        }
    }
    if raw.is_empty() {
        return Err(GraphError::Empty);
    }

    let mut ids: Vec<u64> = raw.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let dense: HashMap<u64, NodeId> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let edges: Vec<(NodeId, NodeId)> = raw.iter().map(|(a, b)| (dense[a], dense[b])).collect();
    DirectedGraph::from_edges_with_ids(&edges, ids)
}

/// Induced subgraph on the largest weakly connected component, re-densified.
/// Ties go to the component holding the smallest original id.
pub fn largest_weakly_connected_component(g: &DirectedGraph) -> Result<DirectedGraph, GraphError> {
    let n = g.node_count();
    if n == 0 || g.edge_count() == 0 {
        return Err(GraphError::Empty);
    }
    let mut component = vec![usize::MAX; n];
    // (size, smallest original id) per component
    let mut stats: Vec<(usize, u64)> = Vec::new();
    let mut stack = Vec::new();
    for root in 0..n {
        if component[root] != usize::MAX {
            continue;
        }
        let c = stats.len();
        let mut size = 0;
        let mut min_id = u64::MAX;
        component[root] = c;
        stack.push(root);
        while let Some(u) = stack.pop() {
            size += 1;
            min_id = min_id.min(g.original_id(u));
            for &w in g.multiset(u) {
                if component[w] == usize::MAX {
                    component[w] = c;
                    stack.push(w);
                }
            }
        }
        stats.push((size, min_id));
    }
    let best = (0..stats.len())
        .max_by(|&a, &b| {
            stats[a]
                .0
                .cmp(&stats[b].0)
                .then_with(|| stats[b].1.cmp(&stats[a].1))
        })
        .expect("at least one component");

    let mut remap = vec![usize::MAX; n];
    let mut ids = Vec::with_capacity(stats[best].0);
    for v in 0..n {
        if component[v] == best {
            remap[v] = ids.len();
            ids.push(g.original_id(v));
        }
    }
    let edges: Vec<(NodeId, NodeId)> = g
        .edges()
        .filter(|&(u, _)| component[u] == best)
        .map(|(u, v)| (remap[u], remap[v]))
        .collect();
    DirectedGraph::from_edges_with_ids(&edges, ids)
}

/// Size of the directed cycle the DBA generator starts from.
pub fn dba_seed_size(edges_per_node: usize) -> usize {
    edges_per_node.max(3)
}

/// Directed Barabási–Albert graph.
///
/// Starts from a directed cycle over `max(edges_per_node, 3)` nodes. Each
/// arriving node then emits `edges_per_node` edges to distinct existing nodes,
/// each target drawn with probability `(d_in(v) + a) / Σ_k (d_in(k) + a)`
/// over the graph as it stood before the arrival. Duplicate targets are
/// redrawn, so the result is simple and has
/// `seed + (nodes - seed) * edges_per_node` edges.
pub fn generate_dba(
    nodes: usize,
    edges_per_node: usize,
    a: f64,
    seed: u64,
) -> Result<DirectedGraph, GraphError> {
    if edges_per_node == 0 {
        return Err(GraphError::InvalidGenerator(
            "edges_per_node must be at least 1".into(),
        ));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(GraphError::InvalidGenerator(format!(
            "attractiveness A must be finite and non-negative, got {a}"
        )));
    }
    let seed_size = dba_seed_size(edges_per_node);
    if nodes < seed_size {
        return Err(GraphError::InvalidGenerator(format!(
            "need at least {seed_size} nodes for the seed cycle, got {nodes}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(NodeId, NodeId)> =
        Vec::with_capacity(seed_size + (nodes - seed_size) * edges_per_node);
    // One entry per unit of in-degree: drawing uniformly from it picks a node
    // with probability proportional to d_in.
    let mut in_tokens: Vec<NodeId> = Vec::with_capacity(edges.capacity());
    for v in 0..seed_size {
        let w = (v + 1) % seed_size;
        edges.push((v, w));
        in_tokens.push(w);
    }

    let mut targets = Vec::with_capacity(edges_per_node);
    for new in seed_size..nodes {
        let existing = new;
        let degree_mass = in_tokens.len() as f64;
        let total = degree_mass + a * existing as f64;
        targets.clear();
        while targets.len() < edges_per_node {
            let r = rng.random::<f64>() * total;
            let target = if r < degree_mass {
                in_tokens[(r as usize).min(in_tokens.len() - 1)]
            } else {
                rng.random_range(0..existing)
            };
            if !targets.contains(&target) {
                targets.push(target);
            }
        }
        for &t in &targets {
            edges.push((new, t));
            in_tokens.push(t);
        }
    }
    DirectedGraph::from_edges(nodes, &edges)
}
