//! Simulated social-network API with a query budget.
//!
//! Fetching the neighbor list of a node costs one query the first time and
//! nothing afterwards. Each list entry carries the neighbor's out-degree,
//! in-degree and every registered property, the way profile-returning APIs
//! do. Samplers only ever see the graph through an [`ApiSession`].

use thiserror::Error;

use crate::graph::{DirectedGraph, NodeId};
use crate::labeling::PropertyMap;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AccessError {
    #[error("query budget of {budget} exhausted, cannot fetch node {node}")]
    BudgetExhausted { node: NodeId, budget: usize },
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("query budget must be at least 1")]
    ZeroBudget,
    #[error("property {name:?} has {got} values, graph has {expected} nodes")]
    PropertyLength {
        name: String,
        got: usize,
        expected: usize,
    },
}

/// What the API reports about one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborInfo {
    pub node: NodeId,
    pub d_out: usize,
    pub d_in: usize,
    /// One value per registered property, in registration order.
    pub properties: Vec<f64>,
}

impl NeighborInfo {
    pub fn d_sum(&self) -> usize {
        self.d_out + self.d_in
    }
}

/// A fetched neighbor list: the node's friends followed by its followers,
/// duplicates preserved. Borrows the graph, not the session.
#[derive(Debug, Clone, Copy)]
pub struct NeighborList<'g> {
    graph: &'g DirectedGraph,
    properties: &'g [PropertyMap],
    owner: NodeId,
    entries: &'g [NodeId],
}

impl<'g> NeighborList<'g> {
    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nodes(&self) -> &'g [NodeId] {
        self.entries
    }

    pub fn node(&self, idx: usize) -> NodeId {
        self.entries[idx]
    }

    /// `(d_out, d_in)` of entry `idx`, without copying properties.
    pub fn degrees(&self, idx: usize) -> (usize, usize) {
        let v = self.entries[idx];
        (self.graph.out_degree(v), self.graph.in_degree(v))
    }

    pub fn info(&self, idx: usize) -> NeighborInfo {
        describe(self.graph, self.properties, self.entries[idx])
    }

    /// Profile of the node whose list this is.
    pub fn owner_info(&self) -> NeighborInfo {
        describe(self.graph, self.properties, self.owner)
    }

    pub fn iter(&self) -> impl Iterator<Item = NeighborInfo> + '_ {
        (0..self.len()).map(move |i| self.info(i))
    }

    pub fn to_vec(&self) -> Vec<NeighborInfo> {
        self.iter().collect()
    }
}

fn describe(graph: &DirectedGraph, properties: &[PropertyMap], v: NodeId) -> NeighborInfo {
    NeighborInfo {
        node: v,
        d_out: graph.out_degree(v),
        d_in: graph.in_degree(v),
        properties: properties.iter().map(|p| p.values[v]).collect(),
    }
}

/// Cost-accounting access layer for one simulation run.
#[derive(Debug, Clone)]
pub struct ApiSession<'g> {
    graph: &'g DirectedGraph,
    properties: &'g [PropertyMap],
    cached: Vec<bool>,
    query_count: usize,
    budget: usize,
}

impl<'g> ApiSession<'g> {
    pub fn new(
        graph: &'g DirectedGraph,
        properties: &'g [PropertyMap],
        budget: usize,
    ) -> Result<Self, AccessError> {
        if budget == 0 {
            return Err(AccessError::ZeroBudget);
        }
        for p in properties {
            if p.values.len() != graph.node_count() {
                return Err(AccessError::PropertyLength {
                    name: p.name.clone(),
                    got: p.values.len(),
                    expected: graph.node_count(),
                });
            }
        }
        Ok(ApiSession {
            graph,
            properties,
            cached: vec![false; graph.node_count()],
            query_count: 0,
            budget,
        })
    }

    /// Returns the neighbor list of `v`, charging one query if `v` has not
    /// been fetched before. An over-budget fetch fails and changes nothing.
    pub fn fetch_neighbors(&mut self, v: NodeId) -> Result<NeighborList<'g>, AccessError> {
        let n = self.graph.node_count();
        if v >= n {
            return Err(AccessError::NodeOutOfRange { node: v, n });
        }
        if !self.cached[v] {
            if self.query_count >= self.budget {
                return Err(AccessError::BudgetExhausted {
                    node: v,
                    budget: self.budget,
                });
            }
            self.cached[v] = true;
            self.query_count += 1;
        }
        Ok(NeighborList {
            graph: self.graph,
            properties: self.properties,
            owner: v,
            entries: self.graph.multiset(v),
        })
    }

    pub fn is_cached(&self, v: NodeId) -> bool {
        self.cached.get(v).copied().unwrap_or(false)
    }

    pub fn queries_used(&self) -> usize {
        self.query_count
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn budget_exhausted(&self) -> bool {
        self.query_count >= self.budget
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn property_names(&self) -> Vec<String> {
        self.properties.iter().map(|p| p.name.clone()).collect()
    }
}
