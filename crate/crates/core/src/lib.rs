//! Random-walk estimation of graph features under a query-count cost model.
//!
//! The walk in [`samplers`] moves like a simple random walk, but after every
//! arrival it may add any number of free samples drawn from the neighbor list
//! it just fetched. Reweighting every sample by `1 / d_sum` gives consistent
//! estimates of node averages ([`estimators`]); [`oracle`] checks the
//! underlying Markov chain exactly on small graphs and [`experiment`] runs
//! NRMSE comparisons against SRW, NBRW and MHRW at equal query budgets.

pub mod access;
pub mod chart;
pub mod estimators;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod labeling;
pub mod oracle;
pub mod samplers;

pub use access::{AccessError, ApiSession, NeighborInfo, NeighborList};
pub use estimators::{
    builtin_features, exact_expectation, mean_estimate, reweighted_estimate, Estimate,
    EstimateError, EstimatorSink, FeatureFn, Weighting,
};
pub use graph::{
    generate_dba, largest_weakly_connected_component, load_edge_list, read_edge_list,
    DegreeSummary, DirectedGraph, GraphError, NodeId,
};
pub use labeling::{assign_labels, effective_degree, LabelError, LabelMode, PropertyMap};
pub use samplers::{
    mhrw_walk, nbrw_walk, proposed_walk, srw_walk, walk, walk_into, SampleKind, SampleRecord,
    SampleSequence, SampleSink, WalkError, WalkLimits, WalkSummary, Walker,
};
