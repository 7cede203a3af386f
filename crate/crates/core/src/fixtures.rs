//! Small bundled graphs.

use crate::graph::{load_edge_list, DirectedGraph};

/// Three users: 1 and 2 follow each other, 2 follows 3.
pub const G3_EDGE_LIST: &str = "# c\n1 2\n2 1\n2 3\n";

pub fn g3() -> DirectedGraph {
    load_edge_list(G3_EDGE_LIST).expect("bundled fixture parses")
}
