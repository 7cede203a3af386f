//! Synthetic binary labels attached to nodes as properties.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{DirectedGraph, NodeId};

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("label fraction must lie in (0, 1], got {0}")]
    Fraction(f64),
    #[error("only {available} nodes can carry a {mode} label, {wanted} requested")]
    NotEnoughCandidates {
        mode: LabelMode,
        wanted: usize,
        available: usize,
    },
    #[error("unknown label mode {0:?} (expected random, high_degree or low_degree)")]
    UnknownMode(String),
    #[error("property file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Named per-node real values. Labels use 0.0 / 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyMap {
    pub name: String,
    pub values: Vec<f64>,
}

impl PropertyMap {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        PropertyMap {
            name: name.into(),
            values,
        }
    }

    pub fn get(&self, v: NodeId) -> f64 {
        self.values[v]
    }

    /// Nodes whose value is non-zero.
    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(v, _)| v)
            .collect()
    }

    /// Two-column text, `original_node_id value`, preceded by a
    /// `# property <name>` header.
    pub fn write_to<W: Write>(&self, g: &DirectedGraph, mut sink: W) -> Result<(), LabelError> {
        writeln!(sink, "# property {}", self.name)?;
        for (v, x) in self.values.iter().enumerate() {
            writeln!(sink, "{} {}", g.original_id(v), x)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`PropertyMap::write_to`]. Nodes absent
    /// from the file get 0. Ids not present in `g` are skipped, so a file
    /// written for a full graph can be reused on its largest component.
    pub fn read_from<R: BufRead>(
        g: &DirectedGraph,
        fallback_name: &str,
        reader: R,
    ) -> Result<Self, LabelError> {
        let mut name = fallback_name.to_string();
        let mut values = vec![0.0; g.node_count()];
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let parse_err = |message: String| LabelError::Parse {
                line: idx + 1,
                message,
            };
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("property ") {
                    name = n.trim().to_string();
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(id), Some(value), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(parse_err("expected `node_id value`".into()));
            };
            let id: u64 = id
                .parse()
                .map_err(|e| parse_err(format!("bad node id {id:?}: {e}")))?;
            let value: f64 = value
                .parse()
                .map_err(|e| parse_err(format!("bad value {value:?}: {e}")))?;
            if let Some(v) = g.dense_id(id) {
                values[v] = value;
            }
        }
        Ok(PropertyMap { name, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelMode {
    /// Every node equally likely.
    Random,
    /// Drawn proportionally to `max(d_in, d_out)`.
    HighDegree,
    /// Drawn proportionally to `1 / max(d_in, d_out)`.
    LowDegree,
}

impl LabelMode {
    pub const ALL: [LabelMode; 3] = [
        LabelMode::Random,
        LabelMode::HighDegree,
        LabelMode::LowDegree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LabelMode::Random => "random",
            LabelMode::HighDegree => "high_degree",
            LabelMode::LowDegree => "low_degree",
        }
    }
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelMode {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "random" => Ok(LabelMode::Random),
            "high_degree" | "high" => Ok(LabelMode::HighDegree),
            "low_degree" | "low" => Ok(LabelMode::LowDegree),
            other => Err(LabelError::UnknownMode(other.to_string())),
        }
    }
}

/// `max(d_in, d_out)`, or 1 for a node without edges.
pub fn effective_degree(g: &DirectedGraph, v: NodeId) -> usize {
    g.in_degree(v).max(g.out_degree(v)).max(1)
}

/// `ceil(fraction * n)` with a small slack so that e.g. `0.1 * 1000` lands
/// on 100 rather than 101 through rounding noise.
pub fn target_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Labels exactly `ceil(fraction * n)` distinct nodes with 1.0.
///
/// Nodes are drawn repeatedly from the mode's weight distribution; a draw
/// that hits an already labelled node is discarded and redrawn.
pub fn assign_labels(
    g: &DirectedGraph,
    mode: LabelMode,
    fraction: f64,
    seed: u64,
) -> Result<PropertyMap, LabelError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(LabelError::Fraction(fraction));
    }
    let n = g.node_count();
    let wanted = target_count(fraction, n);
    let mut values = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // a node with neither in- nor out-edges gets weight 0 in both biased modes
    let raw_degree = |v: NodeId| g.in_degree(v).max(g.out_degree(v));
    let weights: Option<Vec<f64>> = match mode {
        LabelMode::Random => None,
        LabelMode::HighDegree => Some((0..n).map(|v| raw_degree(v) as f64).collect()),
        LabelMode::LowDegree => Some(
            (0..n)
                .map(|v| match raw_degree(v) {
                    0 => 0.0,
                    d => 1.0 / d as f64,
                })
                .collect(),
        ),
    };

    let available = weights
        .as_ref()
        .map_or(n, |w| w.iter().filter(|&&x| x > 0.0).count());
    if available < wanted {
        return Err(LabelError::NotEnoughCandidates {
            mode,
            wanted,
            available,
        });
    }

    let sampler = weights
        .as_ref()
        .map(|w| WeightedIndex::new(w).expect("at least one positive weight"));
    let mut labeled = 0;
    while labeled < wanted {
        let v = match &sampler {
            None => rng.random_range(0..n),
            Some(dist) => dist.sample(&mut rng),
        };
        if values[v] == 0.0 {
            values[v] = 1.0;
            labeled += 1;
        }
    }
    Ok(PropertyMap::new(mode.name(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::g3;
    use crate::graph::generate_dba;

    #[test]
    fn effective_degree_examples() {
        let g = g3();
        let id = |x| g.dense_id(x).unwrap();
        assert_eq!(effective_degree(&g, id(2)), 2);
        assert_eq!(effective_degree(&g, id(3)), 1);
        assert_eq!(effective_degree(&g, id(1)), 1);

        // a node with five friends who all follow back
        let edges: Vec<_> = (1..=5).flat_map(|k| [(0, k), (k, 0)]).collect();
        let star = DirectedGraph::from_edges(6, &edges).unwrap();
        assert_eq!(effective_degree(&star, 0), 5);
    }

    #[test]
    fn exact_label_counts() {
        let g = generate_dba(1000, 3, 1.0, 1).unwrap();
        for mode in LabelMode::ALL {
            let labels = assign_labels(&g, mode, 0.10, 5).unwrap();
            assert_eq!(labels.labeled_nodes().len(), 100, "{mode}");
            assert!(labels.values.iter().all(|&x| x == 0.0 || x == 1.0));
            assert_eq!(labels.name, mode.name());
        }
        let all = assign_labels(&g, LabelMode::LowDegree, 1.0, 5).unwrap();
        assert_eq!(all.labeled_nodes().len(), 1000);
    }

    #[test]
    fn same_seed_same_labels() {
        let g = generate_dba(300, 2, 1.0, 1).unwrap();
        let a = assign_labels(&g, LabelMode::HighDegree, 0.2, 9).unwrap();
        let b = assign_labels(&g, LabelMode::HighDegree, 0.2, 9).unwrap();
        let c = assign_labels(&g, LabelMode::HighDegree, 0.2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fraction_out_of_range() {
        let g = g3();
        for f in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                assign_labels(&g, LabelMode::Random, f, 1),
                Err(LabelError::Fraction(_))
            ));
        }
    }

    #[test]
    fn high_degree_first_draw_follows_weights() {
        // ĥ on G3 is (1, 2, 1): a single label lands on node "2" half the time
        let g = g3();
        let two = g.dense_id(2).unwrap();
        let trials = 20_000;
        let mut hits = [0usize; 3];
        for seed in 0..trials {
            let labels = assign_labels(&g, LabelMode::HighDegree, 1.0 / 3.0, seed).unwrap();
            let nodes = labels.labeled_nodes();
            assert_eq!(nodes.len(), 1);
            hits[nodes[0]] += 1;
        }
        let freq = hits[two] as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.015, "{freq}");
        for v in [0, 2] {
            let f = hits[v] as f64 / trials as f64;
            assert!((f - 0.25).abs() < 0.015, "{f}");
        }
    }

    #[test]
    fn biased_modes_separate_by_degree() {
        let g = generate_dba(400, 3, 1.0, 2).unwrap();
        let mean_degree = |labels: &PropertyMap| {
            let nodes = labels.labeled_nodes();
            nodes
                .iter()
                .map(|&v| effective_degree(&g, v) as f64)
                .sum::<f64>()
                / nodes.len() as f64
        };
        let mut high = 0.0;
        let mut low = 0.0;
        for seed in 0..100 {
            high += mean_degree(&assign_labels(&g, LabelMode::HighDegree, 0.1, seed).unwrap());
            low += mean_degree(&assign_labels(&g, LabelMode::LowDegree, 0.1, seed).unwrap());
        }
        assert!(high > low, "high {high} low {low}");
    }

    #[test]
    fn property_file_round_trip() {
        let g = generate_dba(60, 2, 1.0, 4).unwrap();
        let labels = assign_labels(&g, LabelMode::Random, 0.25, 3).unwrap();
        let mut buf = Vec::new();
        labels.write_to(&g, &mut buf).unwrap();
        let back = PropertyMap::read_from(&g, "ignored", buf.as_slice()).unwrap();
        assert_eq!(back, labels);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "high_degree".parse::<LabelMode>().unwrap(),
            LabelMode::HighDegree
        );
        assert!("bot".parse::<LabelMode>().is_err());
    }
}
