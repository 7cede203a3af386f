//! NRMSE experiments: N independent walks per (sampler, alpha, budget)
//! configuration over one labelled graph.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::access::{AccessError, ApiSession};
use crate::estimators::{exact_expectation, EstimateError, EstimatorSink, FeatureFn, Weighting};
use crate::graph::{
    generate_dba, largest_weakly_connected_component, read_edge_list, DirectedGraph, GraphError,
};
use crate::labeling::{assign_labels, target_count, LabelError, LabelMode, PropertyMap};
use crate::samplers::{walk_into, WalkError, WalkLimits, Walker};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Feature(#[from] EstimateError),
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error("{walker} run {run}: {source}")]
    Run {
        walker: Walker,
        run: usize,
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("NRMSE undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `(1/|x|) · sqrt(mean((x − x̂_i)²))`.
pub fn nrmse(true_value: f64, estimates: &[f64]) -> Result<f64, ExperimentError> {
    if true_value == 0.0 {
        return Err(ExperimentError::UndefinedMetric("true value is zero"));
    }
    if estimates.is_empty() {
        return Err(ExperimentError::UndefinedMetric("no estimates"));
    }
    let mse = estimates
        .iter()
        .map(|e| (true_value - e) * (true_value - e))
        .sum::<f64>()
        / estimates.len() as f64;
    Ok(mse.sqrt() / true_value.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Dba {
        nodes: usize,
        edges_per_node: usize,
        a: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelSpec {
    pub mode: LabelMode,
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SamplerKind {
    Proposed,
    Srw,
    Nbrw,
    Mhrw,
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(SamplerKind::Proposed),
            "srw" | "srw-rw" => Ok(SamplerKind::Srw),
            "nbrw" | "nbrw-rw" => Ok(SamplerKind::Nbrw),
            "mhrw" => Ok(SamplerKind::Mhrw),
            other => Err(format!("unknown sampler {other:?}")),
        }
    }
}

fn walker_rank(w: &Walker) -> u8 {
    match w {
        Walker::Proposed { .. } => 0,
        Walker::Srw => 1,
        Walker::Nbrw => 2,
        Walker::Mhrw => 3,
    }
}

/// Declarative experiment description. See the README for the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub labels: Vec<LabelSpec>,
    pub samplers: Vec<SamplerKind>,
    /// Alpha values for the proposed walk.
    pub alphas: Vec<f64>,
    /// Budget `b = ceil(ratio · n)` for each ratio.
    pub budget_ratios: Vec<f64>,
    pub features: Vec<FeatureFn>,
    pub runs: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphSource::Dba {
                nodes: 10_000,
                edges_per_node: 10,
                a: 1.0,
                seed: 1,
            },
            labels: LabelMode::ALL
                .iter()
                .zip(1..)
                .map(|(&mode, seed)| LabelSpec {
                    mode,
                    fraction: 0.1,
                    seed,
                })
                .collect(),
            samplers: vec![
                SamplerKind::Proposed,
                SamplerKind::Srw,
                SamplerKind::Nbrw,
                SamplerKind::Mhrw,
            ],
            alphas: vec![0.5, 0.9],
            budget_ratios: vec![0.01],
            features: vec![
                FeatureFn::OutDegree,
                FeatureFn::label_rate("random"),
                FeatureFn::label_rate("high_degree"),
                FeatureFn::label_rate("low_degree"),
            ],
            runs: 200,
            seed: 0,
        }
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    /// Parses a flat `key = value` file; list values are comma separated,
    /// `#` starts a comment. Keys left out keep their [`Default`] value.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = ExperimentConfig::default();
        let mut dba = (10_000usize, 10usize, 1.0f64, 1u64);
        let mut file: Option<PathBuf> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ExperimentError::Config {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(
                v: &str,
                err: impl Fn(String) -> ExperimentError,
            ) -> Result<T, ExperimentError>
            where
                T::Err: std::fmt::Display,
            {
                v.parse::<T>()
                    .map_err(|e| err(format!("bad number {v:?}: {e}")))
            }
            match key {
                "graph_file" => file = Some(PathBuf::from(value)),
                "dba_nodes" => dba.0 = num(value, err)?,
                "dba_edges_per_node" => dba.1 = num(value, err)?,
                "dba_a" => dba.2 = num(value, err)?,
                "dba_seed" => dba.3 = num(value, err)?,
                "labels" => {
                    cfg.labels = split_list(value)
                        .map(|item| {
                            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
                            let [mode, fraction, seed] = parts[..] else {
                                return Err(err(format!(
                                    "label spec {item:?} is not mode:fraction:seed"
                                )));
                            };
                            Ok(LabelSpec {
                                mode: mode.parse().map_err(|e: LabelError| err(e.to_string()))?,
                                fraction: num(fraction, err)?,
                                seed: num(seed, err)?,
                            })
                        })
                        .collect::<Result<_, _>>()?
                }
                "samplers" => {
                    cfg.samplers = split_list(value)
                        .map(|s| s.parse().map_err(err))
                        .collect::<Result<_, _>>()?
                }
                "alphas" => {
                    cfg.alphas = split_list(value)
                        .map(|s| num(s, err))
                        .collect::<Result<_, _>>()?
                }
                "budget_ratios" => {
                    cfg.budget_ratios = split_list(value)
                        .map(|s| num(s, err))
                        .collect::<Result<_, _>>()?
                }
                "features" => {
                    cfg.features = split_list(value)
                        .map(|s| s.parse().map_err(|e: EstimateError| err(e.to_string())))
                        .collect::<Result<_, _>>()?
                }
                "runs" => cfg.runs = num(value, err)?,
                "seed" => cfg.seed = num(value, err)?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        cfg.graph = match file {
            Some(path) => GraphSource::File(path),
            None => GraphSource::Dba {
                nodes: dba.0,
                edges_per_node: dba.1,
                a: dba.2,
                seed: dba.3,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        // relative graph paths are taken from the config's directory
        if let GraphSource::File(p) = &cfg.graph {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.graph = GraphSource::File(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Invalid(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if let Some(r) = self
            .budget_ratios
            .iter()
            .find(|r| !(**r > 0.0 && **r < 1.0))
        {
            return bad(format!("budget ratio {r} outside (0, 1)"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
            return bad(format!("alpha {a} outside [0, 1)"));
        }
        if self.samplers.contains(&SamplerKind::Proposed) && self.alphas.is_empty() {
            return bad("proposed sampler needs at least one alpha".into());
        }
        if self.samplers.is_empty() || self.budget_ratios.is_empty() || self.features.is_empty() {
            return bad("samplers, budget_ratios and features must be non-empty".into());
        }
        Ok(())
    }

    /// Every walker this config runs, proposed expanded per alpha.
    pub fn walkers(&self) -> Vec<Walker> {
        let mut kinds = self.samplers.clone();
        kinds.sort();
        kinds.dedup();
        kinds
            .into_iter()
            .flat_map(|k| match k {
                SamplerKind::Proposed => self
                    .alphas
                    .iter()
                    .map(|&alpha| Walker::Proposed { alpha })
                    .collect(),
                SamplerKind::Srw => vec![Walker::Srw],
                SamplerKind::Nbrw => vec![Walker::Nbrw],
                SamplerKind::Mhrw => vec![Walker::Mhrw],
            })
            .collect()
    }
}

/// The sampling universe: largest weakly connected component plus labels.
#[derive(Debug, Clone)]
pub struct Workload {
    pub graph: DirectedGraph,
    pub properties: Vec<PropertyMap>,
}

impl Workload {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let raw = match &cfg.graph {
            GraphSource::File(path) => {
                let file = fs::File::open(path).map_err(|source| ExperimentError::Read {
                    path: path.clone(),
                    source,
                })?;
                read_edge_list(BufReader::new(file))?
            }
            GraphSource::Dba {
                nodes,
                edges_per_node,
                a,
                seed,
            } => generate_dba(*nodes, *edges_per_node, *a, *seed)?,
        };
        let graph = largest_weakly_connected_component(&raw)?;
        Self::label(graph, &cfg.labels)
    }

    pub fn label(graph: DirectedGraph, labels: &[LabelSpec]) -> Result<Self, ExperimentError> {
        let properties = labels
            .iter()
            .map(|spec| assign_labels(&graph, spec.mode, spec.fraction, spec.seed))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Workload { graph, properties })
    }

    pub fn property_names(&self) -> Vec<String> {
        self.properties.iter().map(|p| p.name.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sampler: String,
    pub alpha: Option<f64>,
    pub budget_ratio: f64,
    pub feature: String,
    pub true_value: f64,
    pub mean_estimate: f64,
    pub nrmse: f64,
    pub runs: usize,
    pub mean_sample_size: f64,
    pub mean_queries: f64,
}

impl ResultRow {
    /// Series label used in charts, e.g. `proposed a=0.9`.
    pub fn series(&self) -> String {
        match self.alpha {
            Some(a) => format!("{} a={a}", self.sampler),
            None => self.sampler.clone(),
        }
    }
}

/// Outcome of one simulated walk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub start: usize,
    pub estimates: Vec<f64>,
    pub sample_size: usize,
    pub queries_used: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one run, a mix of the base seed and the run's coordinates.
pub fn run_seed(base: u64, walker: &Walker, budget_ratio: f64, run: usize) -> u64 {
    let words = [
        walker_rank(walker) as u64,
        walker.alpha().map_or(u64::MAX, f64::to_bits),
        budget_ratio.to_bits(),
        run as u64,
    ];
    words
        .iter()
        .fold(splitmix64(base), |h, &w| splitmix64(h ^ w))
}

/// Query budget for a ratio of the node count.
pub fn budget_for(ratio: f64, n: usize) -> usize {
    target_count(ratio, n).max(1)
}

/// One walk from a uniformly drawn start node with a fresh session.
pub fn simulate_run(
    workload: &Workload,
    walker: Walker,
    budget: usize,
    features: &[FeatureFn],
    seed: u64,
) -> Result<RunOutcome, ExperimentError> {
    let names = workload.property_names();
    let bound = features
        .iter()
        .map(|f| f.bind(&names))
        .collect::<Result<Vec<_>, _>>()?;
    let weighting = if walker.needs_reweighting() {
        Weighting::InverseDegree
    } else {
        Weighting::Uniform
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..workload.graph.node_count());
    let mut session = ApiSession::new(&workload.graph, &workload.properties, budget)?;
    let mut acc = EstimatorSink::new(bound, weighting);
    let summary = walk_into(
        walker,
        &mut session,
        start,
        WalkLimits::default(),
        &mut rng,
        &mut acc,
    )?;
    Ok(RunOutcome {
        start,
        estimates: acc.finish()?.into_iter().map(|e| e.value).collect(),
        sample_size: summary.records,
        queries_used: summary.queries_used,
    })
}

/// All runs of one (walker, ratio) configuration, in run-index order.
pub fn simulate_runs(
    workload: &Workload,
    cfg: &ExperimentConfig,
    walker: Walker,
    ratio: f64,
) -> Result<Vec<RunOutcome>, ExperimentError> {
    let budget = budget_for(ratio, workload.graph.node_count());
    (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            simulate_run(
                workload,
                walker,
                budget,
                &cfg.features,
                run_seed(cfg.seed, &walker, ratio, run),
            )
            .map_err(|e| ExperimentError::Run {
                walker,
                run,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Runs every configuration of `cfg` on an already prepared workload.
pub fn run_on(
    workload: &Workload,
    cfg: &ExperimentConfig,
) -> Result<Vec<ResultRow>, ExperimentError> {
    cfg.validate()?;
    let truths = cfg
        .features
        .iter()
        .map(|f| exact_expectation(&workload.graph, &workload.properties, f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ratios = cfg.budget_ratios.clone();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let mut walkers = cfg.walkers();
    walkers.sort_by(|a, b| {
        walker_rank(a).cmp(&walker_rank(b)).then(
            a.alpha()
                .unwrap_or(0.0)
                .total_cmp(&b.alpha().unwrap_or(0.0)),
        )
    });
    walkers.dedup();

    let mut rows = Vec::new();
    for walker in &walkers {
        for &ratio in &ratios {
            let outcomes = simulate_runs(workload, cfg, *walker, ratio)?;
            let runs = outcomes.len() as f64;
            let mean_sample_size =
                outcomes.iter().map(|o| o.sample_size as f64).sum::<f64>() / runs;
            let mean_queries = outcomes.iter().map(|o| o.queries_used as f64).sum::<f64>() / runs;
            for (k, feature) in cfg.features.iter().enumerate() {
                let estimates: Vec<f64> = outcomes.iter().map(|o| o.estimates[k]).collect();
                rows.push(ResultRow {
                    sampler: walker.tag().to_string(),
                    alpha: walker.alpha(),
                    budget_ratio: ratio,
                    feature: feature.to_string(),
                    true_value: truths[k],
                    mean_estimate: estimates.iter().sum::<f64>() / runs,
                    nrmse: nrmse(truths[k], &estimates)?,
                    runs: outcomes.len(),
                    mean_sample_size,
                    mean_queries,
                });
            }
        }
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    cfg.validate()?;
    let workload = Workload::prepare(cfg)?;
    run_on(&workload, cfg)
}

fn real(x: f64) -> String {
    format!("{x:.12e}")
}

pub const CSV_HEADER: &str =
    "sampler,alpha,budget_ratio,feature,true_value,mean_estimate,nrmse,runs,mean_sample_size,mean_queries";

/// Header plus one line per row. Reals use 13 significant digits; a
/// baseline's alpha is left empty.
pub fn emit_csv<W: Write>(rows: &[ResultRow], mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{}",
            r.sampler,
            r.alpha.map(real).unwrap_or_default(),
            real(r.budget_ratio),
            r.feature,
            real(r.true_value),
            real(r.mean_estimate),
            real(r.nrmse),
            r.runs,
            real(r.mean_sample_size),
            real(r.mean_queries),
        )?;
    }
    Ok(())
}
