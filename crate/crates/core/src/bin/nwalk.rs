use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use neighbor_walk::chart::{emit_chart, Metric};
use neighbor_walk::experiment::{budget_for, emit_csv, run_experiment, ExperimentConfig};
use neighbor_walk::fixtures::G3_EDGE_LIST;
use neighbor_walk::oracle::verify_suite;
use neighbor_walk::{
    assign_labels, builtin_features, generate_dba, largest_weakly_connected_component,
    load_edge_list, mean_estimate, read_edge_list, reweighted_estimate, walk, ApiSession,
    DirectedGraph, FeatureFn, LabelMode, PropertyMap, SampleSequence, WalkLimits, Walker,
};

#[derive(Parser)]
#[command(
    name = "nwalk",
    version,
    about = "Random-walk graph sampling with free neighbor samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum WalkerArg {
    Proposed,
    Srw,
    Nbrw,
    Mhrw,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Random,
    #[value(name = "high_degree")]
    HighDegree,
    #[value(name = "low_degree")]
    LowDegree,
}

impl From<ModeArg> for LabelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Random => LabelMode::Random,
            ModeArg::HighDegree => LabelMode::HighDegree,
            ModeArg::LowDegree => LabelMode::LowDegree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    /// 1 / d_sum of each sample (proposed, SRW, NBRW)
    Inverse,
    /// plain mean (MHRW)
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartMetric {
    Nrmse,
    #[value(name = "sample_size")]
    SampleSize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a directed Barabási-Albert graph as an edge list.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 10)]
        edges_per_node: usize,
        /// Attractiveness added to every in-degree.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout if omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Assign binary labels to the largest weakly connected component.
    Label {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run one walk and write its samples as CSV.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "proposed")]
        walker: WalkerArg,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        /// Query budget; defaults to 1% of the nodes.
        #[arg(long)]
        budget: Option<usize>,
        /// Start node (original id); random if omitted.
        #[arg(long)]
        start: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Property files written by `label`.
        #[arg(long = "labels")]
        labels: Vec<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Estimate features from a sample CSV.
    Estimate {
        #[arg(long)]
        samples: PathBuf,
        /// Feature names, e.g. out_degree, label:random, out_degree_eq:3.
        #[arg(long = "feature")]
        features: Vec<String>,
        #[arg(long, value_enum, default_value = "inverse")]
        weights: Weights,
    },
    /// Check the stationary law and estimator identities on a small graph.
    Verify {
        /// Edge list; the bundled three-node example if omitted.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5, 0.9, 0.99])]
        alphas: Vec<f64>,
    },
    /// Run an NRMSE experiment described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// CSV output (stdout if omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also draw an SVG chart.
        #[arg(long)]
        chart: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "nrmse")]
        chart_metric: ChartMetric,
        /// Feature to plot for NRMSE charts; the first configured one if omitted.
        #[arg(long)]
        chart_feature: Option<String>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_graph(path: &Path) -> Result<DirectedGraph> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let g = read_edge_list(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(largest_weakly_connected_component(&g)?)
}

fn load_properties(g: &DirectedGraph, paths: &[PathBuf]) -> Result<Vec<PropertyMap>> {
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("label");
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(PropertyMap::read_from(g, stem, BufReader::new(file))?)
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            nodes,
            edges_per_node,
            a,
            seed,
            out,
        } => {
            let g = generate_dba(nodes, edges_per_node, a, seed)?;
            let mut sink = output(out.as_deref())?;
            g.write_edge_list(&mut sink)?;
            sink.flush()?;
        }
        Command::Label {
            graph,
            mode,
            fraction,
            seed,
            out,
        } => {
            let g = load_graph(&graph)?;
            let labels = assign_labels(&g, mode.into(), fraction, seed)?;
            let mut sink = output(out.as_deref())?;
            labels.write_to(&g, &mut sink)?;
            sink.flush()?;
        }
        Command::Sample {
            graph,
            walker,
            alpha,
            budget,
            start,
            seed,
            labels,
            out,
        } => {
            let g = load_graph(&graph)?;
            let props = load_properties(&g, &labels)?;
            let walker = match walker {
                WalkerArg::Proposed => Walker::Proposed { alpha },
                WalkerArg::Srw => Walker::Srw,
                WalkerArg::Nbrw => Walker::Nbrw,
                WalkerArg::Mhrw => Walker::Mhrw,
            };
            let budget = budget.unwrap_or_else(|| budget_for(0.01, g.node_count()));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = match start {
                Some(id) => g
                    .dense_id(id)
                    .with_context(|| format!("start node {id} is not in the largest component"))?,
                None => rand::Rng::random_range(&mut rng, 0..g.node_count()),
            };
            let mut session = ApiSession::new(&g, &props, budget)?;
            let seq = walk(walker, &mut session, start, WalkLimits::default(), &mut rng)?;
            eprintln!(
                "{walker}: {} samples, {} queries",
                seq.len(),
                seq.queries_used
            );
            let mut sink = output(out.as_deref())?;
            seq.write_csv(&mut sink)?;
            sink.flush()?;
        }
        Command::Estimate {
            samples,
            features,
            weights,
        } => {
            let file =
                File::open(&samples).with_context(|| format!("opening {}", samples.display()))?;
            let seq = SampleSequence::read_csv(BufReader::new(file), Walker::Srw, 0)?;
            let features: Vec<FeatureFn> = if features.is_empty() {
                builtin_features(&seq.property_names)
            } else {
                features
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_, _>>()?
            };
            for f in &features {
                let e = match weights {
                    Weights::Inverse => reweighted_estimate(&seq, f)?,
                    Weights::Uniform => mean_estimate(&seq, f)?,
                };
                println!("{f}\t{:.12}\t(samples={})", e.value, e.sample_size);
            }
        }
        Command::Verify { graph, alphas } => {
            let g = match graph {
                Some(p) => load_graph(&p)?,
                None => load_edge_list(G3_EDGE_LIST)?,
            };
            if g.node_count() > 60 {
                bail!(
                    "verify builds dense matrices; graph has {} nodes (max 60)",
                    g.node_count()
                );
            }
            let features = vec![
                FeatureFn::OutDegree,
                FeatureFn::InDegree,
                FeatureFn::OutDegreeIs(1),
                FeatureFn::constant(1.0),
            ];
            let report = verify_suite(&g, &[], &alphas, &features)?;
            print!("{report}");
            if !report.all_passed() {
                bail!("verification failed");
            }
        }
        Command::Experiment {
            config,
            out,
            chart,
            chart_metric,
            chart_feature,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let rows = run_experiment(&cfg)?;
            let mut sink = output(out.as_deref())?;
            emit_csv(&rows, &mut sink)?;
            sink.flush()?;
            if let Some(path) = chart {
                let metric = match chart_metric {
                    ChartMetric::Nrmse => Metric::Nrmse,
                    ChartMetric::SampleSize => Metric::SampleSize,
                };
                let feature = chart_feature.unwrap_or_else(|| cfg.features[0].to_string());
                let selected: Vec<_> = rows.into_iter().filter(|r| r.feature == feature).collect();
                let mut sink = output(Some(&path))?;
                emit_chart(&selected, metric, &mut sink)?;
                sink.flush()?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
