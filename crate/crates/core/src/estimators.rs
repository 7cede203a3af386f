//! Feature estimation from sample sequences.
//!
//! A walk whose samples are distributed proportionally to `d_sum` (SRW, NBRW
//! and the proposed walk, including its neighbor samples) estimates a uniform
//! node average with the ratio `Σ w f / Σ w`, `w = 1 / d_sum` of the sampling
//! node. MHRW samples are already uniform and use the plain mean.
//! Accumulation is streaming, so the sequence need not be stored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{DirectedGraph, NodeId};
use crate::labeling::PropertyMap;
use crate::samplers::{SampleRecord, SampleSequence, SampleSink};

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("no samples, estimate undefined")]
    Empty,
    #[error("sample of node {0} has total degree 0")]
    ZeroDegree(NodeId),
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
    #[error("cannot parse feature {0:?}")]
    BadFeature(String),
}

/// A node function `f(v)` computable from what the API returns for `v`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureFn {
    OutDegree,
    InDegree,
    TotalDegree,
    /// `1{d_out(v) = d}`.
    OutDegreeIs(usize),
    /// Value of a registered property, e.g. a label indicator.
    Property(String),
    Constant(f64),
    Scaled(f64, Box<FeatureFn>),
}

impl FeatureFn {
    pub fn out_degree() -> Self {
        FeatureFn::OutDegree
    }

    pub fn label_rate(name: impl Into<String>) -> Self {
        FeatureFn::Property(name.into())
    }

    pub fn out_degree_indicator(d: usize) -> Self {
        FeatureFn::OutDegreeIs(d)
    }

    pub fn constant(c: f64) -> Self {
        FeatureFn::Constant(c)
    }

    pub fn scaled(self, c: f64) -> Self {
        FeatureFn::Scaled(c, Box::new(self))
    }

    /// Resolves property names to column positions.
    pub fn bind(&self, property_names: &[String]) -> Result<BoundFeature, EstimateError> {
        Ok(match self {
            FeatureFn::OutDegree => BoundFeature::OutDegree,
            FeatureFn::InDegree => BoundFeature::InDegree,
            FeatureFn::TotalDegree => BoundFeature::TotalDegree,
            FeatureFn::OutDegreeIs(d) => BoundFeature::OutDegreeIs(*d),
            FeatureFn::Property(name) => BoundFeature::Property(
                property_names
                    .iter()
                    .position(|p| p == name)
                    .ok_or_else(|| EstimateError::UnknownProperty(name.clone()))?,
            ),
            FeatureFn::Constant(c) => BoundFeature::Constant(*c),
            FeatureFn::Scaled(c, inner) => {
                BoundFeature::Scaled(*c, Box::new(inner.bind(property_names)?))
            }
        })
    }
}

impl fmt::Display for FeatureFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureFn::OutDegree => f.write_str("out_degree"),
            FeatureFn::InDegree => f.write_str("in_degree"),
            FeatureFn::TotalDegree => f.write_str("total_degree"),
            FeatureFn::OutDegreeIs(d) => write!(f, "out_degree_eq:{d}"),
            FeatureFn::Property(name) => write!(f, "label:{name}"),
            FeatureFn::Constant(c) => write!(f, "const:{c}"),
            FeatureFn::Scaled(c, inner) => write!(f, "scale:{c}:{inner}"),
        }
    }
}

impl FromStr for FeatureFn {
    type Err = EstimateError;

    /// Inverse of `Display`: `out_degree`, `in_degree`, `total_degree`,
    /// `out_degree_eq:<d>`, `label:<name>`, `const:<c>`, `scale:<c>:<feature>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || EstimateError::BadFeature(s.to_string());
        Ok(match s {
            "out_degree" => FeatureFn::OutDegree,
            "in_degree" => FeatureFn::InDegree,
            "total_degree" => FeatureFn::TotalDegree,
            _ => {
                let (head, rest) = s.split_once(':').ok_or_else(bad)?;
                match head {
                    "out_degree_eq" => FeatureFn::OutDegreeIs(rest.parse().map_err(|_| bad())?),
                    "label" if !rest.is_empty() => FeatureFn::Property(rest.to_string()),
                    "const" => FeatureFn::Constant(rest.parse().map_err(|_| bad())?),
                    "scale" => {
                        let (c, inner) = rest.split_once(':').ok_or_else(bad)?;
                        FeatureFn::Scaled(c.parse().map_err(|_| bad())?, Box::new(inner.parse()?))
                    }
                    _ => return Err(bad()),
                }
            }
        })
    }
}

/// A [`FeatureFn`] with property names resolved to column indices.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundFeature {
    OutDegree,
    InDegree,
    TotalDegree,
    OutDegreeIs(usize),
    Property(usize),
    Constant(f64),
    Scaled(f64, Box<BoundFeature>),
}

impl BoundFeature {
    pub fn eval(&self, d_out: usize, d_in: usize, properties: &[f64]) -> f64 {
        match self {
            BoundFeature::OutDegree => d_out as f64,
            BoundFeature::InDegree => d_in as f64,
            BoundFeature::TotalDegree => (d_out + d_in) as f64,
            BoundFeature::OutDegreeIs(d) => f64::from(u8::from(d_out == *d)),
            BoundFeature::Property(idx) => properties[*idx],
            BoundFeature::Constant(c) => *c,
            BoundFeature::Scaled(c, inner) => c * inner.eval(d_out, d_in, properties),
        }
    }

    pub fn eval_record(&self, r: &SampleRecord) -> f64 {
        self.eval(r.d_out, r.d_in, &r.properties)
    }
}

/// The default feature set: average out-degree and one rate per label.
pub fn builtin_features(label_names: &[String]) -> Vec<FeatureFn> {
    std::iter::once(FeatureFn::OutDegree)
        .chain(label_names.iter().map(FeatureFn::label_rate))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sample_size: usize,
    pub weight_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `w = 1 / d_sum` of the sampling node.
    InverseDegree,
    /// `w = 1`.
    Uniform,
}

/// Streaming `(Σ w f, Σ w)` accumulator over several features at once.
#[derive(Debug, Clone)]
pub struct EstimatorSink {
    features: Vec<BoundFeature>,
    weighting: Weighting,
    weighted_sums: Vec<f64>,
    weight_sum: f64,
    count: usize,
    zero_degree: Option<NodeId>,
}

impl EstimatorSink {
    pub fn new(features: Vec<BoundFeature>, weighting: Weighting) -> Self {
        EstimatorSink {
            weighted_sums: vec![0.0; features.len()],
            features,
            weighting,
            weight_sum: 0.0,
            count: 0,
            zero_degree: None,
        }
    }

    pub fn add(&mut self, r: &SampleRecord) {
        let w = match self.weighting {
            Weighting::Uniform => 1.0,
            Weighting::InverseDegree => {
                if r.d_sum() == 0 {
                    self.zero_degree.get_or_insert(r.node);
                    return;
                }
                1.0 / r.d_sum() as f64
            }
        };
        self.count += 1;
        self.weight_sum += w;
        for (acc, f) in self.weighted_sums.iter_mut().zip(&self.features) {
            *acc += w * f.eval_record(r);
        }
    }

    pub fn sample_size(&self) -> usize {
        self.count
    }

    /// One estimate per feature, in construction order.
    pub fn finish(&self) -> Result<Vec<Estimate>, EstimateError> {
        if let Some(v) = self.zero_degree {
            return Err(EstimateError::ZeroDegree(v));
        }
        if self.count == 0 {
            return Err(EstimateError::Empty);
        }
        Ok(self
            .weighted_sums
            .iter()
            .map(|s| Estimate {
                value: s / self.weight_sum,
                sample_size: self.count,
                weight_sum: self.weight_sum,
            })
            .collect())
    }
}

impl SampleSink for EstimatorSink {
    fn push(&mut self, _staying: NodeId, record: SampleRecord) {
        self.add(&record);
    }
}

fn estimate(
    seq: &SampleSequence,
    f: &FeatureFn,
    weighting: Weighting,
) -> Result<Estimate, EstimateError> {
    let mut acc = EstimatorSink::new(vec![f.bind(&seq.property_names)?], weighting);
    for r in &seq.records {
        acc.add(r);
    }
    Ok(acc.finish()?[0])
}

/// `Σ f(Z_s) / d_sum(Z_s) / Σ 1 / d_sum(Z_s)` over every record.
pub fn reweighted_estimate(seq: &SampleSequence, f: &FeatureFn) -> Result<Estimate, EstimateError> {
    estimate(seq, f, Weighting::InverseDegree)
}

/// Arithmetic mean of `f` over every record.
pub fn mean_estimate(seq: &SampleSequence, f: &FeatureFn) -> Result<Estimate, EstimateError> {
    estimate(seq, f, Weighting::Uniform)
}

/// Population mean `(1/n) Σ_v f(v)`: the ground truth.
pub fn exact_expectation(
    g: &DirectedGraph,
    props: &[PropertyMap],
    f: &FeatureFn,
) -> Result<f64, EstimateError> {
    let names: Vec<String> = props.iter().map(|p| p.name.clone()).collect();
    let bound = f.bind(&names)?;
    let n = g.node_count();
    if n == 0 {
        return Err(EstimateError::Empty);
    }
    let mut row = vec![0.0; props.len()];
    let mut total = 0.0;
    for v in 0..n {
        for (x, p) in row.iter_mut().zip(props) {
            *x = p.values[v];
        }
        total += bound.eval(g.out_degree(v), g.in_degree(v), &row);
    }
    Ok(total / n as f64)
}

/// Estimated out-degree distribution `P(d_out = d)` for every `d` observed in
/// the sequence. All indicators share one normalization, so the values sum
/// to one.
pub fn degree_distribution_estimate(
    seq: &SampleSequence,
    weighting: Weighting,
) -> Result<BTreeMap<usize, f64>, EstimateError> {
    let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total = 0.0;
    for r in &seq.records {
        let w = match weighting {
            Weighting::Uniform => 1.0,
            Weighting::InverseDegree => match r.d_sum() {
                0 => return Err(EstimateError::ZeroDegree(r.node)),
                d => 1.0 / d as f64,
            },
        };
        *mass.entry(r.d_out).or_default() += w;
        total += w;
    }
    if seq.records.is_empty() {
        return Err(EstimateError::Empty);
    }
    for v in mass.values_mut() {
        *v /= total;
    }
    Ok(mass)
}
