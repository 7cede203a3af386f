//! Random-walk samplers driven through an [`ApiSession`].
//!
//! All walkers emit the start node first, then loop until the session's query
//! count reaches its budget. Revisiting an already fetched node is free. The
//! proposed walk additionally appends cost-free samples drawn from the
//! staying node's neighbor list: after each arrival it keeps drawing
//! `p ~ U[0,1)` and, while `p < alpha`, appends a uniform entry of the list.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::access::{AccessError, ApiSession, NeighborInfo, NeighborList};
use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("node {0} has no neighbors, the walk cannot move")]
    IsolatedNode(NodeId),
    #[error("budget {budget} exceeds the {n} reachable nodes and no record limit is set")]
    Unbounded { budget: usize, n: usize },
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error("sample file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleKind {
    /// The walker moved (or, for MHRW, stayed) and sampled its staying node.
    Transition,
    /// A free sample taken from the staying node's neighbor list.
    Neighbor,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::Transition => "transition",
            SampleKind::Neighbor => "neighbor",
        }
    }
}

/// One emitted sample: the sampling node and what the API reported about it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub node: NodeId,
    pub d_out: usize,
    pub d_in: usize,
    pub properties: Vec<f64>,
    pub kind: SampleKind,
}

impl SampleRecord {
    pub fn from_info(info: NeighborInfo, kind: SampleKind) -> Self {
        SampleRecord {
            node: info.node,
            d_out: info.d_out,
            d_in: info.d_in,
            properties: info.properties,
            kind,
        }
    }

    pub fn d_sum(&self) -> usize {
        self.d_out + self.d_in
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Walker {
    /// Random walk with probabilistic neighbor sampling, `0 <= alpha < 1`.
    Proposed { alpha: f64 },
    /// Simple random walk.
    Srw,
    /// Non-backtracking random walk.
    Nbrw,
    /// Metropolis–Hastings random walk targeting the uniform distribution.
    Mhrw,
}

impl Walker {
    pub fn tag(&self) -> &'static str {
        match self {
            Walker::Proposed { .. } => "proposed",
            Walker::Srw => "srw",
            Walker::Nbrw => "nbrw",
            Walker::Mhrw => "mhrw",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Walker::Proposed { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Whether samples must be reweighted by `1 / d_sum` to estimate uniform
    /// node averages. MHRW already samples nodes uniformly.
    pub fn needs_reweighting(&self) -> bool {
        !matches!(self, Walker::Mhrw)
    }
}

impl fmt::Display for Walker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Walker::Proposed { alpha } => write!(f, "proposed(alpha={alpha})"),
            other => f.write_str(other.tag()),
        }
    }
}

/// Receives samples as the walk produces them. `staying` is the walker's
/// position when the record was taken; it is not part of the sample output
/// but lets tests observe the full `(staying, sampling)` chain state.
pub trait SampleSink {
    fn push(&mut self, staying: NodeId, record: SampleRecord);
}

impl<F: FnMut(NodeId, SampleRecord)> SampleSink for F {
    fn push(&mut self, staying: NodeId, record: SampleRecord) {
        self(staying, record)
    }
}

/// Extra stopping rule on top of the query budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WalkLimits {
    /// Stop once this many records have been emitted.
    pub max_records: Option<usize>,
}

impl WalkLimits {
    pub fn records(max: usize) -> Self {
        WalkLimits {
            max_records: Some(max),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WalkSummary {
    pub records: usize,
    pub transitions: usize,
    pub queries_used: usize,
}

/// The walk output `{Z_s}` restricted to sampling nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSequence {
    pub walker: Walker,
    pub property_names: Vec<String>,
    pub records: Vec<SampleRecord>,
    pub queries_used: usize,
}

impl SampleSequence {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with columns `step,kind,node,d_out,d_in` followed by one column
    /// per property. `node` is the dense id.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<(), WalkError> {
        write!(sink, "step,kind,node,d_out,d_in")?;
        for name in &self.property_names {
            write!(sink, ",{name}")?;
        }
        writeln!(sink)?;
        for (step, r) in self.records.iter().enumerate() {
            write!(
                sink,
                "{step},{},{},{},{}",
                r.kind.as_str(),
                r.node,
                r.d_out,
                r.d_in
            )?;
            for x in &r.properties {
                write!(sink, ",{x}")?;
            }
            writeln!(sink)?;
        }
        Ok(())
    }

    /// Reads the records written by [`SampleSequence::write_csv`]. The walker
    /// tag and query count are not stored in the file and must be supplied.
    pub fn read_csv<R: BufRead>(
        reader: R,
        walker: Walker,
        queries_used: usize,
    ) -> Result<Self, WalkError> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => {
                return Err(WalkError::Parse {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        };
        let columns: Vec<&str> = header.trim().split(',').collect();
        if columns.len() < 5 || columns[..5] != ["step", "kind", "node", "d_out", "d_in"] {
            return Err(WalkError::Parse {
                line: 1,
                message: format!("unexpected header {header:?}"),
            });
        }
        let property_names: Vec<String> = columns[5..].iter().map(|s| s.to_string()).collect();
        let mut records = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| WalkError::Parse {
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns.len() {
                return Err(err(format!(
                    "expected {} fields, got {}",
                    columns.len(),
                    fields.len()
                )));
            }
            let kind = match fields[1] {
                "transition" => SampleKind::Transition,
                "neighbor" => SampleKind::Neighbor,
                other => return Err(err(format!("unknown kind {other:?}"))),
            };
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| err(format!("bad integer {s:?}: {e}")))
            };
            let properties = fields[5..]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| err(format!("bad value {s:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            records.push(SampleRecord {
                node: int(fields[2])?,
                d_out: int(fields[3])?,
                d_in: int(fields[4])?,
                properties,
                kind,
            });
        }
        Ok(SampleSequence {
            walker,
            property_names,
            records,
            queries_used,
        })
    }
}

struct Emitter<'s, S: ?Sized> {
    sink: &'s mut S,
    limit: usize,
    summary: WalkSummary,
}

impl<S: SampleSink + ?Sized> Emitter<'_, S> {
    fn emit(&mut self, staying: NodeId, record: SampleRecord) {
        if record.kind == SampleKind::Transition {
            self.summary.transitions += 1;
        }
        self.summary.records += 1;
        self.sink.push(staying, record);
    }

    fn full(&self) -> bool {
        self.summary.records >= self.limit
    }
}

fn pick<R: Rng + ?Sized>(list: &NeighborList<'_>, rng: &mut R) -> Result<usize, WalkError> {
    if list.is_empty() {
        return Err(WalkError::IsolatedNode(list.owner()));
    }
    Ok(rng.random_range(0..list.len()))
}

/// Runs `walker` from `start`, streaming records into `sink`.
///
/// The walk ends when the session's query count reaches its budget or when
/// `limits.max_records` records have been emitted, whichever comes first.
pub fn walk_into<R, S>(
    walker: Walker,
    session: &mut ApiSession<'_>,
    start: NodeId,
    limits: WalkLimits,
    rng: &mut R,
    sink: &mut S,
) -> Result<WalkSummary, WalkError>
where
    R: Rng + ?Sized,
    S: SampleSink + ?Sized,
{
    if let Walker::Proposed { alpha } = walker {
        if !(0.0..1.0).contains(&alpha) {
            return Err(WalkError::InvalidAlpha(alpha));
        }
    }
    if limits.max_records.is_none() && session.budget() > session.node_count() {
        return Err(WalkError::Unbounded {
            budget: session.budget(),
            n: session.node_count(),
        });
    }
    let mut out = Emitter {
        sink,
        limit: limits.max_records.unwrap_or(usize::MAX),
        summary: WalkSummary::default(),
    };
    if out.limit > 0 {
        let list = session.fetch_neighbors(start)?;
        out.emit(
            start,
            SampleRecord::from_info(list.owner_info(), SampleKind::Transition),
        );
        match walker {
            Walker::Proposed { alpha } => proposed(session, list, alpha, rng, &mut out)?,
            Walker::Srw => simple(session, list, rng, &mut out)?,
            Walker::Nbrw => non_backtracking(session, list, rng, &mut out)?,
            Walker::Mhrw => metropolis_hastings(session, list, rng, &mut out)?,
        }
    }
    out.summary.queries_used = session.queries_used();
    Ok(out.summary)
}

fn proposed<'g, R: Rng + ?Sized, S: SampleSink + ?Sized>(
    session: &mut ApiSession<'g>,
    mut list: NeighborList<'g>,
    alpha: f64,
    rng: &mut R,
    out: &mut Emitter<'_, S>,
) -> Result<(), WalkError> {
    while !session.budget_exhausted() && !out.full() {
        // p < 0 never holds, so alpha = 0 consumes no draws and matches SRW
        if alpha > 0.0 {
            while rng.random::<f64>() < alpha {
                let idx = pick(&list, rng)?;
                out.emit(
                    list.owner(),
                    SampleRecord::from_info(list.info(idx), SampleKind::Neighbor),
                );
                if out.full() {
                    return Ok(());
                }
            }
        }
        let idx = pick(&list, rng)?;
        let info = list.info(idx);
        list = session.fetch_neighbors(info.node)?;
        out.emit(
            info.node,
            SampleRecord::from_info(info, SampleKind::Transition),
        );
    }
    Ok(())
}

fn simple<'g, R: Rng + ?Sized, S: SampleSink + ?Sized>(
    session: &mut ApiSession<'g>,
    mut list: NeighborList<'g>,
    rng: &mut R,
    out: &mut Emitter<'_, S>,
) -> Result<(), WalkError> {
    while !session.budget_exhausted() && !out.full() {
        let idx = pick(&list, rng)?;
        let info = list.info(idx);
        list = session.fetch_neighbors(info.node)?;
        out.emit(
            info.node,
            SampleRecord::from_info(info, SampleKind::Transition),
        );
    }
    Ok(())
}

fn non_backtracking<'g, R: Rng + ?Sized, S: SampleSink + ?Sized>(
    session: &mut ApiSession<'g>,
    mut list: NeighborList<'g>,
    rng: &mut R,
    out: &mut Emitter<'_, S>,
) -> Result<(), WalkError> {
    let mut previous: Option<NodeId> = None;
    while !session.budget_exhausted() && !out.full() {
        let idx = match previous {
            Some(prev) if list.len() > 1 => {
                // drop exactly one occurrence of the predecessor from the multiset
                let skip = list
                    .nodes()
                    .iter()
                    .position(|&v| v == prev)
                    .expect("predecessor is adjacent");
                let r = rng.random_range(0..list.len() - 1);
                if r >= skip {
                    r + 1
                } else {
                    r
                }
            }
            _ => pick(&list, rng)?,
        };
        let info = list.info(idx);
        previous = Some(list.owner());
        list = session.fetch_neighbors(info.node)?;
        out.emit(
            info.node,
            SampleRecord::from_info(info, SampleKind::Transition),
        );
    }
    Ok(())
}

fn metropolis_hastings<'g, R: Rng + ?Sized, S: SampleSink + ?Sized>(
    session: &mut ApiSession<'g>,
    mut list: NeighborList<'g>,
    rng: &mut R,
    out: &mut Emitter<'_, S>,
) -> Result<(), WalkError> {
    let mut current = list.owner_info();
    while !session.budget_exhausted() && !out.full() {
        let idx = pick(&list, rng)?;
        let (d_out, d_in) = list.degrees(idx);
        let ratio = current.d_sum() as f64 / (d_out + d_in) as f64;
        if ratio >= 1.0 || rng.random::<f64>() < ratio {
            current = list.info(idx);
            list = session.fetch_neighbors(current.node)?;
        }
        out.emit(
            current.node,
            SampleRecord::from_info(current.clone(), SampleKind::Transition),
        );
    }
    Ok(())
}

/// Runs `walker` and collects every record.
pub fn walk<R: Rng + ?Sized>(
    walker: Walker,
    session: &mut ApiSession<'_>,
    start: NodeId,
    limits: WalkLimits,
    rng: &mut R,
) -> Result<SampleSequence, WalkError> {
    let mut records = Vec::new();
    let summary = walk_into(
        walker,
        session,
        start,
        limits,
        rng,
        &mut |_: NodeId, r: SampleRecord| records.push(r),
    )?;
    Ok(SampleSequence {
        walker,
        property_names: session.property_names(),
        records,
        queries_used: summary.queries_used,
    })
}

pub fn proposed_walk<R: Rng + ?Sized>(
    session: &mut ApiSession<'_>,
    start: NodeId,
    alpha: f64,
    rng: &mut R,
) -> Result<SampleSequence, WalkError> {
    walk(
        Walker::Proposed { alpha },
        session,
        start,
        WalkLimits::default(),
        rng,
    )
}

pub fn srw_walk<R: Rng + ?Sized>(
    session: &mut ApiSession<'_>,
    start: NodeId,
    rng: &mut R,
) -> Result<SampleSequence, WalkError> {
    walk(Walker::Srw, session, start, WalkLimits::default(), rng)
}

pub fn nbrw_walk<R: Rng + ?Sized>(
    session: &mut ApiSession<'_>,
    start: NodeId,
    rng: &mut R,
) -> Result<SampleSequence, WalkError> {
    walk(Walker::Nbrw, session, start, WalkLimits::default(), rng)
}

pub fn mhrw_walk<R: Rng + ?Sized>(
    session: &mut ApiSession<'_>,
    start: NodeId,
    rng: &mut R,
) -> Result<SampleSequence, WalkError> {
    walk(Walker::Mhrw, session, start, WalkLimits::default(), rng)
}
