//! Detection-query oracle and on-disk query transcripts.
//!
//! A detection query asks one question about the hidden hypergraph: does the
//! queried vertex set contain at least one full edge? The oracle answers
//! batches of such queries and counts every answer it hands out, which is the
//! quantity the sample-complexity comparisons are about. Batches can be
//! written to a compact binary transcript and read back bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::model::Hypergraph;
use crate::{Error, Result};

/// True iff some edge of `g` is entirely inside `s`.
pub fn answer_query(g: &Hypergraph, s: &Bitset) -> bool {
    debug_assert_eq!(s.len(), g.n());
    g.edges().any(|e| s.contains_all(e))
}

/// Where a query came from within a design. Purely diagnostic; the oracle
/// treats every query the same.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryTag {
    Bernoulli,
    Multiplicity { bundle: u32 },
    Location { bundle: u32, pool: u32 },
}

/// An ordered set of detection queries over a fixed vertex count, with
/// optional per-query tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBatch {
    n: usize,
    queries: Vec<Bitset>,
    tags: Option<Vec<QueryTag>>,
}

impl QueryBatch {
    pub fn new(n: usize) -> Self {
        QueryBatch { n, queries: Vec::new(), tags: None }
    }

    pub fn with_capacity(n: usize, t: usize) -> Self {
        QueryBatch { n, queries: Vec::with_capacity(t), tags: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[Bitset] {
        &self.queries
    }

    pub fn query(&self, i: usize) -> &Bitset {
        &self.queries[i]
    }

    pub fn push(&mut self, s: Bitset) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::Dimension(format!(
                "query over {} vertices pushed into a batch over {}",
                s.len(),
                self.n
            )));
        }
        if let Some(tags) = &mut self.tags {
            tags.push(QueryTag::Bernoulli);
        }
        self.queries.push(s);
        Ok(())
    }

    pub fn push_tagged(&mut self, s: Bitset, tag: QueryTag) -> Result<()> {
        if self.tags.is_none() {
            // Backfill: earlier untagged pushes were plain Bernoulli queries.
            self.tags = Some(vec![QueryTag::Bernoulli; self.queries.len()]);
        }
        let i = self.queries.len();
        self.push(s)?;
        self.tags.as_mut().unwrap()[i] = tag;
        Ok(())
    }

    pub fn tags(&self) -> Option<&[QueryTag]> {
        self.tags.as_deref()
    }
}

/// Answers to a batch, one bit per query in batch order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcomes {
    answers: Bitset,
}

impl QueryOutcomes {
    pub fn from_bools(answers: &[bool]) -> Self {
        let mut bits = Bitset::new(answers.len());
        for (i, &a) in answers.iter().enumerate() {
            if a {
                bits.set(i);
            }
        }
        QueryOutcomes { answers: bits }
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.len() == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.answers.get(i)
    }

    pub fn count_positives(&self) -> usize {
        self.answers.count_ones()
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.answers.iter_ones()
    }

    pub fn as_bitset(&self) -> &Bitset {
        &self.answers
    }
}

/// Owns the hidden graph for the duration of an experiment and meters access
/// to it. All lookups go through `answer*` methods, and each one bumps the
/// query counter; there is no way to peek at the graph through this type.
pub struct Oracle<'g> {
    graph: &'g Hypergraph,
    answered: AtomicU64,
}

impl<'g> Oracle<'g> {
    pub fn new(graph: &'g Hypergraph) -> Self {
        Oracle { graph, answered: AtomicU64::new(0) }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Total queries answered so far, across all threads.
    pub fn queries_answered(&self) -> u64 {
        self.answered.load(Ordering::Relaxed)
    }

    pub fn answer(&self, s: &Bitset) -> Result<bool> {
        self.check_len(s.len())?;
        self.answered.fetch_add(1, Ordering::Relaxed);
        Ok(answer_query(self.graph, s))
    }

    /// Answers a slice of queries in parallel, preserving order.
    pub fn answer_slice(&self, queries: &[Bitset]) -> Result<Vec<bool>> {
        for s in queries {
            self.check_len(s.len())?;
        }
        self.answered.fetch_add(queries.len() as u64, Ordering::Relaxed);
        Ok(queries.par_iter().map(|s| answer_query(self.graph, s)).collect())
    }

    pub fn answer_batch(&self, batch: &QueryBatch) -> Result<QueryOutcomes> {
        if batch.n() != self.graph.n() {
            return Err(Error::Dimension(format!(
                "batch over {} vertices sent to an oracle over {}",
                batch.n(),
                self.graph.n()
            )));
        }
        Ok(QueryOutcomes::from_bools(&self.answer_slice(batch.queries())?))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.graph.n() {
            return Err(Error::Dimension(format!(
                "query over {} vertices sent to an oracle over {}",
                len,
                self.graph.n()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"HQB1";

/// Writes a batch, and optionally its outcomes, to a binary transcript.
///
/// Layout: magic `HQB1`, then `n` and `t` as little-endian u32, one
/// `has_outcomes` byte, `t` rows of `ceil(n/8)` query bytes (LSB-first within
/// each byte), and if outcomes are present a final `ceil(t/8)` answer bytes.
/// Tags, when the batch has them, go to a JSON sidecar at `<path>.tags.json`.
pub fn write_transcript(
    path: &Path,
    batch: &QueryBatch,
    outcomes: Option<&QueryOutcomes>,
) -> Result<()> {
    if batch.n() > u32::MAX as usize || batch.len() > u32::MAX as usize {
        return Err(Error::Dimension(format!(
            "transcript header is 32-bit; got n = {}, t = {}",
            batch.n(),
            batch.len()
        )));
    }
    if let Some(out) = outcomes {
        if out.len() != batch.len() {
            return Err(Error::Dimension(format!(
                "{} outcomes for {} queries",
                out.len(),
                batch.len()
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(batch.n() as u32).to_le_bytes())?;
    w.write_all(&(batch.len() as u32).to_le_bytes())?;
    w.write_all(&[outcomes.is_some() as u8])?;
    for s in batch.queries() {
        w.write_all(&s.to_bytes())?;
    }
    if let Some(out) = outcomes {
        w.write_all(&out.answers.to_bytes())?;
    }
    w.flush()?;
    if let Some(tags) = batch.tags() {
        let sidecar = sidecar_path(path);
        serde_json::to_writer(BufWriter::new(File::create(sidecar)?), tags)?;
    }
    Ok(())
}

/// Reads a transcript back; picks up the tag sidecar if one sits next to it.
pub fn read_transcript(path: &Path) -> Result<(QueryBatch, Option<QueryOutcomes>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config(format!(
            "{} is not a query transcript (bad magic)",
            path.display()
        )));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let t = u32::from_le_bytes(word) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let has_outcomes = match flag[0] {
        0 => false,
        1 => true,
        other => {
            return Err(Error::Config(format!(
                "transcript outcome flag must be 0 or 1, got {other}"
            )))
        }
    };

    let row_bytes = n.div_ceil(8);
    let mut batch = QueryBatch::with_capacity(n, t);
    let mut row = vec![0u8; row_bytes];
    for _ in 0..t {
        r.read_exact(&mut row)?;
        batch.push(Bitset::from_bytes(n, &row)?)?;
    }
    let outcomes = if has_outcomes {
        let mut bytes = vec![0u8; t.div_ceil(8)];
        r.read_exact(&mut bytes)?;
        Some(QueryOutcomes { answers: Bitset::from_bytes(t, &bytes)? })
    } else {
        None
    };
    let mut trailer = [0u8; 1];
    if r.read(&mut trailer)? != 0 {
        return Err(Error::Config("transcript has trailing bytes".into()));
    }

    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let tags: Vec<QueryTag> = serde_json::from_reader(BufReader::new(File::open(&sidecar)?))?;
        if tags.len() != t {
            return Err(Error::Dimension(format!(
                "tag sidecar lists {} tags for {} queries",
                tags.len(),
                t
            )));
        }
        batch.tags = Some(tags);
    }
    Ok((batch, outcomes))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".tags.json");
    std::path::PathBuf::from(name)
}
