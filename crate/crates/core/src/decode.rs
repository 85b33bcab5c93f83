//! Decoders that turn a batch of detection answers into an edge estimate.
//!
//! Three of them read Bernoulli batches. COMP keeps every k-subset that no
//! negative query swallowed, which over-reports but never misses an edge. DD
//! keeps only COMP survivors that are the sole survivor inside some positive
//! query; those are provably real, so DD under-reports instead. SSS searches
//! for the smallest set of survivors that explains every positive answer,
//! which is the best any decoder can do from the same answers but needs a
//! combinatorial search. The fourth decoder reads the bundle design: it asks
//! each bundle whether it holds exactly one edge and, where the answer is
//! yes, pins the edge down by group-testing elimination.
//!
//! Decoders never guess when their own consistency checks fail; they return
//! an empty estimate with `declared_failure` set instead.

use serde::Serialize;

use crate::bitset::Bitset;
use crate::design::GrotesqueDesign;
use crate::model::{Hypergraph, ModelParams};
use crate::oracle::{QueryBatch, QueryOutcomes};
use crate::{Error, Result};

/// Branch-and-bound node budget for the set-cover search. Past this the
/// decoder gives up and declares failure rather than stalling the sweep.
pub const DEFAULT_SEARCH_NODE_CAP: u64 = 10_000_000;

/// An edge estimate plus how the decoder got there.
#[derive(Debug, Clone, Serialize)]
pub struct DecodeResult {
    pub estimate: Hypergraph,
    /// The decoder could not stand behind any estimate (search budget spent,
    /// inconsistent answers, or a candidate blow-up). The estimate is empty.
    pub declared_failure: bool,
    pub diagnostics: Diagnostics,
}

/// Decoder-specific counters; only the fields relevant to the decoder that
/// ran are populated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_overflow: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definite_edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_nodes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_budget_exhausted: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundles_flagged_single: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundles_located: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location_failures: Option<usize>,
}

fn check_batch(params: &ModelParams, batch: &QueryBatch, outcomes: &QueryOutcomes) -> Result<()> {
    if batch.n() != params.n {
        return Err(Error::Dimension(format!(
            "batch over {} vertices decoded under n = {}",
            batch.n(),
            params.n
        )));
    }
    if batch.len() != outcomes.len() {
        return Err(Error::Dimension(format!(
            "{} queries but {} outcomes",
            batch.len(),
            outcomes.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// COMP
// ---------------------------------------------------------------------------

struct Candidates {
    edges: Vec<Vec<u32>>,
    overflowed: bool,
}

/// Survivors of negative-query elimination: all k-subsets contained in no
/// negative query. Enumeration works per vertex over masks of negative
/// queries, so a subset survives exactly when its masks intersect to nothing.
/// If more than `cap` subsets survive the scan aborts with `overflowed` set;
/// such an estimate is far too large to be the true graph anyway.
fn comp_candidates(
    params: &ModelParams,
    batch: &QueryBatch,
    outcomes: &QueryOutcomes,
    cap: usize,
) -> Result<Candidates> {
    check_batch(params, batch, outcomes)?;
    let (n, k) = (params.n, params.k);

    let negatives: Vec<&Bitset> = (0..batch.len())
        .filter(|&i| !outcomes.get(i))
        .map(|i| batch.query(i))
        .collect();
    let t_neg = negatives.len();

    // masks[v] = indices of the negative queries containing v.
    let mut masks = vec![Bitset::new(t_neg); n];
    for (j, q) in negatives.iter().enumerate() {
        for v in q.iter_ones() {
            masks[v].set(j);
        }
    }

    let mut st = CompScan {
        n,
        k,
        masks,
        scratch: vec![Bitset::new(t_neg); k],
        path: Vec::with_capacity(k),
        edges: Vec::new(),
        cap,
        overflowed: false,
    };
    st.scan(0, 0);
    Ok(Candidates { edges: st.edges, overflowed: st.overflowed })
}

struct CompScan {
    n: usize,
    k: usize,
    masks: Vec<Bitset>,
    scratch: Vec<Bitset>,
    path: Vec<u32>,
    edges: Vec<Vec<u32>>,
    cap: usize,
    overflowed: bool,
}

impl CompScan {
    fn scan(&mut self, depth: usize, start: usize) {
        if self.overflowed {
            return;
        }
        for v in start..self.n {
            {
                let (lower, upper) = self.scratch.split_at_mut(depth);
                let slot = &mut upper[0];
                slot.clone_from(&self.masks[v]);
                if depth > 0 {
                    slot.intersect_with(&lower[depth - 1]);
                }
            }
            self.path.push(v as u32);
            if depth + 1 == self.k {
                if !self.scratch[depth].any() {
                    if self.edges.len() == self.cap {
                        self.overflowed = true;
                        self.path.pop();
                        return;
                    }
                    self.edges.push(self.path.clone());
                }
            } else {
                self.scan(depth + 1, v + 1);
            }
            self.path.pop();
            if self.overflowed {
                return;
            }
        }
    }
}

fn candidate_cap(params: &ModelParams) -> usize {
    (16.0 * params.expected_edges()).ceil().max(100_000.0) as usize
}

fn distinct_vertices(edges: &[Vec<u32>]) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for e in edges {
        seen.extend(e.iter().copied());
    }
    seen.len()
}

fn graph_from_edges(params: &ModelParams, edges: &[Vec<u32>]) -> Result<Hypergraph> {
    let mut g = Hypergraph::new(params.n, params.k);
    for e in edges {
        g.insert_edge(e.clone())?;
    }
    Ok(g)
}

/// COMP: report every k-subset no negative query ruled out.
pub fn comp_decode(
    params: &ModelParams,
    batch: &QueryBatch,
    outcomes: &QueryOutcomes,
) -> Result<DecodeResult> {
    let cands = comp_candidates(params, batch, outcomes, candidate_cap(params))?;
    let mut diag = Diagnostics {
        candidate_edges: Some(cands.edges.len()),
        candidate_vertices: Some(distinct_vertices(&cands.edges)),
        candidate_overflow: Some(cands.overflowed),
        ..Diagnostics::default()
    };
    if cands.overflowed {
        diag.candidate_edges = None;
        return Ok(DecodeResult {
            estimate: Hypergraph::new(params.n, params.k),
            declared_failure: true,
            diagnostics: diag,
        });
    }
    Ok(DecodeResult {
        estimate: graph_from_edges(params, &cands.edges)?,
        declared_failure: false,
        diagnostics: diag,
    })
}

// ---------------------------------------------------------------------------
// DD
// ---------------------------------------------------------------------------

/// DD: keep the COMP survivors that are the only survivor inside some
/// positive query. A positive query always contains a true edge and true
/// edges always survive COMP, so a lone survivor must be that edge; every
/// reported edge is genuine even when the batch is too small to find them
/// all.
pub fn dd_decode(
    params: &ModelParams,
    batch: &QueryBatch,
    outcomes: &QueryOutcomes,
) -> Result<DecodeResult> {
    let cands = comp_candidates(params, batch, outcomes, candidate_cap(params))?;
    if cands.overflowed {
        return Ok(DecodeResult {
            estimate: Hypergraph::new(params.n, params.k),
            declared_failure: true,
            diagnostics: Diagnostics {
                candidate_overflow: Some(true),
                ..Diagnostics::default()
            },
        });
    }

    let mut definite = vec![false; cands.edges.len()];
    for i in (0..batch.len()).filter(|&i| outcomes.get(i)) {
        let q = batch.query(i);
        let mut found: Option<usize> = None;
        let mut unique = true;
        for (c, edge) in cands.edges.iter().enumerate() {
            if q.contains_all(edge) {
                if found.is_some() {
                    unique = false;
                    break;
                }
                found = Some(c);
            }
        }
        if unique {
            if let Some(c) = found {
                definite[c] = true;
            }
        }
    }

    let kept: Vec<Vec<u32>> = cands
        .edges
        .iter()
        .zip(&definite)
        .filter(|(_, &d)| d)
        .map(|(e, _)| e.clone())
        .collect();
    Ok(DecodeResult {
        estimate: graph_from_edges(params, &kept)?,
        declared_failure: false,
        diagnostics: Diagnostics {
            candidate_edges: Some(cands.edges.len()),
            candidate_vertices: Some(distinct_vertices(&cands.edges)),
            candidate_overflow: Some(false),
            definite_edges: Some(kept.len()),
            ..Diagnostics::default()
        },
    })
}

// ---------------------------------------------------------------------------
// SSS
// ---------------------------------------------------------------------------

/// SSS with the default search budget.
pub fn sss_decode(
    params: &ModelParams,
    batch: &QueryBatch,
    outcomes: &QueryOutcomes,
) -> Result<DecodeResult> {
    sss_decode_with_cap(params, batch, outcomes, DEFAULT_SEARCH_NODE_CAP)
}

/// SSS: the smallest set of COMP survivors that touches every positive
/// query. Negative queries are already honored by every survivor subset, so
/// the search is an exact minimum set cover over the positive queries, run
/// by branch and bound from a greedy upper bound. Deterministic throughout;
/// if the node budget runs out the decoder declares failure.
pub fn sss_decode_with_cap(
    params: &ModelParams,
    batch: &QueryBatch,
    outcomes: &QueryOutcomes,
    node_cap: u64,
) -> Result<DecodeResult> {
    let cands = comp_candidates(params, batch, outcomes, candidate_cap(params))?;
    let mut diag = Diagnostics {
        candidate_edges: Some(cands.edges.len()),
        candidate_vertices: Some(distinct_vertices(&cands.edges)),
        candidate_overflow: Some(cands.overflowed),
        ..Diagnostics::default()
    };
    let fail = |diag: Diagnostics| {
        Ok(DecodeResult {
            estimate: Hypergraph::new(params.n, params.k),
            declared_failure: true,
            diagnostics: diag,
        })
    };
    if cands.overflowed {
        diag.candidate_edges = None;
        return fail(diag);
    }

    let positives: Vec<&Bitset> = (0..batch.len())
        .filter(|&i| outcomes.get(i))
        .map(|i| batch.query(i))
        .collect();
    let t_pos = positives.len();

    // covers[c] = positive queries candidate c sits inside.
    let covers: Vec<Bitset> = cands
        .edges
        .iter()
        .map(|e| {
            let mut s = Bitset::new(t_pos);
            for (j, q) in positives.iter().enumerate() {
                if q.contains_all(e) {
                    s.set(j);
                }
            }
            s
        })
        .collect();
    let mut covered_by: Vec<Vec<usize>> = vec![Vec::new(); t_pos];
    for (c, cover) in covers.iter().enumerate() {
        for j in cover.iter_ones() {
            covered_by[j].push(c);
        }
    }
    if covered_by.iter().any(|l| l.is_empty()) {
        // A positive answer nothing can explain; cannot happen against a
        // faithful oracle but a corrupted transcript can get here.
        return fail(diag);
    }

    // Greedy cover as the initial incumbent.
    let mut uncovered = Bitset::new(t_pos);
    for j in 0..t_pos {
        uncovered.set(j);
    }
    let mut greedy: Vec<usize> = Vec::new();
    while uncovered.any() {
        let best = (0..covers.len())
            .max_by_key(|&c| covers[c].intersection_count(&uncovered))
            .expect("nonempty candidate list");
        debug_assert!(covers[best].intersection_count(&uncovered) > 0);
        uncovered.subtract_with(&covers[best]);
        greedy.push(best);
    }

    let max_cover = covers.iter().map(Bitset::count_ones).max().unwrap_or(0);
    let mut search = CoverSearch {
        covers: &covers,
        covered_by: &covered_by,
        max_cover,
        best: greedy,
        nodes: 0,
        cap: node_cap,
        aborted: false,
        chosen: Vec::new(),
    };
    let mut all = Bitset::new(t_pos);
    for j in 0..t_pos {
        all.set(j);
    }
    search.run(&mut all);

    diag.search_nodes = Some(search.nodes);
    diag.search_budget_exhausted = Some(search.aborted);
    if search.aborted {
        return fail(diag);
    }
    let edges: Vec<Vec<u32>> = search.best.iter().map(|&c| cands.edges[c].clone()).collect();
    Ok(DecodeResult {
        estimate: graph_from_edges(params, &edges)?,
        declared_failure: false,
        diagnostics: diag,
    })
}

struct CoverSearch<'a> {
    covers: &'a [Bitset],
    covered_by: &'a [Vec<usize>],
    max_cover: usize,
    best: Vec<usize>,
    nodes: u64,
    cap: u64,
    aborted: bool,
    chosen: Vec<usize>,
}

impl CoverSearch<'_> {
    fn run(&mut self, uncovered: &mut Bitset) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.cap {
            self.aborted = true;
            return;
        }
        let unc = uncovered.count_ones();
        if unc == 0 {
            if self.chosen.len() < self.best.len() {
                self.best = self.chosen.clone();
            }
            return;
        }
        let lower = self.chosen.len() + unc.div_ceil(self.max_cover.max(1));
        if lower >= self.best.len() {
            return;
        }
        let pivot = uncovered
            .iter_ones()
            .min_by_key(|&j| self.covered_by[j].len())
            .expect("uncovered is nonempty");
        for &c in &self.covered_by[pivot] {
            let saved = uncovered.clone();
            uncovered.subtract_with(&self.covers[c]);
            self.chosen.push(c);
            self.run(uncovered);
            self.chosen.pop();
            *uncovered = saved;
            if self.aborted {
                return;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Multiplicity calls
// ---------------------------------------------------------------------------

/// What a bundle's multiplicity test concluded about its edge count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    Zero,
    One,
    Many,
}

/// Cut point between the one-edge plateau and the many-edge plateaus of the
/// thinned positive rate: `1/e` plus half the contrast.
pub fn multiplicity_threshold(k: usize) -> f64 {
    std::f64::consts::E.recip() + crate::design::multiplicity_contrast(k) / 2.0
}

/// Calls a bundle's edge count from its count of positive thinned queries.
/// Zero positives can only come from an edge-free bundle; otherwise the
/// positive rate sits near `1/e` for one edge and strictly higher plateaus
/// for more, so anything under the threshold reads as one edge.
pub fn multiplicity_decode(k: usize, positives: usize, t_mul: usize) -> Multiplicity {
    assert!(t_mul > 0, "multiplicity test with no queries");
    assert!(positives <= t_mul);
    if positives == 0 {
        return Multiplicity::Zero;
    }
    let rate = positives as f64 / t_mul as f64;
    if rate < multiplicity_threshold(k) {
        Multiplicity::One
    } else {
        Multiplicity::Many
    }
}

// ---------------------------------------------------------------------------
// Bundle decoding
// ---------------------------------------------------------------------------

/// The answers one bundle's tests produced: how many of its multiplicity
/// queries came back positive, and the raw detection answer of each location
/// query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleOutcomes {
    pub mult_positives: usize,
    pub loc_answers: Vec<bool>,
}

/// Regroups a full-batch outcome string by bundle, assuming the batch came
/// from [`GrotesqueDesign::to_query_batch`].
pub fn bundle_outcomes_from_batch(
    design: &GrotesqueDesign,
    outcomes: &QueryOutcomes,
) -> Result<Vec<BundleOutcomes>> {
    let spec = &design.spec;
    if outcomes.len() != spec.total_queries {
        return Err(Error::Dimension(format!(
            "{} outcomes for a bundle design of {} queries",
            outcomes.len(),
            spec.total_queries
        )));
    }
    let stride = spec.t_mul + spec.t_loc;
    Ok((0..design.bundles.len())
        .map(|i| {
            let base = i * stride;
            let mult_positives =
                (base..base + spec.t_mul).filter(|&j| outcomes.get(j)).count();
            let loc_answers =
                (base + spec.t_mul..base + stride).map(|j| outcomes.get(j)).collect();
            BundleOutcomes { mult_positives, loc_answers }
        })
        .collect())
}

/// Divide-and-locate decoding. Every bundle the multiplicity test calls
/// one-edge goes through group-testing elimination; located edges are
/// unioned (many bundles find the same edge). Bundles whose elimination is
/// inconsistent are dropped, which also silently absorbs most multiplicity
/// miscalls, since a two-edge bundle rarely yields a coherent one-edge
/// transcript.
pub fn grotesque_decode(
    design: &GrotesqueDesign,
    outcomes: &[BundleOutcomes],
) -> Result<DecodeResult> {
    let spec = &design.spec;
    if outcomes.len() != design.bundles.len() {
        return Err(Error::Dimension(format!(
            "{} bundle outcomes for {} bundles",
            outcomes.len(),
            design.bundles.len()
        )));
    }
    let mut estimate = Hypergraph::new(spec.n, spec.k);
    let mut flagged = 0usize;
    let mut located = 0usize;
    let mut failures = 0usize;
    for (bundle, out) in design.bundles.iter().zip(outcomes) {
        if out.loc_answers.len() != spec.t_loc {
            return Err(Error::Dimension(format!(
                "bundle has {} location answers, design says {}",
                out.loc_answers.len(),
                spec.t_loc
            )));
        }
        if multiplicity_decode(spec.k, out.mult_positives, spec.t_mul) != Multiplicity::One {
            continue;
        }
        flagged += 1;
        let group: Vec<bool> = out
            .loc_answers
            .iter()
            .map(|&detected| crate::grouptest::group_outcome(detected))
            .collect();
        match crate::grouptest::locate(&bundle.members, &bundle.pools, &group, spec.k) {
            Some(edge) => {
                located += 1;
                estimate.insert_edge(edge)?;
            }
            None => failures += 1,
        }
    }
    Ok(DecodeResult {
        estimate,
        declared_failure: false,
        diagnostics: Diagnostics {
            bundles_flagged_single: Some(flagged),
            bundles_located: Some(located),
            location_failures: Some(failures),
            ..Diagnostics::default()
        },
    })
}
