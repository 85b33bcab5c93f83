//! Random instance model: parameter validation, hypergraph representation,
//! sparse sampling, and typicality checks.
//!
//! Instances are k-uniform hypergraphs on `n` vertices where every k-subset
//! is an edge independently with probability `q`. The interesting regimes are
//! extremely sparse, so the sampler never enumerates all `C(n, k)` candidate
//! edges; it walks their colexicographic ranks with geometric skips and only
//! unranks the hits.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Instance distribution plus the knobs shared by every query design.
///
/// `q` is the per-subset edge probability. `theta` rewrites it as
/// `q = n^(-k(1-theta))`; sparser graphs have smaller `theta`. When
/// parameters arrive as a raw `q`, `theta` is back-solved for reporting and
/// kept only if it lands inside (0, 1), the regime the query budgets assume.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub theta: Option<f64>,
    /// Target mean number of edges per Bernoulli query; 1 is the sweet spot.
    pub nu: f64,
    /// Relative width of the typical bands.
    pub epsilon: f64,
}

impl ModelParams {
    pub fn from_theta(n: usize, k: usize, theta: f64, nu: f64, epsilon: f64) -> Result<Self> {
        validate_common(n, k, nu, epsilon)?;
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Config(format!(
                "theta must lie strictly inside (0, 1), got {theta}"
            )));
        }
        let q = (n as f64).powf(-(k as f64) * (1.0 - theta));
        let params = ModelParams { n, k, q, theta: Some(theta), nu, epsilon };
        params.check_q()?;
        Ok(params)
    }

    pub fn from_q(n: usize, k: usize, q: f64, nu: f64, epsilon: f64) -> Result<Self> {
        validate_common(n, k, nu, epsilon)?;
        let theta = 1.0 + q.ln() / (k as f64 * (n as f64).ln());
        let theta = (theta > 0.0 && theta < 1.0).then_some(theta);
        let params = ModelParams { n, k, q, theta, nu, epsilon };
        params.check_q()?;
        Ok(params)
    }

    /// Re-checks every invariant the constructors enforce. Needed when
    /// parameters arrive through deserialization, which skips them.
    pub fn validate(&self) -> Result<()> {
        validate_common(self.n, self.k, self.nu, self.epsilon)?;
        self.check_q()?;
        if let Some(theta) = self.theta {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::Config(format!(
                    "theta must lie strictly inside (0, 1), got {theta}"
                )));
            }
            let implied = (self.n as f64).powf(-(self.k as f64) * (1.0 - theta));
            if (implied - self.q).abs() > 1e-9 * self.q {
                return Err(Error::Config(format!(
                    "theta = {theta} implies q = {implied} but q = {} was given",
                    self.q
                )));
            }
        }
        Ok(())
    }

    fn check_q(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) || !self.q.is_finite() {
            return Err(Error::Config(format!(
                "edge probability must lie strictly inside (0, 1), got {}",
                self.q
            )));
        }
        let mbar = self.expected_edges();
        if !(mbar.is_finite() && mbar > 0.0) {
            return Err(Error::Config(format!(
                "expected edge count q*C(n,k) = {mbar} is not a positive finite number"
            )));
        }
        Ok(())
    }

    /// Mean edge count `q * C(n, k)`.
    ///
    /// The binomial coefficient is accumulated as a product of small ratios,
    /// which is exact for every case a desk machine can hold; if it overflows
    /// f64 the computation falls back to log space before multiplying by `q`.
    pub fn expected_edges(&self) -> f64 {
        let c = binomial_f64(self.n, self.k);
        if c.is_finite() {
            self.q * c
        } else {
            (ln_binomial(self.n, self.k) + self.q.ln()).exp()
        }
    }

    /// Degree cap for the typicality check.
    ///
    /// Dense side (`theta > 1/k`): `k * n^(k-1) * q`, the natural scale of the
    /// expected maximum degree. Sparse side and the boundary: `log2(n)`.
    pub fn d_max(&self) -> Result<f64> {
        let theta = self.theta.ok_or_else(|| {
            Error::Config(
                "degree cap needs theta; it was not given and could not be \
                 back-solved into (0, 1) from q"
                    .into(),
            )
        })?;
        let k = self.k as f64;
        if theta > 1.0 / k {
            Ok(k * (self.n as f64).powi(self.k as i32 - 1) * self.q)
        } else {
            Ok((self.n as f64).log2())
        }
    }
}

fn validate_common(n: usize, k: usize, nu: f64, epsilon: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::Config(format!("edge arity k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!(
            "edge arity k = {k} exceeds the vertex count n = {n}"
        )));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Config(format!("nu must be positive and finite, got {nu}")));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let mut c = 1.0f64;
    for i in 1..=k {
        c *= (n - k + i) as f64 / i as f64;
    }
    c
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| (((n - k + i) as f64) / i as f64).ln()).sum()
}

// ---------------------------------------------------------------------------
// Hypergraph
// ---------------------------------------------------------------------------

/// A k-uniform hypergraph with edges stored as strictly increasing vertex
/// tuples in a sorted set, so iteration order, equality, and the JSON form
/// are all canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hypergraph {
    n: usize,
    k: usize,
    edges: BTreeSet<Vec<u32>>,
}

impl Hypergraph {
    pub fn new(n: usize, k: usize) -> Self {
        Hypergraph { n, k, edges: BTreeSet::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.edges.iter()
    }

    /// Inserts an edge given in any vertex order; returns whether it was new.
    pub fn insert_edge(&mut self, mut edge: Vec<u32>) -> Result<bool> {
        edge.sort_unstable();
        self.validate_edge(&edge)?;
        Ok(self.edges.insert(edge))
    }

    fn validate_edge(&self, edge: &[u32]) -> Result<()> {
        if edge.len() != self.k {
            return Err(Error::Config(format!(
                "edge {:?} has {} vertices, expected {}",
                edge,
                edge.len(),
                self.k
            )));
        }
        if edge.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "edge {edge:?} repeats a vertex or is not strictly increasing"
            )));
        }
        if let Some(&last) = edge.last() {
            if last as usize >= self.n {
                return Err(Error::Config(format!(
                    "edge {:?} names vertex {} but the graph has n = {}",
                    edge, last, self.n
                )));
            }
        }
        Ok(())
    }

    pub fn contains_edge(&self, edge: &[u32]) -> bool {
        self.edges.contains(edge)
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            for &v in e {
                deg[v as usize] += 1;
            }
        }
        deg.into_iter().max().unwrap_or(0)
    }

    /// Number of edges present in exactly one of the two graphs.
    pub fn symmetric_difference(&self, other: &Hypergraph) -> usize {
        self.edges.symmetric_difference(&other.edges).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: HypergraphRepr = serde_json::from_str(text)?;
        repr.try_into()
    }
}

#[derive(Deserialize)]
struct HypergraphRepr {
    n: usize,
    k: usize,
    edges: Vec<Vec<u32>>,
}

impl TryFrom<HypergraphRepr> for Hypergraph {
    type Error = Error;

    fn try_from(repr: HypergraphRepr) -> Result<Self> {
        if repr.k < 2 || repr.k > repr.n {
            return Err(Error::Config(format!(
                "hypergraph header has k = {}, n = {}",
                repr.k, repr.n
            )));
        }
        let mut g = Hypergraph::new(repr.n, repr.k);
        for edge in repr.edges {
            // The file format is canonical: edges must already be sorted.
            g.validate_edge(&edge)?;
            g.edges.insert(edge);
        }
        Ok(g)
    }
}

impl<'de> Deserialize<'de> for Hypergraph {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let repr = HypergraphRepr::deserialize(deserializer)?;
        repr.try_into().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draws a hypergraph by geometric skips over colexicographic edge ranks.
///
/// A skip of length `floor(ln u / ln(1-q))` with `u` uniform in (0, 1] lands
/// on each successive included edge, so the run time is `O(m * k log n)`
/// rather than `O(C(n, k))`; only the hit ranks are unranked into tuples.
pub fn sample_hypergraph<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<Hypergraph> {
    let (n, k, q) = (params.n, params.k, params.q);
    let table = BinomialTable::new(n, k)?;
    let total = table.binomial(n, k);
    let mut g = Hypergraph::new(n, k);

    let ln_one_minus_q = (-q).ln_1p();
    debug_assert!(ln_one_minus_q < 0.0);
    let mut next: u128 = 0;
    loop {
        let u = 1.0 - rng.gen::<f64>(); // in (0, 1], so the log is finite
        let skip = (u.ln() / ln_one_minus_q).floor();
        if !skip.is_finite() || skip >= (total.saturating_sub(next)) as f64 {
            break;
        }
        next += skip as u128;
        if next >= total {
            break;
        }
        let edge = table.unrank_colex(next);
        g.edges.insert(edge);
        next += 1;
        if next >= total {
            break;
        }
    }
    Ok(g)
}

/// Binomial coefficients `C(c, i)` for `c <= n`, `i <= k`, used for ranked
/// access into the colexicographic enumeration of k-subsets.
struct BinomialTable {
    k: usize,
    /// `cols[i][c] = C(c, i)` for `i` in `1..=k`.
    cols: Vec<Vec<u128>>,
}

impl BinomialTable {
    fn new(n: usize, k: usize) -> Result<Self> {
        let mut cols = vec![vec![0u128; n + 1]; k + 1];
        for c in 0..=n {
            cols[0][c] = 1;
        }
        for i in 1..=k {
            for c in 1..=n {
                let v = cols[i][c - 1].checked_add(cols[i - 1][c - 1]);
                match v {
                    Some(v) => cols[i][c] = v,
                    None => {
                        return Err(Error::Config(format!(
                            "C({n}, {k}) does not fit in 128 bits; instance is too large \
                             for ranked edge enumeration"
                        )))
                    }
                }
            }
        }
        Ok(BinomialTable { k, cols })
    }

    fn binomial(&self, c: usize, i: usize) -> u128 {
        self.cols[i][c]
    }

    /// Inverts `rank = sum_i C(edge[i], i+1)` over strictly increasing tuples.
    fn unrank_colex(&self, mut rank: u128) -> Vec<u32> {
        let mut edge = vec![0u32; self.k];
        for i in (1..=self.k).rev() {
            let col = &self.cols[i];
            // Largest c with C(c, i) <= rank; columns are non-decreasing.
            let c = match col.partition_point(|&v| v <= rank) {
                0 => unreachable!("C(i-1, i) = 0 <= rank always holds"),
                p => p - 1,
            };
            rank -= col[c];
            edge[i - 1] = c as u32;
        }
        edge
    }
}

// ---------------------------------------------------------------------------
// Typicality
// ---------------------------------------------------------------------------

/// Where one sampled instance stands relative to the typical set: edge count
/// in the `(1 +- epsilon)` band, maximum degree under the cap, and estimated
/// positive-query rate in the `(1 +- epsilon)(1 - exp(-nu))` band.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub edge_count: usize,
    pub expected_edges: f64,
    pub max_degree: usize,
    pub degree_cap: f64,
    pub positive_rate_estimate: f64,
    pub positive_rate_stderr: f64,
    pub mc_samples: usize,
    pub edge_count_ok: bool,
    pub degree_ok: bool,
    pub positive_rate_ok: bool,
}

impl TypicalityReport {
    pub fn is_typical(&self) -> bool {
        self.edge_count_ok && self.degree_ok && self.positive_rate_ok
    }

    pub fn flags(&self) -> [bool; 3] {
        [self.edge_count_ok, self.degree_ok, self.positive_rate_ok]
    }
}

/// Tests the three typicality conditions for `g` under `params`.
///
/// The first two are exact; the positive-query rate is estimated from
/// `mc_samples` fresh Bernoulli queries and compared against its band with a
/// three-standard-error allowance on each side, so the verdict is stable for
/// instances that are not borderline.
pub fn typicality_check<R: Rng + ?Sized>(
    g: &Hypergraph,
    params: &ModelParams,
    mc_samples: usize,
    rng: &mut R,
) -> Result<TypicalityReport> {
    if g.n() != params.n || g.k() != params.k {
        return Err(Error::Dimension(format!(
            "graph is {}-uniform on {} vertices but params say k = {}, n = {}",
            g.k(),
            g.n(),
            params.k,
            params.n
        )));
    }
    if mc_samples == 0 {
        return Err(Error::Config("typicality estimation needs mc_samples >= 1".into()));
    }
    let p = crate::design::bernoulli_parameter(params)?;
    let mbar = params.expected_edges();
    let d_max = params.d_max()?;

    let m = g.edge_count();
    let max_degree = g.max_degree();
    let mut positives = 0usize;
    for _ in 0..mc_samples {
        let s = Bitset::bernoulli(params.n, p, rng);
        if crate::oracle::answer_query(g, &s) {
            positives += 1;
        }
    }
    let p_hat = positives as f64 / mc_samples as f64;
    let stderr = (p_hat * (1.0 - p_hat) / mc_samples as f64).sqrt();

    let rate_center = 1.0 - (-params.nu).exp();
    let rate_lo = (1.0 - params.epsilon) * rate_center - 3.0 * stderr;
    let rate_hi = (1.0 + params.epsilon) * rate_center + 3.0 * stderr;

    Ok(TypicalityReport {
        edge_count: m,
        expected_edges: mbar,
        max_degree,
        degree_cap: d_max,
        positive_rate_estimate: p_hat,
        positive_rate_stderr: stderr,
        mc_samples,
        edge_count_ok: (1.0 - params.epsilon) * mbar <= m as f64
            && m as f64 <= (1.0 + params.epsilon) * mbar,
        degree_ok: max_degree as f64 <= d_max,
        positive_rate_ok: rate_lo <= p_hat && p_hat <= rate_hi,
    })
}
