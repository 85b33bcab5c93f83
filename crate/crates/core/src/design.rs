//! Non-adaptive query designs and their sizing formulas.
//!
//! Two families are built here. The Bernoulli design includes every vertex in
//! every query independently with a rate tuned so a query contains `nu`
//! edges on average; COMP, DD, and SSS all decode batches of this shape. The
//! bundle design used by the divide-and-locate decoder instead draws many
//! small vertex bundles and attaches to each one a multiplicity test (does
//! this bundle hold exactly one edge?) and a bank of location pools that pin
//! the edge down inside the bundle. Everything is sized up front from the
//! instance parameters; nothing adapts to answers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::model::ModelParams;
use crate::oracle::{QueryBatch, QueryTag};
use crate::rng::seeded_rng;
use crate::{Algorithm, Error, Result};

// ---------------------------------------------------------------------------
// Bernoulli design
// ---------------------------------------------------------------------------

/// Per-vertex inclusion rate `(k * nu / (q * n^k))^(1/k)`.
///
/// With this rate a query holds `nu` edges in expectation, which keeps
/// positive and negative answers both common. Rates at or above 1 mean the
/// instance is outside the sparse regime the design needs.
pub fn bernoulli_parameter(params: &ModelParams) -> Result<f64> {
    let k = params.k as f64;
    let ln_p =
        ((k * params.nu).ln() - params.q.ln() - k * (params.n as f64).ln()) / k;
    let p = ln_p.exp();
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Config(format!(
            "vertex inclusion rate came out as {p} for n = {}, k = {}, q = {}",
            params.n, params.k, params.q
        )));
    }
    if p >= 1.0 {
        return Err(Error::Regime(format!(
            "vertex inclusion rate (k*nu / (q*n^k))^(1/k) = {p:.4} is not below 1; \
             the instance has too many expected edges for Bernoulli queries \
             with mean edge load nu = {}",
            params.nu
        )));
    }
    Ok(p)
}

/// Draws `t` independent Bernoulli queries.
pub fn make_bernoulli_batch<R: Rng + ?Sized>(
    params: &ModelParams,
    t: usize,
    rng: &mut R,
) -> Result<QueryBatch> {
    let p = bernoulli_parameter(params)?;
    let mut batch = QueryBatch::with_capacity(params.n, t);
    for _ in 0..t {
        batch.push(Bitset::bernoulli(params.n, p, rng))?;
    }
    Ok(batch)
}

/// Query count at which each Bernoulli decoder's success guarantee kicks in.
///
/// All three scale as `k * e * mbar * ln n` times an exponent-dependent
/// factor: 1 for COMP, `max(theta, 1-theta, 1-theta/2, 1+theta/2-1/k)` for
/// DD, and `theta` for SSS (floored at one query). DD and SSS therefore need
/// `theta` inside (0, 1). The bundle design is not covered here; it sizes its
/// own batch through [`GrotesqueDesignSpec`].
pub fn theorem_budget(algo: Algorithm, params: &ModelParams) -> Result<usize> {
    let k = params.k as f64;
    let base = k * std::f64::consts::E * params.expected_edges() * (params.n as f64).ln();
    let need_theta = || {
        params.theta.ok_or_else(|| {
            Error::Config(format!(
                "the {} budget needs theta in (0, 1), which these parameters do not determine",
                algo.name()
            ))
        })
    };
    let raw = match algo {
        Algorithm::Comp => base,
        Algorithm::Dd => {
            let th = need_theta()?;
            let factor = [th, 1.0 - th, 1.0 - th / 2.0, 1.0 + th / 2.0 - 1.0 / k]
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            factor * base
        }
        Algorithm::Sss => need_theta()? * base,
        Algorithm::Grotesque => {
            return Err(Error::Config(
                "the bundle design sizes its own batch; build a GrotesqueDesignSpec instead"
                    .into(),
            ))
        }
    };
    if !raw.is_finite() || raw > 1e15 {
        return Err(Error::Config(format!(
            "query budget {raw} is out of range for these parameters"
        )));
    }
    Ok((raw.ceil() as usize).max(1))
}

/// Information floor for any batch that pins down the instance: expected
/// edge count times the surprisal `log2(1/q)` of each present edge, in bits.
/// Query counts are compared against this as a baseline.
pub fn baseline_queries(params: &ModelParams) -> f64 {
    params.expected_edges() * (1.0 / params.q).log2()
}

// ---------------------------------------------------------------------------
// Bundle design sizing
// ---------------------------------------------------------------------------

/// Number of bundles: `ceil(4 * mbar * ln(mbar / delta_b))`, at least 1.
///
/// Enough that every edge lands alone in some bundle with probability
/// `1 - delta_b` overall.
pub fn bundle_count(mbar: f64, delta_b: f64) -> usize {
    let raw = (4.0 * mbar * (mbar / delta_b).ln()).ceil();
    if raw.is_finite() && raw >= 1.0 {
        raw as usize
    } else {
        1
    }
}

/// Per-vertex bundle inclusion rate `(2 * mbar)^(-1/k)`, capped at 1.
///
/// Sized so a bundle contains a given edge with probability `1 / (2 * mbar)`,
/// i.e. about half a bundle-edge incidence per bundle.
pub fn bundle_inclusion_rate(mbar: f64, k: usize) -> f64 {
    (2.0 * mbar).powf(-1.0 / k as f64).min(1.0)
}

/// Failure budget handed to each bundle's own tests:
/// `delta_b / (mbar * ln(mbar))`, clamped into (0, 1/2).
pub fn per_bundle_failure_rate(mbar: f64, delta_b: f64) -> f64 {
    let raw = delta_b / (mbar * mbar.ln());
    if raw.is_finite() && raw > 0.0 && raw < 0.5 {
        raw
    } else {
        delta_b.min(0.25)
    }
}

/// Gap `(1/e) * (1 - exp(-1/k))` between the positive-rate plateaus of a
/// one-edge bundle and a two-edge bundle under thinned queries; the
/// multiplicity test must resolve this gap.
pub fn multiplicity_contrast(k: usize) -> f64 {
    (1.0 - (-1.0 / k as f64).exp()) / std::f64::consts::E
}

/// Per-member retention rate `exp(-1/k)` for multiplicity-test queries.
pub fn multiplicity_thinning_rate(k: usize) -> f64 {
    (-1.0 / k as f64).exp()
}

/// Queries per multiplicity test: `ceil(2 * ln(2 / delta_star) / M^2)` with
/// `M` the contrast for this `k`.
pub fn multiplicity_test_count(k: usize, delta_star: f64) -> usize {
    let m = multiplicity_contrast(k);
    ((2.0 * (2.0 / delta_star).ln()) / (m * m)).ceil() as usize
}

/// Pools per location test: `ceil(c_loc * k * ln(n * b / delta_b))`.
pub fn location_test_count(n: usize, k: usize, bundles: usize, delta_b: f64, c_loc: f64) -> usize {
    (c_loc * k as f64 * ((n as f64) * (bundles as f64) / delta_b).ln()).ceil() as usize
}

/// All derived sizes of one bundle design, fixed before any query is asked.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrotesqueDesignSpec {
    pub n: usize,
    pub k: usize,
    pub expected_edges: f64,
    pub delta_b: f64,
    pub c_loc: f64,
    pub bundles: usize,
    pub bundle_rate: f64,
    pub per_bundle_failure: f64,
    pub contrast: f64,
    pub thinning_rate: f64,
    pub pool_rate: f64,
    pub t_mul: usize,
    pub t_loc: usize,
    pub total_queries: usize,
    /// Set when `r_inc * k^2 * mbar / n >= 1`: bundles are then so large a
    /// fixed share of them collide with several edges and the one-edge
    /// analysis stops applying.
    pub crowding_warning: bool,
}

impl GrotesqueDesignSpec {
    pub fn compute(params: &ModelParams, delta_b: f64, c_loc: f64) -> Result<Self> {
        if !(delta_b > 0.0 && delta_b < 1.0) {
            return Err(Error::Config(format!(
                "bundle failure budget delta_b must lie in (0, 1), got {delta_b}"
            )));
        }
        if !(c_loc > 0.0) || !c_loc.is_finite() {
            return Err(Error::Config(format!(
                "location test multiplier c_loc must be positive, got {c_loc}"
            )));
        }
        let (n, k) = (params.n, params.k);
        let mbar = params.expected_edges();
        let bundles = bundle_count(mbar, delta_b);
        let bundle_rate = bundle_inclusion_rate(mbar, k);
        let per_bundle_failure = per_bundle_failure_rate(mbar, delta_b);
        let t_mul = multiplicity_test_count(k, per_bundle_failure);
        let t_loc = location_test_count(n, k, bundles, delta_b, c_loc);
        let total = bundles
            .checked_mul(t_mul + t_loc)
            .ok_or_else(|| Error::Config("bundle design size overflows usize".into()))?;
        Ok(GrotesqueDesignSpec {
            n,
            k,
            expected_edges: mbar,
            delta_b,
            c_loc,
            bundles,
            bundle_rate,
            per_bundle_failure,
            contrast: multiplicity_contrast(k),
            thinning_rate: multiplicity_thinning_rate(k),
            pool_rate: crate::grouptest::pool_inclusion_rate(k),
            t_mul,
            t_loc,
            total_queries: total,
            crowding_warning: bundle_rate * (k * k) as f64 * mbar / n as f64 >= 1.0,
        })
    }

    /// Bytes a fully materialized batch would take; used to decide between
    /// one dense batch and per-bundle streaming.
    pub fn dense_batch_bytes(&self) -> usize {
        self.total_queries.saturating_mul(self.n.div_ceil(64) * 8)
    }
}

// ---------------------------------------------------------------------------
// Sampled bundle design
// ---------------------------------------------------------------------------

/// One bundle: its members, the seed that regenerates its multiplicity
/// queries, and its location pools over member positions (not vertex ids),
/// so storage stays proportional to the bundle size rather than to `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub members: Vec<u32>,
    pub mult_seed: u64,
    pub pools: Vec<Bitset>,
}

/// A sampled bundle design. Multiplicity queries are not stored; each
/// bundle's are regenerated on demand from its seed, which keeps the resident
/// size at `O(b * (bundle size + t_loc * bundle size / 8))` bytes while the
/// full batch can run to gigabytes.
#[derive(Debug, Clone)]
pub struct GrotesqueDesign {
    pub spec: GrotesqueDesignSpec,
    pub bundles: Vec<Bundle>,
}

impl GrotesqueDesign {
    pub fn sample<R: Rng + ?Sized>(
        params: &ModelParams,
        delta_b: f64,
        c_loc: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let spec = GrotesqueDesignSpec::compute(params, delta_b, c_loc)?;
        let mut bundles = Vec::with_capacity(spec.bundles);
        for _ in 0..spec.bundles {
            let members: Vec<u32> = Bitset::bernoulli(spec.n, spec.bundle_rate, rng)
                .iter_ones()
                .map(|v| v as u32)
                .collect();
            let mult_seed = rng.gen::<u64>();
            let pools = crate::grouptest::make_pools(members.len(), spec.t_loc, spec.pool_rate, rng);
            bundles.push(Bundle { members, mult_seed, pools });
        }
        Ok(GrotesqueDesign { spec, bundles })
    }

    /// Regenerates bundle `i`'s queries: `t_mul` thinned multiplicity queries
    /// (deterministic given the stored seed) followed by the `t_loc`
    /// pool-complement detection queries.
    pub fn bundle_queries(&self, i: usize) -> Result<(Vec<Bitset>, Vec<Bitset>)> {
        let b = &self.bundles[i];
        let mut rng = seeded_rng(b.mult_seed);
        let mult = (0..self.spec.t_mul)
            .map(|_| Bitset::bernoulli_subset(self.spec.n, &b.members, self.spec.thinning_rate, &mut rng))
            .collect();
        let loc = b
            .pools
            .iter()
            .map(|pool| crate::grouptest::pool_to_detection_query(self.spec.n, &b.members, pool))
            .collect::<Result<Vec<_>>>()?;
        Ok((mult, loc))
    }

    /// Materializes the whole batch in bundle order, multiplicity queries
    /// before location queries within each bundle, with tags throughout.
    pub fn to_query_batch(&self) -> Result<QueryBatch> {
        let mut batch = QueryBatch::with_capacity(self.spec.n, self.spec.total_queries);
        for i in 0..self.bundles.len() {
            let (mult, loc) = self.bundle_queries(i)?;
            for s in mult {
                batch.push_tagged(s, QueryTag::Multiplicity { bundle: i as u32 })?;
            }
            for (j, s) in loc.into_iter().enumerate() {
                batch.push_tagged(s, QueryTag::Location { bundle: i as u32, pool: j as u32 })?;
            }
        }
        Ok(batch)
    }
}
