//! Monte-Carlo experiment harness.
//!
//! One trial is: sample an instance, build the design for the chosen
//! algorithm, answer the whole batch through the counting oracle, decode,
//! and compare the estimate to the truth edge for edge. Trials are
//! independent, keyed by `(master_seed, trial index)` through separate RNG
//! streams for instance, design, and typicality sampling, so any single
//! trial can be replayed in isolation and a report is reproducible across
//! thread counts.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{
    self, bundle_outcomes_from_batch, BundleOutcomes, DecodeResult, Diagnostics,
};
use crate::design::{
    self, baseline_queries, GrotesqueDesign, GrotesqueDesignSpec,
};
use crate::model::{sample_hypergraph, typicality_check, ModelParams};
use crate::oracle::Oracle;
use crate::rng::{trial_rng, Lane};
use crate::{Algorithm, Error, Result};

pub use design::theorem_budget;

/// Environment variable that overrides the worker thread count.
pub const THREADS_ENV_VAR: &str = "HYPERLEARN_THREADS";

fn default_typicality_samples() -> usize {
    1000
}
fn default_delta_b() -> f64 {
    0.1
}
fn default_c_loc() -> f64 {
    4.0
}
fn default_node_cap() -> u64 {
    decode::DEFAULT_SEARCH_NODE_CAP
}
fn default_stream_threshold() -> usize {
    256 << 20
}

/// How many queries a Bernoulli-design run gets to spend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetSpec {
    /// The count at which the decoder's guarantee applies.
    Theorem,
    /// A fixed count.
    Explicit { queries: usize },
    /// The theorem count scaled by `factor`, rounded up, floored at 1.
    Multiplier { factor: f64 },
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec::Theorem
    }
}

impl BudgetSpec {
    pub fn resolve(&self, algo: Algorithm, params: &ModelParams) -> Result<usize> {
        match *self {
            BudgetSpec::Theorem => theorem_budget(algo, params),
            BudgetSpec::Explicit { queries } => {
                if queries == 0 {
                    return Err(Error::Config("a budget of 0 queries decodes nothing".into()));
                }
                Ok(queries)
            }
            BudgetSpec::Multiplier { factor } => {
                if !(factor > 0.0) || !factor.is_finite() {
                    return Err(Error::Config(format!(
                        "budget multiplier must be positive, got {factor}"
                    )));
                }
                let base = theorem_budget(algo, params)? as f64;
                Ok(((base * factor).ceil() as usize).max(1))
            }
        }
    }
}

/// Everything one experiment needs; serializable so runs can be launched
/// from a JSON config and reproduced later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub budget: BudgetSpec,
    pub trials: usize,
    pub master_seed: u64,
    /// Worker threads; `None` lets the pool pick. The environment variable
    /// named by [`THREADS_ENV_VAR`] overrides this when set.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Monte-Carlo probes behind each trial's typicality report; 0 skips the
    /// check entirely.
    #[serde(default = "default_typicality_samples")]
    pub typicality_samples: usize,
    /// Drop atypical instances from the success-rate denominator instead of
    /// scoring them.
    #[serde(default)]
    pub require_typical: bool,
    /// Bundle design failure budget.
    #[serde(default = "default_delta_b")]
    pub delta_b: f64,
    /// Bundle design location-test multiplier.
    #[serde(default = "default_c_loc")]
    pub c_loc: f64,
    /// Node budget for the SSS search.
    #[serde(default = "default_node_cap")]
    pub search_node_cap: u64,
    /// Bundle batches whose dense form would exceed this many bytes are
    /// answered bundle by bundle instead of materialized.
    #[serde(default = "default_stream_threshold")]
    pub stream_threshold_bytes: usize,
}

impl ExperimentConfig {
    pub fn new(params: ModelParams, algorithm: Algorithm, trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            params,
            algorithm,
            budget: BudgetSpec::default(),
            trials,
            master_seed,
            parallelism: None,
            typicality_samples: default_typicality_samples(),
            require_typical: false,
            delta_b: default_delta_b(),
            c_loc: default_c_loc(),
            search_node_cap: default_node_cap(),
            stream_threshold_bytes: default_stream_threshold(),
        }
    }
}

/// Outcome of one trial. Skipped trials carry a reason and no scores.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_count: Option<usize>,
    /// Edge-count band, degree cap, positive-rate band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub typical: Option<[bool; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries_used: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared_failure: Option<bool>,
    /// Size of the symmetric difference between estimate and truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_errors: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decode_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

/// Aggregated experiment output.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub algorithm: Algorithm,
    /// Resolved query budget; `None` for the bundle design, which sizes its
    /// own batch (see `grotesque`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grotesque: Option<GrotesqueDesignSpec>,
    pub baseline_queries: f64,
    pub trials: usize,
    /// Trials that entered the success-rate denominator.
    pub counted: usize,
    pub successes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_queries: Option<f64>,
    pub records: Vec<TrialRecord>,
}

/// Thread count resolution: the environment wins over the config; absent
/// both, the pool decides. Zero or unparseable values are configuration
/// errors rather than silent fallbacks.
pub fn resolve_parallelism(
    env_value: Option<&str>,
    config_value: Option<usize>,
) -> Result<Option<usize>> {
    let chosen = match env_value {
        Some(text) => {
            let parsed: usize = text.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "{THREADS_ENV_VAR} must be a positive integer, got {text:?}"
                ))
            })?;
            Some(parsed)
        }
        None => config_value,
    };
    if chosen == Some(0) {
        return Err(Error::Config(format!(
            "thread count 0 is meaningless; unset {THREADS_ENV_VAR} to use all cores"
        )));
    }
    Ok(chosen)
}

/// Messages worth surfacing before a run starts.
pub fn preflight_warnings(config: &ExperimentConfig) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    if config.algorithm == Algorithm::Grotesque {
        let spec = GrotesqueDesignSpec::compute(&config.params, config.delta_b, config.c_loc)?;
        if spec.crowding_warning {
            warnings.push(format!(
                "bundles are crowded (rate {:.4} over {} vertices against {:.1} expected \
                 edges); the one-edge-per-bundle analysis is off its regime and recovery \
                 rates may suffer",
                spec.bundle_rate, spec.n, spec.expected_edges
            ));
        }
        if spec.dense_batch_bytes() > config.stream_threshold_bytes {
            warnings.push(format!(
                "bundle batch of {} queries would take {} MiB dense; answering it \
                 bundle by bundle instead",
                spec.total_queries,
                spec.dense_batch_bytes() >> 20
            ));
        }
    } else {
        // Surfaces the out-of-regime error early, before any trial runs.
        design::bernoulli_parameter(&config.params)?;
    }
    Ok(warnings)
}

/// Runs all trials and aggregates. Deterministic for a fixed config: trial
/// records come back in trial order regardless of scheduling, and every
/// random draw is keyed by `(master_seed, trial, stream)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.params.validate()?;
    if config.trials == 0 {
        return Err(Error::Config("an experiment needs at least one trial".into()));
    }
    let budget = match config.algorithm {
        Algorithm::Grotesque => None,
        algo => Some(config.budget.resolve(algo, &config.params)?),
    };
    let grotesque = match config.algorithm {
        Algorithm::Grotesque => Some(GrotesqueDesignSpec::compute(
            &config.params,
            config.delta_b,
            config.c_loc,
        )?),
        _ => None,
    };
    if config.algorithm != Algorithm::Grotesque {
        design::bernoulli_parameter(&config.params)?;
    }

    let env = std::env::var(THREADS_ENV_VAR).ok();
    let threads = resolve_parallelism(env.as_deref(), config.parallelism)?;

    let body = || -> Result<Vec<TrialRecord>> {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| run_trial(config, budget, trial))
            .collect()
    };
    let records = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("could not build a {t}-thread pool: {e}")))?
            .install(body),
        None => body(),
    }?;

    let counted: Vec<&TrialRecord> =
        records.iter().filter(|r| r.skipped_reason.is_none()).collect();
    let successes = counted
        .iter()
        .filter(|r| r.success == Some(true))
        .count();
    let rate = (!counted.is_empty()).then(|| successes as f64 / counted.len() as f64);
    let stderr = rate.map(|r| (r * (1.0 - r) / counted.len() as f64).sqrt());
    let mean_queries = (!counted.is_empty()).then(|| {
        counted.iter().filter_map(|r| r.queries_used).sum::<u64>() as f64 / counted.len() as f64
    });

    Ok(ExperimentReport {
        algorithm: config.algorithm,
        budget,
        grotesque,
        baseline_queries: baseline_queries(&config.params),
        trials: config.trials,
        counted: counted.len(),
        successes,
        success_rate: rate,
        success_stderr: stderr,
        mean_queries,
        records,
    })
}

fn run_trial(config: &ExperimentConfig, budget: Option<usize>, trial: usize) -> Result<TrialRecord> {
    let params = &config.params;
    let seed = config.master_seed;
    let t64 = trial as u64;

    let truth = sample_hypergraph(params, &mut trial_rng(seed, t64, Lane::Instance))?;

    let typical = if config.typicality_samples > 0 {
        let report = typicality_check(
            &truth,
            params,
            config.typicality_samples,
            &mut trial_rng(seed, t64, Lane::Typicality),
        )?;
        Some(report.flags())
    } else {
        None
    };
    let mut record = TrialRecord {
        trial,
        skipped_reason: None,
        edge_count: Some(truth.edge_count()),
        typical,
        queries_used: None,
        success: None,
        declared_failure: None,
        estimate_errors: None,
        answer_ms: None,
        decode_ms: None,
        diagnostics: None,
    };
    if config.require_typical {
        if let Some(flags) = typical {
            if !flags.iter().all(|&ok| ok) {
                record.skipped_reason = Some("instance failed the typicality check".into());
                return Ok(record);
            }
        }
    }

    let oracle = Oracle::new(&truth);
    let mut design_rng = trial_rng(seed, t64, Lane::Design);

    let result: DecodeResult = match config.algorithm {
        Algorithm::Grotesque => {
            let design =
                GrotesqueDesign::sample(params, config.delta_b, config.c_loc, &mut design_rng)?;
            let answered = Instant::now();
            let per_bundle: Vec<BundleOutcomes> =
                if design.spec.dense_batch_bytes() > config.stream_threshold_bytes {
                    answer_streamed(&design, &oracle)?
                } else {
                    let batch = design.to_query_batch()?;
                    bundle_outcomes_from_batch(&design, &oracle.answer_batch(&batch)?)?
                };
            record.answer_ms = Some(answered.elapsed().as_secs_f64() * 1e3);
            let decoding = Instant::now();
            let res = decode::grotesque_decode(&design, &per_bundle)?;
            record.decode_ms = Some(decoding.elapsed().as_secs_f64() * 1e3);
            res
        }
        algo => {
            let t = budget.expect("bernoulli algorithms always resolve a budget");
            let batch = design::make_bernoulli_batch(params, t, &mut design_rng)?;
            let answered = Instant::now();
            let outcomes = oracle.answer_batch(&batch)?;
            record.answer_ms = Some(answered.elapsed().as_secs_f64() * 1e3);
            let decoding = Instant::now();
            let res = match algo {
                Algorithm::Comp => decode::comp_decode(params, &batch, &outcomes)?,
                Algorithm::Dd => decode::dd_decode(params, &batch, &outcomes)?,
                Algorithm::Sss => {
                    decode::sss_decode_with_cap(params, &batch, &outcomes, config.search_node_cap)?
                }
                Algorithm::Grotesque => unreachable!("handled above"),
            };
            record.decode_ms = Some(decoding.elapsed().as_secs_f64() * 1e3);
            res
        }
    };

    record.queries_used = Some(oracle.queries_answered());
    record.declared_failure = Some(result.declared_failure);
    record.estimate_errors = Some(result.estimate.symmetric_difference(&truth));
    record.success = Some(!result.declared_failure && result.estimate == truth);
    record.diagnostics = Some(result.diagnostics);
    Ok(record)
}

/// Answers a bundle design without ever materializing the full batch: each
/// bundle's queries are regenerated, answered, and dropped before the next
/// bundle's are built. Produces exactly what the dense path produces.
fn answer_streamed(design: &GrotesqueDesign, oracle: &Oracle) -> Result<Vec<BundleOutcomes>> {
    let mut out = Vec::with_capacity(design.bundles.len());
    for i in 0..design.bundles.len() {
        let (mult, loc) = design.bundle_queries(i)?;
        let mult_positives = oracle
            .answer_slice(&mult)?
            .into_iter()
            .filter(|&positive| positive)
            .count();
        let loc_answers = oracle.answer_slice(&loc)?;
        out.push(BundleOutcomes { mult_positives, loc_answers });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Budget sweeps
// ---------------------------------------------------------------------------

/// One point of a budget sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub t: usize,
    pub multiplier: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub algorithm: Algorithm,
    pub theorem_budget: usize,
    pub baseline_queries: f64,
    pub rows: Vec<SweepRow>,
}

/// Runs the experiment once per multiplier of the theorem budget. Only the
/// Bernoulli decoders sweep; the bundle design has no external budget knob.
pub fn sweep(config: &ExperimentConfig, multipliers: &[f64]) -> Result<SweepReport> {
    if config.algorithm == Algorithm::Grotesque {
        return Err(Error::Config(
            "budget sweeps apply to comp, dd, and sss; the bundle design sizes itself".into(),
        ));
    }
    if multipliers.is_empty() {
        return Err(Error::Config("a sweep needs at least one multiplier".into()));
    }
    let base = theorem_budget(config.algorithm, &config.params)?;
    let mut rows = Vec::with_capacity(multipliers.len());
    for &factor in multipliers {
        let mut point = config.clone();
        point.budget = BudgetSpec::Multiplier { factor };
        let t = point.budget.resolve(config.algorithm, &config.params)?;
        let report = run_experiment(&point)?;
        rows.push(SweepRow {
            t,
            multiplier: factor,
            trials: report.counted,
            successes: report.successes,
            rate: report.success_rate.unwrap_or(f64::NAN),
            stderr: report.success_stderr.unwrap_or(f64::NAN),
        });
    }
    Ok(SweepReport {
        algorithm: config.algorithm,
        theorem_budget: base,
        baseline_queries: baseline_queries(&config.params),
        rows,
    })
}

/// Renders sweep rows as CSV with a fixed header.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut text = String::from("t,multiplier,trials,successes,rate,stderr\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            row.t, row.multiplier, row.trials, row.successes, row.rate, row.stderr
        ));
    }
    text
}
