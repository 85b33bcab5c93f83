//! Command-line front end for the hypergraph learning simulator.
//!
//! Four subcommands: `generate` samples an instance, `run` scores one
//! decoder over many trials, `sweep` scans query budgets around the theorem
//! count, and `baseline` prints the budgets and information floor without
//! running anything. Reports are JSON on stdout; warnings go to stderr.
//! Exit code 2 flags configuration and regime problems, 1 anything else.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperlearn::design::{theorem_budget, GrotesqueDesignSpec};
use hyperlearn::harness::{self, BudgetSpec, ExperimentConfig};
use hyperlearn::model::{sample_hypergraph, typicality_check, ModelParams};
use hyperlearn::rng::{trial_rng, Lane};
use hyperlearn::{Algorithm, Error, Result};

#[derive(Parser)]
#[command(
    name = "hyperlearn",
    version,
    about = "Simulates learning a hidden sparse hypergraph from one batch of \
             subset-detection queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random instance and print it as JSON.
    Generate(GenerateArgs),
    /// Run one decoder for many trials and report success statistics.
    Run(ExperimentArgs),
    /// Scan budget multipliers around the theorem query count; prints CSV.
    Sweep(SweepArgs),
    /// Print the information floor and each decoder's query budget.
    Baseline(BaselineArgs),
}

fn parse_algorithm(text: &str) -> std::result::Result<Algorithm, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Vertex count.
    #[arg(long)]
    n: usize,
    /// Edge arity.
    #[arg(long)]
    k: usize,
    /// Sparsity exponent in (0, 1); sets q = n^(-k(1-theta)).
    #[arg(long, conflicts_with = "q")]
    theta: Option<f64>,
    /// Per-subset edge probability in (0, 1).
    #[arg(long)]
    q: Option<f64>,
    /// Mean edges per Bernoulli query the design aims for.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Relative half-width of the typicality bands.
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
}

impl ModelArgs {
    fn to_params(&self) -> Result<ModelParams> {
        match (self.theta, self.q) {
            (Some(theta), None) => {
                ModelParams::from_theta(self.n, self.k, theta, self.nu, self.epsilon)
            }
            (None, Some(q)) => ModelParams::from_q(self.n, self.k, q, self.nu, self.epsilon),
            _ => Err(Error::Config(
                "give the edge density as exactly one of --theta or --q".into(),
            )),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Master seed; the instance is the same one trial 0 of a run would see.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also estimate the typicality report from this many probe queries.
    #[arg(long, default_value_t = 0)]
    typicality_samples: usize,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config file; mutually exclusive with all other flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Sparsity exponent in (0, 1); sets q = n^(-k(1-theta)).
    #[arg(long, conflicts_with = "q")]
    theta: Option<f64>,
    /// Per-subset edge probability in (0, 1).
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// comp, dd, sss, or grotesque.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed query count instead of the theorem budget.
    #[arg(long, conflicts_with = "budget_multiplier")]
    budget: Option<usize>,
    /// Theorem budget scaled by this factor.
    #[arg(long)]
    budget_multiplier: Option<f64>,
    /// Worker threads (HYPERLEARN_THREADS overrides).
    #[arg(long)]
    threads: Option<usize>,
    /// Probe queries behind each typicality report; 0 skips the check.
    #[arg(long)]
    typicality_samples: Option<usize>,
    /// Keep atypical instances out of the success-rate denominator.
    #[arg(long)]
    require_typical: bool,
    /// Bundle design failure budget.
    #[arg(long)]
    delta_b: Option<f64>,
    /// Bundle design location-test multiplier.
    #[arg(long)]
    c_loc: Option<f64>,
    /// Node budget for the SSS search.
    #[arg(long)]
    node_cap: Option<u64>,
    /// Dense-batch size above which bundle designs stream.
    #[arg(long)]
    stream_threshold_bytes: Option<usize>,
}

impl ExperimentArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            let others_set = self.n.is_some()
                || self.k.is_some()
                || self.theta.is_some()
                || self.q.is_some()
                || self.nu.is_some()
                || self.epsilon.is_some()
                || self.algorithm.is_some()
                || self.trials.is_some()
                || self.seed.is_some()
                || self.budget.is_some()
                || self.budget_multiplier.is_some()
                || self.threads.is_some()
                || self.typicality_samples.is_some()
                || self.require_typical
                || self.delta_b.is_some()
                || self.c_loc.is_some()
                || self.node_cap.is_some()
                || self.stream_threshold_bytes.is_some();
            if others_set {
                return Err(Error::Config(
                    "--config carries the whole experiment; drop the other flags".into(),
                ));
            }
            let file = std::fs::File::open(path)?;
            let config: ExperimentConfig = serde_json::from_reader(std::io::BufReader::new(file))
                .map_err(|e| {
                    Error::Config(format!("could not parse {}: {e}", path.display()))
                })?;
            config.params.validate()?;
            return Ok(config);
        }

        let model = ModelArgs {
            n: self.n.ok_or_else(|| missing("--n"))?,
            k: self.k.ok_or_else(|| missing("--k"))?,
            theta: self.theta,
            q: self.q,
            nu: self.nu.unwrap_or(1.0),
            epsilon: self.epsilon.unwrap_or(0.25),
        };
        let algorithm = self.algorithm.ok_or_else(|| missing("--algorithm"))?;
        let mut config = ExperimentConfig::new(
            model.to_params()?,
            algorithm,
            self.trials.unwrap_or(100),
            self.seed.unwrap_or(0),
        );
        config.budget = match (self.budget, self.budget_multiplier) {
            (Some(queries), None) => BudgetSpec::Explicit { queries },
            (None, Some(factor)) => BudgetSpec::Multiplier { factor },
            (None, None) => BudgetSpec::Theorem,
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        };
        config.parallelism = self.threads;
        if let Some(s) = self.typicality_samples {
            config.typicality_samples = s;
        }
        config.require_typical = self.require_typical;
        if let Some(d) = self.delta_b {
            config.delta_b = d;
        }
        if let Some(c) = self.c_loc {
            config.c_loc = c;
        }
        if let Some(cap) = self.node_cap {
            config.search_node_cap = cap;
        }
        if let Some(bytes) = self.stream_threshold_bytes {
            config.stream_threshold_bytes = bytes;
        }
        Ok(config)
    }
}

fn missing(flag: &str) -> Error {
    Error::Config(format!("{flag} is required unless --config is given"))
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Budget multipliers to scan.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.25,0.5,1,2,4",
        value_name = "FACTORS"
    )]
    multipliers: Vec<f64>,
    /// Emit the full JSON report instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Bundle design failure budget.
    #[arg(long, default_value_t = 0.1)]
    delta_b: f64,
    /// Bundle design location-test multiplier.
    #[arg(long, default_value_t = 4.0)]
    c_loc: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Regime(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Baseline(args) => baseline(args),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let params = args.model.to_params()?;
    let graph = sample_hypergraph(&params, &mut trial_rng(args.seed, 0, Lane::Instance))?;
    let typicality = if args.typicality_samples > 0 {
        Some(typicality_check(
            &graph,
            &params,
            args.typicality_samples,
            &mut trial_rng(args.seed, 0, Lane::Typicality),
        )?)
    } else {
        None
    };
    let mut doc = serde_json::json!({
        "params": params,
        "seed": args.seed,
        "graph": graph,
    });
    if let Some(report) = typicality {
        doc["typicality"] = serde_json::to_value(report)?;
    }
    emit(args.out.as_ref(), &format!("{:#}\n", doc))
}

fn run(args: ExperimentArgs) -> Result<()> {
    let config = args.build()?;
    for warning in harness::preflight_warnings(&config)? {
        eprintln!("warning: {warning}");
    }
    let report = harness::run_experiment(&config)?;
    emit(None, &format!("{:#}\n", serde_json::to_value(report)?))
}

fn sweep(args: SweepArgs) -> Result<()> {
    let config = args.experiment.build()?;
    for warning in harness::preflight_warnings(&config)? {
        eprintln!("warning: {warning}");
    }
    let report = harness::sweep(&config, &args.multipliers)?;
    if args.json {
        emit(None, &format!("{:#}\n", serde_json::to_value(report)?))
    } else {
        emit(None, &harness::sweep_csv(&report.rows))
    }
}

fn baseline(args: BaselineArgs) -> Result<()> {
    let params = args.model.to_params()?;
    let budget_of = |algo| theorem_budget(algo, &params).ok();
    let bundle = GrotesqueDesignSpec::compute(&params, args.delta_b, args.c_loc)?;
    let doc = serde_json::json!({
        "params": params,
        "baseline_queries": hyperlearn::design::baseline_queries(&params),
        "theorem_budgets": {
            "comp": budget_of(Algorithm::Comp),
            "dd": budget_of(Algorithm::Dd),
            "sss": budget_of(Algorithm::Sss),
        },
        "bundle_design": bundle,
    });
    emit(None, &format!("{:#}\n", doc))
}
