use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use softplus_penalty::error_prediction::prediction_grid;
use softplus_penalty::harness::{
    self, convergence_trace, default_alpha_grid, default_sigma_grid, run_sample, run_suite,
    ExperimentConfig, PenaltyConfig, SigmaChoice,
};
use softplus_penalty::problems::{
    make_problem, parse_problem_file, write_problem_file, GeneratorOptions, GradientDistribution, ProblemFamily,
};
use softplus_penalty::OptimOptions;

#[derive(Parser)]
#[command(name = "spbench", version, about = "Benchmarks for smooth penalty functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch and write per-sample records plus a median summary.
    Bench(BenchArgs),
    /// Median error for each config over a list of sigma values.
    SweepSigma(SweepArgs),
    /// Median error for each smooth config over a list of alpha values.
    SweepAlpha(SweepArgs),
    /// BFGS iterates on the two-constraint corner problem.
    Trace(TraceArgs),
    /// Predicted and oracle stationary errors over a grid of grad/sigma ratios.
    Predict(PredictArgs),
    /// Write a generated problem to a plain-text file.
    Problem(ProblemArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum ProblemArg {
    Hyperplanes,
    Hypersphere,
}

impl From<ProblemArg> for ProblemFamily {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Hyperplanes => ProblemFamily::ShearedHyperplanes,
            ProblemArg::Hypersphere => ProblemFamily::Hypersphere,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum GradientDistArg {
    Uniform,
    LogUniform,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long, value_enum, default_value = "hyperplanes")]
    problem: ProblemArg,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,8,12,20,32,50")]
    dims: Vec<usize>,
    /// Comma-separated penalty configs; all four when omitted.
    #[arg(long, value_delimiter = ',')]
    config: Vec<PenaltyConfig>,
    #[arg(long, default_value_t = 3e-5)]
    alpha: f64,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Distribution of the objective-gradient magnitude on [0.01, 5].
    #[arg(long, value_enum, default_value = "uniform")]
    gradient_dist: GradientDistArg,
}

impl BatchArgs {
    fn experiment(&self, sigma: SigmaChoice) -> ExperimentConfig {
        let generator = GeneratorOptions {
            gradient_distribution: match self.gradient_dist {
                GradientDistArg::Uniform => GradientDistribution::Uniform,
                GradientDistArg::LogUniform => GradientDistribution::LogUniform,
            },
            ..GeneratorOptions::default()
        };
        ExperimentConfig {
            problem_family: self.problem.into(),
            dimensions: self.dims.clone(),
            penalty_configs: if self.config.is_empty() { PenaltyConfig::ALL.to_vec() } else { self.config.clone() },
            sigma,
            alpha: self.alpha,
            samples: self.samples,
            base_seed: self.seed,
            optimizer: OptimOptions::default(),
            generator,
            workers: self.workers,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    batch: BatchArgs,
    /// A number, `default` (15, or 1e4 for cb) or `twice-grad`.
    #[arg(long, default_value = "default")]
    sigma: String,
    /// Records CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary CSV; printed to stderr when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Solve a single problem read from a problem file instead of generating a batch.
    #[arg(long, conflicts_with_all = ["dims", "samples"])]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    batch: BatchArgs,
    /// Fixed sigma for an alpha sweep.
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma-separated sigma values (sigma sweep).
    #[arg(long, value_delimiter = ',')]
    sigmas: Vec<f64>,
    /// Comma-separated alpha values (alpha sweep).
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, default_value = "alg-norm")]
    config: PenaltyConfig,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Start point `u1,u2`.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
    start: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_delimiter = ',', default_value = "1e-5,1e-3,0.1")]
    alphas: Vec<f64>,
    /// Comma-separated grad/sigma ratios; 0.05..0.95 in steps of 0.05 when omitted.
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "hyperplanes")]
    problem: ProblemArg,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_sigma(s: &str) -> Result<SigmaChoice> {
    Ok(match s {
        "default" => SigmaChoice::Default,
        "twice-grad" => SigmaChoice::TwiceGradient,
        _ => SigmaChoice::Fixed(s.parse().with_context(|| format!("invalid sigma `{s}`"))?),
    })
}

fn bench(args: BenchArgs) -> Result<()> {
    let config = args.batch.experiment(parse_sigma(&args.sigma)?);
    if let Some(path) = &args.replay {
        config.validate()?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let problem = parse_problem_file::<f64>(&text)?;
        let records = config
            .penalty_configs
            .iter()
            .map(|&pc| run_sample(&problem, pc, &config))
            .collect::<Result<Vec<_>, _>>()?;
        harness::write_records(output(&args.out)?, &records)?;
        return Ok(());
    }
    let suite = run_suite(&config)?;
    harness::write_records(output(&args.out)?, &suite.records)?;
    match &args.summary {
        Some(p) => harness::write_summary(output(&Some(p.clone()))?, &suite.summary)?,
        None => harness::write_summary(io::stderr().lock(), &suite.summary)?,
    }
    Ok(())
}

fn sweep_sigma(args: SweepArgs) -> Result<()> {
    if !args.alphas.is_empty() {
        bail!("--alphas belongs to sweep-alpha");
    }
    let sigmas = if args.sigmas.is_empty() { default_sigma_grid() } else { args.sigmas.clone() };
    let config = args.batch.experiment(SigmaChoice::Default);
    let points = harness::sweep_sigma(&config, &sigmas)?;
    harness::write_sweep(output(&args.out)?, &points)?;
    Ok(())
}

fn sweep_alpha(args: SweepArgs) -> Result<()> {
    if !args.sigmas.is_empty() {
        bail!("--sigmas belongs to sweep-sigma");
    }
    let alphas = if args.alphas.is_empty() { default_alpha_grid() } else { args.alphas.clone() };
    let sigma = args.sigma.map_or(SigmaChoice::Default, SigmaChoice::Fixed);
    let config = args.batch.experiment(sigma);
    let points = harness::sweep_alpha(&config, &alphas)?;
    harness::write_sweep(output(&args.out)?, &points)?;
    Ok(())
}

fn trace(args: TraceArgs) -> Result<()> {
    let &[u1, u2] = args.start.as_slice() else {
        bail!("--start takes exactly two values, got {}", args.start.len());
    };
    let path = convergence_trace(args.config, args.alpha, args.sigma, [u1, u2], &OptimOptions::default())?;
    harness::write_trace(output(&args.out)?, &path)?;
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    if args.sigma.is_nan() || args.sigma <= 0.0 || args.alphas.iter().any(|a| a.is_nan() || *a <= 0.0) {
        bail!("sigma and alpha values must be positive");
    }
    let ratios = if args.ratios.is_empty() {
        (1..20).map(|i| i as f64 * 0.05).collect()
    } else {
        args.ratios.clone()
    };
    if ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        bail!("ratios must lie in (0, 1)");
    }
    harness::write_predictions(output(&args.out)?, &prediction_grid(args.sigma, &args.alphas, &ratios))?;
    Ok(())
}

fn problem(args: ProblemArgs) -> Result<()> {
    let p = make_problem::<f64>(args.problem.into(), args.dim, args.seed, &GeneratorOptions::default())?;
    output(&args.out)?.write_all(write_problem_file(&p).as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::SweepSigma(a) => sweep_sigma(a),
        Command::SweepAlpha(a) => sweep_alpha(a),
        Command::Trace(a) => trace(a),
        Command::Predict(a) => predict(a),
        Command::Problem(a) => problem(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
