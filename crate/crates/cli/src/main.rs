use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gradlsq::bounds::{self, BoundContext, BoundReport};
use gradlsq::harness::{self, BenchSettings, ColumnRef, ExperimentConfig, ReportFormat};
use gradlsq::linalg::{self, Dataset};
use gradlsq::par;
use gradlsq::probabilities::{self, ProbMethod, ProbabilityVector};
use gradlsq::sampling::{self, Scheme};
use gradlsq::seed::RngSeed;
use gradlsq::synthesis::{self, Misspec, MixtureSpec, Preset, ResponseSpec, SyntheticSpec};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gradlsq", version, about = "Least squares by importance subsampling")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "GRADLSQ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV (columns x1..xd,y).
    Generate(GenerateArgs),
    /// Full-data least squares on a CSV file.
    Solve(DataArgs),
    /// Draw one subsample, solve it, and print the estimate with its bound.
    SampleSolve(SampleArgs),
    /// Run a config file and write the report.
    Experiment(ExperimentArgs),
    /// Time the weight and solve stages across dataset sizes.
    Bench(BenchArgs),
    /// Error-bound constants and the minimum subsample size for one distribution.
    Bound(BoundArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "GA")]
    preset: Preset,
    /// Override the preset's μ.
    #[arg(long)]
    mu: Option<f64>,
    /// Override the preset's θ.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma_x: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma_eps: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// none | heteroscedastic | ar_errors | error_predictor_corr
    #[arg(long, default_value = "none")]
    misspec: String,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV.
    csv: PathBuf,
    /// Response column by name or zero-based index.
    #[arg(long, default_value = "y")]
    y_column: ColumnRef,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        harness::load_csv(&self.csv, &self.y_column, !self.no_header)
            .with_context(|| format!("reading {}", self.csv.display()))
    }
}

#[derive(Args)]
struct ProbArgs {
    /// uniform | leverage | approx_leverage | gradient | residual_oracle
    #[arg(long, default_value = "gradient")]
    method: ProbMethod,
    /// Pilot subsample size for the gradient method (defaults to r).
    #[arg(long)]
    r0: Option<f64>,
    /// Sketch rows for approx_leverage (defaults to 20·d).
    #[arg(long)]
    sketch_rows: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prob: ProbArgs,
    /// Expected subsample size.
    #[arg(long)]
    r: f64,
    #[arg(long, default_value = "poisson")]
    scheme: Scheme,
    /// Spread the mass of capped rows over the rest.
    #[arg(long)]
    redistribute: bool,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prob: ProbArgs,
    /// Evaluate the bound at this subsample size as well.
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Leave the wall-clock columns out.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [100_000usize, 1_000_000])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    d: usize,
    #[arg(long, default_value = "gradient")]
    method: ProbMethod,
    #[arg(long, default_value_t = 1000.0)]
    r: f64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let run = || run(cli.command);
    let result = match threads {
        Some(t) => par::with_threads(t, run),
        None => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.chain().find_map(|c| c.downcast_ref::<gradlsq::Error>()).map_or(2, harness::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => {
            let data = a.load()?;
            print_json(&serde_json::to_value(linalg::solve_full(&data)?)?)
        }
        Command::SampleSolve(a) => sample_solve(a),
        Command::Experiment(a) => experiment(a),
        Command::Bench(a) => bench(a),
        Command::Bound(a) => bound(a),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let (mu, theta) = a.preset.params();
    let mixture = MixtureSpec::new(a.mu.unwrap_or(mu), a.theta.unwrap_or(theta), a.sigma_x)?;
    let misspec = match a.misspec.to_ascii_lowercase().as_str() {
        "none" => Misspec::None,
        "heteroscedastic" => Misspec::Heteroscedastic { rho: a.rho, hidden: mixture },
        "ar_errors" => Misspec::ArErrors { rho: a.rho },
        "error_predictor_corr" => Misspec::ErrorPredictorCorr { rho: a.rho },
        other => return Err(gradlsq::Error::InvalidArgument(format!("unknown misspec `{other}`")).into()),
    };
    let spec = SyntheticSpec {
        n: a.n,
        d: a.d,
        mixture,
        response: ResponseSpec {
            sigma_eps: a.sigma_eps,
            misspec,
        },
    };
    let (data, _) = synthesis::generate_dataset(&spec, RngSeed(a.seed))?;
    match a.out {
        Some(p) => harness::write_csv(&p, &data).with_context(|| format!("writing {}", p.display()))?,
        None => harness::csvio::write_csv_to(io::stdout().lock(), &data)?,
    }
    Ok(())
}

/// The sampling distribution named by `p`; `r` sizes the gradient pilot.
fn probabilities_for(data: &Dataset, p: &ProbArgs, r: f64, beta_full: &[f64]) -> Result<ProbabilityVector> {
    let seed = RngSeed(p.seed);
    Ok(match p.method {
        ProbMethod::Uniform => probabilities::uniform_probs(data.n())?,
        ProbMethod::Leverage => probabilities::leverage_probs(&data.x)?,
        ProbMethod::ApproxLeverage => {
            let k = p.sketch_rows.unwrap_or(20 * data.d()).max(data.d());
            probabilities::approx_leverage_probs(&data.x, k, seed.stream("sketch"))?
        }
        ProbMethod::Gradient => {
            let pilot = sampling::pilot_estimate(data, p.r0.unwrap_or(r), seed.stream("pilot"))?;
            probabilities::gradient_probs(data, &pilot.beta)?
        }
        ProbMethod::ResidualOracle => probabilities::residual_oracle_probs(data, beta_full)?,
    })
}

fn sample_solve(a: SampleArgs) -> Result<()> {
    let data = a.data.load()?;
    let full = linalg::solve_full(&data)?;
    let pi = probabilities_for(&data, &a.prob, a.r, &full.beta)?;
    let report = BoundReport::new(BoundContext::new(&data, &full.beta)?.constants(&pi)?, a.prob.delta)?;
    let draw = sampling::draw(&pi, a.scheme, a.r, a.redistribute, RngSeed(a.prob.seed).stream("draw"))?;
    let sub = linalg::solve_weighted(&data, &draw)?;
    let err = sub.beta.iter().zip(&full.beta).map(|(s, f)| (s - f).powi(2)).sum::<f64>().sqrt();
    print_json(&json!({
        "method": pi.method,
        "scheme": a.scheme,
        "r": a.r,
        "realized_size": draw.realized_size(),
        "beta": sub.beta,
        "error": err,
        "bound": report.bound_at(a.r),
        "within_bound": err <= report.bound_at(a.r),
        "r_min": report.r_min,
    }))
}

fn bound(a: BoundArgs) -> Result<()> {
    let data = a.data.load()?;
    let full = linalg::solve_full(&data)?;
    let r = a.r.unwrap_or(0.05 * data.n() as f64);
    let pi = probabilities_for(&data, &a.prob, r, &full.beta)?;
    let report = bounds::bound_report(&data, &full.beta, &pi, a.prob.delta)?;
    let mut out = json!({
        "method": pi.method,
        "report": report,
        "log_pi_dispersion": harness::probability_dispersion(&pi),
    });
    if let Some(r) = a.r {
        out["r"] = json!(r);
        out["bound_at_r"] = json!(report.bound_at(r));
        out["two_term_bound_at_r"] = json!(bounds::two_term_bound(&report, r));
        out["bernstein_expectation_bound"] = json!(bounds::bernstein_expectation_bound(&report.constants, r));
        out["r_admissible"] = json!(report.r_min.admits(r));
    }
    print_json(&out)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    if let Some(s) = a.seed {
        cfg.seed = RngSeed(s);
    }
    if a.csv.is_some() {
        cfg.output_csv = a.csv;
    }
    if a.json.is_some() {
        cfg.output_json = a.json;
    }
    if a.no_timing {
        cfg.include_timing = false;
    }
    let report = harness::run_experiment(&cfg)?;
    let mut wrote = false;
    if let Some(p) = &cfg.output_csv {
        harness::emit_report(&report, ReportFormat::Csv, p, cfg.include_timing)?;
        wrote = true;
    }
    if let Some(p) = &cfg.output_json {
        harness::emit_report(&report, ReportFormat::Json, p, cfg.include_timing)?;
        wrote = true;
    }
    if !wrote {
        harness::report::write_report(&report, ReportFormat::Csv, io::stdout().lock(), cfg.include_timing)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let settings = BenchSettings {
        d: a.d,
        method: a.method,
        r: a.r,
        repeats: a.repeats,
        seed: RngSeed(a.seed),
    };
    let rows = harness::timing_benchmark(&a.n, &settings)?;
    let mut out = io::stdout().lock();
    writeln!(out, "n,d,method,r,d1_ms,d1_pilot_ms,d2_ms")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{},{}", r.n, r.d, r.method, r.r, r.d1_ms, r.d1_pilot_ms, r.d2_ms)?;
    }
    Ok(())
}
