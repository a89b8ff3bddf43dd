//! Monte Carlo comparison of sampling methods.
//!
//! For every `(method, scheme, r)` cell, `B` replications each draw a
//! subsample, solve it, and record `‖β̃_b − β̂_n‖²`. Replication `b` of a cell
//! is seeded from `(master seed, b, cell label, retry)` only, so reports do
//! not depend on thread count or on the order cells are listed in.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundContext, BoundReport};
use crate::error::{Error, Result};
use crate::harness::config::{DataSource, ExperimentConfig, MethodSpec};
use crate::harness::csvio;
use crate::linalg::{self, Dataset};
use crate::par;
use crate::probabilities::{self, ProbMethod, ProbabilityVector};
use crate::sampling::{self, Scheme};
use crate::seed::RngSeed;
use crate::synthesis;

/// Fresh seeds tried after a retryable failure before giving up.
pub const MAX_RETRIES: u64 = 10;

/// One `(method, scheme, r)` cell of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: ProbMethod,
    pub scheme: Scheme,
    pub r: f64,
    pub replications: usize,
    pub failures: usize,
    pub mean_size: f64,
    pub mse: f64,
    pub mse_se: f64,
    /// Fraction of successful replications with `‖β̃ − β̂_n‖ ≤ C·r^{-1/2}`.
    pub coverage: f64,
    /// Fraction of successful replications whose `π` admits `r ≥ r_min(δ)`.
    pub admissible: f64,
    /// Mean weight-stage time per replication, excluding the pilot fit.
    pub d1_ms: f64,
    pub d1_pilot_ms: f64,
    /// Mean subsample-solve time.
    pub d2_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub delta: f64,
    pub records: Vec<Record>,
}

/// `B⁻¹ Σ_b ‖β̃_b − β̂_n‖²`.
pub fn empirical_mse(beta_hats: &[Vec<f64>], beta_full: &[f64]) -> Result<f64> {
    if beta_hats.is_empty() {
        return Err(Error::InvalidArgument("no estimates to average".into()));
    }
    let mut total = 0.0;
    for b in beta_hats {
        if b.len() != beta_full.len() {
            return Err(Error::DimensionMismatch(format!(
                "estimate of length {} vs reference of length {}",
                b.len(),
                beta_full.len()
            )));
        }
        total += squared_distance(b, beta_full);
    }
    Ok(total / beta_hats.len() as f64)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn load_dataset(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Synthetic { spec, seed } => Ok(synthesis::generate_dataset(spec, *seed)?.0),
        DataSource::Csv { path, y_column, header } => csvio::load_csv(path, y_column, *header),
    }
}

/// Load the configured dataset and run every cell.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let data = load_dataset(&config.source)?;
    run_on_dataset(&data, config)
}

/// State shared by all cells of one dataset.
struct Shared<'a> {
    data: &'a Dataset,
    beta_full: Vec<f64>,
    bounds: BoundContext,
}

/// A precomputed distribution and the time it took to build.
struct Fixed {
    pi: ProbabilityVector,
    ms: f64,
}

pub fn run_on_dataset(data: &Dataset, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let full = linalg::solve_full(data)?;
    let spectrum = linalg::gram_extreme_eigenvalues(&data.x);
    let shared = Shared {
        data,
        bounds: BoundContext::with_spectrum(data, &full.beta, spectrum)?,
        beta_full: full.beta,
    };
    let mut records = Vec::new();
    let mut fixed: Vec<(ProbMethod, Fixed)> = Vec::new();
    for method in &config.methods {
        if method.prob != ProbMethod::Gradient && !fixed.iter().any(|(m, _)| *m == method.prob) {
            fixed.push((method.prob, fixed_distribution(&shared, method.prob, config)?));
        }
        for size in &config.sizes {
            let r = size.resolve(data.n());
            let pre = fixed.iter().find(|(m, _)| *m == method.prob).map(|(_, f)| f);
            records.push(run_cell(&shared, config, *method, r, pre)?);
        }
    }
    Ok(ExperimentReport {
        n: data.n(),
        d: data.d(),
        seed: config.seed.0,
        delta: config.delta,
        records,
    })
}

fn fixed_distribution(shared: &Shared<'_>, method: ProbMethod, config: &ExperimentConfig) -> Result<Fixed> {
    let t = Instant::now();
    let x = &shared.data.x;
    let pi = match method {
        ProbMethod::Uniform => probabilities::uniform_probs(x.rows())?,
        ProbMethod::Leverage => probabilities::leverage_probs(x)?,
        ProbMethod::ApproxLeverage => {
            let k = config.sketch_rows.unwrap_or(20 * x.cols()).max(x.cols());
            probabilities::approx_leverage_probs(x, k, config.seed.stream("sketch"))?
        }
        ProbMethod::ResidualOracle => probabilities::residual_oracle_probs(shared.data, &shared.beta_full)?,
        ProbMethod::Gradient => unreachable!("gradient probabilities depend on the replication's pilot"),
    };
    let ms = if method == ProbMethod::Uniform {
        0.0
    } else {
        t.elapsed().as_secs_f64() * 1e3
    };
    Ok(Fixed { pi, ms })
}

struct Outcome {
    sq_err: f64,
    size: usize,
    covered: bool,
    admissible: bool,
    d1_ms: f64,
    pilot_ms: f64,
    d2_ms: f64,
}

fn run_cell(
    shared: &Shared<'_>,
    config: &ExperimentConfig,
    method: MethodSpec,
    r: f64,
    fixed: Option<&Fixed>,
) -> Result<Record> {
    let label = format!("{}:{}:{:016x}", method.prob, method.scheme, r.to_bits());
    let r0 = config.pilot.r0(r);
    // Bounds for a fixed π are evaluated once per cell.
    let fixed_bound = match fixed {
        Some(f) => Some(bound_for(shared, &f.pi, config.delta)?),
        None => None,
    };
    let outcomes: Vec<Option<Outcome>> = par::map_collect(config.replications, |b| {
        let rep_seed = config.seed.derive(b as u64).stream(&label);
        for attempt in 0..=MAX_RETRIES {
            let seed = rep_seed.derive(attempt);
            match replicate(shared, config, method, r, r0, fixed, fixed_bound.as_ref(), seed) {
                Ok(o) => return Some(o),
                Err(e) if e.is_retryable() => continue,
                Err(_) => return None,
            }
        }
        None
    });

    let ok: Vec<&Outcome> = outcomes.iter().flatten().collect();
    let failures = outcomes.len() - ok.len();
    if 2 * failures > outcomes.len() {
        return Err(Error::ExcessiveFailures {
            cell: label,
            failed: failures,
            total: outcomes.len(),
        });
    }
    let m = ok.len() as f64;
    let mean = |f: &dyn Fn(&Outcome) -> f64| ok.iter().map(|o| f(o)).sum::<f64>() / m;
    let mse = mean(&|o| o.sq_err);
    let mse_se = if ok.len() > 1 {
        let var = ok.iter().map(|o| (o.sq_err - mse).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    let d1_ms = match fixed {
        Some(f) => f.ms,
        None => mean(&|o| o.d1_ms),
    };
    Ok(Record {
        method: method.prob,
        scheme: method.scheme,
        r,
        replications: config.replications,
        failures,
        mean_size: mean(&|o| o.size as f64),
        mse,
        mse_se,
        coverage: mean(&|o| f64::from(u8::from(o.covered))),
        admissible: mean(&|o| f64::from(u8::from(o.admissible))),
        d1_ms,
        d1_pilot_ms: mean(&|o| o.pilot_ms),
        d2_ms: mean(&|o| o.d2_ms),
    })
}

fn bound_for(shared: &Shared<'_>, pi: &ProbabilityVector, delta: f64) -> Result<BoundReport> {
    BoundReport::new(shared.bounds.constants(pi)?, delta)
}

#[allow(clippy::too_many_arguments)]
fn replicate(
    shared: &Shared<'_>,
    config: &ExperimentConfig,
    method: MethodSpec,
    r: f64,
    r0: f64,
    fixed: Option<&Fixed>,
    fixed_bound: Option<&BoundReport>,
    seed: RngSeed,
) -> Result<Outcome> {
    let data = shared.data;
    let (mut pilot_ms, mut d1_ms) = (0.0, 0.0);
    let owned;
    let (pi, bound) = match (fixed, fixed_bound) {
        (Some(f), Some(b)) => (&f.pi, *b),
        _ => {
            let t = Instant::now();
            let pilot = sampling::pilot_estimate(data, r0, seed.stream("pilot"))?;
            pilot_ms = t.elapsed().as_secs_f64() * 1e3;
            let t = Instant::now();
            owned = probabilities::gradient_probs(data, &pilot.beta)?;
            d1_ms = t.elapsed().as_secs_f64() * 1e3;
            let b = bound_for(shared, &owned, config.delta)?;
            (&owned, b)
        }
    };
    let draw = sampling::draw(pi, method.scheme, r, config.redistribute, seed.stream("draw"))?;
    let t = Instant::now();
    let sol = linalg::solve_weighted(data, &draw)?;
    let d2_ms = t.elapsed().as_secs_f64() * 1e3;
    let sq_err = squared_distance(&sol.beta, &shared.beta_full);
    Ok(Outcome {
        sq_err,
        size: draw.realized_size(),
        covered: sq_err.sqrt() <= bound.bound_at(r),
        admissible: bound.r_min.admits(r),
        d1_ms,
        pilot_ms,
        d2_ms,
    })
}
