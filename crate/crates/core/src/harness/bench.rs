//! Stage timings as `n` grows.
//!
//! Each `n` gets a fresh GA design. Weight-stage (D1) and solve-stage (D2)
//! times are the best of `repeats` runs, all on a single thread so the
//! numbers are not polluted by scheduler contention.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::par;
use crate::probabilities::{self, ProbMethod, ProbabilityVector};
use crate::sampling::{self, Scheme};
use crate::seed::RngSeed;
use crate::synthesis::{self, Preset, ResponseSpec, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub d: usize,
    pub method: ProbMethod,
    pub r: f64,
    /// Weight computation. Zero for uniform, which needs none.
    pub d1_ms: f64,
    /// Pilot fit feeding the gradient weights; zero otherwise.
    pub d1_pilot_ms: f64,
    pub d2_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    pub d: usize,
    pub method: ProbMethod,
    /// Subsample size, shared by the pilot of the gradient method.
    pub r: f64,
    pub repeats: usize,
    pub seed: RngSeed,
}

pub fn timing_benchmark(n_values: &[usize], settings: &BenchSettings) -> Result<Vec<TimingRow>> {
    if n_values.len() < 2 {
        return Err(Error::InvalidArgument("timing benchmark needs at least two n values".into()));
    }
    par::with_threads(1, || n_values.iter().map(|&n| time_one(n, settings)).collect())
}

fn best_of<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        let v = f()?;
        best = best.min(t.elapsed().as_secs_f64() * 1e3);
        out = Some(v);
    }
    Ok((out.expect("at least one run"), best))
}

fn time_one(n: usize, s: &BenchSettings) -> Result<TimingRow> {
    let spec = SyntheticSpec {
        n,
        d: s.d,
        mixture: Preset::Ga.spec(1.0),
        response: ResponseSpec::default(),
    };
    let seed = s.seed.derive(n as u64);
    let (data, _) = synthesis::generate_dataset(&spec, seed.stream("data"))?;
    let x = &data.x;
    let mut pilot_ms = 0.0;
    let (pi, d1_ms): (ProbabilityVector, f64) = match s.method {
        ProbMethod::Uniform => (probabilities::uniform_probs(n)?, 0.0),
        ProbMethod::Leverage => best_of(s.repeats, || probabilities::leverage_probs(x))?,
        ProbMethod::ApproxLeverage => best_of(s.repeats, || {
            probabilities::approx_leverage_probs(x, 20 * s.d, seed.stream("sketch"))
        })?,
        ProbMethod::Gradient => {
            let (pilot, ms) = best_of(s.repeats, || sampling::pilot_estimate(&data, s.r, seed.stream("pilot")))?;
            pilot_ms = ms;
            best_of(s.repeats, || probabilities::gradient_probs(&data, &pilot.beta))?
        }
        ProbMethod::ResidualOracle => {
            let full = linalg::solve_full(&data)?;
            best_of(s.repeats, || probabilities::residual_oracle_probs(&data, &full.beta))?
        }
    };
    let draw = sampling::draw(&pi, Scheme::Poisson, s.r, false, seed.stream("draw"))?;
    let (_, d2_ms) = best_of(s.repeats, || linalg::solve_weighted(&data, &draw))?;
    Ok(TimingRow {
        n,
        d: s.d,
        method: s.method,
        r: s.r,
        d1_ms,
        d1_pilot_ms: pilot_ms,
        d2_ms,
    })
}
