//! Spread of a sampling distribution on the log scale.

use serde::{Deserialize, Serialize};

use crate::probabilities::ProbabilityVector;

/// Five-number summary and variance of `log π` over the strictly positive
/// entries. Zero entries are skipped and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Population variance (divisor = number of positive entries).
    pub variance: f64,
    pub zero_count: usize,
}

/// Quantiles use linear interpolation between order statistics. If every
/// entry is zero all fields except `zero_count` are NaN.
pub fn probability_dispersion(pi: &ProbabilityVector) -> Dispersion {
    let mut logs: Vec<f64> = pi.pi.iter().filter(|&&p| p > 0.0).map(|p| p.ln()).collect();
    let zero_count = pi.pi.len() - logs.len();
    if logs.is_empty() {
        return Dispersion {
            min: f64::NAN,
            q1: f64::NAN,
            median: f64::NAN,
            q3: f64::NAN,
            max: f64::NAN,
            variance: f64::NAN,
            zero_count,
        };
    }
    logs.sort_by(f64::total_cmp);
    let m = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / m;
    let variance = logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    Dispersion {
        min: logs[0],
        q1: quantile(&logs, 0.25),
        median: quantile(&logs, 0.5),
        q3: quantile(&logs, 0.75),
        max: logs[logs.len() - 1],
        variance,
        zero_count,
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
