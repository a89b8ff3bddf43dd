//! Computable constants of the subsample excess-risk bound
//! `‖β̃ − β̂_n‖ ≤ C·r^{-1/2}` and related diagnostics.
//!
//! With full-data residuals `e_i = y_i − x_iᵀβ̂_n`:
//!
//! * `σ_Σ² = n⁻² Σ π_i⁻¹ ‖x_i‖⁴`
//! * `σ_b² = n⁻² Σ π_i⁻¹ ‖x_i‖² e_i²`
//! * `R = max_i ‖x_i‖²`, `λ_min = λ_min(n⁻¹XᵀX)`
//! * `C = 3 λ_min⁻¹ δ⁻¹ σ_b`, valid with probability `1 − δ` once
//!   `r > 2σ_Σ² log d / (δ² (λ_min/2 − R log d/(3nδ))²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, Dataset, DenseMatrix};
use crate::par;
use crate::probabilities::ProbabilityVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub sigma_sq_sigma: f64,
    pub sigma_sq_b: f64,
    /// `max_i ‖x_i‖²`.
    pub r_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum MinSubsampleSize {
    Size(f64),
    Infeasible,
}

impl MinSubsampleSize {
    pub fn value(self) -> Option<f64> {
        match self {
            MinSubsampleSize::Size(v) => Some(v),
            MinSubsampleSize::Infeasible => None,
        }
    }

    /// Whether `r` satisfies the sample-size condition.
    pub fn admits(self, r: f64) -> bool {
        self.value().is_some_and(|m| r >= m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub constants: BoundConstants,
    pub delta: f64,
    /// `3 λ_min⁻¹ δ⁻¹ σ_b`.
    pub c: f64,
    /// `2 λ_min⁻¹ δ⁻¹ σ_b`.
    pub c1: f64,
    /// `2 √(2 log d) λ_min⁻² δ⁻² σ_Σ σ_b`.
    pub c2: f64,
    pub r_min: MinSubsampleSize,
}

impl BoundReport {
    pub fn new(constants: BoundConstants, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
        }
        let k = constants;
        let sigma_b = k.sigma_sq_b.sqrt();
        let log_d = (k.d as f64).ln();
        let c = 3.0 * sigma_b / (k.lambda_min * delta);
        let c1 = 2.0 * sigma_b / (k.lambda_min * delta);
        let c2 = 2.0 * (2.0 * log_d).sqrt() * k.sigma_sq_sigma.sqrt() * sigma_b
            / (k.lambda_min * k.lambda_min * delta * delta);
        Ok(BoundReport {
            constants,
            delta,
            c,
            c1,
            c2,
            r_min: min_subsample_size(&constants, delta),
        })
    }

    /// `C·r^{-1/2}`.
    pub fn bound_at(&self, r: f64) -> f64 {
        error_bound(self, r)
    }
}

/// Per-dataset quantities shared by every sampling distribution: squared
/// row norms, full-data residuals and the Gram spectrum. Evaluating the
/// constants for a new `π` then costs `O(n)`.
#[derive(Debug, Clone)]
pub struct BoundContext {
    sq_norms: Vec<f64>,
    residuals: Vec<f64>,
    lambda_min: f64,
    lambda_max: f64,
    n: usize,
    d: usize,
}

impl BoundContext {
    pub fn new(data: &Dataset, beta_full: &[f64]) -> Result<Self> {
        let (lambda_min, lambda_max) = linalg::gram_extreme_eigenvalues(&data.x);
        Self::with_spectrum(data, beta_full, (lambda_min, lambda_max))
    }

    /// Reuses a known `(λ_min, λ_max)` of `n⁻¹XᵀX`.
    pub fn with_spectrum(data: &Dataset, beta_full: &[f64], spectrum: (f64, f64)) -> Result<Self> {
        let (n, d) = (data.n(), data.d());
        if beta_full.len() != d {
            return Err(Error::DimensionMismatch(format!("{} coefficients for {d} columns", beta_full.len())));
        }
        Ok(BoundContext {
            sq_norms: par::map_collect(n, |i| dot(data.x.row(i), data.x.row(i))),
            residuals: data.residuals(beta_full),
            lambda_min: spectrum.0,
            lambda_max: spectrum.1,
            n,
            d,
        })
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn constants(&self, pi: &ProbabilityVector) -> Result<BoundConstants> {
        let n = self.n;
        if pi.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {n} rows",
                pi.len()
            )));
        }
        let (sq, e) = (&self.sq_norms, &self.residuals);
        if let Some(row) = (0..n).find(|&i| pi.pi[i] <= 0.0 && sq[i] > 0.0) {
            return Err(Error::DivisionByZeroProb { row });
        }
        let inv = |i: usize| if pi.pi[i] > 0.0 { 1.0 / pi.pi[i] } else { 0.0 };
        let n2 = (n as f64) * (n as f64);
        Ok(BoundConstants {
            sigma_sq_sigma: par::sum(n, |i| inv(i) * sq[i] * sq[i]) / n2,
            sigma_sq_b: par::sum(n, |i| inv(i) * sq[i] * e[i] * e[i]) / n2,
            r_max: par::max(n, |i| sq[i]),
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            n,
            d: self.d,
        })
    }
}

/// Theorem constants for sampling distribution `pi`.
pub fn bound_constants(data: &Dataset, beta_full: &[f64], pi: &ProbabilityVector) -> Result<BoundConstants> {
    if pi.len() != data.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {} rows",
            pi.len(),
            data.n()
        )));
    }
    BoundContext::new(data, beta_full)?.constants(pi)
}

/// Convenience: constants plus the derived report.
pub fn bound_report(data: &Dataset, beta_full: &[f64], pi: &ProbabilityVector, delta: f64) -> Result<BoundReport> {
    BoundReport::new(bound_constants(data, beta_full, pi)?, delta)
}

/// Smallest admissible `r`, or `Infeasible` when
/// `δ ≤ 2R log d / (3nλ_min)`. At `d = 1` the condition is vacuous and 0 is
/// returned.
pub fn min_subsample_size(k: &BoundConstants, delta: f64) -> MinSubsampleSize {
    if k.d <= 1 {
        return MinSubsampleSize::Size(0.0);
    }
    let log_d = (k.d as f64).ln();
    let inner = 0.5 * k.lambda_min - k.r_max * log_d / (3.0 * k.n as f64 * delta);
    if !(inner > 0.0) {
        return MinSubsampleSize::Infeasible;
    }
    MinSubsampleSize::Size(2.0 * k.sigma_sq_sigma * log_d / (delta * delta * inner * inner))
}

pub fn error_bound(report: &BoundReport, r: f64) -> f64 {
    report.c / r.sqrt()
}

/// `C₁ r^{-1/2} + C₂ r^{-1}`, the sharper form before the `3/2` absorption.
pub fn two_term_bound(report: &BoundReport, r: f64) -> f64 {
    report.c1 / r.sqrt() + report.c2 / r
}

/// Upper bound on `E λ_max(Σ_n − Σ_s)`:
/// `r^{-1/2} σ_Σ √(2 log d) + R log d / (3n)`. Zero at `d = 1`.
pub fn bernstein_expectation_bound(k: &BoundConstants, r: f64) -> f64 {
    if k.d <= 1 {
        return 0.0;
    }
    let log_d = (k.d as f64).ln();
    k.sigma_sq_sigma.sqrt() * (2.0 * log_d).sqrt() / r.sqrt() + k.r_max * log_d / (3.0 * k.n as f64)
}

/// Prediction-side quantities: the observed `‖X(β̃ − β̂_n)‖ / n` and the
/// stated right-hand side `C r^{-1/2} λ_max^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRisk {
    pub observed: f64,
    pub stated_bound: f64,
}

pub fn prediction_risk(x: &DenseMatrix, beta_sub: &[f64], beta_full: &[f64], report: &BoundReport, r: f64) -> PredictionRisk {
    let diff: Vec<f64> = beta_sub.iter().zip(beta_full).map(|(a, b)| a - b).collect();
    let n = x.rows();
    let sq = par::sum(n, |i| {
        let v = dot(x.row(i), &diff);
        v * v
    });
    PredictionRisk {
        observed: sq.sqrt() / n as f64,
        stated_bound: error_bound(report, r) * report.constants.lambda_max.sqrt(),
    }
}

/// Gap between the bound constant under pilot-based gradient probabilities
/// and its minimum, attained at the residual-oracle distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryGap {
    /// `σ_b²(π⁰) = (n⁻¹Σ|ẽ_i|‖x_i‖)(n⁻¹Σ‖x_i‖e_i²/|ẽ_i|)`; may be `+∞`.
    pub sigma_sq_b_pilot: f64,
    /// `σ_b²(π^e) = (n⁻¹Σ‖e_i x_i‖)²`.
    pub sigma_sq_b_oracle: f64,
    pub c_pilot: f64,
    pub c_oracle: f64,
    pub gap: f64,
}

pub fn corollary_gap(data: &Dataset, beta_full: &[f64], beta0: &[f64], delta: f64) -> Result<CorollaryGap> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    let n = data.n();
    let nf = n as f64;
    let e = data.residuals(beta_full);
    let e0 = data.residuals(beta0);
    let norms = par::map_collect(n, |i| linalg::norm(data.x.row(i)));
    let oracle_mass = par::sum(n, |i| norms[i] * e[i].abs());
    if !(oracle_mass > 0.0) {
        return Err(Error::DegenerateGradients);
    }
    let pilot_mass = par::sum(n, |i| norms[i] * e0[i].abs());
    if !(pilot_mass > 0.0) {
        return Err(Error::DegenerateGradients);
    }
    // ‖x_i‖ e_i² / |ẽ_i| written as ‖x_i‖|e_i|·(|e_i|/|ẽ_i|) so that ẽ = e
    // reproduces the oracle sum bit for bit.
    let ratio_sum = par::sum(n, |i| {
        let a = norms[i] * e[i].abs();
        if a == 0.0 {
            0.0
        } else if e0[i] == 0.0 {
            f64::INFINITY
        } else {
            a * (e[i].abs() / e0[i].abs())
        }
    });
    let sigma_sq_b_pilot = (pilot_mass / nf) * (ratio_sum / nf);
    let sigma_sq_b_oracle = (oracle_mass / nf) * (oracle_mass / nf);
    let lambda_min = linalg::gram_min_eigenvalue(&data.x);
    let scale = 3.0 / (lambda_min * delta);
    let c_pilot = scale * sigma_sq_b_pilot.sqrt();
    let c_oracle = scale * sigma_sq_b_oracle.sqrt();
    Ok(CorollaryGap {
        sigma_sq_b_pilot,
        sigma_sq_b_oracle,
        c_pilot,
        c_oracle,
        gap: c_pilot - c_oracle,
    })
}
