//! Sampling distributions over rows and their conversion to per-row
//! inclusion probabilities.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, Dataset, DenseMatrix};
use crate::par;
use crate::seed::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbMethod {
    Uniform,
    Leverage,
    ApproxLeverage,
    Gradient,
    ResidualOracle,
}

impl ProbMethod {
    pub const ALL: [ProbMethod; 5] = [
        ProbMethod::Uniform,
        ProbMethod::Leverage,
        ProbMethod::ApproxLeverage,
        ProbMethod::Gradient,
        ProbMethod::ResidualOracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProbMethod::Uniform => "uniform",
            ProbMethod::Leverage => "leverage",
            ProbMethod::ApproxLeverage => "approx_leverage",
            ProbMethod::Gradient => "gradient",
            ProbMethod::ResidualOracle => "residual_oracle",
        }
    }
}

impl fmt::Display for ProbMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProbMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "unif" => Ok(ProbMethod::Uniform),
            "leverage" | "lev" => Ok(ProbMethod::Leverage),
            "approx_leverage" | "approx-leverage" | "alev" => Ok(ProbMethod::ApproxLeverage),
            "gradient" | "grad" => Ok(ProbMethod::Gradient),
            "residual_oracle" | "residual-oracle" | "oracle" => Ok(ProbMethod::ResidualOracle),
            other => Err(Error::InvalidArgument(format!("unknown probability method `{other}`"))),
        }
    }
}

/// A distribution `π` over the `n` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    pub pi: Vec<f64>,
    pub method: ProbMethod,
}

impl ProbabilityVector {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Normalizes nonnegative scores. `zero_sum` is returned when they sum to 0.
    fn from_scores(scores: Vec<f64>, method: ProbMethod, zero_sum: Error) -> Result<Self> {
        let total = par::sum(scores.len(), |i| scores[i]);
        if !(total > 0.0) || !total.is_finite() {
            return Err(zero_sum);
        }
        let pi = scores.into_iter().map(|s| s / total).collect();
        Ok(ProbabilityVector { pi, method })
    }
}

/// Per-row Bernoulli inclusion probabilities `p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionProbabilities {
    pub p: Vec<f64>,
    pub expected_size: f64,
    /// Rows whose inclusion probability was capped at 1.
    pub capped_indices: Vec<usize>,
}

pub fn uniform_probs(n: usize) -> Result<ProbabilityVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("uniform distribution over zero rows".into()));
    }
    Ok(ProbabilityVector {
        pi: vec![1.0 / n as f64; n],
        method: ProbMethod::Uniform,
    })
}

/// Exact statistical leverage: `π_i = h_i / d` with `h_i = x_iᵀ(XᵀX)⁻¹x_i`.
pub fn leverage_probs(x: &DenseMatrix) -> Result<ProbabilityVector> {
    let r = linalg::r_factor(x)?;
    let h = leverage_scores_with_factor(x, &r)?;
    let d = x.cols() as f64;
    Ok(ProbabilityVector {
        pi: h.into_iter().map(|v| v / d).collect(),
        method: ProbMethod::Leverage,
    })
}

/// Raw leverage scores `h_i` (they sum to `d`).
pub fn leverage_scores(x: &DenseMatrix) -> Result<Vec<f64>> {
    let r = linalg::r_factor(x)?;
    leverage_scores_with_factor(x, &r)
}

/// Leverage scores approximated through a Gaussian sketch `S·X` with
/// `sketch_rows` rows: `π_i ∝ ‖x_iᵀ R⁻¹‖²` where `S·X = Q·R`.
pub fn approx_leverage_probs(x: &DenseMatrix, sketch_rows: usize, seed: RngSeed) -> Result<ProbabilityVector> {
    if sketch_rows < x.cols() {
        return Err(Error::InvalidArgument(format!(
            "sketch_rows {sketch_rows} smaller than column count {}",
            x.cols()
        )));
    }
    let sketch = gaussian_sketch(x, sketch_rows, seed);
    approx_leverage_from_sketch(x, &sketch)
}

/// Approximate leverage from a caller-supplied sketched design `S·X`.
pub fn approx_leverage_from_sketch(x: &DenseMatrix, sketched: &DenseMatrix) -> Result<ProbabilityVector> {
    if sketched.cols() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sketch has {} columns, design has {}",
            sketched.cols(),
            x.cols()
        )));
    }
    let r = linalg::r_factor(sketched)?;
    let scores = leverage_scores_with_factor(x, &r)?;
    ProbabilityVector::from_scores(scores, ProbMethod::ApproxLeverage, Error::SingularGram {
        min_eigenvalue: 0.0,
        max_eigenvalue: 0.0,
    })
}

/// `S·X` for a dense `k × n` matrix `S` of i.i.d. `N(0, 1/k)` entries. `S` is
/// never materialized; its columns are regenerated per row chunk.
pub fn gaussian_sketch(x: &DenseMatrix, k: usize, seed: RngSeed) -> DenseMatrix {
    let (n, d) = (x.rows(), x.cols());
    let chunks = n.div_ceil(par::CHUNK);
    let scale = 1.0 / (k as f64).sqrt();
    let partials = par::map_collect(chunks, |c| {
        let mut rng = seed.derive(c as u64).rng();
        let mut acc = vec![0.0; k * d];
        let mut s = vec![0.0; k];
        for i in c * par::CHUNK..((c + 1) * par::CHUNK).min(n) {
            for v in s.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = z * scale;
            }
            let row = x.row(i);
            for (a, sa) in s.iter().enumerate() {
                let out = &mut acc[a * d..(a + 1) * d];
                for (o, xv) in out.iter_mut().zip(row) {
                    *o += sa * xv;
                }
            }
        }
        acc
    });
    let mut total = vec![0.0; k * d];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    DenseMatrix::new(k, d, total).expect("sketch of finite data is finite")
}

/// `‖x_iᵀ R⁻¹‖²` for every row.
fn leverage_scores_with_factor(x: &DenseMatrix, r: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = x.cols();
    let r = r.view((0, 0), (d, d)).into_owned();
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or(Error::SingularGram {
            min_eigenvalue: 0.0,
            max_eigenvalue: 0.0,
        })?;
    // Column j of R⁻¹ is nonzero only in rows 0..=j; store those prefixes.
    let cols: Vec<Vec<f64>> = (0..d).map(|j| (0..=j).map(|k| rinv[(k, j)]).collect()).collect();
    Ok(par::map_collect(x.rows(), |i| {
        let row = x.row(i);
        cols.iter()
            .map(|c| {
                let s = dot(&row[..c.len()], c);
                s * s
            })
            .sum()
    }))
}

/// Gradient-based probabilities from a pilot `β₀`:
/// `π_i ∝ ‖x_i‖·|y_i − x_iᵀβ₀|`.
pub fn gradient_probs(data: &Dataset, beta0: &[f64]) -> Result<ProbabilityVector> {
    if beta0.len() != data.d() {
        return Err(Error::DimensionMismatch(format!(
            "pilot has {} coefficients, design has {} columns",
            beta0.len(),
            data.d()
        )));
    }
    let scores = gradient_norms(data, beta0);
    ProbabilityVector::from_scores(scores, ProbMethod::Gradient, Error::DegenerateGradients)
}

/// Residual-oracle probabilities `π_i^e ∝ ‖e_i x_i‖` with full-data residuals.
/// Same arithmetic as [`gradient_probs`] evaluated at `β̂_n`.
pub fn residual_oracle_probs(data: &Dataset, beta_full: &[f64]) -> Result<ProbabilityVector> {
    let mut pv = gradient_probs(data, beta_full)?;
    pv.method = ProbMethod::ResidualOracle;
    Ok(pv)
}

/// `‖g_i‖ = ‖x_i‖·|y_i − x_iᵀβ|`.
pub fn gradient_norms(data: &Dataset, beta: &[f64]) -> Vec<f64> {
    par::map_collect(data.n(), |i| {
        let row = data.x.row(i);
        norm(row) * (data.y[i] - dot(row, beta)).abs()
    })
}

/// Inclusion probabilities at expected size `r`.
///
/// Without `redistribute`, `p_i = min(1, r·π_i)`. With it, capped rows are
/// fixed at 1 and the remaining rows are rescaled until `Σp_i = min(r, n)`.
pub fn to_inclusion(pi: &ProbabilityVector, r: f64, redistribute: bool) -> Result<InclusionProbabilities> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("expected subsample size {r} must be positive")));
    }
    let n = pi.len();
    let (p, capped_indices) = if redistribute {
        redistribute_capped(&pi.pi, r.min(n as f64))
    } else {
        let p: Vec<f64> = pi.pi.iter().map(|&v| (r * v).min(1.0)).collect();
        let capped = (0..n).filter(|&i| r * pi.pi[i] >= 1.0).collect();
        (p, capped)
    };
    let expected_size = par::sum(n, |i| p[i]);
    Ok(InclusionProbabilities {
        p,
        expected_size,
        capped_indices,
    })
}

fn redistribute_capped(pi: &[f64], target: f64) -> (Vec<f64>, Vec<usize>) {
    let n = pi.len();
    let mut capped = vec![false; n];
    let mut n_capped = 0usize;
    loop {
        let free_mass = par::sum(n, |i| if capped[i] { 0.0 } else { pi[i] });
        let budget = target - n_capped as f64;
        if !(free_mass > 0.0) || budget <= 0.0 {
            break;
        }
        let scale = budget / free_mass;
        let newly: Vec<usize> = (0..n).filter(|&i| !capped[i] && pi[i] * scale >= 1.0).collect();
        if newly.is_empty() {
            let p = (0..n).map(|i| if capped[i] { 1.0 } else { pi[i] * scale }).collect();
            return (p, (0..n).filter(|&i| capped[i]).collect());
        }
        for i in newly {
            capped[i] = true;
            n_capped += 1;
        }
    }
    let p = (0..n).map(|i| if capped[i] { 1.0 } else { 0.0 }).collect();
    (p, (0..n).filter(|&i| capped[i]).collect())
}
