//! Dense storage and the full-data / weighted-subsample least-squares solvers.
//!
//! Both solvers factor the (row-weighted) design augmented with the response
//! column, `[√w·X | √w·y] = Q·R`, so `β = R₁₁⁻¹ R₁₂`. Tall inputs are factored
//! block by block and the per-block triangles are merged by further QR
//! steps; the block partition is fixed, so the result does not depend on the
//! number of threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::sampling::SubsampleDraw;

/// Eigenvalue ratio below which a Gram matrix is declared singular.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if cols > 0 {
            if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: pos / cols,
                    col: pos % cols,
                });
            }
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Copy with column `j` multiplied by `c`.
    pub fn with_column_scaled(&self, j: usize, c: f64) -> Result<Self> {
        let mut data = self.data.clone();
        for row in data.chunks_mut(self.cols) {
            row[j] *= c;
        }
        Self::new(self.rows, self.cols, data)
    }

    /// Copy containing the listed rows in the listed order.
    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// `X·v` for a length-`cols` vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        par::map_collect(self.rows, |i| dot(self.row(i), v))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Design matrix plus response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch(format!(
                "response has {} entries, design has {} rows",
                y.len(),
                x.rows()
            )));
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::DimensionMismatch("empty design matrix".into()));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col: x.cols() });
        }
        Ok(Dataset { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// `y_i − x_iᵀβ` for every row.
    pub fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        par::map_collect(self.n(), |i| self.y[i] - dot(self.x.row(i), beta))
    }
}

/// Coefficients of a least-squares fit and solve diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsSolution {
    pub beta: Vec<f64>,
    /// Smallest eigenvalue of the (weighted) Gram matrix scaled by `1/n`.
    pub gram_min_eigenvalue: f64,
    /// `‖√W(y − Xβ)‖` over the rows used in the solve.
    pub residual_norm: f64,
    pub effective_sample_size: usize,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Full-sample least squares `β̂_n = Σ_n⁻¹ b_n`.
pub fn solve_full(data: &Dataset) -> Result<LsSolution> {
    let (n, d) = (data.n(), data.d());
    let r_aug = tall_r_factor(n, d + 1, |i, out| {
        out[..d].copy_from_slice(data.x.row(i));
        out[d] = data.y[i];
    });
    let (beta, min_eig) = back_substitute(&r_aug, d, n)?;
    let residual_norm = par::sum(n, |i| {
        let e = data.y[i] - dot(data.x.row(i), &beta);
        e * e
    })
    .sqrt();
    Ok(LsSolution {
        beta,
        gram_min_eigenvalue: min_eig,
        residual_norm,
        effective_sample_size: n,
    })
}

/// Weighted subsample least squares: minimizes `Σ_{i∈S} w_i (y_i − x_iᵀβ)²`,
/// i.e. `β̃ = Σ_s⁻¹ b_s` with `Σ_s = n⁻¹ X_sᵀ W X_s`.
pub fn solve_weighted(data: &Dataset, draw: &SubsampleDraw) -> Result<LsSolution> {
    let (n, d) = (data.n(), data.d());
    let m = draw.indices.len();
    if m == 0 {
        return Err(Error::EmptyDraw);
    }
    if draw.weights.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{m} indices but {} weights",
            draw.weights.len()
        )));
    }
    if let Some(&bad) = draw.indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!("row index {bad} out of range 0..{n}")));
    }
    if let Some(w) = draw.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument(format!("weight {w} is not strictly positive")));
    }
    let sqrt_w: Vec<f64> = draw.weights.iter().map(|w| w.sqrt()).collect();
    let r_aug = tall_r_factor(m, d + 1, |k, out| {
        let i = draw.indices[k];
        let s = sqrt_w[k];
        for (o, v) in out[..d].iter_mut().zip(data.x.row(i)) {
            *o = s * v;
        }
        out[d] = s * data.y[i];
    });
    let (beta, min_eig) = back_substitute(&r_aug, d, n)?;
    let residual_norm = draw
        .indices
        .iter()
        .zip(&draw.weights)
        .map(|(&i, w)| {
            let e = data.y[i] - dot(data.x.row(i), &beta);
            w * e * e
        })
        .sum::<f64>()
        .sqrt();
    Ok(LsSolution {
        beta,
        gram_min_eigenvalue: min_eig,
        residual_norm,
        effective_sample_size: m,
    })
}

/// Smallest eigenvalue of `n⁻¹XᵀX`.
pub fn gram_min_eigenvalue(x: &DenseMatrix) -> f64 {
    gram_extreme_eigenvalues(x).0
}

/// `(λ_min, λ_max)` of `n⁻¹XᵀX`, from the singular values of the R factor.
pub fn gram_extreme_eigenvalues(x: &DenseMatrix) -> (f64, f64) {
    let (n, d) = (x.rows(), x.cols());
    let r = tall_r_factor(n, d, |i, out| out.copy_from_slice(x.row(i)));
    let sv = r.singular_values();
    let scale = 1.0 / n as f64;
    let max = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let min = if r.nrows() < d {
        0.0
    } else {
        sv.iter().fold(f64::INFINITY, |a, &s| a.min(s))
    };
    (min * min * scale, max * max * scale)
}

/// Upper-triangular `R` (d×d) with `XᵀX = RᵀR`; errors if `XᵀX` is singular.
pub fn r_factor(x: &DenseMatrix) -> Result<DMatrix<f64>> {
    let (n, d) = (x.rows(), x.cols());
    let r = tall_r_factor(n, d, |i, out| out.copy_from_slice(x.row(i)));
    check_conditioning(&r, d, n)?;
    Ok(r)
}

/// `Σ_n = n⁻¹XᵀX` formed explicitly.
pub fn gram(x: &DenseMatrix) -> DMatrix<f64> {
    let (n, d) = (x.rows(), x.cols());
    let chunks = n.div_ceil(par::CHUNK);
    let partials = par::map_collect(chunks, |c| {
        let mut g = DMatrix::<f64>::zeros(d, d);
        for i in c * par::CHUNK..((c + 1) * par::CHUNK).min(n) {
            add_outer(&mut g, x.row(i), 1.0);
        }
        g
    });
    let mut g = DMatrix::<f64>::zeros(d, d);
    for p in partials {
        g += p;
    }
    g / n as f64
}

/// `Σ_s = n⁻¹ Σ_{k} w_k x_{i_k} x_{i_k}ᵀ` for a draw.
pub fn subsample_gram(x: &DenseMatrix, draw: &SubsampleDraw) -> DMatrix<f64> {
    let d = x.cols();
    let mut g = DMatrix::<f64>::zeros(d, d);
    for (&i, &w) in draw.indices.iter().zip(&draw.weights) {
        add_outer(&mut g, x.row(i), w);
    }
    g / x.rows() as f64
}

/// `b_s = n⁻¹ Σ_k w_k x_{i_k} y_{i_k}`.
pub fn subsample_moment(data: &Dataset, draw: &SubsampleDraw) -> DVector<f64> {
    let d = data.d();
    let mut b = DVector::<f64>::zeros(d);
    for (&i, &w) in draw.indices.iter().zip(&draw.weights) {
        for (j, v) in data.x.row(i).iter().enumerate() {
            b[j] += w * v * data.y[i];
        }
    }
    b / data.n() as f64
}

fn add_outer(g: &mut DMatrix<f64>, v: &[f64], w: f64) {
    let d = v.len();
    for a in 0..d {
        let wa = w * v[a];
        for b in a..d {
            g[(a, b)] += wa * v[b];
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
}

const MERGE_GROUP: usize = 8;

/// R factor of the `nrows × ncols` matrix whose rows `fill` writes. Returns
/// `min(nrows, ncols) × ncols`.
pub(crate) fn tall_r_factor<F>(nrows: usize, ncols: usize, fill: F) -> DMatrix<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let block = (8 * ncols).max(512);
    let nblocks = nrows.div_ceil(block);
    let mut factors = par::map_collect(nblocks, |b| {
        let lo = b * block;
        let hi = (lo + block).min(nrows);
        let mut m = DMatrix::<f64>::zeros(hi - lo, ncols);
        let mut buf = vec![0.0; ncols];
        for i in lo..hi {
            fill(i, &mut buf);
            for (j, v) in buf.iter().enumerate() {
                m[(i - lo, j)] = *v;
            }
        }
        upper_factor(m)
    });
    while factors.len() > 1 {
        let groups = factors.len().div_ceil(MERGE_GROUP);
        let prev = &factors;
        factors = par::map_collect(groups, |g| {
            let members = &prev[g * MERGE_GROUP..((g + 1) * MERGE_GROUP).min(prev.len())];
            let total: usize = members.iter().map(|m| m.nrows()).sum();
            let mut stacked = DMatrix::<f64>::zeros(total, ncols);
            let mut at = 0;
            for m in members {
                stacked.rows_mut(at, m.nrows()).copy_from(m);
                at += m.nrows();
            }
            upper_factor(stacked)
        });
    }
    factors.pop().unwrap_or_else(|| DMatrix::zeros(0, ncols))
}

fn upper_factor(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m;
    }
    m.qr().r()
}

/// Enforces the eigenvalue-ratio threshold on `RᵀR / n`; returns `λ_min`.
fn check_conditioning(r: &DMatrix<f64>, d: usize, n: usize) -> Result<f64> {
    let scale = 1.0 / n as f64;
    let tri = r.view((0, 0), (r.nrows().min(d), d)).into_owned();
    let sv = tri.singular_values();
    let max = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let min = if tri.nrows() < d {
        0.0
    } else {
        sv.iter().fold(f64::INFINITY, |a, &s| a.min(s))
    };
    let (lmin, lmax) = (min * min * scale, max * max * scale);
    if !(lmax > 0.0) || !(lmin >= SINGULAR_RATIO * lmax) {
        return Err(Error::SingularGram {
            min_eigenvalue: lmin,
            max_eigenvalue: lmax,
        });
    }
    Ok(lmin)
}

/// Solve `R₁₁ β = R₁₂` from an augmented factor.
fn back_substitute(r_aug: &DMatrix<f64>, d: usize, n: usize) -> Result<(Vec<f64>, f64)> {
    let min_eig = check_conditioning(r_aug, d, n)?;
    let r = r_aug.view((0, 0), (d, d)).into_owned();
    let z = r_aug.view((0, d), (d, 1)).into_owned();
    let beta = r
        .solve_upper_triangular(&z)
        .ok_or(Error::SingularGram {
            min_eigenvalue: 0.0,
            max_eigenvalue: min_eig,
        })?;
    Ok((beta.iter().copied().collect(), min_eig))
}
