//! Reference implementations that share no numerics with the library:
//! exact rational elimination, Gauss–Jordan inversion, cyclic Jacobi.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use gradlsq::linalg::{Dataset, DenseMatrix};
use gradlsq::seed::RngSeed;
use gradlsq::synthesis::{self, Preset, ResponseSpec, SyntheticSpec};

pub fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

pub fn to_f64(v: &BigRational) -> f64 {
    // Scale so the quotient of two big integers keeps full precision.
    let (num, den) = (v.numer().clone(), v.denom().clone());
    let shift = num.bits() as i64 - den.bits() as i64 - 60;
    let q: BigInt = if shift >= 0 {
        num / (den << shift as usize)
    } else {
        (num << (-shift) as usize) / den
    };
    let q: f64 = q.to_string().parse().unwrap();
    q * 2f64.powi(shift as i32)
}

/// Solve `A x = b` exactly.
pub fn rational_solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let d = b.len();
    for k in 0..d {
        let p = (k..d).find(|&i| !a[i][k].is_zero()).expect("nonsingular");
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..d {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &a[k][k];
            for j in k..d {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
            let t = &f * &b[k];
            b[i] -= t;
        }
    }
    let mut x = vec![BigRational::zero(); d];
    for k in (0..d).rev() {
        let mut s = b[k].clone();
        for j in k + 1..d {
            s -= &a[k][j] * &x[j];
        }
        x[k] = s / &a[k][k];
    }
    x
}

/// Split a finite float into `(m, e)` with `v = m·2^e` exactly.
fn dyadic(v: f64) -> (BigInt, i64) {
    if v == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = v.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let m = BigInt::from(m);
    (if v < 0.0 { -m } else { m }, e)
}

/// Put every value on the common scale `2^e_min`, returning integers.
fn common_scale(vals: &[f64]) -> Vec<BigInt> {
    let parts: Vec<(BigInt, i64)> = vals.iter().map(|&v| dyadic(v)).collect();
    let emin = parts.iter().filter(|p| !p.0.is_zero()).map(|p| p.1).min().unwrap_or(0);
    parts.into_iter().map(|(m, e)| m << (e - emin) as usize).collect()
}

/// Fraction-free (Bareiss) elimination on an integer system, exact result.
fn bareiss_solve(mut a: Vec<Vec<BigInt>>, mut b: Vec<BigInt>) -> Vec<BigRational> {
    let d = b.len();
    let mut prev = BigInt::from(1);
    for k in 0..d {
        let p = (k..d).find(|&i| !a[i][k].is_zero()).expect("nonsingular");
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..d {
            for j in k + 1..d {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
            b[i] = (&b[i] * &a[k][k] - &a[i][k] * &b[k]) / &prev;
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let a: Vec<Vec<BigRational>> = a.into_iter().map(|r| r.into_iter().map(BigRational::from_integer).collect()).collect();
    let b: Vec<BigRational> = b.into_iter().map(BigRational::from_integer).collect();
    let mut x = vec![BigRational::zero(); d];
    for k in (0..d).rev() {
        let mut s = b[k].clone();
        for j in k + 1..d {
            s -= &a[k][j] * &x[j];
        }
        x[k] = s / &a[k][k];
    }
    x
}

/// Weighted normal equations `(Σ w_i x_i x_iᵀ) β = Σ w_i x_i y_i` in exact
/// arithmetic. Duplicate rows simply appear twice.
///
/// Entries of `x` and `y` share one power-of-two scale, as do the weights, so
/// both sides carry the same factor and the system is solved over integers.
pub fn rational_normal_equations(x: &DenseMatrix, y: &[f64], rows: &[usize], weights: &[f64]) -> Vec<f64> {
    let d = x.cols();
    let mut flat: Vec<f64> = Vec::with_capacity(rows.len() * (d + 1));
    for &i in rows {
        flat.extend(x.row(i).iter());
        flat.push(y[i]);
    }
    let ints = common_scale(&flat);
    let ws = common_scale(weights);
    let mut a = vec![vec![BigInt::zero(); d]; d];
    let mut b = vec![BigInt::zero(); d];
    for (k, w) in ws.iter().enumerate() {
        let row = &ints[k * (d + 1)..(k + 1) * (d + 1)];
        for j in 0..d {
            let wx = w * &row[j];
            for l in j..d {
                a[j][l] += &wx * &row[l];
            }
            b[j] += &wx * &row[d];
        }
    }
    for j in 0..d {
        for l in 0..j {
            a[j][l] = a[l][j].clone();
        }
    }
    bareiss_solve(a, b).iter().map(to_f64).collect()
}

pub fn full_normal_equations(data: &Dataset) -> Vec<f64> {
    let rows: Vec<usize> = (0..data.n()).collect();
    rational_normal_equations(&data.x, &data.y, &rows, &vec![1.0; data.n()])
}

/// Explicit `n⁻¹XᵀX` by triple loop.
pub fn naive_gram(x: &DenseMatrix) -> Vec<Vec<f64>> {
    let (n, d) = (x.rows(), x.cols());
    let mut g = vec![vec![0.0; d]; d];
    for i in 0..n {
        for j in 0..d {
            for k in 0..d {
                g[j][k] += x.get(i, j) * x.get(i, k);
            }
        }
    }
    for row in &mut g {
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    g
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..d).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for k in 0..d {
        let p = (k..d).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        let piv = a[k][k];
        for v in a[k].iter_mut() {
            *v /= piv;
        }
        for i in 0..d {
            if i != k {
                let f = a[i][k];
                for j in 0..2 * d {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    a.into_iter().map(|r| r[d..].to_vec()).collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let d = m.len();
    let mut a = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn dataset(preset: Preset, n: usize, d: usize, seed: u64) -> Dataset {
    let spec = SyntheticSpec {
        n,
        d,
        mixture: preset.spec(1.0),
        response: ResponseSpec::default(),
    };
    synthesis::generate_dataset(&spec, RngSeed(seed)).unwrap().0
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}
