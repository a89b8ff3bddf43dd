//! Synthetic designs drawn entrywise from `½N(−μ, σ_x²) + ½N(μ, θ²σ_x²)`,
//! linear responses, and three misspecified error models.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::par;
use crate::seed::RngSeed;

/// Rows generated per independently seeded stream.
const GEN_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub mu: f64,
    pub theta_mg: f64,
    pub sigma_x: f64,
}

impl MixtureSpec {
    pub fn new(mu: f64, theta_mg: f64, sigma_x: f64) -> Result<Self> {
        if !(theta_mg >= 0.0) || !(sigma_x > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mixture needs θ ≥ 0 and σ_x > 0 (got μ={mu}, θ={theta_mg}, σ_x={sigma_x})"
            )));
        }
        Ok(MixtureSpec { mu, theta_mg, sigma_x })
    }

    /// One draw from the two-component mixture.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        if rng.random::<bool>() {
            -self.mu + self.sigma_x * z
        } else {
            self.mu + self.theta_mg * self.sigma_x * z
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "GA")]
    Ga,
    #[serde(rename = "MG1")]
    Mg1,
    #[serde(rename = "MG2")]
    Mg2,
    #[serde(rename = "MG3")]
    Mg3,
}

impl Preset {
    /// `(μ, θ)` for the preset.
    pub fn params(self) -> (f64, f64) {
        match self {
            Preset::Ga => (0.0, 1.0),
            Preset::Mg1 => (0.0, 2.0),
            Preset::Mg2 => (0.0, 5.0),
            Preset::Mg3 => (5.0, 1.0),
        }
    }

    pub fn spec(self, sigma_x: f64) -> MixtureSpec {
        let (mu, theta) = self.params();
        MixtureSpec {
            mu,
            theta_mg: theta,
            sigma_x,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Ga => "GA",
            Preset::Mg1 => "MG1",
            Preset::Mg2 => "MG2",
            Preset::Mg3 => "MG3",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GA" => Ok(Preset::Ga),
            "MG1" => Ok(Preset::Mg1),
            "MG2" => Ok(Preset::Mg2),
            "MG3" => Ok(Preset::Mg3),
            other => Err(Error::InvalidArgument(format!("unknown design preset `{other}`"))),
        }
    }
}

/// Error model for the response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Misspec {
    None,
    /// Type I: `ε* = ρ₁·h + ε` with a hidden column `h` drawn from `hidden`.
    Heteroscedastic { rho: f64, hidden: MixtureSpec },
    /// Type II: `ε_i ~ N(ρ₂ε_{i−1}, (1−ρ₂²)σ²)` with `ε₀ = 0`.
    ArErrors { rho: f64 },
    /// Type III: `ε_i = (1 + ρ₃ x_i⁽¹⁾)·N(0, σ²)`.
    ErrorPredictorCorr { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpec {
    pub sigma_eps: f64,
    pub misspec: Misspec,
}

impl Default for ResponseSpec {
    fn default() -> Self {
        ResponseSpec {
            sigma_eps: 10.0,
            misspec: Misspec::None,
        }
    }
}

/// `n × d` design with i.i.d. mixture entries.
pub fn generate_design(n: usize, d: usize, spec: &MixtureSpec, seed: RngSeed) -> Result<DenseMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!("design must be nonempty (got {n}x{d})")));
    }
    let spec = MixtureSpec::new(spec.mu, spec.theta_mg, spec.sigma_x)?;
    let mut data = vec![0.0; n * d];
    par::for_each_chunk_mut(&mut data, GEN_CHUNK * d, |c, block| {
        let mut rng = seed.derive(c as u64).rng();
        for v in block.iter_mut() {
            *v = spec.sample(&mut rng);
        }
    });
    DenseMatrix::new(n, d, data)
}

/// `d` i.i.d. standard normal coefficients.
pub fn draw_coefficients(d: usize, seed: RngSeed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn standard_normals(n: usize, seed: RngSeed) -> Vec<f64> {
    let mut z = vec![0.0; n];
    par::for_each_chunk_mut(&mut z, GEN_CHUNK, |c, block| {
        let mut rng = seed.derive(c as u64).rng();
        for v in block.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    });
    z
}

/// `y = Xβ + ε` under the chosen error model. The base noise stream is
/// `seed.stream("noise")` for every model, so all models coincide at `ρ = 0`.
pub fn generate_response(x: &DenseMatrix, beta: &[f64], spec: &ResponseSpec, seed: RngSeed) -> Result<Vec<f64>> {
    if beta.len() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} columns",
            beta.len(),
            x.cols()
        )));
    }
    if !(spec.sigma_eps > 0.0) {
        return Err(Error::InvalidArgument(format!("noise std {} must be positive", spec.sigma_eps)));
    }
    let n = x.rows();
    let sigma = spec.sigma_eps;
    let z = standard_normals(n, seed.stream("noise"));
    let eps: Vec<f64> = match spec.misspec {
        Misspec::None => z.iter().map(|v| sigma * v).collect(),
        Misspec::Heteroscedastic { rho, hidden } => {
            let h = generate_design(n, 1, &hidden, seed.stream("hidden"))?.into_vec();
            z.iter().zip(&h).map(|(v, hv)| rho * hv + sigma * v).collect()
        }
        Misspec::ArErrors { rho } => {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::InvalidArgument(format!("AR coefficient {rho} outside [0, 1)")));
            }
            let innov = (1.0 - rho * rho).sqrt() * sigma;
            let mut prev = 0.0;
            z.iter()
                .map(|v| {
                    prev = rho * prev + innov * v;
                    prev
                })
                .collect()
        }
        Misspec::ErrorPredictorCorr { rho } => (0..n).map(|i| (1.0 + rho * x.get(i, 0)) * sigma * z[i]).collect(),
    };
    Ok((0..n).map(|i| dot(x.row(i), beta) + eps[i]).collect())
}

/// Everything needed to regenerate a synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub mixture: MixtureSpec,
    pub response: ResponseSpec,
}

/// Design, coefficients and response from one master seed using
/// independent `design`, `beta` and `response` streams.
pub fn generate_dataset(spec: &SyntheticSpec, seed: RngSeed) -> Result<(crate::linalg::Dataset, Vec<f64>)> {
    let x = generate_design(spec.n, spec.d, &spec.mixture, seed.stream("design"))?;
    let beta = draw_coefficients(spec.d, seed.stream("beta"));
    let y = generate_response(&x, &beta, &spec.response, seed.stream("response"))?;
    Ok((crate::linalg::Dataset::new(x, y)?, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(Preset::Ga.params(), (0.0, 1.0));
        assert_eq!(Preset::Mg1.params(), (0.0, 2.0));
        assert_eq!(Preset::Mg2.params(), (0.0, 5.0));
        assert_eq!(Preset::Mg3.params(), (5.0, 1.0));
        assert_eq!("mg2".parse::<Preset>().unwrap(), Preset::Mg2);
        assert!("MG9".parse::<Preset>().is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(MixtureSpec::new(0.0, -1.0, 1.0).is_err());
        assert!(MixtureSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(generate_design(0, 3, &Preset::Ga.spec(1.0), RngSeed(0)).is_err());
        let x = generate_design(10, 2, &Preset::Ga.spec(1.0), RngSeed(0)).unwrap();
        let bad = ResponseSpec {
            sigma_eps: 1.0,
            misspec: Misspec::ArErrors { rho: 1.0 },
        };
        assert!(generate_response(&x, &[1.0, 1.0], &bad, RngSeed(0)).is_err());
        assert!(generate_response(&x, &[1.0], &ResponseSpec::default(), RngSeed(0)).is_err());
    }

    #[test]
    fn coefficients_are_seeded() {
        assert_eq!(draw_coefficients(5, RngSeed(1)), draw_coefficients(5, RngSeed(1)));
        assert_ne!(draw_coefficients(5, RngSeed(1)), draw_coefficients(5, RngSeed(2)));
    }

    #[test]
    fn rho_zero_reduces_to_plain_noise() {
        let x = generate_design(300, 3, &Preset::Mg1.spec(1.0), RngSeed(4)).unwrap();
        let beta = [1.0, -2.0, 0.5];
        let plain = generate_response(&x, &beta, &ResponseSpec::default(), RngSeed(9)).unwrap();
        let hidden = Preset::Mg1.spec(1.0);
        for misspec in [
            Misspec::ArErrors { rho: 0.0 },
            Misspec::ErrorPredictorCorr { rho: 0.0 },
            Misspec::Heteroscedastic { rho: 0.0, hidden },
        ] {
            let spec = ResponseSpec {
                sigma_eps: 10.0,
                misspec,
            };
            let y = generate_response(&x, &beta, &spec, RngSeed(9)).unwrap();
            assert_eq!(y, plain, "{misspec:?}");
        }
    }
}
