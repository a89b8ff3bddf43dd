//! Poisson and with-replacement subsample draws, and the uniform pilot fit.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Dataset, LsSolution};
use crate::par;
use crate::probabilities::{to_inclusion, uniform_probs, InclusionProbabilities, ProbabilityVector};
use crate::seed::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Poisson,
    WithReplacement,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Poisson => "poisson",
            Scheme::WithReplacement => "with_replacement",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "ps" => Ok(Scheme::Poisson),
            "with_replacement" | "with-replacement" | "replacement" | "sr" => Ok(Scheme::WithReplacement),
            other => Err(Error::InvalidArgument(format!("unknown sampling scheme `{other}`"))),
        }
    }
}

/// Selected rows with their importance weights.
///
/// Poisson draws hold distinct, increasing indices with weight `1/p_i`
/// (so `1/(rπ_i)` for uncapped rows and 1 for capped ones). Replacement
/// draws may repeat indices and carry weight `1/(rπ_i)` per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleDraw {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub scheme: Scheme,
}

impl SubsampleDraw {
    pub fn realized_size(&self) -> usize {
        self.indices.len()
    }
}

/// Rows per independently seeded Bernoulli stream.
const POISSON_CHUNK: usize = 8192;

/// Independent Bernoulli(`p_i`) inclusion for every row.
pub fn poisson_sample(p: &InclusionProbabilities, seed: RngSeed) -> Result<SubsampleDraw> {
    let n = p.p.len();
    let chunks = n.div_ceil(POISSON_CHUNK);
    let picked = par::map_collect(chunks, |c| {
        let mut rng = seed.derive(c as u64).rng();
        let lo = c * POISSON_CHUNK;
        let hi = (lo + POISSON_CHUNK).min(n);
        let mut out = Vec::new();
        for i in lo..hi {
            let u: f64 = rng.random();
            if u < p.p[i] {
                out.push(i);
            }
        }
        out
    });
    let indices: Vec<usize> = picked.concat();
    if indices.is_empty() {
        return Err(Error::EmptyDraw);
    }
    let weights = indices.iter().map(|&i| 1.0 / p.p[i]).collect();
    Ok(SubsampleDraw {
        indices,
        weights,
        scheme: Scheme::Poisson,
    })
}

/// Exactly `r` independent categorical draws from `π`.
pub fn replacement_sample(pi: &ProbabilityVector, r: usize, seed: RngSeed) -> Result<SubsampleDraw> {
    if r == 0 {
        return Err(Error::InvalidArgument("replacement draw of size 0".into()));
    }
    let dist = WeightedIndex::new(&pi.pi)
        .map_err(|e| Error::InvalidArgument(format!("invalid sampling distribution: {e}")))?;
    let mut rng = seed.rng();
    let rf = r as f64;
    let indices: Vec<usize> = (0..r).map(|_| dist.sample(&mut rng)).collect();
    let weights = indices.iter().map(|&i| 1.0 / (rf * pi.pi[i])).collect();
    Ok(SubsampleDraw {
        indices,
        weights,
        scheme: Scheme::WithReplacement,
    })
}

/// Draw by either scheme at (expected) size `r`.
pub fn draw(
    pi: &ProbabilityVector,
    scheme: Scheme,
    r: f64,
    redistribute: bool,
    seed: RngSeed,
) -> Result<SubsampleDraw> {
    match scheme {
        Scheme::Poisson => poisson_sample(&to_inclusion(pi, r, redistribute)?, seed),
        Scheme::WithReplacement => replacement_sample(pi, (r.round() as usize).max(1), seed),
    }
}

/// Pilot `β₀` from a uniform Poisson subsample of expected size `r0`.
pub fn pilot_estimate(data: &Dataset, r0: f64, seed: RngSeed) -> Result<LsSolution> {
    let pi = uniform_probs(data.n())?;
    let p = to_inclusion(&pi, r0, false)?;
    let draw = poisson_sample(&p, seed)?;
    linalg::solve_weighted(data, &draw)
}
