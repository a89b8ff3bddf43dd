//! Experiment configuration.
//!
//! Config files are flat TOML: scalar keys plus a few lists. Every key is
//! optional except where noted in [`ConfigFile`]; unknown keys are rejected.
//!
//! ```toml
//! source = "synthetic"          # or "csv"
//! preset = "GA"                 # GA | MG1 | MG2 | MG3
//! n = 20000
//! d = 100
//! methods = ["gradient:poisson", "uniform:poisson", "leverage:with_replacement"]
//! r_ratios = [0.01, 0.05]
//! replications = 1000
//! seed = 42
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::csvio::ColumnRef;
use crate::probabilities::ProbMethod;
use crate::sampling::Scheme;
use crate::seed::RngSeed;
use crate::synthesis::{Misspec, MixtureSpec, Preset, ResponseSpec, SyntheticSpec};

/// On-disk layout. Field names are the config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    /// `synthetic` or `csv`.
    pub source: String,
    pub preset: String,
    /// Overrides the preset's mixture parameters when set.
    pub mu: Option<f64>,
    pub theta_mg: Option<f64>,
    pub sigma_x: f64,
    pub sigma_eps: f64,
    pub n: usize,
    pub d: usize,
    /// `none`, `heteroscedastic`, `ar_errors` or `error_predictor_corr`.
    pub misspec: String,
    pub misspec_rho: f64,
    /// Seed for the synthetic dataset; defaults to `seed`.
    pub data_seed: Option<u64>,
    pub csv_path: Option<PathBuf>,
    pub y_column: ColumnRef,
    pub header: bool,
    /// `method:scheme` pairs, e.g. `gradient:poisson`.
    pub methods: Vec<String>,
    pub r_ratios: Vec<f64>,
    pub r_values: Vec<f64>,
    /// `fraction` (r0 = r0_fraction·r) or `fixed` (r0 = r0).
    pub r0_policy: String,
    pub r0_fraction: f64,
    pub r0: Option<f64>,
    pub replications: usize,
    pub seed: u64,
    pub delta: f64,
    pub redistribute: bool,
    /// Sketch rows for `approx_leverage`; defaults to `20·d`.
    pub sketch_rows: Option<usize>,
    pub output_csv: Option<PathBuf>,
    pub output_json: Option<PathBuf>,
    pub include_timing: bool,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            source: "synthetic".into(),
            preset: "GA".into(),
            mu: None,
            theta_mg: None,
            sigma_x: 1.0,
            sigma_eps: 10.0,
            n: 20_000,
            d: 100,
            misspec: "none".into(),
            misspec_rho: 0.0,
            data_seed: None,
            csv_path: None,
            y_column: ColumnRef::Name("y".into()),
            header: true,
            methods: vec!["uniform:poisson".into(), "leverage:poisson".into(), "gradient:poisson".into()],
            r_ratios: vec![0.01, 0.05],
            r_values: vec![],
            r0_policy: "fraction".into(),
            r0_fraction: 1.0,
            r0: None,
            replications: 1000,
            seed: 0,
            delta: 0.1,
            redistribute: false,
            sketch_rows: None,
            output_csv: None,
            output_json: None,
            include_timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic { spec: SyntheticSpec, seed: RngSeed },
    Csv { path: PathBuf, y_column: ColumnRef, header: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub prob: ProbMethod,
    pub scheme: Scheme,
}

impl std::str::FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (m, sch) = s.split_once(':').unwrap_or((s, "poisson"));
        Ok(MethodSpec {
            prob: m.trim().parse()?,
            scheme: sch.trim().parse()?,
        })
    }
}

/// Subsample size as a fraction of `n` or an absolute expected size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SizeSpec {
    Ratio(f64),
    Absolute(f64),
}

impl SizeSpec {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            SizeSpec::Ratio(q) => q * n as f64,
            SizeSpec::Absolute(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PilotPolicy {
    Fixed(f64),
    FractionOfR(f64),
}

impl PilotPolicy {
    pub fn r0(self, r: f64) -> f64 {
        match self {
            PilotPolicy::Fixed(v) => v,
            PilotPolicy::FractionOfR(f) => f * r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub methods: Vec<MethodSpec>,
    pub sizes: Vec<SizeSpec>,
    pub pilot: PilotPolicy,
    pub replications: usize,
    pub seed: RngSeed,
    pub delta: f64,
    pub redistribute: bool,
    pub sketch_rows: Option<usize>,
    pub output_csv: Option<PathBuf>,
    pub output_json: Option<PathBuf>,
    pub include_timing: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Relative CSV paths are resolved against the config file's directory.
        if let (DataSource::Csv { path: p, .. }, Some(dir)) = (&mut cfg.source, path.as_ref().parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.try_into()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods listed".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::Config("no subsample sizes (r_ratios or r_values) listed".into()));
        }
        for s in &self.sizes {
            match *s {
                SizeSpec::Ratio(q) if !(q > 0.0 && q <= 1.0) => {
                    return Err(Error::Config(format!("ratio {q} outside (0, 1]")))
                }
                SizeSpec::Absolute(r) if !(r > 0.0 && r.is_finite()) => {
                    return Err(Error::Config(format!("subsample size {r} must be positive")))
                }
                _ => {}
            }
        }
        match self.pilot {
            PilotPolicy::Fixed(v) | PilotPolicy::FractionOfR(v) if !(v > 0.0 && v.is_finite()) => {
                return Err(Error::Config(format!("pilot size parameter {v} must be positive")))
            }
            _ => {}
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }
}

impl TryFrom<ConfigFile> for ExperimentConfig {
    type Error = Error;

    fn try_from(f: ConfigFile) -> Result<Self> {
        let source = match f.source.to_ascii_lowercase().as_str() {
            "synthetic" => {
                let preset: Preset = f.preset.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
                let (mu0, theta0) = preset.params();
                let mixture = MixtureSpec::new(f.mu.unwrap_or(mu0), f.theta_mg.unwrap_or(theta0), f.sigma_x)
                    .map_err(|e| Error::Config(e.to_string()))?;
                if f.n == 0 || f.d == 0 {
                    return Err(Error::Config("n and d must be positive".into()));
                }
                let rho = f.misspec_rho;
                let misspec = match f.misspec.to_ascii_lowercase().as_str() {
                    "none" => Misspec::None,
                    "heteroscedastic" | "type1" | "i" => Misspec::Heteroscedastic { rho, hidden: mixture },
                    "ar_errors" | "type2" | "ii" => Misspec::ArErrors { rho },
                    "error_predictor_corr" | "type3" | "iii" => Misspec::ErrorPredictorCorr { rho },
                    other => return Err(Error::Config(format!("unknown misspec `{other}`"))),
                };
                DataSource::Synthetic {
                    spec: SyntheticSpec {
                        n: f.n,
                        d: f.d,
                        mixture,
                        response: ResponseSpec {
                            sigma_eps: f.sigma_eps,
                            misspec,
                        },
                    },
                    seed: RngSeed(f.data_seed.unwrap_or(f.seed)),
                }
            }
            "csv" => DataSource::Csv {
                path: f.csv_path.ok_or_else(|| Error::Config("source = \"csv\" needs csv_path".into()))?,
                y_column: f.y_column,
                header: f.header,
            },
            other => return Err(Error::Config(format!("unknown source `{other}`"))),
        };
        let methods = f
            .methods
            .iter()
            .map(|m| m.parse::<MethodSpec>().map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut sizes: Vec<SizeSpec> = f.r_ratios.iter().map(|&q| SizeSpec::Ratio(q)).collect();
        sizes.extend(f.r_values.iter().map(|&r| SizeSpec::Absolute(r)));
        let pilot = match f.r0_policy.to_ascii_lowercase().as_str() {
            "fraction" => PilotPolicy::FractionOfR(f.r0_fraction),
            "fixed" => PilotPolicy::Fixed(
                f.r0.ok_or_else(|| Error::Config("r0_policy = \"fixed\" needs r0".into()))?,
            ),
            other => return Err(Error::Config(format!("unknown r0_policy `{other}`"))),
        };
        let cfg = ExperimentConfig {
            source,
            methods,
            sizes,
            pilot,
            replications: f.replications,
            seed: RngSeed(f.seed),
            delta: f.delta,
            redistribute: f.redistribute,
            sketch_rows: f.sketch_rows,
            output_csv: f.output_csv,
            output_json: f.output_json,
            include_timing: f.include_timing,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.replications, 1000);
        assert_eq!(cfg.sizes, vec![SizeSpec::Ratio(0.01), SizeSpec::Ratio(0.05)]);
        assert_eq!(cfg.pilot, PilotPolicy::FractionOfR(1.0));
        assert_eq!(cfg.delta, 0.1);
    }

    #[test]
    fn full_document() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            source = "synthetic"
            preset = "MG2"
            n = 500
            d = 4
            misspec = "ar_errors"
            misspec_rho = 0.5
            methods = ["gradient:poisson", "lev:sr"]
            r_ratios = []
            r_values = [50, 100]
            r0_policy = "fixed"
            r0 = 40
            replications = 7
            seed = 3
            "#,
        )
        .unwrap();
        let DataSource::Synthetic { spec, seed } = &cfg.source else {
            panic!("expected synthetic source");
        };
        assert_eq!(spec.mixture.theta_mg, 5.0);
        assert_eq!(spec.response.misspec, Misspec::ArErrors { rho: 0.5 });
        assert_eq!(*seed, RngSeed(3));
        assert_eq!(cfg.methods[1].prob, ProbMethod::Leverage);
        assert_eq!(cfg.methods[1].scheme, Scheme::WithReplacement);
        assert_eq!(cfg.pilot, PilotPolicy::Fixed(40.0));
        assert_eq!(cfg.sizes.len(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "replications = 0",
            "r_ratios = [1.5]",
            "r_ratios = []",
            "methods = [\"magic:poisson\"]",
            "unknown_key = 1",
            "delta = 1.0",
            "source = \"csv\"",
            "r0_policy = \"fixed\"",
            "preset = \"MG7\"",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml_str(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn y_column_by_index() {
        let cfg = ExperimentConfig::from_toml_str("source = \"csv\"\ncsv_path = \"a.csv\"\ny_column = 0").unwrap();
        assert!(matches!(cfg.source, DataSource::Csv { y_column: ColumnRef::Index(0), .. }));
    }
}
