//! Fast approximate least squares by importance subsampling.
//!
//! The crate draws a subsample of rows with probabilities `π_i`, solves the
//! reweighted least-squares problem on it, and quantifies how far the result
//! lands from the full-data solution. Supported distributions are uniform,
//! exact and sketched leverage, gradient-based (`π_i ∝ ‖x_i‖·|y_i − x_iᵀβ₀|`
//! for a pilot `β₀`) and the residual oracle; rows are drawn by Poisson
//! sampling or with replacement.
//!
//! ```
//! use gradlsq::prelude::*;
//!
//! let spec = SyntheticSpec {
//!     n: 2000,
//!     d: 5,
//!     mixture: Preset::Ga.spec(1.0),
//!     response: ResponseSpec::default(),
//! };
//! let (data, _beta) = generate_dataset(&spec, RngSeed(1)).unwrap();
//! let full = solve_full(&data).unwrap();
//! let pilot = pilot_estimate(&data, 100.0, RngSeed(2)).unwrap();
//! let pi = gradient_probs(&data, &pilot.beta).unwrap();
//! let draw = poisson_sample(&to_inclusion(&pi, 100.0, false).unwrap(), RngSeed(3)).unwrap();
//! let sub = solve_weighted(&data, &draw).unwrap();
//! assert_eq!(sub.beta.len(), full.beta.len());
//! ```

pub mod bounds;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod par;
pub mod probabilities;
pub mod sampling;
pub mod seed;
pub mod synthesis;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bounds::{
        bernstein_expectation_bound, bound_constants, bound_report, corollary_gap, error_bound,
        min_subsample_size, BoundConstants, BoundContext, BoundReport, MinSubsampleSize,
    };
    pub use crate::error::{Error, Result};
    pub use crate::linalg::{
        gram_min_eigenvalue, solve_full, solve_weighted, Dataset, DenseMatrix, LsSolution,
    };
    pub use crate::probabilities::{
        approx_leverage_probs, gradient_probs, leverage_probs, residual_oracle_probs, to_inclusion,
        uniform_probs, InclusionProbabilities, ProbMethod, ProbabilityVector,
    };
    pub use crate::sampling::{
        pilot_estimate, poisson_sample, replacement_sample, Scheme, SubsampleDraw,
    };
    pub use crate::seed::RngSeed;
    pub use crate::synthesis::{
        draw_coefficients, generate_dataset, generate_design, generate_response, Misspec,
        MixtureSpec, Preset, ResponseSpec, SyntheticSpec,
    };
}
