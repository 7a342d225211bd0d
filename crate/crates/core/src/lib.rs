//! Integer-valued differentially private noise for count queries.
//!
//! The released value is `y = n + z` where the noise `z` is an integer with
//! bounded support `[-min(n, D) : D]`, releases the true count with
//! probability exactly `eta`, and has zero mean. For true counts `n >= D` the
//! optimal symmetric noise (smallest singleton-event `delta` at a given
//! `epsilon`) has a closed form, computed by [`optimal_solver`] and
//! independently re-derived by the simplex-based [`lp_oracle`].
//!
//! ```
//! use count_dp::{optimal_alphas, MechanismConfig};
//!
//! let cfg = MechanismConfig::new(0.8, 6, 2.18).unwrap();
//! let sol = optimal_alphas(&cfg);
//! assert_eq!(sol.regime, 3);
//! assert!((sol.delta_star - 0.0049).abs() < 1e-4);
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod gaussian_baseline;
pub mod lp_oracle;
pub mod noise_family;
pub mod optimal_solver;
pub mod sampler;
pub mod verification;

pub use config::MechanismConfig;
pub use error::{Error, Result};
pub use gaussian_baseline::{compare_mechanisms, discrete_gaussian_pmf, gaussian_delta, ComparisonRow, DiscreteGaussianPmf};
pub use noise_family::{
    make_elementary_pmf, mechanism_column, mix_pmfs, validate_properties, MechanismMatrix, NoisePmf, ValidationReport,
};
pub use optimal_solver::{dp_parameters, noise_variance, optimal_alphas, BoundSet, OptimalSolution};
pub use sampler::{empirical_audit, AuditReport, SamplerState};
