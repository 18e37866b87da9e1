//! Optimal randomized-trial treatment allocation when the inferential target
//! is a population that differs from the trial population.
//!
//! The crate covers the full workflow:
//!
//! - [`model`]: covariate laws, outcome models, allocation designs, target
//!   specifications, and link functions, plus estimand evaluation;
//! - [`allocation`]: optimal covariate-independent probabilities and optimal
//!   covariate-dependent propensity functions, density ratios, design moments;
//! - [`eif`]: efficient influence functions, efficiency bounds (closed-form
//!   quadrature and Monte Carlo), and relative efficiencies;
//! - [`estimate`]: nuisance fitting and the efficient one-step estimators
//!   with influence-function standard errors;
//! - [`simulate`]: seeded data generation and the replicated study harness;
//! - [`numerics`]: quadrature, normal special functions, truncated normals,
//!   and stream-indexed RNG.

pub mod allocation;
pub mod eif;
pub mod error;
pub mod estimate;
pub mod model;
pub mod numerics;
pub mod simulate;

pub use error::{Error, Result};
