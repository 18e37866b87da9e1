//! Deterministic special functions, quadrature, and reproducible sampling.
//!
//! Everything here is pure and safe for concurrent use; an [`RngStream`] is
//! owned by one worker at a time and may be sent between workers.

pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod truncnorm;

pub use normal::{erfc, normal_cdf, normal_pdf, normal_quantile};
pub use quadrature::{gauss_legendre, QuadratureRule, DEFAULT_ORDER};
pub use rng::RngStream;
pub use truncnorm::TruncatedNormal;
