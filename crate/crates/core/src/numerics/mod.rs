//! Numerical building blocks shared by every other module.

pub mod bessel;
pub mod filon;
pub mod gamma;
pub mod logvalue;
pub mod quad;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k_complex};
pub use filon::{cubic_integral, sine_transform};
pub use logvalue::LogValue;
pub use quad::{
    adaptive_quad, adaptive_quad_breaks, de_quad_semiinfinite, GaussLegendre, QuadValue, Quadrature, QuadratureConfig,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("non-finite integrand sample at x = {x}")]
    NonFinite { x: f64 },
    #[error("integral diverges: {detail}")]
    Divergent { detail: String },
    #[error("grid too coarse: {required} nodes needed, {have} given")]
    Resolution { required: usize, have: usize },
    #[error("domain error: {0}")]
    Domain(String),
}
