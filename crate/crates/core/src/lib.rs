//! Heat and fractional Poisson kernels on rank-one symmetric spaces `G/K` and
//! on their distinguished Laplacian side `S = NA`.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod convergence;
pub mod distinguished;
pub mod error;
pub mod kernels;
pub mod numerics;
pub mod space;
pub mod spectral;

pub use error::{Error, Result};
pub use kernels::{KernelQuery, Route};
pub use numerics::{LogValue, QuadratureConfig};
pub use space::{Preset, SpaceDescriptor};
pub use spectral::{RadialFunction, SpectralFunction};
