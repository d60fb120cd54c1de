//! Spherical transform on rank-one spaces: spherical functions, Plancherel
//! density, forward and inverse transforms, contour inversion of multipliers.

pub mod inversion;
pub mod radial;
pub mod spherical;
pub mod transform;

pub use inversion::{
    invert, invert_raw, Contour, DistinguishedMultiplier, HeatMultiplier, Modulated, Multiplier, PoissonMultiplier,
};
pub use radial::{hybrid_grid, integrate_radial, uniform_grid, RadialExtent, RadialFunction, RadialIntegral, SpectralFunction};
pub use spherical::{
    ln_hc_phi, ln_inv_c_minus, ln_phi0, ln_plancherel_density, plancherel_density, spherical_function, spherical_function_c,
};
pub use transform::{
    calibrate, calibrated, heat_mass_raw, plancherel_sides, radial_convolve, radial_convolve_on, radial_mass, sft_forward,
    sft_forward_at, sft_forward_with, sft_inverse, sft_inverse_with, transform_grid, Evaluation, ForwardNodes,
};
