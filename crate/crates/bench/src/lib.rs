//! Shared fixtures for the benchmarks.

use fpl_core::convergence::InitialDatum;
use fpl_core::spectral::calibrated;
use fpl_core::{Preset, RadialFunction, SpaceDescriptor};

pub fn h3() -> SpaceDescriptor {
    calibrated(Preset::H3).expect("H3 calibrates")
}

pub fn h2() -> SpaceDescriptor {
    calibrated(Preset::H2).expect("H2 calibrates")
}

/// The unit bump used by the convergence experiments.
pub fn bump() -> RadialFunction {
    InitialDatum::RadialBump(1.0).profile().expect("static profile")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert!(h3().is_h3());
        assert_eq!(h2().dim_n(), 2);
        assert_eq!(bump().r_max(), 1.0);
    }
}
