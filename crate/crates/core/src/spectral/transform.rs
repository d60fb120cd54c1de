//! Forward and inverse spherical transforms of tabulated functions, and calibration.

use super::inversion::{invert_raw, HeatMultiplier};
use super::radial::{integrate_radial, RadialExtent, RadialFunction, SpectralFunction};
use super::spherical::{
    ln_inv_c, plancherel_density, series_applies, spherical_from_series_with, spherical_function, SphericalRule, SERIES_MIN_LAM,
    SERIES_RADIUS,
};
use crate::error::{domain, Error, Result};
use crate::numerics::{cubic_integral, sine_transform, GaussLegendre, LogValue, NumericsError, QuadratureConfig};
use crate::space::{cartan_density, Preset, SpaceDescriptor};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::OnceLock;

/// How `φ_λ` enters a transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Evaluation {
    /// Closed forms where the space has them.
    #[default]
    Auto,
    /// Always the generic quadrature of `φ_λ`.
    Quadrature,
}

/// `φ_λ(r)` for a fixed set of `λ` and one `r` at a time, sharing the
/// `λ`-dependent factors across radii.
struct SphericalTable<'a> {
    desc: &'a SpaceDescriptor,
    lam: &'a [f64],
    lam_max: f64,
    how: Evaluation,
    ln_c: Vec<Complex64>,
}

impl<'a> SphericalTable<'a> {
    fn new(desc: &'a SpaceDescriptor, lam: &'a [f64], how: Evaluation) -> Result<Self> {
        let generic = !(desc.is_h3() && how == Evaluation::Auto);
        let ln_c = if generic && how == Evaluation::Auto {
            lam.iter()
                .map(|&l| {
                    if l.abs() >= SERIES_MIN_LAM {
                        Ok(-ln_inv_c(desc, Complex64::new(l.abs(), 0.0))?)
                    } else {
                        Ok(Complex64::new(0.0, 0.0))
                    }
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let lam_max = lam.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        Ok(SphericalTable { desc, lam, lam_max, how, ln_c })
    }

    /// Values `φ_{λ_i}(r)` for every `i`.
    fn row(&self, r: f64) -> Result<Vec<f64>> {
        if self.desc.is_h3() && self.how == Evaluation::Auto {
            return self.lam.iter().map(|&l| spherical_function(self.desc, l, r)).collect();
        }
        let series = self.how == Evaluation::Auto;
        let cap = if series && r >= SERIES_RADIUS { SERIES_MIN_LAM } else { self.lam_max };
        let rule = SphericalRule::new(self.desc, r, cap);
        self.lam
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if series && series_applies(l, r) {
                    spherical_from_series_with(self.desc, self.ln_c[i], l.abs(), r)
                } else {
                    Ok(rule.eval(l))
                }
            })
            .collect()
    }
}

const GL_POINTS: usize = 4;

/// Quadrature nodes and `c_s δ(r) f(r) w` weights for `c_s ∫ f(r) δ(r) dr`.
fn radial_nodes(desc: &SpaceDescriptor, f: &RadialFunction) -> Result<Vec<(f64, LogValue)>> {
    let gl = GaussLegendre::get(GL_POINTS);
    let cs = desc.c_surface();
    let mut out = Vec::new();
    let mut push = |a: f64, b: f64| {
        for (r, w) in gl.mapped(a, b) {
            out.push((r, (f.eval(r) * cartan_density(desc, r)).scale(w * cs)));
        }
    };
    for w in f.grid().windows(2) {
        push(w[0], w[1]);
    }
    if let Some(s) = f.tail() {
        let rate = s + desc.rho_norm();
        if rate >= 0.0 {
            return Err(Error::Integrability(format!(
                "tail slope {s} does not beat the growth e^{{{}r}} of δ·φ_0",
                desc.rho_norm()
            )));
        }
        let (start, end) = (f.r_max(), f.r_max() + 60.0 / -rate);
        let n = ((end - start) / 0.5).ceil() as usize;
        for k in 0..n {
            let a = start + (end - start) * k as f64 / n as f64;
            push(a, a + (end - start) / n as f64);
        }
    }
    Ok(out)
}

/// `𝓗f(λ) = c_s ∫ f(r) φ_{-λ}(r) δ(r) dr` on `lam_grid`.
pub fn sft_forward(desc: &SpaceDescriptor, f: &RadialFunction, lam_grid: &[f64]) -> Result<SpectralFunction> {
    sft_forward_with(desc, f, lam_grid, Evaluation::Auto)
}

pub fn sft_forward_with(
    desc: &SpaceDescriptor,
    f: &RadialFunction,
    lam_grid: &[f64],
    how: Evaluation,
) -> Result<SpectralFunction> {
    desc.require_numeric()?;
    let nodes = radial_nodes(desc, f)?;
    let table = SphericalTable::new(desc, lam_grid, how)?;
    let mut values = vec![0.0; lam_grid.len()];
    let rows: Vec<(LogValue, Vec<f64>)> = nodes.par_iter().map(|&(r, w)| Ok((w, table.row(r)?))).collect::<Result<_>>()?;
    for (w, row) in rows {
        for (v, p) in values.iter_mut().zip(row) {
            *v += w.scale(p).to_f64();
        }
    }
    SpectralFunction::new(lam_grid.to_vec(), values)
}

/// Radial quadrature of a profile, reusable for `𝓗f` at many complex `λ`.
#[derive(Clone, Debug)]
pub struct ForwardNodes {
    desc: SpaceDescriptor,
    nodes: Vec<(f64, f64)>,
}

impl ForwardNodes {
    pub fn new(desc: &SpaceDescriptor, f: &RadialFunction) -> Result<Self> {
        desc.require_numeric()?;
        let nodes = radial_nodes(desc, f)?.into_iter().map(|(r, w)| (r, w.to_f64())).collect();
        Ok(ForwardNodes { desc: desc.clone(), nodes })
    }

    /// `𝓗f(λ)` through the entire extension of `φ_λ`.
    pub fn eval(&self, lam: Complex64) -> Result<Complex64> {
        self.nodes.iter().map(|&(r, w)| Ok(super::spherical::spherical_function_c(&self.desc, lam, r)? * w)).sum()
    }
}

/// `𝓗f(λ)` at complex `λ`.
pub fn sft_forward_at(desc: &SpaceDescriptor, f: &RadialFunction, lam: Complex64) -> Result<Complex64> {
    ForwardNodes::new(desc, f)?.eval(lam)
}

/// `c_s ∫ f(r) δ(r) dr`.
pub fn radial_mass(desc: &SpaceDescriptor, f: &RadialFunction) -> Result<f64> {
    Ok(radial_nodes(desc, f)?.iter().map(|&(_, w)| w.to_f64()).sum())
}

fn check_resolution(g: &SpectralFunction, r_max: f64) -> Result<()> {
    let lam = g.lam_grid();
    let max_h = lam.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let limit = std::f64::consts::PI / (4.0 * r_max);
    if r_max > 0.0 && max_h > limit {
        let required = ((lam[lam.len() - 1] - lam[0]) / limit).ceil() as usize + 1;
        return Err(NumericsError::Resolution { required, have: lam.len() }.into());
    }
    Ok(())
}

/// `f(r) = C₀ ∫_0^{λ_max} g(λ) φ_λ(r) |c(λ)|^{-2} dλ` on `r_grid`.
pub fn sft_inverse(desc: &SpaceDescriptor, g: &SpectralFunction, r_grid: &[f64]) -> Result<RadialFunction> {
    sft_inverse_with(desc, g, r_grid, Evaluation::Auto)
}

pub fn sft_inverse_with(desc: &SpaceDescriptor, g: &SpectralFunction, r_grid: &[f64], how: Evaluation) -> Result<RadialFunction> {
    desc.require_numeric()?;
    let c0 = desc.c0()?;
    let r_max = r_grid.iter().copied().fold(0.0, f64::max);
    check_resolution(g, r_max)?;
    let values: Vec<f64> = if desc.is_h3() && how == Evaluation::Auto {
        // φ_λ(r) λ² = λ sin(λr)/sinh r
        let lam = g.lam_grid();
        let weighted = SpectralFunction::new(lam.to_vec(), lam.iter().zip(g.values()).map(|(l, v)| l * v).collect())?;
        let squared = SpectralFunction::new(lam.to_vec(), lam.iter().zip(g.values()).map(|(l, v)| l * l * v).collect())?;
        r_grid
            .par_iter()
            .map(
                |&r| {
                    if r == 0.0 {
                        Ok(c0 * cubic_integral(&squared))
                    } else {
                        Ok(c0 * sine_transform(&weighted, r)? / r.sinh())
                    }
                },
            )
            .collect::<Result<_>>()?
    } else {
        let gl = GaussLegendre::get(GL_POINTS);
        let lam = g.lam_grid();
        let n = lam.len();
        // cubic interpolant of g at the Gauss nodes of every interval
        let mut nodes = Vec::with_capacity((n - 1) * GL_POINTS);
        for k in 0..n - 1 {
            let s = k.saturating_sub(1).min(n.saturating_sub(4));
            let m = (n - s).min(4);
            for (x, w) in gl.mapped(lam[k], lam[k + 1]) {
                let mut v = 0.0;
                for j in 0..m {
                    let mut l = g.values()[s + j];
                    for i in 0..m {
                        if i != j {
                            l *= (x - lam[s + i]) / (lam[s + j] - lam[s + i]);
                        }
                    }
                    v += l;
                }
                nodes.push((x, w * v * plancherel_density(desc, x)?));
            }
        }
        let lams: Vec<f64> = nodes.iter().map(|&(x, _)| x).collect();
        let table = SphericalTable::new(desc, &lams, how)?;
        r_grid
            .par_iter()
            .map(|&r| {
                let row = table.row(r)?;
                Ok(c0 * nodes.iter().zip(row).map(|(&(_, w), p)| w * p).sum::<f64>())
            })
            .collect::<Result<_>>()?
    };
    RadialFunction::new(r_grid.to_vec(), values.into_iter().map(LogValue::from_f64).collect(), None)
}

/// Default `λ`-grid for transforms of functions living on `[0, r_max]`.
pub fn transform_grid(r_max: f64, lam_max: f64) -> Vec<f64> {
    let h = (std::f64::consts::PI / (16.0 * r_max.max(1.0))).min(0.05);
    super::radial::hybrid_grid(lam_max, h)
}

/// `f ∗ g` via the product of transforms, on the grid of `f`.
pub fn radial_convolve(desc: &SpaceDescriptor, f: &RadialFunction, g: &RadialFunction) -> Result<RadialFunction> {
    let lam = transform_grid(f.r_max().max(g.r_max()), 60.0);
    radial_convolve_on(desc, f, g, &lam)
}

pub fn radial_convolve_on(
    desc: &SpaceDescriptor,
    f: &RadialFunction,
    g: &RadialFunction,
    lam_grid: &[f64],
) -> Result<RadialFunction> {
    let fh = sft_forward(desc, f, lam_grid)?;
    let gh = sft_forward(desc, g, lam_grid)?;
    sft_inverse(desc, &fh.product(&gh)?, f.grid())
}

/// Both sides of the Plancherel identity:
/// `c_s ∫ |f|² δ dr` and `C₀ ∫_0^∞ |𝓗f|² |c|^{-2} dλ`.
pub fn plancherel_sides(desc: &SpaceDescriptor, f: &RadialFunction, lam_grid: &[f64]) -> Result<(f64, f64)> {
    let sq = f.map(|_, v| v * v);
    let lhs = radial_mass(desc, &sq)?;
    let fh = sft_forward(desc, f, lam_grid)?;
    let weighted = fh
        .lam_grid()
        .iter()
        .zip(fh.values())
        .map(|(&l, &v)| Ok(v * v * plancherel_density(desc, l)?))
        .collect::<Result<Vec<_>>>()?;
    let rhs = desc.c0()? * cubic_integral(&SpectralFunction::new(fh.lam_grid().to_vec(), weighted)?);
    Ok((lhs, rhs))
}

/// `c_s ∫ h_t δ dr` for the uncalibrated heat kernel.
pub fn heat_mass_raw(desc: &SpaceDescriptor, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let m = HeatMultiplier::new(desc, t);
    let peak = 2.0 * desc.rho_norm() * t;
    let ext = RadialExtent::new(vec![SERIES_RADIUS, peak, peak + 4.0 * t.sqrt()], 1.0, 1e4);
    let q = integrate_radial(|r| Ok(invert_raw(desc, &m, r, cfg)? * cartan_density(desc, r)), &ext, cfg)?;
    Ok(q.total().to_f64() * desc.c_surface())
}

/// Fixes `C₀` by `∫ h_1 = 1` and checks the mass at `t ∈ {0.5, 2, 5}`.
pub fn calibrate(desc: &SpaceDescriptor, cfg: &QuadratureConfig) -> Result<SpaceDescriptor> {
    desc.require_numeric()?;
    cfg.validate()?;
    let c0 = 1.0 / heat_mass_raw(desc, 1.0, cfg)?;
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(Error::Calibration { t: 1.0, mass: 1.0 / c0 });
    }
    for t in [0.5, 2.0, 5.0] {
        let mass = c0 * heat_mass_raw(desc, t, cfg)?;
        if (mass - 1.0).abs() > 1e-4 {
            return Err(Error::Calibration { t, mass });
        }
    }
    Ok(desc.clone().with_c0(c0))
}

/// Calibrated descriptor of a preset, computed once per process.
pub fn calibrated(preset: Preset) -> Result<SpaceDescriptor> {
    static CACHE: [OnceLock<Result<SpaceDescriptor>>; 4] = [const { OnceLock::new() }; 4];
    let idx = Preset::ALL.iter().position(|&p| p == preset).expect("preset listed");
    CACHE[idx].get_or_init(|| calibrate(&preset.descriptor(), &QuadratureConfig::default())).clone()
}

/// Checks that `g` has a usable grid.
pub fn require_grid(lam_grid: &[f64]) -> Result<()> {
    if lam_grid.len() < 4 {
        return Err(domain("spectral grid needs at least 4 nodes"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::radial::uniform_grid;
    use std::f64::consts::PI;

    fn bump(w: f64, n: usize) -> RadialFunction {
        let grid: Vec<f64> = (0..=n).map(|i| w * i as f64 / n as f64).collect();
        RadialFunction::from_fn(grid, |r| Ok(LogValue::from_f64((1.0 - (r / w).powi(2)).powi(8)))).unwrap()
    }

    fn h3_heat(t: f64, r: f64) -> f64 {
        let shape = if r == 0.0 { 1.0 } else { r / r.sinh() };
        (4.0 * PI * t).powf(-1.5) * (-t - r * r / (4.0 * t)).exp() * shape
    }

    #[test]
    fn calibration_recovers_analytic_constant() {
        for p in [Preset::H2, Preset::H3] {
            let d = calibrated(p).unwrap();
            let analytic = 1.0 / (2.0 * PI * PI);
            assert!((d.c0().unwrap() / analytic - 1.0).abs() < 1e-10, "{p}: {}", d.c0().unwrap());
        }
    }

    #[test]
    fn calibration_is_idempotent() {
        let d = calibrated(Preset::H3).unwrap();
        let again = calibrate(&d, &QuadratureConfig::default()).unwrap();
        assert_eq!(again.c0().unwrap(), d.c0().unwrap());
    }

    #[test]
    fn h3_heat_at_one_one() {
        let d = calibrated(Preset::H3).unwrap();
        let v =
            invert_raw(&d, &HeatMultiplier::new(&d, 1.0), 1.0, &QuadratureConfig::default()).unwrap().to_f64() * d.c0().unwrap();
        assert!((v - 5.47e-3).abs() < 5e-6);
        assert!((v / h3_heat(1.0, 1.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inverse_of_heat_multiplier_on_h3() {
        let d = calibrated(Preset::H3).unwrap();
        let lam = uniform_grid(40.0, 16001);
        let g = SpectralFunction::from_fn(lam, |l| (-(l * l + 1.0)).exp()).unwrap();
        let r: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let f = sft_inverse(&d, &g, &r).unwrap();
        let scale = h3_heat(1.0, 0.0);
        for (&ri, v) in r.iter().zip(f.values()) {
            assert!((v.to_f64() - h3_heat(1.0, ri)).abs() < 1e-8 * scale, "r={ri}");
        }
    }

    #[test]
    fn zero_spectrum_inverts_to_zero() {
        let d = calibrated(Preset::H2).unwrap();
        let g = SpectralFunction::new(uniform_grid(10.0, 101), vec![0.0; 101]).unwrap();
        let f = sft_inverse(&d, &g, &[0.0, 0.5, 1.0]).unwrap();
        assert!(f.values().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn coarse_spectrum_is_rejected() {
        let d = calibrated(Preset::H3).unwrap();
        let g = SpectralFunction::from_fn(uniform_grid(10.0, 11), |l| (-l * l).exp()).unwrap();
        let e = sft_inverse(&d, &g, &[0.0, 5.0]).unwrap_err();
        assert!(matches!(e, Error::Numerics(NumericsError::Resolution { .. })));
    }

    #[test]
    fn forward_of_heat_kernel_is_multiplier() {
        let d = calibrated(Preset::H3).unwrap();
        let grid: Vec<f64> = (0..=1200).map(|i| i as f64 * 0.025).collect();
        let h = RadialFunction::from_fn(grid, |r| Ok(LogValue::from_f64(h3_heat(1.0, r)))).unwrap();
        let lam = [0.0, 0.5, 1.0, 2.0, 3.0];
        let fh = sft_forward(&d, &h, &lam).unwrap();
        for (&l, &v) in lam.iter().zip(fh.values()) {
            assert!((v - (-(l * l + 1.0f64)).exp()).abs() < 1e-6, "lam={l}: {v}");
        }
    }

    #[test]
    fn tiny_bump_has_flat_transform() {
        let d = calibrated(Preset::H2).unwrap();
        let f = bump(1e-3, 50);
        let mass = radial_mass(&d, &f).unwrap();
        let fh = sft_forward(&d, &f, &[0.0, 1.0, 5.0]).unwrap();
        for v in fh.values() {
            assert!((v / mass - 1.0).abs() < 1e-4);
        }
        let twice = sft_forward(&d, &f.map(|_, v| v.scale(2.0)), &[1.0, 5.0]).unwrap();
        assert!((twice.values()[0] - 2.0 * fh.values()[1]).abs() < 1e-15 * mass);
    }

    #[test]
    fn round_trip_on_bump() {
        for p in [Preset::H2, Preset::H3] {
            let d = calibrated(p).unwrap();
            let f = bump(1.0, 200);
            let lam = transform_grid(1.0, 60.0);
            let fh = sft_forward(&d, &f, &lam).unwrap();
            let back = sft_inverse(&d, &fh, f.grid()).unwrap();
            let err = f.values().iter().zip(back.values()).map(|(a, b)| (a.to_f64() - b.to_f64()).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{p}: {err}");
        }
    }

    #[test]
    fn round_trip_error_shrinks_with_refinement() {
        let d = calibrated(Preset::H3).unwrap();
        let f = bump(1.0, 400);
        let err = |h: f64| {
            let lam = super::super::radial::hybrid_grid(60.0, h);
            let fh = sft_forward(&d, &f, &lam).unwrap();
            let back = sft_inverse(&d, &fh, f.grid()).unwrap();
            f.values().iter().zip(back.values()).map(|(a, b)| (a.to_f64() - b.to_f64()).abs()).fold(0.0, f64::max)
        };
        let coarse = err(0.4);
        let fine = err(0.2);
        assert!(fine * 2.0 <= coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn plancherel_identity_for_bump() {
        for p in [Preset::H2, Preset::H3] {
            let d = calibrated(p).unwrap();
            let f = bump(1.0, 200);
            let (l, r) = plancherel_sides(&d, &f, &transform_grid(1.0, 60.0)).unwrap();
            assert!((l / r - 1.0).abs() < 1e-5, "{p}: {l} vs {r}");
        }
    }

    #[test]
    fn heat_semigroup_by_convolution() {
        let d = calibrated(Preset::H3).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
        let h = |t: f64| RadialFunction::from_fn(grid.clone(), |r| Ok(LogValue::from_f64(h3_heat(t, r)))).unwrap();
        let conv = radial_convolve(&d, &h(0.5), &h(1.0)).unwrap();
        let scale = h3_heat(1.5, 0.0);
        for (&r, v) in grid.iter().zip(conv.values()) {
            assert!((v.to_f64() - h3_heat(1.5, r)).abs() < 1e-6 * scale, "r={r}");
        }
        let swapped = radial_convolve(&d, &h(1.0), &h(0.5)).unwrap();
        for (a, b) in conv.values().iter().zip(swapped.values()) {
            assert!((a.to_f64() - b.to_f64()).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn smoothing_preserves_mass() {
        let d = calibrated(Preset::H3).unwrap();
        // the mass integral weighs errors at radius r by sinh r, so stop where h_1 δ is negligible
        let grid: Vec<f64> = (0..=300).map(|i| i as f64 * 0.04).collect();
        let f =
            RadialFunction::from_fn(grid.clone(), |r| Ok(LogValue::from_f64(if r < 1.0 { (1.0 - r * r).powi(8) } else { 0.0 })))
                .unwrap();
        let h = RadialFunction::from_fn(grid, |r| Ok(LogValue::from_f64(h3_heat(1.0, r)))).unwrap();
        let conv = radial_convolve(&d, &f, &h).unwrap();
        let (m0, m1) = (radial_mass(&d, &f).unwrap(), radial_mass(&d, &conv).unwrap());
        assert!((m1 / m0 - 1.0).abs() < 1e-6, "{m0} {m1}");
    }

    #[test]
    fn heat_mass_is_one_after_calibration() {
        for p in Preset::ALL {
            let d = calibrated(p).unwrap();
            for t in [0.5, 2.0] {
                let m = d.c0().unwrap() * heat_mass_raw(&d, t, &QuadratureConfig::default()).unwrap();
                assert!((m - 1.0).abs() < 1e-6, "{p} t={t}: {m}");
            }
        }
    }
}
