//! Inverse spherical transform of analytic multipliers along deformed contours.
//!
//! For `r > 0` the inversion integral is rewritten as
//! `f(r) = 2C₀ Re ∫_0^∞ g(λ) c(-λ)^{-1} Φ_λ(r) dλ` and the path moved into the
//! upper half-plane, where `Φ_λ(r) ~ e^{iλr}` decays; the integrand then stays
//! of the size of the result instead of cancelling.

use super::spherical::{ln_hc_phi, ln_inv_c_minus, ln_plancherel_density, spherical_function, SERIES_RADIUS};
use crate::error::{domain, Error, Result};
use crate::numerics::bessel::ln_subordinator_multiplier as ln_sub;
use crate::numerics::{adaptive_quad_breaks, LogValue, QuadratureConfig};
use crate::space::SpaceDescriptor;
use num_complex::Complex64;

/// Path in the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Contour {
    /// `λ = s + iy`.
    Horizontal(f64),
    /// `λ = s e^{iθ}`.
    Ray(f64),
}

impl Contour {
    fn point(self, s: f64) -> (Complex64, Complex64) {
        match self {
            Contour::Horizontal(y) => (Complex64::new(s, y), Complex64::new(1.0, 0.0)),
            Contour::Ray(th) => {
                let e = Complex64::from_polar(1.0, th);
                (e * s, e)
            }
        }
    }
}

/// A spectral multiplier analytic in a neighbourhood of its contours.
pub trait Multiplier: Sync {
    /// `ln g(λ)`.
    fn ln_at(&self, lam: Complex64) -> Result<Complex64>;
    /// Path used at radius `r > 0`.
    fn contour(&self, desc: &SpaceDescriptor, r: f64) -> Contour;
    /// Finest `λ`-scale on which the integrand varies at radius `r`.
    fn scale(&self, desc: &SpaceDescriptor, r: f64) -> f64;
}

/// `e^{-t(λ²+|ρ|²)}`.
#[derive(Clone, Copy, Debug)]
pub struct HeatMultiplier {
    pub t: f64,
    pub rho: f64,
}

impl HeatMultiplier {
    pub fn new(desc: &SpaceDescriptor, t: f64) -> Self {
        HeatMultiplier { t, rho: desc.rho_norm() }
    }
}

impl Multiplier for HeatMultiplier {
    fn ln_at(&self, lam: Complex64) -> Result<Complex64> {
        Ok(-self.t * (lam * lam + self.rho * self.rho))
    }

    fn contour(&self, _: &SpaceDescriptor, r: f64) -> Contour {
        Contour::Horizontal(r / (2.0 * self.t))
    }

    fn scale(&self, _: &SpaceDescriptor, _: f64) -> f64 {
        (1.0 / self.t.sqrt()).min(1.0)
    }
}

/// `(2^{1-σ}/Γ(σ)) w^σ K_σ(w)` with `w = t√(λ²+|ρ|²)`.
#[derive(Clone, Copy, Debug)]
pub struct PoissonMultiplier {
    pub t: f64,
    pub sigma: f64,
    pub rho: f64,
    pub cfg: QuadratureConfig,
}

impl Multiplier for PoissonMultiplier {
    fn ln_at(&self, lam: Complex64) -> Result<Complex64> {
        let w = self.t * (lam * lam + self.rho * self.rho).sqrt();
        let w = if w.re < 0.0 { -w } else { w };
        Ok(ln_sub(self.sigma, w, &self.cfg)?)
    }

    fn contour(&self, _: &SpaceDescriptor, r: f64) -> Contour {
        Contour::Horizontal(self.rho * r / (self.t * self.t + r * r).sqrt())
    }

    fn scale(&self, _: &SpaceDescriptor, r: f64) -> f64 {
        let z = (self.t * self.t + r * r).sqrt();
        (2.0 * self.rho * self.t * self.t / z.powi(3)).sqrt().min(1.0 / self.t).min(1.0)
    }
}

/// `(2^{1-σ}/Γ(σ)) w^σ K_σ(w)` with `w = tλ`; branched at `λ = 0`.
#[derive(Clone, Copy, Debug)]
pub struct DistinguishedMultiplier {
    pub t: f64,
    pub sigma: f64,
    pub cfg: QuadratureConfig,
}

impl Multiplier for DistinguishedMultiplier {
    fn ln_at(&self, lam: Complex64) -> Result<Complex64> {
        let w = self.t * lam;
        let w = if w.re < 0.0 { -w } else { w };
        Ok(ln_sub(self.sigma, w, &self.cfg)?)
    }

    fn contour(&self, _: &SpaceDescriptor, r: f64) -> Contour {
        Contour::Ray(r.atan2(self.t).min(1.3))
    }

    fn scale(&self, _: &SpaceDescriptor, r: f64) -> f64 {
        (1.0 / (self.t * self.t + r * r).sqrt()).min(1.0)
    }
}

/// `(T(λ) - shift) · base(λ)`, with `T` entire.
pub struct Modulated<'a> {
    pub base: &'a dyn Multiplier,
    pub transform: &'a (dyn Fn(Complex64) -> Result<Complex64> + Sync),
    pub shift: f64,
}

impl Multiplier for Modulated<'_> {
    fn ln_at(&self, lam: Complex64) -> Result<Complex64> {
        let d = (self.transform)(lam)? - self.shift;
        if d.norm() == 0.0 {
            return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
        }
        Ok(d.ln() + self.base.ln_at(lam)?)
    }

    fn contour(&self, desc: &SpaceDescriptor, r: f64) -> Contour {
        self.base.contour(desc, r)
    }

    fn scale(&self, desc: &SpaceDescriptor, r: f64) -> f64 {
        self.base.scale(desc, r)
    }
}

fn cfg_inner(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig { rel_tol: cfg.rel_tol.min(1e-11), ..*cfg }
}

/// Geometric scan from `fine/16` until the integrand has dropped `e^{-60}`
/// below its peak; returns the breakpoints and the peak log-size.
fn scan(ln_f: &dyn Fn(f64) -> Result<f64>, fine: f64) -> Result<(Vec<f64>, f64)> {
    let mut breaks = vec![0.0];
    let mut s = fine / 16.0;
    let mut peak = ln_f(0.0)?;
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..400 {
        let v = ln_f(s)?;
        peak = peak.max(v);
        breaks.push(s);
        if peak > f64::NEG_INFINITY && v < peak - 60.0 && v <= prev && s > fine {
            return Ok((breaks, peak));
        }
        prev = v;
        s *= std::f64::consts::SQRT_2;
    }
    Err(domain("inversion integrand does not decay along its contour"))
}

/// `f(r)/C₀` for the multiplier `g`, i.e. the inversion without the calibration.
pub fn invert_raw(desc: &SpaceDescriptor, g: &dyn Multiplier, r: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    desc.require_numeric()?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain(format!("inversion radius {r}")));
    }
    let inner = cfg_inner(cfg);
    let fine = g.scale(desc, r);
    let use_contour = r > 0.0 && (desc.is_h3() || r >= SERIES_RADIUS);
    if use_contour {
        let path = g.contour(desc, r);
        let ln_f = |s: f64| -> Result<Complex64> {
            let (lam, _) = path.point(s);
            if lam.norm() == 0.0 {
                return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
            }
            Ok(g.ln_at(lam)? + ln_inv_c_minus(desc, lam)? + ln_hc_phi(desc, lam, r)?)
        };
        let (breaks, peak) = scan(&|s| Ok(ln_f(s)?.re), fine)?;
        let q = adaptive_quad_breaks(
            |s: f64| -> Result<Complex64> {
                let l = ln_f(s)?;
                if l.re == f64::NEG_INFINITY {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                Ok((l - peak).exp() * path.point(s).1)
            },
            &breaks,
            &inner,
        )
        .map_err(Error::in_panel("contour inversion"))?;
        return Ok(LogValue::from_f64(2.0 * q.value.re).scale_exp(peak));
    }
    // real axis: ∫_0^∞ g(λ) φ_λ(r) |c(λ)|^{-2} dλ
    let ln_w = |s: f64| -> Result<f64> {
        if s == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(g.ln_at(Complex64::new(s, 0.0))?.re + ln_plancherel_density(desc, s)?)
    };
    let (mut breaks, peak) = scan(&ln_w, fine)?;
    if r > 0.0 {
        // resolve oscillation of φ_λ(r) on the scale 1/r
        let top = *breaks.last().expect("scan gives breaks");
        let step = 2.0 / r;
        let mut x = step;
        while x < top {
            breaks.push(x);
            x += step;
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * b.abs().max(1.0));
    }
    let q = adaptive_quad_breaks(
        |s: f64| -> Result<f64> {
            if s == 0.0 {
                return Ok(0.0);
            }
            let lg = g.ln_at(Complex64::new(s, 0.0))?;
            let mag = (lg.re + ln_plancherel_density(desc, s)? - peak).exp();
            Ok(mag * lg.im.cos() * spherical_function(desc, s, r)?)
        },
        &breaks,
        &inner,
    )
    .map_err(Error::in_panel("real-axis inversion"))?;
    Ok(LogValue::from_f64(q.value).scale_exp(peak))
}

/// Calibrated inversion `C₀ ∫_0^∞ g φ_λ(r) |c|^{-2} dλ`.
pub fn invert(desc: &SpaceDescriptor, g: &dyn Multiplier, r: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    let c0 = desc.c0()?;
    Ok(invert_raw(desc, g, r, cfg)?.scale(c0))
}
