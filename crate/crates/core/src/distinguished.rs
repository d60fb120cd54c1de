//! Kernels of the distinguished Laplacian on `S = NA`.
//!
//! Every `S`-function handled here has the shape `g ↦ δ̃(g)^{1/2} D(|g⁺|)` with
//! a radial core `D`; its `S`-norms then reduce to radial integrals weighted
//! by `φ₀`.

use crate::error::{check_sigma, domain, Error, Result};
use crate::kernels::{
    annulus_mass, check_eps, grid_sup, ln_phi0_ratio_h3, require_resolvable, subordinate, sup_grid, KernelQuery, RegionMass,
    SupNorm, MASS_RADIUS,
};
use crate::numerics::bessel::ln_subordinator_multiplier;
use crate::numerics::gamma::ln_gamma;
use crate::numerics::{adaptive_quad, adaptive_quad_breaks, LogValue, QuadratureConfig};
use crate::space::{asymptotic_constants, cartan_density, SpaceDescriptor};
use crate::spectral::{integrate_radial, invert, ln_phi0, DistinguishedMultiplier, RadialExtent, RadialFunction};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Transform of `Q^{σ,0}`: `(2^{1-σ}/Γ(σ)) (tλ)^σ K_σ(tλ)`, extended by `1` at `λ = 0`.
pub fn q0_multiplier(t: f64, sigma: f64, lam: f64, cfg: &QuadratureConfig) -> Result<f64> {
    KernelQuery::new(t, sigma, 0.0)?;
    if !(lam >= 0.0) {
        return Err(domain(format!("q0_multiplier needs lam ≥ 0, got {lam}")));
    }
    Ok(ln_subordinator_multiplier(sigma, Complex64::new(t * lam, 0.0), cfg)?.re.exp())
}

/// `Q^{σ,0}(r)` by contour inversion of [`q0_multiplier`].
pub fn q0_spectral(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<LogValue> {
    require_resolvable(q.r)?;
    invert(desc, &DistinguishedMultiplier { t: q.t, sigma: q.sigma, cfg: *cfg }, q.r, cfg)
}

/// `Q^{σ,0}(r) = t^{2σ}/(4^σΓ(σ)) ∫ u^{-1-σ} e^{|ρ|²u} h_u(r) e^{-t²/4u} du`.
pub fn q0_subordination(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<LogValue> {
    subordinate(desc, q, true, cfg)
}

/// `Q^{σ,0}` on `H³`: `φ₀(r) t^{2σ} (t²+r²)^{-3/2-σ} Γ(3/2+σ)/(Γ(σ)π^{3/2})`.
pub fn q0_closed_form(desc: &SpaceDescriptor, q: &KernelQuery) -> Result<LogValue> {
    if !desc.is_h3() {
        return Err(domain("closed-form distinguished kernel exists on H3 only"));
    }
    let s = q.sigma;
    let ln = ln_phi0(desc, q.r)? + 2.0 * s * q.t.ln() - (1.5 + s) * (q.t * q.t + q.r * q.r).ln() + ln_gamma(1.5 + s)
        - ln_gamma(s)
        - 1.5 * PI.ln();
    Ok(LogValue::from_log(ln))
}

/// `ln Q^{σ,0}_t(r + δ) - ln Q^{σ,0}_t(r)`, stable for large `r`.
pub fn q0_log_ratio(desc: &SpaceDescriptor, q: &KernelQuery, delta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let x = q.r + delta;
    let far = KernelQuery::new(q.t, q.sigma, x)?;
    if !desc.is_h3() || q.r.min(x) < 20.0 {
        return Ok(q0_kernel(desc, &far, cfg)?.log_mag() - q0_kernel(desc, q, cfg)?.log_mag());
    }
    let z2 = q.t * q.t + q.r * q.r;
    Ok(ln_phi0_ratio_h3(q.r, delta) - (1.5 + q.sigma) * (delta * (q.r + x) / z2).ln_1p())
}

/// `Q^{σ,0}(r)` by the fastest available route.
pub fn q0_kernel(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<LogValue> {
    if desc.is_h3() {
        q0_closed_form(desc, q)
    } else {
        q0_spectral(desc, q, cfg)
    }
}

/// `Q̃_t^σ = e^{-a} Q^{σ,0}(r)` at horocyclic height `a = ⟨ρ, A(g)⟩`, `|a| ≤ |ρ|r`.
pub fn qtilde_eval(desc: &SpaceDescriptor, q: &KernelQuery, a: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    let bound = desc.rho_norm() * q.r;
    if !(a.abs() <= bound * (1.0 + 1e-12)) {
        return Err(domain(format!("|a| = {} exceeds |rho| r = {bound}", a.abs())));
    }
    Ok(q0_kernel(desc, q, cfg)?.scale_exp(-a))
}

/// `Q^{σ,0}(r)` over `φ₀(r) t^{2σ} (t+r)^{-ℓ-2|Σ|-2σ}`.
pub fn qtilde_bounds_ratio(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<f64> {
    if q.t.hypot(q.r) < 1.0 {
        return Err(domain("bounds need t² + r² ≥ 1"));
    }
    let v = q0_kernel(desc, q, cfg)?;
    let (l, nr) = (desc.rank() as f64, desc.reduced_roots() as f64);
    let ln_bound = ln_phi0(desc, q.r)? + 2.0 * q.sigma * q.t.ln() - (l + 2.0 * nr + 2.0 * q.sigma) * (q.t + q.r).ln();
    Ok((v.log_mag() - ln_bound).exp())
}

/// `Q^{σ,0}(r)` over `C̃(σ) t^{2σ} φ₀(r) (t²+r²)^{-ℓ/2-|Σ|-σ}`.
pub fn q0_asymptotic_ratio(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<f64> {
    let v = q0_kernel(desc, q, cfg)?;
    let ct = asymptotic_constants(desc, q.sigma)?.ctilde_sigma;
    let (l, nr) = (desc.rank() as f64, desc.reduced_roots() as f64);
    let ln_asym =
        ct.ln() + 2.0 * q.sigma * q.t.ln() + ln_phi0(desc, q.r)? + (-l / 2.0 - nr - q.sigma) * (q.t * q.t + q.r * q.r).ln();
    Ok((v.log_mag() - ln_asym).exp())
}

/// `‖Q̃_t^σ‖_∞ = sup_r e^{|ρ|r} Q^{σ,0}(r)`.
pub fn qtilde_sup_norm(desc: &SpaceDescriptor, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<SupNorm> {
    if !(t > 2.0) {
        return Err(domain(format!("sup-norm estimate needs t > 2, got {t}")));
    }
    check_sigma(sigma)?;
    let rho = desc.rho_norm();
    grid_sup(&sup_grid(t, 64.0), |r| Ok(q0_kernel(desc, &KernelQuery { t, sigma, r }, cfg)?.scale_exp(rho * r)))
}

/// A radial core `D`, standing for `δ̃^{1/2} D(|g⁺|)` when `weight_half_delta`
/// is set and for `D(|g⁺|)` otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct SRadialCore {
    pub profile: RadialFunction,
    pub weight_half_delta: bool,
}

impl SRadialCore {
    pub fn new(profile: RadialFunction) -> Self {
        SRadialCore { profile, weight_half_delta: true }
    }
}

/// `c_s ∫ w(r) δ(r) f(r) dr` for a closure, with a power-tail remainder.
pub(crate) fn weighted_mass_fn(
    desc: &SpaceDescriptor,
    f: impl Fn(f64) -> Result<LogValue>,
    with_phi0: bool,
    breaks: Vec<f64>,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let ext = RadialExtent::new(breaks, 1.0, MASS_RADIUS);
    let q = integrate_radial(
        |r| {
            let w = if with_phi0 { ln_phi0(desc, r)? } else { 0.0 };
            Ok((f(r)? * cartan_density(desc, r)).scale_exp(w))
        },
        &ext,
        cfg,
    )?;
    Ok(q.total().to_f64() * desc.c_surface())
}

/// `c_s ∫ w δ D` over a tabulated profile, following its grid.
fn weighted_profile_mass(desc: &SpaceDescriptor, core: &SRadialCore, abs: bool, cfg: &QuadratureConfig) -> Result<f64> {
    let p = &core.profile;
    if let (Some(slope), true) = (p.tail(), core.weight_half_delta) {
        // δφ₀ grows like e^{|ρ|r}
        if slope + desc.rho_norm() >= 0.0 {
            return Err(Error::Integrability(format!("profile tail e^({slope} r) not integrable against δφ₀")));
        }
    } else if let Some(slope) = p.tail() {
        if slope + 2.0 * desc.rho_norm() >= 0.0 {
            return Err(Error::Integrability(format!("profile tail e^({slope} r) not integrable against δ")));
        }
    }
    let integrand = |r: f64| -> Result<LogValue> {
        let v = p.eval(r);
        let v = if abs { v.abs() } else { v };
        let w = if core.weight_half_delta { ln_phi0(desc, r)? } else { 0.0 };
        Ok((v * cartan_density(desc, r)).scale_exp(w))
    };
    let body = adaptive_quad_breaks(integrand, p.grid(), cfg).map_err(Error::in_panel("profile mass"))?.value;
    let tail = match p.tail() {
        Some(_) => {
            let r0 = p.r_max();
            let ext = RadialExtent::new(vec![], 1.0, MASS_RADIUS);
            integrate_radial(|s| integrand(r0 + s), &ext, cfg)?.total()
        }
        None => LogValue::ZERO,
    };
    Ok((body + tail).to_f64() * desc.c_surface())
}

/// `‖δ̃^{1/2}D‖_{L¹(S)} = c_s ∫ δ φ₀ |D| dr`.
pub fn s_l1_norm(desc: &SpaceDescriptor, core: &SRadialCore, cfg: &QuadratureConfig) -> Result<f64> {
    weighted_profile_mass(desc, core, true, cfg)
}

/// `‖δ̃^{1/2}D‖_{L^∞(S)} = sup_r e^{|ρ|r} |D(r)|`, over the profile grid.
pub fn s_linf_norm(desc: &SpaceDescriptor, core: &SRadialCore) -> Result<f64> {
    let rho = if core.weight_half_delta { desc.rho_norm() } else { 0.0 };
    if let Some(slope) = core.profile.tail() {
        if slope + rho > 0.0 {
            return Err(Error::Integrability(format!("weighted core grows like e^({} r)", slope + rho)));
        }
    }
    let p = &core.profile;
    let best = p.grid().iter().zip(p.values()).map(|(&r, v)| v.abs().scale_exp(rho * r)).fold(LogValue::ZERO, |a, b| {
        if b.cmp_value(&a).is_gt() {
            b
        } else {
            a
        }
    });
    Ok(best.to_f64())
}

/// `M̃ = c_s ∫ v₀ φ₀ δ dr = 𝓗v₀(0)`.
pub fn mass_function_radial(desc: &SpaceDescriptor, v0: &RadialFunction, cfg: &QuadratureConfig) -> Result<f64> {
    weighted_profile_mass(desc, &SRadialCore::new(v0.clone()), false, cfg)
}

/// `L¹(S)` mass of `Q̃_t^σ` inside and outside `t^{1-ε} ≤ r ≤ t^{1+ε}`.
pub fn qtilde_critical_mass(desc: &SpaceDescriptor, t: f64, sigma: f64, eps: f64, cfg: &QuadratureConfig) -> Result<RegionMass> {
    check_eps(eps)?;
    KernelQuery::new(t, sigma, 0.0)?;
    let inside = annulus_mass(
        desc,
        |r| Ok(q0_kernel(desc, &KernelQuery { t, sigma, r }, cfg)?.scale_exp(ln_phi0(desc, r)?)),
        t.powf(1.0 - eps),
        t.powf(1.0 + eps),
        cfg,
    )?;
    Ok(RegionMass { inside, outside: 1.0 - inside })
}

/// `∫_{S} Q̃_t^σ` through the `φ₀`-reduction.
pub fn qtilde_mass(desc: &SpaceDescriptor, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    KernelQuery::new(t, sigma, 0.0)?;
    weighted_mass_fn(desc, |r| q0_kernel(desc, &KernelQuery { t, sigma, r }, cfg), true, vec![0.5, t], cfg)
}

/// Horocyclic height `⟨ρ, A⟩ = |ρ| ln(cosh r - sinh r cos θ)` of the point at
/// distance `r` seen at angle `θ` from a boundary point.
pub fn horocyclic_height(desc: &SpaceDescriptor, r: f64, theta: f64) -> f64 {
    // cosh r - sinh r cos θ = e^{-r} + 2 sinh r sin²(θ/2), without cancellation
    let s = (0.5 * theta).sin();
    desc.rho_norm() * ((-r).exp() + 2.0 * r.sinh() * s * s).ln()
}

/// `c_s ∫_0^{r_max} δ(r) ∫_{|a| ≤ |ρ|r} e^{-a} |D(r)| dμ_r(a) dr`, with `μ_r` the
/// push-forward of the normalized sphere measure under the horocyclic height.
///
/// Low-accuracy oracle for the `φ₀`-reduction of [`s_l1_norm`].
pub fn reduction2d_l1(desc: &SpaceDescriptor, core: impl Fn(f64) -> f64, r_max: f64, cfg: &QuadratureConfig) -> Result<f64> {
    desc.require_numeric()?;
    let n = desc.dim_n() as f64;
    let rho = desc.rho_norm();
    let ln_z = 0.5 * PI.ln() + ln_gamma((n - 1.0) / 2.0) - ln_gamma(n / 2.0);
    let inner_cfg = cfg.with_rel_tol(cfg.rel_tol.max(1e-8));
    // a = -ρr cos ψ removes the endpoint singularities of the density
    let slice = |r: f64| -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let (sh, ch) = (r.sinh(), r.cosh());
        let q = adaptive_quad(
            |psi: f64| -> Result<f64> {
                let a = -rho * r * psi.cos();
                let da = rho * r * psi.sin();
                let e = (a / rho).exp();
                let cos_t = ((ch - e) / sh).clamp(-1.0, 1.0);
                let sin_t = (1.0 - cos_t * cos_t).sqrt();
                if sin_t == 0.0 {
                    return Ok(0.0);
                }
                let density = (sin_t.ln() * (n - 3.0) + a / rho - ln_z - (rho * sh).ln()).exp();
                Ok(density * da * (-a).exp())
            },
            0.0,
            PI,
            &inner_cfg,
        )
        .map_err(Error::in_panel("reduction2d angular"))?;
        Ok(q.value * cartan_density(desc, r).to_f64() * core(r).abs())
    };
    let q = adaptive_quad(slice, 0.0, r_max, &inner_cfg).map_err(Error::in_panel("reduction2d radial"))?;
    Ok(q.value * desc.c_surface())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::heat_kernel;
    use crate::numerics::{de_quad_semiinfinite, NumericsError};
    use crate::space::Preset;
    use crate::spectral::{calibrated, sft_forward, uniform_grid};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn h3() -> SpaceDescriptor {
        calibrated(Preset::H3).unwrap()
    }

    fn bump(width: f64) -> RadialFunction {
        let grid = uniform_grid(width, 200);
        RadialFunction::from_fn(grid, |r| {
            let x = r / width;
            Ok(if x < 1.0 { LogValue::from_log(1.0 - 1.0 / (1.0 - x * x)) } else { LogValue::ZERO })
        })
        .unwrap()
    }

    fn decreasing(xs: &[f64]) -> bool {
        xs.windows(2).all(|w| w[1] <= w[0].max(1e-9))
    }

    #[test]
    fn multiplier_at_half_and_direct_oracle() {
        for &lam in &[0.0, 0.5, 3.0] {
            let m = q0_multiplier(2.0, 0.5, lam, &cfg()).unwrap();
            assert!((m / (-2.0 * lam).exp() - 1.0).abs() < 1e-10);
        }
        let (t, s, lam) = (3.0f64, 0.6f64, 0.4f64);
        let pre = (2.0 * s * t.ln() - s * 4f64.ln() - ln_gamma(s)).exp();
        let direct = de_quad_semiinfinite(
            |u: f64| Ok::<_, NumericsError>(((-1.0 - s) * u.ln() - u * lam * lam - t * t / (4.0 * u)).exp()),
            0.0,
            &cfg().with_rel_tol(1e-13),
        )
        .unwrap()
        .value
            * pre;
        let m = q0_multiplier(t, s, lam, &cfg()).unwrap();
        assert!((m / direct - 1.0).abs() < 1e-9, "{m} {direct}");
        // continuity at the origin
        let near = q0_multiplier(t, s, 1e-9, &cfg()).unwrap();
        assert!((near - q0_multiplier(t, s, 0.0, &cfg()).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn routes_agree() {
        let d = h3();
        for &(t, s, r) in &[(5.0, 0.5, 5.0), (5.0, 0.25, 0.5), (2.0, 0.75, 20.0)] {
            let q = KernelQuery::new(t, s, r).unwrap();
            let c = q0_closed_form(&d, &q).unwrap();
            let sp = q0_spectral(&d, &q, &cfg()).unwrap();
            let sb = q0_subordination(&d, &q, &cfg()).unwrap();
            assert!(c.rel_diff(&sp) < 1e-6, "{t} {s} {r}: {}", c.rel_diff(&sp));
            assert!(c.rel_diff(&sb) < 1e-6, "{t} {s} {r}: {}", c.rel_diff(&sb));
            assert_eq!(c.sign(), 1);
        }
    }

    #[test]
    fn routes_agree_on_h2() {
        let d = calibrated(Preset::H2).unwrap();
        let q = KernelQuery::new(5.0, 0.5, 5.0).unwrap();
        let sp = q0_spectral(&d, &q, &cfg()).unwrap();
        let sb = q0_subordination(&d, &q, &cfg()).unwrap();
        assert!(sp.rel_diff(&sb) < 1e-5, "{}", sp.rel_diff(&sb));
    }

    #[test]
    fn kernel_at_r_equal_t_decays_polynomially() {
        let d = h3();
        let ts = [10.0f64, 20.0, 40.0];
        let v: Vec<f64> =
            ts.iter().map(|&t| q0_kernel(&d, &KernelQuery::new(t, 0.5, t).unwrap(), &cfg()).unwrap().log_mag()).collect();
        // Q^{σ,0}(t) ~ t^{2σ} φ₀(t) t^{-3-2σ}, and φ₀(t) ~ 2t e^{-t}
        let slope = ((v[2] + ts[2]) - (v[1] + ts[1])) / (ts[2].ln() - ts[1].ln());
        assert!((slope + 2.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn qtilde_respects_geometry() {
        let d = h3();
        let q = KernelQuery::new(5.0, 0.5, 1.0).unwrap();
        assert_eq!(qtilde_eval(&d, &q, 0.0, &cfg()).unwrap(), q0_kernel(&d, &q, &cfg()).unwrap());
        let lo = qtilde_eval(&d, &q, -1.0, &cfg()).unwrap();
        let mid = qtilde_eval(&d, &q, 0.3, &cfg()).unwrap();
        assert!(lo.cmp_value(&mid).is_gt());
        assert!(qtilde_eval(&d, &q, 2.0, &cfg()).is_err());
    }

    #[test]
    fn horocyclic_heights_reach_the_extreme_in_the_disk() {
        // H²: the point at distance r in direction θ of the unit disk, seen from b = 1
        let d = calibrated(Preset::H2).unwrap();
        let rho = d.rho_norm();
        let r = 2.0f64;
        let tau = (r / 2.0).tanh();
        let mut min_a = f64::MAX;
        for k in 0..=4000 {
            let theta = PI * k as f64 / 4000.0;
            let x = Complex64::from_polar(tau, theta);
            let poisson = (1.0 - tau * tau) / (x - 1.0).norm_sqr();
            let a = -rho * poisson.ln();
            assert!((a - horocyclic_height(&d, r, theta)).abs() < 1e-12);
            assert!(a.abs() <= rho * r + 1e-12);
            min_a = min_a.min(a);
        }
        assert!((min_a + rho * r).abs() < 1e-9);
    }

    #[test]
    fn bounds_and_asymptotics() {
        let d = h3();
        let sweep: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&r| qtilde_bounds_ratio(&d, &KernelQuery::new(10.0, 0.5, r).unwrap(), &cfg()).unwrap())
            .collect();
        let (mx, mn) = sweep.iter().fold((f64::MIN, f64::MAX), |(a, b), &x| (a.max(x), b.min(x)));
        assert!(mx / mn <= 4.0, "{sweep:?}");
        assert!(qtilde_bounds_ratio(&d, &KernelQuery::new(0.5, 0.5, 0.5).unwrap(), &cfg()).is_err());
        let devs: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|&t| (q0_asymptotic_ratio(&d, &KernelQuery::new(t, 0.5, t).unwrap(), &cfg()).unwrap() - 1.0).abs())
            .collect();
        assert!(decreasing(&devs) && devs[3] <= 0.1, "{devs:?}");
        let devs: Vec<f64> = [8.0f64, 16.0, 32.0]
            .iter()
            .map(|&t| (q0_asymptotic_ratio(&d, &KernelQuery::new(t, 0.25, t.powf(1.2)).unwrap(), &cfg()).unwrap() - 1.0).abs())
            .collect();
        assert!(decreasing(&devs), "{devs:?}");
    }

    #[test]
    fn asymptotic_ratio_converges_on_h2() {
        let d = calibrated(Preset::H2).unwrap();
        let devs: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&t| (q0_asymptotic_ratio(&d, &KernelQuery::new(t, 0.5, t).unwrap(), &cfg()).unwrap() - 1.0).abs())
            .collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    }

    #[test]
    fn sup_norm_scaling_and_witness() {
        let d = h3();
        let mut scaled = vec![];
        for &t in &[5.0f64, 10.0, 20.0, 40.0] {
            let s = qtilde_sup_norm(&d, t, 0.5, &cfg()).unwrap();
            assert!(s.argmax > 0.0 && s.argmax < 64.0 * t);
            let witness = q0_kernel(&d, &KernelQuery::new(t, 0.5, t).unwrap(), &cfg()).unwrap().scale_exp(t);
            assert!(s.value.log_mag() - witness.log_mag() < 10f64.ln());
            scaled.push(s.value.to_f64() * t * t);
        }
        let (mx, mn) = scaled.iter().fold((f64::MIN, f64::MAX), |(a, b), &x| (a.max(x), b.min(x)));
        assert!(mx / mn <= 4.0, "{scaled:?}");
    }

    #[test]
    fn qtilde_is_a_probability_density() {
        let d = h3();
        for &(t, s) in &[(1.0, 0.5), (5.0, 0.25), (10.0, 0.75)] {
            let m = qtilde_mass(&d, t, s, &cfg()).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "t={t} σ={s}: {m}");
        }
    }

    #[test]
    fn sup_norm_of_core_matches_kernel_sup() {
        let d = h3();
        let t = 10.0;
        let grid = sup_grid(t, 64.0);
        let core = SRadialCore::new(
            RadialFunction::from_fn(grid, |r| q0_kernel(&d, &KernelQuery::new(t, 0.5, r).unwrap(), &cfg())).unwrap(),
        );
        let a = s_linf_norm(&d, &core).unwrap();
        let b = qtilde_sup_norm(&d, t, 0.5, &cfg()).unwrap().value.to_f64();
        assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn core_norms_trivial_cases() {
        let d = h3();
        let b = bump(1.0);
        let zero = SRadialCore::new(b.map(|_, _| LogValue::ZERO));
        assert_eq!(s_l1_norm(&d, &zero, &cfg()).unwrap(), 0.0);
        assert_eq!(s_linf_norm(&d, &zero).unwrap(), 0.0);
        let one = SRadialCore::new(b.clone());
        let three = SRadialCore::new(b.map(|_, v| v.scale(3.0)));
        let (n1, n3) = (s_l1_norm(&d, &one, &cfg()).unwrap(), s_l1_norm(&d, &three, &cfg()).unwrap());
        assert!((n3 / n1 - 3.0).abs() < 1e-12);
        assert!(s_linf_norm(&d, &one).unwrap() <= 1f64.exp());
    }

    #[test]
    fn reduction_matches_direct_2d_quadrature() {
        for p in [Preset::H2, Preset::H3] {
            let d = calibrated(p).unwrap();
            let b = bump(1.5);
            let core = SRadialCore::new(b.clone());
            let fast = s_l1_norm(&d, &core, &cfg()).unwrap();
            let slow = reduction2d_l1(&d, |r| b.eval(r).to_f64(), 1.5, &cfg()).unwrap();
            assert!((fast / slow - 1.0).abs() < 1e-4, "{p}: {fast} {slow}");
        }
    }

    #[test]
    fn mass_function_of_heat_kernel() {
        for p in [Preset::H2, Preset::H3] {
            let d = calibrated(p).unwrap();
            let grid = uniform_grid(30.0, 1500);
            let h1 = RadialFunction::from_fn(grid, |r| heat_kernel(&d, 1.0, r, &cfg())).unwrap();
            let m = mass_function_radial(&d, &h1, &cfg()).unwrap();
            let rho = d.rho_norm();
            assert!((m - (-rho * rho).exp()).abs() < 1e-6, "{p}: {m}");
        }
        let d = h3();
        let b = bump(1.0);
        let m = mass_function_radial(&d, &b, &cfg()).unwrap();
        let f = sft_forward(&d, &b, &[0.0, 0.1]).unwrap().values()[0];
        assert!((m / f - 1.0).abs() < 1e-8, "{m} {f}");
        assert_eq!(mass_function_radial(&d, &b.map(|_, _| LogValue::ZERO), &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn critical_annulus_captures_mass() {
        let d = h3();
        let ts = [10.0, 20.0, 40.0];
        let outs: Vec<f64> = ts.iter().map(|&t| qtilde_critical_mass(&d, t, 0.5, 0.5, &cfg()).unwrap().outside).collect();
        assert!(outs.windows(2).all(|w| w[1] < w[0]), "{outs:?}");
        assert!(qtilde_critical_mass(&d, 10.0, 0.5, 0.0, &cfg()).is_err());
        // the S-annulus ends where the X-annulus begins at the latest
        for &(t, eps) in &[(4.0f64, 0.5), (10.0, 0.3), (40.0, 0.5)] {
            assert!(t.powf(1.0 + eps) <= t.powf(2.0 - eps));
        }
    }
}
