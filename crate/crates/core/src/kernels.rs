//! Heat kernel `h_t` and fractional Poisson kernel `Q_t^σ` on `X = G/K`.
//!
//! `Q_t^σ` is available by subordination of the heat kernel, by contour
//! inversion of its multiplier, and in closed form on `H³`.

use crate::error::{check_sigma, domain, Error, Result};
use crate::numerics::bessel::ln_subordinator_multiplier;
use crate::numerics::gamma::ln_gamma;
use crate::numerics::{adaptive_quad_breaks, bessel_k, bessel_k_scaled, LogValue, NumericsError, QuadratureConfig};
use crate::space::{asymptotic_constants, b_on_imaginary_axis, cartan_density, SpaceDescriptor};
use crate::spectral::{integrate_radial, invert, ln_phi0, HeatMultiplier, PoissonMultiplier, RadialExtent};
use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

/// Largest radius the spectral route accepts; beyond it `ln δ(r)` alone
/// carries rounding errors above `1e-8`.
pub const SPECTRAL_MAX_RADIUS: f64 = 1e8;

/// Outer radius of radial mass integrals; the remainder is a fitted power tail.
pub(crate) const MASS_RADIUS: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelQuery {
    pub t: f64,
    pub sigma: f64,
    pub r: f64,
}

impl KernelQuery {
    pub fn new(t: f64, sigma: f64, r: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("time must be positive, got {t}")));
        }
        check_sigma(sigma)?;
        if !(r >= 0.0 && r.is_finite()) {
            return Err(domain(format!("radius must be non-negative, got {r}")));
        }
        Ok(KernelQuery { t, sigma, r })
    }

    fn z(&self) -> f64 {
        self.t.hypot(self.r)
    }
}

/// How a kernel value was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Route {
    ClosedForm,
    Spectral,
    Subordination,
    Reduction2d,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::ClosedForm => "closed",
            Route::Spectral => "spectral",
            Route::Subordination => "subordination",
            Route::Reduction2d => "reduction2d",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "closed" | "closed-form" => Ok(Route::ClosedForm),
            "spectral" => Ok(Route::Spectral),
            "subordination" => Ok(Route::Subordination),
            "reduction2d" => Ok(Route::Reduction2d),
            other => Err(Error::Parse(format!("unknown route {other:?}"))),
        }
    }
}

/// One output row: `t,sigma,r,log_value,route`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelRow {
    pub query: KernelQuery,
    pub value: LogValue,
    pub route: Route,
}

impl KernelRow {
    pub const CSV_HEADER: &'static str = "t,sigma,r,log_value,route";

    pub fn csv_line(&self) -> String {
        let q = self.query;
        format!("{:?},{:?},{:?},{:?},{}", q.t, q.sigma, q.r, self.value.log_mag(), self.route)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be positive, got {t}")))
    }
}

/// `(4πt)^{-3/2} e^{-t-r²/4t} r/sinh r`, without the `e^{-t}` when `shifted`.
fn h3_heat(t: f64, r: f64, shifted: bool) -> LogValue {
    let ln_phi0 = if r == 0.0 { 0.0 } else { r.ln() - crate::space::ln_sinh(r) };
    let spectral_gap = if shifted { 0.0 } else { t };
    LogValue::from_log(-1.5 * (4.0 * PI * t).ln() - spectral_gap - r * r / (4.0 * t) + ln_phi0)
}

/// Heat kernel `h_t(r)`; closed form on `H³`, contour inversion elsewhere.
pub fn heat_kernel(desc: &SpaceDescriptor, t: f64, r: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    check_time(t)?;
    if desc.is_h3() && r >= 0.0 {
        return Ok(h3_heat(t, r, false));
    }
    heat_kernel_spectral(desc, t, r, cfg)
}

/// Heat kernel by inversion of `e^{-t(λ²+|ρ|²)}` on every space.
pub fn heat_kernel_spectral(desc: &SpaceDescriptor, t: f64, r: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    check_time(t)?;
    invert(desc, &HeatMultiplier::new(desc, t), r, cfg)
}

/// `h_t(r)` over `t^{-n/2}(1+t+r)^{(m_α+m_2α)/2-1} φ₀(r) e^{-|ρ|²t-r²/4t}`.
pub fn heat_bounds_ratio(desc: &SpaceDescriptor, t: f64, r: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let h = heat_kernel(desc, t, r, cfg)?;
    let n = desc.dim_n() as f64;
    let p = (desc.m_alpha() + desc.m_2alpha()) as f64 / 2.0 - 1.0;
    let rho = desc.rho_norm();
    let ln_bound = -n / 2.0 * t.ln() + p * (1.0 + t + r).ln() + ln_phi0(desc, r)? - rho * rho * t - r * r / (4.0 * t);
    Ok((h.log_mag() - ln_bound).exp())
}

/// `h_t(r)` over `C₂ t^{-ν/2} 𝐛(-ir/2t)^{-1} φ₀(r) e^{-|ρ|²t-r²/4t}`.
pub fn heat_asymptotic_ratio(desc: &SpaceDescriptor, t: f64, r: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let h = heat_kernel(desc, t, r, cfg)?;
    let c2 = asymptotic_constants(desc, 0.5)?.c2;
    let nu = desc.dim_nu() as f64;
    let rho = desc.rho_norm();
    let b = b_on_imaginary_axis(desc, r / (2.0 * t))?;
    let ln_asym = c2.ln() - nu / 2.0 * t.ln() - b.ln() + ln_phi0(desc, r)? - rho * rho * t - r * r / (4.0 * t);
    Ok((h.log_mag() - ln_asym).exp())
}

/// `ln[t^{2σ} / (4^σ Γ(σ))]`.
fn ln_subordination_prefactor(t: f64, sigma: f64) -> f64 {
    2.0 * sigma * t.ln() - 2.0 * sigma * LN_2 - ln_gamma(sigma)
}

/// `t^{2σ}/(4^σΓ(σ)) ∫_0^∞ u^{-1-σ} h_u(r) e^{-t²/4u} [e^{|ρ|²u}] du`.
///
/// Integrated in `ln u`; the three panel groups `u < u*/8`, `u*/8..8u*`
/// and `u > 8u*` around the saddle `u* = √(t²+r²)/2|ρ|` are reported
/// separately on failure.
pub(crate) fn subordinate(desc: &SpaceDescriptor, q: &KernelQuery, shifted: bool, cfg: &QuadratureConfig) -> Result<LogValue> {
    desc.require_numeric()?;
    let KernelQuery { t, sigma, r } = *q;
    let z = q.z();
    if z * z < 1e-6 {
        return Err(domain(format!("subordination needs t² + r² ≥ 1e-6, got {}", z * z)));
    }
    let rho = desc.rho_norm();
    let u_star = z / (2.0 * rho);
    let pre = ln_subordination_prefactor(t, sigma);
    let h3 = desc.is_h3();
    let heat = |u: f64| -> Result<LogValue> {
        if h3 {
            return Ok(h3_heat(u, r, shifted));
        }
        let m = HeatMultiplier { t: u, rho: if shifted { 0.0 } else { rho } };
        invert(desc, &m, r, cfg)
    };
    let g = |v: f64| -> Result<LogValue> {
        let u = v.exp();
        Ok(heat(u)?.scale_exp(pre - sigma * v - t * t / (4.0 * u)))
    };
    let v_star = u_star.ln();
    let (lo, hi) = (v_star - 8f64.ln(), v_star + 8f64.ln());
    let step = 0.5 * LN_2;
    let mut peak = g(v_star)?.log_mag();
    let mut nodes = vec![v_star, lo, hi];
    for dir in [-1.0, 1.0] {
        let mut v = v_star;
        let mut prev = peak;
        let mut done = false;
        for _ in 0..600 {
            v += dir * step;
            let val = g(v)?.log_mag();
            peak = peak.max(val);
            nodes.push(v);
            let past = if dir < 0.0 { v < lo } else { v > hi };
            if past && val < peak - 60.0 && val <= prev {
                done = true;
                break;
            }
            prev = val;
        }
        if !done {
            return Err(Error::Panel {
                panel: if dir < 0.0 { "subordination J1" } else { "subordination J3" },
                source: NumericsError::Divergent { detail: format!("integrand not decaying near u = {:.3e}", v.exp()) },
            });
        }
    }
    // the panel edges must survive deduplication exactly
    nodes.retain(|&v| (v - lo).abs() > 1e-9 && (v - hi).abs() > 1e-9);
    nodes.extend([lo, hi]);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let groups: [(&'static str, Vec<f64>); 3] = [
        ("subordination J1", nodes.iter().copied().filter(|&v| v <= lo).collect()),
        ("subordination J2", nodes.iter().copied().filter(|&v| v >= lo && v <= hi).collect()),
        ("subordination J3", nodes.iter().copied().filter(|&v| v >= hi).collect()),
    ];
    let mut total = LogValue::ZERO;
    for (panel, breaks) in groups {
        if breaks.len() < 2 {
            continue;
        }
        let part = adaptive_quad_breaks(&g, &breaks, cfg).map_err(Error::in_panel(panel))?;
        total = total + part.value;
    }
    Ok(total)
}

/// `Q_t^σ(r)` by subordination of the heat kernel.
pub fn q_subordination(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<LogValue> {
    subordinate(desc, q, false, cfg)
}

/// Spectral transform of `Q_t^σ`: `(2^{1-σ}/Γ(σ)) w^σ K_σ(w)`, `w = t√(λ²+|ρ|²)`.
pub fn q_multiplier(desc: &SpaceDescriptor, t: f64, sigma: f64, lam: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_time(t)?;
    check_sigma(sigma)?;
    let rho = desc.rho_norm();
    let w = t * (lam * lam + rho * rho).sqrt();
    Ok(ln_subordinator_multiplier(sigma, Complex64::new(w, 0.0), cfg)?.re.exp())
}

pub(crate) fn require_resolvable(r: f64) -> Result<()> {
    if r > SPECTRAL_MAX_RADIUS {
        return Err(Error::Panel {
            panel: "spectral inversion",
            source: NumericsError::Domain(format!("radius {r:e} beyond resolvable range {SPECTRAL_MAX_RADIUS:e}")),
        });
    }
    Ok(())
}

/// `Q_t^σ(r)` by contour inversion of [`q_multiplier`].
pub fn q_spectral(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<LogValue> {
    require_resolvable(q.r)?;
    let m = PoissonMultiplier { t: q.t, sigma: q.sigma, rho: desc.rho_norm(), cfg: *cfg };
    invert(desc, &m, q.r, cfg)
}

/// `Q_t^σ(r)` on `H³`: `t^{2σ}/(4^σΓ(σ)) φ₀ (4π)^{-3/2} 2 (z/2)^{-σ-3/2} K_{σ+3/2}(z)`.
pub fn q_closed_form(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<LogValue> {
    if !desc.is_h3() {
        return Err(domain("closed-form Poisson kernel exists on H3 only"));
    }
    let z = q.z();
    let nu = q.sigma + 1.5;
    let k = bessel_k(nu, z, cfg).map_err(|e| Error::Panel { panel: "Bessel K", source: e })?;
    let ln = ln_subordination_prefactor(q.t, q.sigma) + ln_phi0(desc, q.r)? - 1.5 * (4.0 * PI).ln() + LN_2 - nu * (z / 2.0).ln();
    Ok(k.scale_exp(ln))
}

/// `Q_t^σ(r)` by the fastest available route.
pub fn q_kernel(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<LogValue> {
    if desc.is_h3() {
        q_closed_form(desc, q, cfg)
    } else {
        q_spectral(desc, q, cfg)
    }
}

/// `ln φ₀(r + δ) - ln φ₀(r)` on H³ for large `r`, with `ln sinh x = x - ln 2 + ln(1 - e^{-2x})`.
pub(crate) fn ln_phi0_ratio_h3(r: f64, delta: f64) -> f64 {
    let x = r + delta;
    (delta / r).ln_1p() - delta - (-(-2.0 * x).exp()).ln_1p() + (-(-2.0 * r).exp()).ln_1p()
}

/// `ln Q_t^σ(r + δ) - ln Q_t^σ(r)`, free of the `O(ε r)` cancellation of
/// subtracting logarithms once `r` and `r + δ` are large.
pub fn q_log_ratio(desc: &SpaceDescriptor, q: &KernelQuery, delta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let x = q.r + delta;
    let far = KernelQuery::new(q.t, q.sigma, x)?;
    if !desc.is_h3() || q.r.min(x) < 20.0 {
        return Ok(q_kernel(desc, &far, cfg)?.log_mag() - q_kernel(desc, q, cfg)?.log_mag());
    }
    let (z1, z2) = (q.z(), far.z());
    let dz = delta * (q.r + x) / (z1 + z2);
    let nu = q.sigma + 1.5;
    let ek = |z| bessel_k_scaled(nu, z, cfg).map_err(|e| Error::Panel { panel: "Bessel K", source: e });
    Ok(ln_phi0_ratio_h3(q.r, delta) + (ek(z2)? / ek(z1)?).ln() - dz - nu * (dz / z1).ln_1p())
}

/// `Q_t^σ(r)` over `t^{2σ}/(4^σΓ(σ)) z^{-ℓ/2-1/2-σ-|Σ|} φ₀(r) e^{-|ρ|z}`, `z = √(t²+r²)`.
pub fn q_bounds_ratio(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<f64> {
    let z = q.z();
    if z < 1.0 {
        return Err(domain(format!("bounds need t² + r² ≥ 1, got {}", z * z)));
    }
    let v = q_kernel(desc, q, cfg)?;
    let (l, nr) = (desc.rank() as f64, desc.reduced_roots() as f64);
    let ln_bound = ln_subordination_prefactor(q.t, q.sigma) + (-l / 2.0 - 0.5 - q.sigma - nr) * z.ln() + ln_phi0(desc, q.r)?
        - desc.rho_norm() * z;
    Ok((v.log_mag() - ln_bound).exp())
}

/// `Q_t^σ(r)` over `C(σ) t^{2σ} 𝐛(-i|ρ|r/z)^{-1} z^{-ℓ/2-σ-|Σ|-1/2} φ₀(r) e^{-|ρ|z}`.
pub fn q_asymptotic_ratio(desc: &SpaceDescriptor, q: &KernelQuery, cfg: &QuadratureConfig) -> Result<f64> {
    let v = q_kernel(desc, q, cfg)?;
    let z = q.z();
    let rho = desc.rho_norm();
    let c = asymptotic_constants(desc, q.sigma)?.c_sigma;
    let (l, nr) = (desc.rank() as f64, desc.reduced_roots() as f64);
    let b = b_on_imaginary_axis(desc, rho * q.r / z)?;
    let ln_asym =
        c.ln() + 2.0 * q.sigma * q.t.ln() - b.ln() + (-l / 2.0 - q.sigma - nr - 0.5) * z.ln() + ln_phi0(desc, q.r)? - rho * z;
    Ok((v.log_mag() - ln_asym).exp())
}

/// A supremum over a radial grid and where it is attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupNorm {
    pub value: LogValue,
    pub argmax: f64,
}

/// Radii `0` and `t·2^{k/4}/256` up to `scale · t`.
pub(crate) fn sup_grid(t: f64, scale: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut r = t / 256.0;
    while r <= scale * t {
        g.push(r);
        r *= 2f64.powf(0.25);
    }
    g
}

pub(crate) fn grid_sup(grid: &[f64], f: impl Fn(f64) -> Result<LogValue>) -> Result<SupNorm> {
    let mut best = SupNorm { value: LogValue::ZERO, argmax: 0.0 };
    for &r in grid {
        let v = f(r)?.abs();
        if v.cmp_value(&best.value).is_gt() {
            best = SupNorm { value: v, argmax: r };
        }
    }
    Ok(best)
}

/// `‖Q_t^σ‖_∞` over a radial grid through the origin.
pub fn q_sup_norm(desc: &SpaceDescriptor, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<SupNorm> {
    if !(t > 1.0) {
        return Err(domain(format!("sup-norm estimate needs t > 1, got {t}")));
    }
    check_sigma(sigma)?;
    grid_sup(&sup_grid(t, 64.0), |r| q_kernel(desc, &KernelQuery { t, sigma, r }, cfg))
}

/// `c_s ∫_0^∞ f(r) δ(r) dr` with a power-tail remainder beyond [`MASS_RADIUS`].
pub(crate) fn radial_mass_of(
    desc: &SpaceDescriptor,
    f: impl Fn(f64) -> Result<LogValue>,
    breaks: Vec<f64>,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mut breaks = breaks;
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let ext = RadialExtent::new(breaks, 1.0, MASS_RADIUS);
    let q = integrate_radial(|r| Ok(f(r)? * cartan_density(desc, r)), &ext, cfg)?;
    Ok(q.total().to_f64() * desc.c_surface())
}

/// `∫_X h_t`.
pub fn heat_mass(desc: &SpaceDescriptor, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let peak = 2.0 * desc.rho_norm() * t;
    radial_mass_of(desc, |r| heat_kernel(desc, t, r, cfg), vec![0.5, peak, peak + 4.0 * t.sqrt()], cfg)
}

/// `∫_X Q_t^σ`.
pub fn q_mass(desc: &SpaceDescriptor, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    KernelQuery::new(t, sigma, 0.0)?;
    radial_mass_of(desc, |r| q_kernel(desc, &KernelQuery { t, sigma, r }, cfg), vec![0.5, t, t * t], cfg)
}

/// Mass inside a radial annulus and its complement in a unit total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionMass {
    pub inside: f64,
    pub outside: f64,
}

/// `c_s ∫_a^b f δ dr` in `ln r`.
pub(crate) fn annulus_mass(
    desc: &SpaceDescriptor,
    f: impl Fn(f64) -> Result<LogValue>,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let pieces = ((lb - la) / (0.5 * LN_2)).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=pieces).map(|k| la + (lb - la) * k as f64 / pieces as f64).collect();
    let q = adaptive_quad_breaks(
        |u: f64| -> Result<LogValue> {
            let r = u.exp();
            Ok(f(r)? * cartan_density(desc, r).scale_exp(u))
        },
        &breaks,
        cfg,
    )
    .map_err(Error::in_panel("annulus mass"))?;
    Ok(q.value.to_f64() * desc.c_surface())
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// Mass of `Q_t^σ` inside and outside the annulus `t^{2-ε} ≤ r ≤ t^{2+ε}`.
pub fn critical_region_mass(desc: &SpaceDescriptor, t: f64, sigma: f64, eps: f64, cfg: &QuadratureConfig) -> Result<RegionMass> {
    check_eps(eps)?;
    KernelQuery::new(t, sigma, 0.0)?;
    let (a, b) = (t.powf(2.0 - eps), t.powf(2.0 + eps));
    if !(a > 1.0) {
        return Err(domain(format!("critical region needs t^(2-eps) > 1, got {a}")));
    }
    let inside = annulus_mass(desc, |r| q_kernel(desc, &KernelQuery { t, sigma, r }, cfg), a, b, cfg)?;
    Ok(RegionMass { inside, outside: 1.0 - inside })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::de_quad_semiinfinite;
    use crate::space::Preset;
    use crate::spectral::calibrated;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn h3() -> SpaceDescriptor {
        calibrated(Preset::H3).unwrap()
    }

    fn flat(xs: &[f64]) -> f64 {
        let max = xs.iter().copied().fold(f64::MIN, f64::max);
        let min = xs.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }

    #[test]
    fn log_ratio_is_stable_and_antisymmetric() {
        let d = h3();
        let q = |r| KernelQuery::new(40.0, 0.5, r).unwrap();
        for (r, delta) in [(25.0, -0.7), (60.0, 0.9), (3e3, -1.0)] {
            let direct = q_kernel(&d, &q(r + delta), &cfg()).unwrap().log_mag() - q_kernel(&d, &q(r), &cfg()).unwrap().log_mag();
            let stable = q_log_ratio(&d, &q(r), delta, &cfg()).unwrap();
            assert!((stable - direct).abs() < 1e-11 * (1.0 + r), "r={r}: {stable} vs {direct}");
        }
        for r in [19.5, 1e5, 1e8] {
            let there = q_log_ratio(&d, &q(r), 0.8, &cfg()).unwrap();
            let back = q_log_ratio(&d, &q(r + 0.8), -0.8, &cfg()).unwrap();
            assert!((there + back).abs() < 1e-13, "r={r}");
        }
        // far out the ratio tends to e^{-2δ}
        let far = q_log_ratio(&d, &q(1e8), 0.8, &cfg()).unwrap();
        assert!((far + 1.6).abs() < 1e-7, "{far}");
    }

    #[test]
    fn query_rejects_bad_parameters() {
        assert!(KernelQuery::new(0.0, 0.5, 1.0).is_err());
        assert!(KernelQuery::new(1.0, 1.0, 1.0).is_err());
        assert!(KernelQuery::new(1.0, 0.5, -1.0).is_err());
        assert!(KernelQuery::new(1.0, 0.5, 0.0).is_ok());
    }

    #[test]
    fn heat_closed_form_matches_generic_route() {
        let d = h3();
        let v = heat_kernel(&d, 1.0, 1.0, &cfg()).unwrap().to_f64();
        assert!((v - 5.47e-3).abs() < 1e-5, "{v}");
        for &t in &[0.5, 2.0] {
            for &r in &[0.1, 1.0, 7.0, 20.0] {
                let a = heat_kernel(&d, t, r, &cfg()).unwrap();
                let b = heat_kernel_spectral(&d, t, r, &cfg()).unwrap();
                assert!(a.rel_diff(&b) < 1e-8, "t={t} r={r}: {}", a.rel_diff(&b));
                assert_eq!(a.sign(), 1);
            }
        }
    }

    #[test]
    fn heat_has_unit_mass() {
        let d = h3();
        for &t in &[0.5, 1.0, 5.0] {
            let m = heat_mass(&d, t, &cfg()).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "t={t}: {m}");
        }
    }

    #[test]
    fn heat_bounds_ratio_is_flat() {
        let d = h3();
        // on H³ the bound is exact up to (4π)^{-3/2}
        let at_one = heat_bounds_ratio(&d, 1.0, 1.0, &cfg()).unwrap();
        assert!((at_one / (4.0 * PI).powf(-1.5) - 1.0).abs() < 1e-12, "{at_one}");
        let sweep: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&t| heat_bounds_ratio(&d, t, t, &cfg()).unwrap()).collect();
        assert!(flat(&sweep) <= 3.0, "{sweep:?}");
    }

    #[test]
    fn heat_asymptotic_ratio_tends_to_one() {
        let d = h3();
        let devs: Vec<f64> =
            [5.0, 10.0, 20.0, 40.0].iter().map(|&t| (heat_asymptotic_ratio(&d, t, t, &cfg()).unwrap() - 1.0).abs()).collect();
        assert!(devs[3] <= 0.05);
        assert!(devs.windows(2).all(|w| w[1] <= w[0].max(1e-9)), "{devs:?}");
        assert!((heat_asymptotic_ratio(&d, 20.0, 1.0, &cfg()).unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn heat_asymptotic_ratio_converges_on_h2() {
        let d = calibrated(Preset::H2).unwrap();
        let devs: Vec<f64> =
            [5.0, 10.0, 20.0].iter().map(|&t| (heat_asymptotic_ratio(&d, t, t, &cfg()).unwrap() - 1.0).abs()).collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    }

    #[test]
    fn poisson_multiplier_at_half_is_exponential() {
        let d = h3();
        for &lam in &[0.0, 0.3, 2.0, 11.0] {
            let m = q_multiplier(&d, 3.0, 0.5, lam, &cfg()).unwrap();
            let e = (-3.0 * (lam * lam + 1.0f64).sqrt()).exp();
            assert!((m / e - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn poisson_multiplier_matches_direct_subordination() {
        let d = h3();
        let (t, s, lam) = (2.0, 0.3, 0.7);
        let k = lam * lam + 1.0;
        let direct = de_quad_semiinfinite(
            |u: f64| Ok::<_, NumericsError>(((-1.0 - s) * u.ln() - u * k - t * t / (4.0 * u)).exp()),
            0.0,
            &cfg().with_rel_tol(1e-13),
        )
        .unwrap()
        .value
            * ln_subordination_prefactor(t, s).exp();
        let m = q_multiplier(&d, t, s, lam, &cfg()).unwrap();
        assert!((m / direct - 1.0).abs() < 1e-9, "{m} {direct}");
        let vals: Vec<f64> = (0..20).map(|i| q_multiplier(&d, t, s, 0.25 * i as f64, &cfg()).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn three_routes_agree_on_h3() {
        let d = h3();
        for &sigma in &[0.25, 0.5] {
            for &r in &[0.0, 0.5, 5.0, 25.0] {
                let q = KernelQuery::new(5.0, sigma, r).unwrap();
                let c = q_closed_form(&d, &q, &cfg()).unwrap();
                let s = q_subordination(&d, &q, &cfg()).unwrap();
                let p = q_spectral(&d, &q, &cfg()).unwrap();
                assert!(c.rel_diff(&s) < 1e-9, "σ={sigma} r={r}: {}", c.rel_diff(&s));
                assert!(c.rel_diff(&p) < 1e-6, "σ={sigma} r={r}: {}", c.rel_diff(&p));
            }
        }
    }

    #[test]
    fn half_order_kernel_is_poisson_semigroup() {
        let d = h3();
        for &r in &[0.3, 4.0] {
            let q = KernelQuery::new(2.0, 0.5, r).unwrap();
            let a = q_spectral(&d, &q, &cfg()).unwrap();
            let b = q_closed_form(&d, &q, &cfg()).unwrap();
            assert!(a.rel_diff(&b) < 1e-8, "{}", a.rel_diff(&b));
        }
    }

    #[test]
    fn routes_agree_on_h2() {
        let d = calibrated(Preset::H2).unwrap();
        for &r in &[0.5, 5.0, 25.0] {
            let q = KernelQuery::new(5.0, 0.5, r).unwrap();
            let s = q_subordination(&d, &q, &cfg()).unwrap();
            let p = q_spectral(&d, &q, &cfg()).unwrap();
            assert!(s.rel_diff(&p) < 1e-5, "r={r}: {}", s.rel_diff(&p));
        }
    }

    #[test]
    fn poisson_kernel_has_unit_mass() {
        let d = h3();
        for &(t, s) in &[(1.0, 0.25), (5.0, 0.5), (10.0, 0.75)] {
            let m = q_mass(&d, t, s, &cfg()).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "t={t} σ={s}: {m}");
        }
    }

    #[test]
    fn poisson_bounds_ratio_is_flat() {
        let d = h3();
        let q = KernelQuery::new(10.0, 0.5, 100.0).unwrap();
        assert!((0.1..=10.0).contains(&q_bounds_ratio(&d, &q, &cfg()).unwrap()));
        let sweep: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&r| q_bounds_ratio(&d, &KernelQuery::new(10.0, 0.5, r).unwrap(), &cfg()).unwrap())
            .collect();
        assert!(flat(&sweep) <= 3.0, "{sweep:?}");
        assert!(q_bounds_ratio(&d, &KernelQuery::new(0.5, 0.5, 0.5).unwrap(), &cfg()).is_err());
    }

    #[test]
    fn poisson_asymptotic_ratio_tends_to_one() {
        let d = h3();
        let devs = |sigma: f64, ts: &[f64], r: fn(f64) -> f64| -> Vec<f64> {
            ts.iter()
                .map(|&t| (q_asymptotic_ratio(&d, &KernelQuery::new(t, sigma, r(t)).unwrap(), &cfg()).unwrap() - 1.0).abs())
                .collect()
        };
        let a = devs(0.5, &[4.0, 8.0, 16.0, 32.0], |t| t * t);
        assert!(a.windows(2).all(|w| w[1] < w[0]) && a[3] <= 0.1, "{a:?}");
        let b = devs(0.25, &[10.0, 20.0, 40.0], |_| 0.0);
        assert!(b.windows(2).all(|w| w[1] < w[0]), "{b:?}");
    }

    #[test]
    fn sup_norm_scales_and_sits_at_origin() {
        let d = h3();
        let sigma = 0.5;
        let scaled: Vec<f64> = [2.0, 5.0, 10.0, 20.0, 50.0]
            .iter()
            .map(|&t: &f64| {
                let s = q_sup_norm(&d, t, sigma, &cfg()).unwrap();
                assert_eq!(s.argmax, 0.0);
                (s.value.log_mag() - (sigma - 2.0) * t.ln() + t).exp()
            })
            .collect();
        assert!(flat(&scaled) <= 4.0, "{scaled:?}");
        assert!(q_sup_norm(&d, 1.0, sigma, &cfg()).is_err());
    }

    #[test]
    fn critical_region_mass_decays() {
        let d = h3();
        let (sigma, eps) = (0.5, 0.5);
        let ts = [10.0, 20.0, 30.0];
        let outs: Vec<f64> = ts.iter().map(|&t| critical_region_mass(&d, t, sigma, eps, &cfg()).unwrap().outside).collect();
        assert!(outs.windows(2).all(|w| w[1] < w[0]), "{outs:?}");
        let slope = (outs[2].ln() - outs[0].ln()) / (ts[2].ln() - ts[0].ln());
        assert!(slope <= -0.8 * sigma * eps, "{slope}");
        assert!(critical_region_mass(&d, 10.0, sigma, 1.5, &cfg()).is_err());
    }
}
