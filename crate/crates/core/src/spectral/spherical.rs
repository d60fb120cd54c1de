//! Spherical functions, the Harish-Chandra expansion and the Plancherel density.

use crate::error::{domain, Result};
use crate::numerics::gamma::ln_gamma;
use crate::numerics::{adaptive_quad_breaks, QuadratureConfig};
use crate::space::{ln_b_function, SpaceDescriptor};
use num_complex::Complex64;

/// Radius from which the expansion `Φ_λ` converges quickly enough to be used.
pub const SERIES_RADIUS: f64 = 0.5;
/// Below this `|λ|` the expansion cancels too much to evaluate `φ_λ`.
pub const SERIES_MIN_LAM: f64 = 0.05;

fn cfg_spherical() -> QuadratureConfig {
    QuadratureConfig::default().with_rel_tol(1e-13)
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `φ_λ(r)` for real `λ`.
pub fn spherical_function(desc: &SpaceDescriptor, lam: f64, r: f64) -> Result<f64> {
    desc.require_numeric()?;
    if !(r >= 0.0) || !lam.is_finite() {
        return Err(domain(format!("spherical function at lam={lam}, r={r}")));
    }
    if desc.is_h3() {
        return Ok(h3_spherical(Complex64::new(lam, 0.0), r).re);
    }
    if r >= SERIES_RADIUS && lam.abs() >= SERIES_MIN_LAM {
        return spherical_from_series(desc, lam.abs(), r);
    }
    let v = spherical_reduction(desc, Complex64::new(lam, 0.0), r)?;
    // |φ_λ| ≤ φ_0 ≤ (1+r) e^{-ρr}
    let tol = 1e-10 * (1.0 + r) * (-desc.rho_norm() * r).exp();
    if v.im.abs() > tol {
        return Err(domain(format!("spherical function has imaginary part {:e} at lam={lam}, r={r}", v.im)));
    }
    Ok(v.re)
}

/// `φ_λ(r)` for complex `λ`; entire in `λ`.
pub fn spherical_function_c(desc: &SpaceDescriptor, lam: Complex64, r: f64) -> Result<Complex64> {
    desc.require_numeric()?;
    if desc.is_h3() {
        return Ok(h3_spherical(lam, r));
    }
    spherical_reduction(desc, lam, r)
}

fn h3_spherical(lam: Complex64, r: f64) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let x = lam * r;
    // sin(x)/x with its series near zero
    let sinc = if x.norm() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    sinc * (r / r.sinh())
}

/// The angular reduction in the variable `tan(θ/2) = e^u`:
/// `φ_λ(r) = Z^{-1} ∫ cosh(v+r/2)^{iλ-ρ} cosh(v-r/2)^{-iλ-ρ} dv`.
pub fn spherical_reduction(desc: &SpaceDescriptor, lam: Complex64, r: f64) -> Result<Complex64> {
    let (v, scale) = reduction_scaled(desc, lam, r)?;
    Ok(v * scale.exp())
}

/// The reduction as `(value, ln scale)` with the value of order one.
fn reduction_scaled(desc: &SpaceDescriptor, lam: Complex64, r: f64) -> Result<(Complex64, f64)> {
    desc.require_numeric()?;
    if r == 0.0 {
        return Ok((Complex64::new(1.0, 0.0), 0.0));
    }
    let rho = desc.rho_norm();
    let n = desc.dim_n() as f64;
    let ln_z = 0.5 * std::f64::consts::PI.ln() + ln_gamma((n - 1.0) / 2.0) - ln_gamma(n / 2.0);
    let il = Complex64::i() * lam;
    let h = 0.5 * r;
    let expo = |v: f64| (il - rho) * ln_cosh(v + h) + (-il - rho) * ln_cosh(v - h);
    let reach = h + 40.0 / rho;
    let samples = [-h, 0.0, h, -reach, reach];
    let ref_log = samples.iter().map(|&v| expo(v).re).fold(f64::NEG_INFINITY, f64::max);
    let mut breaks = vec![-reach, -h, h, reach];
    // split long oscillating stretches
    let pieces = ((lam.re.abs() * r) / 8.0).ceil().clamp(1.0, 256.0) as usize;
    for k in 1..pieces {
        breaks.push(-h + r * k as f64 / pieces as f64);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = adaptive_quad_breaks(|v: f64| Ok::<_, crate::error::Error>((expo(v) - ref_log).exp()), &breaks, &cfg_spherical())?;
    Ok((q.value, ref_log - ln_z))
}

/// `ln φ_0(r)`, finite for every radius.
pub fn ln_phi0(desc: &SpaceDescriptor, r: f64) -> Result<f64> {
    desc.require_numeric()?;
    if !(r >= 0.0) {
        return Err(domain(format!("ln_phi0 at r = {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    if desc.is_h3() {
        return Ok(r.ln() - crate::space::ln_sinh(r));
    }
    let (v, scale) = reduction_scaled(desc, Complex64::new(0.0, 0.0), r)?;
    Ok(v.re.ln() + scale)
}

/// The reduction at fixed `r` as a cosine sum `φ_λ(r) = Σ w_j cos(λ u_j)`,
/// accurate for real `|λ| ≤ lam_max`.
#[derive(Clone, Debug)]
pub struct SphericalRule {
    nodes: Vec<(f64, f64)>,
}

impl SphericalRule {
    const POINTS: usize = 16;
    /// Phase, in radians, one panel may carry.
    const PHASE_PER_PANEL: f64 = 8.0;

    pub fn new(desc: &SpaceDescriptor, r: f64, lam_max: f64) -> Self {
        if r == 0.0 {
            return SphericalRule { nodes: vec![(0.0, 1.0)] };
        }
        let rho = desc.rho_norm();
        let n = desc.dim_n() as f64;
        let ln_z = 0.5 * std::f64::consts::PI.ln() + ln_gamma((n - 1.0) / 2.0) - ln_gamma(n / 2.0);
        let h = 0.5 * r;
        let reach = 40.0 / rho;
        let phase = |v: f64| ln_cosh(v + h) - ln_cosh(v - h);
        // right half; the integrand is symmetric under v → -v with u → -u
        let mut edges = vec![0.0, h];
        let mut x = 0.25;
        while x < reach {
            edges.push(h + x);
            x *= 2.0;
        }
        edges.push(h + reach);
        let gl = crate::numerics::GaussLegendre::get(Self::POINTS);
        let mut nodes = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let swing = lam_max * (phase(b) - phase(a)).abs();
            let pieces = ((swing / Self::PHASE_PER_PANEL).ceil() as usize).max(((b - a) / 2.0).ceil() as usize).max(1);
            for k in 0..pieces {
                let lo = a + (b - a) * k as f64 / pieces as f64;
                let hi = a + (b - a) * (k + 1) as f64 / pieces as f64;
                for (v, wt) in gl.mapped(lo, hi) {
                    let env = -rho * (ln_cosh(v + h) + ln_cosh(v - h)) - ln_z;
                    // the mirrored node doubles the weight
                    nodes.push((phase(v), 2.0 * wt * env.exp()));
                }
            }
        }
        SphericalRule { nodes }
    }

    pub fn eval(&self, lam: f64) -> f64 {
        self.nodes.iter().map(|&(u, w)| w * (lam * u).cos()).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `φ_λ(r)` from the expansion, given `ln c(λ)`; real `λ ≥` [`SERIES_MIN_LAM`], `r ≥` [`SERIES_RADIUS`].
pub(crate) fn spherical_from_series_with(desc: &SpaceDescriptor, ln_c: Complex64, lam: f64, r: f64) -> Result<f64> {
    Ok(2.0 * (ln_c + ln_hc_phi(desc, Complex64::new(lam, 0.0), r)?).exp().re)
}

/// True where the expansion is used for real `λ`.
pub(crate) fn series_applies(lam: f64, r: f64) -> bool {
    r >= SERIES_RADIUS && lam.abs() >= SERIES_MIN_LAM
}

/// `φ_λ(r) = 2 Re[c(λ) Φ_λ(r)]` for real `λ > 0`.
fn spherical_from_series(desc: &SpaceDescriptor, lam: f64, r: f64) -> Result<f64> {
    let l = Complex64::new(lam, 0.0);
    let ln_c = -ln_inv_c(desc, l)?;
    Ok(2.0 * (ln_c + ln_hc_phi(desc, l, r)?).exp().re)
}

/// `ln(1/c(λ)) = ln(iλ) - ln b(λ)`.
pub fn ln_inv_c(desc: &SpaceDescriptor, lam: Complex64) -> Result<Complex64> {
    let z = lam / desc.alpha_norm();
    let base = (Complex64::i() * lam * desc.alpha_norm()).ln();
    if desc.is_h3() {
        return Ok(base);
    }
    Ok(base - ln_b_function(desc, z)?)
}

/// `ln(1/c(-λ))`, analytic in the upper half-plane.
pub fn ln_inv_c_minus(desc: &SpaceDescriptor, lam: Complex64) -> Result<Complex64> {
    ln_inv_c(desc, -lam)
}

/// `ln Φ_λ(r)` from the expansion `e^{(iλ-ρ)r} Σ Γ_k e^{-2kr}`.
pub fn ln_hc_phi(desc: &SpaceDescriptor, lam: Complex64, r: f64) -> Result<Complex64> {
    if !(r > 0.0) {
        return Err(domain(format!("expansion of Φ needs r > 0, got {r}")));
    }
    let rho = desc.rho_norm();
    let il = Complex64::i() * lam;
    let lead = (il - rho) * r;
    if desc.is_h3() {
        return Ok(lead - (-(-2.0 * r).exp()).ln_1p());
    }
    let q = (-2.0 * r).exp();
    let ma = desc.m_alpha() as f64;
    let m2a = desc.m_2alpha() as f64;
    let mu = |j: usize| il - rho - 2.0 * j as f64;
    // running sums Σ Γ_i μ_i over all i, and split by parity
    let one = Complex64::new(1.0, 0.0);
    let mut all = mu(0);
    let mut parity = [mu(0), Complex64::new(0.0, 0.0)];
    let mut sum = one;
    let mut qk = 1.0;
    let mut quiet = 0;
    for k in 1..20_000usize {
        let denom = 4.0 * k as f64 * (k as f64 - il);
        let g = -(2.0 * ma * all + 4.0 * m2a * if k >= 2 { parity[k % 2] } else { Complex64::new(0.0, 0.0) }) / denom;
        qk *= q;
        let term = g * qk;
        sum += term;
        all += g * mu(k);
        parity[k % 2] += g * mu(k);
        if term.norm() < 1e-17 * sum.norm() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(lead + sum.ln());
            }
        } else {
            quiet = 0;
        }
    }
    Err(domain(format!("expansion of Φ did not converge at r = {r}")))
}

/// `|c(λ)|^{-2}` up to the calibration constant: `λ² / |b(λ)|²`.
pub fn plancherel_density(desc: &SpaceDescriptor, lam: f64) -> Result<f64> {
    Ok(ln_plancherel_density(desc, lam)?.exp())
}

/// `ln |c(λ)|^{-2}`; `-∞` at `λ = 0`.
pub fn ln_plancherel_density(desc: &SpaceDescriptor, lam: f64) -> Result<f64> {
    desc.require_rank_one()?;
    if lam == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let a = desc.alpha_norm() * lam.abs();
    let lb = if desc.is_h3() { 0.0 } else { ln_b_function(desc, Complex64::new(lam / desc.alpha_norm(), 0.0))?.re };
    Ok(2.0 * a.ln() - 2.0 * lb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Preset;
    use std::f64::consts::PI;

    /// `∫_0^π (cosh r - sinh r cos θ)^{iλ-ρ} sin^{n-2}θ dθ`, normalized at `r = 0`.
    fn angular_oracle(n: u32, lam: f64, r: f64) -> f64 {
        let rho = (n as f64 - 1.0) / 2.0;
        let k = 20_000;
        let integrand = |th: f64| {
            let base = r.cosh() - r.sinh() * th.cos();
            let l = base.ln();
            let mag = (-rho * l).exp() * th.sin().powi(n as i32 - 2);
            Complex64::from_polar(mag, lam * l)
        };
        let norm = |f: &dyn Fn(f64) -> Complex64| -> Complex64 {
            // composite Simpson
            let h = PI / k as f64;
            let mut s = f(0.0) + f(PI);
            for i in 1..k {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let num = norm(&integrand);
        let den = norm(&|th: f64| Complex64::new(th.sin().powi(n as i32 - 2), 0.0));
        (num / den).re
    }

    #[test]
    fn h3_ground_state_at_two() {
        let d = Preset::H3.descriptor();
        let v = spherical_function(&d, 0.0, 2.0).unwrap();
        assert!((v - 2.0 / 2f64.sinh()).abs() < 1e-15);
        assert!((angular_oracle(3, 0.0, 2.0) - v).abs() < 1e-8);
    }

    #[test]
    fn reduction_matches_angular_oracle() {
        for p in Preset::ALL {
            let d = p.descriptor();
            for &(lam, r) in &[(0.7, 2.0), (0.0, 1.3), (3.0, 0.4), (0.02, 5.0)] {
                let v = spherical_reduction(&d, Complex64::new(lam, 0.0), r).unwrap();
                let o = angular_oracle(d.dim_n(), lam, r);
                assert!((v.re - o).abs() < 1e-9, "{p} lam={lam} r={r}: {} vs {o}", v.re);
                assert!(v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn series_route_matches_reduction() {
        for p in [Preset::H2, Preset::H4, Preset::H5] {
            let d = p.descriptor();
            for &(lam, r) in &[(0.3, 0.6), (1.7, 2.0), (6.0, 4.0), (0.06, 9.0)] {
                let a = spherical_function(&d, lam, r).unwrap();
                let b = spherical_reduction(&d, Complex64::new(lam, 0.0), r).unwrap().re;
                assert!((a - b).abs() < 1e-9 * (-d.rho_norm() * r).exp() * (1.0 + r), "{p} {lam} {r}: {a} {b}");
            }
        }
    }

    #[test]
    fn cosine_rule_matches_adaptive_reduction() {
        for p in [Preset::H2, Preset::H3, Preset::H5] {
            let d = p.descriptor();
            for &r in &[0.01, 0.3, 1.0, 4.0] {
                let rule = SphericalRule::new(&d, r, 60.0);
                for &lam in &[0.0, 0.7, 13.0, 59.0] {
                    let a = rule.eval(lam);
                    let b = spherical_reduction(&d, Complex64::new(lam, 0.0), r).unwrap().re;
                    let scale = (1.0 + r) * (-d.rho_norm() * r).exp();
                    assert!((a - b).abs() < 1e-12 * scale, "{p} r={r} lam={lam}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn normalized_and_even() {
        for p in Preset::ALL {
            let d = p.descriptor();
            for &lam in &[0.0, 0.4, 2.5, 11.0] {
                assert_eq!(spherical_function(&d, lam, 0.0).unwrap(), 1.0);
                for &r in &[0.2, 1.0, 3.0] {
                    let a = spherical_function(&d, lam, r).unwrap();
                    let b = spherical_function(&d, -lam, r).unwrap();
                    assert!((a - b).abs() < 1e-12, "{p}");
                }
            }
        }
    }

    #[test]
    fn imaginary_rho_gives_one() {
        for p in Preset::ALL {
            let d = p.descriptor();
            let v = spherical_function_c(&d, Complex64::new(0.0, d.rho_norm()), 1.7).unwrap();
            assert!((v - 1.0).norm() < 1e-11, "{p}: {v}");
        }
    }

    #[test]
    fn h3_expansion_is_exact() {
        let d = Preset::H3.descriptor();
        let lam = Complex64::new(1.3, 0.4);
        let r = 0.8;
        let expected = (Complex64::i() * lam * r).exp() / (2.0 * r.sinh());
        assert!((ln_hc_phi(&d, lam, r).unwrap().exp() - expected).norm() < 1e-14);
    }

    #[test]
    fn generic_recurrence_reproduces_h3() {
        // the same recurrence with m_α = 2 must sum to 1/(1 - e^{-2r})
        let d = SpaceDescriptor::derive_invariants(2, 0, 1.0).unwrap();
        let mut e = d.clone();
        assert!(e.is_h3());
        e = e.uncalibrated();
        let lam = Complex64::new(0.9, 0.3);
        let v = ln_hc_phi(&e, lam, 1.1).unwrap();
        let w = (Complex64::i() * lam - 1.0) * 1.1 - (-(-2.2f64).exp()).ln_1p();
        assert!((v - w).norm() < 1e-14);
    }

    #[test]
    fn h2_ground_state_approach_is_logarithmic() {
        // on H² the large-radius form of φ₀ is off by a relative 2 ln 2 / r
        let d = Preset::H2.descriptor();
        for r in [40.0, 80.0] {
            let exact = spherical_function(&d, 0.0, r).unwrap();
            let asym = crate::space::phi0_asymptotic(&d, r).unwrap().to_f64();
            let dev = (asym / exact - 1.0).abs();
            assert!((dev * r / (2.0 * 2f64.ln()) - 1.0).abs() < 0.15, "r={r}: {dev}");
        }
    }

    #[test]
    fn ln_phi0_stays_finite_far_out() {
        let h3 = Preset::H3.descriptor();
        assert!((ln_phi0(&h3, 2.0).unwrap() - (2.0 / 2f64.sinh()).ln()).abs() < 1e-15);
        for p in [Preset::H2, Preset::H4] {
            let d = p.descriptor();
            let near = ln_phi0(&d, 3.0).unwrap();
            assert!((near - spherical_function(&d, 0.0, 3.0).unwrap().ln()).abs() < 1e-12);
            // φ_0(r) ~ C₁ r e^{-ρr}
            let far = ln_phi0(&d, 1e4).unwrap();
            let asym = crate::space::phi0_asymptotic(&d, 1e4).unwrap().log_mag();
            assert!((far - asym).abs() < 1e-3, "{p}: {far} {asym}");
        }
    }

    #[test]
    fn density_shapes() {
        let h3 = Preset::H3.descriptor();
        assert_eq!(plancherel_density(&h3, 0.0).unwrap(), 0.0);
        assert!((plancherel_density(&h3, 2.5).unwrap() - 6.25).abs() < 1e-12);
        let h2 = Preset::H2.descriptor();
        let lam: f64 = 1.3;
        let exact = lam * (PI * lam).tanh() * PI;
        assert!((plancherel_density(&h2, lam).unwrap() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn density_log_slope_at_large_lambda() {
        for p in Preset::ALL {
            let d = p.descriptor();
            let (a, b) = (400.0f64, 800.0f64);
            let s = (ln_plancherel_density(&d, b).unwrap() - ln_plancherel_density(&d, a).unwrap()) / (b / a).ln();
            let expected = (d.m_alpha() + d.m_2alpha()) as f64;
            assert!((s - expected).abs() < 1e-3, "{p}: {s}");
        }
    }
}
