//! Modified Bessel function of the second kind, fractional order.

use super::gamma::ln_gamma;
use super::logvalue::LogValue;
use super::quad::{de_quad_semiinfinite, QuadratureConfig};
use super::NumericsError;
use num_complex::Complex64;
use std::f64::consts::PI;

/// `K_σ(z)` for real `z > 0` from `∫_0^∞ e^{-z cosh u} cosh(σu) du`.
pub fn bessel_k(sigma: f64, z: f64, cfg: &QuadratureConfig) -> Result<LogValue, NumericsError> {
    Ok(LogValue::from_f64(bessel_k_scaled(sigma, z, cfg)?).scale_exp(-z))
}

/// `e^z K_σ(z)` for real `z > 0`.
///
/// The variable is rescaled to the width of the peak at `u = 0`, so large
/// `z` costs no more than small `z`.
pub fn bessel_k_scaled(sigma: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64, NumericsError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(NumericsError::Domain(format!("bessel_k needs z > 0, got {z}")));
    }
    if !sigma.is_finite() {
        return Err(NumericsError::Domain(format!("bessel_k order {sigma}")));
    }
    if let Some(v) = k_scaled_asymptotic(sigma, z) {
        return Ok(v);
    }
    if z >= 2.0 {
        if let Some(v) = k_scaled_steed(sigma.abs(), z) {
            return Ok(v);
        }
    }
    k_scaled_quadrature(sigma, z, cfg)
}

/// Steed's continued fraction for `e^z K_μ(z)`, `|μ| ≤ ½`, then upward recurrence in the order.
fn k_scaled_steed(nu: f64, z: f64) -> Option<f64> {
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;
    let a1 = 0.25 - mu * mu;
    let (mut a, mut b) = (-a1, 2.0 * (1.0 + z));
    let mut d = 1.0 / b;
    let (mut h, mut delh) = (d, d);
    let (mut q1, mut q2) = (0.0, 1.0);
    let (mut q, mut c) = (a1, a1);
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.abs() < 1e-17 * s.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let mut k_mu = (PI / (2.0 * z)).sqrt() / s;
    let mut k_next = k_mu * (mu + z + 0.5 - a1 * h) / z;
    for i in 1..=steps as usize {
        let k = (mu + i as f64) * (2.0 / z) * k_next + k_mu;
        k_mu = k_next;
        k_next = k;
    }
    Some(k_mu)
}

fn k_scaled_quadrature(sigma: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64, NumericsError> {
    let s = 1.0 / z.max(1.0).sqrt();
    let q = de_quad_semiinfinite(
        |v: f64| {
            let u = v * s;
            // cosh u - 1 = 2 sinh²(u/2), accurate near zero.
            let c1 = 2.0 * (0.5 * u).sinh().powi(2);
            let su = (sigma * u).abs();
            let ln_cosh = su + (-2.0 * su).exp().ln_1p() - std::f64::consts::LN_2;
            Ok::<_, NumericsError>((ln_cosh - z * c1).exp())
        },
        0.0,
        cfg,
    )?;
    Ok(q.value * s)
}

/// Hankel expansion `√(π/2z) Σ a_k(σ) z^{-k}`, if it reaches full precision.
fn k_scaled_asymptotic(sigma: f64, z: f64) -> Option<f64> {
    if z < 25.0 {
        return None;
    }
    let mu = 4.0 * sigma * sigma;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for k in 1..60 {
        let next = term * (mu - ((2 * k - 1) as f64).powi(2)) / (k as f64 * 8.0 * z);
        if next == 0.0 || next.abs() < 1e-17 * sum.abs() {
            return Some((PI / (2.0 * z)).sqrt() * sum);
        }
        if next.abs() > term.abs() {
            return None;
        }
        term = next;
        sum += term;
    }
    None
}

/// `ln K_σ(z)` for complex `z` with `Re z > 0`, modulo `2πi`.
///
/// Uses `K_σ(z) = √(π/2z) e^{-z} / Γ(σ+½) ∫_0^∞ e^{-v} v^{σ-½} (1 + v/2z)^{σ-½} dv`.
pub fn ln_bessel_k_complex(sigma: f64, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64, NumericsError> {
    if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
        return Err(NumericsError::Domain(format!("complex bessel_k needs Re z > 0, got {z}")));
    }
    if !(sigma > -0.5) {
        return Err(NumericsError::Domain(format!("complex bessel_k order {sigma} ≤ -1/2")));
    }
    let prefix = 0.5 * (Complex64::new(PI / 2.0, 0.0) / z).ln() - z - ln_gamma(sigma + 0.5);
    let p = sigma - 0.5;
    if p == 0.0 {
        return Ok(prefix);
    }
    let inv2z = (2.0 * z).inv();
    let q = de_quad_semiinfinite(
        |v: f64| {
            let l = p * (Complex64::new(1.0, 0.0) + v * inv2z).ln() + p * v.ln() - v;
            Ok::<_, NumericsError>(l.exp())
        },
        0.0,
        cfg,
    )?;
    Ok(prefix + q.value.ln())
}

/// `ln[(2^{1-σ}/Γ(σ)) w^σ K_σ(w)]`, the subordinated multiplier; equals `-w` at `σ = ½`.
pub fn ln_subordinator_multiplier(sigma: f64, w: Complex64, cfg: &QuadratureConfig) -> Result<Complex64, NumericsError> {
    if w.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if sigma == 0.5 {
        return Ok(-w);
    }
    ln_subordinator_multiplier_bessel(sigma, w, cfg)
}

/// [`ln_subordinator_multiplier`] through the Bessel function for every `σ`.
pub fn ln_subordinator_multiplier_bessel(sigma: f64, w: Complex64, cfg: &QuadratureConfig) -> Result<Complex64, NumericsError> {
    let c = (1.0 - sigma) * 2f64.ln() - ln_gamma(sigma);
    Ok(c + sigma * w.ln() + ln_bessel_k_complex(sigma, w, cfg)?)
}
