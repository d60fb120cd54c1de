//! Log-gamma on the complex plane.
//!
//! Real arguments go through `statrs`; complex ones use the Stirling series
//! after shifting `|z| ≥ 12`, with reflection for `Re z < 1/2`.
//! Results are defined modulo `2πi`, which is all an exponent needs.

use num_complex::Complex64;
use std::f64::consts::PI;

const BERNOULLI_TERMS: [f64; 8] =
    [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0];

/// `Γ(x)` for real `x`.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Whether `z` sits on a pole of `Γ`.
pub fn is_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `ln Γ(z)`; returns `None` at the poles.
pub fn ln_gamma_c(z: Complex64) -> Option<Complex64> {
    if is_pole(z) {
        return None;
    }
    if z.re < 0.5 {
        let one = Complex64::new(1.0, 0.0);
        return Some(Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_c(one - z)?);
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 12.0 {
        shift += w.ln();
        w += 1.0;
    }
    Some(stirling(w) - shift)
}

fn stirling(z: Complex64) -> Complex64 {
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let mut acc = (z - 0.5) * z.ln() - z + half_ln_2pi;
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut p = inv;
    for c in BERNOULLI_TERMS {
        acc += p * c;
        p *= inv2;
    }
    acc
}

/// `ln sin(πz)` without overflow for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    let i = Complex64::i();
    let e = (2.0 * PI * i * z).exp();
    -i * PI * z + (Complex64::new(1.0, 0.0) - e).ln() + Complex64::new(0.5, 0.0).ln() + i * (PI / 2.0)
}
