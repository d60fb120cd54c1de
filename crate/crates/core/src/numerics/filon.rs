//! Filon-type sine transform of tabulated data.
//!
//! On each grid interval the data is replaced by the cubic through the four
//! nearest nodes, and `∫ p(λ) sin(λr) dλ` is done exactly through the moments
//! `∫_0^1 u^k e^{iωu} du`.

use super::NumericsError;
use crate::spectral::SpectralFunction;
use num_complex::Complex64;

/// `∫_0^1 u^k e^{iωu} du` for `k = 0..=3`.
fn moments(omega: f64) -> [Complex64; 4] {
    let i = Complex64::i();
    if omega.abs() < 1.0 {
        let mut m = [Complex64::new(0.0, 0.0); 4];
        for (k, mk) in m.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut j = 0usize;
            loop {
                let add = term / (k + j + 1) as f64;
                *mk += add;
                if add.norm() < 1e-18 {
                    break;
                }
                j += 1;
                term *= i * omega / j as f64;
            }
        }
        m
    } else {
        let e = (i * omega).exp();
        let iw = i * omega;
        let m0 = (e - 1.0) / iw;
        let m1 = (e - m0) / iw;
        let m2 = (e - 2.0 * m1) / iw;
        let m3 = (e - 3.0 * m2) / iw;
        [m0, m1, m2, m3]
    }
}

/// Monomial coefficients in `u` of the cubic through `(us[j], ys[j])`.
fn cubic_coeffs(us: &[f64; 4], ys: &[f64; 4]) -> [f64; 4] {
    let mut c = [0.0; 4];
    for j in 0..4 {
        // Lagrange basis polynomial j expanded in powers of u.
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        for m in 0..4 {
            if m == j {
                continue;
            }
            denom *= us[j] - us[m];
            let mut next = [0.0; 4];
            for d in 0..3 {
                next[d + 1] += poly[d];
                next[d] -= us[m] * poly[d];
            }
            poly = next;
        }
        for d in 0..4 {
            c[d] += ys[j] * poly[d] / denom;
        }
    }
    c
}

/// `∫_0^{lam_max} g(λ) sin(λr) dλ` over the grid of `g`.
pub fn sine_transform(g: &SpectralFunction, r: f64) -> Result<f64, NumericsError> {
    let lam = g.lam_grid();
    let val = g.values();
    let n = lam.len();
    if n < 4 {
        return Err(NumericsError::Domain("sine transform needs at least 4 nodes".into()));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let span = lam[n - 1] - lam[0];
    let max_h = lam.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let limit = std::f64::consts::PI / (4.0 * r.abs());
    if max_h > limit {
        let required = (span / limit).ceil() as usize + 1;
        return Err(NumericsError::Resolution { required, have: n });
    }
    let mut acc = 0.0;
    for k in 0..n - 1 {
        let s = k.saturating_sub(1).min(n - 4);
        let (a, h) = (lam[k], lam[k + 1] - lam[k]);
        let us = [0, 1, 2, 3].map(|j| (lam[s + j] - a) / h);
        let ys = [0, 1, 2, 3].map(|j| val[s + j]);
        let c = cubic_coeffs(&us, &ys);
        let m = moments(r * h);
        let inner: Complex64 = (0..4).map(|d| m[d] * c[d]).sum();
        acc += h * (Complex64::from_polar(1.0, r * a) * inner).im;
    }
    Ok(acc)
}

/// `∫ g(λ) dλ` of the same piecewise cubic.
pub fn cubic_integral(g: &SpectralFunction) -> f64 {
    let lam = g.lam_grid();
    let val = g.values();
    let n = lam.len();
    if n < 4 {
        return lam.windows(2).zip(val.windows(2)).map(|(l, v)| 0.5 * (l[1] - l[0]) * (v[0] + v[1])).sum();
    }
    (0..n - 1)
        .map(|k| {
            let s = k.saturating_sub(1).min(n - 4);
            let (a, h) = (lam[k], lam[k + 1] - lam[k]);
            let us = [0, 1, 2, 3].map(|j| (lam[s + j] - a) / h);
            let ys = [0, 1, 2, 3].map(|j| val[s + j]);
            let c = cubic_coeffs(&us, &ys);
            h * (c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: impl Fn(f64) -> f64, lam_max: f64, n: usize) -> SpectralFunction {
        let grid: Vec<f64> = (0..n).map(|i| lam_max * i as f64 / (n - 1) as f64).collect();
        let vals = grid.iter().map(|&l| f(l)).collect();
        SpectralFunction::new(grid, vals).unwrap()
    }

    #[test]
    fn zero_radius_gives_zero() {
        let g = table(|l| (-l * l).exp(), 8.0, 200);
        assert_eq!(sine_transform(&g, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn laplace_transform_of_exponential() {
        let g = table(|l| (-l).exp(), 45.0, 4001);
        let v = sine_transform(&g, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-8, "{v}");
    }

    #[test]
    fn exact_for_cubics_at_any_frequency() {
        let p = |l: f64| 1.0 - 0.3 * l + 0.2 * l * l - 0.05 * l * l * l;
        let dp = |l: f64| -0.3 + 0.4 * l - 0.15 * l * l;
        let ddp = |l: f64| 0.4 - 0.3 * l;
        let dddp = -0.3;
        let r: f64 = 0.7;
        // repeated integration by parts
        let prim = |l: f64| {
            let (s, c) = (l * r).sin_cos();
            -p(l) * c / r + dp(l) * s / r.powi(2) + ddp(l) * c / r.powi(3) - dddp * s / r.powi(4)
        };
        let g = table(p, 2.0, 9);
        let a = sine_transform(&g, r).unwrap();
        assert!((a - (prim(2.0) - prim(0.0))).abs() < 1e-13);
    }

    #[test]
    fn cubic_integral_is_exact_for_cubics() {
        let g = table(|l| 1.0 + l * l * l, 2.0, 7);
        assert!((cubic_integral(&g) - 6.0).abs() < 1e-13);
    }

    #[test]
    fn linear_in_the_data() {
        let g1 = table(|l| (-l).exp(), 30.0, 1201);
        let g2 = table(|l| (-(l * l)).exp() * l, 30.0, 1201);
        let mix = table(|l| 2.0 * (-l).exp() - 3.0 * (-(l * l)).exp() * l, 30.0, 1201);
        let r = 3.3;
        let lhs = sine_transform(&mix, r).unwrap();
        let rhs = 2.0 * sine_transform(&g1, r).unwrap() - 3.0 * sine_transform(&g2, r).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_reports_required_nodes() {
        let g = table(|l| (-l).exp(), 40.0, 50);
        match sine_transform(&g, 10.0) {
            Err(NumericsError::Resolution { required, .. }) => assert!(required > 500),
            other => panic!("{other:?}"),
        }
    }
}
