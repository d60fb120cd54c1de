//! Tabulated radial and spectral functions, and integration over `[0, ∞)`.

use crate::error::{Error, Result};
use crate::numerics::{adaptive_quad_breaks, LogValue, QuadratureConfig};

/// A bi-K-invariant function sampled on a radius grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialFunction {
    grid: Vec<f64>,
    values: Vec<LogValue>,
    /// Log-linear slope used beyond the last node; `None` means zero there.
    tail: Option<f64>,
}

impl RadialFunction {
    pub fn new(grid: Vec<f64>, values: Vec<LogValue>, tail: Option<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::Domain("radial grid and values must match and hold ≥ 2 nodes".into()));
        }
        if grid[0] != 0.0 || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("radial grid must start at 0 and increase strictly".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("radial values must be finite".into()));
        }
        if tail.is_some_and(|s| !s.is_finite()) {
            return Err(Error::Domain("tail slope must be finite".into()));
        }
        Ok(RadialFunction { grid, values, tail })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> Result<LogValue>) -> Result<Self> {
        let values = grid.iter().map(|&r| f(r)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values, None)
    }

    pub fn with_tail(mut self, slope: f64) -> Self {
        self.tail = Some(slope);
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[LogValue] {
        &self.values
    }

    pub fn tail(&self) -> Option<f64> {
        self.tail
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    pub fn sup_abs(&self) -> LogValue {
        self.values.iter().map(|v| v.abs()).fold(LogValue::ZERO, |a, b| if b.log_mag() > a.log_mag() { b } else { a })
    }

    /// Cubic interpolation through the four nearest nodes; in log scale when
    /// those nodes share a sign.
    pub fn eval(&self, r: f64) -> LogValue {
        let n = self.grid.len();
        let last = self.r_max();
        if r > last {
            return match self.tail {
                Some(s) => self.values[n - 1].scale_exp(s * (r - last)),
                None => LogValue::ZERO,
            };
        }
        if r <= 0.0 {
            return self.values[0];
        }
        let k = self.grid.partition_point(|&x| x <= r).saturating_sub(1).min(n - 2);
        if n < 4 {
            let (a, b) = (self.grid[k], self.grid[k + 1]);
            let w = (r - a) / (b - a);
            return self.values[k].scale(1.0 - w) + self.values[k + 1].scale(w);
        }
        let s = k.saturating_sub(1).min(n - 4);
        let xs = &self.grid[s..s + 4];
        let vs = &self.values[s..s + 4];
        let lagrange = |ys: [f64; 4]| -> f64 {
            (0..4)
                .map(|j| {
                    let mut l = ys[j];
                    for m in 0..4 {
                        if m != j {
                            l *= (r - xs[m]) / (xs[j] - xs[m]);
                        }
                    }
                    l
                })
                .sum()
        };
        let sign = vs[0].sign();
        if sign != 0 && vs.iter().all(|v| v.sign() == sign) {
            let l = lagrange([0, 1, 2, 3].map(|j| vs[j].log_mag()));
            LogValue::new(sign, l)
        } else {
            let top = vs.iter().map(|v| v.log_mag()).fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return LogValue::ZERO;
            }
            let y = lagrange([0, 1, 2, 3].map(|j| vs[j].scale_exp(-top).to_f64()));
            LogValue::from_f64(y).scale_exp(top)
        }
    }

    /// Pointwise map of the values.
    pub fn map(&self, f: impl Fn(f64, LogValue) -> LogValue) -> Self {
        let values = self.grid.iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        RadialFunction { grid: self.grid.clone(), values, tail: self.tail }
    }

    /// CSV with columns `r,sign,log_mag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,sign,log_mag\n");
        for (r, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{:?},{},{:?}\n", r, v.sign(), v.log_mag()));
        }
        out
    }
}

/// A Weyl-invariant function of `λ ≥ 0` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFunction {
    lam_grid: Vec<f64>,
    values: Vec<f64>,
}

impl SpectralFunction {
    pub fn new(lam_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lam_grid.len() != values.len() || lam_grid.len() < 2 {
            return Err(Error::Domain("spectral grid and values must match and hold ≥ 2 nodes".into()));
        }
        if lam_grid[0] < 0.0 || lam_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("spectral grid must be nonnegative and increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("spectral values must be finite".into()));
        }
        Ok(SpectralFunction { lam_grid, values })
    }

    pub fn from_fn(lam_grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = lam_grid.iter().map(|&l| f(l)).collect();
        Self::new(lam_grid, values)
    }

    pub fn lam_grid(&self) -> &[f64] {
        &self.lam_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lam_max(&self) -> f64 {
        *self.lam_grid.last().expect("non-empty grid")
    }

    /// Pointwise product on a shared grid.
    pub fn product(&self, other: &SpectralFunction) -> Result<SpectralFunction> {
        if self.lam_grid != other.lam_grid {
            return Err(Error::Domain("spectral product needs identical grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self::new(self.lam_grid.clone(), values)
    }

    pub fn scaled(&self, c: f64) -> SpectralFunction {
        SpectralFunction { lam_grid: self.lam_grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    /// CSV with columns `lam,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lam,value\n");
        for (l, v) in self.lam_grid.iter().zip(&self.values) {
            out.push_str(&format!("{l:?},{v:?}\n"));
        }
        out
    }
}

/// Uniform grid on `[0, lam_max]` with `n` nodes.
pub fn uniform_grid(lam_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lam_max * i as f64 / (n - 1) as f64).collect()
}

/// Grid geometric on `[h/256, h]` and uniform with step `h` up to `lam_max`.
pub fn hybrid_grid(lam_max: f64, h: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut x = h / 256.0;
    while x < h {
        g.push(x);
        x *= 2.0;
    }
    let n = (lam_max / h).ceil() as usize;
    g.extend((1..=n).map(|i| i as f64 * h));
    g
}

/// Where a radial integrand lives.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialExtent {
    /// Breakpoints of the linear-variable panel (kinks, support edges, peaks).
    pub breaks: Vec<f64>,
    /// Radius beyond which the integral runs in `ln r`.
    pub log_from: f64,
    /// Truncation radius; beyond it a power-law tail is fitted.
    pub r_max: f64,
}

impl RadialExtent {
    pub fn new(breaks: Vec<f64>, log_from: f64, r_max: f64) -> Self {
        RadialExtent { breaks, log_from, r_max }
    }

    /// Support inside `[0, edge]`.
    pub fn compact(edge: f64) -> Self {
        RadialExtent { breaks: vec![], log_from: edge, r_max: edge }
    }
}

/// Truncated integral plus a fitted tail beyond `radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialIntegral {
    pub truncated: LogValue,
    pub tail: LogValue,
    pub radius: f64,
}

impl RadialIntegral {
    pub fn total(&self) -> LogValue {
        self.truncated + self.tail
    }

    /// True when the tail exceeds `1e-4` of the truncated part.
    pub fn under_truncated(&self) -> bool {
        self.tail.log_mag() - self.truncated.log_mag() > (1e-4f64).ln()
    }
}

/// `∫_0^∞ f(r) dr` for integrands that decay exponentially or like a power.
///
/// Runs linearly on `[0, log_from]`, in `ln r` beyond, stops once the
/// integrand has dropped `e^{-60}` below its peak, and otherwise fits
/// `A r^{-1-p}` at `r_max` for the remainder.
pub fn integrate_radial<F>(f: F, ext: &RadialExtent, cfg: &QuadratureConfig) -> Result<RadialIntegral>
where
    F: Fn(f64) -> Result<LogValue>,
{
    let r1 = ext.log_from.min(ext.r_max);
    let mut breaks = vec![0.0];
    breaks.extend(ext.breaks.iter().copied().filter(|&b| b > 0.0 && b < r1));
    breaks.push(r1);
    breaks.dedup();
    let lin = adaptive_quad_breaks(&f, &breaks, cfg).map_err(Error::in_panel("radial, linear part"))?;
    let mut total = lin.value;
    if ext.r_max <= r1 {
        return Ok(RadialIntegral { truncated: total, tail: LogValue::ZERO, radius: r1 });
    }
    // g(u) = f(e^u) e^u
    let g = |u: f64| -> Result<LogValue> { Ok(f(u.exp())?.scale_exp(u)) };
    let step = 0.5 * std::f64::consts::LN_2;
    let u0 = r1.ln();
    let u_max = ext.r_max.ln();
    let mut ubreaks = vec![u0];
    let mut peak = g(u0)?.log_mag();
    let mut prev = peak;
    let mut u = u0;
    let mut decayed = false;
    for b in ext.breaks.iter().filter(|&&b| b > r1 && b < ext.r_max) {
        peak = peak.max(g(b.ln())?.log_mag());
    }
    while u < u_max {
        u = (u + step).min(u_max);
        let v = g(u)?.log_mag();
        peak = peak.max(v);
        ubreaks.push(u);
        if v < peak - 60.0 && v < prev && ubreaks.len() > 4 {
            decayed = true;
            break;
        }
        prev = v;
    }
    for b in ext.breaks.iter().filter(|&&b| b > r1 && b.ln() < u) {
        ubreaks.push(b.ln());
    }
    ubreaks.sort_by(f64::total_cmp);
    ubreaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let lg = adaptive_quad_breaks(g, &ubreaks, cfg).map_err(Error::in_panel("radial, logarithmic part"))?;
    total = total + lg.value;
    let radius = u.exp();
    if decayed {
        return Ok(RadialIntegral { truncated: total, tail: LogValue::ZERO, radius });
    }
    let (ga, gb) = (g(u - step)?, g(u)?);
    if gb.is_zero() {
        return Ok(RadialIntegral { truncated: total, tail: LogValue::ZERO, radius });
    }
    let p = (ga.log_mag() - gb.log_mag()) / step;
    if !(p > 0.02) {
        return Err(Error::Integrability(format!(
            "integrand tail at r = {radius:.3e} decays like r^(-1-{p:.3}); not integrable in practice"
        )));
    }
    Ok(RadialIntegral { truncated: total, tail: gb.scale(1.0 / p), radius })
}
