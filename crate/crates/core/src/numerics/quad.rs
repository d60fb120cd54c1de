//! Quadrature: adaptive Gauss-Kronrod, exp-sinh for half-lines, Gauss-Legendre.
//!
//! All rules are generic over [`QuadValue`] so the same code integrates real,
//! complex and log-domain integrands.

use super::logvalue::LogValue;
use super::NumericsError;
use num_complex::Complex64;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    /// Absolute floor on the error, as a natural log.
    pub abs_tol_log: f64,
    pub max_depth: u32,
    pub de_levels: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rel_tol: 1e-10, abs_tol_log: -745.0, max_depth: 30, de_levels: 10 }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.rel_tol > 0.0) || self.max_depth < 1 || self.de_levels < 1 {
            return Err(NumericsError::Domain(format!(
                "invalid quadrature config: rel_tol={} max_depth={} de_levels={}",
                self.rel_tol, self.max_depth, self.de_levels
            )));
        }
        Ok(())
    }
}

/// Process-wide counters, read by the CLI run manifest.
pub mod stats {
    use super::*;

    static EVALS: AtomicU64 = AtomicU64::new(0);
    static DEPTH_HITS: AtomicU64 = AtomicU64::new(0);

    pub(crate) fn add_evals(n: usize) {
        EVALS.fetch_add(n as u64, AtomicOrdering::Relaxed);
    }

    pub(crate) fn add_depth_hit() {
        DEPTH_HITS.fetch_add(1, AtomicOrdering::Relaxed);
    }

    #[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
    pub struct Snapshot {
        pub evaluations: u64,
        pub depth_hits: u64,
    }

    pub fn snapshot() -> Snapshot {
        Snapshot { evaluations: EVALS.load(AtomicOrdering::Relaxed), depth_hits: DEPTH_HITS.load(AtomicOrdering::Relaxed) }
    }
}

/// Values a quadrature rule can accumulate.
pub trait QuadValue: Copy + Send + Sync {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, w: f64) -> Self;
    /// `ln |self|`, `-∞` at zero.
    fn log_abs(&self) -> f64;
    fn finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn log_abs(&self) -> f64 {
        self.abs().ln()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn log_abs(&self) -> f64 {
        self.norm().ln()
    }
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl QuadValue for LogValue {
    fn zero() -> Self {
        LogValue::ZERO
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, w: f64) -> Self {
        LogValue::scale(&self, w)
    }
    fn log_abs(&self) -> f64 {
        self.log_mag()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

/// Result of a quadrature with its diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature<T> {
    pub value: T,
    /// `ln` of the estimated absolute error.
    pub log_err: f64,
    pub evals: usize,
    /// True when some panel hit `max_depth` before meeting tolerance.
    pub depth_hit: bool,
}

impl<T: QuadValue> Quadrature<T> {
    pub fn rel_err(&self) -> f64 {
        (self.log_err - self.value.log_abs()).exp()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    log_err: f64,
    depth: u32,
}

fn gk15<T, E, F>(f: &mut F, a: f64, b: f64) -> Result<(T, f64), E>
where
    T: QuadValue,
    E: From<NumericsError>,
    F: FnMut(f64) -> Result<T, E>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = T::zero();
    let mut g = T::zero();
    for i in 0..8 {
        let xs: &[f64] = if i == 7 { &[c] } else { &[c - h * XGK[i], c + h * XGK[i]] };
        for &x in xs {
            let v = f(x)?;
            if !v.finite() {
                return Err(NumericsError::NonFinite { x }.into());
            }
            k = k.add(v.scale(WGK[i]));
            if i % 2 == 1 {
                g = g.add(v.scale(WG[i / 2]));
            }
        }
    }
    stats::add_evals(15);
    let k = k.scale(h);
    let g = g.scale(h);
    Ok((k, k.sub(g).log_abs()))
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(PartialEq)]
struct Key(f64, usize);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0).then(o.1.cmp(&self.1))
    }
}

/// Adaptive G7/K15 over `[a, b]`.
pub fn adaptive_quad<T, E, F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Quadrature<T>, E>
where
    T: QuadValue,
    E: From<NumericsError>,
    F: FnMut(f64) -> Result<T, E>,
{
    adaptive_quad_breaks(f, &[a, b], cfg)
}

/// Adaptive G7/K15 starting from the panels delimited by `breaks`.
pub fn adaptive_quad_breaks<T, E, F>(mut f: F, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Quadrature<T>, E>
where
    T: QuadValue,
    E: From<NumericsError>,
    F: FnMut(f64) -> Result<T, E>,
{
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1]) || !w[1].is_finite() || !w[0].is_finite()) {
        return Err(NumericsError::Domain(format!("invalid quadrature breaks {breaks:?}")).into());
    }
    let mut panels: Vec<Panel<T>> = Vec::new();
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1])?;
        heap.push(Key(e, panels.len()));
        panels.push(Panel { a: w[0], b: w[1], value: v, log_err: e, depth: 0 });
    }
    let mut live: Vec<bool> = vec![true; panels.len()];
    let mut depth_hit = false;
    let max_panels = 2000usize.max(breaks.len() * 4);
    loop {
        let total = panels.iter().zip(&live).filter(|(_, &l)| l).fold(T::zero(), |acc, (p, _)| acc.add(p.value));
        let err = log_sum_exp(panels.iter().zip(&live).filter(|(_, &l)| l).map(|(p, _)| p.log_err));
        let target = (cfg.rel_tol.ln() + total.log_abs()).max(cfg.abs_tol_log);
        if err <= target || err == f64::NEG_INFINITY {
            return Ok(finish(total, err, panels.len(), depth_hit));
        }
        let Some(Key(_, idx)) = heap.pop() else {
            return Ok(finish(total, err, panels.len(), depth_hit));
        };
        let p = &panels[idx];
        if p.depth >= cfg.max_depth || panels.len() >= max_panels {
            depth_hit = true;
            stats::add_depth_hit();
            if heap.is_empty() || panels.len() >= max_panels {
                return Ok(finish(total, err, panels.len(), depth_hit));
            }
            continue;
        }
        let (a, b, d) = (p.a, p.b, p.depth);
        let m = 0.5 * (a + b);
        live[idx] = false;
        for (lo, hi) in [(a, m), (m, b)] {
            let (v, e) = gk15(&mut f, lo, hi)?;
            heap.push(Key(e, panels.len()));
            panels.push(Panel { a: lo, b: hi, value: v, log_err: e, depth: d + 1 });
            live.push(true);
        }
    }
}

fn finish<T: QuadValue>(value: T, log_err: f64, n_panels: usize, depth_hit: bool) -> Quadrature<T> {
    Quadrature { value, log_err, evals: n_panels * 15, depth_hit }
}

/// Exp-sinh quadrature of `∫_a^∞ f`, substituting `x = a + exp(π/2·sinh τ)`.
///
/// The integrand should decay on a scale of order one; rescale otherwise.
pub fn de_quad_semiinfinite<T, E, F>(mut f: F, a: f64, cfg: &QuadratureConfig) -> Result<Quadrature<T>, E>
where
    T: QuadValue,
    E: From<NumericsError>,
    F: FnMut(f64) -> Result<T, E>,
{
    const TAU_LO: f64 = -6.0;
    const TAU_HI: f64 = 5.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut evals = 0usize;
    let term = |tau: f64, f: &mut F| -> Result<T, E> {
        let e = (half_pi * tau.sinh()).exp();
        let w = half_pi * tau.cosh() * e;
        let x = a + e;
        if !x.is_finite() || w == 0.0 {
            return Ok(T::zero());
        }
        let v = f(x)?;
        if !v.finite() {
            return Err(NumericsError::NonFinite { x }.into());
        }
        Ok(v.scale(w))
    };
    // Level 0 with unit step; every later level adds the odd midpoints.
    let mut sum = T::zero();
    let mut tail_hi = f64::NEG_INFINITY;
    let mut peak = f64::NEG_INFINITY;
    let n_lo = TAU_LO as i64;
    let n_hi = TAU_HI as i64;
    for k in n_lo..=n_hi {
        let v = term(k as f64, &mut f)?;
        evals += 1;
        peak = peak.max(v.log_abs());
        if k == n_hi {
            tail_hi = v.log_abs();
        }
        sum = sum.add(v);
    }
    let mut h = 1.0;
    let mut estimate = sum;
    let mut log_err = f64::INFINITY;
    for _level in 1..=cfg.de_levels {
        h *= 0.5;
        let n = ((TAU_HI - TAU_LO) / h).round() as i64;
        let mut k = 1;
        while k < n {
            let tau = TAU_LO + k as f64 * h;
            let v = term(tau, &mut f)?;
            evals += 1;
            peak = peak.max(v.log_abs());
            sum = sum.add(v);
            k += 2;
        }
        let next = sum.scale(h);
        log_err = next.sub(estimate).log_abs();
        estimate = next;
        let target = (cfg.rel_tol.ln() + estimate.log_abs()).max(cfg.abs_tol_log);
        if log_err <= target && _level >= 3 {
            break;
        }
    }
    stats::add_evals(evals);
    if tail_hi > peak - 25.0 && peak.is_finite() {
        return Err(NumericsError::Divergent {
            detail: format!("tail sample at x≈e^{:.1} not decaying", half_pi * TAU_HI.sinh()),
        }
        .into());
    }
    let depth_hit = log_err > (cfg.rel_tol.ln() + estimate.log_abs()).max(cfg.abs_tol_log);
    if depth_hit {
        stats::add_depth_hit();
    }
    Ok(Quadrature { value: estimate, log_err, evals, depth_hit })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn build(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Cached rule with `n` points.
    pub fn get(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry(n).or_insert_with(|| Box::leak(Box::new(GaussLegendre::build(n))))
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<T: QuadValue>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T {
        stats::add_evals(self.nodes.len());
        self.mapped(a, b).fold(T::zero(), |acc, (x, w)| acc.add(f(x).scale(w)))
    }
}
