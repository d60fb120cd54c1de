//! Long-time convergence experiments: `v(t) - M Q_t^σ` on `X`, its analogue
//! on `S`, the translated Dirac counterexample and the ratio limit.

use crate::distinguished::{q0_kernel, q0_log_ratio};
use crate::error::{check_sigma, domain, Error, Result};
use crate::kernels::{grid_sup, q_kernel, q_log_ratio, sup_grid, KernelQuery, MASS_RADIUS};
use crate::numerics::gamma::ln_gamma;
use crate::numerics::{adaptive_quad_breaks, GaussLegendre, LogValue, QuadratureConfig};
use crate::space::{cartan_density, Preset, SpaceDescriptor};
use crate::spectral::{
    integrate_radial, invert, ln_phi0, uniform_grid, DistinguishedMultiplier, ForwardNodes, Modulated, Multiplier,
    PoissonMultiplier, RadialExtent, RadialFunction,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Initial data of an experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialDatum {
    /// `e^{1 - 1/(1-(r/w)²)}` on `r < w`.
    RadialBump(f64),
    /// `e^{-r²/w²}`.
    RadialGaussian(f64),
    /// Dirac mass at distance `s` from the origin.
    DiracTranslate(f64),
}

impl InitialDatum {
    /// Tabulated profile; the Dirac datum has none.
    pub fn profile(&self) -> Result<RadialFunction> {
        match *self {
            InitialDatum::RadialBump(w) => RadialFunction::from_fn(uniform_grid(w, 41), |r| {
                let x = r / w;
                Ok(if x < 1.0 { LogValue::from_log(1.0 - 1.0 / (1.0 - x * x)) } else { LogValue::ZERO })
            }),
            InitialDatum::RadialGaussian(w) => {
                RadialFunction::from_fn(uniform_grid(8.0 * w, 81), |r| Ok(LogValue::from_log(-(r / w).powi(2))))
            }
            InitialDatum::DiracTranslate(_) => Err(domain("a Dirac datum has no radial profile")),
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, InitialDatum::DiracTranslate(_))
    }
}

fn parse_call(s: &str) -> Result<(&str, f64)> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| Error::Parse(format!("expected name(value), got {s:?}")))?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| Error::Parse(format!("unclosed parenthesis in {s:?}")))?;
    let v: f64 = inner.trim().parse().map_err(|_| Error::Parse(format!("bad number in {s:?}")))?;
    Ok((s[..open].trim(), v))
}

impl FromStr for InitialDatum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, v) = parse_call(s)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain(format!("datum parameter must be positive, got {v}")));
        }
        match name {
            "radial_bump" => Ok(InitialDatum::RadialBump(v)),
            "radial_gaussian" => Ok(InitialDatum::RadialGaussian(v)),
            "dirac_translate" => Ok(InitialDatum::DiracTranslate(v)),
            other => {
                Err(Error::Parse(format!("unknown datum {other:?}; expected radial_bump, radial_gaussian or dirac_translate")))
            }
        }
    }
}

impl fmt::Display for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::RadialBump(w) => write!(f, "radial_bump({w})"),
            InitialDatum::RadialGaussian(w) => write!(f, "radial_gaussian({w})"),
            InitialDatum::DiracTranslate(s) => write!(f, "dirac_translate({s})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    L1X,
    LinfX,
    LpX(f64),
    L1S,
    LinfS,
}

impl NormKind {
    pub fn is_x(&self) -> bool {
        matches!(self, NormKind::L1X | NormKind::LinfX | NormKind::LpX(_))
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "L1_X" => Ok(NormKind::L1X),
            "Linf_X" => Ok(NormKind::LinfX),
            "L1_S" => Ok(NormKind::L1S),
            "Linf_S" => Ok(NormKind::LinfS),
            other => {
                let (name, p) = parse_call(other)?;
                if name != "Lp_X" {
                    return Err(Error::Parse(format!("unknown norm {other:?}; expected L1_X, Linf_X, Lp_X(p), L1_S or Linf_S")));
                }
                if !(p > 1.0 && p.is_finite()) {
                    return Err(domain(format!("p must lie in (1, inf), got {p}")));
                }
                Ok(NormKind::LpX(p))
            }
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::L1X => f.write_str("L1_X"),
            NormKind::LinfX => f.write_str("Linf_X"),
            NormKind::LpX(p) => write!(f, "Lp_X({p})"),
            NormKind::L1S => f.write_str("L1_S"),
            NormKind::LinfS => f.write_str("Linf_S"),
        }
    }
}

/// A convergence experiment read from a `key=value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub space: Preset,
    pub sigma: f64,
    pub eps: f64,
    pub t_grid: Vec<f64>,
    pub datum: InitialDatum,
    pub norms: Vec<NormKind>,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub const KEYS: [&'static str; 7] = ["space", "sigma", "eps", "t_grid", "datum", "norms", "out"];

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec {
            space: Preset::H3,
            sigma: 0.5,
            eps: 0.3,
            t_grid: vec![],
            datum: InitialDatum::RadialBump(1.0),
            norms: vec![NormKind::L1X],
            out: None,
        };
        let mut seen_t = false;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {line:?}", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number {v:?}", no + 1)));
            match k {
                "space" => spec.space = v.parse()?,
                "sigma" => spec.sigma = num(v)?,
                "eps" => spec.eps = num(v)?,
                "t_grid" => {
                    seen_t = true;
                    spec.t_grid = v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(s.trim())).collect::<Result<_>>()?;
                }
                "datum" => spec.datum = v.parse()?,
                "norms" => spec.norms = split_top_level(v).into_iter().map(|s| s.parse()).collect::<Result<_>>()?,
                "out" => spec.out = Some(PathBuf::from(v)),
                other => {
                    return Err(Error::Parse(format!("unknown key {other:?}; valid keys: {}", Self::KEYS.join(", "))));
                }
            }
        }
        if !seen_t {
            return Err(Error::Parse("missing key t_grid".into()));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(domain(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.t_grid.is_empty() {
            return Err(domain("t_grid is empty"));
        }
        if self.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) || self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("t_grid must be positive and strictly increasing"));
        }
        if self.norms.is_empty() {
            return Err(domain("norms is empty"));
        }
        if !self.datum.is_radial() && self.norms.iter().any(|n| !n.is_x()) {
            return Err(domain("a Dirac datum supports X norms only"));
        }
        Ok(())
    }

    pub fn to_key_value(&self) -> String {
        let ts: Vec<String> = self.t_grid.iter().map(|t| format!("{t}")).collect();
        let ns: Vec<String> = self.norms.iter().map(|n| n.to_string()).collect();
        let mut s = format!(
            "space={}\nsigma={}\neps={}\nt_grid={}\ndatum={}\nnorms={}\n",
            self.space,
            self.sigma,
            self.eps,
            ts.join(","),
            self.datum,
            ns.join(",")
        );
        if let Some(o) = &self.out {
            s.push_str(&format!("out={}\n", o.display()));
        }
        s
    }
}

/// Splits on commas outside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = vec![];
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.into_iter().filter(|p| !p.is_empty()).collect()
}

/// `M = c_s ∫ v₀ δ dr`.
pub fn mass_x(desc: &SpaceDescriptor, v0: &RadialFunction, cfg: &QuadratureConfig) -> Result<f64> {
    let q = adaptive_quad_breaks(|r: f64| Ok::<_, Error>(v0.eval(r) * cartan_density(desc, r)), v0.grid(), cfg)
        .map_err(Error::in_panel("mass"))?;
    let mut total = q.value;
    if v0.tail().is_some() {
        let r0 = v0.r_max();
        let ext = RadialExtent::new(vec![], 1.0, MASS_RADIUS);
        total = total + integrate_radial(|s| Ok(v0.eval(r0 + s) * cartan_density(desc, r0 + s)), &ext, cfg)?.total();
    }
    Ok(total.to_f64() * desc.c_surface())
}

/// `𝓗v₀(iρ)`, which equals [`mass_x`] since `φ_{iρ} ≡ 1`.
pub fn mass_x_continuation(desc: &SpaceDescriptor, v0: &RadialFunction) -> Result<f64> {
    Ok(ForwardNodes::new(desc, v0)?.eval(Complex64::new(0.0, desc.rho_norm()))?.re)
}

/// Abel transform `A(a) = 2π ∫_{|a|}^∞ v₀(s) sinh s ds` of compactly
/// supported data on H³, premultiplied by quadrature weights on `[-R, R]`.
///
/// `𝓗v₀(λ) = ∫ A(a) e^{iλa} da`, so outside the support
/// `(v₀ * f)(r) = ∫ A(a) f(r - a) sinh(r - a) da / sinh r` for radial `f`.
struct AbelNodes {
    edge: f64,
    nodes: Vec<(f64, f64)>,
}

impl AbelNodes {
    fn new(desc: &SpaceDescriptor, v0: &RadialFunction, cfg: &QuadratureConfig) -> Result<Option<Self>> {
        if !desc.is_h3() || v0.tail().is_some() {
            return Ok(None);
        }
        let edge = v0.r_max();
        let gl = GaussLegendre::get(6);
        let f = |s: f64| Ok::<_, Error>(v0.eval(s).to_f64() * s.sinh());
        // panels follow the interpolation grid, mirrored to negative heights
        let grid = v0.grid();
        let mut nodes = Vec::with_capacity(2 * grid.len() * gl.weights.len());
        for w in grid.windows(2) {
            for (a, wt) in gl.mapped(w[0], w[1]) {
                let mut breaks = vec![a];
                breaks.extend(grid.iter().copied().filter(|&g| g > a));
                let big_a = adaptive_quad_breaks(f, &breaks, cfg).map_err(Error::in_panel("Abel transform"))?.value;
                let weight = wt * 2.0 * PI * big_a;
                nodes.push((a, weight));
                nodes.push((-a, weight));
            }
        }
        Ok(Some(AbelNodes { edge, nodes }))
    }

    /// `Σ w A(a) e^{k a} g(a)` with `ln S(a) = ln[sinh(r - a) e^a / sinh r]` passed to `g`.
    fn sum(&self, r: f64, k: f64, g: impl Fn(f64, f64) -> Result<f64>) -> Result<f64> {
        let ln_s0 = (-(-2.0 * r).exp()).ln_1p();
        self.nodes.iter().try_fold(0.0, |acc, &(a, w)| {
            let ln_s = (-(-2.0 * (r - a)).exp()).ln_1p() - ln_s0;
            Ok(acc + w * (k * a).exp() * g(a, ln_s)?)
        })
    }
}

/// Solution of the extension problem with radial data, sampled at radii.
///
/// Inside the support, and on spaces other than H³, values come from the
/// spectral multipliers; beyond it, on H³, from the Abel form.
pub struct Evolution {
    desc: SpaceDescriptor,
    nodes: ForwardNodes,
    abel: Option<AbelNodes>,
    zero: bool,
    pub sigma: f64,
    cfg: QuadratureConfig,
}

impl Evolution {
    pub fn new(desc: &SpaceDescriptor, v0: &RadialFunction, sigma: f64, cfg: &QuadratureConfig) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Evolution {
            desc: desc.clone(),
            nodes: ForwardNodes::new(desc, v0)?,
            abel: AbelNodes::new(desc, v0, cfg)?,
            zero: v0.values().iter().all(|v| v.is_zero()),
            sigma,
            cfg: *cfg,
        })
    }

    /// `𝓗v₀(iρ)` from the same nodes as the evolution.
    pub fn mass_x(&self) -> Result<f64> {
        Ok(self.nodes.eval(Complex64::new(0.0, self.desc.rho_norm()))?.re)
    }

    /// `𝓗v₀(0)`.
    pub fn mass_s(&self) -> Result<f64> {
        Ok(self.nodes.eval(Complex64::new(0.0, 0.0))?.re)
    }

    fn abel_at(&self, r: f64) -> Option<&AbelNodes> {
        self.abel.as_ref().filter(|ab| r >= ab.edge + 1.0)
    }

    fn run(&self, base: &dyn Multiplier, shift: f64, r: f64) -> Result<LogValue> {
        let transform = |lam: Complex64| self.nodes.eval(lam);
        let m = Modulated { base, transform: &transform, shift };
        invert(&self.desc, &m, r, &self.cfg)
    }

    fn poisson(&self, t: f64) -> PoissonMultiplier {
        PoissonMultiplier { t, sigma: self.sigma, rho: self.desc.rho_norm(), cfg: self.cfg }
    }

    /// `v(t, r) = (v₀ * Q_t^σ)(r)`.
    pub fn value(&self, t: f64, r: f64) -> Result<LogValue> {
        if self.zero {
            return Ok(LogValue::ZERO);
        }
        match self.abel_at(r) {
            Some(ab) => {
                let q = KernelQuery::new(t, self.sigma, r)?;
                let sum = ab.sum(r, -1.0, |a, ln_s| Ok((q_log_ratio(&self.desc, &q, -a, &self.cfg)? + ln_s).exp()))?;
                Ok(q_kernel(&self.desc, &q, &self.cfg)?.scale(sum))
            }
            None => self.run(&self.poisson(t), 0.0, r),
        }
    }

    /// `v(t, r) - M Q_t^σ(r)`, without cancellation.
    pub fn deviation_x(&self, t: f64, r: f64) -> Result<LogValue> {
        if self.zero {
            return Ok(LogValue::ZERO);
        }
        match self.abel_at(r) {
            Some(ab) => {
                // Q(r - a) sinh(r - a) / sinh r - e^a Q(r) = e^a Q(r) expm1(Λ - 2a + ln S)
                let q = KernelQuery::new(t, self.sigma, r)?;
                let sum =
                    ab.sum(r, 1.0, |a, ln_s| Ok((q_log_ratio(&self.desc, &q, -a, &self.cfg)? - 2.0 * a + ln_s).exp_m1()))?;
                Ok(q_kernel(&self.desc, &q, &self.cfg)?.scale(sum))
            }
            None => self.run(&self.poisson(t), self.mass_x()?, r),
        }
    }

    /// Core of `ṽ(t) - M̃ Q̃_t^σ`: `(v₀ * Q^{σ,0}_t)(r) - M̃ Q^{σ,0}_t(r)`.
    pub fn deviation_s(&self, t: f64, r: f64) -> Result<LogValue> {
        if self.zero {
            return Ok(LogValue::ZERO);
        }
        match self.abel_at(r) {
            Some(ab) => {
                let q = KernelQuery::new(t, self.sigma, r)?;
                let sum = ab.sum(r, 0.0, |a, ln_s| Ok((q0_log_ratio(&self.desc, &q, -a, &self.cfg)? - a + ln_s).exp_m1()))?;
                Ok(q0_kernel(&self.desc, &q, &self.cfg)?.scale(sum))
            }
            None => {
                let m = DistinguishedMultiplier { t, sigma: self.sigma, cfg: self.cfg };
                self.run(&m, self.mass_s()?, r)
            }
        }
    }
}

/// `v(t, ·)` on `r_grid`.
pub fn evolve_radial(
    desc: &SpaceDescriptor,
    v0: &RadialFunction,
    t: f64,
    sigma: f64,
    r_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<RadialFunction> {
    let ev = Evolution::new(desc, v0, sigma, cfg)?;
    let values = r_grid.par_iter().map(|&r| ev.value(t, r)).collect::<Result<Vec<_>>>()?;
    RadialFunction::new(r_grid.to_vec(), values, None)
}

/// A norm together with the fitted remainder beyond the integration radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub tail_bound: f64,
}

impl Distance {
    /// True when the remainder exceeds `1e-4` of the value.
    pub fn under_truncated(&self) -> bool {
        self.tail_bound > 1e-4 * self.value
    }
}

fn radial_norm(
    desc: &SpaceDescriptor,
    f: impl Fn(f64) -> Result<LogValue>,
    breaks: Vec<f64>,
    cfg: &QuadratureConfig,
) -> Result<Distance> {
    let ext = RadialExtent::new(breaks, 1.0, MASS_RADIUS);
    let q = integrate_radial(|r| Ok(f(r)? * cartan_density(desc, r)), &ext, cfg)?;
    let cs = desc.c_surface();
    Ok(Distance { value: q.total().to_f64() * cs, tail_bound: q.tail.to_f64() * cs })
}

fn norm_cfg(cfg: &QuadratureConfig) -> QuadratureConfig {
    cfg.with_rel_tol(cfg.rel_tol.max(1e-7))
}

/// Sign changes of `f` on `(0, r_max]`, bracketed on a geometric grid and
/// bisected, so that `|f|` can be integrated panel by panel.
fn sign_changes(f: impl Fn(f64) -> Result<LogValue> + Sync, r_max: f64) -> Result<Vec<f64>> {
    let mut grid = vec![];
    let mut r = 1e-3;
    while r < r_max {
        grid.push(r);
        r *= 2f64.powf(0.125);
    }
    grid.push(r_max);
    let signs = grid.par_iter().map(|&r| Ok(f(r)?.sign())).collect::<Result<Vec<_>>>()?;
    let mut roots = vec![];
    for (i, w) in signs.windows(2).enumerate() {
        if w[0] * w[1] >= 0 {
            continue;
        }
        let (mut a, mut b) = (grid[i], grid[i + 1]);
        while b - a > 1e-12 * b {
            let m = 0.5 * (a + b);
            if f(m)?.sign() == w[0] {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    Ok(roots)
}

/// `‖v(t) - M Q_t^σ‖_{L¹(X)}`.
pub fn l1_distance_x(
    desc: &SpaceDescriptor,
    v0: &RadialFunction,
    t: f64,
    sigma: f64,
    cfg: &QuadratureConfig,
) -> Result<Distance> {
    let ev = Evolution::new(desc, v0, sigma, cfg)?;
    let mut breaks = vec![v0.r_max(), t, t * t, 10.0 * t * t];
    breaks.extend(sign_changes(|r| ev.deviation_x(t, r), 10.0 * t * t)?);
    radial_norm(desc, |r| Ok(ev.deviation_x(t, r)?.abs()), breaks, &norm_cfg(cfg))
}

/// `(∫ |v(t) - M Q_t^σ|^p)^{1/p}` by quadrature.
pub fn lp_distance_x_direct(
    desc: &SpaceDescriptor,
    v0: &RadialFunction,
    t: f64,
    sigma: f64,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(domain(format!("p must lie in (1, inf), got {p}")));
    }
    let ev = Evolution::new(desc, v0, sigma, cfg)?;
    let mut breaks = vec![v0.r_max(), t, t * t];
    breaks.extend(sign_changes(|r| ev.deviation_x(t, r), 10.0 * t * t)?);
    Ok(radial_norm(desc, |r| Ok(ev.deviation_x(t, r)?.abs().powf(p)), breaks, &norm_cfg(cfg))?.value.powf(1.0 / p))
}

/// `sup_r |v(t, r) - M Q_t^σ(r)|`.
pub fn linf_distance_x(desc: &SpaceDescriptor, v0: &RadialFunction, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let ev = Evolution::new(desc, v0, sigma, cfg)?;
    let grid = sup_grid(t, 64.0);
    let vals = grid.par_iter().map(|&r| ev.deviation_x(t, r)).collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().map(|v| v.abs().to_f64()).fold(0.0, f64::max))
}

/// `t^{(ν+1)/2-σ} e^{|ρ|t}`, the scale of the `L^∞(X)` distance.
pub fn linf_scale_x(desc: &SpaceDescriptor, t: f64, sigma: f64) -> f64 {
    let nu = desc.dim_nu() as f64;
    (((nu + 1.0) / 2.0 - sigma) * t.ln() + desc.rho_norm() * t).exp()
}

/// `t^{ν/2} e^{|ρ|t} ‖Q_{t+t'}^{1/2} - Q_t^{1/2}‖_∞`.
pub fn delayed_kernel_gap(desc: &SpaceDescriptor, t: f64, t_delay: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let q = |tt: f64, r: f64| q_kernel(desc, &KernelQuery::new(tt, 0.5, r)?, cfg);
    let s = grid_sup(&sup_grid(t, 64.0), |r| Ok(q(t + t_delay, r)? - q(t, r)?))?;
    let nu = desc.dim_nu() as f64;
    Ok(s.value.scale_exp(nu / 2.0 * t.ln() + desc.rho_norm() * t).to_f64())
}

/// Interpolation bound `l1^{1/p} linf^{1 - 1/p}`.
pub fn lp_distance(l1: f64, linf: f64, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(domain(format!("p must lie in (1, inf), got {p}")));
    }
    if !(l1 >= 0.0 && linf >= 0.0) {
        return Err(domain("norms must be non-negative"));
    }
    if linf == 0.0 || l1 == 0.0 {
        return Ok(0.0);
    }
    Ok(l1.powf(1.0 / p) * linf.powf(1.0 - 1.0 / p))
}

/// Geodesic distance between points at radii `r`, `s` from the origin at angle `θ`.
pub fn hyperbolic_distance(r: f64, s: f64, theta: f64) -> f64 {
    let h = (0.5 * theta).sin();
    if r.max(s) < 300.0 {
        // cosh d - 1 = 2 sinh²((r-s)/2) + 2 sinh r sinh s sin²(θ/2)
        let half = (0.5 * (r - s)).sinh().powi(2) + r.sinh() * s.sinh() * h * h;
        return 2.0 * half.sqrt().asinh();
    }
    let (big, small) = if r >= s { (r, s) } else { (s, r) };
    // 2 cosh d = e^{big} A + e^{-big} B
    let a = (-small).exp() + 2.0 * small.sinh() * h * h;
    let b = 2.0 * small.cosh() - a;
    let ln_2cosh = big + a.ln() + ((-2.0 * big).exp() * b / a).ln_1p();
    // d = acosh(C) = ln(2C) + ln((1 + √(1 - C^{-2}))/2)
    let inv_c2 = (-2.0 * (ln_2cosh - std::f64::consts::LN_2)).exp();
    ln_2cosh + (0.5 * (1.0 + (1.0 - inv_c2).sqrt())).ln()
}

/// `d - r` for [`hyperbolic_distance`]`(r, s, θ)`, accurate for large `r`.
pub fn hyperbolic_offset(r: f64, s: f64, theta: f64) -> f64 {
    if r - s < 20.0 {
        return hyperbolic_distance(r, s, theta) - r;
    }
    // 2 cosh d = e^r A + e^{-r} B with A = cosh s - sinh s cos θ, B = 2 cosh s - A
    let h = (0.5 * theta).sin();
    let a = (-s).exp() + 2.0 * s.sinh() * h * h;
    let b = 2.0 * s.cosh() - a;
    let lead = a.ln() + ((-2.0 * r).exp() * b / a).ln_1p();
    let d0 = r + lead;
    lead - (-2.0 * d0).exp().ln_1p()
}

fn sphere_norm(n: f64) -> f64 {
    (0.5 * PI.ln() + ln_gamma((n - 1.0) / 2.0) - ln_gamma(n / 2.0)).exp()
}

fn require_hyperbolic(desc: &SpaceDescriptor) -> Result<()> {
    desc.require_numeric()?;
    if !desc.is_real_hyperbolic() {
        return Err(domain("geodesic polar coordinates need a real hyperbolic space"));
    }
    Ok(())
}

/// `‖Q_t^σ(·, y) - Q_t^σ‖_{L¹(X)}` for `y` at distance `s` from the origin.
///
/// Integrates `|Q(d) - Q(r)| - B Q(r)` in geodesic polar coordinates, `B`
/// being the boundary functional, and adds `B ∫Q = B`. The excess decays
/// like `Q(r)/r`, so its tail is negligible and small gaps stay resolved.
pub fn dirac_distance_x(desc: &SpaceDescriptor, s: f64, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<Distance> {
    if s == 0.0 {
        require_hyperbolic(desc)?;
        KernelQuery::new(t, sigma, 0.0)?;
        return Ok(Distance { value: 0.0, tail_bound: 0.0 });
    }
    let b = boundary_functional(desc, s, cfg)?;
    let excess = translate_integral(desc, s, t, sigma, cfg, f64::abs, b)?;
    Ok(Distance { value: b + excess.value, tail_bound: excess.tail_bound })
}

/// [`dirac_distance_x`] minus the boundary functional, resolved below the rounding of the sum.
pub fn dirac_gap_x(desc: &SpaceDescriptor, s: f64, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<Distance> {
    let b = boundary_functional(desc, s, cfg)?;
    translate_integral(desc, s, t, sigma, cfg, f64::abs, b)
}

/// `∫ Q_t^σ(x, e) [g(Q_t^σ(x, y) / Q_t^σ(x, e) - 1) - offset] dx` in geodesic polar coordinates around `e`.
fn translate_integral(
    desc: &SpaceDescriptor,
    s: f64,
    t: f64,
    sigma: f64,
    cfg: &QuadratureConfig,
    g: impl Fn(f64) -> f64 + Sync,
    offset: f64,
) -> Result<Distance> {
    require_hyperbolic(desc)?;
    if !(s >= 0.0) {
        return Err(domain(format!("translation distance must be non-negative, got {s}")));
    }
    KernelQuery::new(t, sigma, 0.0)?;
    let n = desc.dim_n() as f64;
    let z = sphere_norm(n);
    let angular = QuadratureConfig { rel_tol: 1e-12, ..*cfg };
    let radial = QuadratureConfig { rel_tol: cfg.rel_tol.max(1e-8), abs_tol_log: (1e-14f64).ln(), ..*cfg };
    let shell = |r: f64| -> Result<LogValue> {
        let q = KernelQuery { t, sigma, r };
        let f = |theta: f64| -> Result<f64> {
            let ratio = q_log_ratio(desc, &q, hyperbolic_offset(r, s, theta), cfg)?.exp_m1();
            Ok(g(ratio) * theta.sin().powf(n - 2.0))
        };
        // the level set d = r
        let mut breaks = vec![0.0, PI];
        if r > 0.0 && s > 0.0 {
            let c = (0.5 * s).tanh() / r.tanh();
            if c < 1.0 {
                breaks.insert(1, c.acos());
            }
        }
        let v = adaptive_quad_breaks(f, &breaks, &angular).map_err(Error::in_panel("dirac angular"))?;
        Ok(q_kernel(desc, &q, cfg)?.scale(v.value / z - offset))
    };
    let d = radial_norm(desc, shell, vec![s, t, t * t, 10.0 * t * t], &radial)?;
    Ok(Distance { value: d.value, tail_bound: d.tail_bound.abs() })
}

/// Normalised area of the cap `cos θ > c` on the unit sphere of `ℝ^n`.
fn cap_fraction(n: f64, c: f64) -> f64 {
    if c >= 1.0 {
        return 0.0;
    }
    if c <= -1.0 {
        return 1.0;
    }
    let half = 0.5 * statrs::function::beta::beta_reg(0.5 * (n - 1.0), 0.5, 1.0 - c * c);
    if c >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// [`dirac_distance_x`] by reflection in the bisector of `e` and `y`.
///
/// `Q(·, y) > Q` exactly on the half-space nearer `y`, which meets the sphere
/// of radius `r` in the cap `cos θ > tanh(s/2) coth r`; the distance is
/// `2 ∫ Q (1 - 2 cap)` and the gap to its limit a single radial integral.
pub fn dirac_distance_reflected(desc: &SpaceDescriptor, s: f64, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let gap = dirac_gap_reflected(desc, s, t, sigma, cfg)?;
    let limit = cap_fraction(desc.dim_n() as f64, (0.5 * s).tanh());
    Ok(2.0 * (1.0 - 2.0 * limit) + gap)
}

/// [`dirac_gap_x`] through the reflection identity.
pub fn dirac_gap_reflected(desc: &SpaceDescriptor, s: f64, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    require_hyperbolic(desc)?;
    if !(s >= 0.0) {
        return Err(domain(format!("translation distance must be non-negative, got {s}")));
    }
    KernelQuery::new(t, sigma, 0.0)?;
    let n = desc.dim_n() as f64;
    let tau = (0.5 * s).tanh();
    let limit = cap_fraction(n, tau);
    let gap = radial_norm(
        desc,
        |r| {
            let w = limit - cap_fraction(n, tau / r.tanh());
            Ok(q_kernel(desc, &KernelQuery { t, sigma, r }, cfg)?.scale(4.0 * w))
        },
        vec![s, t, t * t],
        &QuadratureConfig { abs_tol_log: (1e-30f64).ln(), ..*cfg },
    )?;
    Ok(gap.value)
}

/// `∫_{∂B} |P(y, b)^{n-1} - 1| db` with `|y| = tanh(s/2)` in the ball model.
pub fn boundary_functional(desc: &SpaceDescriptor, s: f64, cfg: &QuadratureConfig) -> Result<f64> {
    boundary_average(desc, s, cfg, |p| (p - 1.0).abs())
}

/// `∫_{∂B} P(y, b)^{n-1} db`, identically one.
pub fn boundary_density_mean(desc: &SpaceDescriptor, s: f64, cfg: &QuadratureConfig) -> Result<f64> {
    boundary_average(desc, s, cfg, |p| p)
}

fn boundary_average(desc: &SpaceDescriptor, s: f64, cfg: &QuadratureConfig, g: impl Fn(f64) -> f64) -> Result<f64> {
    require_hyperbolic(desc)?;
    if !(s >= 0.0) {
        return Err(domain(format!("translation distance must be non-negative, got {s}")));
    }
    let n = desc.dim_n() as f64;
    let y = (0.5 * s).tanh();
    let f = |theta: f64| -> Result<f64> {
        let p = (1.0 - y * y) / (1.0 - 2.0 * y * theta.cos() + y * y);
        Ok(g(p.powf(n - 1.0)) * theta.sin().powf(n - 2.0))
    };
    // P = 1 where cos θ = |y|
    let breaks = if y > 0.0 { vec![0.0, y.acos(), PI] } else { vec![0.0, PI] };
    let q = adaptive_quad_breaks(f, &breaks, &cfg.with_rel_tol(cfg.rel_tol.min(1e-12))).map_err(Error::in_panel("boundary"))?;
    Ok(q.value / sphere_norm(n))
}

/// Deviations `Q(r-s)/Q(r) - e^{2|ρ|s}` and `Q(r+s)/Q(r) - e^{-2|ρ|s}` at `r = t²`.
pub fn ratio_limit_check(desc: &SpaceDescriptor, s: f64, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let r = t * t;
    if !(s >= 0.0 && s <= r) {
        return Err(domain(format!("need 0 ≤ s ≤ t², got s = {s}")));
    }
    let q = |x: f64| q_kernel(desc, &KernelQuery::new(t, sigma, x)?, cfg);
    let base = q(r)?;
    let rho = desc.rho_norm();
    let inward = ((q(r - s)? / base).to_f64()) - (2.0 * rho * s).exp();
    let outward = ((q(r + s)? / base).to_f64()) - (-2.0 * rho * s).exp();
    Ok((inward, outward))
}

/// One row of the `S`-side experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SRow {
    pub t: f64,
    pub l1: Distance,
    /// `sup e^{|ρ|r} |D_t(r)|`.
    pub linf: f64,
    pub mass: f64,
}

/// `t^{ℓ+|Σ|}`, the scale of the `L^∞(S)` distance.
pub fn linf_scale_s(desc: &SpaceDescriptor, t: f64) -> f64 {
    t.powf((desc.rank() + desc.reduced_roots()) as f64)
}

fn s_row(desc: &SpaceDescriptor, ev: &Evolution, t: f64, v0_edge: f64, cfg: &QuadratureConfig) -> Result<SRow> {
    let inner = norm_cfg(cfg);
    let mut breaks = vec![v0_edge, t, 10.0 * t];
    breaks.extend(sign_changes(|r| ev.deviation_s(t, r), 100.0 * t)?);
    let l1 = radial_norm(desc, |r| Ok(ev.deviation_s(t, r)?.abs().scale_exp(ln_phi0(desc, r)?)), breaks, &inner)?;
    let rho = desc.rho_norm();
    let linf = grid_sup(&sup_grid(t, 64.0), |r| Ok(ev.deviation_s(t, r)?.scale_exp(rho * r)))?.value.to_f64();
    Ok(SRow { t, l1, linf, mass: ev.mass_s()? })
}

/// `L¹(S)` and `L^∞(S)` distances of `ṽ(t)` to `M̃ Q̃_t^σ` along `t_grid`.
pub fn s_convergence_experiment(
    desc: &SpaceDescriptor,
    v0: &RadialFunction,
    t_grid: &[f64],
    sigma: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<SRow>> {
    let ev = Evolution::new(desc, v0, sigma, cfg)?;
    t_grid.par_iter().map(|&t| s_row(desc, &ev, t, v0.r_max(), cfg)).collect()
}

/// One line of an experiment table.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub t: f64,
    pub sigma: f64,
    pub norm: NormKind,
    pub value: f64,
    pub tail_bound: f64,
    pub scaled_value: f64,
}

impl ExperimentRow {
    pub const CSV_HEADER: &'static str = "t,sigma,norm_name,value,tail_bound,scaled_value";

    pub fn csv_line(&self) -> String {
        format!("{:?},{:?},{},{:?},{:?},{:?}", self.t, self.sigma, self.norm, self.value, self.tail_bound, self.scaled_value)
    }
}

fn dirac_linf(desc: &SpaceDescriptor, s: f64, t: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    // Q decreases in the distance, so the extremes sit at θ = 0 and θ = π
    let q = |r: f64| q_kernel(desc, &KernelQuery { t, sigma, r }, cfg);
    let best = grid_sup(&sup_grid(t, 64.0), |r| {
        let base = q(r)?;
        let near = (q((r - s).abs())? - base).abs();
        let far = (q(r + s)? - base).abs();
        Ok(if near.cmp_value(&far).is_gt() { near } else { far })
    })?;
    Ok(best.value.to_f64())
}

fn experiment_cell(desc: &SpaceDescriptor, spec: &ExperimentSpec, t: f64, cfg: &QuadratureConfig) -> Result<Vec<ExperimentRow>> {
    let sigma = spec.sigma;
    let row =
        |norm, value: f64, tail_bound: f64, scaled_value: f64| ExperimentRow { t, sigma, norm, value, tail_bound, scaled_value };
    let mut out = vec![];
    let (mut l1_cache, mut linf_cache): (Option<Distance>, Option<f64>) = (None, None);
    let mut s_cache: Option<SRow> = None;
    let profile = if spec.datum.is_radial() { Some(spec.datum.profile()?) } else { None };
    let l1 = |cache: &mut Option<Distance>| -> Result<Distance> {
        if let Some(d) = cache {
            return Ok(*d);
        }
        let d = match (&profile, spec.datum) {
            (Some(p), _) => l1_distance_x(desc, p, t, sigma, cfg)?,
            (None, InitialDatum::DiracTranslate(s)) => dirac_distance_x(desc, s, t, sigma, cfg)?,
            _ => unreachable!("non-radial data are Dirac masses"),
        };
        *cache = Some(d);
        Ok(d)
    };
    let linf = |cache: &mut Option<f64>| -> Result<f64> {
        if let Some(d) = cache {
            return Ok(*d);
        }
        let d = match (&profile, spec.datum) {
            (Some(p), _) => linf_distance_x(desc, p, t, sigma, cfg)?,
            (None, InitialDatum::DiracTranslate(s)) => dirac_linf(desc, s, t, sigma, cfg)?,
            _ => unreachable!("non-radial data are Dirac masses"),
        };
        *cache = Some(d);
        Ok(d)
    };
    let srow = |cache: &mut Option<SRow>| -> Result<SRow> {
        if let Some(r) = cache {
            return Ok(*r);
        }
        let p = profile.as_ref().expect("validated: S norms need radial data");
        let ev = Evolution::new(desc, p, sigma, cfg)?;
        let r = s_row(desc, &ev, t, p.r_max(), cfg)?;
        *cache = Some(r);
        Ok(r)
    };
    for &norm in &spec.norms {
        out.push(match norm {
            NormKind::L1X => {
                let d = l1(&mut l1_cache)?;
                row(norm, d.value, d.tail_bound, d.value)
            }
            NormKind::LinfX => {
                let v = linf(&mut linf_cache)?;
                row(norm, v, 0.0, v * linf_scale_x(desc, t, sigma))
            }
            NormKind::LpX(p) => {
                let d = l1(&mut l1_cache)?;
                let v = lp_distance(d.value, linf(&mut linf_cache)?, p)?;
                row(norm, v, 0.0, v)
            }
            NormKind::L1S => {
                let r = srow(&mut s_cache)?;
                row(norm, r.l1.value, r.l1.tail_bound, r.l1.value)
            }
            NormKind::LinfS => {
                let r = srow(&mut s_cache)?;
                row(norm, r.linf, 0.0, r.linf * linf_scale_s(desc, t))
            }
        });
    }
    Ok(out)
}

/// Runs an experiment; rows come in `t_grid` order, then in `norms` order.
pub fn run_experiment(desc: &SpaceDescriptor, spec: &ExperimentSpec, cfg: &QuadratureConfig) -> Result<Vec<ExperimentRow>> {
    spec.validate()?;
    let cells = spec.t_grid.par_iter().map(|&t| experiment_cell(desc, spec, t, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(cells.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distinguished::mass_function_radial;
    use crate::kernels::q_spectral;
    use crate::spectral::calibrated;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn h3() -> SpaceDescriptor {
        calibrated(Preset::H3).unwrap()
    }

    fn bump() -> RadialFunction {
        InitialDatum::RadialBump(1.0).profile().unwrap()
    }

    #[test]
    fn spec_round_trips_and_rejects_bad_input() {
        let text = "space=H3\nsigma=0.5\neps=0.3 # comment\nt_grid=5,10,20\ndatum=radial_bump(1)\nnorms=L1_X,Lp_X(2),Linf_S\nout=table.csv\n";
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(spec.norms, vec![NormKind::L1X, NormKind::LpX(2.0), NormKind::LinfS]);
        assert_eq!(ExperimentSpec::parse(&spec.to_key_value()).unwrap(), spec);
        let err = ExperimentSpec::parse("t_grid=1\ncolour=red\n").unwrap_err().to_string();
        assert!(err.contains("valid keys") && err.contains("t_grid"));
        assert!(ExperimentSpec::parse("t_grid=\n").is_err());
        assert!(ExperimentSpec::parse("t_grid=5,2\n").is_err());
        assert!(ExperimentSpec::parse("t_grid=5\ndatum=dirac_translate(1)\nnorms=L1_S\n").is_err());
        assert!(ExperimentSpec::parse("t_grid=5\nnorms=Lp_X(1)\n").is_err());
    }

    #[test]
    fn mass_by_direct_integral_and_continuation() {
        let d = h3();
        let b = bump();
        let m = mass_x(&d, &b, &cfg()).unwrap();
        let c = mass_x_continuation(&d, &b).unwrap();
        assert!((m / c - 1.0).abs() < 1e-8, "{m} {c}");
        let five = b.map(|_, v| v.scale(5.0));
        assert!((mass_x(&d, &five, &cfg()).unwrap() / m - 5.0).abs() < 1e-12);
        let grid = uniform_grid(30.0, 1501);
        let h1 = RadialFunction::from_fn(grid, |r| crate::kernels::heat_kernel(&d, 1.0, r, &cfg())).unwrap();
        assert!((mass_x(&d, &h1, &cfg()).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn evolution_of_zero_is_zero() {
        let d = h3();
        let zero = bump().map(|_, _| LogValue::ZERO);
        let v = evolve_radial(&d, &zero, 2.0, 0.5, &[0.0, 1.0], &cfg()).unwrap();
        assert!(v.values().iter().all(|x| x.is_zero()));
    }

    #[test]
    fn evolving_a_kernel_follows_the_semigroup() {
        // Q_s^{1/2} * Q_t^{1/2} = Q_{s+t}^{1/2}
        let d = h3();
        let grid = uniform_grid(40.0, 801);
        let q1 = RadialFunction::from_fn(grid, |r| q_kernel(&d, &KernelQuery::new(1.0, 0.5, r).unwrap(), &cfg())).unwrap();
        let v = evolve_radial(&d, &q1, 2.0, 0.5, &[0.0, 1.0, 3.0], &cfg()).unwrap();
        for (&r, val) in v.grid().iter().zip(v.values()) {
            let exact = q_kernel(&d, &KernelQuery::new(3.0, 0.5, r).unwrap(), &cfg()).unwrap();
            assert!(val.rel_diff(&exact) < 1e-4, "r={r}: {}", val.rel_diff(&exact));
        }
    }

    #[test]
    fn evolution_preserves_mass() {
        let d = h3();
        let b = bump();
        let ev = Evolution::new(&d, &b, 0.5, &cfg()).unwrap();
        let m = radial_norm(&d, |r| ev.value(5.0, r), vec![1.0, 5.0, 25.0], &norm_cfg(&cfg())).unwrap();
        let m0 = mass_x(&d, &b, &cfg()).unwrap();
        assert!((m.value / m0 - 1.0).abs() < 1e-6, "{} {m0}", m.value);
    }

    #[test]
    fn deviation_matches_difference_of_routes() {
        let d = h3();
        let b = bump();
        let ev = Evolution::new(&d, &b, 0.5, &cfg()).unwrap();
        let m = ev.mass_x().unwrap();
        for &r in &[0.0, 3.0] {
            let dev = ev.deviation_x(4.0, r).unwrap();
            let direct =
                ev.value(4.0, r).unwrap() - q_spectral(&d, &KernelQuery::new(4.0, 0.5, r).unwrap(), &cfg()).unwrap().scale(m);
            assert!((dev - direct).abs().to_f64() <= 1e-8 * ev.value(4.0, r).unwrap().to_f64());
        }
    }

    #[test]
    fn abel_form_matches_multipliers_outside_the_support() {
        let d = h3();
        let ev = Evolution::new(&d, &bump(), 0.5, &cfg()).unwrap();
        let (mx, ms) = (ev.mass_x().unwrap(), ev.mass_s().unwrap());
        for &(t, r) in &[(2.0, 2.5), (6.0, 7.0), (20.0, 30.0)] {
            assert!(ev.abel_at(r).is_some());
            let pairs = [
                (ev.value(t, r).unwrap(), ev.run(&ev.poisson(t), 0.0, r).unwrap()),
                (ev.deviation_x(t, r).unwrap(), ev.run(&ev.poisson(t), mx, r).unwrap()),
                (ev.deviation_s(t, r).unwrap(), ev.run(&DistinguishedMultiplier { t, sigma: 0.5, cfg: cfg() }, ms, r).unwrap()),
            ];
            for (k, (abel, spectral)) in pairs.iter().enumerate() {
                assert!(abel.rel_diff(spectral) < 1e-7, "t={t} r={r} #{k}: {abel:?} vs {spectral:?}");
            }
        }
    }

    #[test]
    fn lp_interpolation() {
        assert_eq!(lp_distance(0.3, 0.0, 2.0).unwrap(), 0.0);
        assert!((lp_distance(0.3, 0.7, 1.0 + 1e-12).unwrap() - 0.3).abs() < 1e-10);
        assert!(lp_distance(0.3, 0.7, 1.0).is_err());
        let d = h3();
        let b = bump();
        let t = 20.0;
        let l1 = l1_distance_x(&d, &b, t, 0.5, &cfg()).unwrap().value;
        let linf = linf_distance_x(&d, &b, t, 0.5, &cfg()).unwrap();
        let direct = lp_distance_x_direct(&d, &b, t, 0.5, 2.0, &cfg()).unwrap();
        assert!(lp_distance(l1, linf, 2.0).unwrap() >= direct, "{l1} {linf} {direct}");
    }

    #[test]
    fn law_of_cosines_extremes() {
        assert!((hyperbolic_distance(3.0, 1.0, 0.0) - 2.0).abs() < 1e-12);
        assert!((hyperbolic_distance(3.0, 1.0, PI) - 4.0).abs() < 1e-12);
        assert!((hyperbolic_distance(500.0, 1.0, 0.0) - 499.0).abs() < 1e-9);
        assert!((hyperbolic_distance(500.0, 1.0, PI) - 501.0).abs() < 1e-9);
        let (a, b) = (hyperbolic_distance(299.0, 2.0, 1.0), hyperbolic_distance(301.0, 2.0, 1.0));
        assert!((b - a - 2.0).abs() < 1e-9);
        assert_eq!(hyperbolic_distance(2.0, 0.0, 1.3), 2.0);
        for (r, s, th) in [(25.0, 1.0, 0.3), (80.0, 2.0, 2.9), (250.0, 1.0, 1.7)] {
            let off = hyperbolic_offset(r, s, th);
            assert!((off - (hyperbolic_distance(r, s, th) - r)).abs() < 1e-12 * r, "{r} {s} {th}");
        }
        assert!((hyperbolic_offset(1e8, 1.0, 0.0) + 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn law_of_cosines_is_a_metric(r in 0.0f64..50.0, s in 0.0f64..50.0, th in 0.0f64..PI, ph in 0.0f64..PI) {
            let d = hyperbolic_distance(r, s, th);
            prop_assert!(d <= r + s + 1e-9 && d >= (r - s).abs() - 1e-9);
            prop_assert!((d - hyperbolic_distance(s, r, th)).abs() <= 1e-9 * (1.0 + d));
            // three points on a plane through the origin: x at angle 0, y at θ, z at φ
            let dyz = hyperbolic_distance(s, r, (th - ph).abs());
            let dxz = hyperbolic_distance(r, r, ph);
            prop_assert!(d <= dxz + dyz + 1e-9 * (1.0 + d));
        }
    }

    #[test]
    fn translated_kernel_keeps_unit_mass() {
        let d = h3();
        for t in [5.0, 20.0] {
            let excess = translate_integral(&d, 1.0, t, 0.5, &cfg(), |x| x, 0.0).unwrap();
            assert!(excess.value.abs() < 1e-11, "t={t}: {excess:?}");
        }
    }

    #[test]
    fn boundary_functional_basics() {
        for p in [Preset::H2, Preset::H3] {
            let d = calibrated(p).unwrap();
            let mean = boundary_density_mean(&d, 1.0, &cfg()).unwrap();
            assert!((mean - 1.0).abs() < 1e-8, "{p}: {mean}");
            assert_eq!(boundary_functional(&d, 0.0, &cfg()).unwrap(), 0.0);
        }
        assert!(boundary_functional(&h3(), 1.0, &cfg()).unwrap() >= 0.1);
    }

    #[test]
    fn boundary_functional_is_a_cap_difference() {
        for p in [Preset::H2, Preset::H3] {
            let d = calibrated(p).unwrap();
            let n = d.dim_n() as f64;
            for s in [0.3f64, 1.0, 4.0] {
                let exact = 2.0 * (1.0 - 2.0 * cap_fraction(n, (0.5 * s).tanh()));
                assert!((boundary_functional(&d, s, &cfg()).unwrap() - exact).abs() < 1e-10, "{p} s={s}");
            }
        }
    }

    #[test]
    fn dirac_distance_approaches_boundary_functional() {
        let d = h3();
        assert_eq!(dirac_distance_x(&d, 0.0, 10.0, 0.5, &cfg()).unwrap().value, 0.0);
        let b = boundary_functional(&d, 1.0, &cfg()).unwrap();
        let gaps: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&t| {
                let v = dirac_distance_x(&d, 1.0, t, 0.5, &cfg()).unwrap().value;
                let oracle = dirac_distance_reflected(&d, 1.0, t, 0.5, &cfg()).unwrap();
                assert!((v - oracle).abs() < 1e-12, "t={t}: {v} vs {oracle}");
                v - b
            })
            .collect();
        assert!(gaps[0] > 0.0 && gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn ratio_limit_in_both_directions() {
        let d = h3();
        assert_eq!(ratio_limit_check(&d, 0.0, 4.0, 0.5, &cfg()).unwrap(), (0.0, 0.0));
        let devs: Vec<(f64, f64)> =
            [4.0, 8.0, 16.0].iter().map(|&t| ratio_limit_check(&d, 1.0, t, 0.5, &cfg()).unwrap()).collect();
        assert!(devs.windows(2).all(|w| w[1].0.abs() < w[0].0.abs() && w[1].1.abs() < w[0].1.abs()), "{devs:?}");
    }

    #[test]
    fn s_experiment_reports_constant_mass() {
        let d = h3();
        let b = bump();
        let rows = s_convergence_experiment(&d, &b, &[5.0, 10.0], 0.5, &cfg()).unwrap();
        let m = mass_function_radial(&d, &b, &cfg()).unwrap();
        for row in &rows {
            assert!((row.mass / m - 1.0).abs() < 1e-8);
        }
        assert!(rows[1].l1.value < rows[0].l1.value);
    }

    #[test]
    fn experiment_rows_follow_grid_order() {
        let d = h3();
        let spec = ExperimentSpec::parse("t_grid=2,4\nnorms=Linf_X,Lp_X(2),L1_X\n").unwrap();
        let rows = run_experiment(&d, &spec, &cfg()).unwrap();
        let keys: Vec<(f64, String)> = rows.iter().map(|r| (r.t, r.norm.to_string())).collect();
        assert_eq!(keys[0], (2.0, "Linf_X".to_string()));
        assert_eq!(keys[5], (4.0, "L1_X".to_string()));
        assert!(rows[0].csv_line().split(',').count() == 6);
    }
}
