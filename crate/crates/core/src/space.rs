//! Rank-one root data and the geometric constants derived from them.

use crate::error::{check_sigma, domain, Error, Result};
use crate::numerics::gamma::{is_pole, ln_gamma, ln_gamma_c};
use crate::numerics::LogValue;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Named real hyperbolic spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    H2,
    H3,
    H4,
    H5,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::H2, Preset::H3, Preset::H4, Preset::H5];

    pub fn dimension(self) -> u32 {
        match self {
            Preset::H2 => 2,
            Preset::H3 => 3,
            Preset::H4 => 4,
            Preset::H5 => 5,
        }
    }

    pub fn descriptor(self) -> SpaceDescriptor {
        SpaceDescriptor::derive_invariants(self.dimension() - 1, 0, 1.0).expect("presets are valid")
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "H2" => Ok(Preset::H2),
            "H3" => Ok(Preset::H3),
            "H4" => Ok(Preset::H4),
            "H5" => Ok(Preset::H5),
            other => Err(Error::Parse(format!("unknown space preset {other:?}; expected one of H2, H3, H4, H5"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H{}", self.dimension())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceDescriptor {
    rank: u32,
    reduced_roots: u32,
    m_alpha: u32,
    m_2alpha: u32,
    alpha_norm: f64,
    rho_norm: f64,
    dim_n: u32,
    dim_nu: u32,
    calib_c0: Option<f64>,
}

impl SpaceDescriptor {
    /// Rank-one descriptor from the multiplicities of `α` and `2α`.
    pub fn derive_invariants(m_alpha: u32, m_2alpha: u32, alpha_norm: f64) -> Result<Self> {
        Self::derive_general(1, 1, m_alpha, m_2alpha, alpha_norm)
    }

    /// Descriptor for constant computations in any rank, with `reduced_roots`
    /// reduced positive roots all carrying the same multiplicities.
    pub fn derive_general(rank: u32, reduced_roots: u32, m_alpha: u32, m_2alpha: u32, alpha_norm: f64) -> Result<Self> {
        if m_alpha == 0 && m_2alpha == 0 {
            return Err(Error::RootDatum("m_alpha = m_2alpha = 0 describes a flat, degenerate space".into()));
        }
        if !(alpha_norm > 0.0) || !alpha_norm.is_finite() {
            return Err(Error::RootDatum(format!("alpha_norm must be positive, got {alpha_norm}")));
        }
        if rank == 0 || reduced_roots == 0 {
            return Err(Error::RootDatum("rank and root count must be positive".into()));
        }
        Ok(SpaceDescriptor {
            rank,
            reduced_roots,
            m_alpha,
            m_2alpha,
            alpha_norm,
            rho_norm: (m_alpha as f64 / 2.0 + m_2alpha as f64) * alpha_norm,
            dim_n: rank + reduced_roots * (m_alpha + m_2alpha),
            dim_nu: rank + 2 * reduced_roots,
            calib_c0: None,
        })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }
    pub fn reduced_roots(&self) -> u32 {
        self.reduced_roots
    }
    pub fn m_alpha(&self) -> u32 {
        self.m_alpha
    }
    pub fn m_2alpha(&self) -> u32 {
        self.m_2alpha
    }
    pub fn alpha_norm(&self) -> f64 {
        self.alpha_norm
    }
    pub fn rho_norm(&self) -> f64 {
        self.rho_norm
    }
    pub fn dim_n(&self) -> u32 {
        self.dim_n
    }
    pub fn dim_nu(&self) -> u32 {
        self.dim_nu
    }
    pub fn calib_c0(&self) -> Option<f64> {
        self.calib_c0
    }

    /// `⟨ρ,α⟩/⟨α,α⟩`.
    pub fn rho_alpha(&self) -> f64 {
        self.m_alpha as f64 / 2.0 + self.m_2alpha as f64
    }

    pub fn c0(&self) -> Result<f64> {
        self.calib_c0.ok_or(Error::Uncalibrated)
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.calib_c0 = Some(c0);
        self
    }

    pub fn uncalibrated(mut self) -> Self {
        self.calib_c0 = None;
        self
    }

    /// Real hyperbolic space with unit root: `m_2α = 0`, `|α| = 1`.
    pub fn is_real_hyperbolic(&self) -> bool {
        self.rank == 1 && self.m_2alpha == 0 && self.alpha_norm == 1.0
    }

    /// The one space with closed forms for `φ_λ` and `h_t`.
    pub fn is_h3(&self) -> bool {
        self.is_real_hyperbolic() && self.m_alpha == 2
    }

    pub fn require_rank_one(&self) -> Result<()> {
        if self.rank == 1 {
            Ok(())
        } else {
            Err(Error::UnsupportedRank(self.rank))
        }
    }

    /// Numerical kernels need a rank-one space whose radial variable is geodesic distance.
    pub fn require_numeric(&self) -> Result<()> {
        self.require_rank_one()?;
        if self.alpha_norm != 1.0 {
            return Err(domain("numerical kernels need alpha_norm = 1"));
        }
        Ok(())
    }

    /// Area of the unit sphere `S^{n-1}`: `2π^{n/2}/Γ(n/2)`.
    pub fn c_surface(&self) -> f64 {
        let h = self.dim_n as f64 / 2.0;
        2.0 * PI.powf(h) / crate::numerics::gamma::gamma(h)
    }

    /// Flat `key=value` block.
    pub fn to_key_value(&self) -> String {
        let c0 = self.calib_c0.map_or_else(|| "uncalibrated".to_string(), |c| format!("{c:e}"));
        format!(
            "rank={}\nm_alpha={}\nm_2alpha={}\nalpha_norm={}\ncalib_C0={}\n",
            self.rank, self.m_alpha, self.m_2alpha, self.alpha_norm, c0
        )
    }

    pub fn from_key_value(text: &str) -> Result<Self> {
        let mut rank = None;
        let mut ma = None;
        let mut m2a = None;
        let mut an = None;
        let mut c0 = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            let v = v.trim();
            let bad = |_| Error::Parse(format!("bad value for {k}: {v:?}"));
            match k.trim() {
                "rank" => rank = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?),
                "m_alpha" => ma = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?),
                "m_2alpha" => m2a = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?),
                "alpha_norm" => an = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "calib_C0" => {
                    c0 = match v {
                        "uncalibrated" => None,
                        _ => Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                    }
                }
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing key {k}"));
        let d = Self::derive_general(
            rank.ok_or_else(|| missing("rank"))?,
            1,
            ma.ok_or_else(|| missing("m_alpha"))?,
            m2a.ok_or_else(|| missing("m_2alpha"))?,
            an.ok_or_else(|| missing("alpha_norm"))?,
        )?;
        Ok(match c0 {
            Some(c) => d.with_c0(c),
            None => d,
        })
    }
}

/// `⟨α,λ⟩` for `λ = lam·α/|α|`.
pub fn pi_poly(desc: &SpaceDescriptor, lam: f64) -> f64 {
    desc.alpha_norm * lam
}

/// `ln 𝐛_α(z)` for the reduced root, `z = ⟨λ,α⟩/⟨α,α⟩`.
pub fn ln_b_function(desc: &SpaceDescriptor, z: Complex64) -> Result<Complex64> {
    let ma = desc.m_alpha as f64;
    let m2a = desc.m_2alpha as f64;
    let ra = desc.rho_alpha();
    let iz = Complex64::i() * z;
    let lg = |arg: Complex64, name: &'static str| -> Result<Complex64> {
        if is_pole(arg) {
            return Err(Error::GammaPole(name));
        }
        ln_gamma_c(arg).ok_or(Error::GammaPole(name))
    };
    let lgr = |x: f64, name: &'static str| -> Result<f64> {
        if x <= 0.0 && x == x.round() {
            return Err(Error::GammaPole(name));
        }
        Ok(ln_gamma(x))
    };
    let constant = 2.0 * desc.alpha_norm.ln() + lgr(ra + ma / 2.0, "Γ(ρ_α + m_α/2)")? - lgr(ra, "Γ(ρ_α)")?
        + lgr(ra / 2.0 + ma / 4.0 + m2a / 2.0, "Γ(ρ_α/2 + m_α/4 + m_2α/2)")?
        - lgr(ra / 2.0 + ma / 4.0, "Γ(ρ_α/2 + m_α/4)")?;
    let var = lg(iz + 1.0, "Γ(iz + 1)")? - lg(iz + ma / 2.0, "Γ(iz + m_α/2)")? + lg(iz / 2.0 + ma / 4.0, "Γ(iz/2 + m_α/4)")?
        - lg(iz / 2.0 + ma / 4.0 + m2a / 2.0, "Γ(iz/2 + m_α/4 + m_2α/2)")?;
    Ok(var + constant)
}

/// The Gamma-ratio product `𝐛_α(z)`.
pub fn b_function(desc: &SpaceDescriptor, z: Complex64) -> Result<Complex64> {
    Ok(ln_b_function(desc, z)?.exp())
}

/// `𝐛(0)`, real and positive.
pub fn b_at_origin(desc: &SpaceDescriptor) -> Result<f64> {
    Ok(ln_b_function(desc, Complex64::new(0.0, 0.0))?.re.exp())
}

/// `𝐛(-iy)` for real `y ≥ 0`; real and positive.
pub fn b_on_imaginary_axis(desc: &SpaceDescriptor, y: f64) -> Result<f64> {
    let z = Complex64::new(0.0, -y / desc.alpha_norm);
    Ok(ln_b_function(desc, z)?.re.exp())
}

/// Envelope `(1 + ⟨α,H⟩) e^{-⟨ρ,H⟩}` of the ground spherical function.
pub fn phi0_envelope(desc: &SpaceDescriptor, r: f64) -> LogValue {
    LogValue::from_log((1.0 + desc.alpha_norm * r).ln() - desc.rho_norm * r)
}

/// `C₁ π(H) e^{-⟨ρ,H⟩}`, the large-radius form of `φ₀`.
pub fn phi0_asymptotic(desc: &SpaceDescriptor, r: f64) -> Result<LogValue> {
    if !(r > 0.0) {
        return Err(domain(format!("phi0_asymptotic needs r > 0, got {r}")));
    }
    let c1 = c1_constant(desc)?;
    Ok(LogValue::from_log(c1.ln() + pi_poly(desc, r).ln() - desc.rho_norm * r))
}

/// `ln sinh x` for `x > 0`, stable for large `x`.
pub fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Cartan density `δ(r) = sinh^{m_α}(⟨α,H⟩) sinh^{m_{2α}}(⟨2α,H⟩)`.
pub fn cartan_density(desc: &SpaceDescriptor, r: f64) -> LogValue {
    if r <= 0.0 {
        return LogValue::ZERO;
    }
    let a = desc.alpha_norm * r;
    let mut l = desc.m_alpha as f64 * ln_sinh(a);
    if desc.m_2alpha > 0 {
        l += desc.m_2alpha as f64 * ln_sinh(2.0 * a);
    }
    LogValue::from_log(l)
}

/// `π(ρ̃)` with `ρ̃ = α/2`.
fn pi_rho_tilde(desc: &SpaceDescriptor) -> f64 {
    desc.alpha_norm * desc.alpha_norm / 2.0
}

fn c1_constant(desc: &SpaceDescriptor) -> Result<f64> {
    Ok(b_at_origin(desc)? / pi_rho_tilde(desc))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticConstants {
    pub c1: f64,
    pub c2: f64,
    pub c_sigma: f64,
    pub ctilde_sigma: f64,
}

/// Constants of the sharp long-time asymptotics.
pub fn asymptotic_constants(desc: &SpaceDescriptor, sigma: f64) -> Result<AsymptoticConstants> {
    check_sigma(sigma)?;
    let c0 = desc.c0()?;
    let l = desc.rank as f64;
    let nr = desc.reduced_roots as f64;
    let b0 = b_at_origin(desc)?;
    let pr = pi_rho_tilde(desc);
    let rho = desc.rho_norm;
    let g = crate::numerics::gamma::gamma;
    let c_sigma = 1.0 / (4f64.powf(sigma) * g(sigma)) * c0 * 2f64.powf(l / 2.0 + sigma + 0.5) * PI.powf(l / 2.0 + 0.5) * pr / b0
        * rho.powf(l / 2.0 + sigma + nr - 0.5);
    let ctilde_sigma = 1.0 / g(sigma) * c0 * 2f64.powf(l + nr) * PI.powf(l / 2.0) * g(l / 2.0 + nr + sigma) * pr / (b0 * b0);
    let c2 = c0 * 2f64.powf(-nr) * PI.powf(l / 2.0) * pr / b0;
    Ok(AsymptoticConstants { c1: b0 / pr, c2, c_sigma, ctilde_sigma })
}
