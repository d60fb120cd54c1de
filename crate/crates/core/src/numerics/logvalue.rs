//! Signed scalars stored as `sign · exp(log_mag)`.
//!
//! Kernel values at radii of order `t²` mix factors like `e^{+2r}` and
//! `e^{-√(t²+r²)}`; neither fits in an `f64` on its own but their product does.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    sign: i8,
    log_mag: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, log_mag: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { sign: 1, log_mag: 0.0 };

    /// Builds from parts. A zero sign or `-∞` magnitude collapses to zero.
    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign: sign.signum(), log_mag }
        }
    }

    /// Positive value `exp(log_mag)`.
    pub fn from_log(log_mag: f64) -> Self {
        Self::new(1, log_mag)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_mag(&self) -> f64 {
        self.log_mag
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_finite(&self) -> bool {
        self.sign == 0 || self.log_mag.is_finite()
    }

    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.log_mag.exp()
    }

    pub fn abs(&self) -> Self {
        Self::new(self.sign.abs(), self.log_mag)
    }

    /// Natural log of a positive value.
    pub fn ln(&self) -> Option<f64> {
        (self.sign > 0).then_some(self.log_mag)
    }

    /// `|x|^p` carrying the sign of `x`.
    pub fn powf(&self, p: f64) -> Self {
        Self::new(self.sign, self.log_mag * p)
    }

    /// Multiplies by `e^{s}`.
    pub fn scale_exp(&self, s: f64) -> Self {
        Self::new(self.sign, self.log_mag + s)
    }

    pub fn scale(&self, w: f64) -> Self {
        *self * LogValue::from_f64(w)
    }

    /// Total order on the real line.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.log_mag.total_cmp(&other.log_mag),
                _ => other.log_mag.total_cmp(&self.log_mag),
            },
            o => o,
        }
    }

    /// Relative difference `|a-b| / max(|a|,|b|)`.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let d = (*self - *other).abs();
        let m = if self.log_mag > other.log_mag { self.abs() } else { other.abs() };
        if m.is_zero() {
            0.0
        } else {
            (d.log_mag - m.log_mag).exp()
        }
    }
}

impl Default for LogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.sign * rhs.sign, self.log_mag + rhs.log_mag)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: Self) -> Self {
        if rhs.sign == 0 {
            return Self::new(self.sign, f64::INFINITY);
        }
        Self::new(self.sign * rhs.sign, self.log_mag - rhs.log_mag)
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> Self {
        Self::new(-self.sign, self.log_mag)
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_mag >= rhs.log_mag { (self, rhs) } else { (rhs, self) };
        if big.log_mag == f64::INFINITY {
            return big;
        }
        let ratio = (small.log_mag - big.log_mag).exp();
        if big.sign == small.sign {
            Self::new(big.sign, big.log_mag + ratio.ln_1p())
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            Self::new(big.sign, big.log_mag + (-ratio).ln_1p())
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Sum for LogValue {
    fn sum<I: Iterator<Item = LogValue>>(iter: I) -> Self {
        let items: Vec<LogValue> = iter.collect();
        let top = items.iter().filter(|v| !v.is_zero()).map(|v| v.log_mag).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        if !top.is_finite() {
            return items.into_iter().fold(Self::ZERO, |a, b| a + b);
        }
        let s: f64 = items.iter().map(|v| v.sign as f64 * (v.log_mag - top).exp()).sum();
        LogValue::from_f64(s).scale_exp(top)
    }
}

impl From<f64> for LogValue {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => {
                let d = self.log_mag / std::f64::consts::LN_10;
                let e = d.floor();
                let m = 10f64.powf(d - e);
                write!(f, "{}{:.12}e{}", if s < 0 { "-" } else { "" }, m, e as i64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_is_canonical() {
        assert_eq!(LogValue::new(1, f64::NEG_INFINITY), LogValue::ZERO);
        assert_eq!(LogValue::from_f64(0.0).log_mag(), f64::NEG_INFINITY);
        assert_eq!((LogValue::from_f64(2.5) - LogValue::from_f64(2.5)), LogValue::ZERO);
    }

    #[test]
    fn survives_beyond_float_range() {
        let big = LogValue::from_log(2000.0);
        let small = LogValue::from_log(-2010.0);
        let p = big * small;
        assert!((p.to_f64() - (-10f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn cancellation_keeps_sign() {
        let a = LogValue::from_f64(3.0);
        let b = LogValue::from_f64(-5.0);
        assert!(((a + b).to_f64() + 2.0).abs() < 1e-15);
        assert_eq!((a + b).sign(), -1);
    }

    #[test]
    fn sum_matches_fold() {
        let xs = [1e-300, -2.0, 3.5, 1e10, -1e10];
        let s: LogValue = xs.iter().map(|&x| LogValue::from_f64(x)).sum();
        assert!((s.to_f64() - 1.5).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn mul_is_associative(a in -700.0..700.0f64, b in -700.0..700.0f64, c in -700.0..700.0f64,
                               sa in prop::bool::ANY, sb in prop::bool::ANY) {
            let x = LogValue::new(if sa { 1 } else { -1 }, a);
            let y = LogValue::new(if sb { 1 } else { -1 }, b);
            let z = LogValue::from_log(c);
            let l = (x * y) * z;
            let r = x * (y * z);
            prop_assert_eq!(l.sign(), r.sign());
            // two roundings, each at most one ulp of the largest partial sum
            let ulp = 2.0 * f64::EPSILON * (a.abs() + b.abs() + c.abs()).max(1.0);
            prop_assert!((l.log_mag() - r.log_mag()).abs() <= ulp);
        }

        #[test]
        fn adding_zero_is_exact(a in -1e6..1e6f64, neg in prop::bool::ANY) {
            let x = LogValue::new(if neg { -1 } else { 1 }, a);
            prop_assert_eq!(x + LogValue::ZERO, x);
            prop_assert_eq!(LogValue::ZERO + x, x);
        }

        #[test]
        fn addition_agrees_with_floats(a in -1e3..1e3f64, b in -1e3..1e3f64) {
            let s = (LogValue::from_f64(a) + LogValue::from_f64(b)).to_f64();
            prop_assert!((s - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300));
        }
    }
}
