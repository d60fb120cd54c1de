use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("quadrature failed in panel {panel}: {source}")]
    Panel {
        panel: &'static str,
        #[source]
        source: NumericsError,
    },
    #[error("invalid root datum: {0}")]
    RootDatum(String),
    #[error("rank {0} spaces are supported for constants only")]
    UnsupportedRank(u32),
    #[error("descriptor is not calibrated")]
    Uncalibrated,
    #[error("calibration inconsistent: mass {mass} at t = {t}")]
    Calibration { t: f64, mass: f64 },
    #[error("pole of Gamma in factor {0}")]
    GammaPole(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not integrable: {0}")]
    Integrability(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn in_panel(panel: &'static str) -> impl Fn(Error) -> Error {
        move |e| match e {
            Error::Numerics(source) => Error::Panel { panel, source },
            other => other,
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerics(_) | Error::Panel { .. } | Error::Calibration { .. } | Error::Integrability(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("sigma must lie in (0, 1), got {sigma}")))
    }
}
