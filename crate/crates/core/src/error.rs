use thiserror::Error;

use crate::characteristics::CharacteristicFan;

pub type Result<T, E = ZdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ZdError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid datum: {0}")]
    InvalidDatum(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("datum has no derivative at y = {y}")]
    NotDifferentiable { y: f64 },

    #[error("datum is not C1 (step or piecewise-linear); mollify it first")]
    NeedsMollification,

    /// `x` sits on a critical value of `y ↦ y + 2t u0(y)`. When available the
    /// right-limit fan (from `x⁺`) and the value it produces are attached.
    #[error("caustic hit at t = {t}, x = {x}")]
    CausticHit {
        t: f64,
        x: f64,
        fan: Option<Box<CharacteristicFan>>,
        value: Option<f64>,
    },

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {error:e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("resolvent solve failed: {reason} (condition estimate {condition:e})")]
    SolveFailure { reason: String, condition: f64 },

    #[error("blowup at t = {time}: max|u| = {max_abs:e}, dt = {dt:e}, dx = {dx:e}, cfl = {cfl:.3}")]
    Blowup {
        time: f64,
        max_abs: f64,
        dt: f64,
        dx: f64,
        cfl: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ZdError {
    pub fn is_caustic(&self) -> bool {
        matches!(self, ZdError::CausticHit { .. })
    }
}

pub(crate) fn check_finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ZdError::NonFinite(what))
    }
}
