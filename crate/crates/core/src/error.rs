use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("invalid time grid: t_max = {t_max}, steps = {steps} (need t_max > 0 and steps >= 1)")]
    InvalidGrid { t_max: f64, steps: usize },

    #[error("time step dt = {dt} too large for ‖M‖₁ = {norm}: ‖M‖·dt = {product:.4} exceeds 0.1")]
    StepTooLarge { dt: f64, norm: f64, product: f64 },

    #[error("invalid Monte Carlo settings: {0}")]
    InvalidSettings(String),

    #[error("empty series")]
    EmptySeries,

    #[error("numeric overflow: {0}")]
    Overflow(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
