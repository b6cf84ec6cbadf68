//! Simulation and verification toolkit for stopped hulls of SLE_kappa(rho).
//!
//! The crate has two halves that check each other:
//!
//! * a Monte Carlo half — the driving SDE is integrated to the swallowing
//!   time, and the Loewner coefficient hierarchy is integrated along each
//!   path ([`sde`], [`loewner`], [`stationarity`]);
//! * an exact half — the moment recursion is solved over rational functions
//!   of kappa, and the closed-form capacity law provides an analytic
//!   reference distribution ([`moments`], [`density`]).
//!
//! [`series`] carries the truncated tail-series algebra both halves share,
//! and [`stats`] holds the estimators and Kolmogorov-Smirnov tests used to
//! compare them.

pub mod cli;
pub mod density;
pub mod loewner;
pub mod moments;
pub mod quad;
pub mod rational;
pub mod sde;
pub mod series;
pub mod stationarity;
pub mod stats;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty truncation")]
    EmptyTruncation,
    #[error("series is not affine (leading term must be z)")]
    NotAffine,
    #[error("series order {have} too small for requested order {need}")]
    InsufficientOrder { have: usize, need: usize },
    #[error("power must be at least 1; use the constant 1 directly")]
    ZeroPower,
    #[error("degenerate scaling: alpha must be positive")]
    DegenerateScaling,
    #[error("truncation order must be in 1..={max}", max = series::MAX_ORDER)]
    OrderOutOfRange,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tau almost surely infinite: bessel index nu = {nu} >= 1")]
    TauAlmostSurelyInfinite { nu: f64 },
    #[error("time cap {t_cap} reached before absorption")]
    TimeCapReached { t_cap: f64 },
    #[error("capacity law not normalizable: exponent a = {a} <= 1")]
    NotNormalizable { a: f64 },
    #[error("formula valid for m even only")]
    OddMoment,
    #[error("need at least two samples")]
    NotEnoughSamples,
    #[error("empty sample")]
    EmptySample,
    #[error("marked points crossed")]
    MarkedPointsCrossed,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
