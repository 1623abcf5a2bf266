use thiserror::Error;

use crate::spin::BasisTriple;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site out of range: {0} (sites are 1, 2, 3)")]
    SiteOutOfRange(usize),

    #[error("invalid label token {0:?}")]
    InvalidLabel(String),

    #[error("expected {expected} amplitudes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (max |H - H^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time out of schedule range: t = {t} not in [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate manifold undefined: both couplings are zero")]
    DegenerateManifold,

    #[error("degenerate pair; choose states outside the degenerate manifold")]
    DegeneratePair,

    #[error("selected level {level} of sector m = {m} lies in a degenerate cluster; select it by reference state")]
    AmbiguousLevel { m: i32, level: usize },

    #[error("finite-difference derivative did not converge: A(dt) = {coarse}, A(dt/2) = {fine}")]
    FiniteDifference { coarse: f64, fine: f64 },

    #[error("no magnetization-conserving path from {from} to {to}")]
    SectorMismatch { from: BasisTriple, to: BasisTriple },

    #[error("trajectory axis mismatch: the 1-3 ray must lie along y")]
    AxisMismatch,

    #[error("geometry admits no counter-intuitive arc")]
    NoCounterIntuitiveArc,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("missing mode")]
    MissingMode,

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
