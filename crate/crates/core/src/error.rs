use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants are grouped by [`ErrorClass`] so front ends can map them onto
/// exit codes without matching on each one.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row counts differ: x has {x_rows} rows, y has {y_rows}")]
    DimensionMismatch { x_rows: usize, y_rows: usize },

    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("need at least {needed} observations, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("split fraction rho = {0} is outside (0, 1)")]
    BadRho(f64),

    #[error("explicit training index set is invalid: {0}")]
    BadExplicit(String),

    #[error("cannot train a model on an empty training set")]
    EmptyTraining,

    #[error("ridge penalty must be nonnegative, got {0}")]
    BadLambda(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("mahalanobis score requires an inverse covariance matrix")]
    MissingCovariance,

    #[error("modulation values must be strictly positive")]
    NonPositiveModulation,

    #[error("need at least {needed} residuals, got {got}")]
    TooFewResiduals { needed: usize, got: usize },

    #[error("level count {k} is outside [1, {n}]")]
    BadLevel { k: usize, n: usize },

    #[error("bounding box of an empty set")]
    EmptySet,

    #[error("alpha = {0} is outside (0, 1)")]
    BadAlpha(f64),

    #[error("calibration set is empty")]
    EmptyCalibration,

    #[error("{candidates} candidate responses exceed the cap of {cap}")]
    GridExplosion { candidates: u128, cap: usize },

    #[error("invalid grid configuration: {0}")]
    BadGrid(String),

    #[error("tau = {0} is outside (0, 1)")]
    BadTau(f64),

    #[error("inner miscoverage {0} is outside (0, 1)")]
    BadInnerAlpha(f64),

    #[error("invalid replicate configuration: {0}")]
    BadReplicates(String),

    #[error("{0} modulation is not supported here")]
    UnsupportedModulation(&'static str),

    #[error("model failure: {0}")]
    Model(String),
}

/// Coarse grouping of [`Error`] variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller passed an invalid parameter.
    Usage,
    /// Input data is malformed or inconsistent.
    Data,
    /// A numerical procedure could not produce a result.
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            BadRho(_)
            | BadExplicit(_)
            | BadLambda(_)
            | BadLevel { .. }
            | BadAlpha(_)
            | BadGrid(_)
            | BadTau(_)
            | BadInnerAlpha(_)
            | BadReplicates(_)
            | UnsupportedModulation(_) => ErrorClass::Usage,
            DimensionMismatch { .. }
            | NonFinite { .. }
            | TooFewRows { .. }
            | EmptyTraining
            | GridMismatch(_)
            | EmptySet
            | EmptyCalibration
            | TooFewResiduals { .. } => ErrorClass::Data,
            MissingCovariance | NonPositiveModulation | GridExplosion { .. } | Model(_) => {
                ErrorClass::Numeric
            }
        }
    }

    /// Variant name, used as a stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            DimensionMismatch { .. } => "DimensionMismatch",
            NonFinite { .. } => "NonFinite",
            TooFewRows { .. } => "TooFewRows",
            BadRho(_) => "BadRho",
            BadExplicit(_) => "BadExplicit",
            EmptyTraining => "EmptyTraining",
            BadLambda(_) => "BadLambda",
            GridMismatch(_) => "GridMismatch",
            MissingCovariance => "MissingCovariance",
            NonPositiveModulation => "NonPositiveModulation",
            TooFewResiduals { .. } => "TooFewResiduals",
            BadLevel { .. } => "BadLevel",
            EmptySet => "EmptySet",
            BadAlpha(_) => "BadAlpha",
            EmptyCalibration => "EmptyCalibration",
            GridExplosion { .. } => "GridExplosion",
            BadGrid(_) => "BadGrid",
            BadTau(_) => "BadTau",
            BadInnerAlpha(_) => "BadInnerAlpha",
            BadReplicates(_) => "BadReplicates",
            UnsupportedModulation(_) => "UnsupportedModulation",
            Model(_) => "Model",
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::BadAlpha(alpha))
    }
}
