use alloc::boxed::Box;

use crate::interferometry::DoubleGaussianParams;

/// Errors raised by the models in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate denominator {value} (the no-polarizer coincidence total must be positive)")]
    DegenerateDenominator { value: f64 },

    #[error("setting ({alpha_a_deg}°, {alpha_b_deg}°) is missing")]
    MissingSetting { alpha_a_deg: f64, alpha_b_deg: f64 },

    #[error("setting ({alpha_a_deg}°, {alpha_b_deg}°) is not one of the twelve correlation settings")]
    UnknownSetting { alpha_a_deg: f64, alpha_b_deg: f64 },

    #[error("setting ({alpha_a_deg}°, {alpha_b_deg}°) supplied more than once")]
    DuplicateSetting { alpha_a_deg: f64, alpha_b_deg: f64 },

    #[error("degenerate window at setting ({alpha_a_deg}°, {alpha_b_deg}°): zero singles")]
    DegenerateWindow { alpha_a_deg: f64, alpha_b_deg: f64 },

    #[error("detection probability {value} outside [0, 1] for {what}")]
    InvalidProbability { what: &'static str, value: f64 },

    #[error("bound undefined: denominator {denominator} is not positive")]
    BoundDomain { denominator: f64 },

    #[error("grid point {index} (beta = {beta}): {source}")]
    GridPoint {
        index: usize,
        beta: f64,
        source: Box<Error>,
    },

    #[error("sweep trace invalid: {reason}")]
    InvalidTrace { reason: &'static str },

    #[error("sweep trace carries no signal (max - min = {span})")]
    NoSignal { span: f64 },

    #[error("fit did not converge after {iterations} iterations (residual {residual})")]
    FitFailure {
        best: DoubleGaussianParams,
        residual: f64,
        iterations: usize,
    },

    #[error("UT1 table row {row}: {reason}")]
    TableRow { row: usize, reason: &'static str },

    #[error("UT1 table is empty")]
    EmptyTable,

    #[error("MJD {mjd} outside the UT1 table span [{first}, {last}]; extrapolation refused")]
    OutOfSpan { mjd: f64, first: f64, last: f64 },

    #[error("runs are binned on different angle grids")]
    GridMismatch,

    #[error("alignment skew {skew_s} s exceeds threshold {threshold_s} s")]
    AlignmentSkew { skew_s: f64, threshold_s: f64 },
}
