//! Recovering atoms from photon streams.

mod detect;
mod fit;
mod g2;
mod poisson;
mod sliding;

use thiserror::Error;

pub use detect::{detect_atoms, detect_in, histogram_moments, peak_histogram, DetectionReport, PeakHistograms};
pub use fit::{fit_g2, g2_model, G2Fit, G2FitErrors};
pub use g2::{estimate_g2, estimate_g2_from, G2Estimate};
pub use poisson::{
    optimal_threshold, optimal_threshold_weighted, poisson_error_rates, poisson_lower_tail, poisson_upper_tail,
    ErrorRates,
};
pub use sliding::{sliding_count, sliding_count_ns, SlidingCount};

/// Default g² bin width (s).
pub const DEFAULT_BIN_WIDTH: f64 = 2e-6;
/// Default largest g² lag (s).
pub const DEFAULT_MAX_LAG: f64 = 300e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("need at least 2 events, got {0}")]
    TooFewEvents(usize),
    #[error("no atom signal: autocorrelation is flat")]
    NoAtomSignal,
    #[error("fit did not converge: {0}")]
    NotConverged(String),
}
