//! Poissonian discrimination errors for a fixed counting window.

use super::AnalysisError;

fn check_lambda(name: &'static str, lambda: f64) -> Result<(), AnalysisError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidParameter { name, reason: format!("{lambda} is not a finite non-negative mean") })
    }
}

/// ln P(X = k) for X ~ Poisson(λ), λ > 0.
fn ln_pmf(lambda: f64, k: u32) -> f64 {
    let ln_fact: f64 = (2..=k).map(|i| f64::from(i).ln()).sum();
    -lambda + f64::from(k) * lambda.ln() - ln_fact
}

/// P(X < n), summed term by term.
pub fn poisson_lower_tail(lambda: f64, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return 1.0;
    }
    let mut ln_term = -lambda;
    let mut sum = ln_term.exp();
    for k in 1..n {
        ln_term += lambda.ln() - f64::from(k).ln();
        sum += ln_term.exp();
    }
    sum.min(1.0)
}

/// P(X ≥ n), summed directly over the upper tail so small values keep full
/// relative precision.
pub fn poisson_upper_tail(lambda: f64, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if f64::from(n) < lambda {
        return 1.0 - poisson_lower_tail(lambda, n);
    }
    let mut ln_term = ln_pmf(lambda, n);
    let mut sum = 0.0;
    let mut k = n;
    loop {
        let term = ln_term.exp();
        sum += term;
        if term <= sum * 1e-18 || term == 0.0 {
            break;
        }
        k += 1;
        ln_term += lambda.ln() - f64::from(k).ln();
    }
    sum.min(1.0)
}

/// Error probabilities of the decision "atom present iff count ≥ threshold".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    /// Probability that a window holding only background reaches the threshold.
    pub fake: f64,
    /// Probability that a window holding an atom stays below it.
    pub miss: f64,
}

/// Fake and miss probabilities for one counting window.
///
/// A window that contains an atom also collects the background, so the miss
/// probability uses the mean `lambda_signal + lambda_noise`.
pub fn poisson_error_rates(lambda_noise: f64, lambda_signal: f64, threshold: u32) -> Result<ErrorRates, AnalysisError> {
    check_lambda("lambda_noise", lambda_noise)?;
    check_lambda("lambda_signal", lambda_signal)?;
    if threshold < 1 {
        return Err(AnalysisError::InvalidParameter { name: "threshold", reason: "must be >= 1".into() });
    }
    Ok(ErrorRates {
        fake: poisson_upper_tail(lambda_noise, threshold),
        miss: poisson_lower_tail(lambda_signal + lambda_noise, threshold),
    })
}

/// Threshold minimizing `fake_weight·fake + miss_weight·miss`; the lowest
/// such threshold on ties.
pub fn optimal_threshold_weighted(
    lambda_noise: f64,
    lambda_signal: f64,
    fake_weight: f64,
    miss_weight: f64,
) -> Result<u32, AnalysisError> {
    check_lambda("lambda_noise", lambda_noise)?;
    check_lambda("lambda_signal", lambda_signal)?;
    if lambda_signal <= 0.0 {
        return Err(AnalysisError::InvalidParameter { name: "lambda_signal", reason: "must be positive".into() });
    }
    for (name, w) in [("fake_weight", fake_weight), ("miss_weight", miss_weight)] {
        if !(w.is_finite() && w >= 0.0) {
            return Err(AnalysisError::InvalidParameter { name, reason: format!("{w} is not a non-negative weight") });
        }
    }
    let top = (lambda_signal + lambda_noise + 10.0 * (lambda_signal + lambda_noise).sqrt() + 20.0).ceil() as u32;
    let mut best = (1, f64::INFINITY);
    for t in 1..=top.max(50) {
        let r = poisson_error_rates(lambda_noise, lambda_signal, t)?;
        let cost = fake_weight * r.fake + miss_weight * r.miss;
        if cost < best.1 {
            best = (t, cost);
        }
    }
    Ok(best.0)
}

/// Threshold minimizing the expected number of wrong decisions per window
/// when a fraction `atom_occupancy` (R_A·Δτ) of windows contain an atom.
pub fn optimal_threshold(lambda_noise: f64, lambda_signal: f64, atom_occupancy: f64) -> Result<u32, AnalysisError> {
    if !(0.0..=1.0).contains(&atom_occupancy) {
        return Err(AnalysisError::InvalidParameter {
            name: "atom_occupancy",
            reason: format!("{atom_occupancy} outside [0, 1]"),
        });
    }
    optimal_threshold_weighted(lambda_noise, lambda_signal, 1.0 - atom_occupancy, atom_occupancy)
}
