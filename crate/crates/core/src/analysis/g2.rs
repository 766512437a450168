use super::AnalysisError;
use crate::sim::EventStream;
use crate::units::{ns_to_secs, secs_to_ns};

/// Binned estimate of the intensity autocorrelation g²(τ) for τ ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Estimate {
    /// Bin centers (s).
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    /// Raw pair coincidences per bin.
    pub counts: Vec<u64>,
    pub bin_width: f64,
    /// Expected coincidences per bin for an uncorrelated stream of the same
    /// rate; `values = counts / normalization`.
    pub normalization: f64,
}

impl G2Estimate {
    /// Standard error of each value from Poisson counting statistics.
    pub fn std_errors(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| (c.max(1) as f64).sqrt() / self.normalization).collect()
    }

    /// Mean of the values with lag strictly above `from`.
    pub fn tail_mean(&self, from: f64) -> Option<f64> {
        let tail: Vec<f64> = self.lags.iter().zip(&self.values).filter(|(l, _)| **l > from).map(|(_, v)| *v).collect();
        (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
    }
}

/// Pair-coincidence estimate of g²(τ) = ⟨p(t)p(t−τ)⟩ / ⟨p(t)⟩².
///
/// Every event starting in `[0, T − max_lag]` is paired with all later events
/// less than `max_lag` after it. Bin counts are divided by
/// R²·(T − max_lag)·bin_width with R = events / T, so a stationary Poisson
/// stream gives 1 in every bin.
pub fn estimate_g2(stream: &EventStream, bin_width: f64, max_lag: f64) -> Result<G2Estimate, AnalysisError> {
    estimate_g2_from(&stream.timestamps(), stream.duration_ns(), bin_width, max_lag)
}

/// [`estimate_g2`] on bare sorted timestamps (ns).
pub fn estimate_g2_from(
    ts: &[u64],
    duration_ns: u64,
    bin_width: f64,
    max_lag: f64,
) -> Result<G2Estimate, AnalysisError> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(AnalysisError::InvalidParameter { name: "bin_width", reason: "must be positive".into() });
    }
    let bin_ns = secs_to_ns(bin_width);
    if bin_ns == 0 {
        return Err(AnalysisError::InvalidParameter { name: "bin_width", reason: "below 1 ns".into() });
    }
    if !(max_lag.is_finite() && max_lag >= bin_width) {
        return Err(AnalysisError::InvalidParameter { name: "max_lag", reason: "must be at least one bin".into() });
    }
    let n_bins = (secs_to_ns(max_lag) as f64 / bin_ns as f64).round().max(1.0) as usize;
    let lag_ns = n_bins as u64 * bin_ns;
    if 2 * lag_ns > duration_ns {
        return Err(AnalysisError::InvalidParameter {
            name: "max_lag",
            reason: "exceeds half the stream duration".into(),
        });
    }
    if ts.len() < 2 {
        return Err(AnalysisError::TooFewEvents(ts.len()));
    }

    let start_limit = duration_ns - lag_ns;
    let mut counts = vec![0u64; n_bins];
    for (i, &t0) in ts.iter().enumerate() {
        if t0 > start_limit {
            break;
        }
        for &t1 in &ts[i + 1..] {
            let lag = t1 - t0;
            if lag >= lag_ns {
                break;
            }
            counts[(lag / bin_ns) as usize] += 1;
        }
    }

    let duration = ns_to_secs(duration_ns);
    let rate = ts.len() as f64 / duration;
    let normalization = rate * rate * ns_to_secs(start_limit) * ns_to_secs(bin_ns);
    let bin = ns_to_secs(bin_ns);
    Ok(G2Estimate {
        lags: (0..n_bins).map(|k| (k as f64 + 0.5) * bin).collect(),
        values: counts.iter().map(|&c| c as f64 / normalization).collect(),
        counts,
        bin_width: bin,
        normalization,
    })
}
