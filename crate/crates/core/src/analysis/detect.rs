use std::collections::BTreeMap;

use super::poisson::{poisson_error_rates, ErrorRates};
use super::sliding::{sliding_count_ns, SlidingCount};
use super::AnalysisError;
use crate::sim::EventStream;
use crate::units::secs_to_ns;

/// Atoms found in a stream by thresholding the transient count rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    /// Left edge of the earliest window reaching each excursion's peak (s).
    pub atom_arrivals: Vec<f64>,
    pub peak_heights: Vec<u32>,
    pub threshold: u32,
    /// Window length (s).
    pub window: f64,
    /// Poissonian error probabilities per window, when a signal model was attached.
    pub predicted: Option<ErrorRates>,
}

impl DetectionReport {
    pub fn len(&self) -> usize {
        self.atom_arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_arrivals.is_empty()
    }

    /// Peak height → number of atoms.
    pub fn histogram(&self) -> BTreeMap<u32, usize> {
        let mut h = BTreeMap::new();
        for &p in &self.peak_heights {
            *h.entry(p).or_default() += 1;
        }
        h
    }

    /// Attach the expected fake/miss probabilities for mean background
    /// `lambda_noise` and mean signal `lambda_signal` per window.
    pub fn with_error_model(mut self, lambda_noise: f64, lambda_signal: f64) -> Result<Self, AnalysisError> {
        self.predicted = Some(poisson_error_rates(lambda_noise, lambda_signal, self.threshold)?);
        Ok(self)
    }
}

/// Runs of Ñ(t) ≥ `threshold` in a precomputed sliding count. One atom per
/// run; runs separated by any stretch below threshold are distinct atoms.
pub fn detect_in(count: &SlidingCount, threshold: u32) -> (Vec<i64>, Vec<u32>) {
    let (mut arrivals, mut peaks) = (Vec::new(), Vec::new());
    let mut current: Option<(i64, u32)> = None;
    for &(t, n) in &count.breakpoints {
        if n >= threshold {
            match &mut current {
                Some((start, peak)) if n > *peak => {
                    *start = t;
                    *peak = n;
                }
                Some(_) => {}
                None => current = Some((t, n)),
            }
        } else if let Some((start, peak)) = current.take() {
            arrivals.push(start);
            peaks.push(peak);
        }
    }
    // The final breakpoint is always 0, so every run is closed above.
    (arrivals, peaks)
}

/// Finds atoms as maximal excursions of the sliding count at or above
/// `threshold`, with `window` in seconds.
pub fn detect_atoms(stream: &EventStream, window: f64, threshold: u32) -> Result<DetectionReport, AnalysisError> {
    if threshold < 1 {
        return Err(AnalysisError::InvalidParameter { name: "threshold", reason: "must be >= 1".into() });
    }
    let window_ns = secs_to_ns(window);
    if window_ns == 0 {
        return Err(AnalysisError::InvalidParameter { name: "window", reason: "must be at least 1 ns".into() });
    }
    let count = sliding_count_ns(&stream.timestamps(), window_ns);
    let (arrivals, peaks) = detect_in(&count, threshold);
    Ok(DetectionReport {
        atom_arrivals: arrivals.into_iter().map(|t| t as f64 * 1e-9).collect(),
        peak_heights: peaks,
        threshold,
        window,
        predicted: None,
    })
}

/// Peak-height distributions of a run with atoms and of a background-only run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakHistograms {
    pub signal: BTreeMap<u32, usize>,
    pub noise: BTreeMap<u32, usize>,
}

impl PeakHistograms {
    /// Rows (height, signal count, noise count) over every populated height.
    pub fn rows(&self) -> Vec<(u32, usize, usize)> {
        let heights: std::collections::BTreeSet<u32> = self.signal.keys().chain(self.noise.keys()).copied().collect();
        heights
            .into_iter()
            .map(|h| (h, self.signal.get(&h).copied().unwrap_or(0), self.noise.get(&h).copied().unwrap_or(0)))
            .collect()
    }
}

pub fn peak_histogram(report: &DetectionReport, noise_report: Option<&DetectionReport>) -> PeakHistograms {
    PeakHistograms { signal: report.histogram(), noise: noise_report.map(|r| r.histogram()).unwrap_or_default() }
}

/// Sample mean and variance of a height histogram, `None` for fewer than two entries.
pub fn histogram_moments(h: &BTreeMap<u32, usize>) -> Option<(f64, f64)> {
    let n: usize = h.values().sum();
    if n < 2 {
        return None;
    }
    let mean = h.iter().map(|(k, c)| f64::from(*k) * *c as f64).sum::<f64>() / n as f64;
    let var = h.iter().map(|(k, c)| (f64::from(*k) - mean).powi(2) * *c as f64).sum::<f64>() / (n - 1) as f64;
    Some((mean, var))
}
