//! The analyze step: g², fit, sliding count, detection and histograms of one
//! stream, with thresholds and background taken from a
//! [`RunConfig`](crate::io::config::RunConfig).

use log::{info, warn};
use serde::Serialize;

use crate::analysis::{
    detect_in, estimate_g2, fit_g2, optimal_threshold, poisson_error_rates, poisson_upper_tail, sliding_count,
    AnalysisError, DetectionReport, G2Estimate, G2Fit, PeakHistograms, SlidingCount,
};
use crate::io::config::{AnalysisParams, Threshold};
use crate::sim::{EventStream, Origin};
use crate::units::ns_to_secs;

/// How the detection threshold was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Fixed,
    /// Error-minimizing threshold from the fitted signal and background means.
    Fitted,
    /// No atom signal: smallest threshold expecting under one background
    /// excursion per record.
    BackgroundOnly,
}

/// Greedy one-to-one matching of detected arrivals to true ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchCounts {
    pub matched: usize,
    /// True atoms without a detection.
    pub missed: usize,
    /// Detections without a true atom.
    pub fake: usize,
}

/// Pairs each detection with the nearest unused truth arrival within
/// `tolerance` seconds, scanning both sorted lists once.
pub fn match_arrivals(truth: &[f64], detected: &[f64], tolerance: f64) -> MatchCounts {
    let mut used = vec![false; truth.len()];
    let mut matched = 0;
    let mut lo = 0;
    for &d in detected {
        while lo < truth.len() && truth[lo] < d - tolerance {
            lo += 1;
        }
        let best = (lo..truth.len())
            .take_while(|&i| truth[i] <= d + tolerance)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| (truth[a] - d).abs().total_cmp(&(truth[b] - d).abs()));
        if let Some(i) = best {
            used[i] = true;
            matched += 1;
        }
    }
    MatchCounts { matched, missed: truth.len() - matched, fake: detected.len() - matched }
}

/// Everything the analyze step produces.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub events: usize,
    pub duration: f64,
    pub total_rate: f64,
    /// Background rate fed to the fit (1/s).
    pub noise_rate: f64,
    pub g2: G2Estimate,
    /// `None` when the autocorrelation shows no atom signal.
    pub fit: Option<G2Fit>,
    pub sliding: SlidingCount,
    pub detections: DetectionReport,
    pub threshold_source: ThresholdSource,
    pub histograms: PeakHistograms,
    /// Present when the stream carries a truth record.
    pub truth_atoms: Option<usize>,
    pub truth_match: Option<MatchCounts>,
}

/// Smallest threshold whose expected number of background upcrossings in
/// the record is below one. Ñ crosses up to n when an event arrives while
/// the window holds n − 1, so upcrossings occur at rate R_N·P(X = n − 1).
fn background_threshold(noise_rate: f64, window: f64, duration: f64) -> u32 {
    let lambda = noise_rate * window;
    let pmf = |k: u32| poisson_upper_tail(lambda, k) - poisson_upper_tail(lambda, k + 1);
    (1..).find(|&n| noise_rate * duration * pmf(n - 1) < 1.0).unwrap_or(1)
}

/// Runs the full analysis. The background-only peak histogram comes from
/// `noise_stream` when given, otherwise from the noise-labeled events.
/// Its measured rate then also replaces the configured background rate.
pub fn analyze(
    stream: &EventStream,
    params: &AnalysisParams,
    noise_stream: Option<&EventStream>,
) -> Result<AnalysisOutput, AnalysisError> {
    let noise_rate = noise_stream.map(EventStream::total_rate).unwrap_or(params.noise_rate);
    let total_rate = stream.total_rate();
    let g2 = estimate_g2(stream, params.bin_width, params.max_lag)?;
    let fit = match fit_g2(&g2, noise_rate, total_rate) {
        Ok(f) => {
            info!("g2 fit: <N> = {:.2}, dtau = {:.1} us, g2(0) = {:.2}", f.n_per_atom, f.delta_tau * 1e6, f.g2_zero);
            Some(f)
        }
        Err(AnalysisError::NoAtomSignal) => {
            warn!("no atom signal in the autocorrelation");
            None
        }
        Err(e) => return Err(e),
    };

    let lambda_noise = noise_rate * params.window;
    let (threshold, source) = match (params.threshold, &fit) {
        (Threshold::Fixed(n), _) => (n, ThresholdSource::Fixed),
        (Threshold::Auto, Some(f)) => {
            let occupancy = (f.atom_rate * params.window).min(0.5);
            (optimal_threshold(lambda_noise, f.n_per_atom, occupancy)?, ThresholdSource::Fitted)
        }
        (Threshold::Auto, None) => {
            (background_threshold(noise_rate, params.window, stream.duration()), ThresholdSource::BackgroundOnly)
        }
    };
    info!("detection threshold {threshold} ({source:?})");

    let sliding = sliding_count(stream, params.window);
    let mut detections = report_from(&sliding, threshold, params.window);
    if let Some(f) = &fit {
        detections.predicted = Some(poisson_error_rates(lambda_noise, f.n_per_atom, threshold)?);
    }

    let labeled_noise;
    let noise_source = match noise_stream {
        Some(s) => Some(s),
        None if stream.events().iter().all(|e| e.origin != Origin::Unlabeled) => {
            labeled_noise = stream.noise_only();
            Some(&labeled_noise)
        }
        None => None,
    };
    // Histograms cover every excursion, below threshold included.
    let all_peaks = report_from(&sliding, 1, params.window);
    let noise_report = noise_source.map(|s| report_from(&sliding_count(s, params.window), 1, params.window));
    let histograms = crate::analysis::peak_histogram(&all_peaks, noise_report.as_ref());

    let truth = stream.metadata().truth.as_ref();
    let truth_atoms = truth.map(Vec::len);
    let truth_match = truth.map(|t| {
        let arrivals: Vec<f64> = t.iter().map(|a| ns_to_secs(a.arrival_ns)).collect();
        let tol = fit.as_ref().map_or(params.window, |f| f.delta_tau.max(params.window));
        match_arrivals(&arrivals, &detections.atom_arrivals, tol)
    });

    Ok(AnalysisOutput {
        events: stream.len(),
        duration: stream.duration(),
        total_rate,
        noise_rate,
        g2,
        fit,
        sliding,
        detections,
        threshold_source: source,
        histograms,
        truth_atoms,
        truth_match,
    })
}

fn report_from(count: &SlidingCount, threshold: u32, window: f64) -> DetectionReport {
    let (arrivals, peaks) = detect_in(count, threshold);
    DetectionReport {
        atom_arrivals: arrivals.into_iter().map(|t| t as f64 * 1e-9).collect(),
        peak_heights: peaks,
        threshold,
        window,
        predicted: None,
    }
}
