//! Report files of the analyze step.
//!
//! CSV reports carry a `#`-commented header with the producing version and a
//! JSON echo of the stream and analysis configuration, so a report directory
//! is enough to re-run the experiment. Output depends only on the inputs.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

use super::config::AnalysisParams;
use crate::pipeline::AnalysisOutput;
use crate::sim::SimulationConfig;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no report found in {0}")]
    Missing(PathBuf),
    #[error("{path}: malformed summary line {line}")]
    Malformed { path: PathBuf, line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

pub const SUMMARY_CSV: &str = "summary.csv";
pub const REPORT_JSON: &str = "report.json";

/// Scalar results of one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub events: usize,
    pub duration_s: f64,
    pub total_rate_hz: f64,
    pub noise_rate_hz: f64,
    pub g2_zero: Option<f64>,
    pub g2_zero_err: Option<f64>,
    pub delta_tau_us: Option<f64>,
    pub delta_tau_err_us: Option<f64>,
    pub n_per_atom: Option<f64>,
    pub n_per_atom_err: Option<f64>,
    pub event_rate_hz: Option<f64>,
    pub atom_rate_hz: Option<f64>,
    pub reduced_chi2: Option<f64>,
    pub window_us: f64,
    pub threshold: u32,
    pub threshold_source: String,
    pub atoms_detected: usize,
    pub predicted_fake: Option<f64>,
    pub predicted_miss: Option<f64>,
    pub truth_atoms: Option<usize>,
    pub matched: Option<usize>,
    pub missed: Option<usize>,
    pub fake: Option<usize>,
}

impl Summary {
    pub fn from_output(out: &AnalysisOutput) -> Self {
        let fit = out.fit.as_ref();
        let m = out.truth_match;
        Summary {
            events: out.events,
            duration_s: out.duration,
            total_rate_hz: out.total_rate,
            noise_rate_hz: out.noise_rate,
            g2_zero: fit.map(|f| f.g2_zero),
            g2_zero_err: fit.map(|f| f.errors.g2_zero),
            delta_tau_us: fit.map(|f| f.delta_tau * 1e6),
            delta_tau_err_us: fit.map(|f| f.errors.delta_tau * 1e6),
            n_per_atom: fit.map(|f| f.n_per_atom),
            n_per_atom_err: fit.map(|f| f.errors.n_per_atom),
            event_rate_hz: fit.map(|f| f.event_rate),
            atom_rate_hz: fit.map(|f| f.atom_rate),
            reduced_chi2: fit.map(|f| f.reduced_chi2),
            window_us: out.detections.window * 1e6,
            threshold: out.detections.threshold,
            threshold_source: serde_json::to_value(out.threshold_source)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            atoms_detected: out.detections.len(),
            predicted_fake: out.detections.predicted.map(|p| p.fake),
            predicted_miss: out.detections.predicted.map(|p| p.miss),
            truth_atoms: out.truth_atoms,
            matched: m.map(|m| m.matched),
            missed: m.map(|m| m.missed),
            fake: m.map(|m| m.fake),
        }
    }

    /// (key, value) rows in declaration order; absent values are empty.
    pub fn rows(&self) -> Vec<(String, String)> {
        let value = serde_json::to_value(self).expect("summary serializes");
        let map = value.as_object().expect("summary is an object");
        SUMMARY_KEYS
            .iter()
            .map(|&k| {
                let v = match &map[k] {
                    serde_json::Value::Null => String::new(),
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.to_owned(), v)
            })
            .collect()
    }
}

const SUMMARY_KEYS: [&str; 23] = [
    "events",
    "duration_s",
    "total_rate_hz",
    "noise_rate_hz",
    "g2_zero",
    "g2_zero_err",
    "delta_tau_us",
    "delta_tau_err_us",
    "n_per_atom",
    "n_per_atom_err",
    "event_rate_hz",
    "atom_rate_hz",
    "reduced_chi2",
    "window_us",
    "threshold",
    "threshold_source",
    "atoms_detected",
    "predicted_fake",
    "predicted_miss",
    "truth_atoms",
    "matched",
    "missed",
    "fake",
];

/// Provenance written at the top of every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportContext {
    pub stream_config: Option<SimulationConfig>,
    pub analysis: AnalysisParams,
}

fn create(path: &Path) -> Result<BufWriter<File>, ReportError> {
    File::create(path).map(BufWriter::new).map_err(|source| ReportError::Io { path: path.to_owned(), source })
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_owned(), source }
}

fn header<W: Write>(w: &mut W, what: &str, ctx: &ReportContext) -> std::io::Result<()> {
    writeln!(w, "# atomtrace {} {what}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# stream_config: {}", serde_json::to_string(&ctx.stream_config).map_err(std::io::Error::other)?)?;
    writeln!(w, "# analysis: {}", serde_json::to_string(&ctx.analysis).map_err(std::io::Error::other)?)
}

pub fn write_g2_csv<W: Write>(w: &mut W, out: &AnalysisOutput, ctx: &ReportContext) -> std::io::Result<()> {
    header(w, "g2 autocorrelation", ctx)?;
    writeln!(w, "lag_us,g2,g2_err,pairs,model")?;
    let errs = out.g2.std_errors();
    for (i, (&lag, &g)) in out.g2.lags.iter().zip(&out.g2.values).enumerate() {
        let model = out.fit.as_ref().map(|f| f.model(lag).to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", lag * 1e6, g, errs[i], out.g2.counts[i], model)?;
    }
    Ok(())
}

pub fn write_fit_csv<W: Write>(w: &mut W, out: &AnalysisOutput, ctx: &ReportContext) -> std::io::Result<()> {
    header(w, "g2 fit", ctx)?;
    writeln!(w, "parameter,value,std_error")?;
    if let Some(f) = &out.fit {
        let rows: [(&str, f64, String); 9] = [
            ("n_per_atom", f.n_per_atom, f.errors.n_per_atom.to_string()),
            ("delta_tau_us", f.delta_tau * 1e6, (f.errors.delta_tau * 1e6).to_string()),
            ("g2_zero", f.g2_zero, f.errors.g2_zero.to_string()),
            ("event_rate_hz", f.event_rate, f.errors.event_rate.to_string()),
            ("atom_rate_hz", f.atom_rate, String::new()),
            ("noise_rate_hz", f.noise_rate, String::new()),
            ("total_rate_hz", f.total_rate, String::new()),
            ("points", f.points as f64, String::new()),
            ("reduced_chi2", f.reduced_chi2, String::new()),
        ];
        for (k, v, e) in rows {
            writeln!(w, "{k},{v},{e}")?;
        }
    }
    Ok(())
}

pub fn write_sliding_csv<W: Write>(w: &mut W, out: &AnalysisOutput, ctx: &ReportContext) -> std::io::Result<()> {
    header(w, "sliding window count; count holds from t_ns until the next row", ctx)?;
    writeln!(w, "t_ns,count")?;
    for &(t, n) in &out.sliding.breakpoints {
        writeln!(w, "{t},{n}")?;
    }
    Ok(())
}

pub fn write_detections_csv<W: Write>(w: &mut W, out: &AnalysisOutput, ctx: &ReportContext) -> std::io::Result<()> {
    header(w, "detected atoms", ctx)?;
    writeln!(w, "arrival_s,peak_height")?;
    for (t, h) in out.detections.atom_arrivals.iter().zip(&out.detections.peak_heights) {
        writeln!(w, "{t},{h}")?;
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write>(w: &mut W, out: &AnalysisOutput, ctx: &ReportContext) -> std::io::Result<()> {
    header(w, "peak height histogram over all excursions", ctx)?;
    writeln!(w, "peak_height,signal,noise")?;
    for (h, s, n) in out.histograms.rows() {
        writeln!(w, "{h},{s},{n}")?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: &mut W, summary: &Summary, ctx: &ReportContext) -> std::io::Result<()> {
    header(w, "summary", ctx)?;
    writeln!(w, "key,value")?;
    for (k, v) in summary.rows() {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    version: &'a str,
    context: &'a ReportContext,
    summary: Summary,
    g2: JsonG2<'a>,
    detections: JsonDetections<'a>,
    sliding_count: &'a [(i64, u32)],
    histogram: Vec<(u32, usize, usize)>,
}

#[derive(Serialize)]
struct JsonG2<'a> {
    lag_us: Vec<f64>,
    values: &'a [f64],
    errors: Vec<f64>,
    pairs: &'a [u64],
    model: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct JsonDetections<'a> {
    arrival_s: &'a [f64],
    peak_height: &'a [u32],
}

/// Writes the reports into `dir` (created if needed) and returns the paths.
pub fn write_report_dir(
    dir: &Path,
    out: &AnalysisOutput,
    ctx: &ReportContext,
    format: ReportFormat,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    let summary = Summary::from_output(out);
    match format {
        ReportFormat::Json => {
            let path = dir.join(REPORT_JSON);
            let report = JsonReport {
                version: env!("CARGO_PKG_VERSION"),
                context: ctx,
                summary,
                g2: JsonG2 {
                    lag_us: out.g2.lags.iter().map(|l| l * 1e6).collect(),
                    values: &out.g2.values,
                    errors: out.g2.std_errors(),
                    pairs: &out.g2.counts,
                    model: out.fit.as_ref().map(|f| out.g2.lags.iter().map(|&l| f.model(l)).collect()),
                },
                detections: JsonDetections {
                    arrival_s: &out.detections.atom_arrivals,
                    peak_height: &out.detections.peak_heights,
                },
                sliding_count: &out.sliding.breakpoints,
                histogram: out.histograms.rows(),
            };
            let mut w = create(&path)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w).and_then(|_| w.flush()).map_err(io_at(&path))?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            type Writer = fn(&mut BufWriter<File>, &AnalysisOutput, &ReportContext) -> std::io::Result<()>;
            let files: [(&str, Writer); 5] = [
                ("g2.csv", write_g2_csv),
                ("fit.csv", write_fit_csv),
                ("sliding_count.csv", write_sliding_csv),
                ("detections.csv", write_detections_csv),
                ("histogram.csv", write_histogram_csv),
            ];
            let mut paths = Vec::new();
            for (name, f) in files {
                let path = dir.join(name);
                let mut w = create(&path)?;
                f(&mut w, out, ctx).and_then(|_| w.flush()).map_err(io_at(&path))?;
                paths.push(path);
            }
            let path = dir.join(SUMMARY_CSV);
            let mut w = create(&path)?;
            write_summary_csv(&mut w, &summary, ctx).and_then(|_| w.flush()).map_err(io_at(&path))?;
            paths.push(path);
            Ok(paths)
        }
    }
}

/// Summary rows of a report directory written in either format.
pub fn read_summary(dir: &Path) -> Result<Vec<(String, String)>, ReportError> {
    let csv = dir.join(SUMMARY_CSV);
    let json = dir.join(REPORT_JSON);
    if csv.is_file() {
        let text = std::fs::read_to_string(&csv).map_err(io_at(&csv))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.starts_with('#') || line == "key,value" || line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once(',').ok_or(ReportError::Malformed { path: csv.clone(), line: i + 1 })?;
            rows.push((k.to_owned(), v.to_owned()));
        }
        Ok(rows)
    } else if json.is_file() {
        let text = std::fs::read_to_string(&json).map_err(io_at(&json))?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let summary: Summary = serde_json::from_value(v["summary"].clone())?;
        Ok(summary.rows())
    } else {
        Err(ReportError::Missing(dir.to_owned()))
    }
}

/// Writes (x, y) scan columns under a commented header.
pub fn write_scan_csv<W: Write>(
    w: &mut W,
    comment: &[String],
    columns: (&str, &str),
    points: &[(f64, f64)],
) -> std::io::Result<()> {
    writeln!(w, "# atomtrace {} scan", env!("CARGO_PKG_VERSION"))?;
    for c in comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{},{}", columns.0, columns.1)?;
    for (x, y) in points {
        writeln!(w, "{x},{y}")?;
    }
    Ok(())
}
