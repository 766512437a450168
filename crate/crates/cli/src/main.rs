//! `atomtrace`: simulate photon streams, analyze them and sweep the transit model.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atomtrace::analysis::AnalysisError;
use atomtrace::io::config::{ConfigError, RunConfig};
use atomtrace::io::report::{read_summary, write_report_dir, write_scan_csv, ReportContext, ReportError, ReportFormat};
use atomtrace::io::stream_file::{read_stream, write_stream, StreamFileError};
use atomtrace::physics::{detuning_scan, fluorescence_duration_scan, PhysicsError, DEFAULT_EXIT_FRACTION};
use atomtrace::pipeline::analyze;
use atomtrace::sim::{simulate_stream, SimError};
use atomtrace::units::{angular_to_mhz, mm_to_m};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

#[derive(Parser)]
#[command(name = "atomtrace", version, about = "Single-atom fluorescence detection: simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanKind {
    /// Photon yield against probe detuning (x in units of Γ).
    Detuning,
    /// Fluorescence duration against beam height (x in mm).
    Height,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a photon stream and write it to a stream file.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a stream file and write reports into a directory.
    Analyze {
        stream: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Background-only stream for the noise histogram and R_N.
        #[arg(long)]
        noise_stream: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Sweep detuning or beam height through the transit model.
    Scan {
        #[arg(long, value_enum)]
        kind: ScanKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
        /// Interaction time for detuning scans (µs); defaults to the beam height over v⊥.
        #[arg(long)]
        interaction_time_us: Option<f64>,
        /// Rate fraction of the running maximum that ends the observed fluorescence.
        #[arg(long, default_value_t = DEFAULT_EXIT_FRACTION)]
        exit_fraction: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Print the summary of a report directory.
    Report {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

/// Error categories with their exit codes.
#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Format(String),
    Physics(String),
    Analysis(String),
}

impl CliError {
    fn category(&self) -> (&'static str, u8) {
        match self {
            CliError::Config(_) => ("config", 3),
            CliError::Io(_) => ("io", 4),
            CliError::Format(_) => ("format", 5),
            CliError::Physics(_) => ("physics", 6),
            CliError::Analysis(_) => ("analysis", 7),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Io(m)
            | CliError::Format(m)
            | CliError::Physics(m)
            | CliError::Analysis(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<StreamFileError> for CliError {
    fn from(e: StreamFileError) -> Self {
        match e {
            StreamFileError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<PhysicsError> for CliError {
    fn from(e: PhysicsError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } | ReportError::Missing(_) => CliError::Io(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default_operating_point(),
    })
}

fn simulate(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let mut cfg = load_config(config)?.simulation;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let stream = simulate_stream(&cfg)?;
    info!("simulated {} events over {} s", stream.len(), stream.duration());
    write_stream(&stream, out)?;
    Ok(())
}

fn analyze_cmd(
    stream_path: &Path,
    config: Option<&Path>,
    noise: Option<&Path>,
    out: &Path,
    format: Format,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let stream = read_stream(stream_path)?;
    let noise_stream = noise.map(read_stream).transpose()?;
    let output = analyze(&stream, &cfg.analysis, noise_stream.as_ref())?;
    let ctx = ReportContext { stream_config: stream.metadata().config.clone(), analysis: cfg.analysis };
    for p in write_report_dir(out, &output, &ctx, format.into())? {
        info!("wrote {}", p.display());
    }
    Ok(())
}

/// Column names, (x, y) rows and header comments.
type ScanTable = ((&'static str, &'static str), Vec<(f64, f64)>, Vec<String>);

#[allow(clippy::too_many_arguments)]
fn scan(
    kind: ScanKind,
    config: Option<&Path>,
    from: f64,
    to: f64,
    points: usize,
    interaction_time_us: Option<f64>,
    exit_fraction: f64,
    out: &Path,
    format: Format,
) -> Result<(), CliError> {
    if points < 2 || !(from.is_finite() && to.is_finite() && from < to) {
        return Err(CliError::Config("scan needs --from < --to and --points >= 2".into()));
    }
    let sim = load_config(config)?.simulation;
    let (params, beam, kin) = (&sim.transition, &sim.beam, &sim.kinematics);
    let xs: Vec<f64> = (0..points).map(|i| from + (to - from) * i as f64 / (points - 1) as f64).collect();
    let (columns, data, comment): ScanTable = match kind {
        ScanKind::Detuning => {
            let t = interaction_time_us.map(|t| t * 1e-6).unwrap_or_else(|| sim.interaction_time());
            let grid: Vec<f64> = xs.iter().map(|x| x * params.gamma()).collect();
            let scan = detuning_scan(params, beam, kin, t, &grid, sim.step)?;
            let (d_opt, n_opt) = scan.optimum();
            let comment = vec![
                format!("interaction_time_us: {}", t * 1e6),
                format!("saturation: {}", beam.intensity / params.i_sat()),
                format!("optimum: detuning_mhz {} n_phot {}", angular_to_mhz(d_opt), n_opt),
            ];
            let data = scan.points.iter().map(|&(d, n)| (d / params.gamma(), n)).collect();
            (("detuning_gamma", "n_phot"), data, comment)
        }
        ScanKind::Height => {
            let grid: Vec<f64> = xs.iter().map(|&x| mm_to_m(x)).collect();
            let scan = fluorescence_duration_scan(params, beam, kin, &grid, exit_fraction, sim.step)?;
            let comment = vec![
                format!("detuning_mhz: {}", angular_to_mhz(beam.detuning)),
                format!("saturation: {}", beam.intensity / params.i_sat()),
                format!("exit_fraction: {exit_fraction}"),
            ];
            let data = scan.iter().zip(&xs).map(|(&(_, d), &x)| (x, d * 1e6)).collect();
            (("height_mm", "duration_us"), data, comment)
        }
    };
    let mut w = BufWriter::new(File::create(out).map_err(io_err(out))?);
    match format {
        Format::Csv => write_scan_csv(&mut w, &comment, columns, &data).map_err(io_err(out))?,
        Format::Json => {
            let points: Vec<_> = data.iter().map(|&(x, y)| json!({ columns.0: x, columns.1: y })).collect();
            serde_json::to_writer_pretty(&mut w, &json!({ "comment": comment, "points": points }))
                .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
            writeln!(w).map_err(io_err(out))?;
        }
    }
    w.flush().map_err(io_err(out))
}

fn report(dir: &Path, format: Format) -> Result<(), CliError> {
    let rows = read_summary(dir)?;
    let mut out = std::io::stdout().lock();
    let res = match format {
        Format::Csv => rows.iter().try_for_each(|(k, v)| writeln!(out, "{k},{v}")),
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                rows.into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
            serde_json::to_writer_pretty(&mut out, &map).map_err(std::io::Error::from).and_then(|_| writeln!(out))
        }
    };
    res.map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, seed, out } => simulate(config.as_deref(), seed, &out),
        Command::Analyze { stream, config, noise_stream, out, format } => {
            analyze_cmd(&stream, config.as_deref(), noise_stream.as_deref(), &out, format)
        }
        Command::Scan { kind, config, from, to, points, interaction_time_us, exit_fraction, out, format } => {
            scan(kind, config.as_deref(), from, to, points, interaction_time_us, exit_fraction, &out, format)
        }
        Command::Report { dir, format } => report(&dir, format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ATOMTRACE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (category, code) = e.category();
            eprintln!("error[{category}]: {}", e.message());
            ExitCode::from(code)
        }
    }
}
