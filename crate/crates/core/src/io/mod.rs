//! Files: photon streams, run configuration and reports.

pub mod config;
pub mod report;
pub mod stream_file;

pub use config::{AnalysisParams, ConfigError, RunConfig, Threshold};
pub use report::{read_summary, write_report_dir, ReportError, ReportFormat, Summary};
pub use stream_file::{read_stream, write_stream, StreamFileError};
