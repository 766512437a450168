//! Simulation and analysis toolkit for time-resolved detection of single,
//! freely falling atoms by laser-induced fluorescence.
//!
//! The crate is split along the processing chain:
//!
//! - [`physics`]: deterministic atom-light model. Power-broadened scattering
//!   rate, recoil acceleration along the probe beam, photon yield per transit,
//!   detuning and beam-height scans, depumping and the detection-efficiency
//!   cascade.
//! - [`sim`]: seeded synthesis of time-tagged photon streams (Poissonian atom
//!   arrivals, inhomogeneous emission along each transit, detector thinning,
//!   background noise).
//! - [`analysis`]: recovery of atoms from a stream. Second-order
//!   autocorrelation and its triangular-model fit, sliding-window transient
//!   count rate, threshold detection and Poissonian error rates.
//! - [`io`]: stream file format, run configuration and CSV reports, and
//!   [`pipeline`], the analyze step that ties them together.
//!
//! All quantities are SI internally (angular frequencies in rad/s,
//! intensities in W/m²). Conversions from laboratory units live in [`units`].

pub mod analysis;
pub mod io;
pub mod physics;
pub mod pipeline;
pub mod sim;
pub mod units;

pub use analysis::{
    detect_atoms, estimate_g2, fit_g2, optimal_threshold, peak_histogram, poisson_error_rates, sliding_count,
    AnalysisError, DetectionReport, G2Estimate, G2Fit, SlidingCount,
};
pub use physics::{
    detuning_scan, efficiency_overall, fluorescence_duration_scan, integrate_transit, photon_yield, scattering_rate,
    AtomKinematics, EfficiencyChain, PhysicsError, ProbeBeamConfig, TransitRecord, TransitionParams,
};
pub use sim::{simulate_stream, EventStream, IsatModel, Origin, PhotonEvent, SimError, SimulationConfig};
