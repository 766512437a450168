//! Seeded synthesis of time-tagged photon detection streams.
//!
//! A run draws Poissonian atom arrivals, integrates (or reuses) each atom's
//! transit, emits photons along it as an inhomogeneous Poisson process,
//! thins them by the detection efficiency and overlays homogeneous background
//! counts. Every random draw comes from a substream of the configured seed,
//! so a config reproduces its stream bit for bit.

mod process;
pub mod rng;
mod stream;

use log::warn;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use thiserror::Error;

use crate::physics::{
    depump_rate, integrate_transit, AtomKinematics, PhysicsError, ProbeBeamConfig, TransitRecord, TransitionParams,
    DEFAULT_STEP,
};
use crate::units::{mw_per_cm2_to_si, secs_to_ns};
use rng::{substream_rng, Substream};

pub use process::{
    emit_photons_for_atom, homogeneous_poisson, sample_atom_arrivals, sample_isat, sample_noise, Emission,
};
pub use stream::{AtomTruth, EventStream, Origin, PhotonEvent, StreamMetadata};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("events not sorted at index {index}")]
    Unsorted { index: usize },
    #[error("event at {timestamp_ns} ns lies beyond the stream duration {duration_ns} ns")]
    OutOfRange { timestamp_ns: u64, duration_ns: u64 },
    #[error("atom {atom}: truth record says {expected} detected photons, stream has {found}")]
    TruthMismatch { atom: u32, expected: u32, found: u32 },
}

/// Per-atom saturation intensity. Randomly populated magnetic sublevels give
/// each atom a different effective I_sat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsatModel {
    /// Every atom uses the transition's averaged I_sat.
    Fixed,
    /// Uniform choice from a set of intensities (W/m²).
    Discrete(Vec<f64>),
    /// Uniform on `[lo, hi]` (W/m²).
    UniformRange { lo: f64, hi: f64 },
}

impl IsatModel {
    /// π-polarized probe: 2.9 … 6.6 mW/cm².
    pub fn pi_polarized() -> Self {
        IsatModel::UniformRange { lo: mw_per_cm2_to_si(2.9), hi: mw_per_cm2_to_si(6.6) }
    }

    /// σ-polarized probe: 1.6 … 46.4 mW/cm².
    pub fn sigma_polarized() -> Self {
        IsatModel::UniformRange { lo: mw_per_cm2_to_si(1.6), hi: mw_per_cm2_to_si(46.4) }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |reason: String| Err(SimError::InvalidConfig { field: "isat_model", reason });
        match self {
            IsatModel::Fixed => Ok(()),
            IsatModel::Discrete(set) if set.is_empty() => bad("empty intensity set".into()),
            IsatModel::Discrete(set) if set.iter().any(|x| !(x.is_finite() && *x > 0.0)) => {
                bad("intensities must be positive".into())
            }
            IsatModel::Discrete(_) => Ok(()),
            IsatModel::UniformRange { lo, hi } if !(lo.is_finite() && hi.is_finite() && *lo > 0.0) => {
                bad("range bounds must be positive".into())
            }
            IsatModel::UniformRange { lo, hi } if lo > hi => bad(format!("lo {lo} > hi {hi}")),
            IsatModel::UniformRange { .. } => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Record length (s).
    pub duration: f64,
    /// R_A, atoms entering the probe per second.
    pub atom_rate: f64,
    pub transition: TransitionParams,
    pub beam: ProbeBeamConfig,
    pub kinematics: AtomKinematics,
    pub detection_efficiency: f64,
    /// R_N, background counts per second.
    pub noise_rate: f64,
    pub seed: u64,
    pub isat_model: IsatModel,
    pub depump_enabled: bool,
    /// RK4 step for transit integration (s).
    pub step: f64,
}

impl SimulationConfig {
    /// The measured operating point: 524 ms record, R_A = 1.8 kHz,
    /// R_N = 9.4 kHz, I/I_sat = 2.7, Δ = 0.43 Γ, Δτ = 60 µs, and a detection
    /// efficiency giving 20 counted photons per atom.
    pub fn operating_point(seed: u64) -> Self {
        let transition = TransitionParams::rubidium85();
        let kinematics = AtomKinematics::falling();
        let beam = ProbeBeamConfig::nominal_geometry(&transition, 2.7, 0.43 * transition.gamma())
            .with_interaction_time(60e-6, &kinematics);
        let mut cfg = SimulationConfig {
            duration: 0.524,
            atom_rate: 1.8e3,
            transition,
            beam,
            kinematics,
            detection_efficiency: 0.03,
            noise_rate: 9.4e3,
            seed,
            isat_model: IsatModel::Fixed,
            depump_enabled: false,
            step: DEFAULT_STEP,
        };
        cfg.detection_efficiency = cfg.efficiency_for(20.0).expect("operating point is valid");
        cfg
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let check = |ok: bool, field: &'static str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(SimError::InvalidConfig { field, reason: reason.into() })
            }
        };
        check(self.duration.is_finite() && self.duration > 0.0, "duration", "must be positive")?;
        check(self.atom_rate.is_finite() && self.atom_rate >= 0.0, "atom_rate", "must be >= 0")?;
        check(self.noise_rate.is_finite() && self.noise_rate >= 0.0, "noise_rate", "must be >= 0")?;
        check((0.0..=1.0).contains(&self.detection_efficiency), "detection_efficiency", "must lie in [0, 1]")?;
        check(self.step.is_finite() && self.step > 0.0, "step", "must be positive")?;
        self.beam.validate()?;
        self.kinematics.validate()?;
        self.isat_model.validate()
    }

    /// Δτ = Δz / v⊥.
    pub fn interaction_time(&self) -> f64 {
        self.kinematics.interaction_time(&self.beam)
    }

    /// Transit of an atom with the nominal I_sat.
    pub fn nominal_transit(&self) -> Result<TransitRecord, SimError> {
        Ok(integrate_transit(&self.transition, &self.beam, &self.kinematics, self.step)?)
    }

    /// Detection efficiency that yields `per_atom` counted photons for an
    /// atom with nominal I_sat and no depumping.
    pub fn efficiency_for(&self, per_atom: f64) -> Result<f64, SimError> {
        let n = self.nominal_transit()?.n_phot;
        let eta = per_atom / n;
        if !(0.0..=1.0).contains(&eta) {
            return Err(SimError::InvalidConfig {
                field: "detection_efficiency",
                reason: format!("{per_atom} counts per atom needs efficiency {eta}, photon yield is only {n}"),
            });
        }
        Ok(eta)
    }

    pub fn duration_ns(&self) -> u64 {
        secs_to_ns(self.duration)
    }
}

struct AtomOutcome {
    truth: AtomTruth,
    events: Vec<u64>,
}

fn simulate_atom(
    config: &SimulationConfig,
    nominal: Option<&TransitRecord>,
    id: u32,
    arrival: f64,
) -> Result<AtomOutcome, SimError> {
    let mut rng = substream_rng(config.seed, Substream::Atom(u64::from(id)));
    let i_sat = sample_isat(&config.isat_model, config.transition.i_sat(), &mut rng)?;
    let params = config.transition.with_i_sat(i_sat)?;
    let mut transit = match nominal {
        Some(t) => Cow::Borrowed(t),
        None => Cow::Owned(integrate_transit(&params, &config.beam, &config.kinematics, config.step)?),
    };
    if config.depump_enabled {
        let rate = depump_rate(&params, config.beam.intensity, config.beam.detuning);
        if rate > 0.0 {
            let t_dark = Exp::new(rate).expect("positive rate").sample(&mut rng);
            if t_dark < transit.interaction_time {
                transit.to_mut().depump_at(t_dark);
            }
        }
    }
    let emission = emit_photons_for_atom(&transit, config.detection_efficiency, &mut rng)?;
    let end = config.duration_ns();
    let events: Vec<u64> = emission.detected.iter().map(|&dt| secs_to_ns(arrival + dt)).filter(|&t| t <= end).collect();
    Ok(AtomOutcome {
        truth: AtomTruth {
            id,
            arrival_ns: secs_to_ns(arrival),
            emitted: emission.emitted,
            detected: events.len() as u32,
            i_sat,
            depumped_at: transit.depumped_at,
        },
        events,
    })
}

/// Generates one labeled photon stream from `config`.
pub fn simulate_stream(config: &SimulationConfig) -> Result<EventStream, SimError> {
    config.validate()?;
    let occupancy = config.atom_rate * config.interaction_time();
    if occupancy > 0.2 {
        warn!("mean atom number in the probe is {occupancy:.2}; transits will pile up");
    }
    let arrivals =
        sample_atom_arrivals(config.atom_rate, config.duration, &mut substream_rng(config.seed, Substream::Arrivals));
    let nominal = match (&config.isat_model, arrivals.is_empty()) {
        (IsatModel::Fixed, false) => Some(config.nominal_transit()?),
        _ => None,
    };
    let atoms = arrivals
        .par_iter()
        .enumerate()
        .map(|(i, &a)| simulate_atom(config, nominal.as_ref(), i as u32, a))
        .collect::<Result<Vec<_>, _>>()?;

    let noise = sample_noise(config.noise_rate, config.duration, &mut substream_rng(config.seed, Substream::Noise));
    let mut events: Vec<PhotonEvent> =
        Vec::with_capacity(noise.len() + atoms.iter().map(|a| a.events.len()).sum::<usize>());
    let end = config.duration_ns();
    events.extend(
        noise
            .iter()
            .map(|&t| secs_to_ns(t))
            .filter(|&t| t <= end)
            .map(|t| PhotonEvent { timestamp_ns: t, origin: Origin::Noise }),
    );
    let mut truth = Vec::with_capacity(atoms.len());
    for atom in atoms {
        let origin = Origin::Atom(atom.truth.id);
        events.extend(atom.events.into_iter().map(|t| PhotonEvent { timestamp_ns: t, origin }));
        truth.push(atom.truth);
    }
    events.sort_unstable();
    EventStream::new(events, end, StreamMetadata { config: Some(config.clone()), truth: Some(truth) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(seed: u64) -> SimulationConfig {
        SimulationConfig { atom_rate: 0.0, noise_rate: 0.0, ..SimulationConfig::operating_point(seed) }
    }

    #[test]
    fn empty_when_nothing_happens() {
        let s = simulate_stream(&quiet(1)).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.metadata().truth.as_ref().unwrap().len(), 0);
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = SimulationConfig { duration: 0.05, ..SimulationConfig::operating_point(42) };
        assert_eq!(simulate_stream(&cfg).unwrap(), simulate_stream(&cfg).unwrap());
        let other = SimulationConfig { seed: 43, ..cfg.clone() };
        assert_ne!(simulate_stream(&cfg).unwrap().timestamps(), simulate_stream(&other).unwrap().timestamps());
    }

    #[test]
    fn operating_point_efficiency() {
        let cfg = SimulationConfig::operating_point(0);
        let n = cfg.nominal_transit().unwrap().n_phot;
        assert!((cfg.detection_efficiency * n - 20.0).abs() < 1e-9);
        assert!((cfg.interaction_time() - 60e-6).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SimulationConfig::operating_point(0);
        for bad in [
            SimulationConfig { duration: 0.0, ..base.clone() },
            SimulationConfig { atom_rate: -1.0, ..base.clone() },
            SimulationConfig { noise_rate: f64::NAN, ..base.clone() },
            SimulationConfig { detection_efficiency: 1.01, ..base.clone() },
            SimulationConfig { isat_model: IsatModel::UniformRange { lo: 2.0, hi: 1.0 }, ..base.clone() },
        ] {
            assert!(simulate_stream(&bad).is_err());
        }
        assert!(base.efficiency_for(1e6).is_err());
    }

    #[test]
    fn labels_consistent_with_truth() {
        let cfg = SimulationConfig { duration: 0.1, ..SimulationConfig::operating_point(5) };
        let s = simulate_stream(&cfg).unwrap();
        let truth = s.metadata().truth.as_ref().unwrap();
        let atom_events = s.len() - s.count_noise();
        assert_eq!(atom_events, truth.iter().map(|a| a.detected as usize).sum::<usize>());
        assert!(truth.iter().all(|a| a.emitted >= a.detected));
    }

    #[test]
    fn depumping_cuts_emission() {
        let base = SimulationConfig { duration: 0.2, noise_rate: 0.0, ..SimulationConfig::operating_point(8) };
        let dark = SimulationConfig { depump_enabled: true, ..base.clone() };
        let a = simulate_stream(&base).unwrap();
        let b = simulate_stream(&dark).unwrap();
        let truth = b.metadata().truth.as_ref().unwrap();
        let depumped = truth.iter().filter(|t| t.depumped_at.is_some()).count() as f64 / truth.len() as f64;
        // P(t_dark < 60 µs) = 1 − exp(−60/τ), τ ≈ 130 µs at Δ = 0.43 Γ
        assert!((0.28..0.45).contains(&depumped), "{depumped}");
        assert!(b.len() < a.len());
    }

    #[test]
    fn adding_atoms_keeps_earlier_draws() {
        // Per-atom substreams: a longer record reproduces the atoms of a shorter one.
        let short = SimulationConfig { duration: 0.02, noise_rate: 0.0, ..SimulationConfig::operating_point(3) };
        let long = SimulationConfig { duration: 0.04, ..short.clone() };
        let a = simulate_stream(&short).unwrap();
        let b = simulate_stream(&long).unwrap();
        let ta = a.metadata().truth.as_ref().unwrap();
        let tb = b.metadata().truth.as_ref().unwrap();
        for (x, y) in ta.iter().zip(tb) {
            assert_eq!(x.arrival_ns, y.arrival_ns);
            assert_eq!(x.emitted, y.emitted);
        }
    }
}
