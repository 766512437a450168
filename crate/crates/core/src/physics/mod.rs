//! Deterministic atom-light physics of a probe transition.
//!
//! An atom falling through a rectangular, homogeneously illuminated probe
//! beam scatters photons at the power-broadened rate
//!
//! ```text
//! R_P = (Γ/2) · I / (I + I_sat · (1 + ((Δ − k v∥) / (Γ/2))²))
//! ```
//!
//! and each scattered photon pushes it along the beam by one recoil velocity,
//! which Doppler-shifts it through (and eventually out of) resonance.

mod efficiency;
mod scan;
mod transit;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::units::{mhz_to_angular, mm_to_m, mw_per_cm2_to_si, AMU, HBAR};

pub use efficiency::{efficiency_overall, EfficiencyChain, Stage};
pub use scan::{detuning_scan, fluorescence_duration_scan, DetuningScan};
pub use transit::{
    integrate_transit, photon_yield, transit_for, TransitRecord, TransitSample, DEFAULT_EXIT_FRACTION, DEFAULT_STEP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("detuning grid is empty")]
    EmptyGrid,
    #[error("grid is not sorted ascending")]
    UnsortedGrid,
    #[error("resonance exit fraction {0} outside (0, 1)")]
    ExitFraction(f64),
    #[error("efficiency stage `{label}` has transmission {value} outside [0, 1]")]
    StageOutOfRange { label: String, value: f64 },
}

pub(crate) fn require(cond: bool, name: &'static str, reason: impl Into<String>) -> Result<(), PhysicsError> {
    if cond {
        Ok(())
    } else {
        Err(PhysicsError::InvalidParameter { name, reason: reason.into() })
    }
}

/// Constants of the driven (cycling) transition.
///
/// `recoil_velocity` is derived from wavelength and mass and cannot be set
/// independently. `depump_branching` scales the off-resonant channel
/// that leaks atoms into the dark hyperfine ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransitionSpec", into = "TransitionSpec")]
pub struct TransitionParams {
    gamma: f64,
    wavelength: f64,
    i_sat: f64,
    atom_mass: f64,
    recoil_velocity: f64,
    depump_detuning: f64,
    hyperfine_splitting: f64,
    depump_branching: f64,
}

/// Serialized form of [`TransitionParams`]; the recoil velocity is rebuilt on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub gamma: f64,
    pub wavelength: f64,
    pub i_sat: f64,
    pub atom_mass: f64,
    pub depump_detuning: f64,
    pub hyperfine_splitting: f64,
    pub depump_branching: f64,
}

impl TryFrom<TransitionSpec> for TransitionParams {
    type Error = PhysicsError;

    fn try_from(s: TransitionSpec) -> Result<Self, Self::Error> {
        TransitionParams::new(s.gamma, s.wavelength, s.i_sat, s.atom_mass, s.depump_detuning, s.hyperfine_splitting)?
            .with_depump_branching(s.depump_branching)
    }
}

impl From<TransitionParams> for TransitionSpec {
    fn from(p: TransitionParams) -> Self {
        TransitionSpec {
            gamma: p.gamma,
            wavelength: p.wavelength,
            i_sat: p.i_sat,
            atom_mass: p.atom_mass,
            depump_detuning: p.depump_detuning,
            hyperfine_splitting: p.hyperfine_splitting,
            depump_branching: p.depump_branching,
        }
    }
}

/// Depump timescale used to calibrate the default branching fraction (s).
pub const RB85_DEPUMP_TIME: f64 = 130e-6;
/// Saturation parameter at which [`RB85_DEPUMP_TIME`] holds.
pub const RB85_DEPUMP_SATURATION: f64 = 2.7;

impl TransitionParams {
    /// Builds a transition with zero depump branching.
    ///
    /// `depump_detuning` is the position of the leaky excited level relative
    /// to the cycling resonance; the leak is driven at `Δ − depump_detuning`.
    pub fn new(
        gamma: f64,
        wavelength: f64,
        i_sat: f64,
        atom_mass: f64,
        depump_detuning: f64,
        hyperfine_splitting: f64,
    ) -> Result<Self, PhysicsError> {
        require(gamma.is_finite() && gamma > 0.0, "gamma", "must be positive")?;
        require(wavelength.is_finite() && wavelength > 0.0, "wavelength", "must be positive")?;
        require(i_sat.is_finite() && i_sat > 0.0, "i_sat", "must be positive")?;
        require(atom_mass.is_finite() && atom_mass > 0.0, "atom_mass", "must be positive")?;
        require(depump_detuning.is_finite(), "depump_detuning", "must be finite")?;
        require(hyperfine_splitting.is_finite(), "hyperfine_splitting", "must be finite")?;
        let k = 2.0 * PI / wavelength;
        Ok(TransitionParams {
            gamma,
            wavelength,
            i_sat,
            atom_mass,
            recoil_velocity: HBAR * k / atom_mass,
            depump_detuning,
            hyperfine_splitting,
            depump_branching: 0.0,
        })
    }

    /// ⁸⁵Rb 5S₁/₂(F=3) → 5P₃/₂(F'=4) at 780 nm, Γ = 2π×6 MHz, I_sat = 3.9 mW/cm²,
    /// with the F'=3 leak 2π×121 MHz below and the depump branching calibrated
    /// to a 130 µs dark-pumping time at I/I_sat = 2.7 on resonance.
    pub fn rubidium85() -> Self {
        let p = TransitionParams::new(
            mhz_to_angular(6.0),
            780e-9,
            mw_per_cm2_to_si(3.9),
            85.0 * AMU,
            mhz_to_angular(-121.0),
            mhz_to_angular(3000.0),
        )
        .expect("rubidium constants are valid");
        let branching = p.calibrate_depump_branching(RB85_DEPUMP_SATURATION, RB85_DEPUMP_TIME);
        p.with_depump_branching(branching).expect("calibrated branching is valid")
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
    pub fn i_sat(&self) -> f64 {
        self.i_sat
    }
    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }
    pub fn recoil_velocity(&self) -> f64 {
        self.recoil_velocity
    }
    pub fn depump_detuning(&self) -> f64 {
        self.depump_detuning
    }
    pub fn hyperfine_splitting(&self) -> f64 {
        self.hyperfine_splitting
    }
    pub fn depump_branching(&self) -> f64 {
        self.depump_branching
    }

    /// Wavenumber k = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn with_i_sat(mut self, i_sat: f64) -> Result<Self, PhysicsError> {
        require(i_sat.is_finite() && i_sat > 0.0, "i_sat", "must be positive")?;
        self.i_sat = i_sat;
        Ok(self)
    }

    pub fn with_depump_branching(mut self, b: f64) -> Result<Self, PhysicsError> {
        require(b.is_finite() && (0.0..=1.0).contains(&b), "depump_branching", "must lie in [0, 1]")?;
        self.depump_branching = b;
        Ok(self)
    }

    /// Copy of these parameters with the light-pressure recoil switched off.
    /// Only useful as a reference model (symmetric detuning response).
    pub fn without_recoil(mut self) -> Self {
        self.recoil_velocity = 0.0;
        self
    }

    /// Branching fraction such that `1 / depump_rate` equals `dark_time` at
    /// saturation parameter `saturation` and zero probe detuning.
    pub fn calibrate_depump_branching(&self, saturation: f64, dark_time: f64) -> f64 {
        let leak = scattering_rate(self, saturation * self.i_sat, -self.depump_detuning, 0.0);
        (1.0 / dark_time / leak).min(1.0)
    }
}

/// Rectangular probe beam: homogeneous intensity over `height_dz` × `width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeBeamConfig {
    /// W/m².
    pub intensity: f64,
    /// rad/s, positive is blue.
    pub detuning: f64,
    /// Extent along the fall direction (m).
    pub height_dz: f64,
    pub width: f64,
}

impl ProbeBeamConfig {
    pub fn new(intensity: f64, detuning: f64, height_dz: f64, width: f64) -> Result<Self, PhysicsError> {
        let beam = ProbeBeamConfig { intensity, detuning, height_dz, width };
        beam.validate()?;
        Ok(beam)
    }

    /// Beam at `saturation` × I_sat of `params`.
    pub fn saturated(
        params: &TransitionParams,
        saturation: f64,
        detuning: f64,
        height_dz: f64,
        width: f64,
    ) -> Result<Self, PhysicsError> {
        Self::new(saturation * params.i_sat(), detuning, height_dz, width)
    }

    /// The experimental probe: 0.2 mm × 0.7 mm.
    pub fn nominal_geometry(params: &TransitionParams, saturation: f64, detuning: f64) -> Self {
        Self::saturated(params, saturation, detuning, mm_to_m(0.2), mm_to_m(0.7)).expect("valid geometry")
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        require(self.intensity.is_finite() && self.intensity >= 0.0, "intensity", "must be >= 0")?;
        require(self.detuning.is_finite(), "detuning", "must be finite")?;
        require(self.height_dz.is_finite() && self.height_dz > 0.0, "height_dz", "must be positive")?;
        require(self.width.is_finite() && self.width > 0.0, "width", "must be positive")
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_height(mut self, height_dz: f64) -> Self {
        self.height_dz = height_dz;
        self
    }

    /// Height that gives interaction time `dt` at fall speed `v_perp`.
    pub fn with_interaction_time(self, dt: f64, kin: &AtomKinematics) -> Self {
        self.with_height(dt * kin.v_perp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomKinematics {
    /// Fall speed through the beam (m/s).
    pub v_perp: f64,
    /// Initial speed along the probe axis (m/s).
    pub v_par0: f64,
}

impl AtomKinematics {
    pub fn new(v_perp: f64, v_par0: f64) -> Result<Self, PhysicsError> {
        let k = AtomKinematics { v_perp, v_par0 };
        k.validate()?;
        Ok(k)
    }

    /// Atoms released from the trap arrive at 3 m/s with no initial velocity along the beam.
    pub fn falling() -> Self {
        AtomKinematics { v_perp: 3.0, v_par0: 0.0 }
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        require(self.v_perp.is_finite() && self.v_perp > 0.0, "v_perp", "must be positive")?;
        require(self.v_par0.is_finite(), "v_par0", "must be finite")
    }

    /// Δτ = Δz / v⊥.
    pub fn interaction_time(&self, beam: &ProbeBeamConfig) -> f64 {
        beam.height_dz / self.v_perp
    }
}

/// Power-broadened photon scattering rate (photons/s) for an atom moving at
/// `v_par` along a beam of intensity `intensity` detuned by `detuning`.
pub fn scattering_rate(params: &TransitionParams, intensity: f64, detuning: f64, v_par: f64) -> f64 {
    if intensity <= 0.0 {
        return 0.0;
    }
    let half = params.gamma / 2.0;
    let x = (detuning - params.wavenumber() * v_par) / half;
    half * intensity / (intensity + params.i_sat * (1.0 + x * x))
}

/// Rate (1/s) at which an atom is pumped into the dark ground state through
/// off-resonant excitation of the leaky level.
pub fn depump_rate(params: &TransitionParams, intensity: f64, detuning: f64) -> f64 {
    params.depump_branching * scattering_rate(params, intensity, detuning - params.depump_detuning, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rb() -> TransitionParams {
        TransitionParams::rubidium85()
    }

    #[test]
    fn unit_saturation_on_resonance_is_quarter_gamma() {
        let p = rb();
        let r = scattering_rate(&p, p.i_sat(), 0.0, 0.0);
        assert!((r - p.gamma() / 4.0).abs() < 1e-6 * r);
    }

    #[test]
    fn zero_intensity_scatters_nothing() {
        assert_eq!(scattering_rate(&rb(), 0.0, 1e7, 0.3), 0.0);
    }

    #[test]
    fn rate_at_2p7_saturation() {
        // (Γ/2)·2.7/3.7 with Γ = 2π·6e6, worked by hand: 1.8850e7 · 0.72973 = 1.3755e7
        let p = rb();
        let r = scattering_rate(&p, 2.7 * p.i_sat(), 0.0, 0.0);
        let hand = std::f64::consts::PI * 6e6 * 2.7 / 3.7;
        assert!((r - hand).abs() < 1e-9 * hand);
        assert!((r - 1.376e7).abs() < 0.001e7);
    }

    #[test]
    fn recoil_velocity_is_derived() {
        let p = rb();
        // ħk/m for 85 u at 780 nm is about 6.02 mm/s.
        assert!((p.recoil_velocity() - 6.0186e-3).abs() < 1e-6);
        let heavier =
            TransitionParams::new(p.gamma(), p.wavelength(), p.i_sat(), 2.0 * p.atom_mass(), 0.0, 0.0).unwrap();
        assert!((heavier.recoil_velocity() * 2.0 - p.recoil_velocity()).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_constants() {
        assert!(TransitionParams::new(0.0, 780e-9, 39.0, 1e-25, 0.0, 0.0).is_err());
        assert!(TransitionParams::new(1.0, -1.0, 39.0, 1e-25, 0.0, 0.0).is_err());
        assert!(TransitionParams::new(1.0, 780e-9, 0.0, 1e-25, 0.0, 0.0).is_err());
        assert!(TransitionParams::new(1.0, 780e-9, 39.0, 0.0, 0.0, 0.0).is_err());
        assert!(ProbeBeamConfig::new(-1.0, 0.0, 1e-4, 1e-4).is_err());
        assert!(ProbeBeamConfig::new(1.0, 0.0, 0.0, 1e-4).is_err());
        assert!(AtomKinematics::new(0.0, 0.0).is_err());
    }

    #[test]
    fn depump_calibration_anchor() {
        let p = rb();
        let rate = depump_rate(&p, 2.7 * p.i_sat(), 0.0);
        assert!((1.0 / rate - 130e-6).abs() < 1e-12);
        assert_eq!(depump_rate(&p, 0.0, 0.0), 0.0);
        let scatter = scattering_rate(&p, 2.7 * p.i_sat(), 0.0, 0.0);
        assert!(rate / scatter < 1e-2);
    }

    #[test]
    fn transition_serde_rebuilds_recoil() {
        let p = rb();
        let json = serde_json::to_string(&p).unwrap();
        assert!(!json.contains("recoil"));
        let back: TransitionParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn below_half_gamma(s in 0.0f64..1e4, d in -1e9f64..1e9, v in -10.0f64..10.0) {
                let p = rb();
                let r = scattering_rate(&p, s * p.i_sat(), d, v);
                prop_assert!(r >= 0.0 && r < p.gamma() / 2.0);
            }

            #[test]
            fn detuning_doppler_symmetry(s in 0.0f64..50.0, d in -1e9f64..1e9, v in -10.0f64..10.0) {
                let p = rb();
                let a = scattering_rate(&p, s * p.i_sat(), d, v);
                let b = scattering_rate(&p, s * p.i_sat(), -d, -v);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }

            #[test]
            fn peak_sits_at_doppler_shift(v in -1.0f64..1.0) {
                let p = rb();
                let kv = p.wavenumber() * v;
                let grid: Vec<f64> = (-200..=200).map(|i| kv + i as f64 * p.gamma() / 100.0).collect();
                let best = grid
                    .iter()
                    .copied()
                    .max_by(|a, b| {
                        scattering_rate(&p, 3.0 * p.i_sat(), *a, v)
                            .total_cmp(&scattering_rate(&p, 3.0 * p.i_sat(), *b, v))
                    })
                    .unwrap();
                prop_assert!((best - kv).abs() < 1e-6 * p.gamma());
            }
        }
    }
}
