//! Run configuration: a TOML file in laboratory units.
//!
//! Frequencies are ordinary MHz (converted with 2π), intensities mW/cm²,
//! lengths mm, times µs, event rates Hz and speeds m/s. Every section and
//! key is optional; omitted values fall back to the ⁸⁵Rb operating point.
//!
//! ```toml
//! [beam]
//! saturation = 2.7        # or intensity_mw_cm2
//! detuning_gamma = 0.43   # or detuning_mhz
//! height_mm = 0.18
//!
//! [simulation]
//! duration_us = 524000
//! atom_rate_hz = 1800
//! noise_rate_hz = 9400
//! seed = 7
//! detected_per_atom = 20  # or detection_efficiency
//! isat_model = "fixed"    # "pi", "sigma", or isat_range_mw_cm2 / isat_set_mw_cm2
//!
//! [analysis]
//! window_us = 60
//! threshold = "auto"      # or an integer
//! ```

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::analysis::{DEFAULT_BIN_WIDTH, DEFAULT_MAX_LAG};
use crate::physics::{AtomKinematics, PhysicsError, ProbeBeamConfig, TransitionParams, DEFAULT_STEP};
use crate::sim::{IsatModel, SimError, SimulationConfig};
use crate::units::{mhz_to_angular, mm_to_m, mw_per_cm2_to_si, us_to_s, AMU};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{field}`{}: {reason}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Field { field: String, line: Option<usize>, reason: String },
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSection {
    pub gamma_mhz: Option<f64>,
    pub wavelength_nm: Option<f64>,
    pub i_sat_mw_cm2: Option<f64>,
    pub mass_u: Option<f64>,
    pub depump_offset_mhz: Option<f64>,
    pub hyperfine_mhz: Option<f64>,
    pub depump_time_us: Option<f64>,
    pub depump_saturation: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub saturation: Option<f64>,
    pub intensity_mw_cm2: Option<f64>,
    pub detuning_gamma: Option<f64>,
    pub detuning_mhz: Option<f64>,
    pub height_mm: Option<f64>,
    pub width_mm: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsSection {
    pub v_perp_m_s: Option<f64>,
    pub v_par0_m_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub duration_us: Option<f64>,
    pub atom_rate_hz: Option<f64>,
    pub noise_rate_hz: Option<f64>,
    pub seed: Option<u64>,
    pub detection_efficiency: Option<f64>,
    pub detected_per_atom: Option<f64>,
    pub isat_model: Option<String>,
    pub isat_range_mw_cm2: Option<[f64; 2]>,
    pub isat_set_mw_cm2: Option<Vec<f64>>,
    pub depump: Option<bool>,
    pub step_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ThresholdSetting {
    Fixed(u32),
    Named(String),
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub bin_width_us: Option<f64>,
    pub max_lag_us: Option<f64>,
    pub window_us: Option<f64>,
    pub threshold: Option<ThresholdSetting>,
    /// Separately measured background rate; defaults to the simulation's.
    pub noise_rate_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub transition: TransitionSection,
    #[serde(default)]
    pub beam: BeamSection,
    #[serde(default)]
    pub atoms: AtomsSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Fixed(u32),
    /// Pick the error-minimizing threshold from the fitted g² parameters.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub bin_width: f64,
    pub max_lag: f64,
    /// Sliding window length (s).
    pub window: f64,
    pub threshold: Threshold,
    /// R_N used in the g² fit (1/s).
    pub noise_rate: f64,
}

/// Fully resolved configuration in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub analysis: AnalysisParams,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut in_section = section.is_empty();
        for (i, line) in self.text.lines().enumerate() {
            let l = line.trim();
            if l.starts_with('[') {
                in_section = l.trim_matches(|c| c == '[' || c == ']').trim() == section;
            } else if in_section && l.split('=').next().map(str::trim) == Some(key) {
                return Some(i + 1);
            }
        }
        None
    }

    fn err(&self, section: &str, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Field {
            field: format!("{section}.{key}"),
            line: self.line_of(section, key),
            reason: reason.into(),
        }
    }

    fn physics(&self, section: &str, key: &str, e: PhysicsError) -> ConfigError {
        self.err(section, key, e.to_string())
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("{v} must be positive")))
        }
    }

    fn non_negative(&self, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("{v} must be non-negative")))
        }
    }

    fn one_of<T: Copy>(
        &self,
        section: &str,
        a: (&str, Option<T>),
        b: (&str, Option<T>),
    ) -> Result<Option<(usize, T)>, ConfigError> {
        match (a.1, b.1) {
            (Some(_), Some(_)) => Err(self.err(section, b.0, format!("conflicts with `{}`; give only one", a.0))),
            (Some(x), None) => Ok(Some((0, x))),
            (None, Some(x)) => Ok(Some((1, x))),
            (None, None) => Ok(None),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let file: RunConfigFile = toml::from_str(text)?;
        resolve(&file, &Ctx { text })
    }

    /// Operating point defaults, equivalent to an empty config file.
    pub fn default_operating_point() -> Self {
        Self::parse("").expect("defaults are valid")
    }
}

fn resolve(file: &RunConfigFile, ctx: &Ctx) -> Result<RunConfig, ConfigError> {
    let t = &file.transition;
    let tr = "transition";
    let gamma = mhz_to_angular(ctx.positive(tr, "gamma_mhz", t.gamma_mhz.unwrap_or(6.0))?);
    let wavelength = ctx.positive(tr, "wavelength_nm", t.wavelength_nm.unwrap_or(780.0))? * 1e-9;
    let i_sat = mw_per_cm2_to_si(ctx.positive(tr, "i_sat_mw_cm2", t.i_sat_mw_cm2.unwrap_or(3.9))?);
    let mass = ctx.positive(tr, "mass_u", t.mass_u.unwrap_or(85.0))? * AMU;
    let offset = mhz_to_angular(t.depump_offset_mhz.unwrap_or(-121.0));
    let hyperfine = mhz_to_angular(t.hyperfine_mhz.unwrap_or(3000.0));
    let transition = TransitionParams::new(gamma, wavelength, i_sat, mass, offset, hyperfine)
        .map_err(|e| ctx.physics(tr, "gamma_mhz", e))?;
    let dark_time = us_to_s(ctx.positive(tr, "depump_time_us", t.depump_time_us.unwrap_or(130.0))?);
    let dark_sat = ctx.positive(tr, "depump_saturation", t.depump_saturation.unwrap_or(2.7))?;
    let transition = transition
        .with_depump_branching(transition.calibrate_depump_branching(dark_sat, dark_time))
        .map_err(|e| ctx.physics(tr, "depump_time_us", e))?;

    let b = &file.beam;
    let intensity = match ctx.one_of("beam", ("saturation", b.saturation), ("intensity_mw_cm2", b.intensity_mw_cm2))? {
        Some((0, s)) => ctx.non_negative("beam", "saturation", s)? * transition.i_sat(),
        Some((_, i)) => mw_per_cm2_to_si(ctx.non_negative("beam", "intensity_mw_cm2", i)?),
        None => 2.7 * transition.i_sat(),
    };
    let detuning = match ctx.one_of("beam", ("detuning_gamma", b.detuning_gamma), ("detuning_mhz", b.detuning_mhz))? {
        Some((0, d)) => d * transition.gamma(),
        Some((_, d)) => mhz_to_angular(d),
        None => 0.43 * transition.gamma(),
    };
    let height = mm_to_m(ctx.positive("beam", "height_mm", b.height_mm.unwrap_or(0.18))?);
    let width = mm_to_m(ctx.positive("beam", "width_mm", b.width_mm.unwrap_or(0.7))?);
    let beam =
        ProbeBeamConfig::new(intensity, detuning, height, width).map_err(|e| ctx.physics("beam", "detuning_mhz", e))?;

    let a = &file.atoms;
    let v_perp = ctx.positive("atoms", "v_perp_m_s", a.v_perp_m_s.unwrap_or(3.0))?;
    let v_par0 = a.v_par0_m_s.unwrap_or(0.0);
    let kinematics = AtomKinematics::new(v_perp, v_par0).map_err(|e| ctx.physics("atoms", "v_par0_m_s", e))?;

    let s = &file.simulation;
    let sim = "simulation";
    let isat_model = match (&s.isat_model, &s.isat_range_mw_cm2, &s.isat_set_mw_cm2) {
        (None, None, None) => IsatModel::Fixed,
        (Some(name), None, None) => match name.as_str() {
            "fixed" => IsatModel::Fixed,
            "pi" => IsatModel::pi_polarized(),
            "sigma" => IsatModel::sigma_polarized(),
            other => return Err(ctx.err(sim, "isat_model", format!("unknown model `{other}` (fixed, pi, sigma)"))),
        },
        (None, Some([lo, hi]), None) => {
            IsatModel::UniformRange { lo: mw_per_cm2_to_si(*lo), hi: mw_per_cm2_to_si(*hi) }
        }
        (None, None, Some(set)) => IsatModel::Discrete(set.iter().map(|&x| mw_per_cm2_to_si(x)).collect()),
        _ => return Err(ctx.err(sim, "isat_model", "give only one of isat_model, isat_range_mw_cm2, isat_set_mw_cm2")),
    };
    let step = s.step_ns.map(|x| x * 1e-9).unwrap_or(DEFAULT_STEP);
    let noise_rate = ctx.non_negative(sim, "noise_rate_hz", s.noise_rate_hz.unwrap_or(9.4e3))?;
    let mut simulation = SimulationConfig {
        duration: us_to_s(ctx.positive(sim, "duration_us", s.duration_us.unwrap_or(524_000.0))?),
        atom_rate: ctx.non_negative(sim, "atom_rate_hz", s.atom_rate_hz.unwrap_or(1.8e3))?,
        transition,
        beam,
        kinematics,
        detection_efficiency: 0.0,
        noise_rate,
        seed: s.seed.unwrap_or(0),
        isat_model,
        depump_enabled: s.depump.unwrap_or(false),
        step: ctx.positive(sim, "step_ns", step)?,
    };
    let field = |e: SimError, key: &str| match e {
        SimError::InvalidConfig { field, reason } => ctx.err(sim, if key.is_empty() { field } else { key }, reason),
        other => ctx.err(sim, key, other.to_string()),
    };
    simulation.detection_efficiency = match ctx.one_of(
        sim,
        ("detection_efficiency", s.detection_efficiency),
        ("detected_per_atom", s.detected_per_atom),
    )? {
        Some((0, eta)) => eta,
        Some((_, n)) => simulation.efficiency_for(n).map_err(|e| field(e, "detected_per_atom"))?,
        None => simulation.efficiency_for(20.0).map_err(|e| field(e, "detected_per_atom"))?,
    };
    simulation.validate().map_err(|e| field(e, ""))?;

    let an = &file.analysis;
    let al = "analysis";
    let threshold = match &an.threshold {
        None => Threshold::Auto,
        Some(ThresholdSetting::Named(s)) if s == "auto" => Threshold::Auto,
        Some(ThresholdSetting::Named(s)) => {
            return Err(ctx.err(al, "threshold", format!("`{s}` is neither \"auto\" nor an integer")))
        }
        Some(ThresholdSetting::Fixed(0)) => return Err(ctx.err(al, "threshold", "must be >= 1")),
        Some(ThresholdSetting::Fixed(n)) => Threshold::Fixed(*n),
    };
    let analysis = AnalysisParams {
        bin_width: us_to_s(ctx.positive(al, "bin_width_us", an.bin_width_us.unwrap_or(DEFAULT_BIN_WIDTH * 1e6))?),
        max_lag: us_to_s(ctx.positive(al, "max_lag_us", an.max_lag_us.unwrap_or(DEFAULT_MAX_LAG * 1e6))?),
        window: us_to_s(ctx.positive(
            al,
            "window_us",
            an.window_us.unwrap_or((simulation.interaction_time() * 1e9).round() / 1e3),
        )?),
        threshold,
        noise_rate: ctx.non_negative(al, "noise_rate_hz", an.noise_rate_hz.unwrap_or(noise_rate))?,
    };
    Ok(RunConfig { simulation, analysis })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_operating_point() {
        let c = RunConfig::default_operating_point();
        let p = SimulationConfig::operating_point(0);
        assert!((c.simulation.interaction_time() - 60e-6).abs() < 1e-12);
        assert!((c.simulation.detection_efficiency - p.detection_efficiency).abs() < 1e-12);
        assert!((c.simulation.beam.detuning - p.beam.detuning).abs() < 1e-6);
        assert_eq!(c.analysis.threshold, Threshold::Auto);
        assert!((c.analysis.window - 60e-6).abs() < 1e-12);
    }

    #[test]
    fn units_converted() {
        let c = RunConfig::parse(
            "[beam]\nintensity_mw_cm2 = 10.0\ndetuning_mhz = 2.4\nheight_mm = 0.2\n[simulation]\nduration_us = 1000\ndetection_efficiency = 0.03\nseed = 9\n[analysis]\nthreshold = 6\n",
        )
        .unwrap();
        assert_eq!(c.simulation.beam.intensity, 100.0);
        assert!((c.simulation.beam.detuning - 2.0 * std::f64::consts::PI * 2.4e6).abs() < 1e-6);
        assert!((c.simulation.duration - 1e-3).abs() < 1e-15);
        assert_eq!(c.simulation.seed, 9);
        assert_eq!(c.analysis.threshold, Threshold::Fixed(6));
    }

    #[test]
    fn field_errors_name_field_and_line() {
        let e = RunConfig::parse("[beam]\nheight_mm = -1\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("beam.height_mm") && msg.contains("line 2"), "{msg}");
        let e = RunConfig::parse("[beam]\nsaturation = 1\nintensity_mw_cm2 = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = RunConfig::parse("[simulation]\nisat_model = \"weird\"\n").unwrap_err();
        assert!(e.to_string().contains("simulation.isat_model"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = RunConfig::parse("[beam]\nheight_mm = \n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse(_)));
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = RunConfig::parse("[beam]\nhieght_mm = 1\n").unwrap_err();
        assert!(e.to_string().contains("hieght_mm"), "{e}");
    }

    #[test]
    fn isat_models_from_file() {
        let c = RunConfig::parse("[simulation]\nisat_model = \"pi\"\n").unwrap();
        assert_eq!(c.simulation.isat_model, IsatModel::UniformRange { lo: 29.0, hi: 66.0 });
        let c = RunConfig::parse("[simulation]\nisat_set_mw_cm2 = [1.6, 46.4]\n").unwrap();
        assert_eq!(c.simulation.isat_model, IsatModel::Discrete(vec![16.0, 464.0]));
        assert!(RunConfig::parse("[simulation]\nisat_range_mw_cm2 = [6.6, 2.9]\n").is_err());
    }
}
