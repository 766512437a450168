use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{IsatModel, SimError};
use crate::physics::TransitRecord;

/// Event times of a homogeneous Poisson process of `rate` on `[0, duration]`,
/// built from exponential gaps.
pub fn homogeneous_poisson<R: Rng + ?Sized>(rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    if rate <= 0.0 || duration <= 0.0 {
        return Vec::new();
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut out = Vec::with_capacity((rate * duration * 1.1) as usize + 8);
    let mut t = gap.sample(rng);
    while t <= duration {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

/// Arrival times of atoms entering the probe volume at mean rate `atom_rate`.
pub fn sample_atom_arrivals<R: Rng + ?Sized>(atom_rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    homogeneous_poisson(atom_rate, duration, rng)
}

/// Background counts at mean rate `noise_rate`.
pub fn sample_noise<R: Rng + ?Sized>(noise_rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    homogeneous_poisson(noise_rate, duration, rng)
}

/// Photons from one transit: how many were scattered and the times (relative
/// to the atom's arrival) of those the detector registered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Emission {
    pub emitted: u32,
    pub detected: Vec<f64>,
}

/// Draws the scattered photons of one transit as an inhomogeneous Poisson
/// process with rate R_P(t), by thinning a homogeneous candidate process at
/// the transit's peak rate, then keeps each with probability
/// `detection_efficiency`.
pub fn emit_photons_for_atom<R: Rng + ?Sized>(
    transit: &TransitRecord,
    detection_efficiency: f64,
    rng: &mut R,
) -> Result<Emission, SimError> {
    if !(0.0..=1.0).contains(&detection_efficiency) {
        return Err(SimError::InvalidConfig {
            field: "detection_efficiency",
            reason: format!("{detection_efficiency} outside [0, 1]"),
        });
    }
    let bound = transit.max_rate();
    let end = transit.emission_end();
    let mut out = Emission::default();
    if bound <= 0.0 || end <= 0.0 {
        return Ok(out);
    }
    let gap = Exp::new(bound).expect("positive bound");
    let mut t = gap.sample(rng);
    while t <= end {
        if rng.random::<f64>() * bound < transit.rate_at(t) {
            out.emitted += 1;
            if rng.random::<f64>() < detection_efficiency {
                out.detected.push(t);
            }
        }
        t += gap.sample(rng);
    }
    Ok(out)
}

/// Saturation intensity for one atom. `nominal` is returned for `Fixed`.
pub fn sample_isat<R: Rng + ?Sized>(model: &IsatModel, nominal: f64, rng: &mut R) -> Result<f64, SimError> {
    model.validate()?;
    Ok(match model {
        IsatModel::Fixed => nominal,
        IsatModel::Discrete(set) => set[rng.random_range(0..set.len())],
        IsatModel::UniformRange { lo, hi } => {
            if lo == hi {
                *lo
            } else {
                rng.random_range(*lo..=*hi)
            }
        }
    })
}
