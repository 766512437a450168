use rayon::prelude::*;

use super::transit::transit_for;
use super::{photon_yield, AtomKinematics, PhysicsError, ProbeBeamConfig, TransitionParams};

/// Photon yield as a function of probe detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningScan {
    /// (detuning in rad/s, expected photons per atom)
    pub points: Vec<(f64, f64)>,
}

impl DetuningScan {
    /// Grid point with the largest yield; the first one on ties.
    pub fn optimum(&self) -> (f64, f64) {
        self.points.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
    }

    pub fn optimal_detuning(&self) -> f64 {
        self.optimum().0
    }
}

fn check_sorted(grid: &[f64]) -> Result<(), PhysicsError> {
    if grid.is_empty() {
        return Err(PhysicsError::EmptyGrid);
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(PhysicsError::UnsortedGrid);
    }
    Ok(())
}

/// Evaluates the photon yield at each detuning of `grid` (rad/s). The
/// detuning stored in `beam` is ignored.
pub fn detuning_scan(
    params: &TransitionParams,
    beam: &ProbeBeamConfig,
    kin: &AtomKinematics,
    interaction_time: f64,
    grid: &[f64],
    dt: f64,
) -> Result<DetuningScan, PhysicsError> {
    check_sorted(grid)?;
    let points = grid
        .par_iter()
        .map(|&d| photon_yield(params, &beam.with_detuning(d), kin, interaction_time, dt).map(|n| (d, n)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DetuningScan { points })
}

/// Observed fluorescence duration versus beam height (both in SI).
///
/// For each height the atom is integrated over its full transit and the
/// duration is the time until its rate drops below `exit_fraction` of the
/// running maximum, capped at Δτ = Δz / v⊥.
pub fn fluorescence_duration_scan(
    params: &TransitionParams,
    beam: &ProbeBeamConfig,
    kin: &AtomKinematics,
    dz_grid: &[f64],
    exit_fraction: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>, PhysicsError> {
    if !(exit_fraction > 0.0 && exit_fraction < 1.0) {
        return Err(PhysicsError::ExitFraction(exit_fraction));
    }
    check_sorted(dz_grid)?;
    if dz_grid.iter().any(|&dz| dz < 0.0) {
        return Err(PhysicsError::InvalidParameter { name: "dz_grid", reason: "heights must be >= 0".into() });
    }
    dz_grid
        .par_iter()
        .map(|&dz| {
            let rec = transit_for(params, &beam.with_height(dz.max(f64::MIN_POSITIVE)), kin, dz / kin.v_perp, dt)?;
            Ok((dz, rec.duration_at_fraction(exit_fraction)?))
        })
        .collect()
}
