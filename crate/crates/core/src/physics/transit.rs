use super::{require, scattering_rate, AtomKinematics, PhysicsError, ProbeBeamConfig, TransitionParams};

/// Default RK4 step (s).
pub const DEFAULT_STEP: f64 = 10e-9;

/// Default cutoff for the fluorescence duration: the atom counts as dark once
/// its rate has dropped below this fraction of the running maximum.
pub const DEFAULT_EXIT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitSample {
    pub t: f64,
    pub v_par: f64,
    /// Scattering rate at this point (photons/s).
    pub rate: f64,
    pub cumulative_photons: f64,
}

/// Trajectory of one atom crossing the probe beam, sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitRecord {
    pub interaction_time: f64,
    pub step: f64,
    pub samples: Vec<TransitSample>,
    /// Expected number of scattered photons over the full interaction time.
    pub n_phot: f64,
    pub fluorescence_duration: f64,
    /// Time at which the atom fell into the dark state, if it did.
    pub depumped_at: Option<f64>,
}

impl TransitRecord {
    /// Rate at `t`, linearly interpolated between samples; zero outside the
    /// interaction window or after depumping.
    pub fn rate_at(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.emission_end() || self.samples.is_empty() {
            return 0.0;
        }
        let pos = t / self.step;
        let i = (pos.floor() as usize).min(self.samples.len() - 1);
        if i + 1 >= self.samples.len() {
            return self.samples[i].rate;
        }
        let frac = pos - i as f64;
        let (a, b) = (self.samples[i].rate, self.samples[i + 1].rate);
        a + (b - a) * frac
    }

    /// Upper bound of [`rate_at`](Self::rate_at); exact for linear interpolation.
    pub fn max_rate(&self) -> f64 {
        self.samples.iter().map(|s| s.rate).fold(0.0, f64::max)
    }

    /// End of photon emission: the interaction time, or the depump time if earlier.
    pub fn emission_end(&self) -> f64 {
        match self.depumped_at {
            Some(t) => t.min(self.interaction_time),
            None => self.interaction_time,
        }
    }

    /// Mark the atom dark from `t` on. Times past the interaction window are ignored.
    pub fn depump_at(&mut self, t: f64) {
        self.depumped_at = (t < self.interaction_time).then_some(t.max(0.0));
    }

    /// Expected photons emitted before [`emission_end`](Self::emission_end).
    pub fn expected_photons(&self) -> f64 {
        let end = self.emission_end();
        if end >= self.interaction_time {
            return self.n_phot;
        }
        let pos = end / self.step;
        let i = (pos.floor() as usize).min(self.samples.len() - 1);
        let s = &self.samples[i];
        // Remaining fraction of the step, trapezoid in rate.
        let dt = end - s.t;
        s.cumulative_photons + dt * 0.5 * (s.rate + self.rate_at(end))
    }

    /// Time until the rate first falls below `fraction` of its running
    /// maximum, capped at the interaction time.
    pub fn duration_at_fraction(&self, fraction: f64) -> Result<f64, PhysicsError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(PhysicsError::ExitFraction(fraction));
        }
        Ok(exit_time(&self.samples, fraction, self.interaction_time))
    }
}

fn exit_time(samples: &[TransitSample], fraction: f64, cap: f64) -> f64 {
    let mut running_max = 0.0f64;
    for s in samples {
        running_max = running_max.max(s.rate);
        if running_max > 0.0 && s.rate < fraction * running_max {
            return s.t.min(cap);
        }
    }
    if running_max > 0.0 {
        cap
    } else {
        0.0
    }
}

/// Integrates the recoil-driven transit of one atom over Δτ = Δz / v⊥.
///
/// State is (v∥, N) with dv∥/dt = v_rec·R_P(v∥) and dN/dt = R_P(v∥),
/// advanced by classical fixed-step RK4. The step is shrunk so that an
/// integer number of steps spans Δτ exactly.
pub fn integrate_transit(
    params: &TransitionParams,
    beam: &ProbeBeamConfig,
    kin: &AtomKinematics,
    dt: f64,
) -> Result<TransitRecord, PhysicsError> {
    kin.validate()?;
    transit_for(params, beam, kin, kin.interaction_time(beam), dt)
}

/// Same as [`integrate_transit`] with an explicit interaction time instead of
/// the beam height.
pub fn transit_for(
    params: &TransitionParams,
    beam: &ProbeBeamConfig,
    kin: &AtomKinematics,
    interaction_time: f64,
    dt: f64,
) -> Result<TransitRecord, PhysicsError> {
    require(dt.is_finite() && dt > 0.0, "dt", "must be positive")?;
    require(kin.v_perp.is_finite() && kin.v_perp > 0.0, "v_perp", "must be positive")?;
    require(interaction_time.is_finite() && interaction_time >= 0.0, "interaction_time", "must be >= 0")?;
    require(beam.intensity.is_finite() && beam.intensity >= 0.0, "intensity", "must be >= 0")?;

    let steps = (interaction_time / dt).ceil() as usize;
    let h = if steps == 0 { dt } else { interaction_time / steps as f64 };
    let v_rec = params.recoil_velocity();
    let rate = |v: f64| scattering_rate(params, beam.intensity, beam.detuning, v);

    let mut samples = Vec::with_capacity(steps + 1);
    let mut v = kin.v_par0;
    let mut n = 0.0;
    samples.push(TransitSample { t: 0.0, v_par: v, rate: rate(v), cumulative_photons: 0.0 });
    for i in 0..steps {
        // dN/dt depends only on v, so the photon increment reuses the velocity stages.
        let k1 = rate(v);
        let k2 = rate(v + 0.5 * h * v_rec * k1);
        let k3 = rate(v + 0.5 * h * v_rec * k2);
        let k4 = rate(v + h * v_rec * k3);
        let dn = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        v += v_rec * dn;
        n += dn;
        let t = if i + 1 == steps { interaction_time } else { (i + 1) as f64 * h };
        samples.push(TransitSample { t, v_par: v, rate: rate(v), cumulative_photons: n });
    }

    Ok(TransitRecord {
        interaction_time,
        step: h,
        fluorescence_duration: exit_time(&samples, DEFAULT_EXIT_FRACTION, interaction_time),
        samples,
        n_phot: n,
        depumped_at: None,
    })
}

/// Expected photon number N_phot = ∫₀^Δτ R_P dt for the given interaction time.
pub fn photon_yield(
    params: &TransitionParams,
    beam: &ProbeBeamConfig,
    kin: &AtomKinematics,
    interaction_time: f64,
    dt: f64,
) -> Result<f64, PhysicsError> {
    Ok(transit_for(params, beam, kin, interaction_time, dt)?.n_phot)
}
