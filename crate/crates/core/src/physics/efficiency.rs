use serde::{Deserialize, Serialize};

use super::PhysicsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub label: String,
    pub transmission: f64,
}

/// Ordered cascade of loss stages between the fluorescing atom and a counted event.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EfficiencyChain {
    stages: Vec<Stage>,
}

impl EfficiencyChain {
    pub fn new<L: Into<String>>(stages: impl IntoIterator<Item = (L, f64)>) -> Result<Self, PhysicsError> {
        let mut chain = EfficiencyChain::default();
        for (label, t) in stages {
            chain.push(label, t)?;
        }
        Ok(chain)
    }

    pub fn push(&mut self, label: impl Into<String>, transmission: f64) -> Result<(), PhysicsError> {
        let label = label.into();
        if !(0.0..=1.0).contains(&transmission) {
            return Err(PhysicsError::StageOutOfRange { label, value: transmission });
        }
        self.stages.push(Stage { label, transmission });
        Ok(())
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn concat(mut self, other: EfficiencyChain) -> Self {
        self.stages.extend(other.stages);
        self
    }

    pub fn overall(&self) -> f64 {
        self.stages.iter().map(|s| s.transmission).product()
    }

    /// Hollow-mirror collector: geometric coverage 80 %, aluminium reflectivity 80 %.
    pub fn mirror_setup() -> Self {
        Self::new([("mirror geometry", 0.8), ("mirror reflectivity", 0.8)]).unwrap()
    }

    /// Imaging optics between the mirrors and the photocathode.
    pub fn imaging_optics() -> Self {
        Self::new([
            ("aspheric condenser", 0.99),
            ("planoconvex lens", 0.99),
            ("biconvex lens", 0.99),
            ("vacuum window", 0.99),
            ("band-pass filter", 0.70),
            ("PMT cooling double window", 0.85),
            ("observation volume imaging", 2.0 / 3.0),
        ])
        .unwrap()
    }

    /// Mirrors plus imaging optics, ending at the photocathode (about 25 %).
    pub fn collection() -> Self {
        Self::mirror_setup().concat(Self::imaging_optics())
    }

    /// Full chain with a detector of quantum efficiency `qe`.
    pub fn with_detector(mut self, qe: f64) -> Result<Self, PhysicsError> {
        self.push("detector quantum efficiency", qe)?;
        Ok(self)
    }
}

/// Product of all stage transmissions; 1 for an empty chain.
pub fn efficiency_overall(chain: &EfficiencyChain) -> f64 {
    chain.overall()
}
