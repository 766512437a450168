use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::{SimError, SimulationConfig};
use crate::units::ns_to_secs;

/// Ground-truth source of a detected photon. Recorded data is `Unlabeled`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    Atom(u32),
    Noise,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhotonEvent {
    pub timestamp_ns: u64,
    pub origin: Origin,
}

impl PhotonEvent {
    pub fn time(&self) -> f64 {
        ns_to_secs(self.timestamp_ns)
    }
}

/// What really happened to one simulated atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTruth {
    pub id: u32,
    pub arrival_ns: u64,
    /// Photons scattered (before detector thinning).
    pub emitted: u32,
    /// Photons that made it into the stream.
    pub detected: u32,
    /// Saturation intensity drawn for this atom (W/m²).
    pub i_sat: f64,
    pub depumped_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StreamMetadata {
    pub config: Option<SimulationConfig>,
    pub truth: Option<Vec<AtomTruth>>,
}

/// Time-sorted photon detection events over `[0, duration_ns]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<PhotonEvent>,
    duration_ns: u64,
    metadata: StreamMetadata,
}

impl EventStream {
    /// Validates ordering, range and (if present) truth tallies.
    pub fn new(events: Vec<PhotonEvent>, duration_ns: u64, metadata: StreamMetadata) -> Result<Self, SimError> {
        if let Some(i) = events.windows(2).position(|w| w[1].timestamp_ns < w[0].timestamp_ns) {
            return Err(SimError::Unsorted { index: i + 1 });
        }
        if let Some(last) = events.last() {
            if last.timestamp_ns > duration_ns {
                return Err(SimError::OutOfRange { timestamp_ns: last.timestamp_ns, duration_ns });
            }
        }
        if let Some(truth) = &metadata.truth {
            let mut tally: HashMap<u32, u32> = HashMap::new();
            for e in &events {
                if let Origin::Atom(id) = e.origin {
                    *tally.entry(id).or_default() += 1;
                }
            }
            for atom in truth {
                let seen = tally.remove(&atom.id).unwrap_or(0);
                if seen != atom.detected {
                    return Err(SimError::TruthMismatch { atom: atom.id, expected: atom.detected, found: seen });
                }
            }
            if let Some((&id, &n)) = tally.iter().min() {
                return Err(SimError::TruthMismatch { atom: id, expected: 0, found: n });
            }
        }
        Ok(EventStream { events, duration_ns, metadata })
    }

    /// Unlabeled stream from bare timestamps (sorted on the way in).
    pub fn from_timestamps(mut ts: Vec<u64>, duration_ns: u64) -> Result<Self, SimError> {
        ts.sort_unstable();
        let events = ts.into_iter().map(|t| PhotonEvent { timestamp_ns: t, origin: Origin::Unlabeled }).collect();
        Self::new(events, duration_ns, StreamMetadata::default())
    }

    pub fn events(&self) -> &[PhotonEvent] {
        &self.events
    }

    pub fn timestamps(&self) -> Vec<u64> {
        self.events.iter().map(|e| e.timestamp_ns).collect()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration_ns(&self) -> u64 {
        self.duration_ns
    }

    pub fn duration(&self) -> f64 {
        ns_to_secs(self.duration_ns)
    }

    pub fn metadata(&self) -> &StreamMetadata {
        &self.metadata
    }

    /// Events per second over the whole record.
    pub fn total_rate(&self) -> f64 {
        self.events.len() as f64 / self.duration()
    }

    /// Sub-stream of noise-labeled events only, without truth metadata.
    pub fn noise_only(&self) -> EventStream {
        let events = self.events.iter().copied().filter(|e| e.origin == Origin::Noise).collect();
        EventStream { events, duration_ns: self.duration_ns, metadata: StreamMetadata::default() }
    }

    pub fn count_noise(&self) -> usize {
        self.events.iter().filter(|e| e.origin == Origin::Noise).count()
    }
}
