//! Physical constants and laboratory-unit conversions.
//!
//! Configuration files speak MHz (ordinary frequency), mW/cm², mm and µs.
//! Everything past the boundary is SI with angular frequencies.

use std::f64::consts::PI;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;

pub const NANOS_PER_SECOND: f64 = 1e9;

/// Ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

/// mW/cm² to W/m² (factor 10).
pub fn mw_per_cm2_to_si(i: f64) -> f64 {
    i * 10.0
}

pub fn si_to_mw_per_cm2(i: f64) -> f64 {
    i / 10.0
}

pub fn mm_to_m(mm: f64) -> f64 {
    mm * 1e-3
}

pub fn us_to_s(us: f64) -> f64 {
    us * 1e-6
}

pub fn s_to_us(s: f64) -> f64 {
    s * 1e6
}

/// Seconds to integer nanoseconds, rounding to nearest. Negative input saturates at 0.
pub fn secs_to_ns(s: f64) -> u64 {
    (s * NANOS_PER_SECOND).round().max(0.0) as u64
}

pub fn ns_to_secs(ns: u64) -> f64 {
    ns as f64 / NANOS_PER_SECOND
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_invert() {
        assert!((angular_to_mhz(mhz_to_angular(6.0)) - 6.0).abs() < 1e-12);
        assert_eq!(mw_per_cm2_to_si(3.9), 39.0);
        assert_eq!(secs_to_ns(60e-6), 60_000);
        assert_eq!(secs_to_ns(-1.0), 0);
    }
}
