//! Unit conversions at the IO boundary.
//!
//! Internally every frequency or rate is an angular frequency in rad/ns and
//! every time is in ns. Configs and reports use cyclic frequencies in GHz or
//! MHz (the `ω/2π` values).

use std::f64::consts::TAU;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Cyclic frequency in GHz → angular frequency in rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// Cyclic frequency in MHz → angular frequency in rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Angular frequency in rad/ns → cyclic GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / TAU
}

/// Angular frequency in rad/ns → cyclic MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * (p / 1e-3).log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for f in [0.78, 121.0, 5532.0] {
            assert!((to_mhz(mhz(f)) - f).abs() <= 1e-12 * f);
            assert!((to_ghz(ghz(f)) - f).abs() <= 1e-12 * f);
        }
        assert!((watts_to_dbm(dbm_to_watts(-141.8)) + 141.8).abs() < 1e-12);
        assert_eq!(watts_to_dbm(1e-3), 0.0);
    }
}
