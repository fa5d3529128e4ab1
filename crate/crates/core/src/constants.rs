//! Physical constants (CODATA 2018 exact SI values) and I/O unit conversions.
//!
//! Everything inside the library is SI: farads, henries, joules, rad/s.
//! Conversions to GHz / fF / Ω happen only at the I/O boundary.

use std::f64::consts::PI;

/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);

pub const GHZ: f64 = 1e9;
pub const FEMTOFARAD: f64 = 1e-15;

/// Energy (J) expressed as a frequency E/h in GHz.
pub fn joule_to_ghz(energy: f64) -> f64 {
    energy / PLANCK / GHZ
}

/// E/h given in GHz, back to joules.
pub fn ghz_to_joule(freq_ghz: f64) -> f64 {
    freq_ghz * GHZ * PLANCK
}

/// Angular frequency (rad/s) to ordinary frequency in GHz.
pub fn rad_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI) / GHZ
}

pub fn ghz_to_rad(freq_ghz: f64) -> f64 {
    2.0 * PI * freq_ghz * GHZ
}

/// Josephson inductance of a junction linearized around zero phase, ħ²/(4e²E_J).
pub fn josephson_inductance(e_j: f64) -> f64 {
    HBAR * HBAR / (4.0 * E_CHARGE * E_CHARGE * e_j)
}
