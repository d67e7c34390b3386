//! Physical constants (CODATA 2018 exact/recommended values) in SI units.

use std::f64::consts::PI;

/// Planck constant [J s].
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = H / (2.0 * PI);
/// Speed of light [m/s].
pub const C: f64 = 299_792_458.0;
/// Boltzmann constant [J/K].
pub const KB: f64 = 1.380_649e-23;
/// Vacuum permittivity [F/m].
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Atomic mass unit [kg].
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Elementary charge [C].
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Standard gravity used for tilt estimates [m/s²].
pub const G: f64 = 9.81;
/// Ångström [m].
pub const ANGSTROM: f64 = 1e-10;
/// Electron volt [J].
pub const EV: f64 = E_CHARGE;
/// One millibar [Pa].
pub const MBAR: f64 = 100.0;
