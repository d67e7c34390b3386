//! Standing-wave phase grating: eikonal phase, photon numbers and Talbot coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C, EPS0, HBAR};
use crate::error::{Error, Result};
use crate::materials::{optical_response, Particle};
use crate::special::{bessel_i, bessel_j, bessel_j_axis, cos_pi, sin_pi, spherical_j1};

/// Largest imaginary part tolerated when collapsing a coefficient to a real number.
pub const REALITY_TOL: f64 = 1e-10;

/// Coefficients below this magnitude at ±N and ±(N+1) end a set.
pub const CUTOFF_TOL: f64 = 1e-12;

const MAX_ORDER: usize = 4000;

/// Quantum coefficients use `sin πξ`, the classical shadow uses `πξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingPulse {
    pub wavelength: f64,
    pub period: f64,
    pub pulse_energy: f64,
    pub spot_area: f64,
    pub phi0: f64,
    pub n0: f64,
    pub n_r: f64,
}

impl GratingPulse {
    pub fn from_energy(particle: &Particle, wavelength: f64, pulse_energy: f64, spot_area: f64) -> Result<Self> {
        let phi0 = phase_amplitude(particle, pulse_energy, spot_area, wavelength)?;
        Self::assemble(particle, wavelength, pulse_energy, spot_area, phi0)
    }

    /// Builds the pulse for a prescribed φ₀; the energy is the one that would produce it.
    pub fn from_phi0(particle: &Particle, wavelength: f64, phi0: f64, spot_area: f64) -> Result<Self> {
        if !(phi0 >= 0.0) {
            return Err(Error::domain("phi0 must be non-negative"));
        }
        let per_joule = phase_amplitude(particle, 1.0, spot_area, wavelength)?;
        Self::assemble(particle, wavelength, phi0 / per_joule, spot_area, phi0)
    }

    fn assemble(particle: &Particle, wavelength: f64, pulse_energy: f64, spot_area: f64, phi0: f64) -> Result<Self> {
        let r = optical_response(particle, wavelength)?;
        Ok(Self {
            wavelength,
            period: wavelength / 2.0,
            pulse_energy,
            spot_area,
            phi0,
            n0: 2.0 * r.beta * phi0,
            n_r: 2.0 * r.eta * phi0,
        })
    }

    pub fn beta(&self) -> f64 {
        if self.phi0 > 0.0 {
            self.n0 / (2.0 * self.phi0)
        } else {
            0.0
        }
    }
}

/// Spot area of a beam with waist `w` under the `a_G = π w²` convention.
pub fn spot_area_from_waist(waist: f64) -> f64 {
    PI * waist * waist
}

/// φ₀ = 2 Re(α) E_G / (ħ c ε₀ a_G).
pub fn phase_amplitude(particle: &Particle, pulse_energy: f64, spot_area: f64, wavelength: f64) -> Result<f64> {
    if !(pulse_energy >= 0.0) {
        return Err(Error::domain("pulse energy must be non-negative"));
    }
    if !(spot_area > 0.0) {
        return Err(Error::domain("spot area must be positive"));
    }
    let alpha = particle.polarizability(wavelength)?;
    if alpha.re <= 0.0 {
        return Err(Error::UnsupportedMaterial(format!(
            "{}: Re(alpha) = {:e} at {:e} m",
            particle.material.name, alpha.re, wavelength
        )));
    }
    Ok(2.0 * alpha.re * pulse_energy / (HBAR * C * EPS0 * spot_area))
}

/// Independent caps on pulse energy and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingLimits {
    pub max_energy: f64,
    pub max_phi0: f64,
}

impl Default for GratingLimits {
    fn default() -> Self {
        Self {
            max_energy: 500e-6,
            max_phi0: 4.0 * PI,
        }
    }
}

impl GratingLimits {
    /// Values within a few ulps of a cap (round-tripped through E_G) are accepted.
    pub fn check(&self, pulse: &GratingPulse) -> Result<()> {
        const SLACK: f64 = 1.0 + 1e-12;
        if pulse.pulse_energy > self.max_energy * SLACK {
            return Err(Error::domain(format!(
                "pulse energy {:e} J exceeds cap {:e} J",
                pulse.pulse_energy, self.max_energy
            )));
        }
        if pulse.phi0 > self.max_phi0 * SLACK {
            return Err(Error::domain(format!(
                "phi0 {} rad exceeds cap {} rad",
                pulse.phi0, self.max_phi0
            )));
        }
        Ok(())
    }
}

/// B_n(ξ) = J_n(φ₀ sin πξ).
pub fn coeff_coherent(n: i32, xi: f64, phi0: f64) -> f64 {
    bessel_j(n, phi0 * sin_pi(xi))
}

/// C_n(ξ) = J_n(φ₀ π ξ).
pub fn coeff_classical(n: i32, xi: f64, phi0: f64) -> f64 {
    bessel_j(n, phi0 * PI * xi)
}

fn zeta_coh(xi: f64, phi0: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Quantum => phi0 * sin_pi(xi),
        Mode::Classical => phi0 * PI * xi,
    }
}

fn zeta_abs(xi: f64, phi0: f64, beta: f64) -> f64 {
    beta * phi0 * (1.0 - cos_pi(xi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionCoefficient {
    pub value: Complex64,
    /// Evaluated by convolution because the arguments sat on the branch point.
    pub fallback: bool,
}

/// Talbot coefficient of a phase grating with photon absorption.
///
/// With a = ζ_coh, b = ζ_abs and c² = a² − b² this is
/// `e^{-b} ((a+b)/c)^n J_n(c)`, evaluated in complex arithmetic so that
/// c² < 0 continues onto modified Bessel functions. Close to the branch
/// point |c| → 0 the equivalent entire series in c² is used; exactly on it
/// the coefficient is convolved from its coherent and absorptive parts.
pub fn coeff_with_absorption(n: i32, xi: f64, phi0: f64, beta: f64, mode: Mode) -> Result<AbsorptionCoefficient> {
    if !(beta >= 0.0) {
        return Err(Error::domain("beta must be non-negative"));
    }
    let a = zeta_coh(xi, phi0, mode);
    let b = zeta_abs(xi, phi0, beta);
    let real = |v: f64| AbsorptionCoefficient {
        value: Complex64::new(v, 0.0),
        fallback: false,
    };
    if b == 0.0 {
        return Ok(real(bessel_j(n, a)));
    }
    let p = 0.5 * (a + b);
    let q = 0.5 * (a - b);
    let pq = p * q;
    if p == 0.0 || q == 0.0 {
        return Ok(AbsorptionCoefficient {
            value: Complex64::new(crate::oracle::absorption_convolution(n, a, b), 0.0),
            fallback: true,
        });
    }
    if pq.abs() < 1.0 {
        return Ok(real((-b).exp() * branch_series(n, p, q)));
    }

    let c = Complex64::new(4.0 * pq, 0.0).sqrt();
    let value = (-b).exp() * (2.0 * p / c).powi(n) * bessel_j_complex(n, c);
    if value.im.abs() > REALITY_TOL {
        return Err(Error::numeric(
            "grating::coeff_with_absorption",
            format!("imaginary part {:e} at n={n}, xi={xi}", value.im),
        ));
    }
    Ok(AbsorptionCoefficient {
        value: Complex64::new(value.re, 0.0),
        fallback: false,
    })
}

fn bessel_j_complex(n: i32, z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(bessel_j(n, z.re), 0.0)
    } else {
        bessel_j_axis(n, Complex64::new(0.0, z.im))
    }
}

/// Coefficient of tⁿ in exp(p t − q/t), without the e^{-b} factor.
fn branch_series(n: i32, p: f64, q: f64) -> f64 {
    let m = n.unsigned_abs();
    let lead_base = if n >= 0 { p } else { -q };
    let mut lead = 1.0;
    for k in 1..=m {
        lead *= lead_base / f64::from(k);
    }
    let x = -p * q;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = f64::from(k);
        term *= x / (kf * (kf + f64::from(m)));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// Absorption kernel e^{-b} I_n(b), b = n₀(1 − cos πξ)/2.
pub fn absorption_kernel(n: i32, xi: f64, n0: f64) -> f64 {
    let b = 0.5 * n0 * (1.0 - cos_pi(xi));
    crate::special::bessel_i_scaled(n, b)
}

/// 3(sin x − j₁(x))/(2x) with its limit 1 at x = 0.
fn scattering_shape(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 5.0
    } else {
        3.0 * (x.sin() - spherical_j1(x)) / (2.0 * x)
    }
}

/// Rayleigh-scattering kernel R_n^{sca}(ξ).
pub fn coeff_scattering(n: i32, xi: f64, n_r: f64) -> f64 {
    if n_r == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let g = scattering_shape(PI * xi);
    let c = cos_pi(xi);
    let arg = 0.5 * n_r * (g - c);
    (-0.5 * n_r * (1.0 - c * g)).exp() * bessel_i(n, arg)
}

/// Σ_n R_n^{sca}(ξ) in closed form.
pub fn scattering_kernel_sum(xi: f64, n_r: f64) -> f64 {
    let g = scattering_shape(PI * xi);
    (0.5 * n_r * (1.0 + cos_pi(xi)) * (g - 1.0)).exp()
}

/// Grating coefficients B_n at fixed ξ for n ∈ [−N, N].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TalbotCoefficientSet {
    pub xi: f64,
    pub cutoff: usize,
    pub values: Vec<Complex64>,
    /// Some member needed the branch-point fallback.
    pub fallback: bool,
}

impl TalbotCoefficientSet {
    pub fn get(&self, n: i32) -> Complex64 {
        let idx = n + self.cutoff as i32;
        if idx < 0 || idx as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    pub fn orders(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        let n0 = -(self.cutoff as i32);
        self.values.iter().enumerate().map(move |(i, v)| (n0 + i as i32, *v))
    }
}

/// Everything needed to evaluate a grating coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingModel {
    pub phi0: f64,
    pub beta: f64,
    pub n_r: f64,
    pub mode: Mode,
}

impl GratingModel {
    pub fn pure(phi0: f64, mode: Mode) -> Self {
        Self {
            phi0,
            beta: 0.0,
            n_r: 0.0,
            mode,
        }
    }

    pub fn from_pulse(pulse: &GratingPulse, mode: Mode, absorption: bool, scattering: bool) -> Self {
        Self {
            phi0: pulse.phi0,
            beta: if absorption { pulse.beta() } else { 0.0 },
            n_r: if scattering { pulse.n_r } else { 0.0 },
            mode,
        }
    }

    fn raw(&self, n: i32, xi: f64) -> Result<AbsorptionCoefficient> {
        coeff_with_absorption(n, xi, self.phi0, self.beta, self.mode)
    }

    /// Set at ξ without scattering, adaptively truncated.
    pub fn coherent_set(&self, xi: f64) -> Result<TalbotCoefficientSet> {
        let a = zeta_coh(xi, self.phi0, self.mode).abs();
        let b = zeta_abs(xi, self.phi0, self.beta);
        let mut cutoff = (a + b).ceil() as usize + 8;
        loop {
            let tail = [cutoff as i32, cutoff as i32 + 1]
                .iter()
                .flat_map(|&k| [k, -k])
                .map(|k| self.raw(k, xi).map(|c| c.value.norm()))
                .sum::<Result<f64>>()?;
            if tail < CUTOFF_TOL {
                break;
            }
            cutoff += 4;
            if cutoff > MAX_ORDER {
                return Err(Error::numeric("grating::coherent_set", "order cutoff exceeded"));
            }
        }
        let mut fallback = false;
        let mut values = Vec::with_capacity(2 * cutoff + 1);
        for k in -(cutoff as i32)..=cutoff as i32 {
            let c = self.raw(k, xi)?;
            fallback |= c.fallback;
            values.push(c.value);
        }
        Ok(TalbotCoefficientSet {
            xi,
            cutoff,
            values,
            fallback,
        })
    }

    /// Full set at ξ including Rayleigh scattering when n_R > 0.
    pub fn set(&self, xi: f64) -> Result<TalbotCoefficientSet> {
        let set = self.coherent_set(xi)?;
        Ok(combine_scattering(&set, xi, self.n_r))
    }

    /// Single coefficient B_n(ξ).
    pub fn coefficient(&self, n: i32, xi: f64) -> Result<Complex64> {
        if self.n_r == 0.0 {
            return Ok(self.raw(n, xi)?.value);
        }
        Ok(self.set(xi)?.get(n))
    }
}

/// B_n → Σ_j B_{n−j} R_j^{sca}.
pub fn combine_scattering(set: &TalbotCoefficientSet, xi: f64, n_r: f64) -> TalbotCoefficientSet {
    if n_r == 0.0 {
        return set.clone();
    }
    let mut kernel = vec![coeff_scattering(0, xi, n_r)];
    while kernel.len() < MAX_ORDER {
        let j = kernel.len() as i32;
        let r = coeff_scattering(j, xi, n_r);
        kernel.push(r);
        if r.abs() < 1e-17 * kernel[0].abs().max(1e-300) {
            break;
        }
    }
    let reach = kernel.len() - 1;
    let cutoff = set.cutoff + reach;
    let values = (-(cutoff as i32)..=cutoff as i32)
        .map(|n| {
            (-(reach as i32)..=reach as i32)
                .map(|j| set.get(n - j) * kernel[j.unsigned_abs() as usize])
                .sum()
        })
        .collect();
    TalbotCoefficientSet {
        xi,
        cutoff,
        values,
        fallback: set.fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::AMU;
    use crate::materials::Material;
    use std::sync::Arc;

    fn silicon() -> Particle {
        Particle::from_mass(Arc::new(Material::silicon()), 1e6 * AMU, 300.0).unwrap()
    }

    #[test]
    fn phase_per_energy_for_silicon() {
        let per_mj = phase_amplitude(&silicon(), 1e-3, spot_area_from_waist(30e-3), 355e-9).unwrap();
        assert!((per_mj - 50.0).abs() < 10.0, "{per_mj}");
        assert_eq!(phase_amplitude(&silicon(), 0.0, 1e-6, 355e-9).unwrap(), 0.0);
    }

    #[test]
    fn pulse_records_photon_numbers() {
        let p = GratingPulse::from_phi0(&silicon(), 355e-9, 4.0 * PI, spot_area_from_waist(30e-3)).unwrap();
        let r = optical_response(&silicon(), 355e-9).unwrap();
        assert_eq!(p.period, 177.5e-9);
        assert!((p.n0 - 2.0 * r.beta * p.phi0).abs() < 1e-15);
        assert!((p.n_r - 2.0 * r.eta * p.phi0).abs() < 1e-15);
        let e = GratingPulse::from_energy(&silicon(), 355e-9, p.pulse_energy, p.spot_area).unwrap();
        assert!((e.phi0 - p.phi0).abs() < 1e-12);
    }

    #[test]
    fn caps_are_independent() {
        let lim = GratingLimits::default();
        let area = spot_area_from_waist(30e-3);
        let p = GratingPulse::from_energy(&silicon(), 355e-9, 400e-6, area).unwrap();
        assert!(p.phi0 > 4.0 * PI);
        assert!(lim.check(&p).is_err());
        let loose = GratingLimits {
            max_phi0: 100.0,
            ..lim
        };
        assert!(loose.check(&p).is_ok());
    }

    #[test]
    fn negative_polarizability_is_rejected() {
        let spectrum = vec![
            crate::materials::SpectrumPoint { wavelength: 1e-7, n_real: 0.1, n_imag: 0.0 },
            crate::materials::SpectrumPoint { wavelength: 1e-6, n_real: 0.1, n_imag: 0.0 },
        ];
        let m = Material::new(crate::materials::BulkProperties::silicon(), spectrum).unwrap();
        let p = Particle::from_radius(Arc::new(m), 5e-9, 0.0).unwrap();
        assert!(matches!(
            phase_amplitude(&p, 1e-3, 1e-6, 355e-9),
            Err(Error::UnsupportedMaterial(_))
        ));
    }

    #[test]
    fn integer_talbot_orders_are_flat() {
        for k in [0.0, 1.0, 2.0, -3.0] {
            for n in -5..=5 {
                let expect = if n == 0 { 1.0 } else { 0.0 };
                assert_eq!(coeff_coherent(n, k, 1.4 * PI), expect);
            }
        }
    }

    #[test]
    fn absorption_reduces_to_coherent() {
        for n in -6..=6 {
            let a = coeff_with_absorption(n, 0.37, 2.0, 0.0, Mode::Quantum).unwrap();
            assert_eq!(a.value.re, coeff_coherent(n, 0.37, 2.0));
        }
        let b0 = coeff_with_absorption(0, 0.0, 3.0, 0.06, Mode::Quantum).unwrap();
        assert_eq!(b0.value.re, 1.0);
    }

    #[test]
    fn absorption_closed_form_matches_convolution() {
        let phi0 = 1.4 * PI;
        let beta = 0.06;
        let xi = 0.881;
        let a = phi0 * sin_pi(xi);
        let b = beta * phi0 * (1.0 - cos_pi(xi));
        for n in -12..=12 {
            let closed = coeff_with_absorption(n, xi, phi0, beta, Mode::Quantum).unwrap();
            let conv: f64 = (-80..=80)
                .map(|j| crate::special::bessel_i_scaled(j, b) * bessel_j(n - j, a))
                .sum();
            assert!((closed.value.re - conv).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn branch_continuation_is_continuous() {
        // ζ_coh = ζ_abs for sin πξ = β(1 − cos πξ); scan through it with a large β
        let beta = 2.0;
        let phi0 = 3.0;
        let xi_branch = 2.0 * (1.0f64 / beta).atan() / PI;
        for n in [-3, 0, 1, 4] {
            let f = |xi: f64| coeff_with_absorption(n, xi, phi0, beta, Mode::Quantum).unwrap().value.re;
            for d in [1e-3, 1e-6, 1e-9] {
                assert!((f(xi_branch - d) - f(xi_branch + d)).abs() < 50.0 * d, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn scattering_kernel_limits_and_sum() {
        for n in -3..=3 {
            let expect = if n == 0 { 1.0 } else { 0.0 };
            assert_eq!(coeff_scattering(n, 0.3, 0.0), expect);
            assert!((coeff_scattering(n, 0.0, 0.5) - expect).abs() < 1e-15);
        }
        for &xi in &[1e-6, 0.2, 0.5, 0.881, 1.3, 2.7] {
            let s: f64 = (-60..=60).map(|n| coeff_scattering(n, xi, 0.4)).sum();
            assert!((s - scattering_kernel_sum(xi, 0.4)).abs() < 1e-12, "xi={xi}");
        }
        assert!((scattering_shape(1e-4 * 0.999) - scattering_shape(1e-4 * 1.001)).abs() < 1e-9);
    }

    #[test]
    fn scattering_barely_changes_silicon_coefficients() {
        let pulse = GratingPulse::from_phi0(&silicon(), 355e-9, 4.0 * PI, spot_area_from_waist(30e-3)).unwrap();
        let model = GratingModel::from_pulse(&pulse, Mode::Quantum, true, false);
        let with = GratingModel {
            n_r: pulse.n_r,
            ..model
        };
        for &xi in &[0.1, 0.5, 0.881] {
            let a = model.set(xi).unwrap();
            let b = with.set(xi).unwrap();
            let scale = a.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let worst = (-20..=20).map(|n| (a.get(n) - b.get(n)).norm()).fold(0.0, f64::max);
            assert!(worst < 0.01 * scale, "xi={xi}: {worst} vs {scale}");
        }
    }

    #[test]
    fn classical_and_quantum_agree_at_short_times() {
        let phi0 = 1.4 * PI;
        for &xi in &[1e-2, 5e-3] {
            for n in 0..4 {
                let d = (coeff_classical(n, xi, phi0) - coeff_coherent(n, xi, phi0)).abs();
                assert!(d < 10.0 * phi0 * (PI * xi).powi(3), "n={n} xi={xi}");
            }
        }
    }

    #[test]
    fn classical_first_order_has_many_zeros() {
        let xi = 0.889;
        let mut crossings = 0;
        let mut last = coeff_classical(1, xi, 1e-3);
        for k in 1..=400 {
            let v = coeff_classical(1, xi, 4.0 * PI * k as f64 / 400.0);
            if v.signum() != last.signum() {
                crossings += 1;
            }
            last = v;
        }
        assert!(crossings >= 3);
    }

    #[test]
    fn set_cutoff_meets_tolerance() {
        let m = GratingModel {
            phi0: 4.0 * PI,
            beta: 0.06,
            n_r: 0.0,
            mode: Mode::Quantum,
        };
        let s = m.set(0.5).unwrap();
        assert!(s.cutoff <= 40);
        assert!(s.get(s.cutoff as i32).norm() < CUTOFF_TOL);
    }
}
