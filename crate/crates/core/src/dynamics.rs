//! Source state, free-fall timeline and the far-side fringe pattern.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{E_CHARGE, H, HBAR, KB};
use crate::error::{Error, Result};
use crate::grating::GratingModel;
use crate::materials::Particle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMode {
    #[default]
    Exact,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceState {
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub trap_frequency: f64,
    pub temperature: f64,
    pub mass: f64,
}

/// Thermal state of a harmonic trap of frequency `nu` [Hz].
pub fn trap_state(mass: f64, nu: f64, temperature: f64, mode: StateMode) -> Result<SourceState> {
    if !(mass > 0.0 && nu > 0.0) {
        return Err(Error::domain("mass and trap frequency must be positive"));
    }
    if !(temperature >= 0.0) || (mode == StateMode::Classical && temperature == 0.0) {
        return Err(Error::domain("temperature must be positive"));
    }
    let (sigma_x, sigma_p) = match mode {
        StateMode::Exact => {
            let x = H * nu / (2.0 * KB * temperature);
            let coth = if x > 20.0 { 1.0 } else { 1.0 / x.tanh() };
            (
                (HBAR / (4.0 * PI * mass * nu) * coth).sqrt(),
                (PI * HBAR * mass * nu * coth).sqrt(),
            )
        }
        StateMode::Classical => (
            (KB * temperature / (4.0 * PI * PI * mass * nu * nu)).sqrt(),
            (mass * KB * temperature).sqrt(),
        ),
    };
    Ok(SourceState {
        sigma_x,
        sigma_p,
        trap_frequency: nu,
        temperature,
        mass,
    })
}

impl SourceState {
    /// A source with prescribed widths.
    pub fn from_widths(mass: f64, sigma_x: f64, sigma_p: f64) -> Result<Self> {
        if !(mass > 0.0 && sigma_x >= 0.0 && sigma_p > 0.0) {
            return Err(Error::domain("mass and sigma_p must be positive, sigma_x non-negative"));
        }
        Ok(Self {
            sigma_x,
            sigma_p,
            trap_frequency: f64::NAN,
            temperature: f64::NAN,
            mass,
        })
    }

    pub fn with_sigma_x(self, sigma_x: f64) -> Self {
        Self { sigma_x, ..self }
    }
}

/// t_T = m d² / h.
pub fn talbot_time(mass: f64, period: f64) -> f64 {
    mass * period * period / H
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub t1: f64,
    pub t2: f64,
    pub talbot_time: f64,
    pub magnification: f64,
    pub magnified_period: f64,
    pub period: f64,
}

impl Timeline {
    pub fn new(t1: f64, t2: f64, mass: f64, period: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2 > 0.0) {
            return Err(Error::domain("t1 and t2 must be positive"));
        }
        if !(mass > 0.0 && period > 0.0) {
            return Err(Error::domain("mass and period must be positive"));
        }
        let mu = (t1 + t2) / t1;
        Ok(Self {
            t1,
            t2,
            talbot_time: talbot_time(mass, period),
            magnification: mu,
            magnified_period: mu * period,
            period,
        })
    }

    pub fn total(&self) -> f64 {
        self.t1 + self.t2
    }

    /// ξ₁ = t₁t₂ / (t_T (t₁+t₂)); order n is evaluated at n ξ₁.
    pub fn xi1(&self) -> f64 {
        self.t2 / (self.magnification * self.talbot_time)
    }

    /// Spatial argument n h t₂ / (m D) of the decoherence functions for order n.
    pub fn separation(&self, n: i32) -> f64 {
        f64::from(n) * self.period * self.xi1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSourceDiagnostics {
    /// σp d / h
    pub momentum_ratio: f64,
    /// σx / d
    pub width_ratio: f64,
    pub momentum_ok: bool,
    pub width_ok: bool,
}

impl PointSourceDiagnostics {
    pub fn passes(&self) -> bool {
        self.momentum_ok && self.width_ok
    }
}

pub fn point_source_validity(source: &SourceState, period: f64) -> PointSourceDiagnostics {
    let momentum_ratio = source.sigma_p * period / H;
    let width_ratio = source.sigma_x / period;
    PointSourceDiagnostics {
        momentum_ratio,
        width_ratio,
        momentum_ok: momentum_ratio >= 10.0,
        width_ok: width_ratio <= 0.3,
    }
}

/// Piecewise-constant acceleration: `(duration, a)` pairs from release on,
/// zero after the last segment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccelerationProfile {
    pub segments: Vec<(f64, f64)>,
}

impl AccelerationProfile {
    pub fn constant(a: f64, duration: f64) -> Self {
        Self {
            segments: vec![(duration, a)],
        }
    }

    /// Δx(t) = ∫₀ᵗ dt' ∫₀^{t'} a(τ) dτ.
    pub fn displacement(&self, t: f64) -> f64 {
        let mut x = 0.0;
        let mut v = 0.0;
        let mut start = 0.0;
        for &(dur, a) in &self.segments {
            if start >= t {
                break;
            }
            let dt = dur.min(t - start);
            x += v * dt + 0.5 * a * dt * dt;
            v += a * dt;
            start += dur;
        }
        if t > start {
            x += v * (t - start);
        }
        x
    }
}

/// δx = Δx(t₁+t₂) − μ Δx(t₁).
pub fn fringe_shift(profile: &AccelerationProfile, timeline: &Timeline) -> f64 {
    profile.displacement(timeline.total()) - timeline.magnification * profile.displacement(timeline.t1)
}

/// Per-order reduction factors R_n.
pub trait Reduction: Sync {
    fn factor(&self, n: i32) -> Result<f64>;
}

/// No decoherence.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoReduction;

impl Reduction for NoReduction {
    fn factor(&self, _n: i32) -> Result<f64> {
        Ok(1.0)
    }
}

impl<F: Fn(i32) -> Result<f64> + Sync> Reduction for F {
    fn factor(&self, n: i32) -> Result<f64> {
        self(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringePattern {
    pub cutoff: usize,
    /// A_n for n = −N..=N.
    pub coefficients: Vec<Complex64>,
    pub period: f64,
    pub prefactor: f64,
    pub shift: f64,
}

impl FringePattern {
    pub fn amplitude(&self, n: i32) -> Complex64 {
        let idx = n + self.cutoff as i32;
        if idx < 0 || idx as usize >= self.coefficients.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coefficients[idx as usize]
        }
    }

    pub fn evaluate_complex(&self, x: f64) -> Complex64 {
        let theta = 2.0 * PI * (x - self.shift) / self.period;
        let n0 = -(self.cutoff as i32);
        let sum: Complex64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::from_polar(1.0, f64::from(n0 + i as i32) * theta))
            .sum();
        self.prefactor * sum
    }

    /// Probability density w(x) [1/m].
    pub fn evaluate(&self, x: f64) -> f64 {
        let theta = 2.0 * PI * (x - self.shift) / self.period;
        let mut sum = self.amplitude(0).re;
        for n in 1..=self.cutoff as i32 {
            let (s, c) = (f64::from(n) * theta).sin_cos();
            let plus = self.amplitude(n);
            let minus = self.amplitude(-n);
            // A_n e^{inθ} + A_{−n} e^{−inθ}
            sum += (plus.re + minus.re) * c - (plus.im - minus.im) * s;
        }
        self.prefactor * sum
    }

    /// Mean density over one period.
    pub fn mean(&self) -> f64 {
        self.prefactor * self.amplitude(0).re
    }

    pub fn visibility(&self) -> Result<f64> {
        sinusoidal_visibility(self.amplitude(0), self.amplitude(1))
    }
}

fn sinusoidal_visibility(a0: Complex64, a1: Complex64) -> Result<f64> {
    if a0.norm() == 0.0 {
        return Err(Error::numeric("dynamics::visibility_sin", "A_0 = 0"));
    }
    Ok(2.0 * a1.norm() / a0.re)
}

/// Everything the fringe pattern depends on, apart from the reduction factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub source: SourceState,
    pub timeline: Timeline,
    pub grating: GratingModel,
    pub shift: f64,
}

impl Setup {
    fn gaussian(&self, n: i32) -> f64 {
        let t = &self.timeline;
        let g = 2.0 * PI * f64::from(n) * self.source.sigma_x * t.t2 / (t.period * t.total());
        (-0.5 * g * g).exp()
    }

    /// A_n = B_n(n ξ₁) · Gaussian · R_n.
    pub fn amplitude(&self, n: i32, reduction: &dyn Reduction) -> Result<Complex64> {
        let gauss = self.gaussian(n);
        if gauss == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let b = self.grating.coefficient(n, f64::from(n) * self.timeline.xi1())?;
        Ok(b * gauss * reduction.factor(n)?)
    }

    pub fn prefactor(&self) -> f64 {
        self.source.mass / ((2.0 * PI).sqrt() * self.source.sigma_p * self.timeline.total())
    }

    fn initial_cutoff(&self) -> usize {
        let g = &self.grating;
        let spread = g.phi0 * (1.0 + 2.0 * g.beta) + g.n_r + 1.0;
        let mut bessel = None;
        if g.mode == crate::grating::Mode::Quantum {
            // (A/2)^N / N! < 1e-13
            let mut log_term = 0.0;
            for n in 1..2000usize {
                log_term += (spread / 2.0).ln() - (n as f64).ln();
                if n as f64 > spread && log_term < (1e-13f64).ln() {
                    bessel = Some(n + 2);
                    break;
                }
            }
        }
        let t = &self.timeline;
        let gw = 2.0 * PI * self.source.sigma_x * t.t2 / (t.period * t.total());
        let gauss = if gw > 0.0 {
            Some((2.0 * 30.0f64).sqrt() / gw + 2.0)
        } else {
            None
        };
        match (bessel, gauss) {
            (Some(b), Some(g)) => b.min(g.ceil() as usize),
            (Some(b), None) => b,
            (None, Some(g)) => g.ceil() as usize,
            (None, None) => 64,
        }
        .max(2)
    }
}

const PATTERN_TAIL_TOL: f64 = 1e-12;
const MAX_PATTERN_ORDER: usize = 20_000;

pub fn fringe_pattern(setup: &Setup, reduction: &dyn Reduction) -> Result<FringePattern> {
    let mut cutoff = setup.initial_cutoff().min(MAX_PATTERN_ORDER);
    for attempt in 0..2 {
        let tail: f64 = [cutoff as i32, cutoff as i32 + 1]
            .iter()
            .map(|&n| Ok(setup.amplitude(n, reduction)?.norm() + setup.amplitude(-n, reduction)?.norm()))
            .sum::<Result<f64>>()?;
        if tail < PATTERN_TAIL_TOL {
            let coefficients = (-(cutoff as i32)..=cutoff as i32)
                .into_par_iter()
                .map(|n| setup.amplitude(n, reduction))
                .collect::<Result<Vec<_>>>()?;
            return Ok(FringePattern {
                cutoff,
                coefficients,
                period: setup.timeline.magnified_period,
                prefactor: setup.prefactor(),
                shift: setup.shift,
            });
        }
        if attempt == 0 {
            cutoff = (cutoff * 2).min(MAX_PATTERN_ORDER);
        }
    }
    Err(Error::numeric(
        "dynamics::fringe_pattern",
        format!("harmonics above order {cutoff} not negligible"),
    ))
}

/// V = 2|A₁| / A₀.
pub fn visibility_sin(setup: &Setup, reduction: &dyn Reduction) -> Result<f64> {
    sinusoidal_visibility(setup.amplitude(0, reduction)?, setup.amplitude(1, reduction)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub probability: f64,
    /// The window is wider than the envelope supports.
    pub exceeds_one: bool,
}

/// P = W m / (√(2π) σp (t₁+t₂)).
pub fn detection_probability(source: &SourceState, timeline: &Timeline, window: f64) -> Result<Detection> {
    if !(window >= 0.0) {
        return Err(Error::domain("window must be non-negative"));
    }
    let probability = window * source.mass / ((2.0 * PI).sqrt() * source.sigma_p * timeline.total());
    Ok(Detection {
        probability,
        exceeds_one: probability > 1.0,
    })
}

/// Positions in units of the magnified period: `per_period` points per period over [−2, 2).
pub fn default_x_grid(per_period: usize) -> Vec<f64> {
    let n = 4 * per_period;
    (0..n).map(|i| -2.0 + 4.0 * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Carpet {
    pub scan: Vec<f64>,
    /// Column positions in units of each row's magnified period.
    pub x: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub periods: Vec<f64>,
}

/// One density row per scan value; `build` turns a scan value into a pattern.
pub fn carpet<F>(scan: &[f64], x: &[f64], build: F) -> Result<Carpet>
where
    F: Fn(f64) -> Result<FringePattern> + Sync,
{
    if scan.is_empty() || x.is_empty() {
        return Err(Error::domain("carpet grid is empty"));
    }
    let rows: Vec<(f64, Vec<f64>)> = scan
        .par_iter()
        .map(|&v| {
            let p = build(v)?;
            let row = x.iter().map(|&u| p.evaluate(u * p.period)).collect();
            Ok((p.period, row))
        })
        .collect::<Result<_>>()?;
    let (periods, rows) = rows.into_iter().unzip();
    Ok(Carpet {
        scan: scan.to_vec(),
        x: x.to_vec(),
        rows,
        periods,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotNoiseConvention {
    /// √(e / ρP)
    #[default]
    Single,
    /// √(2e / ρP)
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    pub waist: f64,
    pub wavelength: f64,
    pub power: f64,
    pub responsivity: f64,
    pub averaging_periods: f64,
    pub trap_frequency: f64,
    pub convention: ShotNoiseConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapReadout {
    /// Relative signal change per unit displacement [1/m].
    pub sensitivity: f64,
    /// Relative shot noise [1/√Hz].
    pub relative_shot_noise: f64,
    /// Shot-noise-limited position resolution with boxcar averaging over
    /// `averaging_periods` oscillations [m].
    pub position_resolution: f64,
}

pub fn trap_readout(particle: &Particle, params: &ReadoutParams) -> Result<TrapReadout> {
    let p = params;
    if !(p.waist > 0.0 && p.wavelength > 0.0 && p.power > 0.0 && p.responsivity > 0.0 && p.averaging_periods > 0.0) {
        return Err(Error::domain("readout parameters must be positive"));
    }
    let alpha = particle.polarizability(p.wavelength)?;
    let sensitivity = 8.0 * alpha.re / (crate::constants::EPS0 * p.waist.powi(3) * p.wavelength * PI.sqrt());
    let charge = match p.convention {
        ShotNoiseConvention::Single => E_CHARGE,
        ShotNoiseConvention::Double => 2.0 * E_CHARGE,
    };
    let relative_shot_noise = (charge / (p.responsivity * p.power)).sqrt();
    let bandwidth = p.trap_frequency / p.averaging_periods;
    Ok(TrapReadout {
        sensitivity,
        relative_shot_noise,
        position_resolution: relative_shot_noise * bandwidth.sqrt() / sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{AMU, G};
    use crate::grating::Mode;

    const M: f64 = 1e6 * AMU;
    const D: f64 = 177.5e-9;

    fn setup(phi0: f64, t1: f64, t2: f64, sigma_x: f64) -> Setup {
        Setup {
            source: trap_state(M, 200e3, 20e-3, StateMode::Exact).unwrap().with_sigma_x(sigma_x),
            timeline: Timeline::new(t1, t2, M, D).unwrap(),
            grating: GratingModel::pure(phi0, Mode::Quantum),
            shift: 0.0,
        }
    }

    #[test]
    fn talbot_time_scales() {
        let t = talbot_time(M, D);
        assert!((t - 0.0789).abs() < 1e-3);
        assert!((talbot_time(M, 2.0 * D) / t - 4.0).abs() < 1e-12);
        assert!((talbot_time(M / 10.0, D) - t / 10.0).abs() < 1e-15);
    }

    #[test]
    fn exact_and_classical_states_agree() {
        let e = trap_state(M, 200e3, 20e-3, StateMode::Exact).unwrap();
        let c = trap_state(M, 200e3, 20e-3, StateMode::Classical).unwrap();
        assert!(((e.sigma_x - c.sigma_x) / c.sigma_x).abs() < 1e-4);
        assert!(((e.sigma_p - c.sigma_p) / c.sigma_p).abs() < 1e-4);
        let g = trap_state(M, 200e3, 0.0, StateMode::Exact).unwrap();
        assert!((g.sigma_x * g.sigma_p / (HBAR / 2.0) - 1.0).abs() < 1e-12);
        assert!(e.sigma_x * e.sigma_p >= HBAR / 2.0);
    }

    #[test]
    fn validity_thresholds() {
        let s = trap_state(M, 200e3, 20e-3, StateMode::Exact).unwrap();
        let d = point_source_validity(&s, D);
        assert!(d.passes());
        assert!(d.momentum_ratio > 5e3 && d.momentum_ratio < 2e4);
        assert!(!point_source_validity(&s.with_sigma_x(D), D).width_ok);
        let slow = SourceState::from_widths(M, 1e-9, 5.0 * H / D).unwrap();
        assert!(!point_source_validity(&slow, D).momentum_ok);
    }

    #[test]
    fn no_grating_gives_flat_density() {
        let p = fringe_pattern(&setup(0.0, 0.16, 0.126, 10e-9), &NoReduction).unwrap();
        for k in 0..20 {
            let x = k as f64 * p.period / 20.0;
            assert!((p.evaluate(x) - p.prefactor).abs() < 1e-12 * p.prefactor);
        }
        assert_eq!(p.visibility().unwrap(), 0.0);
    }

    #[test]
    fn talbot_order_reconstruction_is_flat() {
        let t1 = 0.16;
        let tt = talbot_time(M, D);
        let t2 = tt * t1 / (t1 - tt);
        let s = setup(PI, t1, t2, 10e-9);
        assert!((s.timeline.xi1() - 1.0).abs() < 1e-12);
        let p = fringe_pattern(&s, &NoReduction).unwrap();
        let vals: Vec<f64> = (0..64).map(|k| p.evaluate(k as f64 * p.period / 64.0)).collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-9 * p.prefactor);
    }

    #[test]
    fn pattern_is_real_periodic_and_normalized() {
        let p = fringe_pattern(&setup(1.4 * PI, 0.16, 0.126, 10e-9), &NoReduction).unwrap();
        assert!((p.amplitude(0).re - 1.0).abs() < 1e-12);
        for k in 0..50 {
            let x = (k as f64 - 25.0) * p.period / 17.0;
            let w = p.evaluate_complex(x);
            assert!(w.im.abs() < 1e-10 * p.mean());
            assert!((p.evaluate(x + p.period) - p.evaluate(x)).abs() < 1e-10 * p.mean());
            assert!((w.re - p.evaluate(x)).abs() < 1e-10 * p.mean());
        }
    }

    #[test]
    fn shift_moves_pattern_rigidly() {
        let mut s = setup(PI, 0.16, 0.126, 10e-9);
        let base = fringe_pattern(&s, &NoReduction).unwrap();
        s.shift = 37e-9;
        let moved = fringe_pattern(&s, &NoReduction).unwrap();
        for k in 0..40 {
            let x = k as f64 * 11e-9;
            assert!((moved.evaluate(x) - base.evaluate(x - 37e-9)).abs() < 1e-12 * base.mean());
        }
    }

    #[test]
    fn fringe_shift_closed_form() {
        let tl = Timeline::new(0.16, 0.126, M, D).unwrap();
        assert_eq!(fringe_shift(&AccelerationProfile::default(), &tl), 0.0);
        let a = G * 1e-6;
        let prof = AccelerationProfile::constant(a, 1.0);
        let expect = a * (tl.total().powi(2) / 2.0 - tl.magnification * tl.t1.powi(2) / 2.0);
        let got = fringe_shift(&prof, &tl);
        assert!(((got - expect) / expect).abs() < 1e-12);
        assert!((got - 1.8e-7).abs() < 0.1e-7, "{got}");
        // piecewise profile equals the sum of its parts
        let split = AccelerationProfile {
            segments: vec![(0.1, a), (0.2, a), (0.7, a)],
        };
        assert!(((fringe_shift(&split, &tl) - expect) / expect).abs() < 1e-12);
    }

    #[test]
    fn detection_scales_with_window() {
        let s = trap_state(M, 200e3, 20e-3, StateMode::Exact).unwrap();
        let tl = Timeline::new(0.16, 0.126, M, D).unwrap();
        let p = detection_probability(&s, &tl, 10e-6).unwrap();
        let q = detection_probability(&s, &tl, 20e-6).unwrap();
        assert!((q.probability / p.probability - 2.0).abs() < 1e-14);
        assert_eq!(detection_probability(&s, &tl, 0.0).unwrap().probability, 0.0);
        assert!(p.probability > 0.9e-3 && p.probability < 1.2e-3);
    }

    #[test]
    fn source_width_suppression_factorizes() {
        let a = setup(PI, 0.16, 0.126, 0.0);
        let b = setup(PI, 0.16, 0.126, 10e-9);
        let va = visibility_sin(&a, &NoReduction).unwrap();
        let vb = visibility_sin(&b, &NoReduction).unwrap();
        let g = 2.0 * PI * 10e-9 * 0.126 / (D * 0.286);
        assert!((vb / va - (-0.5 * g * g).exp()).abs() < 1e-12);
    }

    #[test]
    fn carpet_row_matches_pattern() {
        let s = setup(PI, 0.16, 0.126, 10e-9);
        let x = default_x_grid(16);
        let c = carpet(&[0.126], &x, |_| fringe_pattern(&s, &NoReduction)).unwrap();
        let p = fringe_pattern(&s, &NoReduction).unwrap();
        for (u, w) in x.iter().zip(&c.rows[0]) {
            assert_eq!(*w, p.evaluate(u * p.period));
        }
    }

    #[test]
    fn readout_numbers() {
        let particle = Particle::from_mass(
            std::sync::Arc::new(crate::materials::Material::silicon()),
            M,
            300.0,
        )
        .unwrap();
        let mut params = ReadoutParams {
            waist: 860e-9,
            wavelength: 1064e-9,
            power: 53e-3,
            responsivity: 1.0,
            averaging_periods: 100.0,
            trap_frequency: 200e3,
            convention: ShotNoiseConvention::Single,
        };
        let r = trap_readout(&particle, &params).unwrap();
        assert!((r.relative_shot_noise - 1.74e-9).abs() < 0.05e-9);
        params.power *= 4.0;
        let r4 = trap_readout(&particle, &params).unwrap();
        assert!((r4.relative_shot_noise * 2.0 - r.relative_shot_noise).abs() < 1e-22);
        params.convention = ShotNoiseConvention::Double;
        let r2 = trap_readout(&particle, &params).unwrap();
        assert!((r2.relative_shot_noise / r4.relative_shot_noise - 2f64.sqrt()).abs() < 1e-12);
    }
}
