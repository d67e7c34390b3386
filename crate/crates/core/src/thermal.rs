//! Internal temperature of the particle under laser heating and radiative exchange.

use std::f64::consts::PI;
use std::sync::Arc;

use ode_solvers::dop_shared::OutputType;
use ode_solvers::{Dopri5, System, Vector1};
use serde::{Deserialize, Serialize};

use crate::constants::C;
use crate::decoherence::TemperatureHistory;
use crate::error::{Error, Result};
use crate::materials::{clausius_mossotti, Particle, RateKind, SpectralGrid, SPECTRAL_POINTS};

pub const RTOL: f64 = 1e-6;
/// K
pub const ATOL: f64 = 1e-3;
pub const SAMPLES_PER_PHASE: usize = 200;
/// Upper end of the equilibrium search [K].
pub const T_MAX: f64 = 5000.0;

/// Power balance m c_m dT/dt = P_laser + P_abs(T_env) − P_emi(T_int).
#[derive(Debug, Clone)]
pub struct HeatingModel {
    pub particle: Particle,
    pub environment_temperature: f64,
    /// Blackbody absorption from the environment can be switched off.
    pub environment_absorption: bool,
    grid: SpectralGrid,
    absorbed: f64,
}

impl HeatingModel {
    pub fn new(particle: &Particle, environment_temperature: f64) -> Result<Self> {
        Self::with_points(particle, environment_temperature, SPECTRAL_POINTS)
    }

    pub fn with_points(particle: &Particle, environment_temperature: f64, points: usize) -> Result<Self> {
        let grid = SpectralGrid::new(&particle.material, points)?;
        let (_, absorbed) = grid.rate_and_power(RateKind::Absorption, particle.radius, environment_temperature);
        Ok(Self {
            particle: particle.clone(),
            environment_temperature,
            environment_absorption: true,
            grid,
            absorbed,
        })
    }

    pub fn without_environment_absorption(mut self) -> Self {
        self.environment_absorption = false;
        self
    }

    /// Power absorbed from a trap laser of intensity `intensity` [W/m²].
    pub fn laser_power(&self, intensity: f64, wavelength: f64) -> Result<f64> {
        if intensity == 0.0 {
            return Ok(0.0);
        }
        let cm = clausius_mossotti(self.particle.material.permittivity(wavelength))?;
        let omega = 2.0 * PI * C / wavelength;
        Ok(4.0 * PI * intensity * omega * self.particle.radius.powi(3) / C * cm.im)
    }

    pub fn absorbed_power(&self) -> f64 {
        if self.environment_absorption {
            self.absorbed
        } else {
            0.0
        }
    }

    pub fn emitted_power(&self, t_int: f64) -> f64 {
        self.grid.rate_and_power(RateKind::Emission, self.particle.radius, t_int).1
    }

    fn heat_capacity(&self) -> f64 {
        self.particle.mass * self.particle.material.specific_heat
    }

    /// dT_int/dt [K/s].
    pub fn rate(&self, intensity: f64, wavelength: f64, t_int: f64) -> Result<f64> {
        let p = self.laser_power(intensity, wavelength)? + self.absorbed_power() - self.emitted_power(t_int);
        Ok(p / self.heat_capacity())
    }

    /// T_eq in [T_env, T_MAX] where the rate vanishes.
    pub fn equilibrium_temperature(&self, intensity: f64, wavelength: f64) -> Result<f64> {
        let laser = self.laser_power(intensity, wavelength)?;
        let f = |t: f64| (laser + self.absorbed_power() - self.emitted_power(t)) / self.heat_capacity();
        let mut lo = self.environment_temperature.max(1.0);
        let mut hi = T_MAX;
        if f(lo) < 0.0 {
            return Err(Error::numeric("thermal::equilibrium_temperature", "cooling already at T_env"));
        }
        if f(hi) > 0.0 {
            return Err(Error::numeric(
                "thermal::equilibrium_temperature",
                format!("no equilibrium below {T_MAX} K"),
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// dT_int/dt for a single state; builds its own spectral grid.
pub fn heating_rhs(particle: &Particle, intensity: f64, wavelength: f64, t_env: f64, t_int: f64) -> Result<f64> {
    if !(t_int > 0.0) {
        return Err(Error::domain("internal temperature must be positive"));
    }
    HeatingModel::new(particle, t_env)?.rate(intensity, wavelength, t_int)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    /// s
    pub duration: f64,
    /// W/m²
    pub intensity: f64,
    /// m
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalTimeline {
    pub phases: Vec<Phase>,
    pub initial_temperature: f64,
    /// (t, T_int) with t from the start of the first phase.
    pub samples: Vec<(f64, f64)>,
}

impl ThermalTimeline {
    /// Linear interpolation of the samples, clamped at both ends.
    pub fn temperature_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        if t >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        let i = s.partition_point(|p| p.0 <= t);
        let (a, b) = (s[i - 1], s[i]);
        if b.0 == a.0 {
            return b.1;
        }
        a.1 + (t - a.0) / (b.0 - a.0) * (b.1 - a.1)
    }

    pub fn final_temperature(&self) -> f64 {
        self.samples[self.samples.len() - 1].1
    }

    /// Start time of phase `i`.
    pub fn phase_start(&self, i: usize) -> f64 {
        self.phases[..i].iter().map(|p| p.duration).sum()
    }

    /// Temperature history with time measured from `origin`.
    pub fn history_from(&self, origin: f64) -> TemperatureHistory {
        let me = self.clone();
        Arc::new(move |t| me.temperature_at(origin + t))
    }
}

struct PhaseSystem<'a> {
    model: &'a HeatingModel,
    laser: f64,
}

impl System<f64, Vector1<f64>> for PhaseSystem<'_> {
    fn system(&self, _t: f64, y: &Vector1<f64>, dy: &mut Vector1<f64>) {
        let p = self.laser + self.model.absorbed_power() - self.model.emitted_power(y[0].max(0.0));
        dy[0] = p / self.model.heat_capacity();
    }
}

/// Integrates T_int through consecutive phases, restarting the integrator at each boundary.
pub fn evolve_temperature(model: &HeatingModel, phases: &[Phase], initial_temperature: f64) -> Result<ThermalTimeline> {
    evolve_with(model, phases, initial_temperature, &EvolveOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub rtol: f64,
    /// K
    pub atol: f64,
    /// Dense-output samples per phase; also the largest step.
    pub samples_per_phase: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: RTOL,
            atol: ATOL,
            samples_per_phase: SAMPLES_PER_PHASE,
        }
    }
}

pub fn evolve_with(
    model: &HeatingModel,
    phases: &[Phase],
    initial_temperature: f64,
    options: &EvolveOptions,
) -> Result<ThermalTimeline> {
    let EvolveOptions { rtol, atol, samples_per_phase } = *options;
    if samples_per_phase == 0 {
        return Err(Error::domain("samples_per_phase must be positive"));
    }
    if !(initial_temperature > 0.0) {
        return Err(Error::domain("initial temperature must be positive"));
    }
    if phases.is_empty() || phases.iter().any(|p| !(p.duration > 0.0)) {
        return Err(Error::domain("phase durations must be positive"));
    }
    let mut samples = vec![(0.0, initial_temperature)];
    let mut start = 0.0;
    let mut temp = initial_temperature;
    for phase in phases {
        let system = PhaseSystem {
            model,
            laser: model.laser_power(phase.intensity, phase.wavelength)?,
        };
        let dx = phase.duration / samples_per_phase as f64;
        // The built-in stiffness probe misfires on near-constant right-hand sides
        // (pure laser heating), so it is disabled; the step limit stays at dx.
        let mut solver = Dopri5::from_param(
            system,
            0.0,
            phase.duration,
            dx,
            Vector1::new(temp),
            rtol,
            atol,
            0.9,
            0.04,
            0.2,
            10.0,
            dx,
            0.0,
            100_000,
            u32::MAX,
            OutputType::Dense,
        );
        solver.integrate().map_err(|e| {
            Error::numeric(
                "thermal::evolve_temperature",
                format!("{e}; last good state t = {start} s, T = {temp} K"),
            )
        })?;
        let (ts, ys) = solver.results().get();
        for (t, y) in ts.iter().zip(ys).skip(1) {
            // dense output can land a hair past the boundary
            if *t < phase.duration * (1.0 - 1e-12) {
                samples.push((start + t, y[0]));
            }
        }
        let end = ys.last().map(|y| y[0]).unwrap_or(temp);
        let t_end = *ts.last().unwrap_or(&0.0);
        temp = if (t_end - phase.duration).abs() <= 1e-12 * phase.duration {
            end
        } else {
            return Err(Error::numeric("thermal::evolve_temperature", "integrator stopped before phase end"));
        };
        start += phase.duration;
        samples.push((start, temp));
        if !(temp > 0.0) {
            return Err(Error::numeric("thermal::evolve_temperature", format!("T_int = {temp} K")));
        }
    }
    Ok(ThermalTimeline {
        phases: phases.to_vec(),
        initial_temperature,
        samples,
    })
}

/// mW/µm² expressed in W/m².
pub const MW_PER_UM2: f64 = 1e9;
