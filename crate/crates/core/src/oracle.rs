//! Brute-force reference computations for the closed forms elsewhere in the crate.
//!
//! Three independent routes: split-step wave propagation, classical trajectory
//! Monte Carlo, and direct convolution of grating coefficients.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::constants::HBAR;
use crate::dynamics::{SourceState, Timeline};
use crate::error::{Error, Result};
use crate::grating::{coeff_scattering, Mode};
use crate::special::{bessel_i_scaled, bessel_j, cos_pi, sin_pi};

/// Largest fraction of the norm allowed near the grid edges or the Nyquist band.
pub const LEAKAGE_TOL: f64 = 1e-6;
/// Minimum grid points per half grating period.
pub const POINTS_PER_HALF_PERIOD: f64 = 16.0;
/// Trajectories per random stream.
pub const CHUNK: usize = 1 << 16;
pub const MIN_TRAJECTORIES: usize = 10_000;

// ---------------------------------------------------------------------------
// Wave propagation

/// Uniform periodic grid holding one wavefunction.
#[derive(Clone)]
pub struct WaveGrid {
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub mass: f64,
    /// Elapsed free-propagation time [s].
    pub time: f64,
    span: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for WaveGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaveGrid")
            .field("points", &self.x.len())
            .field("span", &self.span)
            .field("mass", &self.mass)
            .field("time", &self.time)
            .finish()
    }
}

impl WaveGrid {
    /// `points` must be a power of two; the grid is centred on x = 0.
    pub fn new(points: usize, span: f64, mass: f64) -> Result<Self> {
        if !points.is_power_of_two() || points < 16 {
            return Err(Error::domain("grid size must be a power of two ≥ 16"));
        }
        if !(span > 0.0) || !(mass > 0.0) {
            return Err(Error::domain("grid span and mass must be positive"));
        }
        let dx = span / points as f64;
        let x = (0..points).map(|j| (j as f64 - (points / 2) as f64) * dx).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            x,
            psi: vec![Complex64::new(0.0, 0.0); points],
            mass,
            time: 0.0,
            span,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    pub fn dx(&self) -> f64 {
        self.span / self.x.len() as f64
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// Normalized Gaussian packet of position width `sigma` and mean momentum `p0`.
    pub fn set_gaussian(&mut self, center: f64, sigma: f64, p0: f64) {
        let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
        for (psi, &x) in self.psi.iter_mut().zip(&self.x) {
            let u = (x - center) / (2.0 * sigma);
            *psi = Complex64::from_polar(amp * (-u * u).exp(), p0 * x / HBAR);
        }
        self.time = 0.0;
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }

    fn wavenumber(&self, j: usize) -> f64 {
        let n = self.x.len();
        let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * PI * m / self.span
    }

    /// Exact free evolution over `t` in momentum space.
    pub fn propagate(&mut self, t: f64) {
        let n = self.x.len();
        // the grid starts at −L/2, which only adds a constant phase per mode
        self.forward.process(&mut self.psi);
        let c = HBAR * t / (2.0 * self.mass);
        for j in 0..n {
            let k = self.wavenumber(j);
            self.psi[j] *= Complex64::from_polar(1.0 / n as f64, -c * k * k);
        }
        self.inverse.process(&mut self.psi);
        self.time += t;
    }

    pub fn apply_phase(&mut self, phase: &dyn Fn(f64) -> f64) {
        for (psi, &x) in self.psi.iter_mut().zip(&self.x) {
            *psi *= Complex64::from_polar(1.0, phase(x));
        }
    }

    /// Fraction of the norm in the outer eighth of the grid or of the spectrum.
    pub fn leakage(&self) -> f64 {
        let n = self.x.len();
        let total: f64 = self.psi.iter().map(|c| c.norm_sqr()).sum();
        let edge = n / 16;
        let spatial: f64 = self.psi[..edge]
            .iter()
            .chain(&self.psi[n - edge..])
            .map(|c| c.norm_sqr())
            .sum();
        let mut spec = self.psi.clone();
        self.forward.process(&mut spec);
        let spec_total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        let spectral: f64 = spec[n / 2 - edge..n / 2 + edge].iter().map(|c| c.norm_sqr()).sum();
        (spatial / total).max(spectral / spec_total)
    }

    fn check_leakage(&self) -> Result<()> {
        let l = self.leakage();
        if l > LEAKAGE_TOL {
            return Err(Error::numeric(
                "oracle::propagate",
                format!("aliasing: {l:e} of the norm at the grid or spectral edge; enlarge the grid"),
            ));
        }
        Ok(())
    }
}

/// φ(x) = φ₀ cos²(πx/d): antinode of the standing wave at x = 0.
pub fn standing_wave_phase(phi0: f64, period: f64) -> impl Fn(f64) -> f64 + Sync + Send + Copy {
    move |x: f64| {
        let c = (PI * x / period).cos();
        phi0 * c * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub points: usize,
    /// m
    pub span: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 1 << 14, span: 64e-6 }
    }
}

impl GridSpec {
    fn check_resolution(&self, period: f64) -> Result<()> {
        let per_half = 0.5 * period / (self.span / self.points as f64);
        if per_half < POINTS_PER_HALF_PERIOD {
            return Err(Error::domain(format!(
                "grid has {per_half:.1} points per half period, need {POINTS_PER_HALF_PERIOD}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSourceOptions {
    pub grid: GridSpec,
    /// Trapezoid nodes for the grating offset over one period.
    pub offsets: usize,
    /// Fourier orders kept in the central-period density.
    pub orders: usize,
    /// Output samples across one magnified period.
    pub samples: usize,
}

impl Default for PointSourceOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            offsets: 128,
            orders: 48,
            samples: 256,
        }
    }
}

/// Density over one magnified period at the centre of the cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralDensity {
    pub x: Vec<f64>,
    /// 1/m
    pub density: Vec<f64>,
    /// Fourier amplitudes c_0..=c_N relative to the mean.
    pub coefficients: Vec<Complex64>,
    pub period: f64,
    pub mean: f64,
}

impl CentralDensity {
    pub fn visibility(&self) -> f64 {
        2.0 * self.coefficients[1].norm() / self.coefficients[0].re
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let theta = 2.0 * PI * x / self.period;
        let mut s = self.coefficients[0].re;
        for (n, c) in self.coefficients.iter().enumerate().skip(1) {
            s += 2.0 * (c * Complex64::from_polar(1.0, n as f64 * theta)).re;
        }
        self.mean * s
    }
}

/// Thermal source → free flight t₁ → phase mask → free flight t₂, by split-step propagation.
///
/// The Gaussian source is an incoherent mixture of momentum-boosted packets of
/// width σx. A boost only displaces the packet relative to the grating and the
/// final pattern, so near the cloud centre the mixture reduces to an average
/// over grating offsets s ∈ [0, d), each followed by periodization with the
/// magnified period D.
pub fn propagate_point_source(
    source: &SourceState,
    timeline: &Timeline,
    phase: &(dyn Fn(f64) -> f64 + Sync),
    options: &PointSourceOptions,
) -> Result<CentralDensity> {
    let d = timeline.period;
    let big_d = timeline.magnified_period;
    options.grid.check_resolution(d)?;
    let packet_p = HBAR / (2.0 * source.sigma_x);
    if source.sigma_p <= packet_p {
        return Err(Error::domain("σp below the minimum-uncertainty value for σx"));
    }
    let template = WaveGrid::new(options.grid.points, options.grid.span, source.mass)?;
    let dx = template.dx();
    let orders = options.orders;
    let basis: Vec<Vec<Complex64>> = (0..=orders)
        .map(|n| {
            template
                .x
                .iter()
                .map(|&x| Complex64::from_polar(dx, -2.0 * PI * n as f64 * x / big_d))
                .collect()
        })
        .collect();

    let m = options.offsets;
    let per_offset: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|i| -> Result<Vec<Complex64>> {
            let s = d * i as f64 / m as f64;
            let mut g = template.clone();
            g.set_gaussian(0.0, source.sigma_x, 0.0);
            g.propagate(timeline.t1);
            g.check_leakage()?;
            g.apply_phase(&|x| phase(x + s));
            g.propagate(timeline.t2);
            g.check_leakage()?;
            let rho = g.density();
            Ok(basis
                .iter()
                .enumerate()
                .map(|(n, b)| {
                    let w: Complex64 = rho.iter().zip(b).map(|(r, e)| e * r).sum();
                    // the packet lands at s·μ in the lab frame
                    w * Complex64::from_polar(1.0 / m as f64, -2.0 * PI * n as f64 * s / d)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut coefficients = vec![Complex64::new(0.0, 0.0); orders + 1];
    for row in &per_offset {
        for (c, v) in coefficients.iter_mut().zip(row) {
            *c += v;
        }
    }
    let sigma_v = (source.sigma_p.powi(2) - packet_p.powi(2)).sqrt() / source.mass;
    let mean = 1.0 / ((2.0 * PI).sqrt() * sigma_v * timeline.total());
    let mut out = CentralDensity {
        x: Vec::new(),
        density: Vec::new(),
        coefficients,
        period: big_d,
        mean,
    };
    out.x = (0..options.samples).map(|j| big_d * j as f64 / options.samples as f64).collect();
    out.density = out.x.iter().map(|&x| out.evaluate(x)).collect();
    Ok(out)
}

/// Probabilists' Gauss–Hermite rule: Σ wᵢ f(xᵢ) ≈ E[f(Z)], Z ~ N(0, 1).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDensity {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

/// Full-grid version: Gauss–Hermite mixture of boosted packets, no periodization.
/// Only practical when the whole cloud fits on the grid.
pub fn propagate_mixture(
    source: &SourceState,
    t1: f64,
    phase: &(dyn Fn(f64) -> f64 + Sync),
    t2: f64,
    grid: GridSpec,
    boosts: usize,
) -> Result<GridDensity> {
    let packet_p = HBAR / (2.0 * source.sigma_x);
    if source.sigma_p < packet_p {
        return Err(Error::domain("σp below the minimum-uncertainty value for σx"));
    }
    let spread = (source.sigma_p.powi(2) - packet_p.powi(2)).sqrt();
    let template = WaveGrid::new(grid.points, grid.span, source.mass)?;
    let (nodes, weights) = gauss_hermite(boosts.max(1));
    let parts: Vec<Vec<f64>> = nodes
        .par_iter()
        .zip(&weights)
        .map(|(&z, &w)| {
            let mut g = template.clone();
            g.set_gaussian(0.0, source.sigma_x, z * spread);
            let mut leaked = g.leakage();
            g.propagate(t1);
            leaked = leaked.max(g.leakage());
            g.apply_phase(phase);
            g.propagate(t2);
            leaked = leaked.max(g.leakage());
            let mut rho: Vec<f64> = g.density().into_iter().map(|r| w * r).collect();
            // far boosts carry negligible weight; their leakage counts with that weight
            rho.push(w * leaked);
            rho
        })
        .collect();
    let mut density = vec![0.0; grid.points];
    let mut leaked = 0.0;
    for p in &parts {
        for (d, v) in density.iter_mut().zip(p) {
            *d += v;
        }
        leaked += p[grid.points];
    }
    if leaked > LEAKAGE_TOL {
        return Err(Error::numeric(
            "oracle::propagate_mixture",
            format!("aliasing: {leaked:e} of the norm at the grid or spectral edge; enlarge the grid"),
        ));
    }
    Ok(GridDensity { x: template.x, density })
}

// ---------------------------------------------------------------------------
// Classical Monte Carlo

/// Final positions of `n` ballistic trajectories kicked by Δp = ħφ₀(π/d) sin(2πx/d).
///
/// Chunk `k` draws from its own stream of a ChaCha8 generator seeded with `seed`,
/// so the output does not depend on the thread count.
pub fn sample_arrivals(n: usize, source: &SourceState, timeline: &Timeline, phi0: f64, seed: u64) -> Result<Vec<f64>> {
    if n < MIN_TRAJECTORIES {
        return Err(Error::domain(format!("need at least {MIN_TRAJECTORIES} trajectories")));
    }
    let d = timeline.period;
    let m = source.mass;
    let kick = HBAR * phi0 * PI / d;
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(|_| {
                    let zx: f64 = StandardNormal.sample(&mut rng);
                    let zp: f64 = StandardNormal.sample(&mut rng);
                    let x0 = source.sigma_x * zx;
                    let p0 = source.sigma_p * zp;
                    let x1 = x0 + p0 * timeline.t1 / m;
                    let p1 = p0 + kick * (2.0 * PI * x1 / d).sin();
                    x1 + p1 * timeline.t2 / m
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Values outside [lo, hi) are dropped.
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let w = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in values {
            if v >= lo && v < hi {
                counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
            }
        }
        let edges = (0..=bins).map(|i| lo + w * i as f64).collect();
        Self { edges, counts }
    }

    /// Histogram of positions folded into one period.
    pub fn folded(values: &[f64], period: f64, bins: usize) -> Self {
        let folded: Vec<f64> = values.iter().map(|v| v.rem_euclid(period)).collect();
        Self::new(&folded, 0.0, period, bins)
    }

    /// Probability density per bin.
    pub fn density(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (total as f64 * (e[1] - e[0])))
            .collect()
    }
}

/// First-harmonic estimate of the sinusoidal visibility from raw positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeEstimate {
    pub visibility: f64,
    pub std_error: f64,
    /// Phase of ⟨e^{2πix/D}⟩.
    pub phase: f64,
    pub samples: usize,
}

pub fn fringe_estimate(positions: &[f64], period: f64) -> FringeEstimate {
    let n = positions.len() as f64;
    let z: Complex64 = positions
        .iter()
        .map(|&x| Complex64::from_polar(1.0, 2.0 * PI * x / period))
        .sum::<Complex64>()
        / n;
    let phase = z.arg();
    // spread of the projection onto the mean direction
    let var = positions
        .iter()
        .map(|&x| {
            let c = (2.0 * PI * x / period - phase).cos() - z.norm();
            c * c
        })
        .sum::<f64>()
        / (n - 1.0);
    FringeEstimate {
        visibility: 2.0 * z.norm(),
        std_error: 2.0 * (var / n).sqrt(),
        phase,
        samples: positions.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub histogram: Histogram,
    pub fringe: FringeEstimate,
}

/// Classical trajectories folded onto one magnified period.
pub fn classical_monte_carlo(
    n: usize,
    source: &SourceState,
    timeline: &Timeline,
    phi0: f64,
    seed: u64,
    bins: usize,
) -> Result<MonteCarlo> {
    let x = sample_arrivals(n, source, timeline, phi0, seed)?;
    let period = timeline.magnified_period;
    Ok(MonteCarlo {
        histogram: Histogram::folded(&x, period, bins),
        fringe: fringe_estimate(&x, period),
    })
}

// ---------------------------------------------------------------------------
// Coefficient convolution

/// Σ_j J_{n−j}(a) e^{−b} I_j(b): coherent coefficients convolved with the
/// absorption kernel.
pub fn absorption_convolution(n: i32, a: f64, b: f64) -> f64 {
    let reach = (a.abs() + b).ceil() as i32 + 60;
    (-reach..=reach)
        .map(|j| bessel_i_scaled(j, b) * bessel_j(n - j, a))
        .sum()
}

/// Grating coefficient built by successive convolution of the coherent,
/// absorptive and scattering kernels.
pub fn coeff_convolution(n: i32, xi: f64, phi0: f64, beta: f64, n_r: f64, mode: Mode) -> f64 {
    let a = match mode {
        Mode::Quantum => phi0 * sin_pi(xi),
        Mode::Classical => phi0 * PI * xi,
    };
    let b = beta * phi0 * (1.0 - cos_pi(xi));
    if n_r == 0.0 {
        return absorption_convolution(n, a, b);
    }
    let reach = (n_r.ceil() as i32) + 30;
    (-reach..=reach)
        .map(|j| coeff_scattering(j, xi, n_r) * absorption_convolution(n - j, a, b))
        .sum()
}

// ---------------------------------------------------------------------------
// Agreement suite

/// One oracle-versus-closed-form comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value < tolerance,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {:.3e} (limit {:.1e})", self.name, self.value, self.tolerance)
    }
}

/// Relative L∞ distance between the wave oracle and the closed-form pattern
/// over one central period, no decoherence and no absorption.
pub fn wave_agreement(source: &SourceState, timeline: &Timeline, phi0: f64, options: &PointSourceOptions) -> Result<f64> {
    use crate::dynamics::{fringe_pattern, NoReduction, Setup};
    use crate::grating::GratingModel;
    let phase = standing_wave_phase(phi0, timeline.period);
    let oracle = propagate_point_source(source, timeline, &phase, options)?;
    let setup = Setup {
        source: *source,
        timeline: *timeline,
        grating: GratingModel::pure(phi0, Mode::Quantum),
        shift: 0.0,
    };
    let closed = fringe_pattern(&setup, &NoReduction)?;
    let scale = oracle.density.iter().cloned().fold(0.0, f64::max);
    let err = oracle
        .x
        .iter()
        .zip(&oracle.density)
        .map(|(&x, &w)| (w - closed.evaluate(x)).abs())
        .fold(0.0, f64::max);
    Ok(err / scale)
}

/// |V_MC − V_closed| in units of the Monte Carlo standard error.
pub fn monte_carlo_agreement(n: usize, source: &SourceState, timeline: &Timeline, phi0: f64, seed: u64) -> Result<f64> {
    use crate::dynamics::{visibility_sin, NoReduction, Setup};
    use crate::grating::GratingModel;
    let mc = classical_monte_carlo(n, source, timeline, phi0, seed, 64)?;
    let setup = Setup {
        source: *source,
        timeline: *timeline,
        grating: GratingModel::pure(phi0, Mode::Classical),
        shift: 0.0,
    };
    let v = visibility_sin(&setup, &NoReduction)?;
    Ok((mc.fringe.visibility - v).abs() / mc.fringe.std_error)
}

/// Largest |closed form − convolution| over β = 0.06, φ₀ ∈ {π, 1.4π, 4π},
/// ξ ∈ {0.1, 0.5, 0.881, 0.99} and |n| ≤ 12.
pub fn graf_agreement() -> Result<f64> {
    use crate::grating::coeff_with_absorption;
    let mut worst: f64 = 0.0;
    for phi0 in [PI, 1.4 * PI, 4.0 * PI] {
        for xi in [0.1, 0.5, 0.881, 0.99] {
            for n in -12..=12 {
                let closed = coeff_with_absorption(n, xi, phi0, 0.06, Mode::Quantum)?.value;
                let conv = coeff_convolution(n, xi, phi0, 0.06, 0.0, Mode::Quantum);
                worst = worst.max((closed.re - conv).abs()).max(closed.im.abs());
            }
        }
    }
    Ok(worst)
}

/// Same comparison on ξ values straddling ζ_coh = ζ_abs for β = 1.5.
pub fn branch_point_agreement() -> Result<f64> {
    use crate::grating::coeff_with_absorption;
    // sin πξ = β(1 − cos πξ) ⇔ tan(πξ/2) = 1/β
    let beta = 1.5;
    let xi_b = 2.0 * (1.0_f64 / beta).atan() / PI;
    let mut worst: f64 = 0.0;
    for k in -4..=4 {
        let xi = xi_b + f64::from(k) * 1e-9;
        for n in -8..=8 {
            let closed = coeff_with_absorption(n, xi, 1.4 * PI, beta, Mode::Quantum)?.value;
            let conv = coeff_convolution(n, xi, 1.4 * PI, beta, 0.0, Mode::Quantum);
            worst = worst.max((closed - conv).norm());
        }
    }
    Ok(worst)
}

/// Oracle checks at the proposed-experiment parameters.
pub fn agreement_suite(seed: u64) -> Result<Vec<Check>> {
    use crate::constants::AMU;
    use crate::dynamics::{talbot_time, trap_state, StateMode};
    let mass = 1e6 * AMU;
    let d = 355e-9 / 2.0;
    let source = trap_state(mass, 200e3, 20e-3, StateMode::Exact)?;
    let t_t = talbot_time(mass, d);
    let fig2 = Timeline::new(2.0 * t_t, 1.6 * t_t, mass, d)?;
    let opts = PointSourceOptions::default();
    let wave = wave_agreement(&source, &fig2, 1.4 * PI, &opts)?;
    // t₂/μ = t_T
    let talbot = Timeline::new(2.0 * t_t, 2.0 * t_t, mass, d)?;
    let flat = propagate_point_source(&source, &talbot, &standing_wave_phase(PI, d), &opts)?;
    let (lo, hi) = flat
        .density
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let modulation = (hi - lo) / (hi + lo);
    let mc = monte_carlo_agreement(1_000_000, &source, &fig2, PI, seed)?;
    Ok(vec![
        Check::below("wave oracle vs closed form, relative L-inf", wave, 1e-3),
        Check::below("wave oracle flat at the Talbot condition, modulation", modulation, 1e-2),
        Check::below("Monte Carlo vs classical visibility, sigmas", mc, 3.0),
        Check::below("Graf closed form vs convolution, max error", graf_agreement()?, 1e-10),
        Check::below("branch point closed form vs convolution", branch_point_agreement()?, 1e-8),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::AMU;
    use crate::dynamics::{fringe_pattern, NoReduction, Setup};
    use crate::grating::{coeff_coherent, GratingModel};
    use crate::special::erf;

    const D: f64 = 177.5e-9;

    fn source() -> SourceState {
        SourceState::from_widths(1e6 * AMU, 10e-9, 2.1e-23).unwrap()
    }

    #[test]
    fn free_propagation_conserves_norm() {
        let mut g = WaveGrid::new(1 << 12, 20e-6, 1e6 * AMU).unwrap();
        g.set_gaussian(0.0, 10e-9, 0.0);
        let n0 = g.norm();
        assert!((n0 - 1.0).abs() < 1e-12);
        g.propagate(0.16);
        assert!((g.norm() - n0).abs() < 1e-12);
    }

    #[test]
    fn packet_spreads_as_expected() {
        let m = 1e6 * AMU;
        let mut g = WaveGrid::new(1 << 12, 20e-6, m).unwrap();
        let s0 = 10e-9;
        g.set_gaussian(0.0, s0, 0.0);
        g.propagate(0.16);
        let rho = g.density();
        let var = g.x.iter().zip(&rho).map(|(x, r)| x * x * r).sum::<f64>() * g.dx();
        let expect = s0 * s0 + (HBAR * 0.16 / (2.0 * m * s0)).powi(2);
        assert!((var / expect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let m = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-12);
        assert!(m(1).abs() < 1e-12);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
    }

    #[test]
    fn mixture_without_grating_is_gaussian() {
        let m = 1e6 * AMU;
        let sx = 10e-9;
        let sp = 2.0 * HBAR / (2.0 * sx);
        let src = SourceState::from_widths(m, sx, sp).unwrap();
        let out = propagate_mixture(&src, 0.05, &|_| 0.0, 0.05, GridSpec { points: 1 << 14, span: 20e-6 }, 64).unwrap();
        let s = (sx * sx + (sp * 0.1 / m).powi(2)).sqrt();
        let peak = 1.0 / ((2.0 * PI).sqrt() * s);
        for (x, r) in out.x.iter().zip(&out.density) {
            let g = peak * (-0.5 * (x / s).powi(2)).exp();
            assert!((r - g).abs() < 1e-9 * peak, "{x} {r} {g}");
        }
    }

    #[test]
    fn aliasing_is_reported() {
        let src = source();
        let tl = Timeline::new(0.16, 0.08, src.mass, D).unwrap();
        let opts = PointSourceOptions {
            grid: GridSpec { points: 1 << 10, span: 5.0e-6 },
            offsets: 4,
            orders: 2,
            samples: 8,
        };
        assert!(propagate_point_source(&src, &tl, &standing_wave_phase(PI, D), &opts).is_err());
    }

    #[test]
    fn point_source_matches_closed_form() {
        let src = source();
        let tl = Timeline::new(0.16, 0.06, src.mass, D).unwrap();
        let phi0 = 1.4 * PI;
        let opts = PointSourceOptions { offsets: 64, ..Default::default() };
        let oracle = propagate_point_source(&src, &tl, &standing_wave_phase(phi0, D), &opts).unwrap();
        let setup = Setup {
            source: src,
            timeline: tl,
            grating: GratingModel::pure(phi0, Mode::Quantum),
            shift: 0.0,
        };
        let p = fringe_pattern(&setup, &NoReduction).unwrap();
        let scale = oracle.density.iter().cloned().fold(0.0, f64::max);
        let err = oracle
            .x
            .iter()
            .zip(&oracle.density)
            .map(|(&x, &w)| (w - p.evaluate(x)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3 * scale, "{}", err / scale);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let src = source();
        let tl = Timeline::new(0.16, 0.05, src.mass, D).unwrap();
        let a = sample_arrivals(100_000, &src, &tl, PI, 7).unwrap();
        let b = sample_arrivals(100_000, &src, &tl, PI, 7).unwrap();
        let c = sample_arrivals(100_000, &src, &tl, PI, 8).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a != c);
    }

    #[test]
    fn free_monte_carlo_passes_ks() {
        let src = source();
        let tl = Timeline::new(0.16, 0.05, src.mass, D).unwrap();
        let mut x = sample_arrivals(50_000, &src, &tl, 0.0, 1).unwrap();
        x.sort_by(f64::total_cmp);
        let s = (src.sigma_x.powi(2) + (src.sigma_p * tl.total() / src.mass).powi(2)).sqrt();
        let n = x.len() as f64;
        let ks = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = 0.5 * (1.0 + erf(v / (s * 2f64.sqrt())));
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        // 1.63/√N is the 1% critical value
        assert!(ks < 1.63 / n.sqrt(), "{ks}");
    }

    #[test]
    fn coherent_convolution_is_trivial() {
        for n in -5..=5 {
            let v = coeff_convolution(n, 0.37, 1.4 * PI, 0.0, 0.0, Mode::Quantum);
            assert!((v - coeff_coherent(n, 0.37, 1.4 * PI)).abs() < 1e-14);
        }
    }
}
