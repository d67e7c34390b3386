//! Per-order fringe reduction factors from environmental decoherence and CSL.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::constants::{AMU, ANGSTROM, C, EPS0, EV, HBAR, KB, MBAR};
use crate::dynamics::{Reduction, Timeline};
use crate::error::{Error, Result};
use crate::materials::{Particle, RateKind, SpectralGrid, SPECTRAL_POINTS};
use crate::quadrature::GaussLegendre;
use crate::special::{erf, gamma, one_minus_f_scattering, one_minus_si_over_x, one_minus_sinc, one_minus_sinc_series};

/// Order of the Gauss–Legendre rule over the time variable of the emission channel.
pub const THETA_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub temperature: f64,
    pub pressure: f64,
    pub gas_mass: f64,
    pub gas_polarizability: f64,
    pub gas_ionization: f64,
}

impl Environment {
    /// Room-temperature nitrogen at the given pressure [Pa].
    pub fn nitrogen(pressure: f64) -> Self {
        Self {
            temperature: 300.0,
            pressure,
            gas_mass: 28.0 * AMU,
            gas_polarizability: 1.74 * ANGSTROM.powi(3) * 4.0 * PI * EPS0,
            gas_ionization: 15.6 * EV,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.temperature,
            self.pressure,
            self.gas_mass,
            self.gas_polarizability,
            self.gas_ionization,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::domain("environment parameters must be positive"))
        }
    }
}

impl Default for Environment {
    fn default() -> Self {
        Self::nitrogen(1e-10 * MBAR)
    }
}

/// London van der Waals coefficient C₆ [J m⁶].
pub fn c6(particle: &Particle, env: &Environment) -> f64 {
    let i = particle.material.ionization_energy;
    let ig = env.gas_ionization;
    3.0 * particle.static_polarizability() * env.gas_polarizability * ig * i
        / (32.0 * PI * PI * EPS0 * EPS0 * (i + ig))
}

/// Total van der Waals scattering rate Γ_col [1/s].
pub fn collision_rate(particle: &Particle, env: &Environment) -> f64 {
    let v = (2.0 * KB * env.temperature / env.gas_mass).sqrt();
    let pre = 4.0 * PI * gamma(0.9) / (5.0 * (PI / 5.0).sin());
    pre * (3.0 * PI * c6(particle, env) / (2.0 * HBAR)).powf(0.4) * env.pressure * v.powf(0.6)
        / (KB * env.temperature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    #[serde(alias = "col")]
    Collision,
    #[serde(alias = "abs")]
    Absorption,
    #[serde(alias = "sca")]
    Scattering,
    #[serde(alias = "emi")]
    Emission,
    Csl,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::Collision,
        Channel::Absorption,
        Channel::Scattering,
        Channel::Emission,
        Channel::Csl,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "col" | "collision" | "collisions" => Ok(Channel::Collision),
            "abs" | "absorption" => Ok(Channel::Absorption),
            "sca" | "scattering" => Ok(Channel::Scattering),
            "emi" | "emission" => Ok(Channel::Emission),
            "csl" => Ok(Channel::Csl),
            other => Err(Error::domain(format!("unknown channel `{other}`"))),
        }
    }
}

/// Which channels contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSet {
    pub collision: bool,
    pub absorption: bool,
    pub scattering: bool,
    pub emission: bool,
    pub csl: bool,
}

impl Default for ChannelSet {
    /// The environmental channels; CSL off.
    fn default() -> Self {
        Self {
            collision: true,
            absorption: true,
            scattering: true,
            emission: true,
            csl: false,
        }
    }
}

impl ChannelSet {
    pub fn none() -> Self {
        Self {
            collision: false,
            absorption: false,
            scattering: false,
            emission: false,
            csl: false,
        }
    }

    pub fn only(channels: &[Channel]) -> Self {
        let mut s = Self::none();
        for c in channels {
            s.set(*c, true);
        }
        s
    }

    pub fn set(&mut self, c: Channel, on: bool) {
        match c {
            Channel::Collision => self.collision = on,
            Channel::Absorption => self.absorption = on,
            Channel::Scattering => self.scattering = on,
            Channel::Emission => self.emission = on,
            Channel::Csl => self.csl = on,
        }
    }

    pub fn contains(&self, c: Channel) -> bool {
        match c {
            Channel::Collision => self.collision,
            Channel::Absorption => self.absorption,
            Channel::Scattering => self.scattering,
            Channel::Emission => self.emission,
            Channel::Csl => self.csl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CslParams {
    /// Hz
    pub lambda: f64,
    /// m
    pub r_c: f64,
}

impl Default for CslParams {
    fn default() -> Self {
        Self {
            lambda: 1e-16,
            r_c: 100e-9,
        }
    }
}

/// CSL rate Γ = (m / amu)² λ.
pub fn csl_rate(mass: f64, lambda: f64) -> f64 {
    (mass / AMU).powi(2) * lambda
}

/// 1 − f(x) for CSL, f(x) = √π r_c/x · erf(x/2r_c).
pub fn csl_one_minus_f(x: f64, r_c: f64) -> f64 {
    let u = (x / (2.0 * r_c)).abs();
    if u < 0.5 {
        // u²/3 − u⁴/10 + u⁶/42 − …
        let u2 = u * u;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..30 {
            let kf = f64::from(k);
            term *= -u2 / kf;
            let t = -term / (2.0 * kf + 1.0);
            sum += t;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        1.0 - PI.sqrt() / (2.0 * u) * erf(u)
    }
}

/// ln R_n of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ChannelLogs {
    pub collision: f64,
    pub absorption: f64,
    pub scattering: f64,
    pub emission: f64,
    pub csl: f64,
}

impl ChannelLogs {
    pub fn total(&self) -> f64 {
        self.collision + self.absorption + self.scattering + self.emission + self.csl
    }

    pub fn get(&self, c: Channel) -> f64 {
        match c {
            Channel::Collision => self.collision,
            Channel::Absorption => self.absorption,
            Channel::Scattering => self.scattering,
            Channel::Emission => self.emission,
            Channel::Csl => self.csl,
        }
    }
}

/// Internal temperature as a function of time since release.
pub type TemperatureHistory = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Precomputed weights for the emission double integral.
struct EmissionTable {
    omega: Vec<f64>,
    theta: Vec<f64>,
    /// weight[i * θ-order + k]
    weight: Vec<f64>,
}

/// Relative weight below which a frequency row is dropped from the emission table.
const PRUNE: f64 = 1e-15;

impl EmissionTable {
    fn new(grid: &SpectralGrid, radius: f64, timeline: &Timeline, history: &dyn Fn(f64) -> f64) -> Self {
        let gl = GaussLegendre::new(THETA_ORDER);
        let nodes: Vec<(f64, f64)> = gl.mapped(0.0, 1.0).collect();
        let (t1, t2) = (timeline.t1, timeline.t2);
        let before: Vec<f64> = nodes.iter().map(|&(th, _)| history(t1 - t1 * th)).collect();
        let after: Vec<f64> = nodes.iter().map(|&(th, _)| history(t1 + t2 * th)).collect();
        let k = nodes.len();
        let mut omega = Vec::new();
        let mut weight = Vec::new();
        let mut row = vec![0.0; k];
        let mut total = 0.0;
        for i in 0..grid.len() {
            for j in 0..k {
                let g = t1 * grid.rate_at(RateKind::Emission, i, radius, before[j])
                    + t2 * grid.rate_at(RateKind::Emission, i, radius, after[j]);
                row[j] = grid.weight[i] * nodes[j].1 * g;
            }
            let sum: f64 = row.iter().sum();
            total += sum;
            omega.push(grid.omega[i]);
            weight.extend_from_slice(&row);
        }
        // frequencies far outside the thermal band carry nothing; drop them
        let keep: Vec<bool> = weight.chunks(k).map(|r| r.iter().sum::<f64>() > PRUNE * total).collect();
        let omega = omega.iter().zip(&keep).filter(|p| *p.1).map(|p| *p.0).collect();
        let weight = weight
            .chunks(k)
            .zip(&keep)
            .filter(|p| *p.1)
            .flat_map(|p| p.0.iter().copied())
            .collect();
        Self {
            omega,
            theta: nodes.iter().map(|n| n.0).collect(),
            weight,
        }
    }

    /// ln R at separations n·x1 for n in `orders`; the phases n·aθ advance by rotation.
    fn log_reductions(&self, x1: f64, orders: Range<usize>) -> Vec<f64> {
        let k = self.theta.len();
        let (start, end) = (orders.start, orders.end);
        let inv_n: Vec<f64> = orders.clone().map(|n| 1.0 / n.max(1) as f64).collect();
        let mut out = vec![0.0; orders.len()];
        for (i, &w) in self.omega.iter().enumerate() {
            let a = w * x1 / C;
            for (j, &th) in self.theta.iter().enumerate() {
                let wt = self.weight[i * k + j];
                let phi = a * th;
                if wt == 0.0 || phi == 0.0 {
                    continue;
                }
                // below y = 0.5 the series; above it a rotated sine, which keeps its digits there
                let switch = ((0.5 / phi).ceil() as usize).clamp(start, end);
                for n in start..switch {
                    out[n - start] -= wt * one_minus_sinc_series(n as f64 * phi);
                }
                if switch == end {
                    continue;
                }
                let (ds, dc) = phi.sin_cos();
                let (mut s, mut c) = (switch as f64 * phi).sin_cos();
                let scale = wt / phi;
                for n in switch..end {
                    out[n - start] -= wt - scale * s * inv_n[n - start];
                    (s, c) = (s * dc + c * ds, c * dc - s * ds);
                }
            }
        }
        out
    }

    fn log_reduction(&self, x: f64) -> f64 {
        let k = self.theta.len();
        let mut s = 0.0;
        for (i, &w) in self.omega.iter().enumerate() {
            let a = w * x / C;
            for (j, &th) in self.theta.iter().enumerate() {
                let wt = self.weight[i * k + j];
                if wt != 0.0 {
                    s -= wt * one_minus_sinc(a * th);
                }
            }
        }
        s
    }
}

/// Per-order reduction factors for a fixed particle, environment and timeline.
pub struct DecoherenceModel {
    pub channels: ChannelSet,
    pub timeline: Timeline,
    pub collision_rate: f64,
    pub csl: CslParams,
    mass: f64,
    omega: Vec<f64>,
    abs_weight: Vec<f64>,
    sca_weight: Vec<f64>,
    emission: Option<EmissionTable>,
    /// Combined ln R_|n| filled on demand by `Reduction::factor`.
    memo: Mutex<Vec<f64>>,
}

impl std::fmt::Debug for DecoherenceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecoherenceModel")
            .field("channels", &self.channels)
            .field("timeline", &self.timeline)
            .field("collision_rate", &self.collision_rate)
            .field("csl", &self.csl)
            .finish_non_exhaustive()
    }
}

impl DecoherenceModel {
    /// `history` gives T_int(t) since release; `None` holds the particle's own temperature.
    pub fn new(
        particle: &Particle,
        env: &Environment,
        timeline: &Timeline,
        channels: ChannelSet,
        csl: CslParams,
        history: Option<TemperatureHistory>,
    ) -> Result<Self> {
        env.validate()?;
        let grid = SpectralGrid::new(&particle.material, SPECTRAL_POINTS)?;
        Self::with_grid(particle, env, timeline, channels, csl, history, &grid)
    }

    pub fn with_grid(
        particle: &Particle,
        env: &Environment,
        timeline: &Timeline,
        channels: ChannelSet,
        csl: CslParams,
        history: Option<TemperatureHistory>,
        grid: &SpectralGrid,
    ) -> Result<Self> {
        let r = particle.radius;
        let weights = |kind: RateKind| -> Vec<f64> {
            (0..grid.len())
                .map(|i| grid.weight[i] * grid.rate_at(kind, i, r, env.temperature))
                .collect()
        };
        let emission = channels.emission.then(|| {
            let t_int = particle.internal_temperature;
            match &history {
                Some(h) => EmissionTable::new(grid, r, timeline, h.as_ref()),
                None => EmissionTable::new(grid, r, timeline, &|_| t_int),
            }
        });
        Ok(Self {
            channels,
            timeline: *timeline,
            collision_rate: collision_rate(particle, env),
            csl,
            mass: particle.mass,
            omega: grid.omega.clone(),
            abs_weight: if channels.absorption { weights(RateKind::Absorption) } else { Vec::new() },
            sca_weight: if channels.scattering { weights(RateKind::Scattering) } else { Vec::new() },
            emission,
            memo: Mutex::new(Vec::new()),
        })
    }

    fn spectral(&self, weights: &[f64], x: f64, kernel: fn(f64) -> f64) -> f64 {
        -self.timeline.total()
            * weights
                .iter()
                .zip(&self.omega)
                .map(|(w, om)| w * kernel(om * x / C))
                .sum::<f64>()
    }

    /// ln R_n for every channel (zero for disabled ones).
    pub fn log_reduction(&self, n: i32) -> ChannelLogs {
        let mut logs = self.stationary_logs(n);
        if n != 0 {
            let x = self.timeline.separation(n).abs();
            logs.emission = self.emission.as_ref().map_or(0.0, |e| e.log_reduction(x));
        }
        logs
    }

    /// Every channel except emission.
    fn stationary_logs(&self, n: i32) -> ChannelLogs {
        if n == 0 {
            return ChannelLogs::default();
        }
        let x = self.timeline.separation(n).abs();
        let total = self.timeline.total();
        let ch = &self.channels;
        ChannelLogs {
            collision: if ch.collision { -self.collision_rate * total } else { 0.0 },
            absorption: if ch.absorption { self.spectral(&self.abs_weight, x, one_minus_si_over_x) } else { 0.0 },
            scattering: if ch.scattering { self.spectral(&self.sca_weight, x, one_minus_f_scattering) } else { 0.0 },
            emission: 0.0,
            csl: if ch.csl {
                -csl_rate(self.mass, self.csl.lambda) * csl_one_minus_f(x, self.csl.r_c) * total
            } else {
                0.0
            },
        }
    }

    /// Combined ln R_n for n in `orders`, emission evaluated for the whole block at once.
    fn log_totals(&self, orders: Range<usize>) -> Vec<f64> {
        let x1 = self.timeline.separation(1).abs();
        let emission = self.emission.as_ref().map(|e| e.log_reductions(x1, orders.clone()));
        orders
            .enumerate()
            .map(|(k, n)| {
                let base = self.stationary_logs(n as i32).total();
                match (&emission, n) {
                    (_, 0) | (None, _) => base,
                    (Some(e), _) => base + e[k],
                }
            })
            .collect()
    }

    pub fn reduction(&self, n: i32) -> f64 {
        self.log_reduction(n).total().exp()
    }

    pub fn reduction_set(&self, max_order: usize) -> ReductionSet {
        let orders: Vec<i32> = (-(max_order as i32)..=max_order as i32).collect();
        let logs = orders.iter().map(|&n| self.log_reduction(n)).collect();
        ReductionSet { orders, logs }
    }
}

impl Reduction for DecoherenceModel {
    /// Memoised on |n|; a miss fills the table through |n| + 1.
    fn factor(&self, n: i32) -> Result<f64> {
        let k = n.unsigned_abs() as usize;
        let mut memo = self.memo.lock().expect("reduction memo");
        if k >= memo.len() {
            let end = k + 2;
            let more = self.log_totals(memo.len()..end);
            memo.extend(more);
        }
        Ok(memo[k].exp())
    }
}

/// Per-channel log-reductions for a range of orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionSet {
    pub orders: Vec<i32>,
    pub logs: Vec<ChannelLogs>,
}

impl ReductionSet {
    pub fn combined(&self, n: i32) -> Option<f64> {
        self.orders.iter().position(|&k| k == n).map(|i| self.logs[i].total().exp())
    }
}

/// R_n for one channel with a time-independent rate.
pub fn reduction_static(
    channel: Channel,
    particle: &Particle,
    env: &Environment,
    timeline: &Timeline,
    csl: CslParams,
    n: i32,
) -> Result<f64> {
    if channel == Channel::Emission {
        return Err(Error::domain("emission is time dependent; use reduction_emission"));
    }
    let model = DecoherenceModel::new(particle, env, timeline, ChannelSet::only(&[channel]), csl, None)?;
    Ok(model.log_reduction(n).get(channel).exp())
}

/// R_n of thermal emission for a temperature history (time since release).
pub fn reduction_emission(
    particle: &Particle,
    env: &Environment,
    timeline: &Timeline,
    history: TemperatureHistory,
    n: i32,
) -> Result<f64> {
    let model = DecoherenceModel::new(
        particle,
        env,
        timeline,
        ChannelSet::only(&[Channel::Emission]),
        CslParams::default(),
        Some(history),
    )?;
    Ok(model.log_reduction(n).emission.exp())
}

/// Per-channel ln R_n and the combined R_n.
pub fn total_reduction(
    particle: &Particle,
    env: &Environment,
    timeline: &Timeline,
    channels: ChannelSet,
    csl: CslParams,
    history: Option<TemperatureHistory>,
    n: i32,
) -> Result<(ChannelLogs, f64)> {
    let model = DecoherenceModel::new(particle, env, timeline, channels, csl, history)?;
    let logs = model.log_reduction(n);
    Ok((logs, logs.total().exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CslBound {
    /// Bisection solution of R₁(λ) = ρ_V [Hz].
    pub lambda: f64,
    /// −ln ρ_V / ((m/amu)² (1 − f) (t₁+t₂)).
    pub closed_form: f64,
}

/// Largest λ_CSL compatible with a measured visibility ratio ρ_V.
pub fn csl_bound(visibility_ratio: f64, mass: f64, timeline: &Timeline, r_c: f64) -> Result<CslBound> {
    if !(visibility_ratio > 0.0 && visibility_ratio < 1.0) {
        return Err(Error::domain("visibility ratio must lie in (0, 1)"));
    }
    let x = timeline.separation(1);
    let per_lambda = csl_rate(mass, 1.0) * csl_one_minus_f(x, r_c) * timeline.total();
    let r1 = |lambda: f64| (-per_lambda * lambda).exp();
    let mut hi = 1e-20;
    while r1(hi) > visibility_ratio {
        hi *= 10.0;
        if hi > 1e10 {
            return Err(Error::numeric("decoherence::csl_bound", "no bracketing rate"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if r1(mid) > visibility_ratio {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(CslBound {
        lambda: 0.5 * (lo + hi),
        closed_form: -visibility_ratio.ln() / per_lambda,
    })
}
