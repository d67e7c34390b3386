//! Dielectric materials, nanosphere optical response and thermal-radiation rates.

use std::f64::consts::PI;
use std::io::Read;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{AMU, C, EPS0, EV, HBAR, KB};
use crate::error::{Error, Result};

const SILICON_CSV: &str = include_str!("../data/silicon.csv");
const SILICA_CSV: &str = include_str!("../data/silica.csv");

/// Default number of nodes of the spectral quadrature grid.
pub const SPECTRAL_POINTS: usize = 4000;

/// Relative change under grid doubling above which an integral is flagged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub wavelength: f64,
    pub n_real: f64,
    pub n_imag: f64,
}

/// Scalar bulk properties that accompany a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkProperties {
    pub name: String,
    /// kg/m³
    pub density: f64,
    /// J/(kg K)
    pub specific_heat: f64,
    /// J
    pub ionization_energy: f64,
    pub static_permittivity: f64,
}

impl BulkProperties {
    pub fn silicon() -> Self {
        Self {
            name: "silicon".into(),
            density: 2329.0,
            specific_heat: 700.0,
            ionization_energy: 5.0 * EV,
            static_permittivity: 11.9,
        }
    }

    pub fn silica() -> Self {
        Self {
            name: "silica".into(),
            density: 2200.0,
            specific_heat: 700.0,
            ionization_energy: 5.0 * EV,
            static_permittivity: 3.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub spectrum: Vec<SpectrumPoint>,
    pub density: f64,
    pub specific_heat: f64,
    pub ionization_energy: f64,
    pub static_permittivity: f64,
}

/// Interpolated refractive index; `clamped` is set when the query left the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexValue {
    pub n: Complex64,
    pub clamped: bool,
}

#[derive(Debug, Deserialize)]
struct Row {
    wavelength_m: f64,
    n_real: f64,
    n_imag: f64,
}

/// Reads a `wavelength_m,n_real,n_imag` CSV with optional `#` comment lines.
pub fn load_spectrum(source: impl Read, props: BulkProperties) -> Result<Material> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers().map_err(|e| csv_error(&e))?.clone();
    let expected = ["wavelength_m", "n_real", "n_imag"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: reader.position().line().max(1) as usize,
            message: format!("expected header {}, found {:?}", expected.join(","), headers),
        });
    }

    let mut spectrum = Vec::new();
    for record in reader.deserialize::<Row>() {
        let row = record.map_err(|e| csv_error(&e))?;
        spectrum.push(SpectrumPoint {
            wavelength: row.wavelength_m,
            n_real: row.n_real,
            n_imag: row.n_imag,
        });
    }
    Material::new(props, spectrum)
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

impl Material {
    pub fn new(props: BulkProperties, mut spectrum: Vec<SpectrumPoint>) -> Result<Self> {
        if spectrum.len() < 2 {
            return Err(Error::Data(format!(
                "spectrum needs at least 2 rows, got {}",
                spectrum.len()
            )));
        }
        for p in &spectrum {
            if !(p.wavelength > 0.0 && p.wavelength.is_finite()) {
                return Err(Error::Data(format!("non-positive wavelength {}", p.wavelength)));
            }
            if !(p.n_imag >= 0.0) || !p.n_real.is_finite() {
                return Err(Error::Data(format!(
                    "invalid index {} + {}i at {} m",
                    p.n_real, p.n_imag, p.wavelength
                )));
            }
        }
        spectrum.sort_by(|a, b| a.wavelength.total_cmp(&b.wavelength));
        if let Some(w) = spectrum.windows(2).find(|w| w[0].wavelength >= w[1].wavelength) {
            return Err(Error::Data(format!("duplicate wavelength {}", w[0].wavelength)));
        }
        if !(props.static_permittivity >= 1.0) {
            return Err(Error::Data("static permittivity must be >= 1".into()));
        }
        if !(props.density > 0.0 && props.specific_heat > 0.0 && props.ionization_energy > 0.0) {
            return Err(Error::Data("density, specific heat and ionization energy must be positive".into()));
        }
        Ok(Self {
            name: props.name,
            spectrum,
            density: props.density,
            specific_heat: props.specific_heat,
            ionization_energy: props.ionization_energy,
            static_permittivity: props.static_permittivity,
        })
    }

    /// Bundled crystalline silicon.
    pub fn silicon() -> Self {
        load_spectrum(SILICON_CSV.as_bytes(), BulkProperties::silicon()).expect("bundled silicon data")
    }

    /// Bundled fused silica.
    pub fn silica() -> Self {
        load_spectrum(SILICA_CSV.as_bytes(), BulkProperties::silica()).expect("bundled silica data")
    }

    /// Looks up a bundled material by name.
    pub fn bundled(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "si" | "silicon" => Ok(Self::silicon()),
            "sio2" | "silica" => Ok(Self::silica()),
            other => Err(Error::UnsupportedMaterial(other.to_string())),
        }
    }

    pub fn wavelength_range(&self) -> (f64, f64) {
        (self.spectrum[0].wavelength, self.spectrum[self.spectrum.len() - 1].wavelength)
    }

    /// Linear interpolation of real and imaginary parts, clamped at the table ends.
    pub fn refractive_index(&self, wavelength: f64) -> IndexValue {
        let s = &self.spectrum;
        let first = s[0];
        let last = s[s.len() - 1];
        if wavelength <= first.wavelength {
            return IndexValue {
                n: Complex64::new(first.n_real, first.n_imag),
                clamped: wavelength < first.wavelength,
            };
        }
        if wavelength >= last.wavelength {
            return IndexValue {
                n: Complex64::new(last.n_real, last.n_imag),
                clamped: wavelength > last.wavelength,
            };
        }
        let i = s.partition_point(|p| p.wavelength <= wavelength);
        let (a, b) = (s[i - 1], s[i]);
        if a.wavelength == wavelength {
            return IndexValue {
                n: Complex64::new(a.n_real, a.n_imag),
                clamped: false,
            };
        }
        let t = (wavelength - a.wavelength) / (b.wavelength - a.wavelength);
        IndexValue {
            n: Complex64::new(
                a.n_real + t * (b.n_real - a.n_real),
                a.n_imag + t * (b.n_imag - a.n_imag),
            ),
            clamped: false,
        }
    }

    pub fn permittivity(&self, wavelength: f64) -> Complex64 {
        let n = self.refractive_index(wavelength).n;
        n * n
    }

    /// Scales the imaginary part of the whole spectrum.
    pub fn with_scaled_losses(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for p in &mut m.spectrum {
            p.n_imag *= factor;
        }
        m
    }
}

/// Clausius–Mossotti factor (ε−1)/(ε+2).
pub fn clausius_mossotti(eps: Complex64) -> Result<Complex64> {
    let denom = eps + 2.0;
    if denom.norm() < 1e-12 {
        return Err(Error::Singular(denom.norm()));
    }
    Ok((eps - 1.0) / denom)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Particle {
    pub mass: f64,
    pub radius: f64,
    pub material: Arc<Material>,
    pub internal_temperature: f64,
}

impl Particle {
    pub fn from_mass(material: Arc<Material>, mass: f64, internal_temperature: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::domain("particle mass must be positive"));
        }
        if !(internal_temperature >= 0.0) {
            return Err(Error::domain("internal temperature must be non-negative"));
        }
        let radius = (3.0 * mass / (4.0 * PI * material.density)).cbrt();
        Ok(Self {
            mass,
            radius,
            material,
            internal_temperature,
        })
    }

    pub fn from_radius(material: Arc<Material>, radius: f64, internal_temperature: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::domain("particle radius must be positive"));
        }
        let mass = 4.0 / 3.0 * PI * radius.powi(3) * material.density;
        Self::from_mass(material, mass, internal_temperature)
    }

    pub fn mass_amu(&self) -> f64 {
        self.mass / AMU
    }

    pub fn with_internal_temperature(&self, t: f64) -> Self {
        Self {
            internal_temperature: t,
            ..self.clone()
        }
    }

    /// Complex polarizability 4πε₀R³(ε−1)/(ε+2) at a wavelength.
    pub fn polarizability(&self, wavelength: f64) -> Result<Complex64> {
        let cm = clausius_mossotti(self.material.permittivity(wavelength))?;
        Ok(4.0 * PI * EPS0 * self.radius.powi(3) * cm)
    }

    /// Static polarizability from ε(0).
    pub fn static_polarizability(&self) -> f64 {
        let e = self.material.static_permittivity;
        4.0 * PI * EPS0 * self.radius.powi(3) * (e - 1.0) / (e + 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticalResponse {
    pub wavelength: f64,
    pub alpha: Complex64,
    pub beta: f64,
    pub eta: f64,
    pub sigma_abs: f64,
    pub sigma_sca: f64,
    /// The wavelength was outside the tabulated range.
    pub clamped: bool,
}

pub fn optical_response(particle: &Particle, wavelength: f64) -> Result<OpticalResponse> {
    if !(wavelength > 0.0) {
        return Err(Error::domain("wavelength must be positive"));
    }
    let idx = particle.material.refractive_index(wavelength);
    let eps = idx.n * idx.n;
    let cm = clausius_mossotti(eps)?;
    let r3 = particle.radius.powi(3);
    let alpha = 4.0 * PI * EPS0 * r3 * cm;
    let k = 2.0 * PI / wavelength;
    let omega = C * k;

    // |ε|² + Re ε − 2 equals |ε+2|² Re(cm); keep the form that stays finite at Re(cm) = 0.
    let denom = eps.norm_sqr() + eps.re - 2.0;
    let beta = 3.0 * eps.im / denom;
    let eta = 2.0 / 3.0 * (k * particle.radius).powi(3) * (eps - 1.0).norm_sqr() / denom;

    Ok(OpticalResponse {
        wavelength,
        alpha,
        beta,
        eta,
        sigma_abs: omega * alpha.im / (C * EPS0),
        sigma_sca: k.powi(4) * alpha.norm_sqr() / (6.0 * PI * EPS0 * EPS0),
        clamped: idx.clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateKind {
    Absorption,
    Scattering,
    Emission,
}

/// Planck occupation 1/(e^x − 1), zero on underflow.
pub fn planck(x: f64) -> f64 {
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}

/// Boltzmann factor e^{−x}.
pub fn boltzmann(x: f64) -> f64 {
    if x > 745.0 {
        0.0
    } else {
        (-x).exp()
    }
}

fn occupation(kind: RateKind, omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (KB * temperature);
    match kind {
        RateKind::Absorption | RateKind::Scattering => planck(x),
        RateKind::Emission => boltzmann(x),
    }
}

fn rate_prefactor(kind: RateKind, omega_r_over_c: f64, cm: Complex64) -> f64 {
    match kind {
        RateKind::Absorption | RateKind::Emission => 4.0 / PI * omega_r_over_c.powi(3) * cm.im,
        RateKind::Scattering => 8.0 / (3.0 * PI) * omega_r_over_c.powi(6) * cm.norm_sqr(),
    }
}

/// Dimensionless spectral rate γ(ω). `temperature` is T_env for absorption
/// and scattering and T_int for emission.
pub fn spectral_rate(kind: RateKind, particle: &Particle, omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain("angular frequency must be positive"));
    }
    let eps = particle.material.permittivity(2.0 * PI * C / omega);
    let cm = clausius_mossotti(eps)?;
    Ok(rate_prefactor(kind, omega * particle.radius / C, cm) * occupation(kind, omega, temperature))
}

/// Log-spaced frequency grid over a material's tabulated range with trapezoid
/// weights and cached Clausius–Mossotti factors.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    pub omega: Vec<f64>,
    pub weight: Vec<f64>,
    cm_im: Vec<f64>,
    cm_abs2: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(material: &Material, points: usize) -> Result<Self> {
        let (omega, weight) = log_simpson_grid(
            material.spectrum.iter().rev().map(|p| 2.0 * PI * C / p.wavelength),
            points,
        );
        let mut cm_im = Vec::with_capacity(omega.len());
        let mut cm_abs2 = Vec::with_capacity(omega.len());
        for &w in &omega {
            let cm = clausius_mossotti(material.permittivity(2.0 * PI * C / w))?;
            cm_im.push(cm.im);
            cm_abs2.push(cm.norm_sqr());
        }
        Ok(Self {
            omega,
            weight,
            cm_im,
            cm_abs2,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// γ at node `i` for a sphere of radius `radius`.
    pub fn rate_at(&self, kind: RateKind, i: usize, radius: f64, temperature: f64) -> f64 {
        let w = self.omega[i];
        let x = w * radius / C;
        let geometry = match kind {
            RateKind::Absorption | RateKind::Emission => 4.0 / PI * x.powi(3) * self.cm_im[i],
            RateKind::Scattering => 8.0 / (3.0 * PI) * x.powi(6) * self.cm_abs2[i],
        };
        geometry * occupation(kind, w, temperature)
    }

    /// (Γ, P) = (∫γ dω, ∫ħωγ dω).
    pub fn rate_and_power(&self, kind: RateKind, radius: f64, temperature: f64) -> (f64, f64) {
        let mut rate = 0.0;
        let mut power = 0.0;
        for i in 0..self.len() {
            let g = self.weight[i] * self.rate_at(kind, i, radius, temperature);
            rate += g;
            power += g * HBAR * self.omega[i];
        }
        (rate, power)
    }

    /// ∫ w(ω) γ(ω) dω for an arbitrary frequency weight.
    pub fn integrate_weighted(
        &self,
        kind: RateKind,
        radius: f64,
        temperature: f64,
        f: impl Fn(f64) -> f64,
    ) -> f64 {
        (0..self.len())
            .map(|i| self.weight[i] * self.rate_at(kind, i, radius, temperature) * f(self.omega[i]))
            .sum()
    }
}

/// Composite Simpson rule in ln ω with panel boundaries at every breakpoint
/// (the kinks of the interpolated spectrum); about `points` nodes in total.
fn log_simpson_grid(breaks: impl Iterator<Item = f64>, points: usize) -> (Vec<f64>, Vec<f64>) {
    let b: Vec<f64> = breaks.map(f64::ln).collect();
    let span = b[b.len() - 1] - b[0];
    let mut omega = vec![b[0].exp()];
    let mut weight = vec![0.0];
    for w in b.windows(2) {
        let width = w[1] - w[0];
        let mut k = ((points as f64 * width / span).round() as usize).max(2);
        k += k % 2;
        let h = width / k as f64;
        for j in 1..=k {
            let x = if j == k { w[1] } else { w[0] + j as f64 * h };
            omega.push(x.exp());
            weight.push(0.0);
        }
        let base = omega.len() - 1 - k;
        for j in 0..=k {
            let c = if j == 0 || j == k { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            weight[base + j] += c * h / 3.0 * omega[base + j];
        }
    }
    (omega, weight)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratedRate {
    /// 1/s
    pub rate: f64,
    /// W
    pub power: f64,
    /// Grid doubling changed neither value by more than [`CONVERGENCE_TOL`].
    pub converged: bool,
}

pub fn integrated_rate_and_power(kind: RateKind, particle: &Particle, temperature: f64) -> Result<IntegratedRate> {
    let coarse = SpectralGrid::new(&particle.material, SPECTRAL_POINTS)?;
    let fine = SpectralGrid::new(&particle.material, 2 * SPECTRAL_POINTS)?;
    let (r1, p1) = coarse.rate_and_power(kind, particle.radius, temperature);
    let (r2, p2) = fine.rate_and_power(kind, particle.radius, temperature);
    let close = |a: f64, b: f64| (a - b).abs() <= CONVERGENCE_TOL * b.abs().max(f64::MIN_POSITIVE);
    Ok(IntegratedRate {
        rate: r1,
        power: p1,
        converged: close(r1, r2) && close(p1, p2),
    })
}
