//! Experiment configuration: JSON in SI units, defaults at the proposed-experiment values.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constants::{AMU, MBAR};
use crate::decoherence::{Channel, ChannelSet, CslParams};
use crate::dynamics::StateMode;
use crate::error::{Error, Result};
use crate::thermal::MW_PER_UM2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub particle: ParticleConfig,
    pub trap: TrapConfig,
    pub grating: GratingConfig,
    pub timeline: TimelineConfig,
    pub environment: EnvironmentConfig,
    pub decoherence: DecoherenceConfig,
    pub csl: CslParams,
    /// Piecewise-constant (duration [s], acceleration [m/s²]) segments from release.
    pub acceleration: Vec<(f64, f64)>,
    pub scan: Vec<ScanConfig>,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            particle: ParticleConfig::default(),
            trap: TrapConfig::default(),
            grating: GratingConfig::default(),
            timeline: TimelineConfig::default(),
            environment: EnvironmentConfig::default(),
            decoherence: DecoherenceConfig::default(),
            csl: CslParams::default(),
            acceleration: Vec::new(),
            scan: Vec::new(),
            output: OutputConfig::default(),
        }
    }
}

/// Give `mass` or `radius`, not both; neither means 10⁶ amu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleConfig {
    /// `silicon`, `silica`, or a label for `spectrum`.
    pub material: String,
    /// CSV spectrum replacing the bundled one.
    pub spectrum: Option<PathBuf>,
    /// kg/m³, overrides the material default.
    pub density: Option<f64>,
    /// kg
    pub mass: Option<f64>,
    /// m
    pub radius: Option<f64>,
    /// T_int at release [K]; unset means the trap heating result.
    pub internal_temperature: Option<f64>,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self {
            material: "silicon".into(),
            spectrum: None,
            density: None,
            mass: None,
            radius: None,
            internal_temperature: None,
        }
    }
}

pub const DEFAULT_MASS: f64 = 1e6 * AMU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapConfig {
    /// ν_M [Hz]
    pub frequency: f64,
    /// Centre-of-mass temperature after feedback cooling [K].
    pub temperature: f64,
    pub state: StateMode,
    /// I_T [W/m²]; alternative to power + waist.
    pub intensity: Option<f64>,
    /// W
    pub power: Option<f64>,
    /// m
    pub waist: Option<f64>,
    /// λ_T [m]
    pub wavelength: f64,
    /// Time spent in the trap before release [s].
    pub duration: f64,
    /// T_int when trapping starts [K].
    pub initial_internal_temperature: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self {
            frequency: 200e3,
            temperature: 20e-3,
            state: StateMode::Exact,
            intensity: None,
            power: None,
            waist: None,
            wavelength: 1550e-9,
            duration: 1.0,
            initial_internal_temperature: 300.0,
        }
    }
}

pub const DEFAULT_TRAP_INTENSITY: f64 = 90.0 * MW_PER_UM2;

impl TrapConfig {
    /// Peak intensity 2P/(πw²) when power and waist are given.
    pub fn resolved_intensity(&self) -> Result<f64> {
        match (self.intensity, self.power, self.waist) {
            (Some(i), None, None) => Ok(i),
            (None, None, None) => Ok(DEFAULT_TRAP_INTENSITY),
            (None, Some(p), Some(w)) => Ok(2.0 * p / (PI * w * w)),
            (None, Some(_), None) | (None, None, Some(_)) => {
                Err(Error::config("trap", "power and waist must be given together"))
            }
            _ => Err(Error::config("trap.intensity", "give either intensity or power + waist")),
        }
    }
}

/// Give `phi0` or `pulse_energy`, and `spot_area` or `waist`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GratingConfig {
    /// λ_G [m]; the period is λ_G/2.
    pub wavelength: f64,
    /// rad
    pub phi0: Option<f64>,
    /// E_G [J]
    pub pulse_energy: Option<f64>,
    /// a_G [m²]
    pub spot_area: Option<f64>,
    /// m, converted with a_G = πw².
    pub waist: Option<f64>,
    pub absorption: bool,
    pub scattering: bool,
    /// J
    pub max_energy: f64,
    /// rad
    pub max_phi0: f64,
}

impl Default for GratingConfig {
    fn default() -> Self {
        Self {
            wavelength: 355e-9,
            phi0: None,
            pulse_energy: None,
            spot_area: None,
            waist: None,
            absorption: true,
            scattering: true,
            max_energy: 500e-6,
            max_phi0: 4.0 * PI,
        }
    }
}

pub const DEFAULT_PHI0: f64 = PI;
pub const DEFAULT_GRATING_WAIST: f64 = 30e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimelineConfig {
    /// s
    pub t1: f64,
    /// s
    pub t2: f64,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        Self { t1: 0.160, t2: 0.126 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// K
    pub temperature: f64,
    /// Pa
    pub pressure: f64,
    /// Only `nitrogen` is tabulated.
    pub gas: String,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            temperature: 300.0,
            pressure: 1e-10 * MBAR,
            gas: "nitrogen".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoherenceConfig {
    pub collision: bool,
    pub absorption: bool,
    pub scattering: bool,
    pub emission: bool,
    pub csl: bool,
    /// Emission follows the in-flight cooling curve instead of a fixed T_int.
    pub cooling: bool,
}

impl Default for DecoherenceConfig {
    fn default() -> Self {
        let c = ChannelSet::default();
        Self {
            collision: c.collision,
            absorption: c.absorption,
            scattering: c.scattering,
            emission: c.emission,
            csl: c.csl,
            cooling: true,
        }
    }
}

impl DecoherenceConfig {
    pub fn channels(&self) -> ChannelSet {
        let mut s = ChannelSet::none();
        s.set(Channel::Collision, self.collision);
        s.set(Channel::Absorption, self.absorption);
        s.set(Channel::Scattering, self.scattering);
        s.set(Channel::Emission, self.emission);
        s.set(Channel::Csl, self.csl);
        s
    }

    pub fn set_channels(&mut self, set: ChannelSet) {
        self.collision = set.collision;
        self.absorption = set.absorption;
        self.scattering = set.scattering;
        self.emission = set.emission;
        self.csl = set.csl;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Dotted config path, e.g. `grating.phi0`.
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ScanConfig {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// Parses `var=start:stop:steps`; numbers may carry a unit suffix.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |m: &str| Error::config("--scan", format!("`{spec}`: {m}"));
        let (var, range) = spec.split_once('=').ok_or_else(|| bad("expected var=start:stop:steps"))?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:steps"));
        }
        let steps = parts[2].trim().parse::<usize>().map_err(|_| bad("steps must be a positive integer"))?;
        if steps == 0 {
            return Err(bad("steps must be a positive integer"));
        }
        Ok(Self {
            variable: var.trim().to_string(),
            start: parse_quantity(parts[0]).map_err(|e| bad(&e))?,
            stop: parse_quantity(parts[1]).map_err(|e| bad(&e))?,
            steps,
        })
    }
}

/// Number with an optional unit suffix: `ms`, `nm`, `mbar`, `amu` or `pi`.
pub fn parse_quantity(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    const UNITS: [(&str, f64); 5] = [("mbar", MBAR), ("amu", AMU), ("ms", 1e-3), ("nm", 1e-9), ("pi", PI)];
    for (suffix, factor) in UNITS {
        if let Some(num) = s.strip_suffix(suffix) {
            let num = num.trim();
            let v = if num.is_empty() { 1.0 } else { num.parse::<f64>().map_err(|e| format!("{s}: {e}"))? };
            return Ok(v * factor);
        }
    }
    s.parse::<f64>().map_err(|e| format!("{s}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem; defaults to the subcommand name.
    pub stem: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("."), stem: None }
    }
}

/// Scan pseudo-variable that sets t₁ + t₂ at a fixed t₁/t₂ ratio.
pub const TOTAL_TIME: &str = "timeline.total";

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.particle;
        if p.mass.is_some() && p.radius.is_some() {
            return Err(Error::config("particle", "give either mass or radius, not both"));
        }
        if let Some(m) = p.mass {
            positive("particle.mass", m)?;
        }
        if let Some(r) = p.radius {
            positive("particle.radius", r)?;
        }
        if let Some(rho) = p.density {
            positive("particle.density", rho)?;
        }
        if let Some(t) = p.internal_temperature {
            positive("particle.internal_temperature", t)?;
        }
        let g = &self.grating;
        if g.phi0.is_some() && g.pulse_energy.is_some() {
            return Err(Error::config("grating", "give either phi0 or pulse_energy, not both"));
        }
        if g.spot_area.is_some() && g.waist.is_some() {
            return Err(Error::config("grating", "give either spot_area or waist, not both"));
        }
        positive("grating.wavelength", g.wavelength)?;
        if let Some(v) = g.phi0 {
            non_negative("grating.phi0", v)?;
        }
        if let Some(v) = g.pulse_energy {
            non_negative("grating.pulse_energy", v)?;
        }
        let t = &self.trap;
        positive("trap.frequency", t.frequency)?;
        non_negative("trap.temperature", t.temperature)?;
        positive("trap.wavelength", t.wavelength)?;
        non_negative("trap.duration", t.duration)?;
        positive("trap.initial_internal_temperature", t.initial_internal_temperature)?;
        t.resolved_intensity()?;
        positive("timeline.t1", self.timeline.t1)?;
        positive("timeline.t2", self.timeline.t2)?;
        let e = &self.environment;
        positive("environment.temperature", e.temperature)?;
        positive("environment.pressure", e.pressure)?;
        if e.gas != "nitrogen" {
            return Err(Error::config("environment.gas", format!("unknown gas `{}`", e.gas)));
        }
        positive("csl.r_c", self.csl.r_c)?;
        non_negative("csl.lambda", self.csl.lambda)?;
        for (i, s) in self.acceleration.iter().enumerate() {
            non_negative(&format!("acceleration[{i}]"), s.0)?;
        }
        for (i, s) in self.scan.iter().enumerate() {
            if s.steps == 0 {
                return Err(Error::config(format!("scan[{i}].steps"), "must be positive"));
            }
            self.with_value(&s.variable, s.start).map_err(|e| match e {
                Error::Config { message, .. } => Error::config(format!("scan[{i}].variable"), message),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Copy with the dotted path set to `value`; the path must name a numeric field.
    pub fn with_value(&self, path: &str, value: f64) -> Result<Self> {
        if path == TOTAL_TIME {
            let TimelineConfig { t1, t2 } = self.timeline;
            let mut out = self.clone();
            out.timeline.t1 = value * t1 / (t1 + t2);
            out.timeline.t2 = value * t2 / (t1 + t2);
            return Ok(out);
        }
        let mut doc = serde_json::to_value(self)?;
        let mut node = &mut doc;
        let keys: Vec<&str> = path.split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::config(path, "not a config path"))?;
            let child = obj
                .get_mut(*key)
                .ok_or_else(|| Error::config(path, format!("no field `{key}`")))?;
            if i + 1 == keys.len() {
                if !(child.is_number() || child.is_null()) {
                    return Err(Error::config(path, "not a numeric field"));
                }
                *child = serde_json::json!(value);
            }
            node = child;
        }
        clear_alternative(&mut doc, path);
        let de = serde_json::from_value::<Self>(doc).map_err(|e| Error::config(path, e.to_string()))?;
        Ok(de)
    }
}

/// Setting one member of an either/or pair unsets the other.
fn clear_alternative(doc: &mut Value, path: &str) {
    let other = match path {
        "particle.mass" => "particle.radius",
        "particle.radius" => "particle.mass",
        "grating.phi0" => "grating.pulse_energy",
        "grating.pulse_energy" => "grating.phi0",
        "grating.spot_area" => "grating.waist",
        "grating.waist" => "grating.spot_area",
        "trap.intensity" => "trap.power",
        _ => return,
    };
    if let Some((section, key)) = other.split_once('.') {
        if let Some(obj) = doc.get_mut(section).and_then(Value::as_object_mut) {
            obj.insert(key.to_string(), Value::Null);
            if path == "trap.intensity" {
                obj.insert("waist".to_string(), Value::Null);
            }
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be non-negative, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn unknown_field_reports_path() {
        let e = ExperimentConfig::from_json(r#"{"grating": {"phi": 1.0}}"#).unwrap_err();
        match e {
            Error::Config { path, .. } => assert!(path.starts_with("grating"), "{path}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn either_or_fields() {
        assert!(ExperimentConfig::from_json(r#"{"particle": {"mass": 1e-21, "radius": 5e-8}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"grating": {"phi0": 1.0, "pulse_energy": 1e-4}}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"grating": {"pulse_energy": 1e-4}}"#).unwrap();
        let c = c.with_value("grating.phi0", 2.0).unwrap();
        assert_eq!(c.grating.phi0, Some(2.0));
        assert_eq!(c.grating.pulse_energy, None);
    }

    #[test]
    fn scan_paths() {
        let c = ExperimentConfig::default();
        assert_eq!(c.with_value("timeline.t2", 0.1).unwrap().timeline.t2, 0.1);
        assert!(c.with_value("timeline.t3", 0.1).is_err());
        assert!(c.with_value("environment.gas", 0.1).is_err());
        let t = c.with_value(TOTAL_TIME, 0.572).unwrap().timeline;
        assert!((t.t1 - 0.32).abs() < 1e-12 && (t.t2 - 0.252).abs() < 1e-12);
    }

    #[test]
    fn scan_flag_units() {
        let s = ScanConfig::parse("grating.phi0=0:4pi:200").unwrap();
        assert_eq!(s.steps, 200);
        assert!((s.stop - 4.0 * PI).abs() < 1e-15);
        let s = ScanConfig::parse("timeline.t2=10ms:160ms:16").unwrap();
        assert!((s.start - 0.01).abs() < 1e-15);
        assert_eq!(parse_quantity("1e-10mbar").unwrap(), 1e-8);
        assert!((parse_quantity("1e6amu").unwrap() - DEFAULT_MASS).abs() < 1e-30);
        assert!(ScanConfig::parse("x=1:2").is_err());
        assert!(ScanConfig::parse("x=1:2:0").is_err());
    }

    #[test]
    fn values_are_inclusive() {
        let s = ScanConfig { variable: "grating.phi0".into(), start: 0.0, stop: 1.0, steps: 5 };
        assert_eq!(s.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
