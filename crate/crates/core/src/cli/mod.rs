//! Command-line front end: config resolution, subcommands and CSV/JSON output.

pub mod config;
mod output;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::decoherence::{csl_bound, Channel, ChannelLogs, ChannelSet, DecoherenceModel, Environment, TemperatureHistory};
use crate::dynamics::{
    default_x_grid, fringe_pattern, fringe_shift, talbot_time, trap_state, visibility_sin, AccelerationProfile,
    FringePattern, Setup, SourceState, Timeline,
};
use crate::error::{Error, Result};
use crate::grating::{spot_area_from_waist, GratingLimits, GratingModel, GratingPulse, Mode};
use crate::materials::{load_spectrum, optical_response, BulkProperties, Material, Particle, SpectralGrid, SPECTRAL_POINTS};
use crate::thermal::{evolve_with, EvolveOptions, HeatingModel, Phase, ThermalTimeline};

pub use config::{ExperimentConfig, ScanConfig};
pub use output::{format_number, Table};

#[derive(Debug, Parser)]
#[command(name = "nanotalbot", version, about = "Near-field interference of free-falling nanospheres")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Experiment config (JSON, SI units)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// var=start:stop:steps; numbers accept ms, nm, mbar, amu and pi suffixes
    #[arg(long, global = true)]
    pub scan: Vec<String>,
    /// Classical grating coefficients for pattern and carpet
    #[arg(long, global = true)]
    pub classical: bool,
    #[arg(long, global = true)]
    pub no_decoherence: bool,
    /// Comma-separated subset of col,abs,sca,emi,csl
    #[arg(long, global = true, value_delimiter = ',')]
    pub channels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fringe pattern w(x) over four magnified periods
    Pattern,
    /// Patterns stacked over a t2 or phi0 scan
    Carpet,
    /// Sinusoidal visibility, quantum and classical, over a scan
    Visibility,
    /// Visibility over a (phi0, t2) grid
    Surface,
    /// Internal temperature through trapping and free flight
    Heating,
    /// R_1 over initial internal temperature and total time
    DecoherenceMap,
    /// CSL bound from a measured visibility ratio
    Csl {
        #[arg(long)]
        visibility_ratio: f64,
    },
    /// Optical response of the configured particle
    MaterialInfo {
        /// Wavelength, repeatable; accepts an nm suffix
        #[arg(long, value_parser = parse_length)]
        wavelength: Vec<f64>,
    },
    /// Oracle agreement checks
    Validate,
}

fn parse_length(s: &str) -> std::result::Result<f64, String> {
    config::parse_quantity(s)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pattern => "pattern",
            Command::Carpet => "carpet",
            Command::Visibility => "visibility",
            Command::Surface => "surface",
            Command::Heating => "heating",
            Command::DecoherenceMap => "decoherence-map",
            Command::Csl { .. } => "csl",
            Command::MaterialInfo { .. } => "material-info",
            Command::Validate => "validate",
        }
    }
}

/// 0 ok, 2 config error, 3 numeric error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric { .. } | Error::Singular(_) => 3,
        _ => 2,
    }
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(report) => {
            print_lines(&report.lines);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// A closed pipe downstream is not an error.
fn print_lines(lines: &[String]) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    for l in lines {
        if writeln!(out, "{l}").is_err() {
            return;
        }
    }
}

/// What a run printed and wrote.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<Report> {
    match cli.global.threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("--threads", e.to_string()))?;
            pool.install(|| dispatch(cli))
        }
        Some(_) => Err(Error::config("--threads", "must be positive")),
        None => dispatch(cli),
    }
}

/// Config file plus flag overrides.
pub fn effective_config(args: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if !args.scan.is_empty() {
        cfg.scan = args.scan.iter().map(|s| ScanConfig::parse(s)).collect::<Result<_>>()?;
    }
    if let Some(list) = &args.channels {
        let chosen = list
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| Channel::parse(s.trim()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::config("--channels", e.to_string()))?;
        cfg.decoherence.set_channels(ChannelSet::only(&chosen));
    }
    if args.no_decoherence {
        cfg.decoherence.set_channels(ChannelSet::none());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Report> {
    let cfg = effective_config(&cli.global)?;
    let mode = if cli.global.classical { Mode::Classical } else { Mode::Quantum };
    let name = cli.command.name();
    let (table, extra) = match &cli.command {
        Command::Pattern => pattern_table(&cfg, mode)?,
        Command::Carpet => carpet_table(&cfg, mode)?,
        Command::Visibility => visibility_table(&cfg)?,
        Command::Surface => surface_table(&cfg)?,
        Command::Heating => heating_table(&cfg)?,
        Command::DecoherenceMap => decoherence_map_table(&cfg)?,
        Command::Csl { visibility_ratio } => csl_table(&cfg, *visibility_ratio)?,
        Command::MaterialInfo { wavelength } => material_table(&cfg, wavelength)?,
        Command::Validate => validate_table(cli.global.seed)?,
    };
    let stem = cfg.output.stem.clone().unwrap_or_else(|| name.to_string());
    let meta = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.global.seed,
        "mode": mode,
        "columns": table.columns,
        "config": cfg,
        "derived": extra.derived,
    });
    let files = output::write(&cfg.output.dir, &stem, &table, &meta)?;
    let mut lines = extra.lines;
    lines.extend(files.iter().map(|f| format!("wrote {}", f.display())));
    if let Some(msg) = extra.failure {
        print_lines(&lines);
        return Err(Error::numeric("cli::validate", msg));
    }
    Ok(Report { lines, files })
}

#[derive(Debug, Default)]
struct Extra {
    derived: serde_json::Value,
    lines: Vec<String>,
    failure: Option<String>,
}

// ---------------------------------------------------------------------------
// Resolution of a config into physics objects

/// Everything a simulation needs, derived from one config.
#[derive(Clone)]
pub struct Resolved {
    pub particle: Particle,
    pub source: SourceState,
    pub timeline: Timeline,
    pub pulse: GratingPulse,
    pub environment: Environment,
    pub channels: ChannelSet,
    pub csl: crate::decoherence::CslParams,
    /// T_int at release [K].
    pub release_temperature: f64,
    /// T_int(t) since release, when emission follows the cooling curve.
    pub history: Option<TemperatureHistory>,
    pub shift: f64,
    pub absorption: bool,
    pub scattering: bool,
    grid: Arc<SpectralGrid>,
}

impl std::fmt::Debug for Resolved {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Resolved")
            .field("particle", &self.particle.mass)
            .field("source", &self.source)
            .field("timeline", &self.timeline)
            .field("pulse", &self.pulse)
            .field("release_temperature", &self.release_temperature)
            .finish_non_exhaustive()
    }
}

type Cache<T> = Mutex<HashMap<String, Arc<T>>>;

fn cached<T, F>(cache: &'static OnceLock<Cache<T>>, key: String, make: F) -> Result<Arc<T>>
where
    F: FnOnce() -> Result<T>,
{
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = map.lock().expect("cache lock").get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(make()?);
    map.lock().expect("cache lock").insert(key, v.clone());
    Ok(v)
}

pub fn load_material(cfg: &config::ParticleConfig) -> Result<Arc<Material>> {
    static MATERIALS: OnceLock<Cache<Material>> = OnceLock::new();
    let key = serde_json::to_string(&(&cfg.material, &cfg.spectrum, cfg.density))?;
    cached(&MATERIALS, key, || {
        let mut props = match cfg.material.as_str() {
            "silicon" => BulkProperties::silicon(),
            "silica" => BulkProperties::silica(),
            other => {
                return Err(Error::config(
                    "particle.material",
                    format!("unknown material `{other}`; use silicon or silica"),
                ))
            }
        };
        if let Some(rho) = cfg.density {
            props.density = rho;
        }
        match &cfg.spectrum {
            Some(path) => {
                let f = std::fs::File::open(path)
                    .map_err(|e| Error::config("particle.spectrum", format!("{}: {e}", path.display())))?;
                load_spectrum(f, props)
            }
            None => {
                let base = Material::bundled(&cfg.material)?;
                Material::new(props, base.spectrum)
            }
        }
    })
}

fn spectral_grid(material: &Arc<Material>, key: &str) -> Result<Arc<SpectralGrid>> {
    static GRIDS: OnceLock<Cache<SpectralGrid>> = OnceLock::new();
    cached(&GRIDS, key.to_string(), || SpectralGrid::new(material, SPECTRAL_POINTS))
}

/// Flight phase long enough for any scan up to ~2 s.
fn flight_duration(total: f64) -> f64 {
    (1.05 * total).max(2.0)
}

fn thermal_run(
    particle: &Particle,
    env_temperature: f64,
    phases: Vec<Phase>,
    initial: f64,
    key: String,
) -> Result<Arc<ThermalTimeline>> {
    static RUNS: OnceLock<Cache<ThermalTimeline>> = OnceLock::new();
    cached(&RUNS, key, || {
        let model = HeatingModel::new(particle, env_temperature)?;
        let opts = EvolveOptions {
            samples_per_phase: 2000,
            ..Default::default()
        };
        evolve_with(&model, &phases, initial, &opts)
    })
}

impl Resolved {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let material = load_material(&cfg.particle)?;
        let pc = &cfg.particle;
        let base = match (pc.mass, pc.radius) {
            (_, Some(r)) => Particle::from_radius(material.clone(), r, cfg.trap.initial_internal_temperature)?,
            (m, None) => Particle::from_mass(
                material.clone(),
                m.unwrap_or(config::DEFAULT_MASS),
                cfg.trap.initial_internal_temperature,
            )?,
        };
        let source = trap_state(base.mass, cfg.trap.frequency, cfg.trap.temperature, cfg.trap.state)?;
        let period = cfg.grating.wavelength / 2.0;
        let timeline = Timeline::new(cfg.timeline.t1, cfg.timeline.t2, base.mass, period)?;
        let g = &cfg.grating;
        let area = match (g.spot_area, g.waist) {
            (Some(a), _) => a,
            (None, w) => spot_area_from_waist(w.unwrap_or(config::DEFAULT_GRATING_WAIST)),
        };
        let pulse = match g.pulse_energy {
            Some(e) => GratingPulse::from_energy(&base, g.wavelength, e, area)?,
            None => GratingPulse::from_phi0(&base, g.wavelength, g.phi0.unwrap_or(config::DEFAULT_PHI0), area)?,
        };
        GratingLimits {
            max_energy: g.max_energy,
            max_phi0: g.max_phi0,
        }
        .check(&pulse)
        .map_err(|e| Error::config("grating", e.to_string()))?;
        let mut environment = Environment::nitrogen(cfg.environment.pressure);
        environment.temperature = cfg.environment.temperature;
        let channels = cfg.decoherence.channels();

        let grid_key = serde_json::to_string(&(&pc.material, &pc.spectrum))?;
        let grid = spectral_grid(&material, &grid_key)?;
        let particle_key = serde_json::to_string(&(&pc.material, &pc.spectrum, pc.density, base.mass))?;
        let flight = flight_duration(timeline.total());
        let t_env = environment.temperature;
        let (release_temperature, history) = if !channels.emission {
            (pc.internal_temperature.unwrap_or(cfg.trap.initial_internal_temperature), None)
        } else {
            match pc.internal_temperature {
                Some(t0) if !cfg.decoherence.cooling => (t0, None),
                Some(t0) => {
                    let phases = vec![Phase {
                        duration: flight,
                        intensity: 0.0,
                        wavelength: cfg.trap.wavelength,
                    }];
                    let key = format!("cool|{particle_key}|{t_env}|{t0}|{flight}");
                    let run = thermal_run(&base, t_env, phases, t0, key)?;
                    (t0, Some(run.history_from(0.0)))
                }
                None => {
                    let intensity = cfg.trap.resolved_intensity()?;
                    let mut phases = Vec::new();
                    if cfg.trap.duration > 0.0 {
                        phases.push(Phase {
                            duration: cfg.trap.duration,
                            intensity,
                            wavelength: cfg.trap.wavelength,
                        });
                    }
                    phases.push(Phase {
                        duration: flight,
                        intensity: 0.0,
                        wavelength: cfg.trap.wavelength,
                    });
                    let t0 = cfg.trap.initial_internal_temperature;
                    let key = format!(
                        "trap|{particle_key}|{t_env}|{t0}|{intensity}|{}|{}|{flight}|{}",
                        cfg.trap.duration, cfg.trap.wavelength, cfg.decoherence.cooling
                    );
                    let run = thermal_run(&base, t_env, phases, t0, key)?;
                    let release = cfg.trap.duration;
                    let t_release = run.temperature_at(release);
                    if cfg.decoherence.cooling {
                        (t_release, Some(run.history_from(release)))
                    } else {
                        (t_release, None)
                    }
                }
            }
        };
        let particle = base.with_internal_temperature(release_temperature);
        let shift = if cfg.acceleration.is_empty() {
            0.0
        } else {
            fringe_shift(
                &AccelerationProfile {
                    segments: cfg.acceleration.clone(),
                },
                &timeline,
            )
        };
        Ok(Self {
            particle,
            source,
            timeline,
            pulse,
            environment,
            channels,
            csl: cfg.csl,
            release_temperature,
            history,
            shift,
            absorption: g.absorption,
            scattering: g.scattering,
            grid,
        })
    }

    pub fn setup(&self, mode: Mode) -> Setup {
        Setup {
            source: self.source,
            timeline: self.timeline,
            grating: GratingModel::from_pulse(&self.pulse, mode, self.absorption, self.scattering),
            shift: self.shift,
        }
    }

    pub fn decoherence(&self) -> Result<DecoherenceModel> {
        DecoherenceModel::with_grid(
            &self.particle,
            &self.environment,
            &self.timeline,
            self.channels,
            self.csl,
            self.history.clone(),
            &self.grid,
        )
    }

    pub fn pattern(&self, mode: Mode) -> Result<FringePattern> {
        fringe_pattern(&self.setup(mode), &self.decoherence()?)
    }

    pub fn visibility(&self, mode: Mode) -> Result<f64> {
        visibility_sin(&self.setup(mode), &self.decoherence()?)
    }

    /// Quantum and classical visibility sharing one decoherence model.
    pub fn visibilities(&self) -> Result<(f64, f64)> {
        let r1 = self.decoherence()?.reduction(1);
        self.visibilities_with(r1)
    }

    fn visibilities_with(&self, r1: f64) -> Result<(f64, f64)> {
        let first = |n: i32| -> Result<f64> {
            match n.abs() {
                0 => Ok(1.0),
                1 => Ok(r1),
                _ => Err(Error::numeric("cli::visibility", "only R_0 and R_1 are cached")),
            }
        };
        Ok((
            visibility_sin(&self.setup(Mode::Quantum), &first)?,
            visibility_sin(&self.setup(Mode::Classical), &first)?,
        ))
    }
}

/// Visibilities of a config, reusing R_1 across configs that differ only in the grating.
fn visibilities_cached(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    static R1: OnceLock<Mutex<HashMap<String, f64>>> = OnceLock::new();
    let r = Resolved::new(cfg)?;
    let key = serde_json::to_string(&(
        &cfg.particle,
        &cfg.trap,
        &cfg.timeline,
        &cfg.environment,
        &cfg.decoherence,
        &cfg.csl,
        cfg.grating.wavelength,
    ))?;
    let map = R1.get_or_init(|| Mutex::new(HashMap::new()));
    let hit = map.lock().expect("cache lock").get(&key).copied();
    let r1 = match hit {
        Some(v) => v,
        None => {
            let v = r.decoherence()?.reduction(1);
            map.lock().expect("cache lock").insert(key, v);
            v
        }
    };
    r.visibilities_with(r1)
}

fn default_scan(variable: &str, start: f64, stop: f64, steps: usize) -> ScanConfig {
    ScanConfig {
        variable: variable.into(),
        start,
        stop,
        steps,
    }
}

fn scans_or(cfg: &ExperimentConfig, want: usize, defaults: Vec<ScanConfig>) -> Result<Vec<ScanConfig>> {
    let scans = if cfg.scan.is_empty() { defaults } else { cfg.scan.clone() };
    if scans.len() != want {
        return Err(Error::config("scan", format!("this command needs {want} scan axes, got {}", scans.len())));
    }
    Ok(scans)
}

fn base_talbot_time(cfg: &ExperimentConfig) -> Result<f64> {
    let r = Resolved::new(&ExperimentConfig {
        decoherence: config::DecoherenceConfig {
            emission: false,
            ..cfg.decoherence
        },
        ..cfg.clone()
    })?;
    Ok(talbot_time(r.particle.mass, r.timeline.period))
}

fn no_scan(cfg: &ExperimentConfig, command: &str) -> Result<()> {
    if cfg.scan.is_empty() {
        Ok(())
    } else {
        Err(Error::config("scan", format!("`{command}` takes no scan")))
    }
}

fn resolved_summary(r: &Resolved) -> serde_json::Value {
    json!({
        "mass_kg": r.particle.mass,
        "radius_m": r.particle.radius,
        "sigma_x_m": r.source.sigma_x,
        "sigma_p_kg_m_s": r.source.sigma_p,
        "talbot_time_s": r.timeline.talbot_time,
        "magnified_period_m": r.timeline.magnified_period,
        "phi0_rad": r.pulse.phi0,
        "pulse_energy_j": r.pulse.pulse_energy,
        "n0": r.pulse.n0,
        "n_r": r.pulse.n_r,
        "release_temperature_k": r.release_temperature,
        "shift_m": r.shift,
    })
}

// ---------------------------------------------------------------------------
// Subcommands

fn pattern_table(cfg: &ExperimentConfig, mode: Mode) -> Result<(Table, Extra)> {
    no_scan(cfg, "pattern")?;
    let r = Resolved::new(cfg)?;
    let p = r.pattern(mode)?;
    let xs = default_x_grid(512);
    let rows = xs
        .iter()
        .map(|&u| {
            let x = u * p.period;
            vec![x, u, p.evaluate(x)]
        })
        .collect();
    let v = p.visibility()?;
    let extra = Extra {
        derived: json!({"resolved": resolved_summary(&r), "visibility": v, "cutoff": p.cutoff}),
        lines: vec![format!("sinusoidal visibility {}", format_number(v))],
        failure: None,
    };
    Ok((Table::new(&["x_m", "x_over_D", "density_per_m"], rows), extra))
}

fn carpet_table(cfg: &ExperimentConfig, mode: Mode) -> Result<(Table, Extra)> {
    let scan = scans_or(cfg, 1, vec![default_scan("grating.phi0", 0.0, 4.0 * PI, 200)])?.remove(0);
    if scan.variable != "timeline.t2" && scan.variable != "grating.phi0" {
        return Err(Error::config("scan[0].variable", "carpet scans timeline.t2 or grating.phi0"));
    }
    let xs = default_x_grid(64);
    let values = scan.values();
    // a phi0 scan leaves the decoherence model untouched, so one model serves every row
    let shared = match (scan.variable.as_str(), values.first()) {
        ("grating.phi0", Some(&v)) => Some(Resolved::new(&cfg.with_value(&scan.variable, v)?)?.decoherence()?),
        _ => None,
    };
    let rows: Vec<Vec<f64>> = values
        .par_iter()
        .map(|&v| {
            let r = Resolved::new(&cfg.with_value(&scan.variable, v)?)?;
            let p = match &shared {
                Some(model) => fringe_pattern(&r.setup(mode), model)?,
                None => fringe_pattern(&r.setup(mode), &r.decoherence()?)?,
            };
            let mut row = vec![v, p.period];
            row.extend(xs.iter().map(|&u| p.evaluate(u * p.period)));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut columns = vec![scan.variable.clone(), "period_m".to_string()];
    columns.extend(xs.iter().map(|u| format!("x_over_D={}", format_number(*u))));
    let extra = Extra {
        derived: json!({"scan": scan, "x_over_D": xs}),
        lines: vec![format!("{} rows x {} columns", rows.len(), xs.len())],
        failure: None,
    };
    Ok((Table { columns, rows, labels: Vec::new() }, extra))
}

fn visibility_table(cfg: &ExperimentConfig) -> Result<(Table, Extra)> {
    let scan = scans_or(cfg, 1, vec![default_scan("grating.phi0", 0.0, 4.0 * PI, 200)])?.remove(0);
    let values = scan.values();
    let rows: Vec<Vec<f64>> = values
        .par_iter()
        .map(|&v| {
            let (q, c) = visibilities_cached(&cfg.with_value(&scan.variable, v)?)?;
            Ok(vec![v, q, c])
        })
        .collect::<Result<_>>()?;
    let best = rows
        .iter()
        .max_by(|a, b| a[1].total_cmp(&b[1]))
        .map(|r| (r[0], r[1]))
        .unwrap_or((f64::NAN, f64::NAN));
    let extra = Extra {
        derived: json!({"scan": scan, "max_quantum": {"at": best.0, "visibility": best.1}}),
        lines: vec![format!(
            "max quantum visibility {} at {} = {}",
            format_number(best.1),
            scan.variable,
            format_number(best.0)
        )],
        failure: None,
    };
    Ok((Table::new(&[&scan.variable, "quantum", "classical"], rows), extra))
}

fn surface_table(cfg: &ExperimentConfig) -> Result<(Table, Extra)> {
    let t_t = base_talbot_time(cfg)?;
    let scans = scans_or(
        cfg,
        2,
        vec![
            default_scan("grating.phi0", 0.0, 4.0 * PI, 100),
            default_scan("timeline.t2", 0.02 * t_t, 2.0 * t_t, 100),
        ],
    )?;
    let grid: Vec<(f64, f64)> = scans[0]
        .values()
        .into_iter()
        .flat_map(|a| scans[1].values().into_iter().map(move |b| (a, b)))
        .collect();
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&(a, b)| {
            let c = cfg.with_value(&scans[0].variable, a)?.with_value(&scans[1].variable, b)?;
            let (q, cl) = visibilities_cached(&c)?;
            Ok(vec![a, b, q, cl])
        })
        .collect::<Result<_>>()?;
    let extra = Extra {
        derived: json!({"scan": scans, "talbot_time_s": t_t}),
        lines: vec![format!("{} grid points", rows.len())],
        failure: None,
    };
    Ok((
        Table::new(&[&scans[0].variable, &scans[1].variable, "quantum", "classical"], rows),
        extra,
    ))
}

fn heating_table(cfg: &ExperimentConfig) -> Result<(Table, Extra)> {
    no_scan(cfg, "heating")?;
    let material = load_material(&cfg.particle)?;
    let t0 = cfg.trap.initial_internal_temperature;
    let particle = match (cfg.particle.mass, cfg.particle.radius) {
        (_, Some(r)) => Particle::from_radius(material, r, t0)?,
        (m, None) => Particle::from_mass(material, m.unwrap_or(config::DEFAULT_MASS), t0)?,
    };
    let intensity = cfg.trap.resolved_intensity()?;
    let model = HeatingModel::new(&particle, cfg.environment.temperature)?;
    let flight = cfg.timeline.t1 + cfg.timeline.t2;
    let mut phases = Vec::new();
    if cfg.trap.duration > 0.0 {
        phases.push(Phase {
            duration: cfg.trap.duration,
            intensity,
            wavelength: cfg.trap.wavelength,
        });
    }
    phases.push(Phase {
        duration: flight,
        intensity: 0.0,
        wavelength: cfg.trap.wavelength,
    });
    let run = evolve_with(&model, &phases, t0, &EvolveOptions::default())?;
    let release = cfg.trap.duration;
    let rows = run.samples.iter().map(|&(t, temp)| vec![t - release, temp]).collect();
    let slope = model.rate(intensity, cfg.trap.wavelength, t0)?;
    let t_eq = model.equilibrium_temperature(intensity, cfg.trap.wavelength).ok();
    let t_release = run.temperature_at(release);
    let mut lines = vec![
        format!("initial slope {} K/s", format_number(slope)),
        format!("T_int at release {} K", format_number(t_release)),
        format!("T_int at detection {} K", format_number(run.final_temperature())),
    ];
    lines.push(match t_eq {
        Some(t) => format!("trap equilibrium {} K", format_number(t)),
        None => "trap equilibrium: none below search limit".into(),
    });
    let extra = Extra {
        derived: json!({
            "initial_slope_k_per_s": slope,
            "equilibrium_k": t_eq,
            "release_temperature_k": t_release,
            "intensity_w_per_m2": intensity,
        }),
        lines,
        failure: None,
    };
    Ok((Table::new(&["t_since_release_s", "t_int_k"], rows), extra))
}

fn decoherence_map_table(cfg: &ExperimentConfig) -> Result<(Table, Extra)> {
    let scans = scans_or(
        cfg,
        2,
        vec![
            default_scan("particle.internal_temperature", 300.0, 2000.0, 35),
            default_scan(config::TOTAL_TIME, 0.01, 1.0, 100),
        ],
    )?;
    let grid: Vec<(f64, f64)> = scans[0]
        .values()
        .into_iter()
        .flat_map(|a| scans[1].values().into_iter().map(move |b| (a, b)))
        .collect();
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&(a, b)| {
            let c = cfg.with_value(&scans[0].variable, a)?.with_value(&scans[1].variable, b)?;
            let r = Resolved::new(&c)?;
            let logs: ChannelLogs = r.decoherence()?.log_reduction(1);
            let r1 = logs.total().exp();
            Ok(vec![
                a,
                b,
                r1,
                1.0 - r1,
                logs.collision,
                logs.absorption,
                logs.scattering,
                logs.emission,
                logs.csl,
            ])
        })
        .collect::<Result<_>>()?;
    let extra = Extra {
        derived: json!({"scan": scans}),
        lines: vec![format!("{} grid points", rows.len())],
        failure: None,
    };
    Ok((
        Table::new(
            &[
                &scans[0].variable,
                &scans[1].variable,
                "r1",
                "visibility_reduction",
                "ln_r1_collision",
                "ln_r1_absorption",
                "ln_r1_scattering",
                "ln_r1_emission",
                "ln_r1_csl",
            ],
            rows,
        ),
        extra,
    ))
}

fn csl_table(cfg: &ExperimentConfig, ratio: f64) -> Result<(Table, Extra)> {
    no_scan(cfg, "csl")?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::config("--visibility-ratio", "must lie in (0, 1)"));
    }
    let material = load_material(&cfg.particle)?;
    let mass = match (cfg.particle.mass, cfg.particle.radius) {
        (_, Some(r)) => Particle::from_radius(material, r, 300.0)?.mass,
        (m, None) => m.unwrap_or(config::DEFAULT_MASS),
    };
    let timeline = Timeline::new(cfg.timeline.t1, cfg.timeline.t2, mass, cfg.grating.wavelength / 2.0)?;
    let b = csl_bound(ratio, mass, &timeline, cfg.csl.r_c)?;
    let rows = vec![vec![ratio, b.lambda, b.closed_form, timeline.total(), cfg.csl.r_c]];
    let extra = Extra {
        derived: json!({"bound": b}),
        lines: vec![format!(
            "CSL bound lambda = {} Hz (r_c = {} m, t1 + t2 = {} s)",
            format_number(b.lambda),
            format_number(cfg.csl.r_c),
            format_number(timeline.total())
        )],
        failure: None,
    };
    Ok((
        Table::new(&["visibility_ratio", "lambda_hz", "lambda_closed_form_hz", "total_time_s", "r_c_m"], rows),
        extra,
    ))
}

fn material_table(cfg: &ExperimentConfig, wavelengths: &[f64]) -> Result<(Table, Extra)> {
    no_scan(cfg, "material-info")?;
    let material = load_material(&cfg.particle)?;
    let particle = match (cfg.particle.mass, cfg.particle.radius) {
        (_, Some(r)) => Particle::from_radius(material.clone(), r, 300.0)?,
        (m, None) => Particle::from_mass(material.clone(), m.unwrap_or(config::DEFAULT_MASS), 300.0)?,
    };
    let list = if wavelengths.is_empty() {
        vec![cfg.grating.wavelength, cfg.trap.wavelength]
    } else {
        wavelengths.to_vec()
    };
    let mut rows = Vec::new();
    let mut lines = vec![format!(
        "{}: mass {} kg, radius {} m",
        material.name,
        format_number(particle.mass),
        format_number(particle.radius)
    )];
    for &l in &list {
        let o = optical_response(&particle, l)?;
        let n = material.refractive_index(l);
        rows.push(vec![
            l,
            n.n.re,
            n.n.im,
            o.alpha.re,
            o.alpha.im,
            o.beta,
            o.eta,
            o.sigma_abs,
            o.sigma_sca,
            f64::from(u8::from(o.clamped)),
        ]);
        lines.push(format!(
            "lambda {} m: n = {} + {}i, beta = {}, eta = {}",
            format_number(l),
            format_number(n.n.re),
            format_number(n.n.im),
            format_number(o.beta),
            format_number(o.eta)
        ));
    }
    Ok((
        Table::new(
            &[
                "wavelength_m",
                "n_real",
                "n_imag",
                "alpha_re_si",
                "alpha_im_si",
                "beta",
                "eta",
                "sigma_abs_m2",
                "sigma_sca_m2",
                "clamped",
            ],
            rows,
        ),
        Extra {
            derived: json!({"mass_kg": particle.mass, "radius_m": particle.radius}),
            lines,
            failure: None,
        },
    ))
}

fn validate_table(seed: u64) -> Result<(Table, Extra)> {
    let checks = crate::oracle::agreement_suite(seed)?;
    let rows = checks
        .iter()
        .map(|c| vec![c.value, c.tolerance, f64::from(u8::from(c.passed))])
        .collect();
    let mut table = Table::new(&["value", "tolerance", "passed"], rows);
    table.columns.insert(0, "check".into());
    table.labels = checks.iter().map(|c| c.name.clone()).collect();
    let lines = checks.iter().map(|c| c.to_string()).collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    Ok((
        table,
        Extra {
            derived: json!({"checks": checks}),
            lines,
            failure: (!failed.is_empty()).then(|| format!("failed: {}", failed.join(", "))),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        let mut v = vec!["nanotalbot"];
        v.extend_from_slice(args);
        Cli::try_parse_from(v).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let c = cli(&["--channels", "col,csl", "--scan", "grating.phi0=0:2pi:3", "visibility"]);
        let cfg = effective_config(&c.global).unwrap();
        assert!(cfg.decoherence.collision && cfg.decoherence.csl && !cfg.decoherence.emission);
        assert_eq!(cfg.scan[0].steps, 3);
        let c = cli(&["--no-decoherence", "pattern"]);
        assert_eq!(effective_config(&c.global).unwrap().decoherence.channels(), ChannelSet::none());
    }

    #[test]
    fn bad_channel_is_config_error() {
        let c = cli(&["--channels", "col,xyz", "pattern"]);
        let e = effective_config(&c.global).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn defaults_resolve_to_the_proposed_experiment() {
        let r = Resolved::new(&ExperimentConfig::default()).unwrap();
        assert!((r.timeline.talbot_time - 0.079).abs() < 0.002);
        assert!((r.pulse.phi0 - PI).abs() < 1e-12);
        assert!(r.release_temperature > 500.0 && r.release_temperature < 620.0);
    }
}
