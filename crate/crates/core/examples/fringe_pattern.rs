//! Far-field density w(x) at the default timeline, quantum and classical,
//! with the environmental decoherence channels switched on.

use std::f64::consts::PI;
use std::sync::Arc;

use nanotalbot::constants::{AMU, MBAR};
use nanotalbot::decoherence::{ChannelSet, CslParams, DecoherenceModel, Environment};
use nanotalbot::dynamics::{fringe_pattern, talbot_time, trap_state, Setup, StateMode, Timeline};
use nanotalbot::grating::{spot_area_from_waist, GratingModel, GratingPulse, Mode};
use nanotalbot::materials::{Material, Particle};

fn main() -> nanotalbot::Result<()> {
    let mass = 1e6 * AMU;
    let particle = Particle::from_mass(Arc::new(Material::silicon()), mass, 300.0)?;
    let d = 355e-9 / 2.0;
    let t_t = talbot_time(mass, d);
    let timeline = Timeline::new(2.0 * t_t, 1.6 * t_t, mass, d)?;
    let source = trap_state(mass, 200e3, 20e-3, StateMode::Exact)?;
    let pulse = GratingPulse::from_phi0(&particle, 355e-9, 1.4 * PI, spot_area_from_waist(20e-6))?;
    println!("phi0 = 1.4 pi needs {:.3e} J; beta = {:.4}", pulse.pulse_energy, pulse.beta());

    let env = Environment::nitrogen(1e-10 * MBAR);
    let model = DecoherenceModel::new(&particle, &env, &timeline, ChannelSet::default(), CslParams::default(), None)?;

    for mode in [Mode::Quantum, Mode::Classical] {
        let setup = Setup {
            source,
            timeline,
            grating: GratingModel::from_pulse(&pulse, mode, true, true),
            shift: 0.0,
        };
        let p = fringe_pattern(&setup, &model)?;
        println!("{mode:?}: D = {:.1} nm, visibility {:.3}", p.period * 1e9, p.visibility()?);
        for i in 0..8 {
            let x = p.period * f64::from(i) / 8.0;
            let w = p.evaluate(x);
            println!("  x/D = {:.3}  w/mean = {:.3} {}", f64::from(i) / 8.0, w / p.mean(), bar(w / p.mean()));
        }
    }
    Ok(())
}

fn bar(v: f64) -> String {
    "#".repeat((v * 20.0).round().max(0.0) as usize)
}
