//! Internal temperature of a trapped silicon sphere: heating at 1550 nm,
//! then radiative cooling in free fall.

use std::sync::Arc;

use nanotalbot::constants::AMU;
use nanotalbot::materials::{Material, Particle};
use nanotalbot::thermal::{evolve_temperature, HeatingModel, Phase, MW_PER_UM2};

fn main() -> nanotalbot::Result<()> {
    let particle = Particle::from_mass(Arc::new(Material::silicon()), 1e6 * AMU, 300.0)?;
    let model = HeatingModel::new(&particle, 300.0)?;
    let intensity = 90.0 * MW_PER_UM2;

    println!("initial slope {:.1} K/s", model.rate(intensity, 1550e-9, 300.0)?);
    println!("equilibrium {:.0} K", model.equilibrium_temperature(intensity, 1550e-9)?);

    let phases = [
        Phase { duration: 10.0, intensity, wavelength: 1550e-9 },
        Phase { duration: 2.0, intensity: 0.0, wavelength: 1550e-9 },
    ];
    let run = evolve_temperature(&model, &phases, 300.0)?;
    let release = run.phase_start(1);
    for t in [0.0, 1.0, 2.0, 5.0, 10.0, 10.1, 10.5, 11.0, 12.0] {
        let tag = if t <= release { "trapped" } else { "falling" };
        println!("t = {t:>5.1} s  T_int = {:>7.1} K  ({tag})", run.temperature_at(t));
    }
    Ok(())
}
