//! Per-channel ln R_n for the default flight, with the internal temperature
//! following the cooling curve after release.

use std::sync::Arc;

use nanotalbot::constants::{AMU, MBAR};
use nanotalbot::decoherence::{collision_rate, Channel, ChannelSet, CslParams, DecoherenceModel, Environment};
use nanotalbot::dynamics::{talbot_time, Timeline};
use nanotalbot::materials::{Material, Particle};
use nanotalbot::thermal::{evolve_temperature, HeatingModel, Phase};

fn main() -> nanotalbot::Result<()> {
    let mass = 1e6 * AMU;
    let hot = 1000.0;
    let particle = Particle::from_mass(Arc::new(Material::silicon()), mass, hot)?;
    let d = 355e-9 / 2.0;
    let t_t = talbot_time(mass, d);
    let timeline = Timeline::new(2.0 * t_t, 1.6 * t_t, mass, d)?;
    let env = Environment::nitrogen(1e-10 * MBAR);
    println!("collision rate {:.3} /s", collision_rate(&particle, &env));

    let cooling = evolve_temperature(
        &HeatingModel::new(&particle, env.temperature)?,
        &[Phase { duration: 1.0, intensity: 0.0, wavelength: 1550e-9 }],
        hot,
    )?;
    let mut channels = ChannelSet::default();
    channels.set(Channel::Csl, true);
    let csl = CslParams { lambda: 1e-12, ..CslParams::default() };
    let model = DecoherenceModel::new(&particle, &env, &timeline, channels, csl, Some(cooling.history_from(0.0)))?;

    print!("{:>3}", "n");
    for c in Channel::ALL {
        print!(" {:>12}", format!("{c:?}"));
    }
    println!(" {:>10}", "R_n");
    for n in 1..=5 {
        let logs = model.log_reduction(n);
        print!("{n:>3}");
        for c in Channel::ALL {
            print!(" {:>12.4e}", logs.get(c));
        }
        println!(" {:>10.5}", model.reduction(n));
    }
    Ok(())
}
