//! Fringe shift from a small acceleration, and how well the trap readout
//! resolves the release position.

use std::sync::Arc;

use nanotalbot::constants::{AMU, G};
use nanotalbot::dynamics::{fringe_shift, talbot_time, trap_readout, AccelerationProfile, ReadoutParams, ShotNoiseConvention, Timeline};
use nanotalbot::materials::{Material, Particle};

fn main() -> nanotalbot::Result<()> {
    let mass = 1e6 * AMU;
    let d = 355e-9 / 2.0;
    let t_t = talbot_time(mass, d);
    let tl = Timeline::new(2.0 * t_t, 1.6 * t_t, mass, d)?;

    for a in [1e-9 * G, 1e-8 * G, 1e-7 * G] {
        let dx = fringe_shift(&AccelerationProfile::constant(a, tl.total()), &tl);
        println!("a = {:.0e} g: shift {:.2} nm = {:.4} D", a / G, dx * 1e9, dx / tl.magnified_period);
    }

    let particle = Particle::from_mass(Arc::new(Material::silicon()), mass, 300.0)?;
    for convention in [ShotNoiseConvention::Single, ShotNoiseConvention::Double] {
        let r = trap_readout(
            &particle,
            &ReadoutParams {
                waist: 1e-6,
                wavelength: 1550e-9,
                power: 1e-3,
                responsivity: 1.0,
                averaging_periods: 10.0,
                trap_frequency: 200e3,
                convention,
            },
        )?;
        println!(
            "{convention:?}: sensitivity {:.3e} /m, shot noise {:.2e} /sqrt(Hz), resolution {:.2} nm",
            r.sensitivity,
            r.relative_shot_noise,
            r.position_resolution * 1e9
        );
    }
    Ok(())
}
