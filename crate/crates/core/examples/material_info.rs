//! Optical response of a 10⁶ amu silicon sphere across the bundled spectrum.
//!
//! ```bash
//! cargo run --release --example material_info
//! ```

use std::sync::Arc;

use nanotalbot::constants::AMU;
use nanotalbot::materials::{integrated_rate_and_power, optical_response, Material, Particle, RateKind};

fn main() -> nanotalbot::Result<()> {
    let particle = Particle::from_mass(Arc::new(Material::silicon()), 1e6 * AMU, 300.0)?;
    println!("radius {:.2} nm", particle.radius * 1e9);

    println!("{:>10} {:>10} {:>10} {:>12} {:>12}", "lambda_nm", "beta", "eta", "sigma_abs", "sigma_sca");
    for nm in [266.0, 355.0, 532.0, 1064.0, 1550.0] {
        let r = optical_response(&particle, nm * 1e-9)?;
        println!(
            "{nm:>10.0} {:>10.4} {:>10.3e} {:>12.3e} {:>12.3e}{}",
            r.beta,
            r.eta,
            r.sigma_abs,
            r.sigma_sca,
            if r.clamped { "  (outside table)" } else { "" }
        );
    }

    // thermal photon budget at a few internal temperatures
    for t in [300.0, 1000.0, 1600.0] {
        let emi = integrated_rate_and_power(RateKind::Emission, &particle, t)?;
        println!("T_int = {t:>6.0} K: {:.3e} photons/s emitted, {:.3e} W", emi.rate, emi.power);
    }
    Ok(())
}
