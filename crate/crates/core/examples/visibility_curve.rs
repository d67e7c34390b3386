//! Sinusoidal visibility against grating phase, quantum versus classical.
//!
//! Uses the configuration layer, so the defaults match the CLI.

use std::f64::consts::PI;

use nanotalbot::cli::config::ExperimentConfig;
use nanotalbot::cli::Resolved;
use nanotalbot::dynamics::visibility_sin;
use nanotalbot::grating::Mode;

fn main() -> nanotalbot::Result<()> {
    let cfg = ExperimentConfig::default();
    // R_n does not depend on phi0, so one model serves the whole scan
    let model = Resolved::new(&cfg)?.decoherence()?;

    println!("{:>8} {:>9} {:>9}", "phi0/pi", "quantum", "classical");
    for i in 1..=32 {
        let phi0 = 4.0 * PI * f64::from(i) / 32.0;
        let r = Resolved::new(&cfg.with_value("grating.phi0", phi0)?)?;
        let q = visibility_sin(&r.setup(Mode::Quantum), &model)?;
        let c = visibility_sin(&r.setup(Mode::Classical), &model)?;
        println!("{:>8.3} {q:>9.3} {c:>9.3}", phi0 / PI);
    }
    Ok(())
}
