//! Independent cross-checks of the closed-form pattern: split-step wave
//! propagation, seeded classical Monte Carlo, and the coefficient convolution.

use std::f64::consts::PI;

use nanotalbot::constants::AMU;
use nanotalbot::dynamics::{talbot_time, trap_state, StateMode, Timeline};
use nanotalbot::oracle::{agreement_suite, classical_monte_carlo};

fn main() -> nanotalbot::Result<()> {
    for check in agreement_suite(7)? {
        println!("{check}");
    }

    let mass = 1e6 * AMU;
    let d = 355e-9 / 2.0;
    let t_t = talbot_time(mass, d);
    let source = trap_state(mass, 200e3, 20e-3, StateMode::Exact)?;
    let tl = Timeline::new(2.0 * t_t, 1.6 * t_t, mass, d)?;
    let mc = classical_monte_carlo(200_000, &source, &tl, 2.0 * PI, 42, 24)?;
    println!(
        "Monte Carlo at phi0 = 2 pi: V = {:.4} ± {:.4} from {} trajectories",
        mc.fringe.visibility, mc.fringe.std_error, mc.fringe.samples
    );
    let peak = mc.histogram.density().into_iter().fold(0.0, f64::max);
    println!("histogram peak density {peak:.3e} per m");
    Ok(())
}
