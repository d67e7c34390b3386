//! Trap source state, Talbot time and the two-stage timeline.

use nanotalbot::constants::AMU;
use nanotalbot::dynamics::{detection_probability, point_source_validity, talbot_time, trap_state, StateMode, Timeline};

fn main() -> nanotalbot::Result<()> {
    let mass = 1e6 * AMU;
    let d = 355e-9 / 2.0;

    let t_t = talbot_time(mass, d);
    println!("t_T = {:.3} ms", t_t * 1e3);

    for mode in [StateMode::Exact, StateMode::Classical] {
        let s = trap_state(mass, 200e3, 20e-3, mode)?;
        println!(
            "{mode:?}: sigma_x = {:.2} nm, sigma_p/m = {:.3} cm/s",
            s.sigma_x * 1e9,
            s.sigma_p / mass * 100.0
        );
    }

    let source = trap_state(mass, 200e3, 20e-3, StateMode::Exact)?;
    let diag = point_source_validity(&source, d);
    println!(
        "point-source check: sigma_p d/h = {:.1}, sigma_x/d = {:.3} ({})",
        diag.momentum_ratio,
        diag.width_ratio,
        if diag.passes() { "ok" } else { "violated" }
    );

    let tl = Timeline::new(2.0 * t_t, 1.6 * t_t, mass, d)?;
    println!(
        "t1 = {:.1} ms, t2 = {:.1} ms, magnification {:.3}, D = {:.1} nm, xi1 = {:.4}",
        tl.t1 * 1e3,
        tl.t2 * 1e3,
        tl.magnification,
        tl.magnified_period * 1e9,
        tl.xi1()
    );
    let p = detection_probability(&source, &tl, 1e-6)?;
    println!("probability inside a 1 um window: {:.3e}", p.probability);
    Ok(())
}
