//! Talbot carpet: density rows over one magnified period as t₂ varies,
//! written as CSV to stdout (rows t₂, columns x/D).

use std::f64::consts::PI;

use nanotalbot::constants::AMU;
use nanotalbot::dynamics::{carpet, default_x_grid, fringe_pattern, talbot_time, trap_state, NoReduction, Setup, StateMode, Timeline};
use nanotalbot::grating::{GratingModel, Mode};

fn main() -> nanotalbot::Result<()> {
    let mass = 1e6 * AMU;
    let d = 355e-9 / 2.0;
    let t_t = talbot_time(mass, d);
    let t1 = 0.160;
    let source = trap_state(mass, 200e3, 20e-3, StateMode::Exact)?.with_sigma_x(10e-9);

    let scan: Vec<f64> = (1..=40).map(|i| 2.0 * t_t * f64::from(i) / 40.0).collect();
    let x = default_x_grid(16);
    let c = carpet(&scan, &x, |t2| {
        let setup = Setup {
            source,
            timeline: Timeline::new(t1, t2, mass, d)?,
            grating: GratingModel::pure(PI, Mode::Quantum),
            shift: 0.0,
        };
        fringe_pattern(&setup, &NoReduction)
    })?;

    let header: Vec<String> = c.x.iter().map(|u| format!("{u:.4}")).collect();
    println!("t2_s,{}", header.join(","));
    for (t2, row) in c.scan.iter().zip(&c.rows) {
        let cells: Vec<String> = row.iter().map(|w| format!("{w:.5e}")).collect();
        println!("{t2:.6},{}", cells.join(","));
    }
    Ok(())
}
