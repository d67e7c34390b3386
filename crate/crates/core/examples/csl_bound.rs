//! Upper bound on the CSL collapse rate from a measured visibility ratio.

use nanotalbot::constants::AMU;
use nanotalbot::decoherence::csl_bound;
use nanotalbot::dynamics::Timeline;

fn main() -> nanotalbot::Result<()> {
    let mass = 1e6 * AMU;
    let tl = Timeline::new(0.160, 0.124, mass, 355e-9 / 2.0)?;
    println!("{:>6} {:>12} {:>12}", "ratio", "lambda_Hz", "closed_form");
    for ratio in [0.9, 0.7, 0.5, 0.3, 0.1] {
        let b = csl_bound(ratio, mass, &tl, 100e-9)?;
        println!("{ratio:>6.2} {:>12.3e} {:>12.3e}", b.lambda, b.closed_form);
    }
    Ok(())
}
