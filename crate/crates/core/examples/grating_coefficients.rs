//! Talbot coefficients B_n(ξ) of the standing-wave grating, with and
//! without absorption, next to the classical limit.

use std::f64::consts::PI;

use nanotalbot::grating::{coeff_classical, coeff_coherent, coeff_with_absorption, GratingModel, Mode};

fn main() -> nanotalbot::Result<()> {
    let phi0 = 1.4 * PI;
    let beta = 0.06;
    let xi = 0.3;

    println!("phi0 = 1.4 pi, beta = {beta}, xi = {xi}");
    println!("{:>3} {:>12} {:>12} {:>14} {:>14}", "n", "coherent", "classical", "quantum+abs", "classical+abs");
    for n in 0..=6 {
        let q = coeff_with_absorption(n, xi, phi0, beta, Mode::Quantum)?;
        let c = coeff_with_absorption(n, xi, phi0, beta, Mode::Classical)?;
        println!(
            "{n:>3} {:>12.6} {:>12.6} {:>14.6} {:>14.6}",
            coeff_coherent(n, xi, phi0),
            coeff_classical(n, xi, phi0),
            q.value.re,
            c.value.re
        );
    }

    // the full set as used by the pattern, truncated where the tail is negligible
    let model = GratingModel::pure(phi0, Mode::Quantum);
    let set = model.set(xi)?;
    let kept = set.orders().count();
    let norm: f64 = set.orders().map(|(_, b)| b.norm_sqr()).sum();
    println!("{kept} orders kept, sum |B_n|^2 = {norm:.12}");
    Ok(())
}
