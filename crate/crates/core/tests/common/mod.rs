//! Invariant checks shared by the property suite and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nanotalbot::constants::{AMU, C, MBAR};
use nanotalbot::decoherence::{
    csl_one_minus_f, Channel, ChannelSet, CslParams, DecoherenceModel, Environment,
};
use nanotalbot::dynamics::{fringe_pattern, talbot_time, trap_state, NoReduction, Setup, StateMode, Timeline};
use nanotalbot::grating::{coeff_coherent, coeff_with_absorption, GratingModel, Mode};
use nanotalbot::materials::{Material, Particle, RateKind, SpectralGrid, SPECTRAL_POINTS};
use nanotalbot::special::{bessel_i_scaled, one_minus_f_scattering, one_minus_si_over_x, si_over_x};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub type Check = Result<(), TestCaseError>;

pub const MASS: f64 = 1e6 * AMU;
pub const D: f64 = 177.5e-9;

pub fn silicon(t_int: f64) -> Particle {
    static MAT: OnceLock<Arc<Material>> = OnceLock::new();
    let m = MAT.get_or_init(|| Arc::new(Material::silicon())).clone();
    Particle::from_mass(m, MASS, t_int).unwrap()
}

pub fn grid() -> &'static SpectralGrid {
    static GRID: OnceLock<SpectralGrid> = OnceLock::new();
    GRID.get_or_init(|| SpectralGrid::new(&Material::silicon(), SPECTRAL_POINTS).unwrap())
}

pub fn timeline(t1: f64, t2: f64) -> Timeline {
    Timeline::new(t1, t2, MASS, D).unwrap()
}

pub fn setup(phi0: f64, t2_over_tt: f64, beta: f64, sigma_x: f64, shift: f64) -> Setup {
    let t_t = talbot_time(MASS, D);
    let source = trap_state(MASS, 200e3, 20e-3, StateMode::Exact).unwrap().with_sigma_x(sigma_x);
    Setup {
        source,
        timeline: timeline(2.0 * t_t, t2_over_tt * t_t),
        grating: GratingModel { phi0, beta, n_r: 0.0, mode: Mode::Quantum },
        shift,
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Check {
    prop_assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
    Ok(())
}

// grating

pub fn parity(n: i32, xi: f64, phi0: f64) -> Check {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let b = coeff_coherent(n, xi, phi0);
    close(coeff_coherent(-n, xi, phi0), sign * b, 1e-14, "B_-n")?;
    close(coeff_coherent(n, -xi, phi0), sign * b, 1e-14, "B_n(-xi)")
}

pub fn unitarity(xi: f64, phi0: f64) -> Check {
    let s: f64 = (-80..=80).map(|n| coeff_coherent(n, xi, phi0).powi(2)).sum();
    close(s, 1.0, 1e-12, "sum B_n^2")
}

/// |B₀| ≤ 1 everywhere; B₀ ≥ e^{−2ζ_abs} where the coherent argument vanishes.
pub fn attenuation_bounds(xi: f64, phi0: f64, beta: f64) -> Check {
    let b0 = coeff_with_absorption(0, xi, phi0, beta, Mode::Quantum).map_err(fail)?.value;
    prop_assert!(b0.norm() <= 1.0 + 1e-12, "|B0| = {}", b0.norm());
    let whole = xi.round();
    let b0 = coeff_with_absorption(0, whole, phi0, beta, Mode::Quantum).map_err(fail)?.value.re;
    let zeta_abs = beta * phi0 * (1.0 - (PI * whole).cos());
    prop_assert!(b0 <= 1.0 + 1e-12);
    prop_assert!(b0 >= (-2.0 * zeta_abs).exp() * (1.0 - 1e-12), "B0 {b0} at xi {whole}");
    // e^{-b} I₀(b) is the pure-absorption value
    close(b0, bessel_i_scaled(0, zeta_abs), 1e-12, "pure absorption B0")
}

pub fn cutoff_rule(xi: f64, phi0: f64, beta: f64) -> Check {
    prop_assume!(phi0 * (1.0 + 2.0 * beta) <= 4.0 * PI * 1.2);
    for n in [40, -40] {
        let b = coeff_with_absorption(n, xi, phi0, beta, Mode::Quantum).map_err(fail)?.value;
        prop_assert!(b.norm() < 1e-12, "|B_{n}| = {}", b.norm());
    }
    Ok(())
}

// reduction factors

pub fn kernel_bounds(x: f64) -> Check {
    for (name, v) in [
        ("abs", one_minus_si_over_x(x)),
        ("sca", one_minus_f_scattering(x)),
        ("csl", csl_one_minus_f(x * 1e-9, 100e-9)),
    ] {
        prop_assert!((0.0..=1.0).contains(&v), "1 - f_{name}({x}) = {v}");
    }
    prop_assert!(si_over_x(x) <= 1.0);
    if x > 0.0 {
        prop_assert!(si_over_x(x) < 1.0 || x < 1e-7, "Si(x)/x = 1 at x = {x}");
    }
    Ok(())
}

fn model(t_int: f64, pressure: f64, t1: f64, t2: f64, lambda: f64) -> DecoherenceModel {
    let mut channels = ChannelSet::default();
    channels.set(Channel::Csl, true);
    DecoherenceModel::with_grid(
        &silicon(t_int),
        &Environment::nitrogen(pressure),
        &timeline(t1, t2),
        channels,
        CslParams { lambda, r_c: 100e-9 },
        None,
        grid(),
    )
    .unwrap()
}

/// R_n = R_{−n}, 0 < R_n ≤ 1, and R_n non-increasing in |n|, p_g, t₁+t₂ and λ_CSL.
pub fn reduction_monotone(t_int: f64, log_p: f64, t1: f64, t2: f64, log_lambda: f64) -> Check {
    let p = 10f64.powf(log_p) * MBAR;
    let lambda = 10f64.powf(log_lambda);
    let base = model(t_int, p, t1, t2, lambda);
    let mut last = 0.0;
    for n in 0..=12 {
        // compare ln R so that strong decoherence does not underflow
        let r = base.log_reduction(n).total();
        prop_assert_eq!(r, base.log_reduction(-n).total());
        prop_assert!(r.is_finite() && r <= 0.0, "ln R_{} = {}", n, r);
        prop_assert!(r <= last + 1e-12 * r.abs(), "ln R_{} = {} after {}", n, r, last);
        last = r;
    }
    let r1 = base.log_reduction(1).total();
    for (what, other) in [
        ("pressure", model(t_int, 2.0 * p, t1, t2, lambda)),
        ("time", model(t_int, p, 1.5 * t1, 1.5 * t2, lambda)),
        ("lambda", model(t_int, p, t1, t2, 10.0 * lambda)),
    ] {
        let r = other.log_reduction(1).total();
        prop_assert!(r <= r1 + 1e-12 * r1.abs(), "{}: ln R_1 {} > {}", what, r, r1);
    }
    Ok(())
}

/// Time-resolved emission with a constant history equals the static absorption-kernel form.
pub fn emission_constant_limit(t_int: f64, t1: f64, t2: f64, n: i32) -> Check {
    let p = silicon(t_int);
    let tl = timeline(t1, t2);
    let m = DecoherenceModel::with_grid(
        &p,
        &Environment::default(),
        &tl,
        ChannelSet::only(&[Channel::Emission]),
        CslParams::default(),
        Some(Arc::new(move |_| t_int)),
        grid(),
    )
    .unwrap();
    let x = tl.separation(n).abs();
    let stat = -tl.total()
        * grid().integrate_weighted(RateKind::Emission, p.radius, t_int, |w| one_minus_si_over_x(w * x / C));
    close(m.log_reduction(n).emission.exp(), stat.exp(), 1e-8, "emission R_n")
}

// fringe pattern

pub fn pattern_reality(phi0: f64, t2: f64, beta: f64, sigma_x: f64) -> Check {
    let s = setup(phi0, t2, beta, sigma_x, 0.0);
    let p = fringe_pattern(&s, &NoReduction).map_err(fail)?;
    let mean = p.mean();
    prop_assert!(mean > 0.0);
    for i in 0..64 {
        let x = p.period * f64::from(i) / 64.0;
        let w = p.evaluate_complex(x);
        prop_assert!(w.im.abs() < 1e-10 * mean, "Im w = {} at {}", w.im, x);
        prop_assert!(w.re >= -1e-6 * mean, "w = {} at {}", w.re, x);
        close(p.evaluate(x + p.period), p.evaluate(x), 1e-9 * mean, "periodicity")?;
    }
    Ok(())
}

pub fn pattern_normalization(phi0: f64, t2: f64, beta: f64) -> Check {
    let s = setup(phi0, t2, beta, 10e-9, 0.0);
    let p = fringe_pattern(&s, &NoReduction).map_err(fail)?;
    // the trapezoid rule over a period is exact for band-limited functions
    let k = 4 * p.cutoff + 8;
    let avg = (0..k).map(|i| p.evaluate(p.period * i as f64 / k as f64)).sum::<f64>() / k as f64;
    close(avg, p.prefactor * p.amplitude(0).re, 1e-10 * avg.abs(), "period average")?;
    if beta == 0.0 {
        close(p.amplitude(0).re, 1.0, 1e-12, "A_0")?;
    }
    Ok(())
}

pub fn pattern_shift(phi0: f64, t2: f64, shift: f64) -> Check {
    let p0 = fringe_pattern(&setup(phi0, t2, 0.03, 10e-9, 0.0), &NoReduction).map_err(fail)?;
    let p1 = fringe_pattern(&setup(phi0, t2, 0.03, 10e-9, shift), &NoReduction).map_err(fail)?;
    let scale = p0.mean();
    for i in 0..32 {
        let x = p0.period * (f64::from(i) / 16.0 - 1.0);
        close(p1.evaluate(x), p0.evaluate(x - shift), 1e-12 * scale, "shifted pattern")?;
    }
    Ok(())
}

fn s<T: std::fmt::Debug>(e: proptest::test_runner::TestError<T>) -> String {
    format!("{e}")
}

fn fail(e: nanotalbot::Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

// strategies

pub fn xi() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

pub fn phi0() -> impl Strategy<Value = f64> {
    0.0..4.0 * PI
}

pub fn beta() -> impl Strategy<Value = f64> {
    0.0..0.2f64
}

/// Named invariant suites with their case budgets, run on a deterministic runner.
pub fn run_all(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    let cfg = |n: u32| Config { cases: n, failure_persistence: None, ..Config::default() };
    let mut out = Vec::new();
    let mut run = |name: &'static str, n: u32, f: &dyn Fn(&mut TestRunner) -> Result<(), String>| {
        let mut runner = TestRunner::new_with_rng(cfg(n), proptest::test_runner::TestRng::deterministic_rng(
            proptest::test_runner::RngAlgorithm::ChaCha,
        ));
        out.push((name, f(&mut runner)));
    };
    run("grating parity", cases, &|r| r.run(&(-10i32..=10, xi(), phi0()), |(n, x, p)| parity(n, x, p)).map_err(s));
    run("grating unitarity", cases, &|r| r.run(&(xi(), phi0()), |(x, p)| unitarity(x, p)).map_err(s));
    run("absorption bounds", cases, &|r| {
        r.run(&(xi(), phi0(), beta()), |(x, p, b)| attenuation_bounds(x, p, b)).map_err(s)
    });
    run("cutoff rule", cases, &|r| r.run(&(xi(), phi0(), beta()), |(x, p, b)| cutoff_rule(x, p, b)).map_err(s));
    run("kernel bounds", cases, &|r| r.run(&(0.0..1e3f64), kernel_bounds).map_err(s));
    run("reduction monotonicity and symmetry", cases.div_ceil(8), &|r| {
        r.run(
            &(300.0..2000.0f64, -11.0..-8.0f64, 0.05..0.5f64, 0.02..0.3f64, -18.0..-12.0f64),
            |(t, p, t1, t2, l)| reduction_monotone(t, p, t1, t2, l),
        )
        .map_err(s)
    });
    run("emission constant-T limit", cases.div_ceil(8), &|r| {
        r.run(&(300.0..2000.0f64, 0.05..0.3f64, 0.02..0.3f64, 1i32..6), |(t, t1, t2, n)| {
            emission_constant_limit(t, t1, t2, n)
        })
        .map_err(s)
    });
    run("pattern reality", cases.div_ceil(2), &|r| {
        r.run(&(phi0(), 0.05..2.0f64, beta(), 0.0..20e-9f64), |(p, t, b, sx)| pattern_reality(p, t, b, sx))
            .map_err(s)
    });
    run("pattern normalization", cases.div_ceil(2), &|r| {
        r.run(&(phi0(), 0.05..2.0f64, prop_oneof![Just(0.0), beta()]), |(p, t, b)| pattern_normalization(p, t, b))
            .map_err(s)
    });
    run("pattern shift equivariance", cases.div_ceil(2), &|r| {
        r.run(&(phi0(), 0.05..2.0f64, -1e-6..1e-6f64), |(p, t, sh)| pattern_shift(p, t, sh)).map_err(s)
    });
    out
}
