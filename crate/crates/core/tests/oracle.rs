mod common;

use common::{timeline, MASS};
use nanotalbot::dynamics::{talbot_time, trap_state, StateMode};
use nanotalbot::oracle::{classical_monte_carlo, sample_arrivals};
use std::f64::consts::PI;

fn default_flight() -> (nanotalbot::dynamics::SourceState, nanotalbot::dynamics::Timeline) {
    let t_t = talbot_time(MASS, common::D);
    let source = trap_state(MASS, 200e3, 20e-3, StateMode::Exact).unwrap();
    (source, timeline(2.0 * t_t, 1.6 * t_t))
}

#[test]
fn histograms_do_not_depend_on_thread_count() {
    let (source, tl) = default_flight();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| classical_monte_carlo(200_000, &source, &tl, PI, 11, 64).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.histogram, b.histogram);
    assert_eq!(a.fringe.visibility.to_bits(), b.fringe.visibility.to_bits());
    assert_ne!(a.histogram, classical_monte_carlo(200_000, &source, &tl, PI, 12, 64).unwrap().histogram);
}

#[test]
fn estimator_variance_scales_as_one_over_n() {
    let (source, tl) = default_flight();
    let spread = |n: usize, seeds: u64| {
        let v: Vec<f64> = (0..seeds)
            .map(|s| classical_monte_carlo(n, &source, &tl, PI, 1000 + s, 16).unwrap().fringe.visibility)
            .collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (v4, v5) = (spread(10_000, 64), spread(100_000, 64));
    let ratio = v4 / v5;
    // a variance ratio from 64 draws each is good to roughly ±35%
    assert!((5.0..20.0).contains(&ratio), "variance ratio {ratio}");

    let reported: Vec<f64> = [10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let e = classical_monte_carlo(n, &source, &tl, PI, 7, 16).unwrap().fringe;
            e.std_error * (n as f64).sqrt()
        })
        .collect();
    for r in &reported {
        assert!((r / reported[2] - 1.0).abs() < 0.05, "{reported:?}");
    }
    assert!((v4.sqrt() * 100.0 / reported[2] - 1.0).abs() < 0.35, "{} vs {}", v4.sqrt() * 100.0, reported[2]);
}

#[test]
fn too_few_trajectories_is_rejected() {
    let (source, tl) = default_flight();
    assert!(sample_arrivals(100, &source, &tl, PI, 0).is_err());
}
