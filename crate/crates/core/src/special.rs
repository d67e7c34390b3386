//! Special functions: integer-order Bessel functions of the first kind
//! (ordinary and modified), the spherical Bessel function `j1`, the sine
//! integral, and the small-argument-safe kernels built from them.
//!
//! `J_n` uses the power series for `|x| <= 2` and Miller's downward
//! recurrence normalised with `J_0 + 2 Σ J_2k = 1` otherwise. `I_n` uses the
//! power series for `|x| <= 10` and a downward recurrence normalised with
//! `I_0 + 2 Σ I_k = e^x` beyond, which yields `e^{-x} I_n(x)` without
//! overflow. Both reach ~1e-14 relative accuracy away from zeros.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

fn sign_of_order(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Bessel function of the first kind `J_n(x)` for integer `n` and real `x`.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs();
    // J_{-n} = (-1)^n J_n and J_n(-x) = (-1)^n J_n(x)
    let mut sign = if n < 0 { sign_of_order(order) } else { 1.0 };
    if x < 0.0 {
        sign *= sign_of_order(order);
    }
    sign * bessel_j_nonneg(order, x.abs())
}

fn bessel_j_nonneg(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= 2.0 {
        return bessel_j_series(n, x);
    }
    let seq = miller_j(n as usize, x);
    seq[n as usize]
}

fn bessel_j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for i in 1..=n {
        lead *= half / f64::from(i);
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + f64::from(n)));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

fn miller_start(n: usize, x: f64) -> usize {
    let top = (n as f64).max(x).max(1.0);
    let m = top.ceil() as usize + 2 * (40.0 * top).sqrt().ceil() as usize + 30;
    m + (m % 2)
}

/// `J_0(x) .. J_nmax(x)` for `x > 0` by normalised downward recurrence.
fn miller_j(nmax: usize, x: f64) -> Vec<f64> {
    let m = miller_start(nmax, x);
    let mut out = vec![0.0; nmax + 1];
    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1.0;
    let mut even_sum = 0.0;
    // iterate: current holds J_k, compute J_{k-1}
    for k in (1..=m).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = current;
        }
        if idx > 0 && idx % 2 == 0 {
            even_sum += current;
        }
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    let norm = current + 2.0 * even_sum;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `J_0(x) .. J_nmax(x)` in one pass.
pub fn bessel_j_upto(nmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; nmax + 1];
        v[0] = 1.0;
        return v;
    }
    let ax = x.abs();
    let mut v = if ax <= 2.0 {
        (0..=nmax).map(|n| bessel_j_series(n as u32, ax)).collect()
    } else {
        miller_j(nmax, ax)
    };
    if x < 0.0 {
        for (n, val) in v.iter_mut().enumerate() {
            if n % 2 == 1 {
                *val = -*val;
            }
        }
    }
    v
}

/// Modified Bessel function of the first kind `I_n(x)`.
pub fn bessel_i(n: i32, x: f64) -> f64 {
    bessel_i_scaled(n, x) * x.abs().exp()
}

/// Exponentially scaled modified Bessel function `e^{-|x|} I_n(x)`.
pub fn bessel_i_scaled(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs();
    let sign = if x < 0.0 { sign_of_order(order) } else { 1.0 };
    let ax = x.abs();
    if ax == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if ax <= 10.0 {
        return sign * bessel_i_series(order, ax) * (-ax).exp();
    }
    sign * miller_i_scaled(order as usize, ax)[order as usize]
}

fn bessel_i_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for i in 1..=n {
        lead *= half / f64::from(i);
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + f64::from(n)));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `e^{-x} I_0(x) .. e^{-x} I_nmax(x)` for `x > 0`.
fn miller_i_scaled(nmax: usize, x: f64) -> Vec<f64> {
    let m = nmax + (100.0 * x).sqrt().ceil() as usize + 30;
    let mut out = vec![0.0; nmax + 1];
    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1e-200;
    let mut tail = 0.0;
    for k in (1..=m).rev() {
        let below = k as f64 * two_over_x * current + above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = current;
        }
        if idx > 0 {
            tail += current;
        }
        if current > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            tail *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    let norm = current + 2.0 * tail;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `J_n(z)` for `z` that is either purely real or purely imaginary, using
/// `J_n(i y) = i^n I_n(y)`.
pub fn bessel_j_axis(n: i32, z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return Complex64::new(bessel_j(n, z.re), 0.0);
    }
    debug_assert!(z.re == 0.0, "bessel_j_axis needs a real or imaginary argument");
    let i_pow = Complex64::i().powi(n);
    i_pow * bessel_i(n, z.im)
}

/// Spherical Bessel function `j_1(z) = sin z / z² - cos z / z`.
pub fn spherical_j1(z: f64) -> f64 {
    if z.abs() < 1.0 {
        // z Σ (-z²/2)^k / (k! (2k+3)!!)
        let q = -0.5 * z * z;
        let mut term = 1.0 / 3.0;
        let mut sum = term;
        for k in 1..30 {
            let kf = f64::from(k);
            term *= q / (kf * (2.0 * kf + 3.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        z * sum
    } else {
        z.sin() / (z * z) - z.cos() / z
    }
}

/// `sin(x)/x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `1 - sin(x)/x` without cancellation near zero.
pub fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 0.5 {
        one_minus_sinc_series(x)
    } else {
        1.0 - x.sin() / x
    }
}

/// Taylor form of `1 - sin(x)/x`, accurate to rounding for |x| < 0.5.
#[inline]
pub fn one_minus_sinc_series(x: f64) -> f64 {
    // Σ_{k=1}^{7} (−1)^{k+1} x^{2k} / (2k+1)!; the next term is below 1e-16 relative
    const C: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 120.0,
        1.0 / 5040.0,
        -1.0 / 362_880.0,
        1.0 / 39_916_800.0,
        -1.0 / 6_227_020_800.0,
        1.0 / 1_307_674_368_000.0,
    ];
    let q = x * x;
    let mut acc = C[6];
    for c in C[..6].iter().rev() {
        acc = acc * q + c;
    }
    acc * q
}

/// Sine integral `Si(x) = ∫_0^x sin t / t dt`.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x < 4.0 {
        return x * si_over_x_series(x);
    }
    // continued fraction for E1(ix); converges quickly for x > 2
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    FRAC_PI_2 + h.im
}

fn si_over_x_series(x: f64) -> f64 {
    // Σ (-1)^k x^{2k} / ((2k+1)(2k+1)!)
    let q = -x * x;
    let mut fact_term = 1.0; // (-x²)^k / (2k+1)!
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = f64::from(k);
        fact_term *= q / ((2.0 * kf) * (2.0 * kf + 1.0));
        let t = fact_term / (2.0 * kf + 1.0);
        sum += t;
        if t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `Si(x)/x`, equal to 1 at the origin.
pub fn si_over_x(x: f64) -> f64 {
    if x.abs() < 4.0 {
        si_over_x_series(x)
    } else {
        sine_integral(x) / x
    }
}

/// `1 - Si(a)/a`: the thermal-absorption/emission resolution kernel.
pub fn one_minus_si_over_x(a: f64) -> f64 {
    if a.abs() < 2.0 {
        let q = -a * a;
        let mut fact_term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            let kf = f64::from(k);
            fact_term *= q / ((2.0 * kf) * (2.0 * kf + 1.0));
            let t = fact_term / (2.0 * kf + 1.0);
            sum -= t;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        1.0 - sine_integral(a) / a
    }
}

/// `1 - [Si(2a)/a - sinc²(a)]`: the Rayleigh-scattering resolution kernel.
pub fn one_minus_f_scattering(a: f64) -> f64 {
    if a.abs() < 1.0 {
        let a2 = a * a;
        let mut sum = 0.0;
        let mut pow = 1.0; // a^{2k}
        let mut four_k = 1.0;
        for k in 1..40 {
            let kf = f64::from(k);
            pow *= a2;
            four_k *= 4.0;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let si_coeff = 2.0 * four_k / ((2.0 * kf + 1.0) * factorial(2 * k + 1));
            let sinc2_coeff = 2.0 * four_k / factorial(2 * k + 2);
            let t = (sign * si_coeff - sign * sinc2_coeff) * pow;
            sum += t;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let s = sinc(a);
        1.0 - sine_integral(2.0 * a) / a + s * s
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Angle helper: `sin(π ξ)` that is exactly zero at integer `ξ`.
pub fn sin_pi(xi: f64) -> f64 {
    let r = xi - 2.0 * (xi / 2.0).floor();
    // r in [0, 2)
    if r == 0.0 || r == 1.0 {
        0.0
    } else {
        (PI * r).sin()
    }
}

/// `cos(π ξ)`, exact at integers.
pub fn cos_pi(xi: f64) -> f64 {
    let r = xi - 2.0 * (xi / 2.0).floor();
    if r == 0.0 {
        1.0
    } else if r == 1.0 {
        -1.0
    } else if r == 0.5 || r == 1.5 {
        0.0
    } else {
        (PI * r).cos()
    }
}
