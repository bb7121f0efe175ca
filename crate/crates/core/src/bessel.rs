//! Bessel functions J0 and Y0 of a real argument, and the outgoing Hankel
//! function H0(1) built from them.
//!
//! Power series below the crossover, Hankel's asymptotic expansion above it
//! (Abramowitz & Stegun 9.1.12, 9.1.13, 9.2.5). Accuracy is ~1e-11 near the
//! crossover and close to machine precision elsewhere, which is far below the
//! discretization errors these functions are compared against.

use num_complex::Complex64;

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Series/asymptotic crossover point.
const CROSSOVER: f64 = 12.0;

/// Bessel function of the first kind, order zero.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < CROSSOVER {
        j0_series(x)
    } else {
        hankel_asymptotic(x).re
    }
}

/// Bessel function of the second kind, order zero. Requires `x > 0`.
pub fn y0(x: f64) -> f64 {
    assert!(x > 0.0, "y0 requires a positive argument, got {x}");
    if x < CROSSOVER {
        y0_series(x)
    } else {
        hankel_asymptotic(x).im
    }
}

/// Outgoing Hankel function H0(1)(x) = J0(x) + i Y0(x) for `x > 0`.
pub fn hankel1_0(x: f64) -> Complex64 {
    assert!(x > 0.0, "hankel1_0 requires a positive argument, got {x}");
    if x < CROSSOVER {
        Complex64::new(j0_series(x), y0_series(x))
    } else {
        hankel_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

fn y0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= -q / ((k * k) as f64);
        harmonic += 1.0 / k as f64;
        // (-1)^{k+1} H_k q^k / (k!)^2 = -term * harmonic
        let contrib = -term * harmonic;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-30) {
            break;
        }
    }
    core::f64::consts::FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0_series(x) + sum)
}

/// H0(1)(x) ~ sqrt(2/(pi x)) e^{i(x - pi/4)} sum_m (-i)^m a_m / x^m with
/// a_m = prod_{j<=m} (2j-1)^2 / (m! 8^m); truncated at its smallest term.
fn hankel_asymptotic(x: f64) -> Complex64 {
    let mut a = 1.0;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut ipow = Complex64::new(0.0, -1.0);
    let mut prev = f64::INFINITY;
    for m in 1..40 {
        let mf = m as f64;
        a *= (2.0 * mf - 1.0) * (2.0 * mf - 1.0) / (8.0 * mf);
        let mag = a / x.powi(m as i32);
        if mag > prev {
            break; // asymptotic series started diverging
        }
        sum += ipow * mag;
        ipow *= Complex64::new(0.0, -1.0);
        prev = mag;
        if mag < 1e-17 {
            break;
        }
    }
    let chi = x - core::f64::consts::FRAC_PI_4;
    let amp = (2.0 / (core::f64::consts::PI * x)).sqrt();
    amp * Complex64::new(chi.cos(), chi.sin()) * sum
}
