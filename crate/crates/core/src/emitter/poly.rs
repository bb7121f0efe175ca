//! Complex polynomial arithmetic and root finding (Durand-Kerner iteration)
//! for the rational single-excitation response.
//!
//! Coefficient convention: `p[k]` multiplies `x^k`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn eval(p: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::default();
    for &c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub(crate) fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub(crate) fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    let mut out = vec![Complex64::default(); n];
    for (i, &ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, &bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

pub(crate) fn scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|&c| c * s).collect()
}

pub(crate) fn derivative(p: &[Complex64]) -> Vec<Complex64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// All roots of `p` by Durand-Kerner iteration, Newton-polished.
/// Intended for well-conditioned low degrees (here: number of Lorentzian
/// terms + 1).
pub(crate) fn roots(p: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = p.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = p[degree];
    if lead.norm() == 0.0 {
        return Err(Error::Solve("zero leading coefficient".into()));
    }
    let monic: Vec<Complex64> = p.iter().map(|&c| c / lead).collect();

    // Cauchy bound on root magnitudes.
    let radius = 1.0
        + monic[..degree]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);

    // Non-real, non-uniform starting points.
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| seed.powu(k as u32 + 1) * radius / seed.norm().powi(k as i32 + 1) * 0.7)
        .collect();

    let mut converged = false;
    for _ in 0..600 {
        let mut max_step = 0.0f64;
        for k in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // Collided iterates: nudge apart.
                z[k] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                continue;
            }
            let step = eval(&monic, z[k]) / denom;
            z[k] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Solve("root iteration did not converge".into()));
    }

    // Newton polish.
    let dp = derivative(&monic);
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let d = eval(&dp, *zk);
            if d.norm() == 0.0 {
                break;
            }
            *zk -= eval(&monic, *zk) / d;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_roots() {
        // (x - 2)(x + 1 - i)(x - 3i)
        let expected = [
            Complex64::new(2.0, 0.0),
            Complex64::new(-1.0, 1.0),
            Complex64::new(0.0, 3.0),
        ];
        let mut p = vec![Complex64::new(1.0, 0.0)];
        for r in expected {
            p = mul(&p, &[-r, Complex64::new(1.0, 0.0)]);
        }
        let mut got = roots(&p).unwrap();
        for want in expected {
            let (idx, _) = got
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - want).norm().partial_cmp(&(b.1 - want).norm()).unwrap())
                .unwrap();
            assert!((got[idx] - want).norm() < 1e-10);
            got.remove(idx);
        }
    }

    #[test]
    fn eval_and_derivative_consistent() {
        let p = [
            Complex64::new(1.0, 2.0),
            Complex64::new(-3.0, 0.5),
            Complex64::new(0.0, 1.0),
        ];
        let x = Complex64::new(0.7, -0.4);
        let h = 1e-7;
        let numeric = (eval(&p, x + h) - eval(&p, x - h)) / (2.0 * h);
        let analytic = eval(&derivative(&p), x);
        assert!((numeric - analytic).norm() < 1e-6);
    }
}
