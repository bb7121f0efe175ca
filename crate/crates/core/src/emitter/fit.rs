//! Multi-Lorentzian least-squares fitting of the bath spectral function
//! `-Im[G(x_d, x_d; omega)]` by Levenberg-Marquardt with greedy term
//! addition.
//!
//! The model is `sum_n p_n / ((omega - omega_n)^2 + gamma_n^2)` with
//! `p_n, gamma_n > 0` enforced through a log parametrization.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::lu_solve;

use super::{LorentzianFit, LorentzianTerm};

/// Model value at one frequency.
fn model(terms: &[LorentzianTerm], omega: f64) -> f64 {
    terms
        .iter()
        .map(|t| t.p / ((omega - t.omega).powi(2) + t.gamma * t.gamma))
        .sum()
}

/// Packed internal parameters: [ln p, omega, ln gamma] per term.
fn pack(terms: &[LorentzianTerm]) -> Vec<f64> {
    terms
        .iter()
        .flat_map(|t| [t.p.ln(), t.omega, t.gamma.ln()])
        .collect()
}

fn unpack(params: &[f64]) -> Vec<LorentzianTerm> {
    params
        .chunks_exact(3)
        .map(|c| LorentzianTerm {
            p: c[0].exp(),
            omega: c[1],
            gamma: c[2].exp(),
        })
        .collect()
}

fn cost(terms: &[LorentzianTerm], omegas: &[f64], values: &[f64]) -> f64 {
    omegas
        .iter()
        .zip(values)
        .map(|(&w, &y)| (model(terms, w) - y).powi(2))
        .sum()
}

/// One Levenberg-Marquardt refinement of all terms jointly.
fn refine(
    terms: &mut Vec<LorentzianTerm>,
    omegas: &[f64],
    values: &[f64],
    max_iter: usize,
) -> Result<()> {
    let mut params = pack(terms);
    let np = params.len();
    let mut lambda = 1e-3;
    let mut current = cost(&unpack(&params), omegas, values);

    for _ in 0..max_iter {
        let terms_now = unpack(&params);
        // Jacobian of residuals r_i = model(w_i) - y_i w.r.t. packed params.
        let mut jtj = vec![0.0; np * np];
        let mut jtr = vec![0.0; np];
        for (&w, &y) in omegas.iter().zip(values) {
            let r = model(&terms_now, w) - y;
            let mut grad = Vec::with_capacity(np);
            for t in &terms_now {
                let d = (w - t.omega).powi(2) + t.gamma * t.gamma;
                let base = t.p / d;
                grad.push(base); // d/d(ln p)
                grad.push(base * 2.0 * (w - t.omega) / d); // d/d(omega_n)
                grad.push(base * (-2.0) * t.gamma * t.gamma / d); // d/d(ln gamma)
            }
            for a in 0..np {
                jtr[a] += grad[a] * r;
                for b in 0..np {
                    jtj[a * np + b] += grad[a] * grad[b];
                }
            }
        }

        let gradient_norm = jtr.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gradient_norm < 1e-16 * (1.0 + current) {
            break;
        }

        let mut improved = false;
        for _ in 0..14 {
            // (J^T J + lambda diag) delta = -J^T r
            let a = Array2::from_shape_fn((np, np), |(i, j)| {
                let damp = if i == j { lambda * (jtj[i * np + i] + 1e-30) } else { 0.0 };
                Complex64::new(jtj[i * np + j] + damp, 0.0)
            });
            let mut rhs: Vec<Complex64> = jtr.iter().map(|&g| Complex64::new(-g, 0.0)).collect();
            if lu_solve(a, &mut rhs).is_err() {
                lambda *= 10.0;
                continue;
            }
            let trial: Vec<f64> = params
                .iter()
                .zip(&rhs)
                .map(|(&p, d)| p + d.re)
                .collect();
            // Keep the log parameters in a sane range to avoid overflow.
            if trial.iter().any(|v| !v.is_finite() || v.abs() > 700.0) {
                lambda *= 10.0;
                continue;
            }
            let trial_cost = cost(&unpack(&trial), omegas, values);
            if trial_cost < current {
                params = trial;
                current = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    *terms = unpack(&params);
    Ok(())
}

/// Seed a new term at the largest residual peak: center at the peak, width
/// from the half-maximum crossing, weight from the peak height.
fn seed_term(terms: &[LorentzianTerm], omegas: &[f64], values: &[f64]) -> LorentzianTerm {
    let resid: Vec<f64> = omegas
        .iter()
        .zip(values)
        .map(|(&w, &y)| y - model(terms, w))
        .collect();
    let (peak_idx, &peak) = resid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let peak = peak.max(1e-300);
    let w0 = omegas[peak_idx];

    let half = peak / 2.0;
    let grid_step = (omegas[omegas.len() - 1] - omegas[0]) / (omegas.len() - 1) as f64;
    let mut left = w0 - grid_step;
    for i in (0..peak_idx).rev() {
        if resid[i] < half {
            left = omegas[i];
            break;
        }
    }
    let mut right = w0 + grid_step;
    for i in peak_idx + 1..omegas.len() {
        if resid[i] < half {
            right = omegas[i];
            break;
        }
    }
    let gamma = (0.5 * (right - left)).max(0.5 * grid_step);
    LorentzianTerm {
        p: peak * gamma * gamma,
        omega: w0,
        gamma,
    }
}

/// Fit `-Im[G]` samples by a sum of Lorentzians. Terms are added greedily at
/// residual peaks and refitted jointly until the relative L2 residual drops
/// below `tol` or `max_terms` is reached; the result is flagged when the
/// tolerance was not met.
pub fn fit_lorentzians(
    omegas: &[f64],
    values: &[f64],
    max_terms: usize,
    tol: f64,
) -> Result<LorentzianFit> {
    if omegas.len() < 50 {
        return Err(Error::Parameter(format!(
            "need at least 50 spectrum samples, got {}",
            omegas.len()
        )));
    }
    if omegas.len() != values.len() {
        return Err(Error::Parameter("spectrum arrays differ in length".into()));
    }
    if values.iter().any(|&v| v < -1e-12 || !v.is_finite()) {
        return Err(Error::Parameter(
            "spectrum must be nonnegative and finite".into(),
        ));
    }
    if max_terms == 0 {
        return Err(Error::Parameter("max_terms must be positive".into()));
    }

    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Parameter("spectrum is identically zero".into()));
    }

    let mut terms: Vec<LorentzianTerm> = Vec::new();
    let mut residual = 1.0;
    for _ in 0..max_terms {
        terms.push(seed_term(&terms, omegas, values));
        refine(&mut terms, omegas, values, 300)?;
        residual = (cost(&terms, omegas, values)).sqrt() / norm;
        if residual < tol {
            break;
        }
    }

    // Deterministic presentation: strongest peak first.
    terms.sort_by(|a, b| {
        let ha = a.p / (a.gamma * a.gamma);
        let hb = b.p / (b.gamma * b.gamma);
        hb.partial_cmp(&ha).unwrap()
    });

    Ok(LorentzianFit {
        terms,
        window: [omegas[0], omegas[omegas.len() - 1]],
        residual,
        converged: residual < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentzian_sum(terms: &[LorentzianTerm], omegas: &[f64]) -> Vec<f64> {
        omegas.iter().map(|&w| model(terms, w)).collect()
    }

    /// An exact single Lorentzian is a fixed point of the model class.
    #[test]
    fn recovers_exact_single_lorentzian() {
        let truth = LorentzianTerm {
            p: 1.0,
            omega: 0.35 * std::f64::consts::TAU,
            gamma: 0.003 * std::f64::consts::TAU,
        };
        let omegas: Vec<f64> = (0..400)
            .map(|i| truth.omega + (i as f64 / 399.0 - 0.5) * 40.0 * truth.gamma)
            .collect();
        let values = lorentzian_sum(std::slice::from_ref(&truth), &omegas);
        let fit = fit_lorentzians(&omegas, &values, 4, 1e-10).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.terms.len(), 1);
        let t = &fit.terms[0];
        assert!((t.p - truth.p).abs() < 1e-6);
        assert!((t.omega - truth.omega).abs() < 1e-6);
        assert!((t.gamma - truth.gamma).abs() < 1e-6);
    }

    /// Synthesize-then-fit oracle with two well-separated peaks.
    #[test]
    fn recovers_two_separated_lorentzians() {
        let truth = [
            LorentzianTerm {
                p: 0.8,
                omega: 2.0,
                gamma: 0.02,
            },
            LorentzianTerm {
                p: 0.3,
                omega: 2.4,
                gamma: 0.035,
            },
        ];
        let omegas: Vec<f64> = (0..800).map(|i| 1.7 + i as f64 * (1.0 / 799.0)).collect();
        let values = lorentzian_sum(&truth, &omegas);
        let fit = fit_lorentzians(&omegas, &values, 5, 1e-8).unwrap();
        assert!(fit.converged, "residual {}", fit.residual);
        assert!(fit.residual < 1e-8);
        assert_eq!(fit.terms.len(), 2);
        // Strongest peak is listed first.
        assert!((fit.terms[0].omega - 2.0).abs() < 1e-4);
        assert!((fit.terms[1].omega - 2.4).abs() < 1e-4);
    }

    #[test]
    fn flags_non_convergence() {
        // A box spectrum cannot be matched by one Lorentzian to 1e-8.
        let omegas: Vec<f64> = (0..200).map(|i| i as f64 * 0.01 + 1.0).collect();
        let values: Vec<f64> = omegas
            .iter()
            .map(|&w| if (w - 2.0).abs() < 0.3 { 1.0 } else { 0.05 })
            .collect();
        let fit = fit_lorentzians(&omegas, &values, 1, 1e-8).unwrap();
        assert!(!fit.converged);
        assert!(fit.residual > 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        let omegas: Vec<f64> = (0..100).map(|i| i as f64 * 0.01 + 1.0).collect();
        let mut values = vec![1.0; 100];
        values[3] = -1.0;
        assert!(fit_lorentzians(&omegas, &values, 3, 1e-6).is_err());
        assert!(fit_lorentzians(&omegas[..10], &values[..10], 3, 1e-6).is_err());
    }
}
