//! Takagi factorization of a complex symmetric matrix.
//!
//! A complex symmetric M admits M = sum_k sigma_k t_k t_k^T with sigma_k >= 0
//! and complex-orthonormal t_k (the singular vectors of an SVD are conjugate
//! pairs, reconciled here into a single mode set). Writing M = X + iY with X,
//! Y real symmetric, the vector t = p + iq satisfies `M conj(t) = sigma t`
//! iff `[[X, Y], [Y, -X]] (p; q) = sigma (p; q)`; the embedding is real
//! symmetric, so one self-adjoint eigendecomposition yields all modes, with
//! degenerate sigma handled natively. Eigenpairs come in (sigma, -sigma)
//! pairs; the positive half is kept.

use faer::{Mat, Side};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Takagi factorization: returns singular values (descending) and the
/// corresponding complex-orthonormal vectors. Vectors are returned only for
/// numerically nonzero singular values; each is sign-fixed so its
/// largest-magnitude component has nonnegative real part (positive imaginary
/// part breaking ties).
pub fn takagi(m: &Array2<Complex64>) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Parameter("takagi needs a square matrix".into()));
    }
    let max_asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)]).norm())
        .fold(0.0, f64::max);
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_asym > 1e-12 * scale.max(1e-300) {
        return Err(Error::Parameter(format!(
            "takagi needs a symmetric matrix (asymmetry {max_asym:.2e})"
        )));
    }

    // Real symmetric embedding [[X, Y], [Y, -X]].
    let embed = Mat::<f64>::from_fn(2 * n, 2 * n, |r, c| {
        let (i, bi) = (r % n, r / n);
        let (j, bj) = (c % n, c / n);
        match (bi, bj) {
            (0, 0) => m[(i, j)].re,
            (0, 1) | (1, 0) => m[(i, j)].im,
            (1, 1) => -m[(i, j)].re,
            _ => unreachable!(),
        }
    });
    let eig = embed
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solve(format!("eigendecomposition failed: {e:?}")))?;
    let s = eig.S();
    let u = eig.U();

    // Keep the nonnegative half, sorted descending.
    let mut order: Vec<usize> = (0..2 * n).filter(|&k| s[k] >= 0.0).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    // Exactly n values belong to the nonnegative half; zero eigenvalues can
    // tip either way numerically, so truncate deterministically.
    order.truncate(n);

    let sigma_max = order.first().map(|&k| s[k]).unwrap_or(0.0);
    let mut sigmas = Vec::with_capacity(n);
    let mut vectors = Vec::new();
    for &k in &order {
        let sigma = s[k].max(0.0);
        sigmas.push(sigma);
        if sigma <= 1e-14 * sigma_max {
            continue; // zero modes carry no weight and their vectors mix with the -0 half
        }
        let mut t: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(u[(i, k)], u[(n + i, k)]))
            .collect();
        let norm: f64 = t.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in t.iter_mut() {
            *v /= norm;
        }
        // Sign convention.
        let (mut best, mut best_mag) = (0usize, -1.0f64);
        for (i, v) in t.iter().enumerate() {
            if v.norm() > best_mag {
                best_mag = v.norm();
                best = i;
            }
        }
        let pivot = t[best];
        if pivot.re < 0.0 || (pivot.re == 0.0 && pivot.im < 0.0) {
            for v in t.iter_mut() {
                *v = -*v;
            }
        }
        vectors.push(t);
    }
    Ok((sigmas, vectors))
}
