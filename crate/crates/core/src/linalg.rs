//! Small dense complex linear-algebra helpers: LU solve with partial
//! pivoting and a Pade scaling-and-squaring matrix exponential. Sized for the
//! tiny systems that appear in the emitter and level-system modules.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solve `a x = b` in place (`b` becomes `x`). `a` is consumed as workspace.
pub(crate) fn lu_solve(mut a: Array2<Complex64>, b: &mut [Complex64]) -> Result<()> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (mut pivot_row, mut pivot_mag) = (k, a[(k, k)].norm());
        for r in k + 1..n {
            let m = a[(r, k)].norm();
            if m > pivot_mag {
                pivot_row = r;
                pivot_mag = m;
            }
        }
        if pivot_mag == 0.0 {
            return Err(Error::Solve("singular matrix in dense LU".into()));
        }
        if pivot_row != k {
            for c in 0..n {
                let tmp = a[(k, c)];
                a[(k, c)] = a[(pivot_row, c)];
                a[(pivot_row, c)] = tmp;
            }
            perm.swap(k, pivot_row);
        }
        let piv = a[(k, k)];
        for r in k + 1..n {
            let f = a[(r, k)] / piv;
            a[(r, k)] = f;
            for c in k + 1..n {
                let akc = a[(k, c)];
                a[(r, c)] -= f * akc;
            }
        }
    }

    let permuted: Vec<Complex64> = perm.iter().map(|&i| b[i]).collect();
    b.copy_from_slice(&permuted);
    // Forward substitution (unit lower triangle).
    for k in 0..n {
        for c in 0..k {
            let f = a[(k, c)];
            let bc = b[c];
            b[k] -= f * bc;
        }
    }
    // Back substitution.
    for k in (0..n).rev() {
        for c in k + 1..n {
            let f = a[(k, c)];
            let bc = b[c];
            b[k] -= f * bc;
        }
        b[k] /= a[(k, k)];
    }
    Ok(())
}

fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let m = b.ncols();
    let k = a.ncols();
    let mut out = Array2::from_elem((n, m), Complex64::default());
    for i in 0..n {
        for l in 0..k {
            let ail = a[(i, l)];
            if ail == Complex64::default() {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += ail * b[(l, j)];
            }
        }
    }
    out
}

fn one_norm(a: &Array2<Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential via Pade(13) with scaling and squaring.
pub(crate) fn expm(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    const THETA_13: f64 = 5.371_920_351_148_152;
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = Complex64::new(2f64.powi(-s), 0.0);
    let a = a.mapv(|v| v * scale);

    // Pade(13) coefficients.
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];

    let eye = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    });
    let a2 = matmul(&a, &a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a2, &a4);

    let lin = |c0: f64, c2: &Array2<Complex64>, w2: f64, c4: &Array2<Complex64>, w4: f64, c6: &Array2<Complex64>, w6: f64| {
        let mut out = eye.mapv(|v| v * c0);
        out = out + c2.mapv(|v| v * w2) + c4.mapv(|v| v * w4) + c6.mapv(|v| v * w6);
        out
    };

    // u = a (a6 (b13 a6 + b11 a4 + b9 a2) + b7 a6 + b5 a4 + b3 a2 + b1 I)
    let inner_u = a6.mapv(|v| v * B[13]) + a4.mapv(|v| v * B[11]) + a2.mapv(|v| v * B[9]);
    let u = matmul(
        &a,
        &(matmul(&a6, &inner_u) + lin(B[1], &a2, B[3], &a4, B[5], &a6, B[7])),
    );
    // v = a6 (b12 a6 + b10 a4 + b8 a2) + b6 a6 + b4 a4 + b2 a2 + b0 I
    let inner_v = a6.mapv(|v| v * B[12]) + a4.mapv(|v| v * B[10]) + a2.mapv(|v| v * B[8]);
    let v = matmul(&a6, &inner_v) + lin(B[0], &a2, B[2], &a4, B[4], &a6, B[6]);

    // Solve (v - u) r = (v + u).
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = Array2::from_elem((n, n), Complex64::default());
    for j in 0..n {
        let mut col: Vec<Complex64> = (0..n).map(|i| rhs[(i, j)]).collect();
        lu_solve(lhs.clone(), &mut col)?;
        for i in 0..n {
            r[(i, j)] = col[i];
        }
    }

    let mut out = r;
    for _ in 0..s {
        out = matmul(&out, &out);
    }
    Ok(out)
}
