//! Time-ordered correlation functions of an arbitrary finite-level localized
//! system under the Markovian approximation, via the effective non-Hermitian
//! Hamiltonian `H_eff = H_sys - (i gamma / 2) sigma^dag sigma`.
//!
//! The decay rate convention is `gamma = -2 V0^2 Im[G(x_d, x_d; omega0)]`,
//! matching the emitter module.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{expm, lu_solve};

/// A localized system with Hamiltonian `h_sys` and a single coupling
/// operator `sigma`; `ground` indexes the ground state, which must be an
/// eigenstate of `h_sys`.
#[derive(Debug, Clone)]
pub struct LevelSystem {
    pub h_sys: Array2<Complex64>,
    pub sigma: Array2<Complex64>,
    pub ground: usize,
}

impl LevelSystem {
    pub fn new(h_sys: Array2<Complex64>, sigma: Array2<Complex64>, ground: usize) -> Result<Self> {
        let sys = LevelSystem {
            h_sys,
            sigma,
            ground,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Two-level system: ground index 0, excited level at `omega0`,
    /// `sigma = |g><e|`.
    pub fn two_level(omega0: f64) -> Self {
        let mut h = Array2::from_elem((2, 2), Complex64::default());
        h[(1, 1)] = Complex64::new(omega0, 0.0);
        let mut sigma = Array2::from_elem((2, 2), Complex64::default());
        sigma[(0, 1)] = Complex64::new(1.0, 0.0);
        LevelSystem {
            h_sys: h,
            sigma,
            ground: 0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.h_sys.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if d == 0 || d > 32 {
            return Err(Error::Parameter(format!(
                "system dimension must be in [1, 32], got {d}"
            )));
        }
        if self.h_sys.ncols() != d || self.sigma.dim() != (d, d) {
            return Err(Error::Parameter("operator dimensions mismatch".into()));
        }
        if self.ground >= d {
            return Err(Error::Parameter("ground index out of range".into()));
        }
        for i in 0..d {
            for j in 0..d {
                if (self.h_sys[(i, j)] - self.h_sys[(j, i)].conj()).norm() > 1e-12 {
                    return Err(Error::Parameter("h_sys must be Hermitian".into()));
                }
            }
        }
        // |g> must be an eigenstate for the ground-energy phase handling.
        for i in 0..d {
            if i != self.ground && self.h_sys[(i, self.ground)].norm() > 1e-12 {
                return Err(Error::Parameter(
                    "ground index must label an eigenstate of h_sys".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn ground_energy(&self) -> f64 {
        self.h_sys[(self.ground, self.ground)].re
    }

    /// `H_eff = H_sys - (i gamma / 2) sigma^dag sigma`.
    pub fn effective_hamiltonian(&self, gamma: f64) -> Result<Array2<Complex64>> {
        if gamma < 0.0 {
            return Err(Error::Parameter("decay rate must be nonnegative".into()));
        }
        let d = self.dimension();
        let mut h = self.h_sys.clone();
        for i in 0..d {
            for j in 0..d {
                // (sigma^dag sigma)_{ij} = sum_k conj(sigma_{ki}) sigma_{kj}
                let mut ss = Complex64::default();
                for k in 0..d {
                    ss += self.sigma[(k, i)].conj() * self.sigma[(k, j)];
                }
                h[(i, j)] -= Complex64::new(0.0, 0.5 * gamma) * ss;
            }
        }
        Ok(h)
    }

    /// Parse from JSON with dense complex matrices as [re, im] pairs:
    /// `{"dimension": d, "h_sys": [[[re,im],..],..], "sigma": [..], "ground": g}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Raw {
            dimension: usize,
            h_sys: Vec<Vec<[f64; 2]>>,
            sigma: Vec<Vec<[f64; 2]>>,
            ground: usize,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let to_matrix = |rows: &Vec<Vec<[f64; 2]>>, name: &str| -> Result<Array2<Complex64>> {
            if rows.len() != raw.dimension || rows.iter().any(|r| r.len() != raw.dimension) {
                return Err(Error::Format(format!(
                    "{name} must be a {0}x{0} matrix",
                    raw.dimension
                )));
            }
            Ok(Array2::from_shape_fn((raw.dimension, raw.dimension), |(i, j)| {
                Complex64::new(rows[i][j][0], rows[i][j][1])
            }))
        };
        LevelSystem::new(
            to_matrix(&raw.h_sys, "h_sys")?,
            to_matrix(&raw.sigma, "sigma")?,
            raw.ground,
        )
    }
}

fn apply(op: &Array2<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let d = op.nrows();
    (0..d)
        .map(|i| (0..d).map(|j| op[(i, j)] * v[j]).sum())
        .collect()
}

/// Ground-state expectation of the time-ordered operator product
/// `<g| T[prod_i c_i(t_i)] |g>` under the Markovian effective evolution.
///
/// Operators are sorted by time; at coincident times the written order of
/// the input list is kept (so listing `[sigma(t), sigma_dag(t)]` applies
/// `sigma_dag` first, i.e. normal order with daggered operators to the
/// right).
pub fn correlation(
    sys: &LevelSystem,
    gamma: f64,
    ops: &[(Array2<Complex64>, f64)],
) -> Result<Complex64> {
    sys.validate()?;
    if ops.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let d = sys.dimension();
    for (op, t) in ops {
        if op.dim() != (d, d) {
            return Err(Error::Parameter("operator dimension mismatch".into()));
        }
        if !t.is_finite() {
            return Err(Error::Parameter("operator times must be finite".into()));
        }
    }
    let h_eff = sys.effective_hamiltonian(gamma)?;

    // Application order: ascending time; ties keep the written product order
    // (the later list entry acts first).
    let mut order: Vec<usize> = (0..ops.len()).collect();
    order.sort_by(|&a, &b| {
        ops[a].1
            .partial_cmp(&ops[b].1)
            .unwrap()
            .then(b.cmp(&a))
    });

    let mut state = vec![Complex64::default(); d];
    state[sys.ground] = Complex64::new(1.0, 0.0);
    let mut t_prev = ops[order[0]].1;
    for &idx in &order {
        let (op, t) = &ops[idx];
        if *t > t_prev {
            let dt = *t - t_prev;
            let prop = expm(&h_eff.mapv(|v| v * Complex64::new(0.0, -dt)))?;
            state = apply(&prop, &state);
            t_prev = *t;
        }
        state = apply(op, &state);
    }

    let t_span = ops[order[ops.len() - 1]].1 - ops[order[0]].1;
    let phase = Complex64::from_polar(1.0, sys.ground_energy() * t_span);
    Ok(phase * state[sys.ground])
}

/// Frequency-domain single-excitation response
/// `<g| sigma [i (H_eff - E_g - nu)]^{-1} sigma^dag |g>`;
/// reduces to the Weisskopf-Wigner `G0` for the two-level system.
pub fn green_single(sys: &LevelSystem, gamma: f64, nu: f64) -> Result<Complex64> {
    sys.validate()?;
    let d = sys.dimension();
    let h_eff = sys.effective_hamiltonian(gamma)?;
    let shift = Complex64::new(sys.ground_energy() + nu, 0.0);
    let a = Array2::from_shape_fn((d, d), |(i, j)| {
        let mut v = Complex64::i() * h_eff[(i, j)];
        if i == j {
            v -= Complex64::i() * shift;
        }
        v
    });
    // rhs = sigma^dag |g>
    let mut rhs: Vec<Complex64> = (0..d).map(|i| sys.sigma[(sys.ground, i)].conj()).collect();
    lu_solve(a, &mut rhs)?;
    let out = apply(&sys.sigma, &rhs);
    Ok(out[sys.ground])
}
