//! Non-Markovian single-excitation dynamics of the two-level emitter.
//!
//! The bath enters only through `-Im[G(x_d, x_d; omega)]`, approximated as a
//! sum of Lorentzians. The excited-state amplitude then obeys the closed
//! rational form
//!
//! ```text
//! A_e(omega) = [ i(omega0 - omega)
//!              + V0^2 sum_n (p_n/gamma_n) / (i(omega_n - omega) + gamma_n) ]^-1
//! ```
//!
//! equivalently the linear ODE system in {A_e, xi_n}. The Weisskopf-Wigner
//! limit replaces this with a single complex Lorentzian of width
//! `gamma = -2 V0^2 Im[G(x_d, x_d; omega0)]`.

mod fit;
pub(crate) mod poly;

pub use fit::fit_lorentzians;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::lu_solve;

/// Emitter transition frequency, coupling constant, and position.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmitterParams {
    pub omega0: f64,
    pub v0: f64,
    pub x_d: [f64; 2],
}

impl EmitterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) {
            return Err(Error::Parameter(format!(
                "transition frequency must be positive, got {}",
                self.omega0
            )));
        }
        if self.v0 < 0.0 {
            return Err(Error::Parameter(format!(
                "coupling constant must be nonnegative, got {}",
                self.v0
            )));
        }
        Ok(())
    }
}

/// One Lorentzian term `p / ((omega - omega_n)^2 + gamma_n^2)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LorentzianTerm {
    pub p: f64,
    pub omega: f64,
    pub gamma: f64,
}

/// Sum-of-Lorentzians approximation of `-Im[G(x_d, x_d; omega)]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LorentzianFit {
    pub terms: Vec<LorentzianTerm>,
    /// Frequency window the fit was performed on.
    pub window: [f64; 2],
    /// Relative L2 residual over the fit window.
    pub residual: f64,
    pub converged: bool,
}

impl LorentzianFit {
    /// Model value `-Im[G]` at `omega`.
    pub fn neg_im_g(&self, omega: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.p / ((omega - t.omega).powi(2) + t.gamma * t.gamma))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.iter().any(|t| t.p <= 0.0 || t.gamma <= 0.0) {
            return Err(Error::Parameter(
                "Lorentzian weights and widths must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Validity of extending the spectral integral to the whole real line:
    /// every term should satisfy `omega_n / gamma_n >> 1`.
    pub fn is_narrowband(&self) -> bool {
        self.terms.iter().all(|t| t.omega > 10.0 * t.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ResponseMode {
    NonMarkovian(LorentzianFit),
    WeisskopfWigner { gamma: f64 },
}

/// Single-excitation response of the emitter in its bath. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterResponse {
    pub params: EmitterParams,
    mode: ResponseMode,
}

impl EmitterResponse {
    /// Full non-Markovian response from a fitted bath spectral function.
    pub fn non_markovian(params: EmitterParams, fit: LorentzianFit) -> Result<Self> {
        params.validate()?;
        fit.validate()?;
        Ok(EmitterResponse {
            params,
            mode: ResponseMode::NonMarkovian(fit),
        })
    }

    /// Weisskopf-Wigner response with `gamma = 2 V0^2 * (-Im[G(x_d, x_d; omega0)])`.
    pub fn weisskopf_wigner(params: EmitterParams, neg_im_g_at_omega0: f64) -> Result<Self> {
        params.validate()?;
        if neg_im_g_at_omega0 < 0.0 {
            return Err(Error::Parameter(
                "-Im[G] must be nonnegative (passivity)".into(),
            ));
        }
        Ok(EmitterResponse {
            params,
            mode: ResponseMode::WeisskopfWigner {
                gamma: 2.0 * params.v0 * params.v0 * neg_im_g_at_omega0,
            },
        })
    }

    /// Weisskopf-Wigner response with the decay rate given directly.
    pub fn weisskopf_wigner_with_gamma(params: EmitterParams, gamma: f64) -> Result<Self> {
        params.validate()?;
        if gamma < 0.0 {
            return Err(Error::Parameter("decay rate must be nonnegative".into()));
        }
        Ok(EmitterResponse {
            params,
            mode: ResponseMode::WeisskopfWigner { gamma },
        })
    }

    /// Decay rate in Weisskopf-Wigner mode.
    pub fn ww_gamma(&self) -> Option<f64> {
        match &self.mode {
            ResponseMode::WeisskopfWigner { gamma } => Some(*gamma),
            ResponseMode::NonMarkovian(_) => None,
        }
    }

    pub fn fit(&self) -> Option<&LorentzianFit> {
        match &self.mode {
            ResponseMode::NonMarkovian(fit) => Some(fit),
            ResponseMode::WeisskopfWigner { .. } => None,
        }
    }

    /// Frequency-domain response `G0(omega) = A_e(omega)`.
    ///
    /// With `V0 = 0` the response has a real pole at `omega0`; the division
    /// then yields an infinity, which is the documented signal.
    pub fn response_freq(&self, omega: f64) -> Complex64 {
        let p = &self.params;
        match &self.mode {
            ResponseMode::WeisskopfWigner { gamma } => {
                1.0 / Complex64::new(0.5 * gamma, p.omega0 - omega)
            }
            ResponseMode::NonMarkovian(fit) => {
                let mut denom = Complex64::new(0.0, p.omega0 - omega);
                for t in &fit.terms {
                    denom += p.v0 * p.v0 * (t.p / t.gamma)
                        / Complex64::new(t.gamma, t.omega - omega);
                }
                1.0 / denom
            }
        }
    }

    /// Excited-state amplitude `A_e(t)` on a time grid starting at 0, where
    /// `A_e(0) = 1`.
    ///
    /// The coupled linear ODE system {A_e, xi_n} is integrated by fixed-step
    /// RK4 in the frame rotating at `omega0`, with automatic step halving
    /// until two refinements agree to `1e-10` relative.
    pub fn response_time(&self, t_grid: &[f64]) -> Result<Vec<Complex64>> {
        if t_grid.is_empty() || t_grid[0] != 0.0 {
            return Err(Error::Parameter("time grid must start at 0".into()));
        }
        if t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("time grid must be increasing".into()));
        }
        let p = &self.params;
        match &self.mode {
            ResponseMode::WeisskopfWigner { gamma } => Ok(t_grid
                .iter()
                .map(|&t| Complex64::from_polar((-0.5 * gamma * t).exp(), -p.omega0 * t))
                .collect()),
            ResponseMode::NonMarkovian(fit) => {
                let coarse = integrate_rotating_frame(p, fit, t_grid, 1)?;
                let mut refine = 2usize;
                let mut prev = coarse;
                for _ in 0..14 {
                    let next = integrate_rotating_frame(p, fit, t_grid, refine)?;
                    let err = prev
                        .iter()
                        .zip(&next)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max);
                    if err < 1e-10 {
                        return Ok(next);
                    }
                    prev = next;
                    refine *= 2;
                }
                Err(Error::Solve(
                    "time integration failed to converge under step halving".into(),
                ))
            }
        }
    }

    /// Pole expansion of the rational response: `A_e(t) = sum_k c_k e^{-i s_k t}`.
    pub fn pole_expansion(&self) -> Result<PoleExpansion> {
        let p = &self.params;
        match &self.mode {
            ResponseMode::WeisskopfWigner { gamma } => Ok(PoleExpansion {
                poles: vec![Complex64::new(p.omega0, -0.5 * gamma)],
                coefficients: vec![Complex64::new(1.0, 0.0)],
            }),
            ResponseMode::NonMarkovian(fit) => {
                let (num, den) = rational_coefficients(p, fit);
                let poles = poly::roots(&den)?;
                let dden = poly::derivative(&den);
                let coefficients: Vec<Complex64> = poles
                    .iter()
                    .map(|&s| -Complex64::i() * poly::eval(&num, s) / poly::eval(&dden, s))
                    .collect();
                let expansion = PoleExpansion {
                    poles,
                    coefficients,
                };
                // A_e(0) = 1 pins the expansion; failure means ill-conditioned
                // roots (e.g. near-degenerate poles).
                let total: Complex64 = expansion.coefficients.iter().sum();
                if (total - 1.0).norm() > 1e-7 {
                    return Err(Error::Solve(format!(
                        "pole expansion inconsistent: sum of coefficients = {total}"
                    )));
                }
                Ok(expansion)
            }
        }
    }

    /// Two-excitation kernel `Gamma(E) = int_0^inf A_e^2(t) e^{iEt} dt`.
    ///
    /// Evaluated in closed form from the pole expansion; Weisskopf-Wigner
    /// mode uses `1/(i(2 omega0 - E) + gamma)`. Near-degenerate poles fall
    /// back to the confluence-safe resolvent formula.
    pub fn gamma_kernel(&self, e_total: f64) -> Result<Complex64> {
        let p = &self.params;
        match &self.mode {
            ResponseMode::WeisskopfWigner { gamma } => {
                Ok(1.0 / Complex64::new(*gamma, 2.0 * p.omega0 - e_total))
            }
            ResponseMode::NonMarkovian(fit) => {
                match self.pole_expansion() {
                    Ok(expansion) if expansion.well_separated() => {
                        Ok(expansion.gamma_kernel(e_total))
                    }
                    // Confluent branch: exact for repeated poles.
                    _ => gamma_kernel_resolvent(p, fit, e_total),
                }
            }
        }
    }
}

/// Poles and coefficients of `A_e(t) = sum_k c_k e^{-i s_k t}`, i.e.
/// `A_e(omega) = sum_k i c_k / (omega - s_k)`.
#[derive(Debug, Clone)]
pub struct PoleExpansion {
    pub poles: Vec<Complex64>,
    pub coefficients: Vec<Complex64>,
}

impl PoleExpansion {
    pub fn response_freq(&self, omega: f64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.coefficients)
            .map(|(&s, &c)| Complex64::i() * c / (Complex64::new(omega, 0.0) - s))
            .sum()
    }

    pub fn response_time(&self, t: f64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.coefficients)
            .map(|(&s, &c)| c * (-Complex64::i() * s * t).exp())
            .sum()
    }

    /// `Gamma(E) = sum_{k,l} i c_k c_l / (E - s_k - s_l)`.
    pub fn gamma_kernel(&self, e_total: f64) -> Complex64 {
        let mut acc = Complex64::default();
        for (&sk, &ck) in self.poles.iter().zip(&self.coefficients) {
            for (&sl, &cl) in self.poles.iter().zip(&self.coefficients) {
                acc += Complex64::i() * ck * cl / (Complex64::new(e_total, 0.0) - sk - sl);
            }
        }
        acc
    }

    /// All poles strictly in the lower half-plane (causality).
    pub fn is_causal(&self) -> bool {
        self.poles.iter().all(|s| s.im < 0.0)
    }

    fn well_separated(&self) -> bool {
        let scale = self
            .poles
            .iter()
            .map(|s| s.norm())
            .fold(1e-30, f64::max);
        for (i, a) in self.poles.iter().enumerate() {
            for b in &self.poles[i + 1..] {
                if (a - b).norm() < 1e-8 * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Numerator and denominator polynomials of `A_e(omega)` in `omega`:
/// `A_e = Q / N` with `Q = prod_n (i(omega_n - omega) + gamma_n)`.
fn rational_coefficients(
    params: &EmitterParams,
    fit: &LorentzianFit,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let i = Complex64::i();
    let mut q = vec![Complex64::new(1.0, 0.0)];
    for t in &fit.terms {
        q = poly::mul(&q, &[Complex64::new(t.gamma, t.omega), -i]);
    }
    // N = i(omega0 - omega) Q + V0^2 sum_n (p_n/gamma_n) prod_{m != n} (...)
    let mut n = poly::mul(&[i * params.omega0, -i], &q);
    for (k, t) in fit.terms.iter().enumerate() {
        let mut partial = vec![Complex64::new(1.0, 0.0)];
        for (m, u) in fit.terms.iter().enumerate() {
            if m != k {
                partial = poly::mul(&partial, &[Complex64::new(u.gamma, u.omega), -i]);
            }
        }
        let weight = Complex64::new(params.v0 * params.v0 * t.p / t.gamma, 0.0);
        n = poly::add(&n, &poly::scale(&partial, weight));
    }
    (q, n)
}

/// ODE matrix of the {A_e, xi_n} system in the frame rotating at `omega0`.
fn rotating_frame_matrix(params: &EmitterParams, fit: &LorentzianFit) -> Array2<Complex64> {
    let m = fit.terms.len();
    let mut mat = Array2::from_elem((m + 1, m + 1), Complex64::default());
    for (n, t) in fit.terms.iter().enumerate() {
        mat[(0, n + 1)] = Complex64::new(-params.v0 * params.v0 / std::f64::consts::PI, 0.0);
        mat[(n + 1, 0)] = Complex64::new(std::f64::consts::PI * t.p / t.gamma, 0.0);
        mat[(n + 1, n + 1)] = Complex64::new(-t.gamma, -(t.omega - params.omega0));
    }
    mat
}

fn integrate_rotating_frame(
    params: &EmitterParams,
    fit: &LorentzianFit,
    t_grid: &[f64],
    refine: usize,
) -> Result<Vec<Complex64>> {
    let mat = rotating_frame_matrix(params, fit);
    let dim = mat.nrows();
    let apply = |y: &[Complex64]| -> Vec<Complex64> {
        (0..dim)
            .map(|r| (0..dim).map(|c| mat[(r, c)] * y[c]).sum())
            .collect()
    };

    // Base internal step from the slow-dynamics scales.
    let mut rate: f64 = 1e-3;
    for t in &fit.terms {
        rate = rate
            .max((t.omega - params.omega0).abs() + t.gamma)
            .max((params.v0 * params.v0 * t.p / t.gamma).sqrt());
    }
    let base_h = 0.05 / rate;

    let mut y = vec![Complex64::default(); dim];
    y[0] = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y[0]);
    let mut t_now = 0.0;

    for &t_next in &t_grid[1..] {
        let span = t_next - t_now;
        let steps = ((span / base_h).ceil() as usize).max(1) * refine;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = apply(&y);
            let y2: Vec<Complex64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
            let k2 = apply(&y2);
            let y3: Vec<Complex64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
            let k3 = apply(&y3);
            let y4: Vec<Complex64> = y.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
            let k4 = apply(&y4);
            for i in 0..dim {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Solve("time integration diverged".into()));
        }
        t_now = t_next;
        // Undo the rotating frame for the reported amplitude.
        out.push(y[0] * Complex64::from_polar(1.0, -params.omega0 * t_next));
    }
    Ok(out)
}

/// Confluence-safe route for `Gamma(E)`:
/// `A_e(t) = e1^T e^{Mt} e1` for the ODE matrix `M`, so
/// `Gamma(E) = -(e1 (x) e1)^T (M (+) M + iE)^{-1} (e1 (x) e1)`
/// with `M (+) M` the Kronecker sum. Exact for any pole multiplicity.
fn gamma_kernel_resolvent(
    params: &EmitterParams,
    fit: &LorentzianFit,
    e_total: f64,
) -> Result<Complex64> {
    let rot = rotating_frame_matrix(params, fit);
    let dim = rot.nrows();
    // Back to the lab frame: M = rot - i omega0 I.
    let mut m = rot;
    for k in 0..dim {
        m[(k, k)] += Complex64::new(0.0, -params.omega0);
    }
    let nn = dim * dim;
    let mut kron = Array2::from_elem((nn, nn), Complex64::default());
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                // (M (x) I): block (a,c) scaled by M[a,c]; (I (x) M): diag blocks.
                kron[(a * dim + b, c * dim + b)] += m[(a, c)];
                kron[(a * dim + b, a * dim + c)] += m[(b, c)];
            }
        }
    }
    for k in 0..nn {
        kron[(k, k)] += Complex64::new(0.0, e_total);
    }
    let mut rhs = vec![Complex64::default(); nn];
    rhs[0] = Complex64::new(1.0, 0.0); // e1 (x) e1
    lu_solve(kron, &mut rhs)?;
    Ok(-rhs[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ww_response(omega0: f64, gamma: f64) -> EmitterResponse {
        EmitterResponse::weisskopf_wigner_with_gamma(
            EmitterParams {
                omega0,
                v0: (2.0 * gamma).sqrt(), // 2D homogeneous convention gamma = V0^2/2
                x_d: [0.0, 0.0],
            },
            gamma,
        )
        .unwrap()
    }

    fn single_term_fit(p: f64, omega: f64, gamma: f64) -> LorentzianFit {
        LorentzianFit {
            terms: vec![LorentzianTerm { p, omega, gamma }],
            window: [omega - 1.0, omega + 1.0],
            residual: 0.0,
            converged: true,
        }
    }

    #[test]
    fn decoupled_emitter_response() {
        let params = EmitterParams {
            omega0: 2.0,
            v0: 0.0,
            x_d: [0.0, 0.0],
        };
        let resp =
            EmitterResponse::non_markovian(params, single_term_fit(1.0, 2.2, 0.01)).unwrap();
        let omega = 2.5;
        let expect = 1.0 / Complex64::new(0.0, 2.0 - omega);
        assert!((resp.response_freq(omega) - expect).norm() < 1e-14);
        // |A_e(t)| = 1 for all t when decoupled.
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
        let a = resp.response_time(&t).unwrap();
        for v in a {
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ww_resonance_and_decay() {
        let resp = ww_response(2.0, 0.05);
        let at_res = resp.response_freq(2.0);
        assert!((at_res - Complex64::new(2.0 / 0.05, 0.0)).norm() < 1e-12);

        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.5).collect();
        let a = resp.response_time(&t).unwrap();
        for (&ti, v) in t.iter().zip(&a) {
            let expect = Complex64::from_polar((-0.025 * ti).exp(), -2.0 * ti);
            assert!((v - expect).norm() < 1e-12);
        }

        // Gamma(2 omega0) = 1/gamma.
        let g = resp.gamma_kernel(4.0).unwrap();
        assert!((g - Complex64::new(20.0, 0.0)).norm() < 1e-12);
    }

    /// WW closed form vs the generic pole-expansion pipeline on the
    /// equivalent one-pole rational.
    #[test]
    fn ww_gamma_matches_pole_pipeline() {
        let (omega0, gamma) = (2.0, 0.07);
        let resp = ww_response(omega0, gamma);
        let expansion = resp.pole_expansion().unwrap();
        for k in 0..40 {
            let e = 2.0 * omega0 + (k as f64 - 20.0) * 0.05 * gamma;
            let a = resp.gamma_kernel(e).unwrap();
            let b = expansion.gamma_kernel(e);
            assert!((a - b).norm() / a.norm() < 1e-10, "E={e}: {a} vs {b}");
        }
    }

    /// Gamma from partial fractions vs the Kronecker-resolvent route
    /// (independent algebra, exact for repeated poles).
    #[test]
    fn gamma_matches_resolvent_route() {
        let params = EmitterParams {
            omega0: 2.2,
            v0: 0.25,
            x_d: [0.0, 0.0],
        };
        let fit = LorentzianFit {
            terms: vec![
                LorentzianTerm {
                    p: 0.4,
                    omega: 2.15,
                    gamma: 0.02,
                },
                LorentzianTerm {
                    p: 0.2,
                    omega: 2.3,
                    gamma: 0.04,
                },
            ],
            window: [1.8, 2.6],
            residual: 0.0,
            converged: true,
        };
        let resp = EmitterResponse::non_markovian(params, fit.clone()).unwrap();
        for k in 0..20 {
            let e = 2.0 * params.omega0 + (k as f64 - 10.0) * 0.02;
            let a = resp.gamma_kernel(e).unwrap();
            let b = gamma_kernel_resolvent(&params, &fit, e).unwrap();
            assert!((a - b).norm() / a.norm() < 1e-9, "E={e}: {a} vs {b}");
        }
    }

    #[test]
    fn pole_expansion_reproduces_rational_form() {
        let params = EmitterParams {
            omega0: 2.2,
            v0: 0.3,
            x_d: [0.0, 0.0],
        };
        let resp =
            EmitterResponse::non_markovian(params, single_term_fit(0.5, 2.25, 0.03)).unwrap();
        let expansion = resp.pole_expansion().unwrap();
        assert!(expansion.is_causal());
        for k in 0..30 {
            let w = 2.0 + k as f64 * 0.02;
            let direct = resp.response_freq(w);
            let via_poles = expansion.response_freq(w);
            assert!((direct - via_poles).norm() / direct.norm() < 1e-9);
        }
    }

    /// Strong coupling to one narrow mode splits |A_e(omega)| into two peaks.
    #[test]
    fn polariton_splitting_appears_at_strong_coupling() {
        let params = EmitterParams {
            omega0: 2.2,
            v0: 0.6,
            x_d: [0.0, 0.0],
        };
        let resp =
            EmitterResponse::non_markovian(params, single_term_fit(0.3, 2.2, 0.01)).unwrap();
        let n = 2001;
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let w = 1.6 + 1.2 * i as f64 / (n - 1) as f64;
                resp.response_freq(w).norm()
            })
            .collect();
        let mut peaks = 0;
        for i in 1..n - 1 {
            if values[i] > values[i - 1] && values[i] > values[i + 1] {
                peaks += 1;
            }
        }
        assert!(peaks >= 2, "expected polariton splitting, found {peaks} peak(s)");
    }

    /// One-sided Fourier transform of the integrated A_e(t) matches the
    /// rational A_e(omega) (light version of the acceptance check).
    #[test]
    fn time_and_frequency_domains_are_consistent() {
        let params = EmitterParams {
            omega0: 2.2,
            v0: 0.35,
            x_d: [0.0, 0.0],
        };
        let resp =
            EmitterResponse::non_markovian(params, single_term_fit(0.5, 2.25, 0.05)).unwrap();

        // Slowest decay sets the needed horizon.
        let expansion = resp.pole_expansion().unwrap();
        let min_decay = expansion
            .poles
            .iter()
            .map(|s| -s.im)
            .fold(f64::INFINITY, f64::min);
        let t_max = 25.0 / min_decay;
        let n = 1 << 16;
        let t_grid: Vec<f64> = (0..=n).map(|i| t_max * i as f64 / n as f64).collect();
        let a = resp.response_time(&t_grid).unwrap();

        for k in 0..5 {
            let w = params.omega0 + (k as f64 - 2.0) * 0.05;
            // Simpson quadrature of int_0^T A_e(t) e^{i w t} dt.
            let h = t_max / n as f64;
            let f = |i: usize| a[i] * Complex64::from_polar(1.0, w * t_grid[i]);
            let mut acc = f(0) + f(n);
            for i in 1..n {
                acc += f(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let quad = acc * h / 3.0;
            let direct = resp.response_freq(w);
            assert!(
                (quad - direct).norm() / direct.norm() < 1e-6,
                "w={w}: {quad} vs {direct}"
            );
        }
    }

    #[test]
    fn amplitude_is_bounded_by_one() {
        let params = EmitterParams {
            omega0: 2.2,
            v0: 0.5,
            x_d: [0.0, 0.0],
        };
        let resp =
            EmitterResponse::non_markovian(params, single_term_fit(0.4, 2.18, 0.02)).unwrap();
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 0.25).collect();
        let a = resp.response_time(&t).unwrap();
        for v in a {
            assert!(v.norm() <= 1.0 + 1e-9);
        }
    }

    /// As V0 -> 0 the non-Markovian response approaches the WW Lorentzian
    /// with gamma = 2 V0^2 (-Im[G](omega0)); the L2 distance over a +-10
    /// gamma window must shrink monotonically under V0 halvings.
    #[test]
    fn weak_coupling_approaches_ww() {
        let fit = single_term_fit(0.5, 2.3, 0.08);
        let omega0 = 2.2;
        let mut distances = Vec::new();
        for halvings in 0..3 {
            let v0 = 0.2 / 2f64.powi(halvings);
            let params = EmitterParams {
                omega0,
                v0,
                x_d: [0.0, 0.0],
            };
            let nm = EmitterResponse::non_markovian(params, fit.clone()).unwrap();
            let ww = EmitterResponse::weisskopf_wigner(params, fit.neg_im_g(omega0)).unwrap();
            let gamma = ww.ww_gamma().unwrap();
            let n = 801;
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let w = omega0 + (i as f64 / (n - 1) as f64 - 0.5) * 20.0 * gamma;
                let d = (nm.response_freq(w) - ww.response_freq(w)).norm_sqr();
                num += d;
                den += ww.response_freq(w).norm_sqr();
            }
            distances.push((num / den).sqrt());
        }
        assert!(
            distances[0] > distances[1] && distances[1] > distances[2],
            "not monotone: {distances:?}"
        );
    }

    #[test]
    fn serde_round_trip_matches_schema() {
        let fit = single_term_fit(0.5, 2.25, 0.05);
        let json = serde_json::to_value(&fit).unwrap();
        assert!(json["terms"][0]["p"].is_number());
        assert!(json["terms"][0]["omega"].is_number());
        assert!(json["terms"][0]["gamma"].is_number());
        assert!(json["window"].is_array());
        assert!(json["residual"].is_number());
        let back: LorentzianFit = serde_json::from_value(json).unwrap();
        assert_eq!(back, fit);
    }
}
