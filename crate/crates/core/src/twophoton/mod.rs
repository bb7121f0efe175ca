//! Two-photon output kernels and their Schmidt analysis.
//!
//! The connected two-photon wave packet produced by a Gaussian input factors
//! as `K(x1, x2) = b(x1) b(x2) q(w1 + w2)` over far-field coordinates
//! `x = (theta, omega)`: the angular dependence at fixed frequency is the
//! dipole far-field profile, so the kernel is stored in this factored form
//! and the Schmidt problem reduces exactly to the frequency axis (the
//! composite kernel at the default grids would not fit in memory, and the
//! reduction is lossless).

mod schmidt;

pub use schmidt::takagi;

use ndarray::Array2;
use num_complex::Complex64;

use crate::emitter::EmitterResponse;
use crate::error::{Error, Result};
use crate::fdfd::{self, Contour};
use crate::media::PermittivityMap;
use crate::smatrix::BathFields;

/// Gaussian two-photon input pulse along `dir` with center `omega0_pulse`
/// and duration `tau` (spectral width ~ 1/tau).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianInput {
    pub dir: [f64; 2],
    pub omega0_pulse: f64,
    pub tau: f64,
}

impl GaussianInput {
    pub fn along_x(omega0_pulse: f64, tau: f64) -> Self {
        GaussianInput {
            dir: [1.0, 0.0],
            omega0_pulse,
            tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Parameter("pulse duration must be positive".into()));
        }
        if self.omega0_pulse - 5.0 / self.tau <= 0.0 {
            return Err(Error::Parameter(
                "spectral window [omega0 - 5/tau, omega0 + 5/tau] must be positive".into(),
            ));
        }
        let norm = (self.dir[0] * self.dir[0] + self.dir[1] * self.dir[1]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter("input direction must be a unit vector".into()));
        }
        Ok(())
    }
}

/// Dipole far-field amplitudes `F_G(theta; omega)` tabulated on a coarse
/// frequency grid, with linear interpolation in frequency.
#[derive(Debug, Clone)]
pub struct FarFieldTable {
    pub omegas: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Amplitudes indexed `[(i_omega, i_theta)]`.
    pub amp: Array2<Complex64>,
    /// Largest relative interpolation error observed at mid-point check
    /// solves, when performed.
    pub interpolation_error: Option<f64>,
}

impl FarFieldTable {
    /// Tabulate from any bath field provider (used with analytic baths).
    pub fn from_bath(
        bath: &impl BathFields,
        omegas: Vec<f64>,
        n_theta: usize,
    ) -> Result<Self> {
        let thetas: Vec<f64> = (0..n_theta)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_theta as f64)
            .collect();
        let mut amp = Array2::from_elem((omegas.len(), n_theta), Complex64::default());
        for (i, &w) in omegas.iter().enumerate() {
            for (j, &t) in thetas.iter().enumerate() {
                amp[(i, j)] = bath.dipole_far_amplitude(t, w)?;
            }
        }
        Ok(FarFieldTable {
            omegas,
            thetas,
            amp,
            interpolation_error: None,
        })
    }

    /// Tabulate from solver sweeps of the dipole field on `map`.
    /// When `verify_midpoints` is set, three extra solves at sweep midpoints
    /// record the worst relative interpolation error.
    pub fn from_sweep(
        map: &PermittivityMap,
        x_d: [f64; 2],
        omegas: Vec<f64>,
        n_theta: usize,
        contour: Option<Contour>,
        verify_midpoints: bool,
    ) -> Result<Self> {
        use rayon::prelude::*;
        if omegas.len() < 2 {
            return Err(Error::Parameter("sweep needs at least 2 frequencies".into()));
        }
        let site = crate::media::emitter_site(map, x_d)?;
        let contour = contour.unwrap_or_else(|| Contour::default_for(&map.grid));
        let solve_one = |w: f64| -> Result<Vec<Complex64>> {
            let solver = fdfd::factorized(map, w)?;
            let sol = solver.solve_green(site.ix, site.iy)?;
            Ok(fdfd::far_field(&sol, map, contour, n_theta)?.amplitude)
        };

        let rows: Result<Vec<Vec<Complex64>>> =
            omegas.par_iter().map(|&w| solve_one(w)).collect();
        let rows = rows?;
        let thetas: Vec<f64> = (0..n_theta)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_theta as f64)
            .collect();
        let mut amp = Array2::from_elem((omegas.len(), n_theta), Complex64::default());
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                amp[(i, j)] = v;
            }
        }
        let mut table = FarFieldTable {
            omegas,
            thetas,
            amp,
            interpolation_error: None,
        };

        if verify_midpoints {
            let n = table.omegas.len();
            let picks = [n / 4, n / 2, 3 * n / 4];
            let checks: Result<Vec<f64>> = picks
                .par_iter()
                .map(|&i| {
                    let w = 0.5 * (table.omegas[i] + table.omegas[i + 1]);
                    let exact = solve_one(w)?;
                    let mut worst: f64 = 0.0;
                    let scale = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    for (j, &e) in exact.iter().enumerate() {
                        let interp = table.interpolate(w, j);
                        worst = worst.max((interp - e).norm() / scale.max(1e-300));
                    }
                    Ok(worst)
                })
                .collect();
            table.interpolation_error =
                Some(checks?.into_iter().fold(0.0, f64::max));
        }
        Ok(table)
    }

    /// Linear interpolation of `F_G(theta_j; omega)`.
    pub fn interpolate(&self, omega: f64, j_theta: usize) -> Complex64 {
        let n = self.omegas.len();
        if omega <= self.omegas[0] {
            return self.amp[(0, j_theta)];
        }
        if omega >= self.omegas[n - 1] {
            return self.amp[(n - 1, j_theta)];
        }
        let k = match self
            .omegas
            .binary_search_by(|w| w.partial_cmp(&omega).unwrap())
        {
            Ok(k) => return self.amp[(k, j_theta)],
            Err(k) => k,
        };
        let (w0, w1) = (self.omegas[k - 1], self.omegas[k]);
        let t = (omega - w0) / (w1 - w0);
        self.amp[(k - 1, j_theta)] * (1.0 - t) + self.amp[(k, j_theta)] * t
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.omegas[0] <= lo + 1e-12 && self.omegas[self.omegas.len() - 1] >= hi - 1e-12
    }
}

/// Grid parameters of the discretized kernel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelGrids {
    pub n_omega: usize,
    /// Half-width of the frequency window around the pulse center; defaults
    /// to `5 / tau`.
    pub half_window: Option<f64>,
}

impl Default for KernelGrids {
    fn default() -> Self {
        KernelGrids {
            n_omega: 257,
            half_window: None,
        }
    }
}

/// Discretized connected two-photon output kernel over
/// `((theta1, omega1), (theta2, omega2))`, stored in factored form:
/// `K = profile(theta1, w1) profile(theta2, w2) pair(w1, w2)`.
#[derive(Debug, Clone)]
pub struct TwoPhotonKernel {
    pub freq_grid: Vec<f64>,
    pub angle_grid: Vec<f64>,
    /// Per-particle factor `G0(omega) F_G(theta; omega)`, indexed
    /// `[(i_omega, i_theta)]`.
    pub profile: Array2<Complex64>,
    /// Symmetric pair factor over `(omega1, omega2)` (constants, Gaussian
    /// envelope and `1/Gamma`).
    pub pair: Array2<Complex64>,
    /// Trapezoid weights on the frequency grid.
    pub w_omega: Vec<f64>,
    /// Uniform angular weight `2 pi / n_theta`.
    pub w_theta: f64,
}

impl TwoPhotonKernel {
    /// Kernel entry `K((theta_{t1}, omega_{i1}), (theta_{t2}, omega_{i2}))`.
    pub fn at(&self, i1: usize, t1: usize, i2: usize, t2: usize) -> Complex64 {
        self.profile[(i1, t1)] * self.profile[(i2, t2)] * self.pair[(i1, i2)]
    }

    /// Build a synthetic kernel from raw factors (tests, oracles).
    pub fn from_parts(
        freq_grid: Vec<f64>,
        angle_grid: Vec<f64>,
        profile: Array2<Complex64>,
        pair: Array2<Complex64>,
    ) -> Result<Self> {
        let n = freq_grid.len();
        if profile.dim() != (n, angle_grid.len()) || pair.dim() != (n, n) {
            return Err(Error::Parameter("kernel factor dimensions mismatch".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if pair[(i, j)] != pair[(j, i)] {
                    return Err(Error::Parameter("pair factor must be symmetric".into()));
                }
            }
        }
        let w_omega = trapezoid_weights(&freq_grid);
        let w_theta = 2.0 * std::f64::consts::PI / angle_grid.len() as f64;
        Ok(TwoPhotonKernel {
            freq_grid,
            angle_grid,
            profile,
            pair,
            w_omega,
            w_theta,
        })
    }

    /// Multiply the kernel by a constant (e.g. a normalization choice).
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.pair.mapv_inplace(|v| v * c);
        out
    }

    /// Quadrature Frobenius norm squared of the kernel:
    /// `sum w(x1) w(x2) |K(x1, x2)|^2`.
    pub fn norm_sqr(&self) -> f64 {
        let n = self.freq_grid.len();
        // sum_theta w_theta |profile(theta, i)|^2, per frequency.
        let row_norms: Vec<f64> = (0..n)
            .map(|i| {
                (0..self.angle_grid.len())
                    .map(|t| self.profile[(i, t)].norm_sqr() * self.w_theta)
                    .sum::<f64>()
            })
            .collect();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.w_omega[i] * row_norms[i] * self.w_omega[j] * row_norms[j]
                    / (self.w_omega[i] * self.w_omega[j])
                    * (self.w_omega[i] * self.w_omega[j])
                    * self.pair[(i, j)].norm_sqr();
            }
        }
        acc
    }
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Assemble the connected-output kernel from the emitter response, a dipole
/// far-field table, and the total field at the emitter at the pulse center:
///
/// ```text
/// K = -(V0^4 / 4 pi^2) E^2(x_d, dir, w0) G0^2(w0)
///     * G0(w1) G0(w2) F_G(th1; w1) F_G(th2; w2)
///     * exp(-(w1 + w2 - 2 w0)^2 tau^2) / Gamma(w1 + w2)
/// ```
///
/// with the per-photon normalization set to 1.
pub fn build_kernel(
    resp: &EmitterResponse,
    table: &FarFieldTable,
    e_at_emitter: Complex64,
    input: &GaussianInput,
    grids: KernelGrids,
) -> Result<TwoPhotonKernel> {
    input.validate()?;
    let w0 = input.omega0_pulse;
    let tau = input.tau;
    let half = grids.half_window.unwrap_or(5.0 / tau);
    // Gaussian tail outside the window must be negligible.
    if (-4.0 * (half * tau).powi(2)).exp() > 1e-6 {
        return Err(Error::Parameter(format!(
            "frequency window half-width {half} too narrow for tau = {tau}"
        )));
    }
    if w0 - half <= 0.0 {
        return Err(Error::Parameter("frequency window extends below zero".into()));
    }
    if !table.covers(w0 - half, w0 + half) {
        return Err(Error::Parameter(
            "far-field table does not cover the kernel window".into(),
        ));
    }
    let n = grids.n_omega;
    if n < 2 {
        return Err(Error::Parameter("kernel needs at least 2 frequencies".into()));
    }

    let freq_grid: Vec<f64> = (0..n)
        .map(|i| w0 - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let n_theta = table.thetas.len();

    let mut profile = Array2::from_elem((n, n_theta), Complex64::default());
    for (i, &w) in freq_grid.iter().enumerate() {
        let g0 = resp.response_freq(w);
        for t in 0..n_theta {
            profile[(i, t)] = g0 * table.interpolate(w, t);
        }
    }

    let v0 = resp.params.v0;
    let g0_w0 = resp.response_freq(w0);
    let prefactor = -Complex64::new(
        v0.powi(4) / (4.0 * std::f64::consts::PI * std::f64::consts::PI),
        0.0,
    ) * e_at_emitter
        * e_at_emitter
        * g0_w0
        * g0_w0;

    let mut pair = Array2::from_elem((n, n), Complex64::default());
    for i in 0..n {
        for j in 0..=i {
            let e_sum = freq_grid[i] + freq_grid[j];
            let envelope = (-((e_sum - 2.0 * w0) * tau).powi(2)).exp();
            let v = prefactor * envelope / resp.gamma_kernel(e_sum)?;
            pair[(i, j)] = v;
            pair[(j, i)] = v;
        }
    }

    TwoPhotonKernel::from_parts(freq_grid, table.thetas.clone(), profile, pair)
}

/// Full pipeline on a permittivity map: coarse dipole far-field sweep over
/// the kernel window, plane-wave solve at the pulse center for
/// `E(x_d, dir, w0)`, then kernel assembly on the fine grid.
pub struct SweepOptions {
    pub n_sweep: usize,
    pub n_theta: usize,
    pub contour: Option<Contour>,
    pub verify_midpoints: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            n_sweep: 64,
            n_theta: 256,
            contour: None,
            verify_midpoints: true,
        }
    }
}

pub fn build_kernel_from_map(
    resp: &EmitterResponse,
    map: &PermittivityMap,
    input: &GaussianInput,
    grids: KernelGrids,
    sweep: SweepOptions,
) -> Result<(TwoPhotonKernel, FarFieldTable)> {
    input.validate()?;
    let half = grids.half_window.unwrap_or(5.0 / input.tau);
    let lo = input.omega0_pulse - half;
    let hi = input.omega0_pulse + half;
    let coarse: Vec<f64> = (0..sweep.n_sweep)
        .map(|i| lo + (hi - lo) * i as f64 / (sweep.n_sweep - 1) as f64)
        .collect();
    let table = FarFieldTable::from_sweep(
        map,
        resp.params.x_d,
        coarse,
        sweep.n_theta,
        sweep.contour,
        sweep.verify_midpoints,
    )?;

    let site = crate::media::emitter_site(map, resp.params.x_d)?;
    let solver = fdfd::factorized(map, input.omega0_pulse)?;
    let plane = solver.solve_planewave(input.dir)?;
    let e_at_emitter = plane.total_at(site.ix, site.iy);

    let kernel = build_kernel(resp, &table, e_at_emitter, input, grids)?;
    Ok((kernel, table))
}

/// Schmidt decomposition of a kernel.
#[derive(Debug, Clone)]
pub struct SchmidtResult {
    /// Top Schmidt coefficients, normalized so that the full set satisfies
    /// `sum lambda^2 = 1`.
    pub lambdas: Vec<f64>,
    /// Modes `psi_i(theta, omega)` indexed `[(i_omega, i_theta)]`,
    /// orthonormal under the quadrature weights.
    pub modes: Vec<Array2<Complex64>>,
    pub freq_grid: Vec<f64>,
    pub angle_grid: Vec<f64>,
    pub w_omega: Vec<f64>,
    pub w_theta: f64,
    /// All unnormalized singular values (descending).
    pub all_singular_values: Vec<f64>,
}

impl SchmidtResult {
    /// Quadrature inner product of two modes.
    pub fn mode_inner(&self, a: usize, b: usize) -> Complex64 {
        let mut acc = Complex64::default();
        for i in 0..self.freq_grid.len() {
            for t in 0..self.angle_grid.len() {
                acc += self.modes[a][(i, t)].conj()
                    * self.modes[b][(i, t)]
                    * self.w_omega[i]
                    * self.w_theta;
            }
        }
        acc
    }
}

/// Schmidt decomposition of the weighted kernel `W^{1/2} K W^{1/2}` via the
/// Takagi factorization of its frequency reduction.
///
/// Mode sign convention: the largest-magnitude component gets a positive real
/// part (the residual freedom of a Takagi vector is a global sign).
pub fn schmidt(kernel: &TwoPhotonKernel, n_modes: usize) -> Result<SchmidtResult> {
    let n = kernel.freq_grid.len();
    let n_theta = kernel.angle_grid.len();

    // m(theta, i) = sqrt(w_theta w_i) profile; rho_i its angular norm.
    let mut rho = vec![0.0f64; n];
    for i in 0..n {
        let mut acc = 0.0;
        for t in 0..n_theta {
            acc += kernel.profile[(i, t)].norm_sqr() * kernel.w_theta;
        }
        rho[i] = (acc * kernel.w_omega[i]).sqrt();
    }

    // Reduced symmetric frequency kernel rho_i rho_j pair(i, j).
    let mut reduced = Array2::from_elem((n, n), Complex64::default());
    for i in 0..n {
        for j in 0..n {
            reduced[(i, j)] = rho[i] * rho[j] * kernel.pair[(i, j)];
        }
    }

    let (sigmas, vectors) = takagi(&reduced)?;
    let total_sq: f64 = sigmas.iter().map(|s| s * s).sum();
    if total_sq <= 0.0 {
        return Err(Error::Parameter("kernel is identically zero".into()));
    }
    let norm = total_sq.sqrt();

    let n_keep = n_modes.min(vectors.len());
    let mut modes = Vec::with_capacity(n_keep);
    for k in 0..n_keep {
        // psi(theta, i) = phi_k(i) * profile(i, theta) / rho_i (zero rows stay zero).
        let mut mode = Array2::from_elem((n, n_theta), Complex64::default());
        for i in 0..n {
            if rho[i] == 0.0 {
                continue;
            }
            let scale = vectors[k][i] * kernel.w_omega[i].sqrt() * kernel.w_theta.sqrt() / rho[i];
            for t in 0..n_theta {
                mode[(i, t)] = scale * kernel.profile[(i, t)];
            }
        }
        modes.push(mode);
    }

    Ok(SchmidtResult {
        lambdas: sigmas.iter().take(n_keep).map(|s| s / norm).collect(),
        modes,
        freq_grid: kernel.freq_grid.clone(),
        angle_grid: kernel.angle_grid.clone(),
        w_omega: kernel.w_omega.clone(),
        w_theta: kernel.w_theta,
        all_singular_values: sigmas,
    })
}

/// Per-mode frequency spectra and angular distributions, each normalized to
/// unit quadrature sum.
#[derive(Debug, Clone)]
pub struct Marginals {
    /// `S_i(omega) = sum_theta w_theta |psi_i|^2`, normalized.
    pub spectra: Vec<Vec<f64>>,
    /// `A_i(theta) = sum_omega w_omega |psi_i|^2`, normalized.
    pub angular: Vec<Vec<f64>>,
}

pub fn marginals(result: &SchmidtResult) -> Marginals {
    let n = result.freq_grid.len();
    let n_theta = result.angle_grid.len();
    let mut spectra = Vec::with_capacity(result.modes.len());
    let mut angular = Vec::with_capacity(result.modes.len());
    for mode in &result.modes {
        let mut s: Vec<f64> = (0..n)
            .map(|i| {
                (0..n_theta)
                    .map(|t| mode[(i, t)].norm_sqr() * result.w_theta)
                    .sum()
            })
            .collect();
        let mut a: Vec<f64> = (0..n_theta)
            .map(|t| {
                (0..n)
                    .map(|i| mode[(i, t)].norm_sqr() * result.w_omega[i])
                    .sum()
            })
            .collect();
        let s_total: f64 = s.iter().zip(&result.w_omega).map(|(v, w)| v * w).sum();
        if s_total > 0.0 {
            s.iter_mut().for_each(|v| *v /= s_total);
        }
        let a_total: f64 = a.iter().map(|v| v * result.w_theta).sum();
        if a_total > 0.0 {
            a.iter_mut().for_each(|v| *v /= a_total);
        }
        spectra.push(s);
        angular.push(a);
    }
    Marginals { spectra, angular }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::EmitterParams;
    use crate::smatrix::analytic::{HomogeneousBath, NEG_IM_G0_2D};

    fn ww_resp(v0: f64) -> EmitterResponse {
        EmitterResponse::weisskopf_wigner(
            EmitterParams {
                omega0: 2.2,
                v0,
                x_d: [0.0, 0.0],
            },
            NEG_IM_G0_2D,
        )
        .unwrap()
    }

    fn ww_kernel(v0: f64, n_omega: usize, n_theta: usize) -> TwoPhotonKernel {
        let resp = ww_resp(v0);
        let bath = HomogeneousBath {
            eps0: 1.0,
            x_d: [0.0, 0.0],
        };
        let input = GaussianInput::along_x(2.2, 220.0 / 2.2);
        let half = 5.0 / input.tau;
        let coarse: Vec<f64> = (0..33)
            .map(|i| 2.2 - half + 2.0 * half * i as f64 / 32.0)
            .collect();
        let table = FarFieldTable::from_bath(&bath, coarse, n_theta).unwrap();
        build_kernel(
            &resp,
            &table,
            Complex64::new(1.0, 0.0),
            &input,
            KernelGrids {
                n_omega,
                half_window: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn uncoupled_kernel_vanishes() {
        let kernel = ww_kernel(0.0, 17, 16);
        for i in 0..kernel.freq_grid.len() {
            for j in 0..kernel.freq_grid.len() {
                assert_eq!(kernel.pair[(i, j)], Complex64::default());
            }
        }
        assert!(schmidt(&kernel, 3).is_err());
    }

    #[test]
    fn kernel_exchange_symmetry_is_exact() {
        let kernel = ww_kernel(0.3, 17, 12);
        for i1 in 0..17 {
            for i2 in 0..17 {
                for (t1, t2) in [(0usize, 5usize), (3, 9), (11, 2)] {
                    assert_eq!(kernel.at(i1, t1, i2, t2), kernel.at(i2, t2, i1, t1));
                }
            }
        }
    }

    /// Frequency dependence on the energy-conserving anti-diagonal matches
    /// the closed-form connected kernel lineshape.
    #[test]
    fn ww_kernel_antidiagonal_matches_closed_form() {
        let v0 = 0.3;
        let resp = ww_resp(v0);
        let gamma = resp.ww_gamma().unwrap();
        let kernel = ww_kernel(v0, 33, 12);
        let w0 = 2.2;
        let n = kernel.freq_grid.len();
        // On the anti-diagonal w1 + w2 = 2 w0, the Gaussian envelope is 1,
        // so K / (F1 F2) = const * G0(w1) G0(w2) / Gamma(2 w0) with the
        // closed-form WW pieces.
        let mid_pairs = [(n / 2 - 3, n / 2 + 3), (n / 2 - 7, n / 2 + 7)];
        let base = |i: usize, j: usize| {
            kernel.pair[(i, j)]
                * resp.response_freq(kernel.freq_grid[i])
                * resp.response_freq(kernel.freq_grid[j])
        };
        let reference = base(mid_pairs[0].0, mid_pairs[0].1);
        for &(i, j) in &mid_pairs[1..] {
            let got = base(i, j);
            // Ratio of the two anti-diagonal points from the closed form:
            let closed = |wi: f64, wj: f64| {
                let g = |w: f64| 1.0 / Complex64::new(0.5 * gamma, w0 - w);
                g(wi) * g(wj) * g(wi) * g(wj)
            };
            let expect = closed(kernel.freq_grid[i], kernel.freq_grid[j])
                / closed(
                    kernel.freq_grid[mid_pairs[0].0],
                    kernel.freq_grid[mid_pairs[0].1],
                );
            let ratio = got / reference;
            assert!(
                (ratio - expect).norm() / expect.norm() < 1e-9,
                "{ratio} vs {expect}"
            );
        }
    }

    /// Rank-1 kernel: a single Schmidt mode with lambda = 1.
    #[test]
    fn separable_kernel_has_single_mode() {
        let n = 9;
        let n_theta = 8;
        let freq: Vec<f64> = (0..n).map(|i| 2.0 + 0.01 * i as f64).collect();
        let thetas: Vec<f64> = (0..n_theta)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_theta as f64)
            .collect();
        let profile = Array2::from_shape_fn((n, n_theta), |(i, t)| {
            Complex64::new(0.3 + i as f64 * 0.1, 0.2 * (t as f64).sin())
        });
        let pair = Array2::from_elem((n, n), Complex64::new(1.0, 0.0));
        let kernel = TwoPhotonKernel::from_parts(freq, thetas, profile, pair).unwrap();
        let result = schmidt(&kernel, 4).unwrap();
        assert!((result.lambdas[0] - 1.0).abs() < 1e-12);
        for &l in &result.lambdas[1..] {
            assert!(l < 1e-10);
        }
        // Orthonormal first mode.
        assert!((result.mode_inner(0, 0).re - 1.0).abs() < 1e-10);

        // Separable mode: marginals proportional to the factors.
        let m = marginals(&result);
        let s = &m.spectra[0];
        let ratio0 = s[2] / s[0];
        let p0: f64 = (0..n_theta)
            .map(|t| kernel.profile[(0, t)].norm_sqr())
            .sum();
        let p2: f64 = (0..n_theta)
            .map(|t| kernel.profile[(2, t)].norm_sqr())
            .sum();
        assert!((ratio0 - p2 / p0).abs() < 1e-9);
    }

    /// Sum of squared singular values equals the kernel quadrature norm.
    #[test]
    fn schmidt_preserves_kernel_norm() {
        let kernel = ww_kernel(0.35, 21, 12);
        let result = schmidt(&kernel, 5).unwrap();
        let total: f64 = result
            .all_singular_values
            .iter()
            .map(|s| s * s)
            .sum();
        let norm = kernel.norm_sqr();
        assert!(
            (total - norm).abs() / norm < 1e-10,
            "sum sigma^2 = {total}, |K|^2 = {norm}"
        );
        // Normalized: sum over all lambda^2 = 1.
        let lam_sq: f64 = result
            .all_singular_values
            .iter()
            .map(|s| (s / total.sqrt()) * (s / total.sqrt()))
            .sum();
        assert!((lam_sq - 1.0).abs() < 1e-10);
    }

    /// Orthonormality of the reported modes under the quadrature weights.
    #[test]
    fn modes_are_orthonormal() {
        let kernel = ww_kernel(0.4, 15, 10);
        let result = schmidt(&kernel, 4).unwrap();
        for a in 0..result.modes.len() {
            for b in 0..result.modes.len() {
                let want = if a == b { 1.0 } else { 0.0 };
                let got = result.mode_inner(a, b);
                assert!(
                    (got - want).norm() < 1e-8,
                    "<{a},{b}> = {got}"
                );
            }
        }
    }

    /// Rescaling the kernel by any constant leaves normalized outputs
    /// unchanged.
    #[test]
    fn normalized_outputs_invariant_under_rescaling() {
        let kernel = ww_kernel(0.35, 15, 10);
        let scaled = kernel.scaled(Complex64::new(-3.7e4, 1.2e3));
        let a = schmidt(&kernel, 3).unwrap();
        let b = schmidt(&scaled, 3).unwrap();
        for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
            assert!((x - y).abs() < 1e-12);
        }
        let ma = marginals(&a);
        let mb = marginals(&b);
        for (sa, sb) in ma.spectra.iter().zip(&mb.spectra) {
            for (x, y) in sa.iter().zip(sb) {
                assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn gaussian_input_validation() {
        assert!(GaussianInput::along_x(2.2, -1.0).validate().is_err());
        assert!(GaussianInput::along_x(0.01, 1.0).validate().is_err());
        assert!(GaussianInput::along_x(2.2, 100.0).validate().is_ok());
        // Window too narrow for the Gaussian envelope.
        let resp = ww_resp(0.3);
        let bath = HomogeneousBath {
            eps0: 1.0,
            x_d: [0.0, 0.0],
        };
        let input = GaussianInput::along_x(2.2, 100.0);
        let table = FarFieldTable::from_bath(&bath, vec![2.1, 2.2, 2.3], 8).unwrap();
        let res = build_kernel(
            &resp,
            &table,
            Complex64::new(1.0, 0.0),
            &input,
            KernelGrids {
                n_omega: 9,
                half_window: Some(0.001), // 0.1 / tau: far too narrow
            },
        );
        assert!(res.is_err());
    }
}
