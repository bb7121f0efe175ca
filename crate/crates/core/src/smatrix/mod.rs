//! Quantum scattering matrices for the emitter-bath system: single-particle
//! amplitude, two-particle matrix with its connected part, the general
//! N-particle combinatorial assembly, and scattering cross sections.
//!
//! Delta distributions are never represented numerically. Assembled terms
//! carry their frequency constraints symbolically next to a complex
//! coefficient evaluated at the given arguments; wavepacket integrations
//! resolve the constraints analytically.
//!
//! The 2D per-photon normalization N0 is set to 1 throughout; every reported
//! observable is chosen to be independent of it.

pub mod analytic;
mod terms;

pub use terms::{assemble_n, term_covers_all_indices, DeltaConstraint, SmatrixTerm};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::emitter::EmitterResponse;
use crate::error::{Error, Result};
use crate::fdfd::{self, Contour, FieldSolution, Source};
use crate::media::PermittivityMap;

/// Classical fields of the bath consumed by the scattering-matrix assembly:
/// the plane-wave response and the emitter dipole response.
pub trait BathFields {
    fn eps_background(&self) -> f64;

    /// Emitter position `x_d`.
    fn emitter_position(&self) -> [f64; 2];

    /// Scattered part `E_s(x, Omega; omega)` of the plane-wave field.
    fn scattered_field(&self, x: [f64; 2], dir: [f64; 2], omega: f64) -> Result<Complex64>;

    /// Green's function `G(x, x_d; omega)` for a unit dipole at the emitter.
    fn dipole_field(&self, x: [f64; 2], omega: f64) -> Result<Complex64>;

    /// Far-field amplitude of the dipole field at angle `theta`.
    fn dipole_far_amplitude(&self, theta: f64, omega: f64) -> Result<Complex64>;

    /// Incident plane wave `e^{i k0 Omega . x}`.
    fn incident_field(&self, x: [f64; 2], dir: [f64; 2], omega: f64) -> Complex64 {
        let k0 = omega * self.eps_background().sqrt();
        Complex64::from_polar(1.0, k0 * (dir[0] * x[0] + dir[1] * x[1]))
    }

    /// Total plane-wave field `E = incident + scattered`.
    fn total_field(&self, x: [f64; 2], dir: [f64; 2], omega: f64) -> Result<Complex64> {
        Ok(self.incident_field(x, dir, omega) + self.scattered_field(x, dir, omega)?)
    }

    /// Total field at the emitter position.
    fn field_at_emitter(&self, dir: [f64; 2], omega: f64) -> Result<Complex64> {
        self.total_field(self.emitter_position(), dir, omega)
    }
}

/// Field provider backed by a pair of solver solutions at one frequency:
/// the scattered plane-wave field and the dipole Green's function.
#[derive(Debug, Clone)]
pub struct SolvedFields {
    pub plane: FieldSolution,
    pub dipole: FieldSolution,
}

impl SolvedFields {
    pub fn new(plane: FieldSolution, dipole: FieldSolution) -> Result<Self> {
        if !matches!(plane.source, Source::PlaneWave { .. }) {
            return Err(Error::Parameter("plane solution must have a plane-wave source".into()));
        }
        if !matches!(dipole.source, Source::Dipole { .. }) {
            return Err(Error::Parameter("dipole solution must have a dipole source".into()));
        }
        if plane.omega != dipole.omega {
            return Err(Error::FrequencyMismatch {
                expected: plane.omega,
                got: dipole.omega,
            });
        }
        Ok(SolvedFields { plane, dipole })
    }

    fn node_for(&self, x: [f64; 2]) -> Result<(usize, usize)> {
        self.plane
            .grid
            .nearest_node(x)
            .ok_or(Error::OutsideInterior(x[0], x[1]))
    }

    fn check_freq(&self, omega: f64) -> Result<()> {
        if (omega - self.plane.omega).abs() > 1e-9 * self.plane.omega.abs() {
            return Err(Error::FrequencyMismatch {
                expected: self.plane.omega,
                got: omega,
            });
        }
        Ok(())
    }
}

impl BathFields for SolvedFields {
    fn eps_background(&self) -> f64 {
        self.plane.eps_background
    }

    fn emitter_position(&self) -> [f64; 2] {
        match self.dipole.source {
            Source::Dipole { ix, iy } => self.dipole.grid.position(ix, iy),
            Source::PlaneWave { .. } => unreachable!("validated at construction"),
        }
    }

    fn scattered_field(&self, x: [f64; 2], dir: [f64; 2], omega: f64) -> Result<Complex64> {
        self.check_freq(omega)?;
        match self.plane.source {
            Source::PlaneWave { dir: d } if (d[0] - dir[0]).abs() + (d[1] - dir[1]).abs() < 1e-12 => {}
            _ => return Err(Error::Parameter("direction differs from the cached solve".into())),
        }
        let (ix, iy) = self.node_for(x)?;
        Ok(self.plane.u[(ix, iy)])
    }

    fn dipole_field(&self, x: [f64; 2], omega: f64) -> Result<Complex64> {
        self.check_freq(omega)?;
        let (ix, iy) = self.node_for(x)?;
        Ok(self.dipole.u[(ix, iy)])
    }

    fn dipole_far_amplitude(&self, _theta: f64, _omega: f64) -> Result<Complex64> {
        Err(Error::Parameter(
            "far-field amplitudes require a near-to-far transform; use fdfd::far_field".into(),
        ))
    }
}

/// Single-particle scattering amplitude `s(x, Omega, nu)` (the coefficient of
/// `N0(nu) delta(omega - nu)`):
///
/// ```text
/// e^{i k0 Omega . x} + E_s(x, Omega, nu)
///   - i V0^2 E(x_d, Omega, nu) G(x, x_d; nu) G0(nu)
/// ```
pub fn single_particle(
    resp: &EmitterResponse,
    fields: &impl BathFields,
    x: [f64; 2],
    dir: [f64; 2],
    nu: f64,
) -> Result<Complex64> {
    let v0 = resp.params.v0;
    let passthrough = fields.total_field(x, dir, nu)?;
    if v0 == 0.0 {
        return Ok(passthrough);
    }
    let emitter = -Complex64::i()
        * v0
        * v0
        * fields.field_at_emitter(dir, nu)?
        * fields.dipole_field(x, nu)?
        * resp.response_freq(nu);
    Ok(passthrough + emitter)
}

/// Connected two-excitation coefficient
/// `-pi G0(nu1) G0(nu2) G0(w1) G0(w2) / Gamma(w1 + w2)`.
pub fn gc2_coefficient(
    resp: &EmitterResponse,
    omegas: [f64; 2],
    nus: [f64; 2],
) -> Result<Complex64> {
    Ok(-std::f64::consts::PI
        * resp.response_freq(nus[0])
        * resp.response_freq(nus[1])
        * resp.response_freq(omegas[0])
        * resp.response_freq(omegas[1])
        / resp.gamma_kernel(omegas[0] + omegas[1])?)
}

const ENERGY_TOL: f64 = 1e-9;

/// Connected part of the two-particle matrix: the coefficient of
/// `delta(w1 + w2 - nu1 - nu2)`. The arguments must satisfy energy
/// conservation to within a relative tolerance.
pub fn two_particle_connected(
    resp: &EmitterResponse,
    fields: &impl BathFields,
    xs: [[f64; 2]; 2],
    omegas: [f64; 2],
    dirs: [[f64; 2]; 2],
    nus: [f64; 2],
) -> Result<Complex64> {
    let mismatch = (omegas[0] + omegas[1] - nus[0] - nus[1]).abs();
    let scale = (omegas[0] + omegas[1]).abs().max(1e-300);
    if mismatch > ENERGY_TOL * scale {
        return Err(Error::EnergyConservation(mismatch));
    }
    let v0 = resp.params.v0;
    if v0 == 0.0 {
        return Ok(Complex64::default());
    }
    let mut amp = Complex64::new(
        -v0.powi(4) / (4.0 * std::f64::consts::PI * std::f64::consts::PI),
        0.0,
    );
    for i in 0..2 {
        amp *= fields.field_at_emitter(dirs[i], nus[i])?;
        amp *= fields.dipole_field(xs[i], omegas[i])?;
    }
    Ok(amp * gc2_coefficient(resp, omegas, nus)?)
}

/// Two-particle scattering matrix split into its delta structures.
#[derive(Debug, Clone, Copy)]
pub struct TwoParticleParts {
    /// Coefficient of `delta(w1 - nu1) delta(w2 - nu2)` (identity pairing).
    pub disconnected_direct: Complex64,
    /// Coefficient of `delta(w1 - nu2) delta(w2 - nu1)` (swapped pairing).
    pub disconnected_swapped: Complex64,
    /// Coefficient of `delta(w1 + w2 - nu1 - nu2)`.
    pub connected: Complex64,
}

/// Full two-particle matrix: symmetrized products of single-particle
/// amplitudes plus the connected part, kept separate.
pub fn two_particle_full(
    resp: &EmitterResponse,
    fields: &impl BathFields,
    xs: [[f64; 2]; 2],
    omegas: [f64; 2],
    dirs: [[f64; 2]; 2],
    nus: [f64; 2],
) -> Result<TwoParticleParts> {
    let direct = single_particle(resp, fields, xs[0], dirs[0], nus[0])?
        * single_particle(resp, fields, xs[1], dirs[1], nus[1])?;
    let swapped = single_particle(resp, fields, xs[0], dirs[1], nus[1])?
        * single_particle(resp, fields, xs[1], dirs[0], nus[0])?;
    let connected = two_particle_connected(resp, fields, xs, omegas, dirs, nus)?;
    Ok(TwoParticleParts {
        disconnected_direct: direct,
        disconnected_swapped: swapped,
        connected,
    })
}

/// Scattering cross sections over a frequency sweep.
#[derive(Debug, Clone)]
pub struct CrossSectionSpectrum {
    pub omegas: Vec<f64>,
    pub sigma_tls: Vec<f64>,
    pub sigma_bath: Vec<f64>,
    pub sigma_full: Vec<f64>,
}

impl CrossSectionSpectrum {
    /// CSV rows `omega,sigma_tls,sigma_bath,sigma_full` with 17 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,sigma_tls,sigma_bath,sigma_full\n");
        for i in 0..self.omegas.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.omegas[i], self.sigma_tls[i], self.sigma_bath[i], self.sigma_full[i]
            ));
        }
        out
    }
}

/// Options for the numerical cross-section pipeline.
#[derive(Debug, Clone, Copy)]
pub struct CrossSectionOptions {
    pub n_theta: usize,
    /// Integration contour; defaults to 2 cells inside the PML-free margin.
    pub contour: Option<Contour>,
}

impl Default for CrossSectionOptions {
    fn default() -> Self {
        CrossSectionOptions {
            n_theta: 256,
            contour: None,
        }
    }
}

/// Far-field cross sections computed with the full solver pipeline:
///
/// - `sigma_TLS = V0^4 |E(x_d)|^2 |G0|^2 int |F_G|^2 dtheta`
/// - `sigma_bath = int |F_s|^2 dtheta`
/// - `sigma_full = int |F_s - i V0^2 E(x_d) G0 F_G|^2 dtheta`
///
/// One factorization per frequency, shared by the dipole and plane-wave
/// right-hand sides; frequencies are processed in parallel.
pub fn cross_sections(
    resp: &EmitterResponse,
    map: &PermittivityMap,
    dir: [f64; 2],
    omegas: &[f64],
    opts: CrossSectionOptions,
) -> Result<CrossSectionSpectrum> {
    let site = crate::media::emitter_site(map, resp.params.x_d)?;
    let contour = opts.contour.unwrap_or_else(|| Contour::default_for(&map.grid));
    let v0 = resp.params.v0;

    let rows: Result<Vec<(f64, f64, f64)>> = omegas
        .par_iter()
        .map(|&omega| {
            let solver = fdfd::factorized(map, omega)?;
            let dipole = solver.solve_green(site.ix, site.iy)?;
            let plane = solver.solve_planewave(dir)?;
            let f_g = fdfd::far_field(&dipole, map, contour, opts.n_theta)?;
            let f_s = fdfd::far_field(&plane, map, contour, opts.n_theta)?;

            let e_at_d = plane.total_at(site.ix, site.iy);
            let g0 = resp.response_freq(omega);
            let dtheta = 2.0 * std::f64::consts::PI / opts.n_theta as f64;

            let sigma_tls = v0.powi(4) * e_at_d.norm_sqr() * g0.norm_sqr()
                * f_g.intensity_integral();
            let sigma_bath = f_s.intensity_integral();
            let emitter_weight = -Complex64::i() * v0 * v0 * e_at_d * g0;
            let sigma_full = f_s
                .amplitude
                .iter()
                .zip(&f_g.amplitude)
                .map(|(s, g)| (s + emitter_weight * g).norm_sqr() * dtheta)
                .sum();
            Ok((sigma_tls, sigma_bath, sigma_full))
        })
        .collect();
    let rows = rows?;

    Ok(CrossSectionSpectrum {
        omegas: omegas.to_vec(),
        sigma_tls: rows.iter().map(|r| r.0).collect(),
        sigma_bath: rows.iter().map(|r| r.1).collect(),
        sigma_full: rows.iter().map(|r| r.2).collect(),
    })
}
