//! Homogeneous-bath closed forms used as test oracles and as the field
//! provider for analytic scattering pipelines.

use num_complex::Complex64;

use crate::bessel::hankel1_0;
use crate::error::Result;

use super::BathFields;

/// Outgoing 2D Green's function `-(i/4) H0(1)(k0 r)` of `[lap + k0^2] G = delta`.
pub fn g0_2d(k0: f64, r: f64) -> Complex64 {
    Complex64::new(0.0, -0.25) * hankel1_0(k0 * r)
}

/// Value of `-Im[G_2D]` at coincidence: J0(0)/4, independent of frequency.
pub const NEG_IM_G0_2D: f64 = 0.25;

/// Outgoing 3D Green's function `-e^{i k0 r} / (4 pi r)`.
pub fn g0_3d(k0: f64, r: f64) -> Complex64 {
    -Complex64::from_polar(1.0, k0 * r) / (4.0 * std::f64::consts::PI * r)
}

fn lorentzian_lineshape(nu: f64, omega0: f64, gamma: f64) -> f64 {
    let hw = 0.5 * gamma;
    hw * hw / ((nu - omega0).powi(2) + hw * hw)
}

/// 2D Weisskopf-Wigner scattering cross section
/// `sigma = 4/(omega0 sqrt(eps0)) * L(nu)`, with `gamma = V0^2 / 2`.
pub fn sigma_2d_ww(nu: f64, omega0: f64, gamma: f64, eps0: f64) -> f64 {
    4.0 / (omega0 * eps0.sqrt()) * lorentzian_lineshape(nu, omega0, gamma)
}

/// 3D Weisskopf-Wigner cross section `sigma = 1/(pi^2 omega0^2 eps0) * L(nu)`,
/// with the 3D rate `gamma = V0^2 omega0 sqrt(eps0)`.
pub fn sigma_3d_ww(nu: f64, omega0: f64, gamma: f64, eps0: f64) -> f64 {
    1.0 / (std::f64::consts::PI.powi(2) * omega0 * omega0 * eps0)
        * lorentzian_lineshape(nu, omega0, gamma)
}

/// Weisskopf-Wigner connected two-excitation coefficient (the factor
/// multiplying `delta(w1 + w2 - nu1 - nu2)`):
///
/// ```text
/// -i pi (w1 + w2 - 2 omega0 - i gamma)
/// / prod_j (nu_j - omega0 - i gamma/2)(w_j - omega0 - i gamma/2)
/// ```
pub fn gc2_ww_coefficient(
    omegas: [f64; 2],
    nus: [f64; 2],
    omega0: f64,
    gamma: f64,
) -> Complex64 {
    let num = Complex64::new(0.0, -std::f64::consts::PI)
        * Complex64::new(omegas[0] + omegas[1] - 2.0 * omega0, -gamma);
    let mut den = Complex64::new(1.0, 0.0);
    for v in [nus[0], nus[1], omegas[0], omegas[1]] {
        den *= Complex64::new(v - omega0, -0.5 * gamma);
    }
    num / den
}

/// Field provider for a homogeneous bath: no scattered field, analytic
/// dipole Green's function.
#[derive(Debug, Clone, Copy)]
pub struct HomogeneousBath {
    pub eps0: f64,
    pub x_d: [f64; 2],
}

impl BathFields for HomogeneousBath {
    fn eps_background(&self) -> f64 {
        self.eps0
    }

    fn emitter_position(&self) -> [f64; 2] {
        self.x_d
    }

    fn scattered_field(&self, _x: [f64; 2], _dir: [f64; 2], _omega: f64) -> Result<Complex64> {
        Ok(Complex64::default())
    }

    fn dipole_field(&self, x: [f64; 2], omega: f64) -> Result<Complex64> {
        let k0 = omega * self.eps0.sqrt();
        let r = ((x[0] - self.x_d[0]).powi(2) + (x[1] - self.x_d[1]).powi(2)).sqrt();
        Ok(g0_2d(k0, r))
    }

    fn dipole_far_amplitude(&self, _theta: f64, omega: f64) -> Result<Complex64> {
        // Large-argument form of -(i/4) H0(1): isotropic amplitude
        // -(i/4) sqrt(2/(pi k0)) e^{-i pi/4}.
        let k0 = omega * self.eps0.sqrt();
        Ok(Complex64::new(0.0, -0.25)
            * (2.0 / (std::f64::consts::PI * k0)).sqrt()
            * Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonant_cross_sections_match_printed_values() {
        let omega0 = 2.2;
        let eps0 = 1.3;
        let gamma = 0.01;
        let s2 = sigma_2d_ww(omega0, omega0, gamma, eps0);
        assert!((s2 - 4.0 / (omega0 * eps0.sqrt())).abs() < 1e-14);
        let s3 = sigma_3d_ww(omega0, omega0, gamma, eps0);
        assert!((s3 - 1.0 / (std::f64::consts::PI.powi(2) * omega0 * omega0 * eps0)).abs() < 1e-16);
    }

    #[test]
    fn detuning_by_half_gamma_halves_the_cross_section() {
        let (omega0, gamma, eps0) = (2.2, 0.02, 1.0);
        let peak = sigma_2d_ww(omega0, omega0, gamma, eps0);
        let detuned = sigma_2d_ww(omega0 + 0.5 * gamma, omega0, gamma, eps0);
        assert!((detuned / peak - 0.5).abs() < 1e-12);
    }

    /// sigma_3D agrees with the dipole-scatterer form V0^4/(4 pi^2) |G0|^2
    /// when gamma = V0^2 omega0 sqrt(eps0).
    #[test]
    fn sigma_3d_matches_dipole_scatterer_lineshape() {
        let (omega0, eps0) = (2.2_f64, 1.0_f64);
        let v0 = 0.13_f64;
        let gamma = v0 * v0 * omega0 * eps0.sqrt();
        for k in 0..9 {
            let nu = omega0 + (k as f64 - 4.0) * 0.4 * gamma;
            let g0 = 1.0 / Complex64::new(0.5 * gamma, omega0 - nu);
            let direct = v0.powi(4) / (4.0 * std::f64::consts::PI.powi(2)) * g0.norm_sqr();
            let packaged = sigma_3d_ww(nu, omega0, gamma, eps0);
            assert!((direct - packaged).abs() < 1e-12 * packaged);
        }
    }

    #[test]
    fn g0_2d_has_quarter_imaginary_part_at_origin() {
        // -(i/4) H0(1)(z) -> Re ~ Y0/4 (log divergent), Im -> -J0(z)/4 -> -1/4.
        let g = g0_2d(2.2, 1e-9);
        assert!((-g.im - NEG_IM_G0_2D).abs() < 1e-12);
        assert!(g.re < -0.5); // log divergence is in the real part
    }
}
