//! Near-to-far-field transform over a rectangular contour.
//!
//! For an outgoing solution of the homogeneous Helmholtz equation outside the
//! contour, Green's second identity gives
//!
//! ```text
//! u(x) = \oint_C [ G0(y, x) du/dn(y) - u(y) dG0/dn(y) ] ds(y)
//! ```
//!
//! with outward normal n and G0 = -(i/4) H0(1)(k0 |y - x|). Inserting the
//! large-argument form of G0 yields the far-field amplitude F(theta) in the
//! convention `u(R theta^) -> F(theta) e^{i k0 R} / sqrt(R)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::media::{Grid, PermittivityMap};

use super::{FieldSolution, Source};

/// Far-field amplitude on a uniform angular grid over [0, 2*pi).
#[derive(Debug, Clone)]
pub struct FarField {
    pub thetas: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub omega: f64,
    pub k0: f64,
}

impl FarField {
    /// Integral of |F(theta)|^2 over the angular grid.
    pub fn intensity_integral(&self) -> f64 {
        let dtheta = 2.0 * std::f64::consts::PI / self.thetas.len() as f64;
        self.amplitude.iter().map(|f| f.norm_sqr() * dtheta).sum()
    }
}

/// Rectangular integration contour given by inclusive node bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contour {
    pub ix_lo: usize,
    pub ix_hi: usize,
    pub iy_lo: usize,
    pub iy_hi: usize,
}

impl Contour {
    /// Default contour: 2 cells inside the PML-free margin.
    pub fn default_for(grid: &Grid) -> Self {
        let (ix_lo, ix_hi, iy_lo, iy_hi) = grid.interior_bounds();
        Contour {
            ix_lo: ix_lo + 2,
            ix_hi: ix_hi - 2,
            iy_lo: iy_lo + 2,
            iy_hi: iy_hi - 2,
        }
    }

    /// Contour grown by `cells` on every side.
    pub fn grown(&self, cells: usize) -> Self {
        Contour {
            ix_lo: self.ix_lo - cells,
            ix_hi: self.ix_hi + cells,
            iy_lo: self.iy_lo - cells,
            iy_hi: self.iy_hi + cells,
        }
    }

    fn validate(&self, map: &PermittivityMap, source: &Source) -> Result<()> {
        let grid = &map.grid;
        if self.ix_lo >= self.ix_hi || self.iy_lo >= self.iy_hi {
            return Err(Error::Geometry("degenerate contour".into()));
        }
        // The normal-derivative stencil reaches one node beyond the contour,
        // and every touched node must be background medium outside the PML.
        for (ix, iy) in self.nodes_with_halo(grid) {
            if grid.in_pml(ix, iy) {
                return Err(Error::Geometry("contour touches the PML".into()));
            }
            if (map.eps[(ix, iy)] - map.eps_background).abs() > 1e-12 {
                return Err(Error::Geometry(
                    "contour intersects the scatterer support".into(),
                ));
            }
        }
        if let Source::Dipole { ix, iy } = source {
            if *ix <= self.ix_lo || *ix >= self.ix_hi || *iy <= self.iy_lo || *iy >= self.iy_hi {
                return Err(Error::Geometry("source not strictly inside contour".into()));
            }
        }
        Ok(())
    }

    fn nodes_with_halo(&self, grid: &Grid) -> Vec<(usize, usize)> {
        let mut pts = Vec::new();
        for ix in self.ix_lo - 1..=self.ix_hi + 1 {
            for iy in [self.iy_lo - 1, self.iy_lo, self.iy_hi, self.iy_hi + 1] {
                pts.push((ix, iy));
            }
        }
        for iy in self.iy_lo - 1..=self.iy_hi + 1 {
            for ix in [self.ix_lo - 1, self.ix_lo, self.ix_hi, self.ix_hi + 1] {
                pts.push((ix, iy));
            }
        }
        pts.retain(|&(ix, iy)| ix < grid.nx && iy < grid.ny);
        pts
    }
}

/// One contour node with its outward normal and quadrature weight.
struct ContourPoint {
    ix: usize,
    iy: usize,
    normal: [f64; 2],
    weight: f64,
}

fn contour_points(contour: &Contour, grid: &Grid) -> Vec<ContourPoint> {
    let h = grid.dx;
    let mut pts = Vec::new();
    let mut side = |fixed_axis: usize, fixed: usize, lo: usize, hi: usize, normal: [f64; 2]| {
        for t in lo..=hi {
            let (ix, iy) = if fixed_axis == 0 { (fixed, t) } else { (t, fixed) };
            // Trapezoid rule along the side: half weight at the two corners.
            let weight = if t == lo || t == hi { 0.5 * h } else { h };
            pts.push(ContourPoint {
                ix,
                iy,
                normal,
                weight,
            });
        }
    };
    side(0, contour.ix_hi, contour.iy_lo, contour.iy_hi, [1.0, 0.0]);
    side(0, contour.ix_lo, contour.iy_lo, contour.iy_hi, [-1.0, 0.0]);
    side(1, contour.iy_hi, contour.ix_lo, contour.ix_hi, [0.0, 1.0]);
    side(1, contour.iy_lo, contour.ix_lo, contour.ix_hi, [0.0, -1.0]);
    pts
}

/// Near-to-far transform of a field solution. The contour must lie strictly
/// between the scatterer support (and source) and the PML.
pub fn far_field(
    sol: &FieldSolution,
    map: &PermittivityMap,
    contour: Contour,
    n_theta: usize,
) -> Result<FarField> {
    if n_theta < 180 {
        return Err(Error::Parameter(format!(
            "angular grid must have at least 180 points, got {n_theta}"
        )));
    }
    contour.validate(map, &sol.source)?;
    let grid = &sol.grid;
    let k0 = sol.k0();
    let pts = contour_points(&contour, grid);

    // Precompute u and du/dn (central difference along the normal) per point.
    let samples: Vec<([f64; 2], Complex64, Complex64)> = pts
        .iter()
        .map(|p| {
            let u = sol.u[(p.ix, p.iy)];
            let (dx, dy) = (p.normal[0] as isize, p.normal[1] as isize);
            let fwd = sol.u[((p.ix as isize + dx) as usize, (p.iy as isize + dy) as usize)];
            let bwd = sol.u[((p.ix as isize - dx) as usize, (p.iy as isize - dy) as usize)];
            let dudn = (fwd - bwd) / (2.0 * grid.dx);
            (grid.position(p.ix, p.iy), u, dudn)
        })
        .collect();

    let prefactor = Complex64::new(0.0, -0.25)
        * (2.0 / (std::f64::consts::PI * k0)).sqrt()
        * Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);

    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_theta as f64)
        .collect();
    let amplitude = thetas
        .iter()
        .map(|&theta| {
            let dir = [theta.cos(), theta.sin()];
            let mut acc = Complex64::default();
            for (p, (pos, u, dudn)) in pts.iter().zip(&samples) {
                let phase = -k0 * (dir[0] * pos[0] + dir[1] * pos[1]);
                let kernel = Complex64::from_polar(1.0, phase);
                let ndot = dir[0] * p.normal[0] + dir[1] * p.normal[1];
                acc += p.weight * kernel * (*dudn + Complex64::new(0.0, k0 * ndot) * *u);
            }
            prefactor * acc
        })
        .collect();

    Ok(FarField {
        thetas,
        amplitude,
        omega: sol.omega,
        k0,
    })
}
