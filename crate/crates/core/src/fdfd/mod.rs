//! Frequency-domain finite-difference solver for the 2D scalar Helmholtz
//! equation `[lap + omega^2 eps(x)] u = s` with stretched-coordinate PML.
//!
//! Conventions (validated against the homogeneous analytic case):
//! time dependence e^{-i omega t}, source `+delta` on the right-hand side,
//! so the homogeneous 2D Green's function is `-(i/4) H0(1)(k0 r)`.
//! Each frequency is handled by a direct sparse LU factorization that is
//! reused across right-hand sides.

mod cache;
mod farfield;
mod pml;

pub use cache::{read_field_solution, write_field_solution};
pub use farfield::{far_field, Contour, FarField};

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media::{Grid, PermittivityMap};
use pml::StretchProfile;

/// Source term of a field solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// Unit point source at a grid node, discretized as 1/dx^2.
    Dipole { ix: usize, iy: usize },
    /// Unit-amplitude incident plane wave along `dir`; the stored field is
    /// the scattered part.
    PlaneWave { dir: [f64; 2] },
}

/// Complex scalar field on the grid at one frequency.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub grid: Grid,
    pub omega: f64,
    pub eps_background: f64,
    pub source: Source,
    /// Field values indexed `[(ix, iy)]`. For a dipole source this is
    /// G(., x'; omega); for a plane wave it is the scattered field E_s.
    pub u: Array2<Complex64>,
    /// Human-readable note on the source normalization.
    pub normalization: String,
}

impl FieldSolution {
    pub fn k0(&self) -> f64 {
        self.omega * self.eps_background.sqrt()
    }

    /// Incident plane-wave field at a node (plane-wave sources only).
    pub fn incident_at(&self, ix: usize, iy: usize) -> Option<Complex64> {
        match self.source {
            Source::PlaneWave { dir } => {
                let p = self.grid.position(ix, iy);
                let phase = self.k0() * (dir[0] * p[0] + dir[1] * p[1]);
                Some(Complex64::new(phase.cos(), phase.sin()))
            }
            Source::Dipole { .. } => None,
        }
    }

    /// Total field at a node: `u` for dipole solutions, incident + scattered
    /// for plane-wave solutions.
    pub fn total_at(&self, ix: usize, iy: usize) -> Complex64 {
        match self.source {
            Source::Dipole { .. } => self.u[(ix, iy)],
            Source::PlaneWave { .. } => self.u[(ix, iy)] + self.incident_at(ix, iy).unwrap(),
        }
    }
}

/// Assembled Helmholtz operator at one frequency.
pub struct HelmholtzOperator {
    pub omega: f64,
    map: Arc<PermittivityMap>,
    mat: SparseColMat<usize, Complex64>,
}

fn node_index(grid: &Grid, ix: usize, iy: usize) -> usize {
    iy * grid.nx + ix
}

/// Visit every nonzero of the operator as `(row, col, value)`.
///
/// Interior rows are the exact 5-point Laplacian plus `omega^2 eps` on the
/// diagonal; inside the PML the one-sided differences pick up the complex
/// stretch factors evaluated at nodes and half-nodes. Out-of-range neighbors
/// are dropped, which imposes a homogeneous Dirichlet condition on the outer
/// boundary (behind the PML).
fn for_each_entry(map: &PermittivityMap, omega: f64, mut visit: impl FnMut(usize, usize, Complex64)) {
    let grid = &map.grid;
    let profile = StretchProfile::new(grid, omega, map.eps_background);
    let inv_h2 = 1.0 / (grid.dx * grid.dx);
    let sx = |fx: f64| profile.s(grid.pml_depth_x(fx));
    let sy = |fy: f64| profile.s(grid.pml_depth_y(fy));

    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let row = node_index(grid, ix, iy);
            let mut diag = Complex64::new(omega * omega * map.eps[(ix, iy)], 0.0);

            let sxc = sx(ix as f64);
            let cxp = inv_h2 / (sxc * sx(ix as f64 + 0.5));
            let cxm = inv_h2 / (sxc * sx(ix as f64 - 0.5));
            diag -= cxp + cxm;
            if ix + 1 < grid.nx {
                visit(row, node_index(grid, ix + 1, iy), cxp);
            }
            if ix > 0 {
                visit(row, node_index(grid, ix - 1, iy), cxm);
            }

            let syc = sy(iy as f64);
            let cyp = inv_h2 / (syc * sy(iy as f64 + 0.5));
            let cym = inv_h2 / (syc * sy(iy as f64 - 0.5));
            diag -= cyp + cym;
            if iy + 1 < grid.ny {
                visit(row, node_index(grid, ix, iy + 1), cyp);
            }
            if iy > 0 {
                visit(row, node_index(grid, ix, iy - 1), cym);
            }

            visit(row, row, diag);
        }
    }
}

/// Assemble the sparse operator for `map` at frequency `omega > 0`.
pub fn assemble(map: &PermittivityMap, omega: f64) -> Result<HelmholtzOperator> {
    if !(omega > 0.0) {
        return Err(Error::Parameter(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    let n = map.grid.num_nodes();
    let mut triplets = Vec::with_capacity(5 * n);
    for_each_entry(map, omega, |r, c, v| triplets.push(Triplet::new(r, c, v)));
    let mat = SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Solve(format!("assembly failed: {e:?}")))?;
    Ok(HelmholtzOperator {
        omega,
        map: Arc::new(map.clone()),
        mat,
    })
}

impl HelmholtzOperator {
    pub fn grid(&self) -> &Grid {
        &self.map.grid
    }

    pub fn map(&self) -> &PermittivityMap {
        &self.map
    }

    /// Matrix-free application of the operator to a field, for tests and
    /// residual checks.
    pub fn apply(&self, u: &Array2<Complex64>) -> Array2<Complex64> {
        let grid = &self.map.grid;
        let mut out = Array2::from_elem((grid.nx, grid.ny), Complex64::default());
        for_each_entry(&self.map, self.omega, |r, c, v| {
            let (rx, ry) = (r % grid.nx, r / grid.nx);
            let (cx, cy) = (c % grid.nx, c / grid.nx);
            out[(rx, ry)] += v * u[(cx, cy)];
        });
        out
    }

    /// Operator entry (row, col); zero when the entry is not in the stencil.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let mut val = Complex64::default();
        for_each_entry(&self.map, self.omega, |r, c, v| {
            if r == row && c == col {
                val += v;
            }
        });
        val
    }

    /// Sparse LU factorization, reusable across right-hand sides.
    pub fn factorize(self) -> Result<HelmholtzSolver> {
        let lu = self
            .mat
            .sp_lu()
            .map_err(|e| Error::Solve(format!("sparse LU failed: {e:?}")))?;
        Ok(HelmholtzSolver {
            omega: self.omega,
            map: self.map,
            lu,
        })
    }
}

/// Factorized operator; all solves at this frequency go through it.
pub struct HelmholtzSolver {
    pub omega: f64,
    map: Arc<PermittivityMap>,
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
}

impl HelmholtzSolver {
    pub fn grid(&self) -> &Grid {
        &self.map.grid
    }

    pub fn map(&self) -> &PermittivityMap {
        &self.map
    }

    fn solve_rhs(&self, rhs: Mat<Complex64>) -> Array2<Complex64> {
        let grid = &self.map.grid;
        let x = self.lu.solve(rhs);
        let mut u = Array2::from_elem((grid.nx, grid.ny), Complex64::default());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                u[(ix, iy)] = x[(node_index(grid, ix, iy), 0)];
            }
        }
        u
    }

    /// Green's function G(., x'; omega) for a unit point source at node
    /// `(ix, iy)`, which must lie in the PML-free interior.
    pub fn solve_green(&self, ix: usize, iy: usize) -> Result<FieldSolution> {
        let grid = &self.map.grid;
        if ix >= grid.nx || iy >= grid.ny || grid.in_pml(ix, iy) {
            let p = grid.position(ix.min(grid.nx - 1), iy.min(grid.ny - 1));
            return Err(Error::OutsideInterior(p[0], p[1]));
        }
        let n = grid.num_nodes();
        let mut rhs = Mat::<Complex64>::zeros(n, 1);
        rhs[(node_index(grid, ix, iy), 0)] = Complex64::new(1.0 / (grid.dx * grid.dx), 0.0);
        let u = self.solve_rhs(rhs);
        self.check_finite(&u)?;
        Ok(FieldSolution {
            grid: *grid,
            omega: self.omega,
            eps_background: self.map.eps_background,
            source: Source::Dipole { ix, iy },
            u,
            normalization: "unit +delta source discretized as 1/dx^2 at the source node".into(),
        })
    }

    /// Scattered field E_s for a unit-amplitude incident plane wave along the
    /// unit vector `dir`, via `[lap + omega^2 eps] E_s = -omega^2 (eps - eps0) E_inc`.
    pub fn solve_planewave(&self, dir: [f64; 2]) -> Result<FieldSolution> {
        let norm = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "plane-wave direction must be a unit vector, |dir| = {norm}"
            )));
        }
        let grid = &self.map.grid;
        let k0 = self.omega * self.map.eps_background.sqrt();
        let n = grid.num_nodes();
        let mut rhs = Mat::<Complex64>::zeros(n, 1);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let contrast = self.map.eps[(ix, iy)] - self.map.eps_background;
                if contrast != 0.0 {
                    let p = grid.position(ix, iy);
                    let phase = k0 * (dir[0] * p[0] + dir[1] * p[1]);
                    let inc = Complex64::new(phase.cos(), phase.sin());
                    rhs[(node_index(grid, ix, iy), 0)] =
                        -self.omega * self.omega * contrast * inc;
                }
            }
        }
        let u = self.solve_rhs(rhs);
        self.check_finite(&u)?;
        Ok(FieldSolution {
            grid: *grid,
            omega: self.omega,
            eps_background: self.map.eps_background,
            source: Source::PlaneWave { dir },
            u,
            normalization: "scattered field for a unit-amplitude incident plane wave".into(),
        })
    }

    fn check_finite(&self, u: &Array2<Complex64>) -> Result<()> {
        if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Solve("solution contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Assemble and factorize in one step.
pub fn factorized(map: &PermittivityMap, omega: f64) -> Result<HelmholtzSolver> {
    assemble(map, omega)?.factorize()
}

/// Sampled `-Im[G(x_d, x_d; omega)]` over a sorted positive frequency list.
/// One sparse solve per frequency, parallel over frequencies.
pub fn im_g_spectrum(map: &PermittivityMap, x_d: [f64; 2], omegas: &[f64]) -> Result<Vec<f64>> {
    if omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Parameter("frequencies must be positive".into()));
    }
    if omegas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parameter("frequencies must be sorted".into()));
    }
    let site = crate::media::emitter_site(map, x_d)?;
    omegas
        .par_iter()
        .map(|&omega| {
            let solver = factorized(map, omega)?;
            let sol = solver.solve_green(site.ix, site.iy)?;
            Ok(-sol.u[(site.ix, site.iy)].im)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{build_homogeneous, PmlSpec};

    fn small_map(res: usize, extent: f64, eps0: f64) -> PermittivityMap {
        let grid = Grid::for_interior(extent, extent, res, PmlSpec::default()).unwrap();
        build_homogeneous(grid, eps0).unwrap()
    }

    #[test]
    fn interior_row_is_five_point_stencil() {
        let map = small_map(16, 4.0, 2.5);
        let omega = 2.0;
        let op = assemble(&map, omega).unwrap();
        let grid = map.grid;
        let (ix, iy) = (grid.nx / 2, grid.ny / 2);
        let row = node_index(&grid, ix, iy);
        let inv_h2 = 1.0 / (grid.dx * grid.dx);

        let diag = op.entry(row, row);
        let expect = Complex64::new(-4.0 * inv_h2 + omega * omega * 2.5, 0.0);
        assert!((diag - expect).norm() < 1e-9 * expect.norm());
        for (jx, jy) in [(ix + 1, iy), (ix - 1, iy), (ix, iy + 1), (ix, iy - 1)] {
            let v = op.entry(row, node_index(&grid, jx, jy));
            assert!((v - Complex64::new(inv_h2, 0.0)).norm() < 1e-9 * inv_h2);
        }
    }

    #[test]
    fn interior_block_is_symmetric() {
        let map = small_map(16, 4.0, 1.0);
        let op = assemble(&map, 2.0).unwrap();
        let grid = map.grid;
        let (lo_x, hi_x, lo_y, hi_y) = grid.interior_bounds();
        let pts = [
            (lo_x, lo_y),
            (hi_x, hi_y),
            ((lo_x + hi_x) / 2, (lo_y + hi_y) / 2),
            (lo_x + 3, hi_y - 2),
        ];
        for &(ix, iy) in &pts {
            for &(jx, jy) in &pts {
                let a = op.entry(node_index(&grid, ix, iy), node_index(&grid, jx, jy));
                let b = op.entry(node_index(&grid, jx, jy), node_index(&grid, ix, iy));
                assert!((a - b).norm() <= 1e-12 * (a.norm() + b.norm()).max(1e-30));
            }
        }
    }

    /// A sampled plane wave with |k0|^2 = omega^2 eps0 is annihilated by the
    /// interior rows to O(dx^2): the residual must drop by ~4x per refinement.
    #[test]
    fn plane_wave_residual_scales_second_order() {
        let omega = 2.0;
        let mut residuals = Vec::new();
        for res in [16usize, 32] {
            let map = small_map(res, 4.0, 1.0);
            let grid = map.grid;
            let op = assemble(&map, omega).unwrap();
            let k = omega; // eps0 = 1
            let dir = [0.8, 0.6];
            let mut u = Array2::from_elem((grid.nx, grid.ny), Complex64::default());
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    let p = grid.position(ix, iy);
                    let phase = k * (dir[0] * p[0] + dir[1] * p[1]);
                    u[(ix, iy)] = Complex64::new(phase.cos(), phase.sin());
                }
            }
            let r = op.apply(&u);
            // Only interior rows away from PML and outer boundary are meaningful.
            let (lo_x, hi_x, lo_y, hi_y) = grid.interior_bounds();
            let mut max_r: f64 = 0.0;
            for iy in lo_y + 1..hi_y {
                for ix in lo_x + 1..hi_x {
                    max_r = max_r.max(r[(ix, iy)].norm());
                }
            }
            residuals.push(max_r);
        }
        let ratio = residuals[1] / residuals[0];
        assert!(
            ratio > 0.15 && ratio < 0.35,
            "expected ~0.25 residual ratio, got {ratio} ({residuals:?})"
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let map = small_map(16, 4.0, 1.0);
        assert!(assemble(&map, 0.0).is_err());
        assert!(assemble(&map, -1.0).is_err());
        let solver = factorized(&map, 2.0).unwrap();
        assert!(solver.solve_green(0, 0).is_err()); // in PML
        assert!(solver.solve_planewave([2.0, 0.0]).is_err()); // not unit
        assert!(im_g_spectrum(&map, [0.0, 0.0], &[2.0, 1.0]).is_err()); // unsorted
        assert!(im_g_spectrum(&map, [0.0, 0.0], &[-1.0]).is_err());
    }

    #[test]
    fn homogeneous_plane_wave_has_zero_scattered_field() {
        let map = small_map(16, 4.0, 1.0);
        let solver = factorized(&map, 2.0).unwrap();
        let sol = solver.solve_planewave([1.0, 0.0]).unwrap();
        assert!(sol.u.iter().all(|v| v.norm() == 0.0));
        // Total field reduces to the incident wave.
        let (ix, iy) = (map.grid.nx / 2, map.grid.ny / 2);
        let p = map.grid.position(ix, iy);
        let expect = Complex64::new((2.0 * p[0]).cos(), (2.0 * p[0]).sin());
        assert!((sol.total_at(ix, iy) - expect).norm() < 1e-12);
    }

    #[test]
    fn im_g_spectrum_shape_and_sign() {
        let map = small_map(16, 5.0, 1.0);
        let vals = im_g_spectrum(&map, [0.0, 0.0], &[2.0]).unwrap();
        assert_eq!(vals.len(), 1);
        // Passivity: -Im[G] >= 0; homogeneous value is ~1/4.
        assert!(vals[0] > 0.0);
        assert!((vals[0] - 0.25).abs() < 0.03, "got {}", vals[0]);
    }

    #[test]
    fn reciprocity_of_interior_green_function() {
        let map = small_map(16, 5.0, 1.0);
        let solver = factorized(&map, 2.0).unwrap();
        let (lo_x, _, lo_y, _) = map.grid.interior_bounds();
        let a = (lo_x + 10, lo_y + 14);
        let b = (lo_x + 31, lo_y + 22);
        let ga = solver.solve_green(a.0, a.1).unwrap();
        let gb = solver.solve_green(b.0, b.1).unwrap();
        let gab = ga.u[(b.0, b.1)];
        let gba = gb.u[(a.0, a.1)];
        assert!(
            (gab - gba).norm() / gab.norm() < 1e-6,
            "reciprocity violated: {gab} vs {gba}"
        );
    }

    /// Field from an interior dipole must decay by >= 6 orders of magnitude
    /// across the PML.
    #[test]
    fn pml_decay_across_layer() {
        let map = small_map(16, 5.0, 1.0);
        let grid = map.grid;
        let solver = factorized(&map, 2.0 * std::f64::consts::PI * 0.35).unwrap();
        let sol = solver.solve_green(grid.nx / 2, grid.ny / 2).unwrap();
        let t = grid.pml.thickness_cells;
        let inner = sol.u[(grid.nx - 1 - t, grid.ny / 2)].norm();
        let outer = sol.u[(grid.nx - 1, grid.ny / 2)].norm();
        assert!(
            outer < 1e-6 * inner,
            "PML decay too weak: inner {inner:.3e}, outer {outer:.3e}"
        );
    }
}
