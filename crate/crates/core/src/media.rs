//! Simulation geometry: uniform grid with a PML annulus, and permittivity
//! map builders (homogeneous background, cylinder lattice with a defect,
//! raster import).
//!
//! Units: the lattice constant a is the length unit (a = 1) and the vacuum
//! wave speed is 1, so frequencies are reported in units of 2*pi/a.

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Perfectly-matched-layer parameters, shared by all four sides.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PmlSpec {
    /// Layer thickness per side, in cells.
    pub thickness_cells: usize,
    /// Polynomial grading order of the absorption profile.
    pub polynomial_order: u32,
    /// Round-trip amplitude reflection design target at normal incidence.
    pub target_reflection: f64,
}

impl Default for PmlSpec {
    fn default() -> Self {
        // 1e-14 keeps the one-way field decay across the layer above six
        // orders of magnitude with margin to spare.
        PmlSpec {
            thickness_cells: 16,
            polynomial_order: 3,
            target_reflection: 1e-14,
        }
    }
}

impl PmlSpec {
    pub fn validate(&self) -> Result<()> {
        if self.thickness_cells < 8 {
            return Err(Error::Geometry(format!(
                "PML thickness must be >= 8 cells, got {}",
                self.thickness_cells
            )));
        }
        if !(2..=4).contains(&self.polynomial_order) {
            return Err(Error::Geometry(format!(
                "PML polynomial order must be in [2, 4], got {}",
                self.polynomial_order
            )));
        }
        if !(self.target_reflection > 0.0 && self.target_reflection < 1.0) {
            return Err(Error::Geometry(format!(
                "PML target reflection must be in (0, 1), got {}",
                self.target_reflection
            )));
        }
        Ok(())
    }
}

/// Uniform 2D grid. Node `(ix, iy)` sits at `origin + (ix*dx, iy*dx)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    /// Cell size in units of the lattice constant a.
    pub dx: f64,
    /// Physical coordinate of node (0, 0).
    pub origin: [f64; 2],
    pub pml: PmlSpec,
}

impl Grid {
    /// Grid of `nx` x `ny` nodes centered on the coordinate origin.
    pub fn centered(nx: usize, ny: usize, dx: f64, pml: PmlSpec) -> Result<Self> {
        let grid = Grid {
            nx,
            ny,
            dx,
            origin: [-0.5 * (nx - 1) as f64 * dx, -0.5 * (ny - 1) as f64 * dx],
            pml,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Smallest centered grid whose PML-free interior spans at least
    /// `lx` x `ly` (physical units) at `cells_per_unit` resolution.
    pub fn for_interior(lx: f64, ly: f64, cells_per_unit: usize, pml: PmlSpec) -> Result<Self> {
        let dx = 1.0 / cells_per_unit as f64;
        let nx = (lx / dx).ceil() as usize + 2 * pml.thickness_cells + 1;
        let ny = (ly / dx).ceil() as usize + 2 * pml.thickness_cells + 1;
        Grid::centered(nx, ny, dx, pml)
    }

    pub fn validate(&self) -> Result<()> {
        self.pml.validate()?;
        if self.nx < 16 || self.ny < 16 {
            return Err(Error::Geometry(format!(
                "grid must be at least 16x16 cells, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.dx > 0.0) {
            return Err(Error::Geometry(format!("dx must be positive, got {}", self.dx)));
        }
        let t = self.pml.thickness_cells;
        if self.nx <= 2 * t + 2 || self.ny <= 2 * t + 2 {
            return Err(Error::Geometry(
                "PML layers leave no interior region".into(),
            ));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn position(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.dx,
            self.origin[1] + iy as f64 * self.dx,
        ]
    }

    /// Nearest node to a physical position; `None` if outside the grid.
    pub fn nearest_node(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let fx = (x[0] - self.origin[0]) / self.dx;
        let fy = (x[1] - self.origin[1]) / self.dx;
        let ix = fx.round();
        let iy = fy.round();
        if ix < 0.0 || iy < 0.0 || ix >= self.nx as f64 || iy >= self.ny as f64 {
            return None;
        }
        Some((ix as usize, iy as usize))
    }

    /// Whether node `(ix, iy)` lies inside the PML annulus.
    pub fn in_pml(&self, ix: usize, iy: usize) -> bool {
        let t = self.pml.thickness_cells;
        ix < t || iy < t || ix >= self.nx - t || iy >= self.ny - t
    }

    /// Inclusive index bounds of the PML-free interior: `(ix_lo, ix_hi, iy_lo, iy_hi)`.
    pub fn interior_bounds(&self) -> (usize, usize, usize, usize) {
        let t = self.pml.thickness_cells;
        (t, self.nx - 1 - t, t, self.ny - 1 - t)
    }

    /// Depth into the PML along x at node `ix`, in physical units (0 in the interior).
    pub fn pml_depth_x(&self, ix: f64) -> f64 {
        let t = self.pml.thickness_cells as f64;
        let lo = t - ix;
        let hi = ix - (self.nx as f64 - 1.0 - t);
        lo.max(hi).max(0.0) * self.dx
    }

    pub fn pml_depth_y(&self, iy: f64) -> f64 {
        let t = self.pml.thickness_cells as f64;
        let lo = t - iy;
        let hi = iy - (self.ny as f64 - 1.0 - t);
        lo.max(hi).max(0.0) * self.dx
    }
}

/// Discretized relative permittivity on a grid. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityMap {
    pub grid: Grid,
    /// Relative permittivity per node, indexed `[(ix, iy)]`.
    pub eps: Array2<f64>,
    /// Background permittivity the map relaxes to at the boundary.
    pub eps_background: f64,
}

impl PermittivityMap {
    fn new(grid: Grid, eps: Array2<f64>, eps_background: f64) -> Result<Self> {
        let map = PermittivityMap {
            grid,
            eps,
            eps_background,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.eps.dim() != (self.grid.nx, self.grid.ny) {
            return Err(Error::Geometry("eps array does not match grid".into()));
        }
        if !(self.eps_background > 0.0) {
            return Err(Error::Geometry(format!(
                "background permittivity must be positive, got {}",
                self.eps_background
            )));
        }
        if self.eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::Geometry(
                "permittivity must be positive and finite everywhere".into(),
            ));
        }
        // Asymptotic homogeneity: the PML region and the first interior ring
        // must carry the background value.
        let t = self.grid.pml.thickness_cells;
        for ix in 0..self.grid.nx {
            for iy in 0..self.grid.ny {
                let depth = ix
                    .min(iy)
                    .min(self.grid.nx - 1 - ix)
                    .min(self.grid.ny - 1 - iy);
                if depth <= t && (self.eps[(ix, iy)] - self.eps_background).abs() > 1e-12 {
                    return Err(Error::Geometry(format!(
                        "permittivity differs from background near the boundary at ({ix}, {iy})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over grid parameters and the raw permittivity samples.
    /// Used as the cache identity of the geometry.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"permittivity-map-v1");
        h.update((self.grid.nx as u64).to_le_bytes());
        h.update((self.grid.ny as u64).to_le_bytes());
        h.update(self.grid.dx.to_le_bytes());
        h.update(self.grid.origin[0].to_le_bytes());
        h.update(self.grid.origin[1].to_le_bytes());
        h.update((self.grid.pml.thickness_cells as u64).to_le_bytes());
        h.update((self.grid.pml.polynomial_order as u64).to_le_bytes());
        h.update(self.grid.pml.target_reflection.to_le_bytes());
        h.update(self.eps_background.to_le_bytes());
        for &v in self.eps.iter() {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }

    /// Plain-text raster export: header `nx ny dx`, then row-major values
    /// (iy outer, ix inner).
    pub fn to_raster_text(&self) -> String {
        let mut s = format!("{} {} {:.17e}\n", self.grid.nx, self.grid.ny, self.grid.dx);
        for iy in 0..self.grid.ny {
            let row: Vec<String> = (0..self.grid.nx)
                .map(|ix| format!("{:.17e}", self.eps[(ix, iy)]))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parse the plain-text raster format. The grid is centered on the origin.
    pub fn from_raster_text(text: &str, eps_background: f64, pml: PmlSpec) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::Format(format!("raster: missing {what}")))
        };
        let nx: usize = next("nx")?
            .parse()
            .map_err(|e| Error::Format(format!("raster nx: {e}")))?;
        let ny: usize = next("ny")?
            .parse()
            .map_err(|e| Error::Format(format!("raster ny: {e}")))?;
        let dx: f64 = next("dx")?
            .parse()
            .map_err(|e| Error::Format(format!("raster dx: {e}")))?;
        let grid = Grid::centered(nx, ny, dx, pml)?;
        let mut eps = Array2::zeros((nx, ny));
        for iy in 0..ny {
            for ix in 0..nx {
                let v: f64 = next("value")?
                    .parse()
                    .map_err(|e| Error::Format(format!("raster value: {e}")))?;
                eps[(ix, iy)] = v;
            }
        }
        if tokens.next().is_some() {
            return Err(Error::Format("raster: trailing data".into()));
        }
        PermittivityMap::new(grid, eps, eps_background)
    }
}

/// Square lattice of dielectric cylinders with a central defect cylinder.
/// Lengths are in units of the lattice constant (spacing 1).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CylinderLattice {
    pub rows: usize,
    pub cols: usize,
    pub rod_radius: f64,
    pub defect_radius: f64,
    pub rod_eps: f64,
    /// (row, col) lattice index of the defect cylinder.
    pub defect_position: (usize, usize),
}

impl CylinderLattice {
    /// Lattice with the defect at the central site (`rows`, `cols` odd).
    pub fn with_central_defect(
        rows: usize,
        cols: usize,
        rod_radius: f64,
        defect_radius: f64,
        rod_eps: f64,
    ) -> Self {
        CylinderLattice {
            rows,
            cols,
            rod_radius,
            defect_radius,
            rod_eps,
            defect_position: (rows / 2, cols / 2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rmax = 1.0 / 2f64.sqrt();
        for (name, r) in [("rod_radius", self.rod_radius), ("defect_radius", self.defect_radius)] {
            if !(r > 0.0 && r < rmax) {
                return Err(Error::Geometry(format!(
                    "{name} must lie in (0, a/sqrt(2)), got {r}"
                )));
            }
        }
        if self.rod_eps < 1.0 {
            return Err(Error::Geometry(format!(
                "rod permittivity must be >= 1, got {}",
                self.rod_eps
            )));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Geometry("lattice must have at least one rod".into()));
        }
        if self.defect_position.0 >= self.rows || self.defect_position.1 >= self.cols {
            return Err(Error::Geometry("defect position outside lattice".into()));
        }
        Ok(())
    }

    fn max_radius(&self) -> f64 {
        self.rod_radius.max(self.defect_radius)
    }

    /// Cylinder centers and radii, lattice centered on the coordinate origin.
    pub fn cylinders(&self) -> Vec<([f64; 2], f64)> {
        let cx0 = -0.5 * (self.cols - 1) as f64;
        let cy0 = -0.5 * (self.rows - 1) as f64;
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let radius = if (r, c) == self.defect_position {
                    self.defect_radius
                } else {
                    self.rod_radius
                };
                out.push(([cx0 + c as f64, cy0 + r as f64], radius));
            }
        }
        out
    }

    /// Physical center of the defect cylinder.
    pub fn defect_center(&self) -> [f64; 2] {
        let (r, c) = self.defect_position;
        [
            -0.5 * (self.cols - 1) as f64 + c as f64,
            -0.5 * (self.rows - 1) as f64 + r as f64,
        ]
    }
}

/// Uniform map `eps(x) = eps0`.
pub fn build_homogeneous(grid: Grid, eps0: f64) -> Result<PermittivityMap> {
    if !(eps0 > 0.0) {
        return Err(Error::Geometry(format!(
            "background permittivity must be positive, got {eps0}"
        )));
    }
    PermittivityMap::new(grid, Array2::from_elem((grid.nx, grid.ny), eps0), eps0)
}

/// Supersampling rate per axis for cells cut by a cylinder boundary.
const SUBSAMPLES: usize = 16;

/// Rasterize a cylinder lattice onto the grid with area-weighted permittivity
/// on boundary cells. Background permittivity is `eps0`.
pub fn build_crystal(spec: &CylinderLattice, grid: Grid, eps0: f64) -> Result<PermittivityMap> {
    spec.validate()?;
    grid.validate()?;
    if !(eps0 > 0.0) {
        return Err(Error::Geometry(format!(
            "background permittivity must be positive, got {eps0}"
        )));
    }

    // The lattice plus a 1a homogeneous margin must fit inside the PML-free
    // interior.
    let (ix_lo, ix_hi, iy_lo, iy_hi) = grid.interior_bounds();
    let interior_lx = (ix_hi - ix_lo) as f64 * grid.dx;
    let interior_ly = (iy_hi - iy_lo) as f64 * grid.dx;
    let extent_x = (spec.cols - 1) as f64 + 2.0 * spec.max_radius();
    let extent_y = (spec.rows - 1) as f64 + 2.0 * spec.max_radius();
    if extent_x + 2.0 > interior_lx || extent_y + 2.0 > interior_ly {
        return Err(Error::Geometry(format!(
            "lattice ({extent_x:.2} x {extent_y:.2}) plus 1a margin exceeds the \
             PML-free interior ({interior_lx:.2} x {interior_ly:.2})"
        )));
    }

    let cylinders = spec.cylinders();
    let half_diag = grid.dx * std::f64::consts::SQRT_2 / 2.0;
    let reach = spec.max_radius() + 2.0 * half_diag;

    let mut eps = Array2::from_elem((grid.nx, grid.ny), eps0);
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let p = grid.position(ix, iy);
            // Candidate cylinders near this cell.
            let mut near: Vec<&([f64; 2], f64)> = Vec::new();
            let mut inside = false;
            for cyl in &cylinders {
                let d = ((p[0] - cyl.0[0]).powi(2) + (p[1] - cyl.0[1]).powi(2)).sqrt();
                if d + half_diag < cyl.1 {
                    inside = true;
                    break;
                }
                if d < reach + cyl.1 {
                    near.push(cyl);
                }
            }
            let frac = if inside {
                1.0
            } else if near.is_empty() {
                0.0
            } else if near
                .iter()
                .all(|c| dist(p, c.0) - c.1 > half_diag)
            {
                0.0
            } else {
                cell_coverage(p, grid.dx, &near)
            };
            eps[(ix, iy)] = eps0 + frac * (spec.rod_eps - eps0);
        }
    }
    PermittivityMap::new(grid, eps, eps0)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Fraction of the cell centered at `p` covered by the union of `cylinders`,
/// estimated on a SUBSAMPLES x SUBSAMPLES midpoint lattice.
fn cell_coverage(p: [f64; 2], dx: f64, cylinders: &[&([f64; 2], f64)]) -> f64 {
    let n = SUBSAMPLES;
    let mut hit = 0usize;
    for sx in 0..n {
        let ox = p[0] + dx * ((sx as f64 + 0.5) / n as f64 - 0.5);
        for sy in 0..n {
            let oy = p[1] + dx * ((sy as f64 + 0.5) / n as f64 - 0.5);
            if cylinders
                .iter()
                .any(|c| (ox - c.0[0]).powi(2) + (oy - c.0[1]).powi(2) < c.1 * c.1)
            {
                hit += 1;
            }
        }
    }
    hit as f64 / (n * n) as f64
}

/// Result of snapping an emitter position onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitterSite {
    pub ix: usize,
    pub iy: usize,
    /// False if the permittivity at the node differs from the background
    /// (the emitter is normally assumed to sit in the background medium).
    pub eps_matches_background: bool,
}

/// Snap `x_d` to the nearest grid node. Errors if the position falls in the
/// PML or outside the grid.
pub fn emitter_site(map: &PermittivityMap, x_d: [f64; 2]) -> Result<EmitterSite> {
    let (ix, iy) = map
        .grid
        .nearest_node(x_d)
        .ok_or(Error::OutsideInterior(x_d[0], x_d[1]))?;
    if map.grid.in_pml(ix, iy) {
        return Err(Error::OutsideInterior(x_d[0], x_d[1]));
    }
    let eps_here = map.eps[(ix, iy)];
    Ok(EmitterSite {
        ix,
        iy,
        eps_matches_background: (eps_here - map.eps_background).abs() <= 1e-9,
    })
}
