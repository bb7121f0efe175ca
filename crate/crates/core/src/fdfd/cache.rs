//! Binary cache files for field solutions.
//!
//! Layout (all integers and floats little-endian):
//! magic `FPFIELD1`, nx u32, ny u32, dx f64, omega f64, eps_background f64,
//! source tag u8 (0 = dipole, 1 = plane wave) + payload, geometry hash
//! (32 bytes), then nx*ny interleaved (re, im) f64 pairs, iy-major.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::media::{Grid, PmlSpec};

use super::{FieldSolution, Source};

const MAGIC: &[u8; 8] = b"FPFIELD1";

/// Write a field solution together with the geometry content hash it was
/// computed on. The write is atomic (temp file + rename).
pub fn write_field_solution(
    path: &Path,
    sol: &FieldSolution,
    geometry_hash: [u8; 32],
) -> Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(128 + 16 * sol.u.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(sol.grid.nx as u32).to_le_bytes());
    buf.extend_from_slice(&(sol.grid.ny as u32).to_le_bytes());
    buf.extend_from_slice(&sol.grid.dx.to_le_bytes());
    buf.extend_from_slice(&sol.omega.to_le_bytes());
    buf.extend_from_slice(&sol.eps_background.to_le_bytes());
    match sol.source {
        Source::Dipole { ix, iy } => {
            buf.push(0);
            buf.extend_from_slice(&(ix as u32).to_le_bytes());
            buf.extend_from_slice(&(iy as u32).to_le_bytes());
            buf.extend_from_slice(&[0u8; 8]);
        }
        Source::PlaneWave { dir } => {
            buf.push(1);
            buf.extend_from_slice(&dir[0].to_le_bytes());
            buf.extend_from_slice(&dir[1].to_le_bytes());
        }
    }
    buf.extend_from_slice(&geometry_hash);
    for iy in 0..sol.grid.ny {
        for ix in 0..sol.grid.nx {
            let v = sol.u[(ix, iy)];
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }

    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a cached field solution. When `expected_geometry` is given, a header
/// mismatch is an error (forcing recompute rather than silent reuse).
///
/// The grid PML block is not stored in the file; the caller supplies it (it
/// is part of the geometry hash, so a mismatch is caught by the hash check).
pub fn read_field_solution(
    path: &Path,
    pml: PmlSpec,
    expected_geometry: Option<[u8; 32]>,
) -> Result<(FieldSolution, [u8; 32])> {
    let mut f = std::fs::File::open(path)?;
    let mut data = Vec::new();
    f.read_to_end(&mut data)?;
    let mut cur = &data[..];

    let mut take = |n: usize| -> Result<&[u8]> {
        if cur.len() < n {
            return Err(Error::Format("field cache file truncated".into()));
        }
        let (head, tail) = cur.split_at(n);
        cur = tail;
        Ok(head)
    };

    if take(8)? != MAGIC {
        return Err(Error::Format("bad magic in field cache file".into()));
    }
    let nx = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let dx = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let omega = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let eps_background = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let tag = take(1)?[0];
    let source = match tag {
        0 => {
            let ix = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
            let iy = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
            take(8)?;
            Source::Dipole { ix, iy }
        }
        1 => {
            let dx0 = f64::from_le_bytes(take(8)?.try_into().unwrap());
            let dy0 = f64::from_le_bytes(take(8)?.try_into().unwrap());
            Source::PlaneWave { dir: [dx0, dy0] }
        }
        t => return Err(Error::Format(format!("unknown source tag {t}"))),
    };
    let hash: [u8; 32] = take(32)?.try_into().unwrap();
    if let Some(expected) = expected_geometry {
        if hash != expected {
            return Err(Error::Format(
                "geometry hash mismatch in field cache file".into(),
            ));
        }
    }

    let grid = Grid::centered(nx, ny, dx, pml)?;
    let mut u = Array2::from_elem((nx, ny), Complex64::default());
    for iy in 0..ny {
        for ix in 0..nx {
            let re = f64::from_le_bytes(take(8)?.try_into().unwrap());
            let im = f64::from_le_bytes(take(8)?.try_into().unwrap());
            u[(ix, iy)] = Complex64::new(re, im);
        }
    }
    if !cur.is_empty() {
        return Err(Error::Format("trailing bytes in field cache file".into()));
    }

    Ok((
        FieldSolution {
            grid,
            omega,
            eps_background,
            source,
            u,
            normalization: "loaded from cache".into(),
        },
        hash,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{build_homogeneous, Grid};

    #[test]
    fn round_trip_and_corruption_detection() {
        let grid = Grid::for_interior(4.0, 4.0, 16, PmlSpec::default()).unwrap();
        let map = build_homogeneous(grid, 1.0).unwrap();
        let solver = crate::fdfd::factorized(&map, 2.0).unwrap();
        let sol = solver.solve_green(grid.nx / 2, grid.ny / 2).unwrap();
        let hash = map.content_hash();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        write_field_solution(&path, &sol, hash).unwrap();

        let (back, h) = read_field_solution(&path, grid.pml, Some(hash)).unwrap();
        assert_eq!(h, hash);
        assert_eq!(back.u, sol.u);
        assert_eq!(back.source, sol.source);
        assert_eq!(back.omega, sol.omega);

        // Wrong expected hash -> refuse.
        let mut other = hash;
        other[0] ^= 0xff;
        assert!(read_field_solution(&path, grid.pml, Some(other)).is_err());

        // Corrupt the header -> refuse.
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[3] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_field_solution(&path, grid.pml, Some(hash)).is_err());
    }
}
