//! Few-photon scattering matrices for a two-level emitter embedded in a 2D
//! inhomogeneous dielectric.
//!
//! The crate combines a classical frequency-domain Helmholtz solver with the
//! emitter's excitation Green's functions to assemble quantum scattering
//! matrices, scattering cross sections, and the Schmidt analysis of scattered
//! two-photon states:
//!
//! - [`media`]: grids, PML parameters, permittivity builders.
//! - [`fdfd`]: sparse frequency-domain solver, Green's functions, plane-wave
//!   scattering, near-to-far transforms.
//! - [`emitter`]: non-Markovian single-excitation response from Lorentzian
//!   fits of the bath spectral function, and the two-excitation kernel.
//! - [`smatrix`]: N-particle scattering-matrix assembly (N <= 3), cross
//!   sections, homogeneous-bath analytic oracles.
//! - [`twophoton`]: two-photon output kernels and their Schmidt decomposition.
//! - [`markovian`]: correlation functions of general finite-level systems
//!   under the Markovian approximation.

pub mod bessel;
pub mod error;
mod linalg;
pub mod media;
pub mod fdfd;
pub mod emitter;
pub mod smatrix;
pub mod twophoton;
pub mod markovian;

pub use error::{Error, Result};
pub use media::{
    build_crystal, build_homogeneous, emitter_site, CylinderLattice, EmitterSite, Grid,
    PermittivityMap, PmlSpec,
};
pub use fdfd::{FarField, FieldSolution, HelmholtzOperator, HelmholtzSolver, Source};
pub use emitter::{EmitterParams, EmitterResponse, LorentzianFit, LorentzianTerm};
pub use smatrix::CrossSectionSpectrum;
pub use twophoton::{GaussianInput, SchmidtResult, TwoPhotonKernel};
