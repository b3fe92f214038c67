//! Manufactured continuum solutions and the reference-data pipeline:
//! analytic deformation families (serving as their own extension
//! operators), mollification at the lattice scale, cell averages, the
//! per-site reference force, compatibility traces, and the
//! time-dependent boundary norm.

mod dyn_norm;
mod family;
mod manufactured;
mod mollifier;

pub use dyn_norm::{
    dyn_boundary_norm, functional_value, k_eps_minimizer, BoundarySignal, DynNormReport,
    SpaceTimeField, TimeGrid,
};
pub use family::{ReferenceFamily, SmoothReference};
pub use manufactured::{
    boundary_samples, cauchy_born_divergence, cell_average, compatibility_check, f_ref,
    mms_force, CompatibilityReport, ManufacturedData, DEFAULT_CELL_QUAD_ORDER,
};
pub use mollifier::{bump, gauss_legendre, MollifiedReference, Mollifier, DEFAULT_MOLLIFIER_ORDER};
