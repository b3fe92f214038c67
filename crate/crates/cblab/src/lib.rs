//! A numerical laboratory for lattice elastodynamics.
//!
//! The crate implements Newtonian dynamics of a finite-range interaction
//! lattice on a bounded domain with time-dependent boundary values, the
//! Cauchy-Born continuum counterpart driven by manufactured solutions, the
//! phonon-level stability constants relating the two models, and experiment
//! drivers that measure residual decay and atomistic-to-continuum
//! convergence rates at desk scale.
//!
//! Module map:
//!
//! * [`lattice`] — lattice geometry, index sets, discrete difference
//!   operators, discrete norms, and the discrete-harmonic extension.
//! * [`potential`] — site potentials on bond-difference matrices with
//!   analytic derivatives, and the Cauchy-Born energy density.
//! * [`stability`] — continuum (rank-one) and atomistic (wave-vector)
//!   stability constants, the finite-lattice constant, and a numerical
//!   coercivity verifier for variable coefficients.
//! * [`reference`] — manufactured space-time deformations, mollified
//!   reference data, cell averages, and the dynamic boundary norm.
//! * [`dynamics`] — the velocity-Verlet integrator for the lattice
//!   initial-boundary-value problem with driven boundary layer.
//! * [`harness`] — scenario configuration, experiment drivers, rate
//!   fitting, and CSV output; the CLI binary is a thin wrapper over it.

// Indexed loops over multiple parallel buffers are the clearest idiom in
// the stencil kernels, and negated comparisons are deliberate NaN-
// rejecting guards on user input.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod potential;
pub mod reference;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
