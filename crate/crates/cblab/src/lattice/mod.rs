//! Lattice geometry and discrete calculus.
//!
//! Sites live on eps*Z^d. The domain splits them into the semi-interior
//! (difference quotients well defined), the full interior (equations of
//! motion act there), and the boundary layer (data prescribed there).
//! On top of the index sets sit the difference operators, the discrete
//! norms, and the discrete-harmonic extension of boundary data.

mod domain;
pub(crate) mod extension;
mod field;
pub(crate) mod ops;
mod stencil;

pub use domain::{build_domain, DomainDescriptor, DomainShape, LatticeDomain, SiteClass};
pub use extension::{boundary_norm_static, harmonic_extension};
pub use field::{BoundaryData, LatticeField, StencilField};
pub use ops::{
    discrete_divergence, discrete_gradient, gradient_all, gram_scatter, h1_inner, l2_inner,
    norm_h1, norm_l2,
};
pub use stencil::InteractionStencil;
