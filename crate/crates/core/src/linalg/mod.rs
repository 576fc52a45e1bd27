//! Weighted finite-dimensional linear algebra.
//!
//! Every space carries quadrature weights `w`, and every norm, adjoint and
//! singular value is taken with respect to `⟨u, v⟩ = Σ wᵢ uᵢ vᵢ`. The usual
//! trick applies throughout: `W^{1/2}` is an isometry onto Euclidean space,
//! so weighted problems are solved as Euclidean ones in scaled coordinates.
//!
//! The graph norm of an operator is the Hilbert form `(|f|² + |Mf|²)^{1/2}`.
//! It differs from `|f| + |Mf|` by at most [`GRAPH_NORM_EQUIVALENCE`], and
//! turns graph balls into ellipsoids.

mod map;
mod operator;
mod pencil;
mod space;
mod subspace;

pub use map::{spectral_norm, LinearMap};
pub use operator::{graph_gram, DomainOperator};
pub use pencil::{max_eig_pencil, max_eig_pencil_factored, PencilMax};
pub use space::DiscretizedSpace;
pub use subspace::{
    null_space, numerical_rank, range_space, subspace_contained, Containment, Subspace, DEFAULT_RANK_TOL,
};

pub(crate) use operator::{scale_rows, weighted_gram};
pub(crate) use pencil::Factor;
pub(crate) use subspace::euclidean_kernel;

/// `(|f|² + |Mf|²)^{1/2} ≤ |f| + |Mf| ≤ √2 · (|f|² + |Mf|²)^{1/2}`.
pub const GRAPH_NORM_EQUIVALENCE: f64 = std::f64::consts::SQRT_2;
