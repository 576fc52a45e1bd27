//! Compatibility and causality of linear operators.
//!
//! For a projection `P`, a linear `M` is `P`-compatible when
//! `N(P) ∩ D(M) ⊆ N(PM)`. The defect
//!
//! ```text
//! defect0 = max { |P M u| : u ∈ N(P) ∩ D(M), (|u|² + |Mu|²)^{1/2} = 1 }
//! ```
//!
//! is a generalized eigenvalue problem on the kernel. Causality with respect
//! to a family is compatibility at every sampled time. The strong variant
//! measures how `P M` behaves on graph balls when `|Pu|` is only small; see
//! [`modulus`].

mod closure;
mod defect;
mod equivalence;
pub mod modulus;
mod pointwise;

pub use closure::{closure_extension, ClosureExtension, ClosureSummary};
pub use defect::{
    compatibility_defect, factorization_defect, is_causal, pq_compatibility_defect, CausalityReport, CausalityRun,
    CompatibilityEngine, Tolerances, Verdict, DEFAULT_VERDICT_TOL, IDEMPOTENCY_TOL,
};
pub use equivalence::{
    bidual_collapse_check, canonical_probes, theorem_equivalence_check, BidualReport, EquivalenceReport, ProbeOutcome,
    CLOSURE_STABILITY_TOL, MAX_PROBES,
};
pub use modulus::{modulus_curve, strong_modulus, CurveClass, LineFit, ModulusCurve, ModulusPoint, ModulusProblem};
pub use pointwise::{pointwise_compatibility, PointwiseReport, PointwiseViolation, Sample};
