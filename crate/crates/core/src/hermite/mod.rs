//! Hermite spans and the shift counterexample.
//!
//! On the span `H` of the Hermite functions every `P_a f = 0` forces `f = 0`,
//! so every operator on `H` is causal for vacuous reasons. The shift `τ_h`
//! with `h > 0` restricted to `H` is therefore causal, while its closure (the
//! shift on all of `L²`) is not. [`counterexample_run`] follows a sequence
//! `f_n ∈ H` whose past vanishes while the past of `τ_h f_n` does not.
//!
//! The span is built from orthonormalized Hermite functions rather than the
//! monomials `xⁿ e^{−x²/2}`: the spans agree, the monomial columns are
//! hopelessly ill-conditioned.

mod basis;
mod experiment;
mod margin;
mod shift;

pub use basis::{hermite_basis, hermite_basis_with_limit, hermite_functions, HermiteBasis, DEFAULT_TAIL_LIMIT};
pub use experiment::{
    counterexample_run, reference_bump, CounterexampleConfig, CounterexampleRow, CounterexampleSummary,
    CounterexampleTable, PAST_IN_LIMIT, PAST_OUT_FROM_DEGREE, PAST_OUT_RATIO, VERDICT_CAUSAL, VERDICT_INCONCLUSIVE,
    VERDICT_WITNESS,
};
pub use margin::{injectivity_margin, injectivity_margins_mp, span_margin, DEFAULT_PRECISION_BITS};
pub use shift::{exact_steps, shift_norm, shift_operator};
