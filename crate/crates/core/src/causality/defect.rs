use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{
    euclidean_kernel, max_eig_pencil_factored, scale_rows, DomainOperator, Factor, LinearMap, DEFAULT_RANK_TOL,
};
use crate::resolution::ProjectionFamily;
use crate::{Error, Result};

/// Default factor in the verdict threshold `defect0 ≤ verdict·(‖M‖ + 1)`.
pub const DEFAULT_VERDICT_TOL: f64 = 1e-9;

/// Idempotency slack accepted by [`factorization_defect`].
pub const IDEMPOTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold for null spaces.
    pub rank: f64,
    /// Verdict threshold factor.
    pub verdict: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: DEFAULT_RANK_TOL, verdict: DEFAULT_VERDICT_TOL }
    }
}

impl Tolerances {
    fn check(&self) -> Result<()> {
        for (name, x) in [("rank", self.rank), ("verdict", self.verdict)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} tolerance must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Compatible,
    Incompatible,
    /// `N(P) ∩ D(M) = {0}`: compatibility holds because nothing is constrained.
    Vacuous,
}

impl Verdict {
    /// Compatible or vacuous.
    pub fn is_causal(self) -> bool {
        !matches!(self, Verdict::Incompatible)
    }
}

/// Outcome of a compatibility check for one projection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalityReport {
    pub verdict: Verdict,
    /// `max |QMu|` over `u ∈ N(P) ∩ D(M)` of unit graph norm.
    pub defect0: f64,
    pub threshold: f64,
    /// Dimension of `N(P) ∩ D(M)` at rank tolerance.
    pub kernel_dim: usize,
    /// Element of `N(P) ∩ D(M)` with unit graph norm attaining `defect0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

impl CausalityReport {
    pub fn witness_vector(&self) -> Option<DVector<f64>> {
        self.witness.as_ref().map(|w| DVector::from_column_slice(w))
    }
}

/// Coefficient-space basis of `{c : P D c = 0}`.
pub(crate) enum Kernel {
    /// Identity domain basis with diagonal `P`: coordinate directions.
    Coordinates(Vec<usize>),
    /// Columns of a `k × r` matrix.
    Dense(DMatrix<f64>),
}

impl Kernel {
    pub(crate) fn dim(&self) -> usize {
        match self {
            Kernel::Coordinates(idx) => idx.len(),
            Kernel::Dense(k) => k.ncols(),
        }
    }

    /// `X K` for a matrix `X` with `k` columns.
    pub(crate) fn right_apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Kernel::Coordinates(idx) => x.select_columns(idx.iter()),
            Kernel::Dense(k) => x * k,
        }
    }

    /// `Kᵀ G K`.
    pub(crate) fn restrict_gram(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Kernel::Coordinates(idx) => g.select_rows(idx.iter()).select_columns(idx.iter()),
            Kernel::Dense(k) => k.transpose() * g * k,
        }
    }

    /// `K y`, a coefficient vector.
    pub(crate) fn lift(&self, y: &DVector<f64>, k: usize) -> DVector<f64> {
        match self {
            Kernel::Coordinates(idx) => {
                let mut c = DVector::zeros(k);
                for (j, &i) in idx.iter().enumerate() {
                    c[i] = y[j];
                }
                c
            }
            Kernel::Dense(km) => km * y,
        }
    }

    pub(crate) fn transpose_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Kernel::Coordinates(idx) => DVector::from_fn(idx.len(), |j, _| v[idx[j]]),
            Kernel::Dense(k) => k.transpose() * v,
        }
    }
}

/// `Dᵀ W D = L Lᵀ` for the domain basis of `m`.
pub(crate) fn basis_factor(m: &DomainOperator) -> Result<Factor> {
    Factor::new(&m.basis_gram())
}

/// Null space of `c ↦ P D c`, measured in a basis-independent way: the
/// singular values are those of `P` restricted to `D(M)` with `D(M)` carrying
/// the norm of `X`.
pub(crate) fn coefficient_kernel(m: &DomainOperator, factor: &Factor, p: &LinearMap, rank_tol: f64) -> Kernel {
    if m.has_identity_basis() {
        if let Some(d) = p.diagonal() {
            let dmax = d.amax();
            let idx = (0..d.len()).filter(|&i| dmax == 0.0 || d[i].abs() <= rank_tol * dmax).collect();
            return Kernel::Coordinates(idx);
        }
    }
    let pd = p.left_multiply(m.domain_basis());
    let e = scale_rows(&pd, &m.source().sqrt_weights());
    // E L⁻ᵀ = (L⁻¹ Eᵀ)ᵀ
    let e_prime = factor.forward(&e.transpose()).transpose();
    let z = euclidean_kernel(&e_prime, rank_tol);
    let mut k = DMatrix::zeros(z.nrows(), z.ncols());
    for j in 0..z.ncols() {
        k.set_column(j, &factor.back_substitute(&z.column(j).into_owned()));
    }
    Kernel::Dense(k)
}

/// Reusable state for repeated compatibility checks of one operator: the
/// graph Gram matrix, the basis factorization and `‖M‖` are computed once.
pub struct CompatibilityEngine<'a> {
    m: &'a DomainOperator,
    gram: DMatrix<f64>,
    factor: Factor,
    norm: f64,
    tol: Tolerances,
}

impl<'a> CompatibilityEngine<'a> {
    pub fn new(m: &'a DomainOperator, tol: Tolerances) -> Result<Self> {
        tol.check()?;
        let factor = basis_factor(m)?;
        let norm = m.norm();
        if !norm.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { m, gram: m.graph_gram(), factor, norm, tol })
    }

    /// `‖M‖` on the core.
    pub fn operator_norm(&self) -> f64 {
        self.norm
    }

    pub fn threshold(&self) -> f64 {
        self.tol.verdict * (self.norm + 1.0)
    }

    /// Checks `N(P) ∩ D(M) ⊆ N(QM)` and measures the defect.
    pub fn report(&self, p: &LinearMap, q: &LinearMap) -> Result<CausalityReport> {
        let m = self.m;
        if p.source() != m.source() || p.target() != m.source() {
            return Err(Error::SpaceMismatch("P must be a map on the operator's source space".into()));
        }
        if q.source() != m.target() {
            return Err(Error::SpaceMismatch("Q must act on the operator's target space".into()));
        }
        let kernel = coefficient_kernel(m, &self.factor, p, self.tol.rank);
        let threshold = self.threshold();
        if kernel.dim() == 0 {
            return Ok(CausalityReport {
                verdict: Verdict::Vacuous,
                defect0: 0.0,
                threshold,
                kernel_dim: 0,
                witness: None,
                time: None,
            });
        }
        let a_k = kernel.right_apply(m.action());
        let f = scale_rows(&q.left_multiply(&a_k), &q.target().sqrt_weights());
        let g_k = kernel.restrict_gram(&self.gram);
        let best = max_eig_pencil_factored(&f, &g_k)?;
        let defect0 = best.value.sqrt();
        let c = kernel.lift(&best.witness, m.domain_dim());
        let witness = m.element(&c);
        Ok(CausalityReport {
            verdict: if defect0 <= threshold { Verdict::Compatible } else { Verdict::Incompatible },
            defect0,
            threshold,
            kernel_dim: kernel.dim(),
            witness: Some(witness.as_slice().to_vec()),
            time: None,
        })
    }
}

/// `P`-compatibility of `M`: the defect of `N(P) ∩ D(M) ⊆ N(PM)`.
pub fn compatibility_defect(m: &DomainOperator, p: &LinearMap, tol: Tolerances) -> Result<CausalityReport> {
    pq_compatibility_defect(m, p, p, tol)
}

/// `P`-`Q`-compatibility: the defect of `N(P) ∩ D(M) ⊆ N(QM)`.
pub fn pq_compatibility_defect(
    m: &DomainOperator,
    p: &LinearMap,
    q: &LinearMap,
    tol: Tolerances,
) -> Result<CausalityReport> {
    CompatibilityEngine::new(m, tol)?.report(p, q)
}

/// `‖PM − PMP‖`, zero exactly when the everywhere-defined `M` is
/// `P`-compatible.
pub fn factorization_defect(m: &LinearMap, p: &LinearMap) -> Result<f64> {
    if !m.is_square() || m.source() != p.source() || !p.is_square() {
        return Err(Error::SpaceMismatch("factorization needs M and P on the same space".into()));
    }
    let idem = p.idempotency_defect()?;
    if idem > IDEMPOTENCY_TOL * p.norm().max(1.0).powi(2) {
        return Err(Error::NotIdempotent(idem));
    }
    let pm = p.compose(m)?;
    let pmp = pm.compose(p)?;
    Ok(pm.sub(&pmp)?.norm())
}

/// Per-time reports and the aggregate verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalityRun {
    pub causal: bool,
    pub max_defect: f64,
    pub threshold: f64,
    pub operator_norm: f64,
    pub reports: Vec<CausalityReport>,
}

impl CausalityRun {
    pub fn all_vacuous(&self) -> bool {
        self.reports.iter().all(|r| r.verdict == Verdict::Vacuous)
    }

    /// First report with an incompatible verdict.
    pub fn first_violation(&self) -> Option<&CausalityReport> {
        self.reports.iter().find(|r| r.verdict == Verdict::Incompatible)
    }
}

/// Causality with respect to a family: `P_t`-compatibility at every sampled `t`.
pub fn is_causal(m: &DomainOperator, fam: &ProjectionFamily, tol: Tolerances) -> Result<CausalityRun> {
    if fam.space() != m.source() || m.target() != m.source() {
        return Err(Error::SpaceMismatch("family, source and target must share one space".into()));
    }
    let engine = CompatibilityEngine::new(m, tol)?;
    let mut reports = Vec::with_capacity(fam.len());
    for (t, p) in fam.iter() {
        let mut r = engine.report(&p, &p)?;
        r.time = Some(t);
        reports.push(r);
    }
    let max_defect = reports.iter().map(|r| r.defect0).fold(0.0, f64::max);
    Ok(CausalityRun {
        causal: reports.iter().all(|r| r.verdict.is_causal()),
        max_defect,
        threshold: engine.threshold(),
        operator_norm: engine.operator_norm(),
        reports,
    })
}
