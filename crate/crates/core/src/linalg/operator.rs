use nalgebra::{DMatrix, DVector};

use super::{pencil, DiscretizedSpace, LinearMap, DEFAULT_RANK_TOL};
use crate::{Error, Result};

/// Linear operator `M : D(M) ⊆ X → Y` given on an explicit core.
///
/// `domain_basis` holds `k` columns spanning `D(M)`; column `j` of `action`
/// is `M` applied to column `j` of the basis. Elements of the domain are
/// addressed by coefficient vectors `c ∈ ℝᵏ`: `f = D c`, `M f = A c`.
#[derive(Debug, Clone)]
pub struct DomainOperator {
    source: DiscretizedSpace,
    target: DiscretizedSpace,
    domain_basis: DMatrix<f64>,
    action: DMatrix<f64>,
    identity_basis: bool,
}

impl DomainOperator {
    pub fn new(
        source: DiscretizedSpace,
        target: DiscretizedSpace,
        domain_basis: DMatrix<f64>,
        action: DMatrix<f64>,
    ) -> Result<Self> {
        let (n, k) = domain_basis.shape();
        if n != source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "domain basis has {n} rows, source dimension is {}",
                source.dim()
            )));
        }
        if k == 0 || k > n {
            return Err(Error::DimensionMismatch(format!("domain basis has {k} columns, need 1..={n}")));
        }
        if action.shape() != (target.dim(), k) {
            return Err(Error::DimensionMismatch(format!(
                "action is {:?}, expected ({}, {k})",
                action.shape(),
                target.dim()
            )));
        }
        if domain_basis.iter().chain(action.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("operator data has non-finite entries".into()));
        }
        let identity_basis = k == n && domain_basis == DMatrix::identity(n, n);
        if !identity_basis {
            let sw = source.sqrt_weights();
            let z = DMatrix::from_fn(n, k, |i, j| sw[i] * domain_basis[(i, j)]);
            let s = z.singular_values();
            let ratio = if s.max() > 0.0 { s.min() / s.max() } else { 0.0 };
            if ratio <= DEFAULT_RANK_TOL {
                return Err(Error::RankDeficient(ratio));
            }
        }
        Ok(Self { source, target, domain_basis, action, identity_basis })
    }

    /// Everywhere-defined operator with the identity as domain basis.
    pub fn full(map: &LinearMap) -> Self {
        let n = map.source().dim();
        Self {
            source: map.source().clone(),
            target: map.target().clone(),
            domain_basis: DMatrix::identity(n, n),
            action: map.matrix().clone(),
            identity_basis: true,
        }
    }

    /// Restriction of a bounded map to the span of `basis`.
    pub fn restrict(map: &LinearMap, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != map.source().dim() {
            return Err(Error::DimensionMismatch("basis rows differ from the map's source".into()));
        }
        let action = map.left_multiply(&basis);
        Self::new(map.source().clone(), map.target().clone(), basis, action)
    }

    pub fn source(&self) -> &DiscretizedSpace {
        &self.source
    }

    pub fn target(&self) -> &DiscretizedSpace {
        &self.target
    }

    pub fn domain_basis(&self) -> &DMatrix<f64> {
        &self.domain_basis
    }

    pub fn action(&self) -> &DMatrix<f64> {
        &self.action
    }

    /// Dimension `k` of the core.
    pub fn domain_dim(&self) -> usize {
        self.domain_basis.ncols()
    }

    pub fn has_identity_basis(&self) -> bool {
        self.identity_basis
    }

    pub fn is_spanning(&self) -> bool {
        self.domain_dim() == self.source.dim()
    }

    pub fn element(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.domain_basis * coeffs
    }

    pub fn image(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.action * coeffs
    }

    /// Hilbert graph norm `(|f|² + |Mf|²)^{1/2}` of `f = D c`.
    pub fn graph_norm(&self, coeffs: &DVector<f64>) -> f64 {
        let f = self.element(coeffs);
        let mf = self.image(coeffs);
        (self.source.inner(&f, &f) + self.target.inner(&mf, &mf)).sqrt()
    }

    /// `Dᵀ W_X D`, the Gram matrix of the domain basis.
    pub fn basis_gram(&self) -> DMatrix<f64> {
        if self.identity_basis {
            return DMatrix::from_diagonal(self.source.weights());
        }
        weighted_gram(&self.domain_basis, self.source.weights())
    }

    /// `Dᵀ W_X D + Aᵀ W_Y A`: the graph inner product in coefficient space.
    pub fn graph_gram(&self) -> DMatrix<f64> {
        let mut g = weighted_gram(&self.action, self.target.weights());
        if self.identity_basis {
            for (i, w) in self.source.weights().iter().enumerate() {
                g[(i, i)] += w;
            }
        } else {
            g += weighted_gram(&self.domain_basis, self.source.weights());
        }
        g
    }

    /// `‖M‖` on `D(M)`: `sup |Mf| / |f|` over the core.
    pub fn norm(&self) -> f64 {
        let f = scale_rows(&self.action, &self.target.sqrt_weights());
        match pencil::max_eig_pencil_factored(&f, &self.basis_gram()) {
            Ok(r) => r.value.sqrt(),
            Err(_) => f64::NAN,
        }
    }
}

/// `Bᵀ diag(w) B`.
pub(crate) fn weighted_gram(b: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let sw = w.map(f64::sqrt);
    let z = scale_rows(b, &sw);
    z.transpose() * z
}

pub(crate) fn scale_rows(b: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let mut out = b.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= s[i];
    }
    out
}

/// Standalone form of [`DomainOperator::graph_gram`].
pub fn graph_gram(m: &DomainOperator) -> DMatrix<f64> {
    m.graph_gram()
}
