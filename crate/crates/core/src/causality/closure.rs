use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::{DomainOperator, LinearMap};
use crate::{Error, Result};

/// Extension of an operator from a spanning core to the whole space.
#[derive(Debug, Clone)]
pub struct ClosureExtension {
    pub map: LinearMap,
    /// `max_j |M̄ d_j − M d_j| / |d_j|` over the core basis.
    pub consistency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureSummary {
    pub consistency: f64,
    pub norm: f64,
}

impl ClosureExtension {
    pub fn summary(&self) -> ClosureSummary {
        ClosureSummary { consistency: self.consistency, norm: self.map.norm() }
    }

    /// The extension as an operator with the identity as domain basis.
    pub fn operator(&self) -> DomainOperator {
        DomainOperator::full(&self.map)
    }
}

/// `M̄ = A D⁻¹` for a core whose basis spans the source space.
///
/// At a fixed discretization a spanning core is dense, so the extension is
/// unique. Non-spanning cores are refused: their closures are only visible
/// through sequences of discretizations.
pub fn closure_extension(m: &DomainOperator) -> Result<ClosureExtension> {
    let n = m.source().dim();
    let k = m.domain_dim();
    if k < n {
        return Err(Error::NotSpanning { rank: k, dim: n });
    }
    let matrix = if m.has_identity_basis() {
        m.action().clone()
    } else {
        // M̄ D = A  ⇔  Dᵀ M̄ᵀ = Aᵀ
        let lu = m.domain_basis().transpose().lu();
        let xt = lu.solve(&m.action().transpose()).ok_or(Error::NotSpanning { rank: k.saturating_sub(1), dim: n })?;
        xt.transpose()
    };
    let map = LinearMap::new(m.source().clone(), m.target().clone(), matrix)?;
    let residual: DMatrix<f64> = map.left_multiply(m.domain_basis()) - m.action();
    let consistency = (0..k)
        .map(|j| {
            let r = residual.column(j).into_owned();
            let d = m.domain_basis().column(j).into_owned();
            m.target().norm(&r) / m.source().norm(&d)
        })
        .fold(0.0, f64::max);
    Ok(ClosureExtension { map, consistency })
}
