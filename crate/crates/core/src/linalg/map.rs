use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::DiscretizedSpace;
use crate::{Error, Result};

/// Everywhere-defined bounded map between two weighted spaces.
///
/// Square diagonal maps are detected at construction and stored by their
/// diagonal; the dense matrix is only materialized on request. Composition,
/// differences and norms of diagonal maps are `O(n)`, which is what keeps
/// cutoff families on fine grids affordable.
#[derive(Debug, Clone)]
pub struct LinearMap {
    source: DiscretizedSpace,
    target: DiscretizedSpace,
    diagonal: Option<DVector<f64>>,
    dense: OnceLock<DMatrix<f64>>,
}

impl LinearMap {
    pub fn new(source: DiscretizedSpace, target: DiscretizedSpace, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != target.dim() || matrix.ncols() != source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but the map goes from dimension {} to {}",
                matrix.nrows(),
                matrix.ncols(),
                source.dim(),
                target.dim()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(Self::from_parts(source, target, matrix))
    }

    fn from_parts(source: DiscretizedSpace, target: DiscretizedSpace, matrix: DMatrix<f64>) -> Self {
        let diagonal = detect_diagonal(&matrix);
        Self { source, target, diagonal, dense: OnceLock::from(matrix) }
    }

    /// Square map `space → space`.
    pub fn on(space: &DiscretizedSpace, matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(space.clone(), space.clone(), matrix)
    }

    pub fn identity(space: &DiscretizedSpace) -> Self {
        let n = space.dim();
        Self::from_diagonal(space, DVector::from_element(n, 1.0))
    }

    pub fn zero(source: &DiscretizedSpace, target: &DiscretizedSpace) -> Self {
        Self::from_parts(source.clone(), target.clone(), DMatrix::zeros(target.dim(), source.dim()))
    }

    pub fn from_diagonal(space: &DiscretizedSpace, diag: DVector<f64>) -> Self {
        assert_eq!(diag.len(), space.dim(), "diagonal length must match the space");
        Self { source: space.clone(), target: space.clone(), diagonal: Some(diag), dense: OnceLock::new() }
    }

    pub fn source(&self) -> &DiscretizedSpace {
        &self.source
    }

    pub fn target(&self) -> &DiscretizedSpace {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.dense.get_or_init(|| DMatrix::from_diagonal(self.diagonal.as_ref().expect("dense or diagonal storage")))
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix();
        self.dense.into_inner().expect("materialized above")
    }

    /// Shape as `(target dim, source dim)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.target.dim(), self.source.dim())
    }

    /// Diagonal entries when the matrix is square and diagonal.
    pub fn diagonal(&self) -> Option<&DVector<f64>> {
        self.diagonal.as_ref()
    }

    pub fn is_square(&self) -> bool {
        self.source == self.target
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        match &self.diagonal {
            Some(d) => d.component_mul(u),
            None => self.matrix() * u,
        }
    }

    /// `W_Y^{1/2} A W_X^{-1/2}`: the same map in Euclidean coordinates, where
    /// the spectral norm equals the weighted operator norm.
    pub fn weighted_matrix(&self) -> DMatrix<f64> {
        let sy = self.target.sqrt_weights();
        let sx = self.source.sqrt_weights();
        let a = self.matrix();
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| sy[i] * a[(i, j)] / sx[j])
    }

    /// The map `A′` with `⟨Au, v⟩_Y = ⟨u, A′v⟩_X`, i.e. `W_X⁻¹ Aᵀ W_Y`.
    pub fn adjoint(&self) -> LinearMap {
        let wx = self.source.weights();
        let wy = self.target.weights();
        if let Some(d) = &self.diagonal {
            let diag = DVector::from_fn(d.len(), |i, _| d[i] * wy[i] / wx[i]);
            return LinearMap {
                source: self.target.clone(),
                target: self.source.clone(),
                diagonal: Some(diag),
                dense: OnceLock::new(),
            };
        }
        let a = self.matrix();
        let matrix = DMatrix::from_fn(self.source.dim(), self.target.dim(), |i, j| a[(j, i)] * wy[j] / wx[i]);
        LinearMap::from_parts(self.target.clone(), self.source.clone(), matrix)
    }

    /// Operator norm with respect to the weighted norms.
    pub fn norm(&self) -> f64 {
        if let Some(d) = &self.diagonal {
            let wx = self.source.weights();
            let wy = self.target.weights();
            return d.iter().enumerate().map(|(i, x)| (x * (wy[i] / wx[i]).sqrt()).abs()).fold(0.0, f64::max);
        }
        spectral_norm(&self.weighted_matrix())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMap) -> Result<LinearMap> {
        self.source.ensure_same(&inner.target, "composition: inner target differs from outer source")?;
        if let (Some(a), Some(b)) = (&self.diagonal, &inner.diagonal) {
            return Ok(LinearMap {
                source: inner.source.clone(),
                target: self.target.clone(),
                diagonal: Some(a.component_mul(b)),
                dense: OnceLock::new(),
            });
        }
        let matrix = match &inner.diagonal {
            Some(d) if self.diagonal.is_none() => {
                let mut out = self.matrix().clone();
                for (j, mut col) in out.column_iter_mut().enumerate() {
                    col *= d[j];
                }
                out
            }
            _ => self.left_multiply(inner.matrix()),
        };
        Ok(LinearMap::from_parts(inner.source.clone(), self.target.clone(), matrix))
    }

    /// `A · m` for a matrix whose rows are indexed by the source space.
    pub fn left_multiply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(m.nrows(), self.source.dim());
        match &self.diagonal {
            Some(d) => {
                let mut out = m.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                out
            }
            None => self.matrix() * m,
        }
    }

    pub fn sub(&self, other: &LinearMap) -> Result<LinearMap> {
        self.source.ensure_same(&other.source, "difference: sources differ")?;
        self.target.ensure_same(&other.target, "difference: targets differ")?;
        if let (Some(a), Some(b)) = (&self.diagonal, &other.diagonal) {
            return Ok(LinearMap {
                source: self.source.clone(),
                target: self.target.clone(),
                diagonal: Some(a - b),
                dense: OnceLock::new(),
            });
        }
        Ok(LinearMap::from_parts(self.source.clone(), self.target.clone(), self.matrix() - other.matrix()))
    }

    pub fn scale(&self, alpha: f64) -> LinearMap {
        match &self.diagonal {
            Some(d) => LinearMap {
                source: self.source.clone(),
                target: self.target.clone(),
                diagonal: Some(d * alpha),
                dense: OnceLock::new(),
            },
            None => LinearMap::from_parts(self.source.clone(), self.target.clone(), self.matrix() * alpha),
        }
    }

    /// `‖A² − A‖`; requires a square map.
    pub fn idempotency_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::SpaceMismatch("idempotency needs a map X → X".into()));
        }
        Ok(self.compose(self)?.sub(self)?.norm())
    }
}

fn detect_diagonal(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    if m.nrows() != m.ncols() {
        return None;
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j && m[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    Some(m.diagonal())
}

/// Largest singular value of a plain matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}
