use nalgebra::{DMatrix, DVector};

use super::{map::spectral_norm, DiscretizedSpace, LinearMap};
use crate::{Error, Result};

/// Default rank and null-space threshold, relative to the largest singular
/// value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Subspace of a weighted space, stored as a weighted-orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: DiscretizedSpace,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a basis that is already orthonormal for the ambient inner product.
    pub fn new(ambient: DiscretizedSpace, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != ambient.dim() {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} rows, ambient dimension is {}",
                basis.nrows(),
                ambient.dim()
            )));
        }
        if basis.ncols() > ambient.dim() {
            return Err(Error::DimensionMismatch("more basis vectors than dimensions".into()));
        }
        let dev = gram_deviation(&ambient, &basis);
        if dev > ORTHONORMALITY_TOL {
            return Err(Error::InvalidArgument(format!("basis is not orthonormal (Gram deviation {dev:e})")));
        }
        Ok(Self { ambient, basis })
    }

    pub fn zero(ambient: &DiscretizedSpace) -> Self {
        Self { ambient: ambient.clone(), basis: DMatrix::zeros(ambient.dim(), 0) }
    }

    pub fn whole(ambient: &DiscretizedSpace) -> Self {
        let basis = DMatrix::from_diagonal(&ambient.sqrt_weights().map(|s| 1.0 / s));
        Self { ambient: ambient.clone(), basis }
    }

    /// Orthonormalizes the span of `vectors` (columns), dropping directions
    /// below `tol` relative to the largest singular value.
    pub fn span(ambient: &DiscretizedSpace, vectors: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if vectors.nrows() != ambient.dim() {
            return Err(Error::DimensionMismatch("spanning vectors have the wrong length".into()));
        }
        let sw = ambient.sqrt_weights();
        let mut z = vectors.clone();
        for (i, mut row) in z.row_iter_mut().enumerate() {
            row *= sw[i];
        }
        let (u, _) = left_singular_split(&z, tol);
        Ok(Self { ambient: ambient.clone(), basis: from_euclidean_columns(ambient, u) })
    }

    pub fn ambient(&self) -> &DiscretizedSpace {
        &self.ambient
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Weighted-orthogonal projection `Π = B Bᵀ W` onto the subspace.
    pub fn projector(&self) -> LinearMap {
        let w = self.ambient.weights();
        let mut bt_w = self.basis.transpose();
        for (j, mut col) in bt_w.column_iter_mut().enumerate() {
            col *= w[j];
        }
        LinearMap::on(&self.ambient, &self.basis * bt_w).expect("projector has matching shape")
    }

    /// Coordinates `Bᵀ W u` of the orthogonal projection of `u`.
    pub fn coefficients(&self, u: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * u.component_mul(self.ambient.weights())
    }

    pub fn project(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.basis * self.coefficients(u)
    }
}

/// Result of an inclusion test between two subspaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub contained: bool,
    /// `‖(I − Π_B) Π_A‖` in the weighted operator norm.
    pub defect: f64,
}

/// Tests `A ⊆ B` by measuring `‖(I − Π_B) Π_A‖`.
pub fn subspace_contained(a: &Subspace, b: &Subspace, tol: f64) -> Result<Containment> {
    a.ambient.ensure_same(&b.ambient, "subspaces live in different spaces")?;
    if a.dim() == 0 {
        return Ok(Containment { contained: true, defect: 0.0 });
    }
    // Π_A = A Aᵀ W is a weighted co-isometry onto span(A), so the norm of
    // (I − Π_B) Π_A equals the spectral norm of W^{1/2} (A − B BᵀW A).
    let w = a.ambient.weights();
    let wa = DMatrix::from_fn(a.basis.nrows(), a.basis.ncols(), |i, j| w[i] * a.basis[(i, j)]);
    let residual = &a.basis - &b.basis * (b.basis.transpose() * wa);
    let sw = a.ambient.sqrt_weights();
    let scaled = DMatrix::from_fn(residual.nrows(), residual.ncols(), |i, j| sw[i] * residual[(i, j)]);
    let defect = spectral_norm(&scaled);
    Ok(Containment { contained: defect <= tol, defect })
}

/// Orthonormal basis of `{u : |Au| ≤ tol·‖A‖·|u|}`.
pub fn null_space(a: &LinearMap, tol: f64) -> Result<Subspace> {
    check_tol(tol)?;
    let b = a.weighted_matrix();
    let z = euclidean_kernel(&b, tol);
    Ok(Subspace { ambient: a.source().clone(), basis: from_euclidean_columns(a.source(), z) })
}

/// Orthonormal basis of the numerical range of `a`.
pub fn range_space(a: &LinearMap, tol: f64) -> Result<Subspace> {
    check_tol(tol)?;
    let (u, _) = left_singular_split(&a.weighted_matrix(), tol);
    Ok(Subspace { ambient: a.target().clone(), basis: from_euclidean_columns(a.target(), u) })
}

/// Number of weighted singular values above `tol` relative to the largest.
pub fn numerical_rank(a: &LinearMap, tol: f64) -> usize {
    let b = a.weighted_matrix();
    if b.is_empty() {
        return 0;
    }
    let s = b.singular_values();
    let smax = s.max();
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Euclidean orthonormal basis (columns) of the numerical kernel of `b`.
pub(crate) fn euclidean_kernel(b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (m, n) = b.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Thin SVD only yields min(m, n) right vectors; pad so the full
    // right-singular basis is available.
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(b);
        p
    } else {
        b.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| smax == 0.0 || svd.singular_values[i] <= tol * smax).collect();
    DMatrix::from_fn(n, keep.len(), |i, j| v_t[(keep[j], i)])
}

/// Left singular vectors above / at-or-below the relative threshold.
fn left_singular_split(b: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, DVector<f64>) {
    let m = b.nrows();
    if b.is_empty() {
        return (DMatrix::zeros(m, 0), DVector::zeros(0));
    }
    let svd = b.clone().svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| smax > 0.0 && svd.singular_values[i] > tol * smax).collect();
    let cols = DMatrix::from_fn(m, keep.len(), |i, j| u[(i, keep[j])]);
    let vals = DVector::from_fn(keep.len(), |j, _| svd.singular_values[keep[j]]);
    (cols, vals)
}

fn from_euclidean_columns(space: &DiscretizedSpace, z: DMatrix<f64>) -> DMatrix<f64> {
    let sw = space.sqrt_weights();
    let mut out = z;
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row /= sw[i];
    }
    out
}

fn gram_deviation(space: &DiscretizedSpace, basis: &DMatrix<f64>) -> f64 {
    let w = space.weights();
    let wb = DMatrix::from_fn(basis.nrows(), basis.ncols(), |i, j| w[i] * basis[(i, j)]);
    let g = basis.transpose() * wb;
    let r = g.nrows();
    (&g - DMatrix::identity(r, r)).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        v
    }

    #[test]
    fn null_space_of_zero_and_identity() {
        let s = DiscretizedSpace::euclidean(4).unwrap();
        let z = LinearMap::zero(&s, &s);
        assert_eq!(null_space(&z, DEFAULT_RANK_TOL).unwrap().dim(), 4);
        let id = LinearMap::identity(&s);
        assert_eq!(null_space(&id, DEFAULT_RANK_TOL).unwrap().dim(), 0);
    }

    #[test]
    fn null_space_of_rank_one_projection() {
        let w = DVector::from_row_slice(&[1.0, 2.0, 0.5]);
        let s = DiscretizedSpace::new(w.clone(), None).unwrap();
        let u = DVector::from_row_slice(&[1.0, -1.0, 2.0]);
        let nu2 = s.inner(&u, &u);
        let p = LinearMap::on(&s, &u * u.component_mul(&w).transpose() / nu2).unwrap();
        let k = null_space(&p, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(k.dim(), 2);
        for j in 0..2 {
            let v = k.basis().column(j).into_owned();
            assert!(p.apply(&v).norm() < 1e-14);
            assert!(s.inner(&v, &u).abs() < 1e-14);
        }
    }

    #[test]
    fn wide_matrix_null_space_uses_full_right_basis() {
        let s = DiscretizedSpace::euclidean(3).unwrap();
        let t = DiscretizedSpace::euclidean(1).unwrap();
        let a = LinearMap::new(s, t, DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(null_space(&a, DEFAULT_RANK_TOL).unwrap().dim(), 2);
        assert_eq!(numerical_rank(&a, DEFAULT_RANK_TOL), 1);
    }

    #[test]
    fn containment_examples() {
        let s2 = DiscretizedSpace::euclidean(2).unwrap();
        let a = Subspace::new(s2.clone(), DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let b = Subspace::new(s2.clone(), DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        let same = subspace_contained(&a, &a, 1e-12).unwrap();
        assert!(same.contained && same.defect == 0.0);
        let orth = subspace_contained(&a, &b, 1e-12).unwrap();
        assert!(!orth.contained);
        assert!((orth.defect - 1.0).abs() < 1e-15);

        let s3 = DiscretizedSpace::euclidean(3).unwrap();
        let diag = (e(3, 0) + e(3, 1)) / 2f64.sqrt();
        let a = Subspace::new(s3.clone(), DMatrix::from_columns(&[diag])).unwrap();
        let b = Subspace::new(s3, DMatrix::from_columns(&[e(3, 0), e(3, 1)])).unwrap();
        let c = subspace_contained(&a, &b, 1e-12).unwrap();
        assert!(c.contained && c.defect <= 1e-14);
    }

    #[test]
    fn span_orthonormalizes_in_weighted_inner_product() {
        let s = DiscretizedSpace::new(DVector::from_row_slice(&[1.0, 4.0, 9.0]), None).unwrap();
        let v = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 2.0, 0.0, 0.0]);
        let sub = Subspace::span(&s, &v, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(sub.dim(), 2);
        assert!(gram_deviation(&s, sub.basis()) < 1e-13);
        let p = sub.projector();
        assert!(p.idempotency_defect().unwrap() < 1e-13);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let s = DiscretizedSpace::euclidean(2).unwrap();
        assert!(Subspace::new(s, DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).is_err());
    }
}
