use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Largest generalized eigenvalue of a symmetric pencil and a witness.
#[derive(Debug, Clone)]
pub struct PencilMax {
    pub value: f64,
    /// Eigenvector normalized so that `cᵀ G c = 1`.
    pub witness: DVector<f64>,
}

/// Largest `λ` with `H c = λ G c` for symmetric `H` and positive definite `G`.
pub fn max_eig_pencil(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<PencilMax> {
    let n = g.nrows();
    if n == 0 || !h.is_square() || !g.is_square() || h.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "pencil needs two square matrices of equal size, got {:?} and {:?}",
            h.shape(),
            g.shape()
        )));
    }
    let asym = (h - h.transpose()).amax();
    if asym > 1e-10 * h.amax().max(1.0) {
        return Err(Error::InvalidArgument(format!("H is not symmetric (asymmetry {asym:e})")));
    }
    let factor = Factor::new(g)?;
    let reduced = factor.congruence(h);
    let eig = reduced.symmetric_eigen();
    let (idx, value) = argmax(&eig.eigenvalues);
    let y = eig.eigenvectors.column(idx).into_owned();
    Ok(PencilMax { value, witness: factor.back_substitute(&y) })
}

/// [`max_eig_pencil`] for `H = FᵀF`, working on the smaller of the `k × k`
/// and `p × p` forms where `F` is `p × k`. Zero rows of `F` are dropped
/// first. The returned value is clamped at zero.
pub fn max_eig_pencil_factored(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<PencilMax> {
    let k = g.nrows();
    if k == 0 || !g.is_square() || f.ncols() != k {
        return Err(Error::DimensionMismatch(format!("factored pencil: F is {:?}, G is {:?}", f.shape(), g.shape())));
    }
    let rows: Vec<usize> = (0..f.nrows()).filter(|&i| f.row(i).iter().any(|&x| x != 0.0)).collect();
    let factor = Factor::new(g)?;
    if rows.is_empty() {
        let mut e1 = DVector::zeros(k);
        e1[0] = 1.0;
        return Ok(PencilMax { value: 0.0, witness: factor.back_substitute(&e1) });
    }
    let f = f.select_rows(rows.iter());
    let p = f.nrows();
    if p >= k {
        let h = f.transpose() * &f;
        let reduced = factor.congruence(&h);
        let eig = reduced.symmetric_eigen();
        let (idx, value) = argmax(&eig.eigenvalues);
        let y = eig.eigenvectors.column(idx).into_owned();
        return Ok(PencilMax { value: value.max(0.0), witness: factor.back_substitute(&y) });
    }
    // λ_max(FᵀF, G) = λ_max(F G⁻¹ Fᵀ), with c = G⁻¹ Fᵀ y.
    let x = factor.solve(&f.transpose());
    let mut t = &f * &x;
    symmetrize(&mut t);
    let eig = t.symmetric_eigen();
    let (idx, value) = argmax(&eig.eigenvalues);
    let value = value.max(0.0);
    let y = eig.eigenvectors.column(idx).into_owned();
    let c = &x * &y;
    let gnorm2 = (c.transpose() * g * &c)[(0, 0)];
    let witness = if gnorm2 > 0.0 && value > 0.0 {
        c / gnorm2.sqrt()
    } else {
        let mut e1 = DVector::zeros(k);
        e1[0] = 1.0;
        factor.back_substitute(&e1)
    };
    Ok(PencilMax { value, witness })
}

/// Cholesky factor `G = L Lᵀ` with a shortcut for diagonal `G`.
pub(crate) enum Factor {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Factor {
    pub(crate) fn new(g: &DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        let is_diag = (0..n).all(|j| (0..n).all(|i| i == j || g[(i, j)] == 0.0));
        if is_diag {
            let d = g.diagonal();
            if d.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::NotPositiveDefinite);
            }
            return Ok(Factor::Diagonal(d.map(f64::sqrt)));
        }
        let mut sym = g.clone();
        symmetrize(&mut sym);
        let chol = sym.cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok(Factor::Dense(chol.l()))
    }

    /// `L⁻¹ H L⁻ᵀ`, symmetrized.
    pub(crate) fn congruence(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = match self {
            Factor::Diagonal(s) => DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] / (s[i] * s[j])),
            Factor::Dense(l) => {
                let a = l.solve_lower_triangular(h).expect("Cholesky factor is invertible");
                l.solve_lower_triangular(&a.transpose()).expect("Cholesky factor is invertible")
            }
        };
        symmetrize(&mut out);
        out
    }

    /// `L⁻ᵀ y`.
    pub(crate) fn back_substitute(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Diagonal(s) => y.component_div(s),
            Factor::Dense(l) => l.transpose().solve_upper_triangular(y).expect("Cholesky factor is invertible"),
        }
    }

    /// `L⁻¹ b` for each column of `b`.
    pub(crate) fn forward(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Factor::Diagonal(s) => DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] / s[i]),
            Factor::Dense(l) => l.solve_lower_triangular(b).expect("Cholesky factor is invertible"),
        }
    }

    /// `G⁻¹ b`.
    pub(crate) fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Factor::Diagonal(s) => DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] / (s[i] * s[i])),
            Factor::Dense(l) => {
                let y = l.solve_lower_triangular(b).expect("Cholesky factor is invertible");
                l.transpose().solve_upper_triangular(&y).expect("Cholesky factor is invertible")
            }
        }
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn argmax(v: &DVector<f64>) -> (usize, f64) {
    v.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_pencil_has_unit_eigenvalue() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = max_eig_pencil(&g, &g).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_numerator() {
        let g = DMatrix::identity(3, 3);
        let r = max_eig_pencil(&DMatrix::zeros(3, 3), &g).unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn two_by_two_analytic() {
        let h = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 4.0]));
        let g = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 2.0]));
        let r = max_eig_pencil(&h, &g).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        let expected = 1.0 / 2f64.sqrt();
        assert!(r.witness[0].abs() < 1e-14);
        assert!((r.witness[1].abs() - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_denominator() {
        let g = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -1.0]));
        assert!(matches!(max_eig_pencil(&DMatrix::identity(2, 2), &g), Err(Error::NotPositiveDefinite)));
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(max_eig_pencil(&DMatrix::identity(2, 2), &g).is_err());
    }

    #[test]
    fn factored_forms_agree() {
        let f = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 3.0]);
        let g = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.5]);
        let full = max_eig_pencil(&(f.transpose() * &f), &g).unwrap();
        let fact = max_eig_pencil_factored(&f, &g).unwrap();
        assert!((full.value - fact.value).abs() < 1e-12 * full.value);
        let c = &fact.witness;
        assert!(((c.transpose() * &g * c)[(0, 0)] - 1.0).abs() < 1e-12);
        let rq = (c.transpose() * f.transpose() * &f * c)[(0, 0)];
        assert!((rq - fact.value).abs() < 1e-12 * fact.value);
    }
}
