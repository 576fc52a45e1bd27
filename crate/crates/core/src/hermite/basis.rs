use nalgebra::{DMatrix, DVector};

use crate::linalg::{scale_rows, DiscretizedSpace};
use crate::{Error, Result};

/// Largest accepted magnitude of a basis function at the grid edge.
///
/// The degree-40 function still has magnitude about `3e-8` at `|x| = 12`,
/// so a tighter default would reject the standard experiment grid.
pub const DEFAULT_TAIL_LIMIT: f64 = 1e-7;

/// `ψ₀ … ψ_{n_max}` by the three-term recurrence, evaluated at `x`.
pub fn hermite_functions(x: &DVector<f64>, n_max: usize) -> DMatrix<f64> {
    let c0 = std::f64::consts::PI.powf(-0.25);
    let mut out = DMatrix::zeros(x.len(), n_max + 1);
    for (i, &xi) in x.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = c0 * (-0.5 * xi * xi).exp();
        out[(i, 0)] = cur;
        for k in 0..n_max {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            out[(i, k + 1)] = cur;
        }
    }
    out
}

/// Weighted-orthonormal Hermite functions of degree `0..=n_max` on a grid.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    space: DiscretizedSpace,
    columns: DMatrix<f64>,
    tail: f64,
}

impl HermiteBasis {
    pub fn space(&self) -> &DiscretizedSpace {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.columns.ncols() - 1
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Columns of degree `0..=n`.
    pub fn truncated(&self, n: usize) -> DMatrix<f64> {
        self.columns.columns(0, n + 1).into_owned()
    }

    /// Largest raw function magnitude at the two grid endpoints.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// `max |BᵀWB − I|`.
    pub fn gram_deviation(&self) -> f64 {
        let z = scale_rows(&self.columns, &self.space.sqrt_weights());
        let g = z.transpose() * z;
        (g - DMatrix::identity(self.columns.ncols(), self.columns.ncols())).amax()
    }

    /// Sign changes of column `j`, ignoring entries below `1e-8` of its peak.
    pub fn sign_changes(&self, j: usize) -> usize {
        let col = self.columns.column(j);
        let floor = 1e-8 * col.amax();
        let mut last = 0.0f64;
        let mut changes = 0;
        for &v in col.iter() {
            if v.abs() <= floor {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
        changes
    }
}

/// [`hermite_basis_with_limit`] at [`DEFAULT_TAIL_LIMIT`].
pub fn hermite_basis(space: &DiscretizedSpace, n_max: usize) -> Result<HermiteBasis> {
    hermite_basis_with_limit(space, n_max, DEFAULT_TAIL_LIMIT)
}

/// Hermite functions on a symmetric grid, re-orthonormalized against the
/// quadrature by one weighted QR pass. Signs follow the recurrence.
pub fn hermite_basis_with_limit(space: &DiscretizedSpace, n_max: usize, tail_limit: f64) -> Result<HermiteBasis> {
    let x = space.require_coords()?;
    let n = x.len();
    if n_max + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "degree {n_max} needs at least {} grid points, have {n}",
            n_max + 1
        )));
    }
    let scale = x.amax();
    if (0..n).any(|i| (x[i] + x[n - 1 - i]).abs() > 1e-9 * scale) {
        return Err(Error::Precondition("Hermite grid must be symmetric about 0".into()));
    }
    let raw = hermite_functions(x, n_max);
    let (mut tail, mut worst) = (0.0f64, 0);
    for j in 0..=n_max {
        let t = raw[(0, j)].abs().max(raw[(n - 1, j)].abs());
        if t > tail {
            tail = t;
            worst = j;
        }
    }
    if tail > tail_limit {
        return Err(Error::TailTooLarge { degree: worst, tail, limit: tail_limit });
    }
    let sw = space.sqrt_weights();
    let qr = scale_rows(&raw, &sw).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let columns = scale_rows(&q, &sw.map(|s| 1.0 / s));
    Ok(HermiteBasis { space: space.clone(), columns, tail })
}
