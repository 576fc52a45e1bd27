use nalgebra::DMatrix;

use crate::linalg::{DiscretizedSpace, LinearMap};
use crate::{Error, Result};

/// Relative slack for recognizing `h` as a whole number of grid steps.
const EXACT_SHIFT_TOL: f64 = 1e-9;

/// Number of grid steps in `h` when it is an integer multiple of the step.
pub fn exact_steps(space: &DiscretizedSpace, h: f64) -> Option<i64> {
    let step = space.uniform_step()?;
    let m = h / step;
    let r = m.round();
    ((m - r).abs() <= EXACT_SHIFT_TOL * m.abs().max(1.0)).then_some(r as i64)
}

/// `τ_h f = f(· + h)` on a uniform grid, with zero padding outside.
///
/// Whole-step shifts move indices; other shifts interpolate linearly between
/// the two neighbouring nodes.
pub fn shift_operator(space: &DiscretizedSpace, h: f64) -> Result<LinearMap> {
    let c = space.require_coords()?;
    let step = space.uniform_step().ok_or_else(|| Error::Precondition("shifts need a uniform grid".into()))?;
    let n = c.len();
    let half = 0.5 * (c[n - 1] - c[0]);
    if !(h.is_finite() && h.abs() < 2.0 * half) {
        return Err(Error::Precondition(format!("|h| = {} must be below 2L = {}", h.abs(), 2.0 * half)));
    }
    let mut t = DMatrix::zeros(n, n);
    match exact_steps(space, h) {
        Some(s) => {
            for i in 0..n {
                let j = i as i64 + s;
                if (0..n as i64).contains(&j) {
                    t[(i, j as usize)] = 1.0;
                }
            }
        }
        None => {
            let m = h / step;
            for i in 0..n {
                let pos = i as f64 + m;
                let j = pos.floor();
                let theta = pos - j;
                let j = j as i64;
                if (0..n as i64).contains(&j) {
                    t[(i, j as usize)] = 1.0 - theta;
                }
                if (0..n as i64).contains(&(j + 1)) {
                    t[(i, (j + 1) as usize)] = theta;
                }
            }
        }
    }
    LinearMap::on(space, t)
}

/// Weighted operator norm of a map whose columns have disjoint supports
/// (whole-step shifts): `max_j (Σᵢ wᵢ Tᵢⱼ²) / w_j`, square-rooted. Falls back
/// to the dense norm otherwise.
pub fn shift_norm(t: &LinearMap) -> f64 {
    let a = t.matrix();
    let disjoint = (0..a.nrows()).all(|i| a.row(i).iter().filter(|x| **x != 0.0).count() <= 1);
    if !disjoint || !t.is_square() {
        return t.norm();
    }
    let w = t.source().weights();
    (0..a.ncols())
        .map(|j| {
            let col: f64 = (0..a.nrows()).map(|i| w[i] * a[(i, j)] * a[(i, j)]).sum();
            (col / w[j]).sqrt()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shift_is_identity() {
        let s = DiscretizedSpace::symmetric_grid(2.0, 5).unwrap();
        assert_eq!(shift_operator(&s, 0.0).unwrap().matrix(), &DMatrix::identity(5, 5));
    }

    #[test]
    fn one_step_is_up_shift() {
        let s = DiscretizedSpace::symmetric_grid(2.0, 5).unwrap();
        let t = shift_operator(&s, 1.0).unwrap();
        let expected = DMatrix::from_fn(5, 5, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        assert_eq!(t.matrix(), &expected);
    }

    #[test]
    fn half_step_interpolates() {
        let s = DiscretizedSpace::symmetric_grid(2.0, 5).unwrap();
        let t = shift_operator(&s, 0.5).unwrap();
        assert_eq!(t.matrix()[(0, 0)], 0.5);
        assert_eq!(t.matrix()[(0, 1)], 0.5);
        assert_eq!(t.matrix()[(4, 4)], 0.5);
    }

    #[test]
    fn rejects_long_shift() {
        let s = DiscretizedSpace::symmetric_grid(2.0, 5).unwrap();
        assert!(shift_operator(&s, 4.0).is_err());
    }

    #[test]
    fn disjoint_norm_matches_svd() {
        let s = DiscretizedSpace::symmetric_grid(3.0, 31).unwrap();
        for h in [-0.4, 0.2, 1.0] {
            let t = shift_operator(&s, h).unwrap();
            assert!((shift_norm(&t) - t.norm()).abs() < 1e-12);
        }
    }
}
