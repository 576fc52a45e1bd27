use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Weighted finite-dimensional model of `L²` or `ℓ²`.
///
/// The inner product is `⟨u, v⟩ = Σ wᵢ uᵢ vᵢ`. Grid coordinates are optional;
/// they are required by constructions that refer to positions on the time
/// axis (cutoff families, shifts, Hermite functions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSpace {
    weights: DVector<f64>,
    coords: Option<DVector<f64>>,
}

impl DiscretizedSpace {
    pub fn new(weights: DVector<f64>, coords: Option<DVector<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpace(format!(
                "weight {i} is {w}, weights must be finite and strictly positive"
            )));
        }
        if let Some(c) = &coords {
            if c.len() != weights.len() {
                return Err(Error::InvalidSpace(format!("{} coordinates for {} weights", c.len(), weights.len())));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSpace("coordinates must be finite".into()));
            }
            if let Some(i) = (1..c.len()).find(|&i| c[i] <= c[i - 1]) {
                return Err(Error::InvalidSpace(format!("coordinates not strictly increasing at index {i}")));
            }
        }
        Ok(Self { weights, coords })
    }

    /// Unit weights, no coordinates.
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(DVector::from_element(dim, 1.0), None)
    }

    /// Unit weights with integer coordinates `0, 1, …, dim − 1` (the truncated
    /// sequence space).
    pub fn sequence(dim: usize) -> Result<Self> {
        let coords = DVector::from_fn(dim, |i, _| i as f64);
        Self::new(DVector::from_element(dim, 1.0), Some(coords))
    }

    /// Uniform grid on `[lo, hi]` including both endpoints, with trapezoidal
    /// quadrature weights.
    pub fn uniform_grid(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidSpace("a grid needs at least two points".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidSpace(format!("bad grid interval [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (dim - 1) as f64;
        let coords = DVector::from_fn(dim, |i, _| if i == dim - 1 { hi } else { lo + i as f64 * step });
        let weights = DVector::from_fn(dim, |i, _| if i == 0 || i == dim - 1 { 0.5 * step } else { step });
        Self::new(weights, Some(coords))
    }

    /// Symmetric grid on `[-half_width, half_width]`.
    pub fn symmetric_grid(half_width: f64, dim: usize) -> Result<Self> {
        Self::uniform_grid(-half_width, half_width, dim)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn coords(&self) -> Option<&DVector<f64>> {
        self.coords.as_ref()
    }

    pub fn require_coords(&self) -> Result<&DVector<f64>> {
        self.coords.as_ref().ok_or(Error::MissingCoords)
    }

    /// Grid step of a uniform grid, `None` for non-uniform or coordinate-free
    /// spaces.
    pub fn uniform_step(&self) -> Option<f64> {
        let c = self.coords.as_ref()?;
        if c.len() < 2 {
            return None;
        }
        let step = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
        let uniform = (1..c.len()).all(|i| ((c[i] - c[i - 1]) - step).abs() <= 1e-9 * step.abs());
        uniform.then_some(step)
    }

    pub fn is_euclidean(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn sqrt_weights(&self) -> DVector<f64> {
        self.weights.map(f64::sqrt)
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        debug_assert_eq!(v.len(), self.dim());
        u.iter().zip(v.iter()).zip(self.weights.iter()).map(|((a, b), w)| w * a * b).sum()
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// `W^{1/2} u`, the isometric image in Euclidean coordinates.
    pub fn to_euclidean(&self, u: &DVector<f64>) -> DVector<f64> {
        u.component_mul(&self.sqrt_weights())
    }

    /// Inverse of [`Self::to_euclidean`].
    pub fn from_euclidean(&self, z: &DVector<f64>) -> DVector<f64> {
        z.component_div(&self.sqrt_weights())
    }

    pub(crate) fn ensure_same(&self, other: &Self, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch(what.to_string()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_weights() {
        let w = DVector::from_vec(vec![1.0, 0.0, 2.0]);
        assert!(matches!(DiscretizedSpace::new(w, None), Err(Error::InvalidSpace(_))));
        let w = DVector::from_vec(vec![1.0, -1.0]);
        assert!(DiscretizedSpace::new(w, None).is_err());
    }

    #[test]
    fn rejects_non_increasing_coords() {
        let w = DVector::from_element(3, 1.0);
        let c = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        assert!(DiscretizedSpace::new(w, Some(c)).is_err());
    }

    #[test]
    fn trapezoidal_grid_integrates_constants_exactly() {
        let s = DiscretizedSpace::uniform_grid(-1.0, 3.0, 17).unwrap();
        let total: f64 = s.weights().iter().sum();
        assert!((total - 4.0).abs() < 1e-14);
        assert_eq!(s.coords().unwrap()[16], 3.0);
        assert!((s.uniform_step().unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn weighted_norm() {
        let w = DVector::from_vec(vec![1.0, 2.0, 1.0]);
        let s = DiscretizedSpace::new(w, None).unwrap();
        let u = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!((s.norm(&u) - 2.0).abs() < 1e-15);
        let z = s.to_euclidean(&u);
        assert!((s.from_euclidean(&z) - u).norm() < 1e-15);
    }
}
