//! Seeded random instances for property batches and experiments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::discrete::ImpulseResponse;
use crate::linalg::{DiscretizedSpace, LinearMap};
use crate::Result;

/// Weights drawn uniformly from `[0.25, 4]`.
pub fn random_space<R: Rng>(rng: &mut R, dim: usize) -> Result<DiscretizedSpace> {
    DiscretizedSpace::new(DVector::from_fn(dim, |_, _| rng.random_range(0.25..4.0)), None)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `I + E/2` with `E` uniform in `[−1, 1]`, a usually well-conditioned change of basis.
pub fn random_basis<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let mut v = random_matrix(rng, dim, dim) * 0.5;
    for i in 0..dim {
        v[(i, i)] += 1.0;
    }
    v
}

/// Random (generally oblique) projection of rank `rank` together with the
/// change of basis `V` in which it is `diag(1, …, 1, 0, …, 0)`.
pub struct ProjectionInstance {
    pub projection: LinearMap,
    pub basis: DMatrix<f64>,
    pub basis_inv: DMatrix<f64>,
    pub rank: usize,
}

pub fn random_projection<R: Rng>(rng: &mut R, space: &DiscretizedSpace, rank: usize) -> Result<ProjectionInstance> {
    let n = space.dim();
    loop {
        let v = random_basis(rng, n);
        let Some(vinv) = v.clone().try_inverse() else { continue };
        if (&v * &vinv - DMatrix::identity(n, n)).amax() > 1e-10 {
            continue;
        }
        let d = DMatrix::from_fn(n, n, |i, j| if i == j && i < rank { 1.0 } else { 0.0 });
        let p = &v * d * &vinv;
        return Ok(ProjectionInstance { projection: LinearMap::on(space, p)?, basis: v, basis_inv: vinv, rank });
    }
}

/// `M = V L V⁻¹` with `L` block lower triangular relative to the split of
/// `P`, so that `PM = PMP`.
pub fn random_causal_operator<R: Rng>(rng: &mut R, proj: &ProjectionInstance) -> Result<LinearMap> {
    let n = proj.basis.nrows();
    let r = proj.rank;
    let mut l = random_matrix(rng, n, n);
    for i in 0..r {
        for j in r..n {
            l[(i, j)] = 0.0;
        }
    }
    LinearMap::on(proj.projection.source(), &proj.basis * l * &proj.basis_inv)
}

/// Dense operator with entries uniform in `[−1, 1]`; generically not compatible.
pub fn random_dense_operator<R: Rng>(rng: &mut R, space: &DiscretizedSpace) -> Result<LinearMap> {
    LinearMap::on(space, random_matrix(rng, space.dim(), space.dim()))
}

/// Lower-triangular operator, causal for every coordinate truncation.
pub fn random_lower_triangular<R: Rng>(rng: &mut R, space: &DiscretizedSpace) -> Result<LinearMap> {
    let n = space.dim();
    let mut m = random_matrix(rng, n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = 0.0;
        }
    }
    LinearMap::on(space, m)
}

/// Coordinate projection keeping the first `keep` coordinates.
pub fn leading_mask(space: &DiscretizedSpace, keep: usize) -> LinearMap {
    LinearMap::from_diagonal(space, DVector::from_fn(space.dim(), |i, _| if i < keep { 1.0 } else { 0.0 }))
}

/// `Q = B P` for random `B`, so that `N(P) ⊆ N(Q)`.
pub fn random_dominated<R: Rng>(rng: &mut R, p: &LinearMap) -> Result<LinearMap> {
    let n = p.source().dim();
    let b = random_matrix(rng, n, n);
    LinearMap::on(p.source(), b * p.matrix())
}

/// Random FIR response: 1 to 4 taps with indices in `[−reach, reach]`.
pub fn random_impulse_response<R: Rng>(rng: &mut R, reach: i64) -> ImpulseResponse {
    loop {
        let count = rng.random_range(1..=4);
        let mut taps: Vec<(i64, f64)> = Vec::new();
        for _ in 0..count {
            let k = rng.random_range(-reach..=reach);
            if taps.iter().any(|(i, _)| *i == k) {
                continue;
            }
            let mut v: f64 = rng.random_range(-1.0..1.0);
            if v.abs() < 0.05 {
                v = 0.5;
            }
            taps.push((k, v));
        }
        if let Ok(ir) = ImpulseResponse::new(taps) {
            return ir;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::factorization_defect;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn causal_instances_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 5, 9] {
            let s = random_space(&mut rng, dim).unwrap();
            let pi = random_projection(&mut rng, &s, dim / 2).unwrap();
            assert!(pi.projection.idempotency_defect().unwrap() < 1e-10);
            let m = random_causal_operator(&mut rng, &pi).unwrap();
            let d = factorization_defect(&m, &pi.projection).unwrap();
            assert!(d < 1e-10 * m.norm(), "dim {dim}: {d}");
        }
    }
}
