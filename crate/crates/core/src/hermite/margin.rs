use nalgebra::DMatrix;
use rug::float::Constant;
use rug::{Assign, Float};

use super::HermiteBasis;
use crate::linalg::{scale_rows, DiscretizedSpace, LinearMap};
use crate::{Error, Result};

/// Default working precision of [`injectivity_margins_mp`], in bits.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Smallest singular value of `P` restricted to `span(columns)`, for columns
/// that are weighted-orthonormal.
pub fn span_margin(p: &LinearMap, columns: &DMatrix<f64>) -> f64 {
    let pb = p.left_multiply(columns);
    let z = scale_rows(&pb, &p.target().sqrt_weights());
    let z = match p.diagonal() {
        // Rows killed by a diagonal P contribute nothing.
        Some(d) => {
            let rows: Vec<usize> = (0..d.len()).filter(|&i| d[i] != 0.0).collect();
            if rows.len() < columns.ncols() {
                return 0.0;
            }
            z.select_rows(rows.iter())
        }
        None => z,
    };
    if z.nrows() < z.ncols() {
        return 0.0;
    }
    z.singular_values().min()
}

/// `min |P f| / |f|` over the Hermite span, in double precision.
pub fn injectivity_margin(p: &LinearMap, basis: &HermiteBasis) -> Result<f64> {
    if p.source() != basis.space() {
        return Err(Error::SpaceMismatch("projection and basis live on different spaces".into()));
    }
    Ok(span_margin(p, basis.columns()))
}

/// Margins at every degree `0..=n_max` for the diagonal projection keeping
/// rows where `keep[i]`, computed in `prec`-bit floating point.
///
/// Double precision bottoms out near `1e-16`, far above the true margins at
/// moderate degree. Here the Hermite recurrence, both Gram matrices
/// `A = Ψᵀ W_keep Ψ` and `F = ΨᵀWΨ`, the Cholesky congruence `L⁻¹AL⁻ᵀ` and a
/// cyclic Jacobi eigenvalue sweep all run at the working precision. The
/// leading blocks of the congruence are the congruences of the leading
/// blocks, so one factorization serves every degree.
pub fn injectivity_margins_mp(space: &DiscretizedSpace, keep: &[bool], n_max: usize, prec: u32) -> Result<Vec<f64>> {
    let x = space.require_coords()?;
    let n = x.len();
    if keep.len() != n {
        return Err(Error::DimensionMismatch("mask length differs from the grid".into()));
    }
    if prec < 64 {
        return Err(Error::InvalidArgument("precision below 64 bits defeats the purpose".into()));
    }
    let m = n_max + 1;
    let zero = Float::new(prec);
    let c0 = {
        let pi = Float::with_val(prec, Constant::Pi);
        pi.sqrt().sqrt().recip()
    };
    let mut full = vec![vec![zero.clone(); m]; m];
    let mut kept = vec![vec![zero.clone(); m]; m];
    let mut psi = vec![zero.clone(); m];
    let mut tmp = zero.clone();
    for i in 0..n {
        let xi = Float::with_val(prec, x[i]);
        let wi = Float::with_val(prec, space.weights()[i]);
        tmp.assign(xi.square_ref());
        tmp /= -2;
        psi[0] = Float::with_val(prec, tmp.exp_ref()) * &c0;
        if m > 1 {
            psi[1] = Float::with_val(prec, &xi * &psi[0]) * Float::with_val(prec, 2u32).sqrt();
        }
        for k in 1..n_max {
            let a = Float::with_val(prec, 2u32) / (k as u32 + 1);
            let b = Float::with_val(prec, k as u32) / (k as u32 + 1);
            let next = a.sqrt() * &xi * &psi[k] - b.sqrt() * &psi[k - 1];
            psi[k + 1] = next;
        }
        for a in 0..m {
            let wa = Float::with_val(prec, &wi * &psi[a]);
            for b in a..m {
                tmp.assign(&wa * &psi[b]);
                full[a][b] += &tmp;
                if keep[i] {
                    kept[a][b] += &tmp;
                }
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            full[a][b] = full[b][a].clone();
            kept[a][b] = kept[b][a].clone();
        }
    }
    let l = cholesky(&full)?;
    let c = congruence(&l, &kept);
    let mut margins = Vec::with_capacity(m);
    for d in 1..=m {
        let block: Vec<Vec<Float>> = c[..d].iter().map(|row| row[..d].to_vec()).collect();
        let lmin = jacobi_min_eigenvalue(block, prec);
        margins.push(if lmin.is_sign_negative() { 0.0 } else { lmin.sqrt().to_f64() });
    }
    Ok(margins)
}

fn cholesky(a: &[Vec<Float>]) -> Result<Vec<Vec<Float>>> {
    let m = a.len();
    let prec = a[0][0].prec();
    let mut l = vec![vec![Float::new(prec); m]; m];
    for j in 0..m {
        let mut s = a[j][j].clone();
        for k in 0..j {
            s -= Float::with_val(prec, l[j][k].square_ref());
        }
        if !s.is_sign_positive() || s.is_zero() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = s.sqrt();
        for i in (j + 1)..m {
            let mut t = a[i][j].clone();
            for k in 0..j {
                t -= Float::with_val(prec, &l[i][k] * &l[j][k]);
            }
            l[i][j] = t / &d;
        }
        l[j][j] = d;
    }
    Ok(l)
}

/// `L⁻¹ A L⁻ᵀ` for lower-triangular `L`.
fn congruence(l: &[Vec<Float>], a: &[Vec<Float>]) -> Vec<Vec<Float>> {
    let m = l.len();
    let prec = l[0][0].prec();
    // Y = L⁻¹ A, column by column of A.
    let solve = |b: &[Vec<Float>]| -> Vec<Vec<Float>> {
        let mut y = vec![vec![Float::new(prec); m]; m];
        for col in 0..m {
            for i in 0..m {
                let mut t = b[i][col].clone();
                for k in 0..i {
                    t -= Float::with_val(prec, &l[i][k] * &y[k][col]);
                }
                y[i][col] = t / &l[i][i];
            }
        }
        y
    };
    let y = solve(a);
    let yt: Vec<Vec<Float>> = (0..m).map(|i| (0..m).map(|j| y[j][i].clone()).collect()).collect();
    let mut c = solve(&yt);
    for i in 0..m {
        for j in 0..i {
            let avg: Float = Float::with_val(prec, &c[i][j] + &c[j][i]) / 2u32;
            c[i][j] = avg.clone();
            c[j][i] = avg;
        }
    }
    c
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations,
/// stopped when every off-diagonal entry is negligible relative to its
/// diagonal pair (which keeps small eigenvalues accurate for definite input).
fn jacobi_min_eigenvalue(mut a: Vec<Vec<Float>>, prec: u32) -> Float {
    let m = a.len();
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32 - 8)));
    let mut t1 = Float::new(prec);
    let mut t2 = Float::new(prec);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                if a[p][q].is_zero() {
                    continue;
                }
                t1.assign(&a[p][p] * &a[q][q]);
                t1.abs_mut();
                t1.sqrt_mut();
                t1 *= &eps;
                t2.assign(a[p][q].abs_ref());
                if t2 <= t1 {
                    a[p][q].assign(0);
                    a[q][p].assign(0);
                    continue;
                }
                rotated = true;
                let theta = Float::with_val(prec, &a[q][q] - &a[p][p]) / Float::with_val(prec, &a[p][q] * 2u32);
                let root = (Float::with_val(prec, theta.square_ref()) + 1u32).sqrt();
                let mut t = (Float::with_val(prec, theta.abs_ref()) + &root).recip();
                if theta.is_sign_negative() {
                    t = -t;
                }
                let c = (Float::with_val(prec, t.square_ref()) + 1u32).sqrt().recip();
                let s = Float::with_val(prec, &t * &c);
                let apq = a[p][q].clone();
                for k in 0..m {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k][p].clone();
                    let akq = a[k][q].clone();
                    let new_p = Float::with_val(prec, &c * &akp) - Float::with_val(prec, &s * &akq);
                    let new_q = Float::with_val(prec, &s * &akp) + Float::with_val(prec, &c * &akq);
                    a[k][p] = new_p.clone();
                    a[p][k] = new_p;
                    a[k][q] = new_q.clone();
                    a[q][k] = new_q;
                }
                let tap = Float::with_val(prec, &t * &apq);
                a[p][p] -= &tap;
                a[q][q] += &tap;
                a[p][q].assign(0);
                a[q][p].assign(0);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut best = a[0][0].clone();
    for (i, row) in a.iter().enumerate().skip(1) {
        if row[i] < best {
            best = row[i].clone();
        }
    }
    best
}
