//! Discrete-time convolution on truncated sequence spaces.
//!
//! A finite impulse response `(k, h_k)` acts by `(T x)_i = Σ_j h_{i−j} x_j`
//! with no wrap-around, so taps at nonnegative indices give lower-triangular
//! Toeplitz matrices. Causality with respect to the truncation family is
//! decided numerically and cross-checked against that support test.

use std::io::Read;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::causality::{factorization_defect, is_causal, CausalityRun, Tolerances};
use crate::linalg::{DiscretizedSpace, DomainOperator, LinearMap};
use crate::resolution::{truncation_resolution, truncation_times};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpulseResponse {
    taps: Vec<(i64, f64)>,
}

impl ImpulseResponse {
    /// Taps sorted by index; duplicates, non-finite values and all-zero
    /// responses are rejected.
    pub fn new(mut taps: Vec<(i64, f64)>) -> Result<Self> {
        if taps.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument("tap values must be finite".into()));
        }
        taps.sort_by_key(|(k, _)| *k);
        if let Some(w) = taps.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("duplicate tap index {}", w[0].0)));
        }
        if taps.iter().all(|(_, v)| *v == 0.0) {
            return Err(Error::InvalidArgument("impulse response has no nonzero tap".into()));
        }
        Ok(Self { taps })
    }

    /// Reads `index,value` lines; a header line `index,value` is optional.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut taps = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected `index,value`", line + 1)));
            }
            if line == 0 && &rec[0] == "index" && &rec[1] == "value" {
                continue;
            }
            let k: i64 =
                rec[0].parse().map_err(|_| Error::Parse(format!("line {}: bad index {:?}", line + 1, &rec[0])))?;
            let v: f64 =
                rec[1].parse().map_err(|_| Error::Parse(format!("line {}: bad value {:?}", line + 1, &rec[1])))?;
            taps.push((k, v));
        }
        Self::new(taps)
    }

    pub fn taps(&self) -> &[(i64, f64)] {
        &self.taps
    }

    /// Largest `|index|` over all taps.
    pub fn reach(&self) -> u64 {
        self.taps.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0)
    }

    /// Structural causality: every nonzero tap sits at a nonnegative index.
    pub fn support_causal(&self) -> bool {
        self.taps.iter().filter(|(_, v)| *v != 0.0).all(|(k, _)| *k >= 0)
    }

    fn value(&self, k: i64) -> f64 {
        self.taps.binary_search_by_key(&k, |(i, _)| *i).map_or(0.0, |pos| self.taps[pos].1)
    }
}

/// `T[i][j] = h_{i−j}` on the Euclidean sequence space of length `dim`.
pub fn toeplitz_operator(ir: &ImpulseResponse, dim: usize) -> Result<LinearMap> {
    if dim as u64 <= ir.reach() {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} must exceed the largest tap offset {}",
            ir.reach()
        )));
    }
    let space = DiscretizedSpace::sequence(dim)?;
    let m = DMatrix::from_fn(dim, dim, |i, j| ir.value(i as i64 - j as i64));
    LinearMap::on(&space, m)
}

#[derive(Debug, Clone, Serialize)]
pub struct FirVerdict {
    pub causal: bool,
    pub support_causal: bool,
    /// Largest compatibility defect over the truncation times.
    pub compatibility_defect: f64,
    /// Largest `‖P_t T − P_t T P_t‖` over the truncation times.
    pub factorization_defect: f64,
    pub run: CausalityRun,
}

/// Causality of the Toeplitz operator with respect to every truncation
/// `k ≤ t`, `t = −1, …, dim − 1`. Disagreement with the support test is an
/// error, not a finding.
pub fn fir_causal(ir: &ImpulseResponse, dim: usize, tol: Tolerances) -> Result<FirVerdict> {
    let t = toeplitz_operator(ir, dim)?;
    let fam = truncation_resolution(t.source(), truncation_times(dim))?;
    let run = is_causal(&DomainOperator::full(&t), &fam, tol)?;
    let mut fact = 0.0f64;
    for (_, p) in fam.iter() {
        fact = fact.max(factorization_defect(&t, &p)?);
    }
    let support = ir.support_causal();
    if run.causal != support {
        return Err(Error::VerdictDisagreement(format!(
            "defect test says causal = {}, tap support says {} (max defect {:e})",
            run.causal, support, run.max_defect
        )));
    }
    Ok(FirVerdict {
        causal: run.causal,
        support_causal: support,
        compatibility_defect: run.max_defect,
        factorization_defect: fact,
        run,
    })
}
