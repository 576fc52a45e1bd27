use nalgebra::DVector;
use serde::Serialize;

use super::closure::closure_extension;
use super::defect::{compatibility_defect, Tolerances, Verdict};
use super::modulus::{modulus_curve, CurveClass};
use crate::linalg::{null_space, range_space, subspace_contained, DomainOperator, LinearMap};
use crate::{Error, Result};

/// Upper limit on the number of probe directions.
pub const MAX_PROBES: usize = 32;

/// Relative agreement required between core and extension moduli.
pub const CLOSURE_STABILITY_TOL: f64 = 0.02;

/// Finite probe set for the "for all `x′`" quantifier: the normalized
/// `P M̄ w` for a defect witness `w` (when given and nonzero) followed by a
/// weighted-orthonormal basis of `range(P)`, at most [`MAX_PROBES`] in total.
pub fn canonical_probes(
    p: &LinearMap,
    m_bar: &LinearMap,
    witness: Option<&DVector<f64>>,
    tol: Tolerances,
) -> Result<Vec<DVector<f64>>> {
    let space = p.target();
    let mut probes = Vec::new();
    if let Some(w) = witness {
        let d = p.apply(&m_bar.apply(w));
        let n = space.norm(&d);
        if n > 0.0 {
            probes.push(d / n);
        }
    }
    let range = range_space(p, tol.rank)?;
    for j in 0..range.dim() {
        if probes.len() >= MAX_PROBES {
            break;
        }
        probes.push(range.basis().column(j).into_owned());
    }
    Ok(probes)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeOutcome {
    pub classification: CurveClass,
    pub intercept: f64,
    pub omega_at_zero: f64,
    /// `max_δ |ω_core − ω_ext| / max(ω_ext, tol)`, with `tol` the curve's
    /// classification tolerance (values below it are rounding noise).
    pub closure_gap: f64,
}

/// Both sides of the closure equivalence at one discretization level.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    /// Side (a): the extension `M̄` is `P`-compatible.
    pub extension_compatible: bool,
    pub extension_verdict: Verdict,
    pub extension_defect0: f64,
    pub extension_consistency: f64,
    /// Side (b): the core's modulus decays at every probe.
    pub core_strongly_compatible: bool,
    pub agree: bool,
    pub max_closure_gap: f64,
    pub closure_stable: bool,
    pub probes: Vec<ProbeOutcome>,
}

/// Compares `P`-compatibility of the closure with strong `P`-compatibility of
/// the core, and checks that core and extension moduli coincide.
pub fn theorem_equivalence_check(
    m: &DomainOperator,
    p: &LinearMap,
    radius: f64,
    deltas: &[f64],
    x_probes: &[DVector<f64>],
    tol: Tolerances,
) -> Result<EquivalenceReport> {
    let ext = closure_extension(m)?;
    let full = ext.operator();
    let ext_report = compatibility_defect(&full, p, tol)?;
    let probes = if x_probes.is_empty() {
        canonical_probes(p, &ext.map, ext_report.witness_vector().as_ref(), tol)?
    } else {
        x_probes.iter().take(MAX_PROBES).cloned().collect()
    };
    if probes.is_empty() {
        return Err(Error::InvalidArgument("no probe directions (P has trivial range)".into()));
    }
    let mut outcomes = Vec::with_capacity(probes.len());
    for x in &probes {
        let core = modulus_curve(m, p, x, radius, deltas, tol)?;
        let extc = modulus_curve(&full, p, x, radius, deltas, tol)?;
        let gap = core
            .samples
            .iter()
            .zip(extc.samples.iter())
            .map(|(a, b)| (a.omega - b.omega).abs() / b.omega.max(extc.classification_tol))
            .fold(0.0, f64::max);
        outcomes.push(ProbeOutcome {
            classification: core.classification,
            intercept: core.fit.intercept,
            omega_at_zero: core.samples[0].omega,
            closure_gap: gap,
        });
    }
    let side_a = ext_report.verdict.is_causal();
    let side_b = outcomes.iter().all(|o| o.classification == CurveClass::Decaying);
    let max_gap = outcomes.iter().map(|o| o.closure_gap).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        extension_compatible: side_a,
        extension_verdict: ext_report.verdict,
        extension_defect0: ext_report.defect0,
        extension_consistency: ext.consistency,
        core_strongly_compatible: side_b,
        agree: side_a == side_b,
        max_closure_gap: max_gap,
        closure_stable: max_gap <= CLOSURE_STABILITY_TOL,
        probes: outcomes,
    })
}

/// Finite-dimensional content of the bidual inclusion: adjoints round-trip
/// and `N(P) ⊆ N(Q)` survives.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BidualReport {
    /// Largest entry of `|A″ − A|`, relative to `max(1, max|A|)`, over `P` and `Q`.
    pub roundtrip_defect: f64,
    pub inclusion_defect: f64,
    pub passed: bool,
}

pub fn bidual_collapse_check(
    p: &LinearMap,
    q: &LinearMap,
    tol: Tolerances,
    inclusion_tol: f64,
) -> Result<BidualReport> {
    if p.source() != q.source() {
        return Err(Error::SpaceMismatch("P and Q must share a source space".into()));
    }
    let rt = |a: &LinearMap| {
        let back = a.adjoint().adjoint();
        let scale = a.matrix().amax().max(1.0);
        (back.matrix() - a.matrix()).amax() / scale
    };
    let roundtrip_defect = rt(p).max(rt(q));
    let np = null_space(p, tol.rank)?;
    let nq = null_space(q, tol.rank)?;
    let inclusion_defect = subspace_contained(&np, &nq, inclusion_tol)?.defect;
    Ok(BidualReport {
        roundtrip_defect,
        inclusion_defect,
        passed: roundtrip_defect <= 1e-12 && inclusion_defect <= inclusion_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DiscretizedSpace;
    use nalgebra::DMatrix;

    const DELTAS: [f64; 6] = [0.0, 1e-3, 2e-3, 1e-2, 0.1, 1.0];

    #[test]
    fn scalar_multiple_of_identity() {
        let s = DiscretizedSpace::euclidean(4).unwrap();
        let p = LinearMap::from_diagonal(&s, DVector::from_row_slice(&[1.0, 1.0, 0.0, 0.0]));
        for alpha in [-3.0, 0.5, 7.0] {
            let m = DomainOperator::full(&LinearMap::identity(&s).scale(alpha));
            let r = theorem_equivalence_check(&m, &p, 1.0, &DELTAS, &[], Tolerances::default()).unwrap();
            assert!(r.extension_compatible && r.core_strongly_compatible && r.agree);
        }
    }

    #[test]
    fn up_shift_both_sides_false() {
        let s = DiscretizedSpace::euclidean(4).unwrap();
        let up = LinearMap::on(&s, DMatrix::from_fn(4, 4, |i, j| if j == i + 1 { 1.0 } else { 0.0 })).unwrap();
        let b = DMatrix::from_row_slice(4, 4, &[1., 1., 0., 0., 0., 1., 0., 0., 0., 0., 2., 1., 1., 0., 0., 1.]);
        let core = DomainOperator::restrict(&up, b).unwrap();
        let p = LinearMap::from_diagonal(&s, DVector::from_row_slice(&[1.0, 1.0, 0.0, 0.0]));
        let r = theorem_equivalence_check(&core, &p, 1.0, &DELTAS, &[], Tolerances::default()).unwrap();
        assert!(!r.extension_compatible);
        assert!(!r.core_strongly_compatible);
        assert!(r.agree);
        assert!(r.closure_stable, "gap {}", r.max_closure_gap);
    }

    #[test]
    fn bidual_on_coordinate_projections() {
        let s = DiscretizedSpace::new(DVector::from_row_slice(&[1.0, 3.0, 0.5]), None).unwrap();
        let p = LinearMap::from_diagonal(&s, DVector::from_row_slice(&[1.0, 0.0, 1.0]));
        let q = LinearMap::from_diagonal(&s, DVector::from_row_slice(&[2.0, 0.0, 0.0]));
        let r = bidual_collapse_check(&p, &q, Tolerances::default(), 1e-10).unwrap();
        assert!(r.passed);
        let r = bidual_collapse_check(&q, &p, Tolerances::default(), 1e-10).unwrap();
        assert!(!r.passed);
    }
}
