use nalgebra::DVector;
use serde::Serialize;

use crate::linalg::LinearMap;
use crate::{Error, Result};

/// An input together with the operator's output on it. The operator itself
/// may be nonlinear; only these samples are inspected.
#[derive(Debug, Clone)]
pub struct Sample {
    pub input: DVector<f64>,
    pub output: DVector<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseViolation {
    pub first: usize,
    pub second: usize,
    /// `|P(Mf − Mg)|` for a pair with `|P(f − g)|` within tolerance.
    pub output_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseReport {
    pub pairs_checked: usize,
    pub pairs_with_equal_past: usize,
    pub violations: Vec<PointwiseViolation>,
    pub compatible: bool,
}

/// Tests `Pf = Pg ⇒ PMf = PMg` on every pair of the supplied samples.
/// Equality is judged at `tol` relative to the larger of the two norms.
pub fn pointwise_compatibility(p: &LinearMap, samples: &[Sample], tol: f64) -> Result<PointwiseReport> {
    let space = p.source();
    for s in samples {
        if s.input.len() != space.dim() || s.output.len() != space.dim() {
            return Err(Error::DimensionMismatch("sample length differs from the projection's space".into()));
        }
    }
    let mut checked = 0;
    let mut equal = 0;
    let mut violations = Vec::new();
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            checked += 1;
            let (a, b) = (&samples[i], &samples[j]);
            let scale_in = space.norm(&a.input).max(space.norm(&b.input)).max(1.0);
            if space.norm(&p.apply(&(&a.input - &b.input))) > tol * scale_in {
                continue;
            }
            equal += 1;
            let scale_out = space.norm(&a.output).max(space.norm(&b.output)).max(1.0);
            let gap = space.norm(&p.apply(&(&a.output - &b.output)));
            if gap > tol * scale_out {
                violations.push(PointwiseViolation { first: i, second: j, output_gap: gap });
            }
        }
    }
    Ok(PointwiseReport {
        pairs_checked: checked,
        pairs_with_equal_past: equal,
        compatible: violations.is_empty(),
        violations,
    })
}
