//! Resolutions of the identity on discretized spaces.
//!
//! A family `t ↦ P_t` of projections with `range(P_t) ⊆ range(P_s)` for
//! `t ≤ s`, tending to `0` and `I` at the ends of the time axis. On a finite
//! grid the limits become endpoint checks.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::linalg::{DiscretizedSpace, LinearMap};
use crate::{Error, Result};

type ProjectionFn = dyn Fn(f64) -> LinearMap + Send + Sync;

#[derive(Clone)]
enum Rule {
    /// Keep coordinates with `coords[i] < t`.
    Cutoff,
    /// Keep indices `k ≤ t`.
    Truncation,
    /// Keep indices `k ≥ t`.
    TruncationLiteral,
    Custom(Arc<ProjectionFn>),
}

/// Sampled projection family `t ↦ P_t` on a fixed space.
#[derive(Clone)]
pub struct ProjectionFamily {
    space: DiscretizedSpace,
    times: Vec<f64>,
    rule: Rule,
}

impl fmt::Debug for ProjectionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            Rule::Cutoff => "cutoff",
            Rule::Truncation => "truncation",
            Rule::TruncationLiteral => "truncation-literal",
            Rule::Custom(_) => "custom",
        };
        f.debug_struct("ProjectionFamily")
            .field("dim", &self.space.dim())
            .field("times", &self.times)
            .field("rule", &rule)
            .finish()
    }
}

impl ProjectionFamily {
    fn with_rule(space: &DiscretizedSpace, times: Vec<f64>, rule: Rule) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("a projection family needs at least one time".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("times must be finite".into()));
        }
        if let Some(i) = (1..times.len()).find(|&i| times[i] <= times[i - 1]) {
            return Err(Error::InvalidArgument(format!("times not strictly increasing at index {i}")));
        }
        Ok(Self { space: space.clone(), times, rule })
    }

    /// Family given by an arbitrary closure. The closure must return maps on
    /// `space`; this is checked on every sampled time.
    pub fn custom<F>(space: &DiscretizedSpace, times: Vec<f64>, at: F) -> Result<Self>
    where
        F: Fn(f64) -> LinearMap + Send + Sync + 'static,
    {
        let fam = Self::with_rule(space, times, Rule::Custom(Arc::new(at)))?;
        for &t in &fam.times {
            let p = fam.at(t);
            if p.source() != space || p.target() != space {
                return Err(Error::SpaceMismatch(format!(
                    "custom projection at t = {t} is not a map on the family's space"
                )));
            }
        }
        Ok(fam)
    }

    pub fn space(&self) -> &DiscretizedSpace {
        &self.space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// 0/1 diagonal of `P_t` for the coordinate rules; `None` for custom families.
    pub fn mask(&self, t: f64) -> Option<DVector<f64>> {
        let n = self.space.dim();
        let keep = |i: usize| -> bool {
            match &self.rule {
                Rule::Cutoff => self.space.coords().expect("checked at construction")[i] < t,
                Rule::Truncation => (i as f64) <= t,
                Rule::TruncationLiteral => (i as f64) >= t,
                Rule::Custom(_) => unreachable!(),
            }
        };
        match self.rule {
            Rule::Custom(_) => None,
            _ => Some(DVector::from_fn(n, |i, _| if keep(i) { 1.0 } else { 0.0 })),
        }
    }

    /// `P_t`. Coordinate rules are evaluated for any `t`, not only sampled ones.
    pub fn at(&self, t: f64) -> LinearMap {
        match &self.rule {
            Rule::Custom(f) => f(t),
            _ => LinearMap::from_diagonal(&self.space, self.mask(t).expect("coordinate rule")),
        }
    }

    /// `(t, P_t)` over the sampled times.
    pub fn iter(&self) -> impl Iterator<Item = (f64, LinearMap)> + '_ {
        self.times.iter().map(move |&t| (t, self.at(t)))
    }
}

/// Cutoff family `P_t f = 1_{coords < t} · f`. The inequality is strict: a
/// grid point sitting exactly at `t` belongs to the future.
pub fn cutoff_resolution(space: &DiscretizedSpace, times: Vec<f64>) -> Result<ProjectionFamily> {
    space.require_coords()?;
    ProjectionFamily::with_rule(space, times, Rule::Cutoff)
}

/// Discrete-time family keeping indices `k ≤ t`.
pub fn truncation_resolution(space: &DiscretizedSpace, times: Vec<f64>) -> Result<ProjectionFamily> {
    ProjectionFamily::with_rule(space, times, Rule::Truncation)
}

/// The discrete-time family with the opposite orientation, keeping `k ≥ t`.
/// Ranges shrink as `t` grows, so it is not a resolution of the identity;
/// it exists to exercise the validator.
pub fn truncation_literal(space: &DiscretizedSpace, times: Vec<f64>) -> Result<ProjectionFamily> {
    ProjectionFamily::with_rule(space, times, Rule::TruncationLiteral)
}

/// `count` equally spaced cutoff times from the first grid point (empty past)
/// to one step beyond the last (full past).
pub fn cutoff_times(space: &DiscretizedSpace, count: usize) -> Result<Vec<f64>> {
    let c = space.require_coords()?;
    if count < 2 {
        return Err(Error::InvalidArgument("need at least two cutoff times".into()));
    }
    let n = c.len();
    let step = if n > 1 { (c[n - 1] - c[0]) / (n - 1) as f64 } else { 1.0 };
    let lo = c[0];
    let hi = c[n - 1] + step;
    Ok((0..count).map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 }).collect())
}

/// `−1, 0, …, dim − 1`: every distinct truncation of a length-`dim` sequence.
pub fn truncation_times(dim: usize) -> Vec<f64> {
    (-1..dim as i64).map(|k| k as f64).collect()
}

/// One scored property of a projection family.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationCheck {
    pub check_name: String,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.check_name == name)
    }
}

/// Scores idempotency, commuting nestedness and the endpoint surrogates.
///
/// Nestedness is tested as `P_s P_t = P_t = P_t P_s` for `t ≤ s`, which is
/// stronger than range containment. When it fails but the mirrored identity
/// holds, the detail names the reversed orientation.
pub fn validate_resolution(fam: &ProjectionFamily, tol: f64) -> Result<ValidationReport> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let maps: Vec<LinearMap> = fam.times.iter().map(|&t| fam.at(t)).collect();

    let mut idem = 0.0f64;
    for p in &maps {
        idem = idem.max(p.idempotency_defect()?);
    }

    let mut forward = 0.0f64;
    let mut reversed = 0.0f64;
    for (i, pt) in maps.iter().enumerate() {
        for ps in &maps[i + 1..] {
            let st = ps.compose(pt)?;
            let ts = pt.compose(ps)?;
            forward = forward.max(st.sub(pt)?.norm()).max(ts.sub(pt)?.norm());
            reversed = reversed.max(st.sub(ps)?.norm()).max(ts.sub(ps)?.norm());
        }
    }
    let nested_ok = forward <= tol;
    let nested_detail = if nested_ok {
        "P_s P_t = P_t = P_t P_s for t ≤ s (stronger than range containment)".to_string()
    } else if reversed <= tol {
        format!("reversed orientation: P_t P_s = P_s for t ≤ s (defect {reversed:e}), ranges shrink as t grows")
    } else {
        "ranges are not nested in either direction".to_string()
    };

    let id = LinearMap::identity(&fam.space);
    let lower = maps.first().expect("non-empty family").norm();
    let upper = maps.last().expect("non-empty family").sub(&id)?.norm();

    let check = |name: &str, defect: f64, detail: Option<String>| ValidationCheck {
        check_name: name.to_string(),
        defect,
        tolerance: tol,
        pass: defect <= tol,
        detail,
    };
    let checks = vec![
        check("idempotency", idem, None),
        check("nestedness", forward, Some(nested_detail)),
        check("endpoint_lower", lower, Some(format!("‖P_t‖ at t = {}", fam.times[0]))),
        check("endpoint_upper", upper, Some(format!("‖P_t − I‖ at t = {}", fam.times[fam.times.len() - 1]))),
    ];
    let passed = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { passed, checks })
}
