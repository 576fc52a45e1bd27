//! Norm-strong causality modulus.
//!
//! For a probe `x′`, radius `R` and tolerance `δ`,
//!
//! ```text
//! ω(δ) = sup { |⟨P M u, x′⟩| : u = f − g, f, g ∈ B_M(0, R), |P u| ≤ δ }.
//! ```
//!
//! With the Hilbert graph norm `u` ranges over `{cᵀGc ≤ (2R)²}`, so `ω` is a
//! linear functional maximized over the intersection of two centred
//! ellipsoids. After `G = LLᵀ` and `L⁻¹SL⁻ᵀ = QΛQᵀ` the problem reads
//! `max ṽᵀy` subject to `|y|² ≤ r²`, `Σ λᵢ yᵢ² ≤ δ²`, whose Lagrange dual is
//!
//! ```text
//! U(μ)² = (1 + μ) · Σ ṽᵢ² / (1/r² + μ λᵢ / δ²),     μ ≥ 0.
//! ```
//!
//! The problem is convex with a Slater point, so `min U = ω`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::defect::{basis_factor, coefficient_kernel, Tolerances};
use crate::linalg::{weighted_gram, DomainOperator, Factor, LinearMap};
use crate::{Error, Result};

const GRID_HALF_WIDTH: f64 = 40.0;
const GRID_POINTS: usize = 161;
const GOLDEN_ITERS: usize = 200;
const BISECTION_ITERS: usize = 300;
/// Relative primal–dual gap above which the solver reports non-convergence.
const GAP_TOL: f64 = 1e-7;

/// One solved instance of the two-ellipsoid problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusPoint {
    pub delta: f64,
    /// Value of the feasible witness (certified lower bound).
    pub omega: f64,
    /// Best dual bound `min U(μ)`.
    pub upper: f64,
    /// Optimal multiplier `μ`; `None` when the optimum sits at `μ = ∞` or `δ = 0`.
    pub multiplier: Option<f64>,
    /// The difference `u = f − g` realizing `omega`.
    pub witness: Vec<f64>,
}

/// Precomputed data for evaluating `ω(δ)` at many `δ`.
pub struct ModulusProblem {
    radius: f64,
    domain_basis: Option<DMatrix<f64>>,
    factor: Factor,
    lambda: DVector<f64>,
    eigvecs: DMatrix<f64>,
    v_tilde: DVector<f64>,
    kernel_value: f64,
    kernel_coeffs: Option<DVector<f64>>,
}

impl ModulusProblem {
    /// Problem for `|⟨P M u, x′⟩|` with `u` constrained through the same `P`.
    pub fn new(
        m: &DomainOperator,
        p: &LinearMap,
        x_probe: &DVector<f64>,
        radius: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        Self::with_output_projection(m, p, p, x_probe, radius, tol)
    }

    /// General form pairing `⟨Q M u, x′⟩` while constraining `|P u|`.
    pub fn with_output_projection(
        m: &DomainOperator,
        p: &LinearMap,
        q: &LinearMap,
        x_probe: &DVector<f64>,
        radius: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if p.source() != m.source() || p.target() != m.source() {
            return Err(Error::SpaceMismatch("P must be a map on the operator's source space".into()));
        }
        if q.source() != m.target() {
            return Err(Error::SpaceMismatch("Q must act on the operator's target space".into()));
        }
        let ytarget = q.target();
        if x_probe.len() != ytarget.dim() || x_probe.iter().any(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch("probe has the wrong length or non-finite entries".into()));
        }
        let k = m.domain_dim();

        // v = (Q A)ᵀ W x′
        let qa = q.left_multiply(m.action());
        let wx = x_probe.component_mul(ytarget.weights());
        let v = qa.transpose() * wx;

        let g = m.graph_gram();
        let factor = Factor::new(&g)?;
        let pd = p.left_multiply(m.domain_basis());
        let s = weighted_gram(&pd, m.source().weights());
        let eig = factor.congruence(&s).symmetric_eigen();
        let lmax = eig.eigenvalues.max().max(0.0);
        let floor = tol.rank * tol.rank * lmax;
        let lambda = eig.eigenvalues.map(|l| if l <= floor { 0.0 } else { l });
        let lv = factor.forward(&DMatrix::from_column_slice(k, 1, v.as_slice()));
        let v_tilde = eig.eigenvectors.transpose() * lv.column(0);

        // δ = 0 on the kernel of c ↦ P D c, same kernel as the defect.
        let bf = basis_factor(m)?;
        let kernel = coefficient_kernel(m, &bf, p, tol.rank);
        let (kernel_value, kernel_coeffs) = if kernel.dim() == 0 {
            (0.0, None)
        } else {
            let g_k = kernel.restrict_gram(&g);
            let v_k = kernel.transpose_apply(&v);
            let fk = Factor::new(&g_k)?;
            let sol = fk.solve(&DMatrix::from_column_slice(v_k.len(), 1, v_k.as_slice()));
            let sol = sol.column(0).into_owned();
            let val = v_k.dot(&sol).max(0.0).sqrt();
            if val > 0.0 {
                (val, Some(kernel.lift(&(sol / val), k)))
            } else {
                (0.0, None)
            }
        };

        Ok(Self {
            radius,
            domain_basis: if m.has_identity_basis() { None } else { Some(m.domain_basis().clone()) },
            factor,
            lambda,
            eigvecs: eig.eigenvectors,
            v_tilde,
            kernel_value,
            kernel_coeffs,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn element(&self, c: &DVector<f64>) -> DVector<f64> {
        match &self.domain_basis {
            Some(d) => d * c,
            None => c.clone(),
        }
    }

    /// `U(μ)²`; `μ = ∞` is passed as `f64::INFINITY`.
    fn dual_sq(&self, mu: f64, delta: f64) -> f64 {
        let r = 2.0 * self.radius;
        let a = 1.0 / (r * r);
        if mu.is_infinite() {
            let mut acc = 0.0;
            for (l, v) in self.lambda.iter().zip(self.v_tilde.iter()) {
                if *l == 0.0 {
                    if *v != 0.0 {
                        return f64::INFINITY;
                    }
                } else {
                    acc += v * v / l;
                }
            }
            return delta * delta * acc;
        }
        let b = mu / (delta * delta);
        (1.0 + mu) * self.lambda.iter().zip(self.v_tilde.iter()).map(|(l, v)| v * v / (a + b * l)).sum::<f64>()
    }

    /// `Σλd²/Σd² − δ²/r²` along `d(μ) = (1/r² + μΛ/δ²)⁻¹ ṽ`; nonincreasing in `μ`.
    fn slackness(&self, mu: f64, delta: f64) -> f64 {
        let d = self.direction(mu, delta);
        let num: f64 = d.iter().zip(self.lambda.iter()).map(|(x, l)| l * x * x).sum();
        let den = d.norm_squared();
        let r = 2.0 * self.radius;
        num / den - (delta * delta) / (r * r)
    }

    fn direction(&self, mu: f64, delta: f64) -> DVector<f64> {
        let r = 2.0 * self.radius;
        let a = 1.0 / (r * r);
        if mu.is_infinite() {
            let has_free = self.lambda.iter().zip(self.v_tilde.iter()).any(|(l, v)| *l == 0.0 && *v != 0.0);
            return DVector::from_fn(self.lambda.len(), |i, _| {
                let l = self.lambda[i];
                if has_free {
                    if l == 0.0 {
                        self.v_tilde[i]
                    } else {
                        0.0
                    }
                } else if l == 0.0 {
                    0.0
                } else {
                    self.v_tilde[i] / l
                }
            });
        }
        let b = mu / (delta * delta);
        DVector::from_fn(self.lambda.len(), |i, _| self.v_tilde[i] / (a + b * self.lambda[i]))
    }

    /// Largest feasible multiple of `d`.
    fn feasible_scale(&self, d: &DVector<f64>, delta: f64) -> f64 {
        let r = 2.0 * self.radius;
        let dn = d.norm();
        let sd: f64 = d.iter().zip(self.lambda.iter()).map(|(x, l)| l * x * x).sum::<f64>().sqrt();
        let mut s = if dn > 0.0 { r / dn } else { 0.0 };
        if sd > 0.0 {
            s = s.min(delta / sd);
        }
        s
    }

    /// Minimizes `U` over `ln μ`: a log-grid scan followed by golden section.
    fn minimize_dual(&self, delta: f64) -> (f64, f64) {
        let r = 2.0 * self.radius;
        let centre = (delta * delta / (r * r)).ln();
        let lo = centre - GRID_HALF_WIDTH;
        let hi = centre + GRID_HALF_WIDTH;
        let f = |t: f64| self.dual_sq(t.exp(), delta);
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let (mut best_i, mut best) = (0, f64::INFINITY);
        for i in 0..GRID_POINTS {
            let val = f(lo + step * i as f64);
            if val < best {
                best = val;
                best_i = i;
            }
        }
        let mut a = lo + step * best_i.saturating_sub(1) as f64;
        let mut b = lo + step * (best_i + 1).min(GRID_POINTS - 1) as f64;
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..GOLDEN_ITERS {
            if (b - a).abs() <= 1e-13 * (1.0 + a.abs()) {
                break;
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = f(x2);
            }
        }
        let (t, val) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        let (t, val) = if val <= best { (t, val) } else { (lo + step * best_i as f64, best) };
        (t.exp(), val)
    }

    /// Root of the complementary-slackness condition, by bisection in `ln μ`.
    fn slackness_root(&self, delta: f64, guess: f64) -> f64 {
        let mut lo = guess.ln() - 1.0;
        let mut hi = guess.ln() + 1.0;
        let g = |t: f64| self.slackness(t.exp(), delta);
        let mut expand = 0;
        while g(lo) < 0.0 && expand < 200 {
            lo -= 2.0;
            expand += 1;
        }
        while g(hi) > 0.0 && expand < 400 {
            hi += 2.0;
            expand += 1;
        }
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    fn witness_from_y(&self, y: &DVector<f64>) -> Vec<f64> {
        let z = &self.eigvecs * y;
        let c = self.factor.back_substitute(&z);
        self.element(&c).as_slice().to_vec()
    }

    /// `ω(δ)` with witness.
    pub fn solve(&self, delta: f64) -> Result<ModulusPoint> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be a finite nonnegative number, got {delta}")));
        }
        let r = 2.0 * self.radius;
        let k = self.lambda.len();
        if delta == 0.0 {
            let omega = r * self.kernel_value;
            let witness = match &self.kernel_coeffs {
                Some(c) => self.element(&(c * r)).as_slice().to_vec(),
                None => vec![0.0; self.element(&DVector::zeros(k)).len()],
            };
            return Ok(ModulusPoint { delta, omega, upper: omega, multiplier: None, witness });
        }
        let vnorm = self.v_tilde.norm();
        if vnorm == 0.0 {
            let witness = self.witness_from_y(&DVector::zeros(k));
            return Ok(ModulusPoint { delta, omega: 0.0, upper: 0.0, multiplier: Some(0.0), witness });
        }

        let (mu_g, u_g) = self.minimize_dual(delta);
        let mut upper_sq = u_g.min(self.dual_sq(0.0, delta)).min(self.dual_sq(f64::INFINITY, delta));

        // Primal recovery from the multiplier.
        let (mu_star, y) = if self.slackness(0.0, delta) <= 0.0 {
            (Some(0.0), &self.v_tilde * (r / vnorm))
        } else if self.slackness(f64::INFINITY, delta) >= 0.0 {
            let d = self.direction(f64::INFINITY, delta);
            let s = self.feasible_scale(&d, delta);
            (None, d * s)
        } else {
            let mu = self.slackness_root(delta, mu_g);
            let d = self.direction(mu, delta);
            let s = self.feasible_scale(&d, delta);
            (Some(mu), d * s)
        };
        if let Some(mu) = mu_star {
            upper_sq = upper_sq.min(self.dual_sq(mu, delta));
        }
        let omega = self.v_tilde.dot(&y).max(0.0);
        let upper = upper_sq.sqrt().max(omega);
        if upper - omega > GAP_TOL * upper {
            return Err(Error::NonConvergence { lower: omega, upper });
        }
        Ok(ModulusPoint { delta, omega, upper, multiplier: mu_star, witness: self.witness_from_y(&y) })
    }
}

/// `ω(δ; R, x′)` for one `δ`.
pub fn strong_modulus(
    m: &DomainOperator,
    p: &LinearMap,
    x_probe: &DVector<f64>,
    radius: f64,
    delta: f64,
    tol: Tolerances,
) -> Result<ModulusPoint> {
    ModulusProblem::new(m, p, x_probe, radius, tol)?.solve(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveClass {
    /// Fitted intercept at `δ = 0` is within tolerance.
    Decaying,
    /// Every sample is at least ten times the tolerance.
    Obstructed,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Number of smallest-`δ` samples used.
    pub points: usize,
}

impl LineFit {
    pub fn at(&self, delta: f64) -> f64 {
        self.intercept + self.slope * delta
    }
}

/// Sampled modulus `δ ↦ ω(δ; R, x′)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub radius: f64,
    pub probe: Vec<f64>,
    pub samples: Vec<ModulusPoint>,
    pub fit: LineFit,
    pub classification: CurveClass,
    pub classification_tol: f64,
}

/// Least-squares line through the samples with the three smallest `δ`.
fn fit_small_deltas(samples: &[ModulusPoint]) -> LineFit {
    let pts = &samples[..samples.len().min(3)];
    let n = pts.len() as f64;
    let mx = pts.iter().map(|s| s.delta).sum::<f64>() / n;
    let my = pts.iter().map(|s| s.omega).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|s| (s.delta - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|s| (s.delta - mx) * (s.omega - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    LineFit { slope, intercept: my - slope * mx, points: pts.len() }
}

impl ModulusCurve {
    /// Default classification tolerance `1e-6 · 2R · |x′|`.
    pub fn default_tolerance(radius: f64, probe_norm: f64) -> f64 {
        1e-6 * 2.0 * radius * probe_norm
    }

    pub fn classify(&self, tol: f64) -> CurveClass {
        let min_omega = self.samples.iter().map(|s| s.omega).fold(f64::INFINITY, f64::min);
        if self.fit.intercept <= tol {
            CurveClass::Decaying
        } else if min_omega >= 10.0 * tol {
            CurveClass::Obstructed
        } else {
            CurveClass::Inconclusive
        }
    }

    /// `ω` nondecreasing along the samples, up to `rel` relative slack.
    pub fn is_monotone(&self, rel: f64) -> bool {
        self.samples.windows(2).all(|w| w[1].omega >= w[0].omega - rel * w[1].omega.abs().max(w[0].omega.abs()))
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.omega).collect()
    }

    /// CSV with columns `delta, omega, slope_fit`; `slope_fit` is the fitted
    /// line evaluated at each `δ`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta", "omega", "slope_fit"])?;
        for s in &self.samples {
            w.write_record([fmt(s.delta), fmt(s.omega), fmt(self.fit.at(s.delta))])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

/// Samples `ω` at each `δ` (nonnegative, nondecreasing) and classifies the curve.
pub fn modulus_curve(
    m: &DomainOperator,
    p: &LinearMap,
    x_probe: &DVector<f64>,
    radius: f64,
    deltas: &[f64],
    tol: Tolerances,
) -> Result<ModulusCurve> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("delta list is empty".into()));
    }
    if deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("deltas must be finite and nonnegative".into()));
    }
    if deltas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("deltas must be sorted".into()));
    }
    let problem = ModulusProblem::new(m, p, x_probe, radius, tol)?;
    let samples = deltas.iter().map(|&d| problem.solve(d)).collect::<Result<Vec<_>>>()?;
    let fit = fit_small_deltas(&samples);
    let probe_norm = p.target().norm(x_probe);
    let classification_tol = ModulusCurve::default_tolerance(radius, probe_norm);
    let mut curve = ModulusCurve {
        radius,
        probe: x_probe.as_slice().to_vec(),
        samples,
        fit,
        classification: CurveClass::Inconclusive,
        classification_tol,
    };
    curve.classification = curve.classify(classification_tol);
    Ok(curve)
}
