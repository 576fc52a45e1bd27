use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{hermite_basis_with_limit, injectivity_margins_mp, shift_norm, shift_operator, span_margin};
use super::{DEFAULT_PRECISION_BITS, DEFAULT_TAIL_LIMIT};
use crate::linalg::{DiscretizedSpace, LinearMap};
use crate::{Error, Result};

/// Required ratio `past_in(n_max) / |bump|`.
pub const PAST_IN_LIMIT: f64 = 0.05;
/// Required ratio `past_out(n) / |P_a τ_h bump|` for `n ≥` [`PAST_OUT_FROM_DEGREE`].
pub const PAST_OUT_RATIO: f64 = 0.8;
pub const PAST_OUT_FROM_DEGREE: usize = 10;

pub const VERDICT_WITNESS: &str = "closure-noncausal, core-causal";
pub const VERDICT_CAUSAL: &str = "causal on both";
pub const VERDICT_INCONCLUSIVE: &str = "inconclusive";

fn default_half_width() -> f64 {
    // 2047 steps of 1/85 on the default 2048-point grid, so h = 1 is exact.
    2047.0 / 170.0
}
fn default_dim() -> usize {
    2048
}
fn default_shift() -> f64 {
    1.0
}
fn default_support() -> [f64; 2] {
    [0.5, 1.5]
}
fn default_degrees() -> Vec<usize> {
    (0..=40).collect()
}
fn default_tail_limit() -> f64 {
    DEFAULT_TAIL_LIMIT
}
fn default_true() -> bool {
    true
}
fn default_precision() -> u32 {
    DEFAULT_PRECISION_BITS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    /// Grid half-width `L`; the grid is `[−L, L]`.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Shift `h` of `τ_h f = f(· + h)`.
    #[serde(default = "default_shift")]
    pub shift: f64,
    /// Cutoff time `a` of `P_a`.
    #[serde(default)]
    pub cutoff: f64,
    /// Bump support `[s₀, s₁]`.
    #[serde(default = "default_support")]
    pub support: [f64; 2],
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    #[serde(default = "default_tail_limit")]
    pub tail_limit: f64,
    /// Report margins from the multiprecision route instead of double precision.
    #[serde(default = "default_true")]
    pub multiprecision: bool,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            half_width: default_half_width(),
            dim: default_dim(),
            shift: default_shift(),
            cutoff: 0.0,
            support: default_support(),
            degrees: default_degrees(),
            tail_limit: default_tail_limit(),
            multiprecision: true,
            precision_bits: default_precision(),
        }
    }
}

impl CounterexampleConfig {
    pub fn validate(&self) -> Result<()> {
        let [s0, s1] = self.support;
        let (l, a, h) = (self.half_width, self.cutoff, self.shift);
        let bad = |msg: String| Err(Error::Precondition(msg));
        if !(l > 0.0 && l.is_finite()) {
            return bad(format!("half_width must be positive, got {l}"));
        }
        if self.dim < 2 {
            return bad("dim must be at least 2".into());
        }
        if self.degrees.is_empty() {
            return bad("degree list is empty".into());
        }
        if self.degrees.windows(2).any(|w| w[1] <= w[0]) {
            return bad("degrees must be strictly increasing".into());
        }
        if *self.degrees.last().expect("non-empty") >= self.dim {
            return bad("largest degree must be below the grid dimension".into());
        }
        if ![s0, s1, a, h].iter().all(|x| x.is_finite()) {
            return bad("support, cutoff and shift must be finite".into());
        }
        if !(s0 < s1) {
            return bad(format!("bump support [{s0}, {s1}] is empty"));
        }
        if !(-l < s0 && s1 < l) {
            return bad(format!("bump support [{s0}, {s1}] must lie inside (−{l}, {l})"));
        }
        if !(s0 > a) {
            return bad(format!("bump must start after the cutoff: s₀ = {s0} ≤ a = {a}"));
        }
        if h > 0.0 && !(s0 - h < a) {
            return bad(format!("shifted bump has no mass before the cutoff: s₀ − h = {} ≥ a = {a}", s0 - h));
        }
        if h.abs() >= 2.0 * l {
            return bad(format!("|h| = {} must be below 2L = {}", h.abs(), 2.0 * l));
        }
        if self.precision_bits < 64 {
            return bad("precision_bits must be at least 64".into());
        }
        Ok(())
    }

    pub fn space(&self) -> Result<DiscretizedSpace> {
        DiscretizedSpace::symmetric_grid(self.half_width, self.dim)
    }
}

/// Standard mollifier `exp(−1/(1 − u²))` on `[s₀, s₁]`, unit weighted norm.
pub fn reference_bump(space: &DiscretizedSpace, support: [f64; 2]) -> Result<DVector<f64>> {
    let x = space.require_coords()?;
    let [s0, s1] = support;
    let mid = 0.5 * (s0 + s1);
    let half = 0.5 * (s1 - s0);
    let raw = x.map(|xi| {
        let u = (xi - mid) / half;
        if u.abs() < 1.0 {
            (-1.0 / (1.0 - u * u)).exp()
        } else {
            0.0
        }
    });
    let n = space.norm(&raw);
    if n == 0.0 {
        return Err(Error::Precondition("bump support contains no grid points".into()));
    }
    Ok(raw / n)
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleRow {
    pub degree: usize,
    /// `|P_a f_n|`.
    pub past_in: f64,
    /// `|P_a τ_h f_n|`.
    pub past_out: f64,
    /// Margin reported in the table (multiprecision when enabled).
    pub margin: f64,
    pub margin_f64: f64,
    /// `|⟨P_a τ_h f_n, x′⟩|`.
    pub modulus_pairing: f64,
    /// `|bump − f_n|`.
    pub projection_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleSummary {
    pub verdict: String,
    pub grid_step: f64,
    pub exact_shift: bool,
    pub shift_norm: f64,
    /// `|P_a τ_h bump|`.
    pub reference_past_out: f64,
    pub past_in_final: f64,
    pub past_in_limit: f64,
    pub past_out_min_ratio: Option<f64>,
    pub past_out_ratio_limit: f64,
    pub margins_positive: bool,
    pub projection_monotone: bool,
    /// `|past_out − reference| ≤ ‖τ_h‖ |bump − f_n|` on every row.
    pub continuity_transfer: bool,
    /// `past_out ≤ ‖τ_h‖ past_in` on every row (the causal-side control).
    pub causal_control: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleTable {
    pub config: CounterexampleConfig,
    pub rows: Vec<CounterexampleRow>,
    pub summary: CounterexampleSummary,
}

impl CounterexampleTable {
    /// CSV with columns `degree, past_in, past_out, margin, modulus_pairing`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["degree", "past_in", "past_out", "margin", "modulus_pairing"])?;
        for r in &self.rows {
            w.write_record([
                r.degree.to_string(),
                format!("{:.17e}", r.past_in),
                format!("{:.17e}", r.past_out),
                format!("{:.17e}", r.margin),
                format!("{:.17e}", r.modulus_pairing),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Projects the bump onto growing Hermite spans and tracks how much of it,
/// and of its shift, lies before the cutoff.
pub fn counterexample_run(config: &CounterexampleConfig) -> Result<CounterexampleTable> {
    config.validate()?;
    let space = config.space()?;
    let n_max = *config.degrees.last().expect("validated");
    let basis = hermite_basis_with_limit(&space, n_max, config.tail_limit)?;
    let bump = reference_bump(&space, config.support)?;
    let x = space.coords().expect("grid has coordinates");
    let keep: Vec<bool> = x.iter().map(|&v| v < config.cutoff).collect();
    let p = LinearMap::from_diagonal(&space, DVector::from_fn(space.dim(), |i, _| if keep[i] { 1.0 } else { 0.0 }));
    let tau = shift_operator(&space, config.shift)?;
    let tau_norm = shift_norm(&tau);
    let exact = super::exact_steps(&space, config.shift).is_some();

    let b = basis.columns();
    let coeffs = b.transpose() * bump.component_mul(space.weights());
    let tau_b = tau.left_multiply(b);
    let ref_out = p.apply(&tau.apply(&bump));
    let reference_past_out = space.norm(&ref_out);
    let probe = if reference_past_out > 0.0 { Some(&ref_out / reference_past_out) } else { None };

    let mp = if config.multiprecision {
        Some(injectivity_margins_mp(&space, &keep, n_max, config.precision_bits)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(config.degrees.len());
    for &n in &config.degrees {
        let c = coeffs.rows(0, n + 1);
        let f_n = b.columns(0, n + 1) * c;
        let tf_n = tau_b.columns(0, n + 1) * c;
        let past = p.apply(&tf_n);
        let margin_f64 = span_margin(&p, &basis.truncated(n));
        rows.push(CounterexampleRow {
            degree: n,
            past_in: space.norm(&p.apply(&f_n)),
            past_out: space.norm(&past),
            margin: mp.as_ref().map_or(margin_f64, |m| m[n]),
            margin_f64,
            modulus_pairing: probe.as_ref().map_or(0.0, |x| space.inner(&past, x).abs()),
            projection_error: space.norm(&(&bump - &f_n)),
        });
    }

    let summary = summarize(config, &space, &rows, reference_past_out, tau_norm, exact);
    Ok(CounterexampleTable { config: config.clone(), rows, summary })
}

fn summarize(
    config: &CounterexampleConfig,
    space: &DiscretizedSpace,
    rows: &[CounterexampleRow],
    reference_past_out: f64,
    tau_norm: f64,
    exact: bool,
) -> CounterexampleSummary {
    let slack = 1e-12;
    let past_in_final = rows.last().expect("non-empty").past_in;
    let tail: Vec<&CounterexampleRow> = rows.iter().filter(|r| r.degree >= PAST_OUT_FROM_DEGREE).collect();
    let past_out_min_ratio = (!tail.is_empty() && reference_past_out > 0.0)
        .then(|| tail.iter().map(|r| r.past_out / reference_past_out).fold(f64::INFINITY, f64::min));
    let margins_positive = rows.iter().all(|r| r.margin > 0.0);
    let projection_monotone = rows.windows(2).all(|w| w[1].projection_error <= w[0].projection_error + slack);
    let continuity_transfer =
        rows.iter().all(|r| (r.past_out - reference_past_out).abs() <= tau_norm * r.projection_error + slack);
    let causal_control = rows.iter().all(|r| r.past_out <= tau_norm * r.past_in + slack);

    let verdict = if config.shift > 0.0 {
        let met = reference_past_out > 0.0
            && margins_positive
            && past_in_final <= PAST_IN_LIMIT
            && past_out_min_ratio.is_some_and(|r| r >= PAST_OUT_RATIO);
        if met {
            VERDICT_WITNESS
        } else {
            VERDICT_INCONCLUSIVE
        }
    } else if causal_control {
        VERDICT_CAUSAL
    } else {
        VERDICT_INCONCLUSIVE
    };
    CounterexampleSummary {
        verdict: verdict.to_string(),
        grid_step: space.uniform_step().unwrap_or(f64::NAN),
        exact_shift: exact,
        shift_norm: tau_norm,
        reference_past_out,
        past_in_final,
        past_in_limit: PAST_IN_LIMIT,
        past_out_min_ratio,
        past_out_ratio_limit: PAST_OUT_RATIO,
        margins_positive,
        projection_monotone,
        continuity_transfer,
        causal_control,
    }
}
