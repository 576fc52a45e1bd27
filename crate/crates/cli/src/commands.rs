use std::fs::File;

use causality_core::causality::{
    canonical_probes, closure_extension, compatibility_defect, is_causal, modulus_curve, theorem_equivalence_check,
    CausalityReport, CurveClass, EquivalenceReport, LineFit, Tolerances,
};
use causality_core::discrete::{fir_causal, toeplitz_operator, ImpulseResponse};
use causality_core::hermite::{
    counterexample_run, shift_operator, CounterexampleConfig, CounterexampleRow, CounterexampleSummary,
    VERDICT_INCONCLUSIVE,
};
use causality_core::instances::{random_dense_operator, random_lower_triangular};
use causality_core::linalg::{DiscretizedSpace, DomainOperator, LinearMap};
use causality_core::resolution::{
    cutoff_resolution, cutoff_times, truncation_literal, truncation_resolution, truncation_times, validate_resolution,
    ProjectionFamily, ValidationReport,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{FamilyConfig, FamilyKind, OperatorConfig, RunConfig, DEFAULT_DELTAS};
use crate::output::OutputDir;
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDING: i32 = 1;

const DEFAULT_CUTOFF_COUNT: usize = 32;

/// Settings shared by every subcommand after flag overrides.
pub struct Context {
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: OutputDir,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn build_space(cfg: &RunConfig) -> Result<DiscretizedSpace, CliError> {
    let Some(s) = &cfg.space else { return config_err("missing [space] section") };
    Ok(match s.half_width {
        Some(l) => DiscretizedSpace::symmetric_grid(l, s.dim)?,
        None => DiscretizedSpace::sequence(s.dim)?,
    })
}

fn read_matrix(path: &std::path::Path) -> Result<DMatrix<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return config_err(format!("{}: expected a non-empty rectangular matrix", path.display()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

struct Operator {
    kind: &'static str,
    map: LinearMap,
    impulse: Option<ImpulseResponse>,
}

fn build_operator(cfg: &RunConfig, seed: u64) -> Result<Operator, CliError> {
    let Some(op) = &cfg.operator else { return config_err("missing [operator] section") };
    let space = build_space(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match op {
        OperatorConfig::Shift { h, steps } => {
            let Some(step) = space.uniform_step() else {
                return config_err("shift operator needs a grid space with `L`");
            };
            if cfg.space.as_ref().is_some_and(|s| s.half_width.is_none()) {
                return config_err("shift operator needs a grid space with `L`");
            }
            let h = h.unwrap_or_else(|| steps.unwrap_or(0) as f64 * step);
            Operator { kind: "shift", map: shift_operator(&space, h)?, impulse: None }
        }
        OperatorConfig::Toeplitz { taps, file } => {
            if cfg.space.as_ref().is_some_and(|s| s.half_width.is_some()) {
                return config_err("toeplitz operator lives on the sequence space; drop `L`");
            }
            let ir = match (taps, file) {
                (Some(t), _) => ImpulseResponse::new(t.clone())?,
                (None, Some(f)) => {
                    let fh =
                        File::open(f).map_err(|e| CliError::Config(format!("cannot open {}: {e}", f.display())))?;
                    ImpulseResponse::from_csv(fh)?
                }
                (None, None) => unreachable!("checked at load"),
            };
            let map = toeplitz_operator(&ir, space.dim())?;
            Operator { kind: "toeplitz", map, impulse: Some(ir) }
        }
        OperatorConfig::MatrixFile { path } => {
            let m = read_matrix(path)?;
            if m.shape() != (space.dim(), space.dim()) {
                return config_err(format!(
                    "matrix file {} is {}x{}, space dimension is {}",
                    path.display(),
                    m.nrows(),
                    m.ncols(),
                    space.dim()
                ));
            }
            Operator { kind: "matrix-file", map: LinearMap::on(&space, m)?, impulse: None }
        }
        OperatorConfig::RandomLower {} => {
            Operator { kind: "random-lower", map: random_lower_triangular(&mut rng, &space)?, impulse: None }
        }
        OperatorConfig::RandomDense {} => {
            Operator { kind: "random-dense", map: random_dense_operator(&mut rng, &space)?, impulse: None }
        }
    })
}

/// The configured family, or the cutoff family for shifts and every truncation otherwise.
fn family_config(cfg: &RunConfig) -> FamilyConfig {
    let default = match cfg.operator {
        Some(OperatorConfig::Shift { .. }) => FamilyKind::Cutoff,
        _ => FamilyKind::Truncation,
    };
    cfg.family.clone().unwrap_or(FamilyConfig { kind: default, times: None, count: None, literal: false })
}

fn build_family(cfg: &RunConfig, space: &DiscretizedSpace) -> Result<ProjectionFamily, CliError> {
    let fc = family_config(cfg);
    Ok(match fc.kind {
        FamilyKind::Cutoff => {
            let times = match fc.times {
                Some(t) => t,
                None => cutoff_times(space, fc.count.unwrap_or(DEFAULT_CUTOFF_COUNT))?,
            };
            cutoff_resolution(space, times)?
        }
        FamilyKind::Truncation => {
            let times = fc.times.unwrap_or_else(|| truncation_times(space.dim()));
            if fc.literal {
                truncation_literal(space, times)?
            } else {
                truncation_resolution(space, times)?
            }
        }
    })
}

fn f64_csv(x: f64) -> String {
    format!("{x:.17e}")
}

#[derive(Serialize)]
struct FamilySummary {
    kind: FamilyKind,
    literal: bool,
    times: Vec<f64>,
}

fn family_summary(cfg: &RunConfig, fam: &ProjectionFamily) -> FamilySummary {
    let fc = family_config(cfg);
    FamilySummary { kind: fc.kind, literal: fc.literal, times: fam.times().to_vec() }
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    command: &'static str,
    exit_code: i32,
    family: FamilySummary,
    tolerance: f64,
    report: &'a ValidationReport,
}

pub fn validate(cfg: &RunConfig, ctx: &Context) -> Result<i32, CliError> {
    if cfg.family.is_none() {
        return config_err("validate needs a [family] section");
    }
    let space = build_space(cfg)?;
    let fam = build_family(cfg, &space)?;
    let tol = cfg.validation_tol(ctx.tol);
    let report = validate_resolution(&fam, tol)?;
    let code = if report.passed { EXIT_OK } else { EXIT_FINDING };
    ctx.out.json(
        "validate.json",
        &ValidateOutput {
            command: "validate",
            exit_code: code,
            family: family_summary(cfg, &fam),
            tolerance: tol,
            report: &report,
        },
    )?;
    ctx.out.csv("validate.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["check_name", "defect", "tolerance", "pass"])?;
        for c in &report.checks {
            w.write_record([c.check_name.clone(), f64_csv(c.defect), f64_csv(c.tolerance), c.pass.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    println!("validate: {}", if report.passed { "pass" } else { "fail" });
    for c in report.checks.iter().filter(|c| !c.pass) {
        println!(
            "  {} failed (defect {:e}){}",
            c.check_name,
            c.defect,
            c.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
        );
    }
    Ok(code)
}

#[derive(Serialize)]
struct FirSummary {
    support_causal: bool,
    factorization_defect: f64,
}

#[derive(Serialize)]
struct CausalOutput<'a> {
    command: &'static str,
    exit_code: i32,
    operator: &'static str,
    dim: usize,
    causal: bool,
    max_defect: f64,
    threshold: f64,
    operator_norm: f64,
    tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    fir: Option<FirSummary>,
    family: FamilySummary,
    reports: &'a [CausalityReport],
}

pub fn causal(cfg: &RunConfig, ctx: &Context) -> Result<i32, CliError> {
    let op = build_operator(cfg, ctx.seed)?;
    let tol = cfg.tolerances(ctx.tol);
    let space = op.map.source().clone();
    let fam = build_family(cfg, &space)?;
    let default_truncation =
        cfg.family.as_ref().is_none_or(|f| f.kind == FamilyKind::Truncation && f.times.is_none() && !f.literal);
    let (run, fir) = match &op.impulse {
        Some(ir) if default_truncation => {
            let v = fir_causal(ir, space.dim(), tol)?;
            let fir = FirSummary { support_causal: v.support_causal, factorization_defect: v.factorization_defect };
            (v.run, Some(fir))
        }
        _ => (is_causal(&DomainOperator::full(&op.map), &fam, tol)?, None),
    };
    let code = if run.causal { EXIT_OK } else { EXIT_FINDING };
    ctx.out.json(
        "causal.json",
        &CausalOutput {
            command: "causal",
            exit_code: code,
            operator: op.kind,
            dim: space.dim(),
            causal: run.causal,
            max_defect: run.max_defect,
            threshold: run.threshold,
            operator_norm: run.operator_norm,
            tolerances: tol,
            fir,
            family: family_summary(cfg, &fam),
            reports: &run.reports,
        },
    )?;
    ctx.out.csv("causal.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["time", "verdict", "defect0", "threshold", "kernel_dim"])?;
        for r in &run.reports {
            let verdict =
                serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            w.write_record([
                r.time.map(f64_csv).unwrap_or_default(),
                verdict,
                f64_csv(r.defect0),
                f64_csv(r.threshold),
                r.kernel_dim.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    println!(
        "causal: {} (max defect {:e}, threshold {:e}, {} times)",
        run.causal,
        run.max_defect,
        run.threshold,
        run.reports.len()
    );
    Ok(code)
}

#[derive(Serialize)]
struct CurveSummary {
    probe_index: usize,
    csv: String,
    probe: Vec<f64>,
    classification: CurveClass,
    classification_tol: f64,
    fit: LineFit,
    omega: Vec<f64>,
    upper: Vec<f64>,
    monotone: bool,
}

#[derive(Serialize)]
struct ModulusOutput {
    command: &'static str,
    exit_code: i32,
    operator: &'static str,
    dim: usize,
    time: f64,
    radius: f64,
    deltas: Vec<f64>,
    curves: Vec<CurveSummary>,
    equivalence: EquivalenceReport,
}

pub fn modulus(cfg: &RunConfig, ctx: &Context) -> Result<i32, CliError> {
    let op = build_operator(cfg, ctx.seed)?;
    let tol = cfg.tolerances(ctx.tol);
    let space = op.map.source().clone();
    let fam = build_family(cfg, &space)?;
    let time = match cfg.analysis.time {
        Some(t) => t,
        None => fam.times()[fam.len() / 2],
    };
    let p = fam.at(time);
    let m = DomainOperator::full(&op.map);
    let radius = cfg.analysis.radius;
    let deltas = cfg.analysis.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
    let probes: Vec<DVector<f64>> = match &cfg.analysis.probes {
        Some(list) => {
            if list.is_empty() {
                return config_err("analysis.probes is empty");
            }
            let mut out = Vec::new();
            for (i, v) in list.iter().enumerate() {
                if v.len() != space.dim() {
                    return config_err(format!("probe {i} has length {}, space dimension is {}", v.len(), space.dim()));
                }
                out.push(DVector::from_column_slice(v));
            }
            out
        }
        None => {
            let ext = closure_extension(&m)?;
            let rep = compatibility_defect(&ext.operator(), &p, tol)?;
            canonical_probes(&p, &ext.map, rep.witness_vector().as_ref(), tol)?
        }
    };
    if probes.is_empty() {
        return config_err(format!("P at time {time} has trivial range; no probe directions"));
    }
    let mut curves = Vec::with_capacity(probes.len());
    for (i, x) in probes.iter().enumerate() {
        let curve = modulus_curve(&m, &p, x, radius, &deltas, tol)?;
        let name = format!("modulus_{i:02}.csv");
        ctx.out.csv(&name, |buf| curve.write_csv(buf))?;
        curves.push(CurveSummary {
            probe_index: i,
            csv: name,
            probe: curve.probe.clone(),
            classification: curve.classification,
            classification_tol: curve.classification_tol,
            fit: curve.fit,
            omega: curve.omegas(),
            upper: curve.samples.iter().map(|s| s.upper).collect(),
            monotone: curve.is_monotone(1e-9),
        });
    }
    let equivalence = theorem_equivalence_check(&m, &p, radius, &deltas, &probes, tol)?;
    let decaying = curves.iter().all(|c| c.classification == CurveClass::Decaying);
    let code = if decaying { EXIT_OK } else { EXIT_FINDING };
    let classes: Vec<String> = curves
        .iter()
        .map(|c| {
            serde_json::to_value(c.classification).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        })
        .collect();
    ctx.out.json(
        "modulus.json",
        &ModulusOutput {
            command: "modulus",
            exit_code: code,
            operator: op.kind,
            dim: space.dim(),
            time,
            radius,
            deltas,
            curves,
            equivalence,
        },
    )?;
    println!("modulus: {} probe(s) at t = {time}: {}", classes.len(), classes.join(", "));
    Ok(code)
}

#[derive(Serialize)]
struct CounterexampleOutput<'a> {
    command: &'static str,
    exit_code: i32,
    config: &'a CounterexampleConfig,
    summary: &'a CounterexampleSummary,
    rows: &'a [CounterexampleRow],
}

pub fn counterexample(cfg: &RunConfig, ctx: &Context) -> Result<i32, CliError> {
    let config = cfg.counterexample.clone().unwrap_or_default();
    let table = counterexample_run(&config)?;
    let code = if table.summary.verdict == VERDICT_INCONCLUSIVE { EXIT_FINDING } else { EXIT_OK };
    ctx.out.csv("counterexample.csv", |buf| table.write_csv(buf))?;
    ctx.out.json(
        "counterexample.json",
        &CounterexampleOutput {
            command: "counterexample",
            exit_code: code,
            config: &table.config,
            summary: &table.summary,
            rows: &table.rows,
        },
    )?;
    println!("counterexample: {}", table.summary.verdict);
    Ok(code)
}
