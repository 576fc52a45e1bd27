//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The process exits 0 so that an honestly failing criterion does not mask
//! the rest of the workspace tests; set `ACCEPTANCE_STRICT=1` to turn any
//! FAIL into a nonzero exit.

use std::time::Instant;

use causality_core::causality::{
    bidual_collapse_check, compatibility_defect, factorization_defect, is_causal, modulus_curve,
    theorem_equivalence_check, CurveClass, ModulusProblem, Tolerances, Verdict,
};
use causality_core::discrete::fir_causal;
use causality_core::hermite::{
    counterexample_run, hermite_basis, injectivity_margins_mp, shift_operator, CounterexampleConfig,
    DEFAULT_PRECISION_BITS,
};
use causality_core::instances::{
    random_basis, random_causal_operator, random_dense_operator, random_dominated, random_impulse_response,
    random_projection, random_space,
};
use causality_core::linalg::{DiscretizedSpace, DomainOperator, LinearMap};
use causality_core::resolution::{
    cutoff_resolution, cutoff_times, truncation_literal, truncation_resolution, truncation_times, validate_resolution,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned thresholds.
const C1_CAUSAL_MAX: f64 = 1e-12;
const C1_NONCAUSAL_MIN: f64 = 0.70;
const C1_SECONDS: f64 = 5.0;
const C2_SECONDS: f64 = 30.0;
const C3_PAST_IN: f64 = 0.05;
const C3_PAST_OUT: f64 = 0.8;
const C3_SECONDS: f64 = 60.0;
const C4_FACTOR_TOL: f64 = 1e-9;
const C5_REL_GAP: f64 = 0.05;
const C5_SAMPLES: usize = 100_000;
const C6_CLOSURE_GAP: f64 = 0.02;
const C7_ROUNDTRIP: f64 = 1e-12;
const C7_INCLUSION: f64 = 1e-10;
const C8_TOL: f64 = 1e-12;
const C9_DIM: usize = 32;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_shift_dichotomy() -> Outcome {
    let start = Instant::now();
    let space = DiscretizedSpace::symmetric_grid(8.0, 512).unwrap();
    let step = space.uniform_step().unwrap();
    let fam = cutoff_resolution(&space, cutoff_times(&space, 32).unwrap()).unwrap();
    let tol = Tolerances::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in [-5i32, -1, 0, 1, 5] {
        let t = shift_operator(&space, k as f64 * step).unwrap();
        let run = is_causal(&DomainOperator::full(&t), &fam, tol).unwrap();
        let want = k <= 0;
        let good = if want {
            run.causal && run.max_defect <= C1_CAUSAL_MAX
        } else {
            !run.causal && run.max_defect >= C1_NONCAUSAL_MIN
        };
        ok &= good;
        notes.push(format!("h={k}Δ causal={} defect={:.4e}", run.causal, run.max_defect));
    }
    let secs = start.elapsed().as_secs_f64();
    let timed = secs <= C1_SECONDS;
    outcome(ok && timed, format!("{}; {secs:.2}s (limit {C1_SECONDS}s)", notes.join(", ")))
}

fn c2_hermite_vacuity() -> Outcome {
    let start = Instant::now();
    let space = DiscretizedSpace::symmetric_grid(12.0, 2048).unwrap();
    let x = space.coords().unwrap().clone();
    let max_degree = 40;
    let basis = hermite_basis(&space, max_degree).unwrap();
    let shift = shift_operator(&space, 1.0).unwrap();
    let tol = Tolerances::default();
    let mut margins_ok = true;
    let mut vacuous_ok = true;
    let mut notes = Vec::new();
    for a in [-2.0, 0.0, 2.0] {
        let keep: Vec<bool> = x.iter().map(|&v| v < a).collect();
        let margins = injectivity_margins_mp(&space, &keep, max_degree, DEFAULT_PRECISION_BITS).unwrap();
        let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        margins_ok &= margins.iter().all(|&m| m > 0.0);
        let p = LinearMap::from_diagonal(&space, DVector::from_fn(space.dim(), |i, _| if keep[i] { 1.0 } else { 0.0 }));
        let mut first_bad = None;
        for n in 0..=max_degree {
            let core = DomainOperator::restrict(&shift, basis.truncated(n)).unwrap();
            let r = compatibility_defect(&core, &p, tol).unwrap();
            if !(r.verdict == Verdict::Vacuous && r.defect0 == 0.0) {
                first_bad.get_or_insert((n, r.verdict, r.defect0));
            }
        }
        match first_bad {
            None => notes.push(format!("a={a}: vacuous for n≤{max_degree}, min margin {min_margin:.3e}")),
            Some((n, v, d)) => {
                vacuous_ok = false;
                notes.push(format!(
                    "a={a}: margin(n) {:.3e}..{min_margin:.3e}, first non-vacuous n={n} ({v:?}, defect0 {d:.3e})",
                    margins[0]
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let timed = secs <= C2_SECONDS;
    outcome(
        margins_ok && vacuous_ok && timed,
        format!(
            "margins>0: {margins_ok}, vacuous: {vacuous_ok}; {}; {secs:.2}s (limit {C2_SECONDS}s)",
            notes.join("; ")
        ),
    )
}

fn c3_closure_witness() -> Outcome {
    let start = Instant::now();
    let table = counterexample_run(&CounterexampleConfig::default()).unwrap();
    let s = &table.summary;
    let last = table.rows.last().unwrap();
    let past_in_ok = last.degree == 40 && last.past_in <= C3_PAST_IN;
    let min_ratio = table
        .rows
        .iter()
        .filter(|r| r.degree >= 10)
        .map(|r| r.past_out / s.reference_past_out)
        .fold(f64::INFINITY, f64::min);
    let past_out_ok = min_ratio >= C3_PAST_OUT;
    let secs = start.elapsed().as_secs_f64();
    let timed = secs <= C3_SECONDS;
    outcome(
        past_in_ok && past_out_ok && timed,
        format!(
            "past_in(40)={:.4e} (≤{C3_PAST_IN}), min past_out ratio n≥10 = {min_ratio:.4} (≥{C3_PAST_OUT}), verdict \"{}\"; {secs:.2}s (limit {C3_SECONDS}s)",
            last.past_in, s.verdict
        ),
    )
}

fn c4_factorization_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = Tolerances::default();
    let mut agree = 0;
    let mut total = 0;
    for i in 0..100 {
        let dim = rng.random_range(2..=12);
        let space = random_space(&mut rng, dim).unwrap();
        let rank = rng.random_range(1..dim);
        let pi = random_projection(&mut rng, &space, rank).unwrap();
        let m = if i < 50 {
            random_causal_operator(&mut rng, &pi).unwrap()
        } else {
            random_dense_operator(&mut rng, &space).unwrap()
        };
        let report = compatibility_defect(&DomainOperator::full(&m), &pi.projection, tol).unwrap();
        let fact = factorization_defect(&m, &pi.projection).unwrap();
        let by_factor = fact <= C4_FACTOR_TOL * m.norm();
        total += 1;
        if report.verdict.is_causal() == by_factor {
            agree += 1;
        }
    }
    outcome(agree == total, format!("{agree}/{total} agree"))
}

/// Best feasible value found by random boundary samples followed by a
/// (1+1) evolution strategy, all in coefficient coordinates.
fn sampling_oracle<R: Rng>(
    rng: &mut R,
    m: &DomainOperator,
    p: &LinearMap,
    x: &DVector<f64>,
    radius: f64,
    delta: f64,
    budget: usize,
) -> f64 {
    let k = m.domain_dim();
    let g = m.graph_gram();
    let w = m.source().weights();
    let pd = p.left_multiply(m.domain_basis());
    let pa = p.left_multiply(m.action());
    let v = pa.transpose() * x.component_mul(m.target().weights());
    let r = 2.0 * radius;
    let value = |z: &DVector<f64>| -> f64 {
        let gn = z.dot(&(&g * z)).max(0.0).sqrt();
        let pz = &pd * z;
        let pn = pz.component_mul(&pz).dot(w).max(0.0).sqrt();
        let mut s = if gn > 0.0 { r / gn } else { f64::INFINITY };
        if pn > 0.0 {
            s = s.min(delta / pn);
        }
        if !s.is_finite() {
            return 0.0;
        }
        (s * v.dot(z)).abs()
    };
    let gauss = |rng: &mut R| -> DVector<f64> {
        DVector::from_fn(k, |_, _| {
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
    };
    let explore = budget / 5;
    let mut best_z = gauss(rng);
    let mut best = value(&best_z);
    for _ in 1..explore {
        let z = gauss(rng);
        let f = value(&z);
        if f > best {
            best = f;
            best_z = z;
        }
    }
    let mut sigma = 0.3;
    for _ in explore..budget {
        let scale = best_z.norm().max(1e-300);
        let z = &best_z + gauss(rng) * (sigma * scale);
        let f = value(&z);
        if f > best {
            best = f;
            best_z = z;
            sigma *= 1.5;
        } else {
            sigma *= 0.95f64.powf(0.25);
        }
        sigma = sigma.clamp(1e-12, 1.0);
    }
    best
}

fn c5_modulus_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tol = Tolerances::default();
    let deltas = [0.02, 0.1, 0.3, 0.7, 1.5];
    let mut worst_gap = 0.0f64;
    let mut monotone = true;
    let mut failures = 0;
    for _ in 0..20 {
        let dim = rng.random_range(2..=16);
        let space = random_space(&mut rng, dim).unwrap();
        let rank = rng.random_range(1..dim);
        let pi = random_projection(&mut rng, &space, rank).unwrap();
        let map = random_dense_operator(&mut rng, &space).unwrap();
        let m = DomainOperator::full(&map);
        let x = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let radius = rng.random_range(0.5..2.0);
        let curve = modulus_curve(&m, &pi.projection, &x, radius, &deltas, tol).unwrap();
        monotone &= curve.is_monotone(1e-9);
        let problem = ModulusProblem::new(&m, &pi.projection, &x, radius, tol).unwrap();
        for (pt, &d) in curve.samples.iter().zip(deltas.iter()) {
            assert_eq!(problem.solve(d).unwrap().omega, pt.omega);
            let oracle = sampling_oracle(&mut rng, &m, &pi.projection, &x, radius, d, C5_SAMPLES);
            let gap = (pt.omega - oracle).abs() / pt.omega.max(oracle).max(1e-300);
            worst_gap = worst_gap.max(gap);
            if gap > C5_REL_GAP {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0 && monotone,
        format!("worst relative gap {worst_gap:.3e} (≤{C5_REL_GAP}), {failures} misses, monotone: {monotone}"),
    )
}

fn c6_theorem_harness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let tol = Tolerances::default();
    let deltas = [0.0, 1e-4, 2e-4, 1e-3, 1e-2, 0.1];
    let mut agree = 0;
    let mut worst_gap = 0.0f64;
    let mut gap_ok = true;
    for i in 0..40 {
        let dim = rng.random_range(2..=10);
        let space = random_space(&mut rng, dim).unwrap();
        let rank = rng.random_range(1..dim);
        let pi = random_projection(&mut rng, &space, rank).unwrap();
        let map = if i < 20 {
            random_causal_operator(&mut rng, &pi).unwrap()
        } else {
            random_dense_operator(&mut rng, &space).unwrap()
        };
        // A core given through a non-orthogonal spanning basis.
        let core = DomainOperator::restrict(&map, random_basis(&mut rng, dim)).unwrap();
        let r = theorem_equivalence_check(&core, &pi.projection, 1.0, &deltas, &[], tol).unwrap();
        let expected = i < 20;
        if r.agree && r.extension_compatible == expected {
            agree += 1;
        }
        worst_gap = worst_gap.max(r.max_closure_gap);
        gap_ok &= r.max_closure_gap <= C6_CLOSURE_GAP;
        if i < 20 {
            gap_ok &= r.probes.iter().all(|p| p.classification == CurveClass::Decaying);
        }
    }
    outcome(
        agree == 40 && gap_ok,
        format!("{agree}/40 agree, worst core-vs-extension gap {worst_gap:.3e} (≤{C6_CLOSURE_GAP})"),
    )
}

fn c7_bidual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = Tolerances::default();
    let mut passed = 0;
    let mut worst_rt = 0.0f64;
    let mut worst_inc = 0.0f64;
    for _ in 0..100 {
        let dim = rng.random_range(2..=12);
        let space = random_space(&mut rng, dim).unwrap();
        let rank = rng.random_range(1..dim);
        let pi = random_projection(&mut rng, &space, rank).unwrap();
        let q = random_dominated(&mut rng, &pi.projection).unwrap();
        let r = bidual_collapse_check(&pi.projection, &q, tol, C7_INCLUSION).unwrap();
        worst_rt = worst_rt.max(r.roundtrip_defect);
        worst_inc = worst_inc.max(r.inclusion_defect);
        if r.roundtrip_defect <= C7_ROUNDTRIP && r.inclusion_defect <= C7_INCLUSION {
            passed += 1;
        }
    }
    outcome(passed == 100, format!("{passed}/100, worst round-trip {worst_rt:.2e}, worst inclusion {worst_inc:.2e}"))
}

fn c8_validator() -> Outcome {
    let grid = DiscretizedSpace::symmetric_grid(4.0, 64).unwrap();
    let cutoff = cutoff_resolution(&grid, cutoff_times(&grid, 17).unwrap()).unwrap();
    let seq = DiscretizedSpace::sequence(16).unwrap();
    let trunc = truncation_resolution(&seq, truncation_times(16)).unwrap();
    let literal = truncation_literal(&seq, truncation_times(16)).unwrap();
    let rc = validate_resolution(&cutoff, C8_TOL).unwrap();
    let rt = validate_resolution(&trunc, C8_TOL).unwrap();
    let rl = validate_resolution(&literal, C8_TOL).unwrap();
    let nest = rl.check("nestedness").unwrap();
    let diagnosed = !nest.pass && nest.detail.as_deref().is_some_and(|d| d.starts_with("reversed orientation"));
    outcome(
        rc.passed && rt.passed && !rl.passed && diagnosed,
        format!(
            "cutoff {}, truncation {}, literal {} ({})",
            rc.passed,
            rt.passed,
            rl.passed,
            nest.detail.clone().unwrap_or_default()
        ),
    )
}

fn c9_fir() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tol = Tolerances::default();
    let mut agree = 0;
    let mut causal = 0;
    for _ in 0..200 {
        let ir = random_impulse_response(&mut rng, 6);
        match fir_causal(&ir, C9_DIM, tol) {
            Ok(v) if v.causal == ir.support_causal() => {
                agree += 1;
                causal += v.causal as usize;
            }
            _ => {}
        }
    }
    outcome(agree == 200, format!("{agree}/200 agree ({causal} causal)"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("shift causality dichotomy", c1_shift_dichotomy),
        ("vacuous causality of the Hermite core", c2_hermite_vacuity),
        ("closure non-causality witness", c3_closure_witness),
        ("compatibility vs factorization", c4_factorization_equivalence),
        ("modulus solver vs sampling oracle", c5_modulus_correctness),
        ("closure equivalence harness", c6_theorem_harness),
        ("bidual null-space collapse", c7_bidual),
        ("resolution validator", c8_validator),
        ("discrete FIR verdicts", c9_fir),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} [{id}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {failed} criterion(s) failed");
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
