//! TOML run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use causality_core::causality::Tolerances;
use causality_core::hermite::CounterexampleConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for the random operator kinds.
    pub seed: Option<u64>,
    pub space: Option<SpaceConfig>,
    pub operator: Option<OperatorConfig>,
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub counterexample: Option<CounterexampleConfig>,
}

/// `{L, dim}` is the grid on `[−L, L]`; `{dim}` alone is the sequence space.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
    pub dim: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    /// `τ_h`; give either `h` or `steps` (multiples of the grid step).
    Shift { h: Option<f64>, steps: Option<i64> },
    /// Convolution; taps inline as `[[index, value], …]` or from a CSV file.
    Toeplitz { taps: Option<Vec<(i64, f64)>>, file: Option<PathBuf> },
    /// Square matrix as comma-separated rows.
    MatrixFile { path: PathBuf },
    /// Random lower-triangular matrix (causal for truncations).
    RandomLower {},
    /// Random dense matrix.
    RandomDense {},
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Cutoff,
    Truncation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    /// Explicit sample times; otherwise `count` cutoff times or every truncation.
    pub times: Option<Vec<f64>>,
    pub count: Option<usize>,
    /// Truncation family with the reversed orientation `k ≥ t`.
    #[serde(default)]
    pub literal: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(rename = "R", default = "default_radius")]
    pub radius: f64,
    pub deltas: Option<Vec<f64>>,
    pub probes: Option<Vec<Vec<f64>>>,
    /// Time of the projection used by `modulus`; defaults to the middle sample.
    pub time: Option<f64>,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            radius: default_radius(),
            deltas: None,
            probes: None,
            time: None,
            tolerances: TolerancesConfig::default(),
        }
    }
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    pub rank: Option<f64>,
    pub verdict: Option<f64>,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

pub const DEFAULT_VALIDATION_TOL: f64 = 1e-12;
pub const DEFAULT_DELTAS: [f64; 7] = [0.0, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.5];

impl RunConfig {
    /// Parses and checks ranges; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.operator {
            Some(OperatorConfig::Toeplitz { file: Some(f), .. }) => fix(f),
            Some(OperatorConfig::MatrixFile { path }) => fix(path),
            _ => {}
        }
        if let Some(d) = &mut self.output.directory {
            fix(d);
        }
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(s) = &self.space {
            if s.dim == 0 || s.dim > 8192 {
                return bad(format!("space.dim = {} outside 1..=8192", s.dim));
            }
            if let Some(l) = s.half_width {
                if !(l > 0.0 && l.is_finite()) {
                    return bad(format!("space.L = {l} must be positive"));
                }
            }
        }
        match &self.operator {
            Some(OperatorConfig::Shift { h, steps }) => {
                if h.is_some() == steps.is_some() {
                    return bad("shift operator needs exactly one of `h` and `steps`".into());
                }
            }
            Some(OperatorConfig::Toeplitz { taps, file }) => {
                if taps.is_some() == file.is_some() {
                    return bad("toeplitz operator needs exactly one of `taps` and `file`".into());
                }
                if let Some(f) = file {
                    if !f.is_file() {
                        return bad(format!("tap file {} does not exist", f.display()));
                    }
                }
            }
            Some(OperatorConfig::MatrixFile { path }) if !path.is_file() => {
                return bad(format!("matrix file {} does not exist", path.display()));
            }
            _ => {}
        }
        if let Some(f) = &self.family {
            if f.times.is_some() && f.count.is_some() {
                return bad("family takes `times` or `count`, not both".into());
            }
            if f.literal && f.kind != FamilyKind::Truncation {
                return bad("`literal` applies to the truncation family only".into());
            }
            if f.count.is_some() && f.kind == FamilyKind::Truncation {
                return bad("`count` applies to the cutoff family only".into());
            }
            if let Some(t) = &f.times {
                if t.is_empty() || t.iter().any(|x| !x.is_finite()) {
                    return bad("family.times must be a non-empty list of finite numbers".into());
                }
            }
        }
        let a = &self.analysis;
        if !(a.radius > 0.0 && a.radius.is_finite()) {
            return bad(format!("analysis.R = {} must be positive", a.radius));
        }
        for (name, v) in
            [("rank", a.tolerances.rank), ("verdict", a.tolerances.verdict), ("validation", a.tolerances.validation)]
        {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return bad(format!("analysis.tolerances.{name} = {v} outside (0, 1)"));
                }
            }
        }
        if let Some(d) = &a.deltas {
            if d.is_empty() {
                return bad("analysis.deltas is empty".into());
            }
            if d.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return bad("analysis.deltas must be finite and nonnegative".into());
            }
            if d.windows(2).any(|w| w[1] < w[0]) {
                return bad("analysis.deltas must be sorted".into());
            }
        }
        Ok(())
    }

    pub fn tolerances(&self, override_tol: Option<f64>) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(r) = self.analysis.tolerances.rank {
            t.rank = r;
        }
        if let Some(v) = override_tol.or(self.analysis.tolerances.verdict) {
            t.verdict = v;
        }
        t
    }

    pub fn validation_tol(&self, override_tol: Option<f64>) -> f64 {
        override_tol.or(self.analysis.tolerances.validation).unwrap_or(DEFAULT_VALIDATION_TOL)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.as_ref().is_none_or(|v| v.contains(&f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(s, Path::new("."))
    }

    #[test]
    fn minimal_and_defaults() {
        let c = parse("[space]\ndim = 4\n[family]\nkind = \"truncation\"\n").unwrap();
        assert_eq!(c.analysis.radius, 1.0);
        assert!(c.wants(Format::Json) && c.wants(Format::Csv));
        assert_eq!(c.tolerances(Some(1e-6)).verdict, 1e-6);
    }

    #[test]
    fn rejections() {
        assert!(parse("bogus = 1\n").is_err());
        assert!(parse("[space]\ndim = 4\nextra = 2\n").is_err());
        assert!(parse("[operator]\nkind = \"shift\"\n").is_err());
        assert!(parse("[operator]\nkind = \"shift\"\nh = 1.0\nsteps = 2\n").is_err());
        assert!(parse("[operator]\nkind = \"matrix-file\"\npath = \"/nonexistent.csv\"\n").is_err());
        assert!(parse("[analysis]\ndeltas = []\n").is_err());
        assert!(parse("[family]\nkind = \"cutoff\"\nliteral = true\n").is_err());
        assert!(parse("[counterexample]\nwidth = 3\n").is_err());
    }
}
