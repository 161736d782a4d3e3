//! TOML run configuration. Every section is optional; unknown keys are errors.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use symmetrix::Tolerances;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub fmap: FMapConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub figure1: Figure1Section,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Blend {
        #[serde(default)]
        alpha: f64,
        #[serde(default = "half_pi")]
        beta: f64,
    },
    /// CSV of `theta` followed by the row-major `(re, im)` entries of `rho(theta)`.
    Table { path: PathBuf },
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::Blend { alpha: 0.0, beta: FRAC_PI_2 }
    }
}

fn half_pi() -> f64 {
    FRAC_PI_2
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FMapConfig {
    Location,
    Scale {
        z0: f64,
    },
    #[default]
    Weight,
    /// `f = int sqrt(F)` on `[lo, hi]`; `F` from a `t,F` table, or the model's
    /// quantum Fisher information when no table is given.
    Fisher {
        lo: f64,
        hi: f64,
        anchor: Option<f64>,
        table: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    Haldane { a: f64 },
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    /// CSV of `theta,density`, interpolated linearly and normalised on load.
    Table { path: PathBuf },
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self::Haldane { a: 0.01 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { order: symmetrix::quadrature::DEFAULT_ORDER }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub hermiticity: Option<f64>,
    pub trace: Option<f64>,
    pub positivity: Option<f64>,
    pub orthonormality: Option<f64>,
    pub projector: Option<f64>,
    pub kernel_eigenvalue: Option<f64>,
    pub kernel_rhs: Option<f64>,
    pub merge: Option<f64>,
    pub zero_probability: Option<f64>,
    pub zero_moment: Option<f64>,
    pub probability_sum: Option<f64>,
    pub normalization: Option<f64>,
}

impl ToleranceConfig {
    pub fn resolve(&self) -> Result<Tolerances> {
        let mut t = Tolerances::DEFAULT;
        let fields = [
            ("hermiticity", self.hermiticity, &mut t.hermiticity),
            ("trace", self.trace, &mut t.trace),
            ("positivity", self.positivity, &mut t.positivity),
            ("orthonormality", self.orthonormality, &mut t.orthonormality),
            ("projector", self.projector, &mut t.projector),
            ("kernel_eigenvalue", self.kernel_eigenvalue, &mut t.kernel_eigenvalue),
            ("kernel_rhs", self.kernel_rhs, &mut t.kernel_rhs),
            ("merge", self.merge, &mut t.merge),
            ("zero_probability", self.zero_probability, &mut t.zero_probability),
            ("zero_moment", self.zero_moment, &mut t.zero_moment),
            ("probability_sum", self.probability_sum, &mut t.probability_sum),
            ("normalization", self.normalization, &mut t.normalization),
        ];
        for (name, value, slot) in fields {
            if let Some(v) = value {
                if !(v >= 0.0 && v.is_finite()) {
                    bail!("tolerances.{name} must be a nonnegative number, got {v}");
                }
                *slot = v;
            }
        }
        Ok(t)
    }
}

/// A list of values, a single value, or `count` evenly spaced points from `start` to `stop`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Single(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let values = match self {
            Grid::Single(v) => vec![*v],
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, count } => match count {
                0 => vec![],
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        };
        if values.is_empty() {
            bail!("{name} grid is empty");
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            bail!("{name} grid contains non-finite value {v}");
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub a: Option<Grid>,
    pub alpha: Option<Grid>,
    pub beta: Option<Grid>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Conjugate,
    Covariant,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Section {
    pub a: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<Grid>,
    pub eta0: Option<Grid>,
    pub convention: Option<Convention>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Measure the optimal POM for the prior on every shot.
    #[default]
    Optimal,
    /// Measure the computational basis on every shot.
    Computational,
    /// Re-optimise the Bloch direction and POM before each shot.
    Adaptive,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionConfig {
    #[serde(default)]
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub shots: usize,
    pub theta_true: Option<f64>,
    pub seed: Option<u64>,
    pub policy: PolicyKind,
    pub candidates: Vec<DirectionConfig>,
    pub credible_level: f64,
    pub summary: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            shots: 100,
            theta_true: None,
            seed: None,
            policy: PolicyKind::Optimal,
            candidates: Vec::new(),
            credible_level: 0.95,
            summary: None,
        }
    }
}

impl RunConfig {
    /// Reads `path`, resolving relative file references against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.check_files()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ModelConfig::Table { path } = &mut self.model {
            fix(path);
        }
        if let PriorConfig::Table { path } = &mut self.prior {
            fix(path);
        }
        if let FMapConfig::Fisher { table: Some(path), .. } = &mut self.fmap {
            fix(path);
        }
        if let Some(path) = &mut self.simulate.summary {
            fix(path);
        }
    }

    fn check_files(&self) -> Result<()> {
        let mut inputs = Vec::new();
        if let ModelConfig::Table { path } = &self.model {
            inputs.push(("model.path", path));
        }
        if let PriorConfig::Table { path } = &self.prior {
            inputs.push(("prior.path", path));
        }
        if let FMapConfig::Fisher { table: Some(path), .. } = &self.fmap {
            inputs.push(("fmap.table", path));
        }
        for (key, path) in inputs {
            if !path.is_file() {
                bail!("{key}: file {} does not exist", path.display());
            }
        }
        Ok(())
    }
}
