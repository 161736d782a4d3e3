//! Turning configuration into models, priors and f-maps.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use symmetrix::fmap::RealFn;
use symmetrix::operator::{CMatrix, DensityOperator, HermitianOperator};
use symmetrix::personick::{quantum_fisher_information, StateFamily};
use symmetrix::{BlochDirection, FMap, Interval, PriorDensity, QuadratureRule, Tolerances};

use crate::config::{FMapConfig, ModelConfig, PriorConfig};

/// States tabulated at increasing `theta`, interpolated linearly in between.
#[derive(Debug, Clone)]
pub struct TableFamily {
    thetas: Arc<Vec<f64>>,
    states: Arc<Vec<HermitianOperator>>,
}

impl TableFamily {
    pub fn new(thetas: Vec<f64>, states: Vec<HermitianOperator>, tol: &Tolerances) -> Result<Self> {
        if thetas.len() < 2 || thetas.len() != states.len() {
            bail!("a model table needs at least two rows");
        }
        if let Some(w) = thetas.windows(2).find(|w| !(w[0] < w[1])) {
            bail!("model table theta values must increase strictly ({} then {})", w[0], w[1]);
        }
        let dim = states[0].dim();
        for (theta, rho) in thetas.iter().zip(&states) {
            if rho.dim() != dim {
                bail!("model table row at theta = {theta} has dimension {}, expected {dim}", rho.dim());
            }
            DensityOperator::new(rho.clone(), tol).with_context(|| format!("model table row at theta = {theta}"))?;
        }
        Ok(Self { thetas: Arc::new(thetas), states: Arc::new(states) })
    }

    /// Reads `theta, re_00, im_00, re_01, im_01, ...` rows after a header line.
    pub fn load(path: &Path, tol: &Tolerances) -> Result<Self> {
        let rows = read_numeric_csv(path)?;
        let width = rows[0].len();
        let dim = (((width - 1) / 2) as f64).sqrt().round() as usize;
        if dim == 0 || 1 + 2 * dim * dim != width {
            bail!("{}: {width} columns do not match theta plus 2 d^2 matrix entries", path.display());
        }
        let mut thetas = Vec::with_capacity(rows.len());
        let mut states = Vec::with_capacity(rows.len());
        for (line, row) in rows.iter().enumerate() {
            let entries: Vec<(f64, f64)> = row[1..].chunks(2).map(|c| (c[0], c[1])).collect();
            let rho = HermitianOperator::from_row_major(dim, &entries)
                .with_context(|| format!("{}: data row {}", path.display(), line + 1))?;
            thetas.push(row[0]);
            states.push(rho);
        }
        Self::new(thetas, states, tol).with_context(|| format!("model table {}", path.display()))
    }
}

impl StateFamily for TableFamily {
    type Controls = ();

    fn dim(&self) -> usize {
        self.states[0].dim()
    }

    fn domain(&self) -> Interval {
        Interval { lo: self.thetas[0], hi: self.thetas[self.thetas.len() - 1] }
    }

    fn state(&self, theta: f64, _: &()) -> symmetrix::Result<HermitianOperator> {
        let domain = self.domain();
        if !domain.contains(theta) {
            return Err(symmetrix::Error::Domain { value: theta, domain: domain.to_string() });
        }
        let k = self.thetas.partition_point(|&t| t <= theta).clamp(1, self.thetas.len() - 1);
        let (t0, t1) = (self.thetas[k - 1], self.thetas[k]);
        let w = (theta - t0) / (t1 - t0);
        Ok(&self.states[k - 1].scale(1.0 - w) + &self.states[k].scale(w))
    }

    fn derivative(&self, theta: f64, _: &()) -> symmetrix::Result<Option<HermitianOperator>> {
        let k = self.thetas.partition_point(|&t| t <= theta).clamp(1, self.thetas.len() - 1);
        let slope = 1.0 / (self.thetas[k] - self.thetas[k - 1]);
        Ok(Some((&self.states[k] - &self.states[k - 1]).scale(slope)))
    }
}

pub enum Model {
    Blend(BlochDirection),
    Table(TableFamily),
}

impl Model {
    pub fn from_config(config: &ModelConfig, tol: &Tolerances) -> Result<Self> {
        Ok(match config {
            ModelConfig::Blend { alpha, beta } => {
                Model::Blend(BlochDirection::new(*alpha, *beta).context("model: invalid Bloch direction")?)
            }
            ModelConfig::Table { path } => Model::Table(TableFamily::load(path, tol)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Blend(_) => "blend",
            Model::Table(_) => "table",
        }
    }
}

pub fn build_prior(config: &PriorConfig, rule: &QuadratureRule, tol: &Tolerances) -> Result<PriorDensity> {
    let prior = match config {
        PriorConfig::Haldane { a } => PriorDensity::haldane(*a),
        PriorConfig::Uniform { lo, hi } => PriorDensity::uniform(*lo, *hi),
        PriorConfig::LogUniform { lo, hi } => {
            if !(*lo > 0.0 && lo < hi) {
                bail!("prior: log_uniform needs 0 < lo < hi, got lo = {lo}, hi = {hi}");
            }
            let norm = (hi / lo).ln();
            let support = Interval::new(*lo, *hi)?;
            PriorDensity::from_density(support, Arc::new(move |z| 1.0 / (z * norm)), Some(FMap::scale(1.0)?), rule, tol)
        }
        PriorConfig::Table { path } => return tabulated_prior(path, rule, tol),
    };
    prior.context("prior: invalid parameters")
}

fn tabulated_prior(path: &Path, rule: &QuadratureRule, tol: &Tolerances) -> Result<PriorDensity> {
    let (nodes, values) = read_function_table(path)?;
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        bail!("{}: negative density {v}", path.display());
    }
    let support = Interval::new(nodes[0], nodes[nodes.len() - 1])?;
    let raw = linear_interpolant(nodes, values);
    // normalise with the rule that will integrate it, so the check is exact
    let total = rule.integrate(support.lo, support.hi, |t| raw(t));
    if !(total > 0.0 && total.is_finite()) {
        bail!("{}: density integrates to {total}", path.display());
    }
    let density: RealFn = Arc::new(move |t| raw(t) / total);
    PriorDensity::from_density(support, density, None, rule, tol)
        .with_context(|| format!("prior table {}", path.display()))
}

/// Builds the configured f-map. A Fisher map without a table integrates the
/// quantum Fisher information of `family` at `controls`.
pub fn build_fmap<F>(config: &FMapConfig, family: &F, controls: &F::Controls, tol: &Tolerances) -> Result<FMap>
where
    F: StateFamily + Clone + 'static,
    F::Controls: 'static,
{
    let map = match config {
        FMapConfig::Location => FMap::location(),
        FMapConfig::Scale { z0 } => FMap::scale(*z0).context("fmap: invalid scale")?,
        FMapConfig::Weight => FMap::weight(),
        FMapConfig::Fisher { lo, hi, anchor, table } => {
            let domain = Interval::new(*lo, *hi).context("fmap: invalid fisher domain")?;
            let information: RealFn = match table {
                Some(path) => {
                    let (nodes, values) = read_function_table(path)?;
                    Arc::new(linear_interpolant(nodes, values))
                }
                None => {
                    let (family, controls, tol) = (family.clone(), controls.clone(), *tol);
                    Arc::new(move |t| quantum_fisher_information(&family, t, &controls, &tol).unwrap_or(f64::NAN))
                }
            };
            FMap::fisher(information, domain, anchor.unwrap_or(*lo)).context("fmap: fisher map")?
        }
    };
    map.validate().context("fmap: validation failed")?;
    Ok(map)
}

/// All rows of a headed CSV file as numbers; `#` starts a comment line.
fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: data row {}", path.display(), line + 1))?;
        let row = record
            .iter()
            .map(|field| field.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}: data row {} is not numeric", path.display(), line + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

/// Two-column `x, y` table with strictly increasing `x`.
fn read_function_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = read_numeric_csv(path)?;
    if rows.len() < 2 || rows.iter().any(|r| r.len() != 2) {
        bail!("{}: expected at least two rows of two columns", path.display());
    }
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r[0], r[1])).unzip();
    if x.windows(2).any(|w| !(w[0] < w[1])) {
        bail!("{}: first column must increase strictly", path.display());
    }
    Ok((x, y))
}

fn linear_interpolant(x: Vec<f64>, y: Vec<f64>) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    move |t| {
        if t < x[0] || t > x[x.len() - 1] {
            return 0.0;
        }
        let k = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1);
        let w = (t - x[k - 1]) / (x[k] - x[k - 1]);
        y[k - 1] * (1.0 - w) + y[k] * w
    }
}

/// `[[re, im], ...]` rows of a matrix.
pub fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}
