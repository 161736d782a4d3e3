//! Multi-shot Bayesian estimation on a fixed hypothesis grid.
//!
//! The posterior lives on the prior's quadrature nodes and is kept as log
//! weights. After the outcomes `s_1..s_mu` the estimate is
//! `f^{-1}(E[f | s])`, which for weights reads
//! `2 theta = 1 + tanh(E[artanh(2 theta - 1) | s])`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fmap::FMap;
use crate::personick::{build_moments, solve_optimal, PersonickSolution, Pom, StateFamily};
use crate::prior::PriorDensity;
use crate::quadrature::QuadratureRule;
use crate::tolerances::Tolerances;

/// Below this total mass an observed outcome is treated as impossible.
const MIN_POSTERIOR_MASS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    thetas: Vec<f64>,
    /// `f(theta)` at each node.
    f_values: Vec<f64>,
    /// Normalised: `sum exp(log_weights) = 1`.
    log_weights: Vec<f64>,
}

impl PosteriorGrid {
    pub fn from_prior(prior: &PriorDensity, fmap: &FMap, rule: &QuadratureRule) -> Result<Self> {
        let disc = prior.discretize(rule)?;
        let f_values = disc.thetas.iter().map(|&t| fmap.forward(t)).collect::<Result<Vec<_>>>()?;
        let log_weights = disc.weights.iter().map(|w| w.ln()).collect();
        let mut grid = Self { thetas: disc.thetas, f_values, log_weights };
        let total = grid.log_normalize();
        if !(total.exp() > 0.0) {
            return Err(Error::Normalization { total: total.exp() });
        }
        Ok(grid)
    }

    /// Subtracts the log of the total mass and returns it.
    fn log_normalize(&mut self) -> f64 {
        let total = log_sum_exp(&self.log_weights);
        if total.is_finite() {
            self.log_weights.iter_mut().for_each(|l| *l -= total);
        }
        total
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// The posterior as a discrete prior, for re-solving the optimal strategy.
    pub fn as_prior(&self, tol: &Tolerances) -> Result<PriorDensity> {
        let weights = self.weights();
        let total: f64 = weights.iter().sum();
        PriorDensity::discrete(self.thetas.clone(), weights.iter().map(|w| w / total).collect(), tol)
    }

    /// Multiplies in one likelihood value per node and renormalises.
    pub fn update(&mut self, likelihoods: &[f64]) -> Result<()> {
        if likelihoods.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: likelihoods.len() });
        }
        let updated: Vec<f64> = self.log_weights.iter().zip(likelihoods).map(|(l, p)| l + p.ln()).collect();
        let total = log_sum_exp(&updated);
        if !(total >= MIN_POSTERIOR_MASS.ln()) {
            return Err(Error::ImpossibleOutcome);
        }
        self.log_weights = updated;
        self.log_normalize();
        Ok(())
    }

    /// Posterior mean of `f`.
    pub fn mean_f(&self) -> f64 {
        self.log_weights.iter().zip(&self.f_values).map(|(l, f)| l.exp() * f).sum()
    }

    pub fn posterior_var_f(&self) -> f64 {
        let mean = self.mean_f();
        let second: f64 = self.log_weights.iter().zip(&self.f_values).map(|(l, f)| l.exp() * f * f).sum();
        (second - mean * mean).max(0.0)
    }

    /// Central credible interval in `theta` holding `level` of the posterior mass.
    ///
    /// The endpoints are the nodes where the cumulative mass first reaches
    /// `(1 - level) / 2` and `(1 + level) / 2`.
    pub fn credible_interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidParameter { name: "level", reason: format!("{level} is outside (0, 1)") });
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.thetas[i].total_cmp(&self.thetas[j]));
        let quantile = |q: f64| {
            let mut cumulative = 0.0;
            for &i in &order {
                cumulative += self.log_weights[i].exp();
                if cumulative >= q {
                    return self.thetas[i];
                }
            }
            self.thetas[*order.last().expect("grid is nonempty")]
        };
        Ok((quantile(0.5 * (1.0 - level)), quantile(0.5 * (1.0 + level))))
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// One measured shot.
#[derive(Debug, Clone)]
pub struct ShotRecord<C> {
    pub shot: usize,
    pub control: C,
    /// Index of the observed POM element.
    pub outcome: usize,
    /// Label of the observed POM element.
    pub label: f64,
    /// `tr(M_outcome rho(theta))` at each grid node.
    pub likelihoods: Vec<f64>,
}

/// `tr(M_outcome rho_y(theta))` at each of `thetas`, clamped to `[0, 1]`.
pub fn likelihoods<F: StateFamily>(
    family: &F,
    controls: &F::Controls,
    pom: &Pom,
    outcome: usize,
    thetas: &[f64],
) -> Result<Vec<f64>> {
    let element = pom.elements.get(outcome).ok_or_else(|| Error::InvalidPom(format!("no outcome {outcome}")))?;
    thetas
        .iter()
        .map(|&t| Ok(element.trace_product(&family.state(t, controls)?).clamp(0.0, 1.0)))
        .collect()
}

/// Draws an outcome index from the Born rule at `theta`.
pub fn sample_outcome<F: StateFamily, R: Rng + ?Sized>(
    family: &F,
    theta: f64,
    controls: &F::Controls,
    pom: &Pom,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<usize> {
    let rho = family.state(theta, controls)?;
    let probabilities: Vec<f64> = pom.probabilities(&rho).into_iter().map(|p| p.max(0.0)).collect();
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > tol.probability_sum {
        return Err(Error::InvalidPom(format!("outcome probabilities sum to {total}")));
    }
    let draw = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (x, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if draw < cumulative {
            return Ok(x);
        }
    }
    // draw landed on the rounding slack at the top; return the last likely outcome
    Ok(probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0))
}

pub fn update_posterior<C>(grid: &PosteriorGrid, record: &ShotRecord<C>) -> Result<PosteriorGrid> {
    let mut next = grid.clone();
    next.update(&record.likelihoods)?;
    Ok(next)
}

/// `f^{-1}` of the posterior mean of `f`.
pub fn estimate(grid: &PosteriorGrid, fmap: &FMap) -> Result<f64> {
    let mean = grid.mean_f();
    fmap.inverse(mean).map_err(|_| Error::EstimatorRange { label: mean, range: fmap.range().to_string() })
}

/// The candidate whose optimal strategy against the current posterior has the
/// largest gain (first one on ties), with that strategy.
pub fn adaptive_next_control<F: StateFamily>(
    grid: &PosteriorGrid,
    family: &F,
    fmap: &FMap,
    candidates: &[F::Controls],
    rule: &QuadratureRule,
    tol: &Tolerances,
) -> Result<(F::Controls, PersonickSolution)> {
    let prior = grid.as_prior(tol)?;
    let mut best: Option<(F::Controls, PersonickSolution)> = None;
    let mut last_error = None;
    for candidate in candidates {
        let solution = build_moments(family, candidate, &prior, fmap, rule, tol)
            .and_then(|m| solve_optimal(&m, fmap, tol));
        match solution {
            Ok(s) => {
                if best.as_ref().is_none_or(|(_, b)| s.gain > b.gain) {
                    best = Some((candidate.clone(), s));
                }
            }
            Err(e) => last_error = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::NoViableCandidate(match last_error {
            Some(e) => e.to_string(),
            None => "no candidates given".into(),
        })
    })
}

/// How each shot's measurement is chosen.
#[derive(Debug, Clone)]
pub enum PomPolicy<C> {
    /// The same control and POM every shot.
    Fixed { control: C, pom: Pom },
    /// The same control every shot, measuring the optimal POM for the prior.
    OptimalForPrior { control: C },
    /// Re-optimise control and POM against the posterior before every shot.
    Adaptive { candidates: Vec<C> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotSummary {
    pub shot: usize,
    pub outcome: usize,
    pub label: f64,
    pub posterior_var_f: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub estimate: f64,
    pub trace: Vec<ShotSummary>,
    pub grid: PosteriorGrid,
}

#[derive(Debug, Clone, Copy)]
pub struct ProtocolSettings<'a> {
    pub shots: usize,
    pub theta_true: f64,
    pub seed: u64,
    pub rule: &'a QuadratureRule,
    pub tol: &'a Tolerances,
}

/// Simulates `shots` measurements on `rho(theta_true)` and updates the posterior after each.
pub fn run_protocol<F: StateFamily>(
    family: &F,
    prior: &PriorDensity,
    fmap: &FMap,
    policy: &PomPolicy<F::Controls>,
    settings: ProtocolSettings<'_>,
) -> Result<ProtocolRun> {
    let ProtocolSettings { shots, theta_true, seed, rule, tol } = settings;
    if shots == 0 {
        return Err(Error::InvalidParameter { name: "shots", reason: "at least one shot is required".into() });
    }
    if !family.domain().contains(theta_true) {
        return Err(Error::Domain { value: theta_true, domain: family.domain().to_string() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = PosteriorGrid::from_prior(prior, fmap, rule)?;

    let fixed = match policy {
        PomPolicy::Fixed { control, pom } => Some((control.clone(), pom.clone())),
        PomPolicy::OptimalForPrior { control } => {
            let moments = build_moments(family, control, prior, fmap, rule, tol)?;
            Some((control.clone(), Pom::from(&solve_optimal(&moments, fmap, tol)?)))
        }
        PomPolicy::Adaptive { .. } => None,
    };

    let mut trace = Vec::with_capacity(shots);
    for shot in 1..=shots {
        let (control, pom) = match (&fixed, policy) {
            (Some(setting), _) => setting.clone(),
            (None, PomPolicy::Adaptive { candidates }) => {
                let (control, solution) = adaptive_next_control(&grid, family, fmap, candidates, rule, tol)?;
                (control, Pom::from(&solution))
            }
            (None, _) => unreachable!("non-adaptive policies are resolved up front"),
        };
        let outcome = sample_outcome(family, theta_true, &control, &pom, &mut rng, tol)?;
        let record = ShotRecord {
            shot,
            label: pom.labels[outcome],
            likelihoods: likelihoods(family, &control, &pom, outcome, grid.thetas())?,
            control,
            outcome,
        };
        grid.update(&record.likelihoods)?;
        trace.push(ShotSummary {
            shot,
            outcome,
            label: record.label,
            posterior_var_f: grid.posterior_var_f(),
            estimate: estimate(&grid, fmap)?,
        });
    }
    Ok(ProtocolRun { estimate: estimate(&grid, fmap)?, trace, grid })
}
