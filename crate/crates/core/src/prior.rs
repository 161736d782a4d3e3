//! Prior densities and integration against them.
//!
//! Every prior reduces to a [`Discretization`]: hypotheses `theta_i` with
//! probability weights `w_i` summing to one, so that `int p(theta) g(theta)`
//! becomes `sum w_i g(theta_i)`. Priors that diverge at their endpoints (the
//! Haldane prior) are discretised in f-coordinates, where they are flat.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fmap::{FMap, Interval, RealFn};
use crate::operator::HermitianOperator;
use crate::quadrature::QuadratureRule;
use crate::tolerances::Tolerances;

#[derive(Clone)]
enum Repr {
    /// `1 / [kappa theta (1 - theta)]` on `(a, 1 - a)`.
    Haldane { a: f64, kappa: f64 },
    /// Density integrated directly, or in the coordinates of `coordinates` if given.
    Density { density: RealFn, coordinates: Option<FMap> },
    /// Point masses, e.g. a gridded posterior reused as a prior.
    Discrete { nodes: Arc<Vec<f64>>, weights: Arc<Vec<f64>> },
}

/// Normalised prior probability on a finite support.
#[derive(Clone)]
pub struct PriorDensity {
    support: Interval,
    repr: Repr,
}

impl fmt::Debug for PriorDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Haldane { a, .. } => format!("Haldane(a = {a})"),
            Repr::Density { coordinates, .. } => {
                format!("Density(coordinates = {:?})", coordinates.as_ref().map(|c| c.kind()))
            }
            Repr::Discrete { nodes, .. } => format!("Discrete({} nodes)", nodes.len()),
        };
        f.debug_struct("PriorDensity").field("support", &self.support).field("kind", &kind).finish()
    }
}

/// Weighted hypotheses approximating a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Discretization {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.thetas.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `kappa = 4 artanh(1 - 2a) = 2 ln((1 - a) / a)`.
pub fn haldane_kappa(a: f64) -> f64 {
    2.0 * ((1.0 - a) / a).ln()
}

/// The unnormalised ignorance prior for weights, `1 / [theta (1 - theta)]`.
pub fn haldane_unnormalized(theta: f64) -> f64 {
    if theta > 0.0 && theta < 1.0 {
        1.0 / (theta * (1.0 - theta))
    } else {
        0.0
    }
}

/// Normalised Haldane prior on `(a, 1 - a)`.
pub fn haldane_prior(a: f64) -> Result<PriorDensity> {
    PriorDensity::haldane(a)
}

impl PriorDensity {
    pub fn haldane(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 0.5) {
            return Err(Error::InvalidParameter { name: "a", reason: format!("{a} must lie in (0, 1/2)") });
        }
        Ok(Self { support: Interval { lo: a, hi: 1.0 - a }, repr: Repr::Haldane { a, kappa: haldane_kappa(a) } })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let support = Interval::new(lo, hi)?;
        if !support.is_finite() {
            return Err(Error::InvalidParameter { name: "support", reason: "must be finite".into() });
        }
        let height = 1.0 / support.width();
        Ok(Self { support, repr: Repr::Density { density: Arc::new(move |_| height), coordinates: None } })
    }

    /// General density on a finite support. When `coordinates` is given the
    /// density is integrated in `u = f(theta)`, with Jacobian `1 / f'(theta)`.
    /// Normalisation is checked with `rule` to `tol.normalization`.
    pub fn from_density(
        support: Interval,
        density: RealFn,
        coordinates: Option<FMap>,
        rule: &QuadratureRule,
        tol: &Tolerances,
    ) -> Result<Self> {
        if !support.is_finite() {
            return Err(Error::InvalidParameter { name: "support", reason: "must be finite".into() });
        }
        let prior = Self { support, repr: Repr::Density { density, coordinates } };
        let total = prior.discretize(rule)?.weights.iter().sum::<f64>();
        if (total - 1.0).abs() > tol.normalization {
            return Err(Error::Normalization { total });
        }
        Ok(prior)
    }

    /// Point masses `weights` at `nodes`; the weights must sum to one.
    pub fn discrete(nodes: Vec<f64>, weights: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter { name: "weights", reason: "must be finite and nonnegative".into() });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol.normalization {
            return Err(Error::Normalization { total });
        }
        let lo = nodes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { support: Interval { lo, hi }, repr: Repr::Discrete { nodes: Arc::new(nodes), weights: Arc::new(weights) } })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    /// `kappa` for Haldane priors.
    pub fn kappa(&self) -> Option<f64> {
        match self.repr {
            Repr::Haldane { kappa, .. } => Some(kappa),
            _ => None,
        }
    }

    /// Density value; zero outside the support. Discrete priors have no density.
    pub fn density(&self, theta: f64) -> Option<f64> {
        if !self.support.contains(theta) {
            return Some(0.0);
        }
        match &self.repr {
            Repr::Haldane { kappa, .. } => Some(1.0 / (kappa * theta * (1.0 - theta))),
            Repr::Density { density, .. } => Some(density(theta)),
            Repr::Discrete { .. } => None,
        }
    }

    pub fn discretize(&self, rule: &QuadratureRule) -> Result<Discretization> {
        match &self.repr {
            Repr::Haldane { kappa, .. } => {
                // p(theta) d theta = du / kappa with u = ln(theta / (1 - theta)) on [-kappa/2, kappa/2]
                let half = 0.5 * kappa;
                let (thetas, weights) = rule
                    .mapped(-half, half)
                    .map(|(u, w)| (0.5 + 0.5 * (0.5 * u).tanh(), w / kappa))
                    .unzip();
                Ok(Discretization { thetas, weights })
            }
            Repr::Density { density, coordinates: None } => {
                let mut thetas = Vec::with_capacity(rule.order());
                let mut weights = Vec::with_capacity(rule.order());
                for (theta, w) in rule.mapped(self.support.lo, self.support.hi) {
                    let p = density(theta);
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::Integration { theta });
                    }
                    thetas.push(theta);
                    weights.push(w * p);
                }
                Ok(Discretization { thetas, weights })
            }
            Repr::Density { density, coordinates: Some(map) } => {
                let lo = map.forward(self.support.lo)?;
                let hi = map.forward(self.support.hi)?;
                let mut thetas = Vec::with_capacity(rule.order());
                let mut weights = Vec::with_capacity(rule.order());
                for (u, w) in rule.mapped(lo, hi) {
                    let theta = map.inverse(u)?;
                    let p = density(theta) / map.derivative(theta)?;
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::Integration { theta });
                    }
                    thetas.push(theta);
                    weights.push(w * p);
                }
                Ok(Discretization { thetas, weights })
            }
            Repr::Discrete { nodes, weights } => {
                Ok(Discretization { thetas: nodes.as_ref().clone(), weights: weights.as_ref().clone() })
            }
        }
    }
}

/// `int p(theta) g(theta) d theta`.
pub fn integrate(prior: &PriorDensity, rule: &QuadratureRule, g: impl Fn(f64) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    for (theta, w) in prior.discretize(rule)?.iter() {
        let v = g(theta);
        if !v.is_finite() {
            return Err(Error::Integration { theta });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Operator-valued counterpart of [`integrate`], applied entrywise.
pub fn integrate_operator(
    prior: &PriorDensity,
    rule: &QuadratureRule,
    dim: usize,
    g: impl Fn(f64) -> Result<HermitianOperator>,
) -> Result<HermitianOperator> {
    let mut acc = HermitianOperator::zeros(dim);
    for (theta, w) in prior.discretize(rule)?.iter() {
        let v = g(theta)?;
        if v.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.dim() });
        }
        if !v.is_finite() {
            return Err(Error::Integration { theta });
        }
        acc = &acc + &v.scale(w);
    }
    Ok(acc)
}

/// Largest residual of `(1 - t + g t)^2 p(t) - g p(g t / (1 - t + g t))` over
/// `samples` evenly spaced points strictly inside `(0, 1)`. Vanishes for
/// densities invariant under odds rescaling by `gamma`.
pub fn check_prior_invariance(density: impl Fn(f64) -> f64, gamma: f64, samples: usize) -> f64 {
    (1..=samples)
        .map(|i| {
            let t = i as f64 / (samples as f64 + 1.0);
            let d = 1.0 - t + gamma * t;
            (d * d * density(t) - gamma * density(gamma * t / d)).abs()
        })
        .fold(0.0, f64::max)
}
