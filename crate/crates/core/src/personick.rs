//! Optimal quadratic-error strategies for location-isomorphic parameters.
//!
//! Given a state family `rho(theta)`, a prior `p(theta)` and an f-map `f`,
//! the moment operators
//!
//! ```text
//! zeta = int p f^2,   rho0 = int p rho,   rho1 = int p rho f
//! ```
//!
//! determine everything. The operator `S` solving `S rho0 + rho0 S = 2 rho1`
//! yields the optimal measurement (its spectral projectors), the optimal
//! estimates (`f^{-1}` of its eigenvalues) and the minimum error
//! `Var_p(f) - [tr(rho0 S^2) - tr(rho0 S)^2]`.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::fmap::{FMap, Interval};
use crate::operator::{
    eigendecompose, project_eigenspaces, solve_sylvester, CMatrix, DensityOperator, EigenSystem,
    HermitianOperator, ProjectorSet,
};
use crate::prior::PriorDensity;
use crate::quadrature::QuadratureRule;
use crate::tolerances::Tolerances;

/// Parametrised family of states `rho_y(theta)`.
///
/// `Controls` are the experimental settings `y` the family depends on; use
/// `()` for families without controls.
pub trait StateFamily: Send + Sync {
    type Controls: Clone + Debug + Send + Sync;

    fn dim(&self) -> usize;

    /// Hypotheses for which [`StateFamily::state`] is defined.
    fn domain(&self) -> Interval;

    fn state(&self, theta: f64, controls: &Self::Controls) -> Result<HermitianOperator>;

    /// Analytic `d rho / d theta`, when available.
    fn derivative(&self, _theta: f64, _controls: &Self::Controls) -> Result<Option<HermitianOperator>> {
        Ok(None)
    }
}

/// Spot-checks that the family yields valid density operators at 16 points of
/// the prior's discretisation.
pub fn validate_family<F: StateFamily>(
    family: &F,
    controls: &F::Controls,
    prior: &PriorDensity,
    rule: &QuadratureRule,
    tol: &Tolerances,
) -> Result<()> {
    let disc = prior.discretize(rule)?;
    let n = disc.len();
    let picks = 16.min(n);
    for k in 0..picks {
        let theta = disc.thetas[(k * (n - 1)) / (picks - 1).max(1)];
        let rho = family.state(theta, controls)?;
        if rho.dim() != family.dim() {
            return Err(Error::DimensionMismatch { expected: family.dim(), found: rho.dim() });
        }
        DensityOperator::new(rho, tol)?;
    }
    Ok(())
}

/// Prior moments of `f` weighted by the state.
#[derive(Debug, Clone)]
pub struct MomentOperators {
    /// `int p f^2`
    pub zeta: f64,
    /// `int p rho`
    pub rho0: HermitianOperator,
    /// `int p rho f`
    pub rho1: HermitianOperator,
    /// `int p f`, equal to `tr(rho1)`
    pub prior_mean_f: f64,
}

impl MomentOperators {
    /// Prior variance of `f`: the error of guessing without measuring.
    pub fn prior_error(&self) -> f64 {
        self.zeta - self.prior_mean_f * self.prior_mean_f
    }

    pub fn dim(&self) -> usize {
        self.rho0.dim()
    }
}

pub fn build_moments<F: StateFamily>(
    family: &F,
    controls: &F::Controls,
    prior: &PriorDensity,
    fmap: &FMap,
    rule: &QuadratureRule,
    tol: &Tolerances,
) -> Result<MomentOperators> {
    validate_family(family, controls, prior, rule, tol)?;
    let dim = family.dim();
    let mut rho0 = CMatrix::zeros(dim, dim);
    let mut rho1 = CMatrix::zeros(dim, dim);
    let mut zeta = 0.0;
    let mut mean = 0.0;
    for (theta, w) in prior.discretize(rule)?.iter() {
        if w == 0.0 {
            continue;
        }
        let rho = family.state(theta, controls)?;
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
        }
        let f = fmap.forward(theta)?;
        if !f.is_finite() || !rho.is_finite() {
            return Err(Error::Integration { theta });
        }
        rho0 += rho.matrix().scale(w);
        rho1 += rho.matrix().scale(w * f);
        zeta += w * f * f;
        mean += w * f;
    }
    let rho0 = DensityOperator::new(HermitianOperator::hermitian_part(&rho0), tol)?.into_operator();
    Ok(MomentOperators { zeta, rho0, rho1: HermitianOperator::hermitian_part(&rho1), prior_mean_f: mean })
}

/// Optimal strategy and its error budget.
#[derive(Debug, Clone)]
pub struct PersonickSolution {
    /// Solution of `S rho0 + rho0 S = 2 rho1`.
    pub s: HermitianOperator,
    pub eigen: EigenSystem,
    /// Spectral projectors of `S`, one per distinct eigenvalue, labelled by it.
    pub pom: ProjectorSet,
    /// `f^{-1}(label)` per projector.
    pub estimates: Vec<f64>,
    pub prior_error: f64,
    pub gain: f64,
    pub min_error: f64,
    /// Entries dropped on the kernel of a singular `rho0` (0 for full rank).
    pub kernel_entries: usize,
}

impl PersonickSolution {
    /// Relative precision gain `gain / prior_error`.
    pub fn gain_ratio(&self) -> f64 {
        self.gain / self.prior_error
    }
}

pub fn solve_optimal(moments: &MomentOperators, fmap: &FMap, tol: &Tolerances) -> Result<PersonickSolution> {
    let sylvester = solve_sylvester(&moments.rho0, &moments.rho1, tol)?;
    let s = sylvester.solution;
    let eigen = eigendecompose(&s);
    let pom = project_eigenspaces(&eigen, tol.merge);
    let estimates = pom
        .labels
        .iter()
        .map(|&label| {
            fmap.inverse(label).map_err(|_| Error::EstimatorRange { label, range: fmap.range().to_string() })
        })
        .collect::<Result<Vec<_>>>()?;

    let s_squared = HermitianOperator::hermitian_part(&(s.matrix() * s.matrix()));
    let first = moments.rho0.trace_product(&s);
    let gain = moments.rho0.trace_product(&s_squared) - first * first;
    let prior_error = moments.prior_error();
    Ok(PersonickSolution {
        s,
        eigen,
        pom,
        estimates,
        prior_error,
        gain,
        min_error: prior_error - gain,
        kernel_entries: sylvester.kernel_entries,
    })
}

/// Positive operators summing to the identity.
#[derive(Debug, Clone)]
pub struct Pom {
    pub elements: Vec<HermitianOperator>,
    /// Outcome identifiers (eigenvalue labels for spectral POMs, indices otherwise).
    pub labels: Vec<f64>,
}

impl Pom {
    pub fn new(elements: Vec<HermitianOperator>, tol: &Tolerances) -> Result<Self> {
        let labels = (0..elements.len()).map(|k| k as f64).collect();
        Self::with_labels(elements, labels, tol)
    }

    pub fn with_labels(elements: Vec<HermitianOperator>, labels: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidPom("no elements".into()))?;
        if labels.len() != elements.len() {
            return Err(Error::DimensionMismatch { expected: elements.len(), found: labels.len() });
        }
        let dim = first.dim();
        let mut total = HermitianOperator::zeros(dim);
        for (k, m) in elements.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
            }
            let min = eigendecompose(m).values[0];
            if min < -tol.positivity {
                return Err(Error::InvalidPom(format!("element {k} has negative eigenvalue {min:e}")));
            }
            total = &total + m;
        }
        let defect = (&total - &HermitianOperator::identity(dim)).spectral_norm();
        if defect > tol.projector {
            return Err(Error::InvalidPom(format!("elements sum to identity only within {defect:e}")));
        }
        Ok(Self { elements, labels })
    }

    /// The single-outcome POM `{I}`: no measurement.
    pub fn trivial(dim: usize) -> Self {
        Self { elements: vec![HermitianOperator::identity(dim)], labels: vec![0.0] }
    }

    pub fn computational_basis(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|k| {
                let mut d = vec![0.0; dim];
                d[k] = 1.0;
                HermitianOperator::from_real_diagonal(&d)
            })
            .collect();
        Self { elements, labels: (0..dim).map(|k| k as f64).collect() }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Born probabilities `tr(M_x rho)`.
    pub fn probabilities(&self, rho: &HermitianOperator) -> Vec<f64> {
        self.elements.iter().map(|m| m.trace_product(rho)).collect()
    }
}

impl From<ProjectorSet> for Pom {
    fn from(p: ProjectorSet) -> Self {
        Self { elements: p.projectors, labels: p.labels }
    }
}

impl From<&PersonickSolution> for Pom {
    fn from(s: &PersonickSolution) -> Self {
        Pom::from(s.pom.clone())
    }
}

/// `A_l = sum_x M_x f_x^l` for `l = 1, 2`.
pub fn pom_moments(pom: &Pom, f_values: &[f64]) -> Result<(HermitianOperator, HermitianOperator)> {
    if f_values.len() != pom.len() {
        return Err(Error::DimensionMismatch { expected: pom.len(), found: f_values.len() });
    }
    let dim = pom.dim();
    let mut a1 = HermitianOperator::zeros(dim);
    let mut a2 = HermitianOperator::zeros(dim);
    for (m, &f) in pom.elements.iter().zip(f_values) {
        a1 = &a1 + &m.scale(f);
        a2 = &a2 + &m.scale(f * f);
    }
    Ok((a1, a2))
}

/// Mean quadratic error of measuring `pom`.
///
/// With `estimator = None` each outcome is assigned its posterior mean of
/// `f`, `g_x = tr(M_x rho1) / tr(M_x rho0)`, which is optimal for this POM,
/// and the error is `zeta - sum_x w_x g_x^2`. With explicit f-values `e_x`
/// the error is `zeta + sum_x w_x e_x^2 - 2 e_x tr(M_x rho1)`.
pub fn evaluate_pom_error(
    moments: &MomentOperators,
    pom: &Pom,
    estimator: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<f64> {
    if pom.dim() != moments.dim() {
        return Err(Error::DimensionMismatch { expected: moments.dim(), found: pom.dim() });
    }
    if let Some(values) = estimator {
        if values.len() != pom.len() {
            return Err(Error::DimensionMismatch { expected: pom.len(), found: values.len() });
        }
    }
    let mut error = moments.zeta;
    for (x, m) in pom.elements.iter().enumerate() {
        let w = m.trace_product(&moments.rho0);
        let first = m.trace_product(&moments.rho1);
        if w <= tol.zero_probability {
            if first.abs() > tol.zero_moment {
                return Err(Error::ZeroProbabilityOutcome { outcome: x, probability: w, moment: first });
            }
            continue;
        }
        match estimator {
            None => error -= first * first / w,
            Some(values) => {
                let e = values[x];
                error += w * e * e - 2.0 * e * first;
            }
        }
    }
    Ok(error)
}

/// Default central-difference step: `cbrt(eps) * max(|theta|, 1)`.
pub fn default_sld_step(theta: f64) -> f64 {
    f64::EPSILON.cbrt() * theta.abs().max(1.0)
}

/// Symmetric logarithmic derivative `L` with `L rho + rho L = 2 d rho / d theta` at `theta0`.
///
/// Uses the family's analytic derivative when it has one, otherwise a central
/// difference with `step` (see [`default_sld_step`]).
pub fn sld<F: StateFamily>(
    family: &F,
    theta0: f64,
    controls: &F::Controls,
    step: Option<f64>,
    tol: &Tolerances,
) -> Result<HermitianOperator> {
    let domain = family.domain();
    if !domain.contains_strictly(theta0) {
        return Err(Error::Domain { value: theta0, domain: domain.to_string() });
    }
    let rho = family.state(theta0, controls)?;
    let derivative = match family.derivative(theta0, controls)? {
        Some(d) => d,
        None => finite_difference(family, theta0, controls, step.unwrap_or_else(|| default_sld_step(theta0)))?,
    };
    Ok(solve_sylvester(&rho, &derivative, tol)?.solution)
}

pub fn finite_difference<F: StateFamily>(
    family: &F,
    theta0: f64,
    controls: &F::Controls,
    step: f64,
) -> Result<HermitianOperator> {
    let domain = family.domain();
    let (lo, hi) = (theta0 - step, theta0 + step);
    if !domain.contains(lo) || !domain.contains(hi) {
        return Err(Error::Domain { value: if domain.contains(lo) { hi } else { lo }, domain: domain.to_string() });
    }
    let up = family.state(hi, controls)?;
    let down = family.state(lo, controls)?;
    Ok((&up - &down).scale(1.0 / (hi - lo)))
}

/// Quantum Fisher information `tr(rho L^2)` at `theta0`.
pub fn quantum_fisher_information<F: StateFamily>(
    family: &F,
    theta0: f64,
    controls: &F::Controls,
    tol: &Tolerances,
) -> Result<f64> {
    let l = sld(family, theta0, controls, None, tol)?;
    let l_squared = HermitianOperator::hermitian_part(&(l.matrix() * l.matrix()));
    Ok(family.state(theta0, controls)?.trace_product(&l_squared))
}

/// Projective POM onto the eigenspaces of the SLD at `theta0`.
pub fn sld_pom<F: StateFamily>(family: &F, theta0: f64, controls: &F::Controls, tol: &Tolerances) -> Result<Pom> {
    let l = sld(family, theta0, controls, None, tol)?;
    Ok(Pom::from(project_eigenspaces(&eigendecompose(&l), tol.merge)))
}
