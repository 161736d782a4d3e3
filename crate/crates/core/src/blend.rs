//! The qubit blend family `rho(eta) = eta |0><0| + (1 - eta) tau`.
//!
//! `tau = |psi><psi|` is the pure state with Bloch direction `(alpha, beta)`.
//! With the weight f-map and a Haldane prior on `(a, 1 - a)` the optimal
//! strategy is known in closed form: `S = 2 chi (|0><0| - tau)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmap::{FMap, Interval};
use crate::operator::{pauli, CVector, HermitianOperator};
use crate::personick::{build_moments, evaluate_pom_error, sld_pom, solve_optimal, StateFamily};
use crate::prior::{haldane_kappa, PriorDensity};
use crate::quadrature::QuadratureRule;
use crate::special::dilog;
use crate::tolerances::Tolerances;

/// Bloch-sphere direction with azimuth `alpha` in `[0, 2 pi)` and polar angle `beta` in `(0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochDirection {
    alpha: f64,
    beta: f64,
}

impl BlochDirection {
    /// `alpha` is wrapped into `[0, 2 pi)`. `beta = 0` is rejected: `tau` would
    /// coincide with `|0><0|` and the family would not depend on `eta`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter { name: "alpha", reason: format!("{alpha} is not finite") });
        }
        if !(beta > 0.0 && beta <= PI) {
            return Err(Error::InvalidParameter { name: "beta", reason: format!("{beta} is outside (0, pi]") });
        }
        let mut alpha = alpha.rem_euclid(TAU);
        if alpha >= TAU {
            alpha = 0.0;
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (sb, cb) = self.beta.sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        [sb * ca, sb * sa, cb]
    }

    /// `cos(beta/2) |0> + sin(beta/2) e^{i alpha} |1>`.
    pub fn bloch_state(&self) -> CVector {
        let (s, c) = (0.5 * self.beta).sin_cos();
        CVector::from_vec(vec![Complex64::new(c, 0.0), Complex64::from_polar(s, self.alpha)])
    }

    /// `tau = (I + y . sigma) / 2`.
    pub fn tau(&self) -> HermitianOperator {
        HermitianOperator::projector(&self.bloch_state())
    }

    /// Mirror image under complex conjugation: `alpha -> -alpha`.
    pub fn conjugate(&self) -> Self {
        Self::new(-self.alpha, self.beta).expect("conjugate of a valid direction is valid")
    }
}

/// Blend family over `eta` in `[0, 1]`; the Bloch direction is the control.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlendFamily;

pub fn blend_state(eta: f64, dir: &BlochDirection) -> HermitianOperator {
    &pauli::basis_projector(0).scale(eta) + &dir.tau().scale(1.0 - eta)
}

impl StateFamily for BlendFamily {
    type Controls = BlochDirection;

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Interval {
        Interval::UNIT
    }

    fn state(&self, eta: f64, dir: &BlochDirection) -> Result<HermitianOperator> {
        if !Interval::UNIT.contains(eta) {
            return Err(Error::Domain { value: eta, domain: Interval::UNIT.to_string() });
        }
        Ok(blend_state(eta, dir))
    }

    fn derivative(&self, _eta: f64, dir: &BlochDirection) -> Result<Option<HermitianOperator>> {
        Ok(Some(&pauli::basis_projector(0) - &dir.tau()))
    }
}

/// Exact optimal-strategy quantities for the blend family under the Haldane
/// prior on `(a, 1 - a)` and the weight f-map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendClosedForms {
    pub a: f64,
    pub kappa: f64,
    pub chi: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub prior_error: f64,
    pub gain: f64,
    pub min_error: f64,
    pub gain_ratio: f64,
}

/// `chi = -ln(a (1 - a)) / 4 + (Li2(a) - Li2(1 - a)) / kappa`.
pub fn blend_chi(a: f64) -> Result<f64> {
    check_a(a)?;
    let kappa = haldane_kappa(a);
    // Li2(1 - a) by reflection, so nothing cancels when a is small
    let li_diff = 2.0 * dilog(a)? - PI * PI / 6.0 + a.ln() * (-a).ln_1p();
    Ok(-(a.ln() + (-a).ln_1p()) / 4.0 + li_diff / kappa)
}

pub fn closed_forms(a: f64, dir: &BlochDirection) -> Result<BlendClosedForms> {
    check_a(a)?;
    let kappa = haldane_kappa(a);
    let chi = blend_chi(a)?;
    let half_sin = (0.5 * dir.beta).sin();
    let s_plus = 2.0 * chi * half_sin;
    let prior_error = kappa * kappa / 12.0;
    let gain = s_plus * s_plus;
    Ok(BlendClosedForms {
        a,
        kappa,
        chi,
        s_plus,
        s_minus: -s_plus,
        prior_error,
        gain,
        min_error: prior_error - gain,
        gain_ratio: 48.0 * chi * chi * half_sin * half_sin / (kappa * kappa),
    })
}

/// `S = 2 chi (|0><0| - tau)`.
pub fn closed_form_s(a: f64, dir: &BlochDirection) -> Result<HermitianOperator> {
    let chi = blend_chi(a)?;
    Ok((&pauli::basis_projector(0) - &dir.tau()).scale(2.0 * chi))
}

/// Ignorance limit `a -> 0` of the gain ratio: `3 sin^2(beta/2) / 4`.
pub fn limiting_gain_ratio(dir: &BlochDirection) -> f64 {
    0.75 * (0.5 * dir.beta).sin().powi(2)
}

/// Leading behaviour of the gain ratio as `a -> 1/2`: `sin^2(beta/2) (2a - 1)^2 / 3`.
pub fn local_gain_ratio(a: f64, dir: &BlochDirection) -> f64 {
    (0.5 * dir.beta).sin().powi(2) * (2.0 * a - 1.0).powi(2) / 3.0
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "a", reason: format!("{a} is outside (0, 1/2)") })
    }
}

/// Eigenvectors `(|s+>, |s->)` of `|0><0| - tau`.
///
/// Written as `|s+> = ((1 + s)|0> - c e^{i alpha}|1>) / sqrt(2 (1 + s))` and
/// `|s-> = (c|0> + (1 + s) e^{i alpha}|1>) / sqrt(2 (1 + s))` with
/// `c = cos(beta/2)`, `s = sin(beta/2)`, which stays regular at `beta = pi`.
pub fn optimal_eigenstates(dir: &BlochDirection) -> (CVector, CVector) {
    let (s, c) = (0.5 * dir.beta).sin_cos();
    let norm = (2.0 * (1.0 + s)).sqrt();
    let phase = Complex64::from_polar(1.0, dir.alpha);
    let plus = CVector::from_vec(vec![Complex64::new((1.0 + s) / norm, 0.0), phase * (-c / norm)]);
    let minus = CVector::from_vec(vec![Complex64::new(c / norm, 0.0), phase * ((1.0 + s) / norm)]);
    (plus, minus)
}

/// How the measured state's azimuth relates to the azimuth used for the SLD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AzimuthConvention {
    /// SLD from direction `alpha`, state at `-alpha`.
    #[default]
    Conjugate,
    /// SLD and state share direction `alpha`; the error is then `alpha`-independent.
    Covariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Config {
    pub a: f64,
    pub beta: f64,
    pub alphas: Vec<f64>,
    pub eta0s: Vec<f64>,
    pub convention: AzimuthConvention,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Self {
            a: 0.01,
            beta: FRAC_PI_2,
            alphas: vec![0.0, FRAC_PI_4, FRAC_PI_2],
            eta0s: (0..99).map(|k| 0.01 + 0.01 * k as f64).collect(),
            convention: AzimuthConvention::Conjugate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure1Row {
    pub alpha: f64,
    pub eta0: f64,
    /// Mean hyperbolic error of the SLD measurement; `None` if the SLD failed.
    pub mhe: Option<f64>,
    pub prior_error: f64,
    pub min_error: f64,
}

/// Mean hyperbolic error of local (SLD) measurements across `eta0`.
///
/// Each cell measures the eigenbasis of the SLD at `eta0` and assigns every
/// outcome its posterior mean of `f`. Rows come out ordered by `alpha`, then
/// `eta0`, regardless of how cells are scheduled.
pub fn figure1_sweep(config: &Figure1Config, rule: &QuadratureRule, tol: &Tolerances) -> Result<Vec<Figure1Row>> {
    check_a(config.a)?;
    for &eta0 in &config.eta0s {
        if !(eta0 >= config.a && eta0 <= 1.0 - config.a) {
            return Err(Error::InvalidParameter {
                name: "eta0",
                reason: format!("{eta0} is outside [{}, {}]", config.a, 1.0 - config.a),
            });
        }
    }
    let prior = PriorDensity::haldane(config.a)?;
    let fmap = FMap::weight();
    let family = BlendFamily;

    let mut rows = Vec::with_capacity(config.alphas.len() * config.eta0s.len());
    for &alpha in &config.alphas {
        let sld_dir = BlochDirection::new(alpha, config.beta)?;
        let state_dir = match config.convention {
            AzimuthConvention::Conjugate => sld_dir.conjugate(),
            AzimuthConvention::Covariant => sld_dir,
        };
        let moments = build_moments(&family, &state_dir, &prior, &fmap, rule, tol)?;
        let optimum = solve_optimal(&moments, &fmap, tol)?;
        let cells: Vec<Figure1Row> = config
            .eta0s
            .par_iter()
            .map(|&eta0| {
                let mhe = sld_pom(&family, eta0, &sld_dir, tol)
                    .and_then(|pom| evaluate_pom_error(&moments, &pom, None, tol))
                    .ok();
                Figure1Row { alpha, eta0, mhe, prior_error: optimum.prior_error, min_error: optimum.min_error }
            })
            .collect();
        rows.extend(cells);
    }
    Ok(rows)
}
