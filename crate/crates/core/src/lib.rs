//! Bayesian metrology for parameters that are location-isomorphic.
//!
//! A parameter is location-isomorphic when some monotone map `f` turns its
//! symmetry into a translation (identity for locations, `ln` for scales,
//! `2 artanh(2 theta - 1)` for weights). For such parameters the mean
//! quadratic error in `f` is minimised by measuring the eigenbasis of the
//! operator `S` solving `S rho0 + rho0 S = 2 rho1`; see [`personick`].

pub mod bayes;
pub mod blend;
pub mod error;
pub mod fmap;
pub mod operator;
pub mod personick;
pub mod prior;
pub mod quadrature;
pub mod special;
pub mod tolerances;

pub use bayes::{estimate, run_protocol, PomPolicy, PosteriorGrid, ProtocolRun, ProtocolSettings};
pub use blend::{closed_forms, figure1_sweep, BlendClosedForms, BlendFamily, BlochDirection, Figure1Config};
pub use error::{Error, Result};
pub use fmap::{make_fmap, FMap, FMapSpec, Interval};
pub use operator::{eigendecompose, solve_sylvester, DensityOperator, HermitianOperator};
pub use personick::{build_moments, evaluate_pom_error, sld, solve_optimal, PersonickSolution, Pom, StateFamily};
pub use prior::PriorDensity;
pub use quadrature::QuadratureRule;
pub use tolerances::Tolerances;
