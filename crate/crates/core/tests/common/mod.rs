#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use symmetrix::blend::BlendFamily;
use symmetrix::operator::{eigendecompose, CMatrix, HermitianOperator};
use symmetrix::personick::{build_moments, solve_optimal, MomentOperators, PersonickSolution, Pom};
use symmetrix::{BlochDirection, FMap, PriorDensity, QuadratureRule, Tolerances};

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> HermitianOperator {
    let m = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    HermitianOperator::hermitian_part(&m)
}

/// Columns form a random orthonormal basis.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    eigendecompose(&random_hermitian(rng, dim)).vectors
}

/// Rank-one projectors onto a random orthonormal basis.
pub fn random_projective_pom<R: Rng>(rng: &mut R, dim: usize) -> Pom {
    let u = random_unitary(rng, dim);
    let elements = (0..dim).map(|k| HermitianOperator::projector(&u.column(k).into_owned())).collect();
    Pom::new(elements, &Tolerances::DEFAULT).expect("orthonormal projectors are complete")
}

/// `G^{-1/2} A_k G^{-1/2}` for random positive `A_k` and `G = sum A_k`.
pub fn random_pom<R: Rng>(rng: &mut R, dim: usize, outcomes: usize) -> Pom {
    let raw: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let b = CMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            &b * b.adjoint()
        })
        .collect();
    let total = raw.iter().fold(CMatrix::zeros(dim, dim), |acc, m| acc + m);
    let es = eigendecompose(&HermitianOperator::hermitian_part(&total));
    let inv_sqrt = CMatrix::from_diagonal(
        &nalgebra::DVector::from_iterator(dim, es.values.iter().map(|v| Complex64::new(v.powf(-0.5), 0.0))),
    );
    let g = &es.vectors * inv_sqrt * es.vectors.adjoint();
    let elements = raw.iter().map(|m| HermitianOperator::hermitian_part(&(&g * m * &g))).collect();
    Pom::new(elements, &Tolerances::DEFAULT).expect("normalised elements are complete")
}

pub struct BlendSetup {
    pub direction: BlochDirection,
    pub moments: MomentOperators,
    pub solution: PersonickSolution,
}

pub fn blend_setup(a: f64, alpha: f64, beta: f64) -> BlendSetup {
    let tol = Tolerances::DEFAULT;
    let direction = BlochDirection::new(alpha, beta).unwrap();
    let prior = PriorDensity::haldane(a).unwrap();
    let fmap = FMap::weight();
    let moments = build_moments(&BlendFamily, &direction, &prior, &fmap, &QuadratureRule::default(), &tol).unwrap();
    let solution = solve_optimal(&moments, &fmap, &tol).unwrap();
    BlendSetup { direction, moments, solution }
}
