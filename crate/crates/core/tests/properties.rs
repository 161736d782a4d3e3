mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symmetrix::bayes::{estimate, likelihoods, run_protocol, PomPolicy, PosteriorGrid, ProtocolSettings};
use symmetrix::blend::{closed_forms, BlendFamily};
use symmetrix::operator::{
    eigendecompose, project_eigenspaces, solve_sylvester, sylvester_residual, CMatrix, HermitianOperator,
};
use symmetrix::personick::{build_moments, evaluate_pom_error, pom_moments, solve_optimal, Pom};
use symmetrix::special::artanh;
use symmetrix::{BlochDirection, FMap, PriorDensity, QuadratureRule, Tolerances};

use common::{blend_setup, random_hermitian, random_pom, random_projective_pom};

fn positive_definite(seed: u64, dim: usize) -> HermitianOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian(&mut rng, dim);
    let m: CMatrix = h.matrix() * h.matrix() + CMatrix::identity(dim, dim).scale(0.05);
    HermitianOperator::hermitian_part(&m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sylvester_residual_is_small(seed in any::<u64>(), dim in 2usize..=6) {
        let a = positive_definite(seed, dim);
        let b = random_hermitian(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed), dim);
        let x = solve_sylvester(&a, &b, &Tolerances::DEFAULT).unwrap();
        prop_assert!(!x.is_pseudo_solution());
        let residual = sylvester_residual(&x.solution, &a, &b);
        prop_assert!(residual <= 1e-9 * b.spectral_norm().max(1.0), "residual {residual:e}");
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=6) {
        let h = random_hermitian(&mut ChaCha8Rng::seed_from_u64(seed), dim);
        let es = eigendecompose(&h);
        prop_assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(es.orthonormality_defect() <= 1e-10);
        prop_assert!((&es.reconstruct() - &h).spectral_norm() <= 1e-9);
    }

    #[test]
    fn projectors_are_complete_for_any_merge_tolerance(seed in any::<u64>(), dim in 1usize..=6, merge in 0.0f64..3.0) {
        let h = random_hermitian(&mut ChaCha8Rng::seed_from_u64(seed), dim);
        let set = project_eigenspaces(&eigendecompose(&h), merge);
        prop_assert!(set.defect() <= 1e-9);
        prop_assert_eq!(set.ranks().iter().sum::<usize>(), dim);
    }

    #[test]
    fn jensen_gap_is_positive(seed in any::<u64>(), dim in 2usize..=4, outcomes in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pom = random_pom(&mut rng, dim, outcomes);
        let values: Vec<f64> = (0..outcomes).map(|k| (seed.rotate_left(k as u32) % 1000) as f64 / 100.0 - 5.0).collect();
        let (a1, a2) = pom_moments(&pom, &values).unwrap();
        let gap = &a2 - &HermitianOperator::hermitian_part(&(a1.matrix() * a1.matrix()));
        prop_assert!(eigendecompose(&gap).values[0] >= -1e-10);
    }

    #[test]
    fn random_measurements_never_beat_the_optimum(seed in any::<u64>(), a in 0.005f64..0.45, beta in 0.05f64..=PI, alpha in 0.0f64..6.28) {
        let setup = blend_setup(a, alpha, beta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerances::DEFAULT;
        let projective = random_projective_pom(&mut rng, 2);
        let general = random_pom(&mut rng, 2, 3);
        for pom in [projective, general] {
            let error = evaluate_pom_error(&setup.moments, &pom, None, &tol).unwrap();
            prop_assert!(error >= setup.solution.min_error - 1e-9);
            prop_assert!(error <= setup.solution.prior_error + 1e-9);
        }
    }

    #[test]
    fn optimum_matches_closed_forms(a in 0.005f64..0.45, beta in 0.05f64..=PI, alpha in 0.0f64..6.28) {
        let setup = blend_setup(a, alpha, beta);
        let cf = closed_forms(a, &setup.direction).unwrap();
        prop_assert!((setup.solution.gain - cf.gain).abs() <= 1e-9);
        prop_assert!((setup.solution.min_error - (setup.solution.prior_error - setup.solution.gain)).abs() <= 1e-10);
        // gain equals the spread of posterior means over the optimal outcomes
        let m = &setup.moments;
        let (mut first, mut second) = (0.0, 0.0);
        for p in &setup.solution.pom.projectors {
            let w = p.trace_product(&m.rho0);
            let g = p.trace_product(&m.rho1) / w;
            first += w * g;
            second += w * g * g;
        }
        prop_assert!((second - first * first - setup.solution.gain).abs() <= 1e-9);
    }

    #[test]
    fn offset_shifts_s_and_nothing_else(a in 0.01f64..0.4, beta in 0.1f64..=PI, offset in -5.0f64..5.0) {
        let tol = Tolerances::DEFAULT;
        let rule = QuadratureRule::default();
        let dir = BlochDirection::new(0.3, beta).unwrap();
        let prior = PriorDensity::haldane(a).unwrap();
        let base = FMap::weight();
        let shifted = FMap::weight().with_offset(offset);
        let s0 = solve_optimal(&build_moments(&BlendFamily, &dir, &prior, &base, &rule, &tol).unwrap(), &base, &tol).unwrap();
        let m1 = build_moments(&BlendFamily, &dir, &prior, &shifted, &rule, &tol).unwrap();
        let s1 = solve_optimal(&m1, &shifted, &tol).unwrap();
        prop_assert!((s0.gain - s1.gain).abs() <= 1e-9);
        prop_assert!((s0.min_error - s1.min_error).abs() <= 1e-9);
        prop_assert!((&s1.s - &(&s0.s + &HermitianOperator::identity(2).scale(offset))).spectral_norm() <= 1e-9);
        for (e0, e1) in s0.estimates.iter().zip(&s1.estimates) {
            prop_assert!((e0 - e1).abs() <= 1e-9);
        }
        prop_assert!((m1.rho0.trace_product(&s1.s) - m1.rho1.trace()).abs() <= 1e-9);
    }

    #[test]
    fn weight_estimate_equals_tanh_form(seed in any::<u64>(), a in 0.001f64..0.3) {
        let prior = PriorDensity::haldane(a).unwrap();
        let fmap = FMap::weight();
        let mut grid = PosteriorGrid::from_prior(&prior, &fmap, &QuadratureRule::gauss_legendre(80).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l: Vec<f64> = grid.thetas().iter().map(|_| rand::Rng::random_range(&mut rng, 1e-3..1.0)).collect();
        grid.update(&l).unwrap();
        let mean: f64 = grid.thetas().iter().zip(grid.weights()).map(|(t, w)| w * artanh(2.0 * t - 1.0)).sum();
        prop_assert!((estimate(&grid, &fmap).unwrap() - 0.5 * (1.0 + mean.tanh())).abs() <= 1e-10);
    }

    #[test]
    fn likelihoods_sum_to_one(alpha in 0.0f64..6.28, beta in 0.05f64..=PI) {
        let setup = blend_setup(0.02, alpha, beta);
        let pom = Pom::from(&setup.solution);
        let grid = PosteriorGrid::from_prior(&PriorDensity::haldane(0.02).unwrap(), &FMap::weight(), &QuadratureRule::default()).unwrap();
        let per_outcome: Vec<Vec<f64>> = (0..pom.len())
            .map(|x| likelihoods(&BlendFamily, &setup.direction, &pom, x, grid.thetas()).unwrap())
            .collect();
        for i in 0..grid.len() {
            let total: f64 = per_outcome.iter().map(|l| l[i]).sum();
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn seeded_protocol_is_reproducible(seed in any::<u64>(), theta in 0.05f64..0.95) {
        let tol = Tolerances::DEFAULT;
        let rule = QuadratureRule::gauss_legendre(64).unwrap();
        let prior = PriorDensity::haldane(0.01).unwrap();
        let fmap = FMap::weight();
        let policy = PomPolicy::OptimalForPrior { control: BlochDirection::new(0.0, 2.0).unwrap() };
        let settings = ProtocolSettings { shots: 40, theta_true: theta, seed, rule: &rule, tol: &tol };
        let first = run_protocol(&BlendFamily, &prior, &fmap, &policy, settings).unwrap();
        let second = run_protocol(&BlendFamily, &prior, &fmap, &policy, settings).unwrap();
        prop_assert_eq!(first.trace, second.trace);
        prop_assert_eq!(first.estimate.to_bits(), second.estimate.to_bits());
    }
}
