mod common;

use common::{c, random_integer_pencil, random_positive, random_upper_point};
use ncrank_core::cauchy_solver::{
    apply_h, iterates, residual_matrix, solve_fixed_point, solve_from, EvaluationPoint, SolverConfig,
    TerminationMode,
};
use ncrank_core::pencil::ComplexMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64, n: usize, vars: usize) -> (ncrank_core::pencil::LinearPencil, EvaluationPoint, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_integer_pencil(n, vars, &mut rng);
    let ep = EvaluationPoint::new(random_upper_point(n, 0.5, &mut rng)).unwrap();
    (p, ep, rng)
}

fn lower_point(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut w = random_upper_point(n, 0.1, rng).adjoint();
    w.add_assign_scaled(&ComplexMatrix::identity(n), c(0.0, -0.1));
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_identity(seed in any::<u64>(), n in 1usize..=4, vars in 1usize..=3) {
        // Δ_b(w) = w⁻¹(w − h_b(w))h_b(w)⁻¹.
        let (p, ep, mut rng) = setup(seed, n, vars);
        let eta = p.covariance();
        let w = apply_h(&ep, &eta, &lower_point(n, &mut rng)).unwrap();
        let hw = apply_h(&ep, &eta, &w).unwrap();
        let rhs = w.inverse().unwrap().matmul(&(&w - &hw)).matmul(&hw.inverse().unwrap());
        let lhs = residual_matrix(&ep, &eta, &w).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-8 * lhs.max_abs().max(1.0));
    }

    #[test]
    fn lipschitz_bound(seed in any::<u64>(), n in 1usize..=4, vars in 1usize..=3) {
        let (p, ep, mut rng) = setup(seed, n, vars);
        let eta = p.covariance();
        let cfg = SolverConfig::with_default_radius(&ep, &eta, 1e-6, TerminationMode::APosterioriResidual).unwrap();
        let r = cfg.radius_r;
        let w1 = apply_h(&ep, &eta, &lower_point(n, &mut rng)).unwrap();
        let w2 = apply_h(&ep, &eta, &lower_point(n, &mut rng)).unwrap();
        let lhs = (&apply_h(&ep, &eta, &w2).unwrap() - &apply_h(&ep, &eta, &w1).unwrap()).op_norm();
        prop_assert!(lhs <= r * r * eta.norm() * (&w2 - &w1).op_norm() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn iterates_stay_in_the_norm_ball(seed in any::<u64>(), n in 1usize..=4, vars in 1usize..=3) {
        let (p, ep, _) = setup(seed, n, vars);
        let eta = p.covariance();
        let start = ComplexMatrix::scalar(n, c(0.0, -1.0));
        for w in iterates(&ep, &eta, start).take(200) {
            let w = w.unwrap();
            prop_assert!(w.op_norm() <= ep.im_inv_norm() + 1e-10);
            prop_assert!(w.imag_part().max_eigenvalue() < 0.0);
        }
    }

    #[test]
    fn a_posteriori_certificates_hold(seed in any::<u64>(), n in 2usize..=3, vars in 1usize..=3) {
        let (p, ep, _) = setup(seed, n, vars);
        let eta = p.covariance();
        let tight = SolverConfig::with_default_radius(&ep, &eta, 1e-10, TerminationMode::APosterioriResidual).unwrap();
        let reference = solve_fixed_point(&ep, &eta, &tight).unwrap();
        for mode in [TerminationMode::APosterioriResidual, TerminationMode::APosterioriStep] {
            let cfg = SolverConfig::with_default_radius(&ep, &eta, 1e-3, mode).unwrap();
            let out = solve_fixed_point(&ep, &eta, &cfg).unwrap();
            let err = (&out.w - &reference.w).op_norm();
            prop_assert!(err <= out.certified_error + reference.certified_error, "{mode}: {err:e} vs {:e}", out.certified_error);
        }
    }

    #[test]
    fn different_starts_agree(seed in any::<u64>(), n in 1usize..=4, vars in 1usize..=3) {
        let (p, ep, mut rng) = setup(seed, n, vars);
        let eta = p.covariance();
        let cfg = SolverConfig::with_default_radius(&ep, &eta, 1e-8, TerminationMode::APosterioriResidual).unwrap();
        let a = solve_fixed_point(&ep, &eta, &cfg).unwrap();
        let b = solve_from(&ep, &eta, &cfg, &lower_point(n, &mut rng)).unwrap();
        prop_assert!((&a.w - &b.w).op_norm() <= 2.0 * a.certified_error.max(b.certified_error));
    }
}

#[test]
fn a_priori_count_certifies_its_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let p = random_integer_pencil(2, 1, &mut rng);
        // Large Im(b) keeps the a priori count small.
        let y = random_positive(2, 1.0, 3.0, &mut rng);
        let ep = EvaluationPoint::new(y.scale(c(0.0, 1.0))).unwrap();
        let eta = p.covariance();
        let cfg = SolverConfig::with_default_radius(&ep, &eta, 1e-4, TerminationMode::APriori).unwrap();
        let out = solve_fixed_point(&ep, &eta, &cfg).unwrap();
        let tight = SolverConfig::with_default_radius(&ep, &eta, 1e-12, TerminationMode::APosterioriResidual).unwrap();
        let reference = solve_fixed_point(&ep, &eta, &tight).unwrap();
        assert!((&out.w - &reference.w).op_norm() <= 1e-4 + 1e-12);
    }
}

#[test]
fn rejects_points_off_the_upper_half_plane() {
    let b = ComplexMatrix::from_rows(&[vec![c(0.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, -1.0)]]).unwrap();
    assert!(EvaluationPoint::new(b).is_err());
    assert!(EvaluationPoint::new(ComplexMatrix::identity(2)).is_err());
}
