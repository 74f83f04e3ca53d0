use maslov_core::asymptotics::compute_boundary_form;
use maslov_core::{build_square_grid, BoundaryCondition, Model, PotentialField};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q()
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
    (&a + a.transpose()) * 0.5
}

fn decomposition(theta: DMatrix<f64>, v: DMatrix<f64>) -> Option<(usize, usize, DMatrix<f64>)> {
    let g = build_square_grid(2, 5).unwrap();
    let m = Model::new(&g, PotentialField::constant(v).unwrap(), BoundaryCondition::robin_matrix(theta)).unwrap();
    let f = compute_boundary_form(&m).unwrap();
    f.expected_morse().ok().map(|_| (f.morse_minus_b, f.morse_qvq, f.b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn morse_decomposition_is_rotation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        // Θ with a random kernel, so that Q₀ is exercised
        let r0 = random_orthogonal(&mut rng, n);
        let diag = DMatrix::from_fn(n, n, |i, j| if i == j && rng.gen_bool(0.6) { rng.gen_range(-1.0..1.0) } else { 0.0 });
        let theta = &r0 * diag * r0.transpose();
        let v = random_symmetric(&mut rng, n);
        let r = random_orthogonal(&mut rng, n);
        let rt = r.transpose();
        let base = decomposition(theta.clone(), v.clone());
        let rotated = decomposition(&r * &theta * &rt, &r * &v * &rt);
        if let (Some((b0, q0, bm)), Some((b1, q1, bm1))) = (base, rotated) {
            prop_assert_eq!(b0 + q0, b1 + q1);
            prop_assert_eq!(b0, b1);
            let err = (&r * bm * &rt - bm1).amax();
            prop_assert!(err < 1e-12);
        }
    }

    #[test]
    fn uniform_block_b_is_perimeter_times_block(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let theta = random_symmetric(&mut rng, n);
        let v = random_symmetric(&mut rng, n);
        let g = build_square_grid(2, 7).unwrap();
        let m = Model::new(&g, PotentialField::constant(v).unwrap(), BoundaryCondition::robin_matrix(theta.clone())).unwrap();
        let f = compute_boundary_form(&m).unwrap();
        prop_assert!((f.b - theta * 8.0).amax() < 1e-12);
        prop_assert!((f.volume - 4.0).abs() < 1e-12);
    }
}
