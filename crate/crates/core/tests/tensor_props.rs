use proptest::prelude::*;
use uniformize_core::random;
use uniformize_core::tensor::{
    compress, expm_with_metric, kron_matrices, kron_power, max_abs, partial_contract, partial_transpose, sector_dim,
    sector_isometry, sector_power, symmetrizer, CMatrix, Metric, Operator, Parity, SpaceLabel, C64,
};

fn parity() -> impl Strategy<Value = Parity> {
    prop_oneof![Just(Parity::Boson), Just(Parity::Fermion)]
}

fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs(&(a - b)) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetrizer_is_an_orthogonal_projector(d in 1usize..4, n in 1usize..4, p in parity()) {
        let proj = symmetrizer(d, n, p).unwrap().matrix;
        prop_assert!(close(&(&proj * &proj), &proj, 1e-12));
        prop_assert!(close(&proj.adjoint(), &proj, 1e-12));
        let sector = p.sector();
        prop_assert!((proj.trace().re - sector_dim(d, n, sector) as f64).abs() < 1e-10);
        let s = sector_isometry(d, n, p).unwrap();
        prop_assert!(close(&(s.adjoint() * &s), &CMatrix::identity(s.ncols(), s.ncols()), 1e-12));
        prop_assert!(close(&(&s * s.adjoint()), &proj, 1e-12));
    }

    #[test]
    fn kron_is_associative(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, dc in 1usize..3) {
        let mut rng = random::rng(seed);
        let a = random::matrix(&mut rng, da, da);
        let b = random::matrix(&mut rng, db, db);
        let c = random::matrix(&mut rng, dc, dc);
        let left = kron_matrices(&kron_matrices(&a, &b), &c);
        let right = kron_matrices(&a, &kron_matrices(&b, &c));
        prop_assert!(close(&left, &right, 1e-12));
        let mixed = kron_matrices(&a, &b) * kron_matrices(&a, &b);
        prop_assert!(close(&mixed, &kron_matrices(&(&a * &a), &(&b * &b)), 1e-10));
    }

    #[test]
    fn sector_power_is_compressed_tensor_power(seed in any::<u64>(), d in 1usize..4, n in 1usize..4, p in parity()) {
        let mut rng = random::rng(seed);
        let m = random::matrix(&mut rng, d, d);
        let s = sector_isometry(d, n, p).unwrap();
        let full = kron_power(&m, n).unwrap();
        prop_assert!(close(&sector_power(&m, n, p).unwrap(), &(s.adjoint() * full * &s), 1e-10));
    }

    #[test]
    fn compress_inverts_embedding(seed in any::<u64>(), d in 1usize..4, n in 1usize..4, p in parity()) {
        let mut rng = random::rng(seed);
        let s = sector_isometry(d, n, p).unwrap();
        let b = random::matrix(&mut rng, s.ncols(), s.ncols());
        let embedded = Operator::new(SpaceLabel::full(d, n), &s * &b * s.adjoint(), Metric::identity(d)).unwrap();
        let back = compress(&embedded, p).unwrap();
        prop_assert_eq!(back.space, SpaceLabel::sector(d, n, p));
        prop_assert!(close(&back.matrix, &b, 1e-12));
    }

    #[test]
    fn metric_propagator_is_metric_unitary(seed in any::<u64>(), signs in prop::collection::vec(prop::bool::ANY, 1..4), dt in -1.0f64..1.0) {
        let mut rng = random::rng(seed);
        let j_diag: Vec<f64> = signs.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
        let metric = Metric::signature(&j_diag).unwrap();
        let h = random::metric_hermitian(&mut rng, &metric);
        let j = metric.matrix().clone();
        let u = expm_with_metric(&h, dt, &j, metric.class());
        prop_assert!(close(&(u.adjoint() * &j * &u), &j, 1e-9));
    }

    #[test]
    fn partial_contract_matches_index_sum(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = random::rng(seed);
        let w = random::matrix(&mut rng, d * d, d * d);
        let rho = random::matrix(&mut rng, d, d);
        let out = partial_contract(&Operator::new(SpaceLabel::full(d, 2), w.clone(), Metric::identity(d)).unwrap(), &[rho.clone()]).unwrap();
        let mut expected = CMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for x in 0..d {
                    for y in 0..d {
                        acc += rho[(y, x)] * w[(x * d + a, y * d + b)];
                    }
                }
                expected[(a, b)] = acc;
            }
        }
        prop_assert_eq!(out.space, SpaceLabel::full(d, 1));
        prop_assert!(close(&out.matrix, &expected, 1e-12));
        let total = partial_contract(&Operator::new(SpaceLabel::full(d, 2), w.clone(), Metric::identity(d)).unwrap(), &[rho.clone(), rho.clone()]).unwrap();
        let trace = (kron_matrices(&rho, &rho) * &w).trace();
        prop_assert!((trace - total.matrix[(0, 0)]).norm() < 1e-10);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), d in 1usize..4, n in 1usize..4, mask in 0u32..8) {
        let mut rng = random::rng(seed);
        let dim = d.pow(n as u32);
        let a = random::matrix(&mut rng, dim, dim);
        let mask = mask & ((1 << n) - 1);
        let once = partial_transpose(&a, d, n, mask);
        prop_assert!(close(&partial_transpose(&once, d, n, mask), &a, 0.0));
        let all = (1u32 << n) - 1;
        prop_assert!(close(&partial_transpose(&a, d, n, all), &a.transpose(), 0.0));
    }
}
