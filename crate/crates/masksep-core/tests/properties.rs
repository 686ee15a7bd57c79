//! Property tests for the projection identities, dual-norm inequalities,
//! and proximal-operator contractions.

use masksep_core::matrix::{norm, Matrix, NormKind};
use masksep_core::prox::singular_value_threshold;
use masksep_core::space::{support_project, tangent_project, SupportSet};
use masksep_core::svd::{reduced_svd, spectral_norm, DEFAULT_RANK_TOL};
use proptest::prelude::*;

fn rank_r_factors(m: usize, n: usize, r: usize, seed_data: &[f64]) -> masksep_core::SvdFactors {
    // orthonormal factors from the SVD of a seeded dense matrix
    let a = Matrix::from_vec(m, r, seed_data[..m * r].to_vec()).unwrap();
    let b = Matrix::from_vec(r, n, seed_data[m * r..m * r + r * n].to_vec()).unwrap();
    reduced_svd(&a.matmul(&b), DEFAULT_RANK_TOL).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tangent_projection_identities(
        data in proptest::collection::vec(-5.0f64..5.0, 5 * 4),
        factor_data in proptest::collection::vec(-5.0f64..5.0, 5 * 2 + 2 * 4),
    ) {
        let x = Matrix::from_vec(5, 4, data).unwrap();
        let f = rank_r_factors(5, 4, 2, &factor_data);
        prop_assume!(f.rank() > 0);

        let p = tangent_project(&f, &x, false).unwrap();
        let p_perp = tangent_project(&f, &x, true).unwrap();

        // complementary decomposition
        prop_assert!(p.add(&p_perp).sub(&x).max_abs() <= 1e-10 * x.max_abs().max(1.0));
        // idempotence
        let pp = tangent_project(&f, &p, false).unwrap();
        prop_assert!(pp.sub(&p).frobenius_norm() <= 1e-10 * x.frobenius_norm().max(1.0));
        // spectral contraction of the complement, factor-2 bound for P_T
        let x_spec = spectral_norm(&x).unwrap();
        prop_assert!(spectral_norm(&p_perp).unwrap() <= x_spec + 1e-10);
        prop_assert!(spectral_norm(&p).unwrap() <= 2.0 * x_spec + 1e-10);
    }

    #[test]
    fn dual_norm_inequalities(
        a_data in proptest::collection::vec(-5.0f64..5.0, 4 * 4),
        b_data in proptest::collection::vec(-5.0f64..5.0, 4 * 4),
    ) {
        let a = Matrix::from_vec(4, 4, a_data).unwrap();
        let b = Matrix::from_vec(4, 4, b_data).unwrap();
        let inner = a.dot(&b).abs();
        let slack = 1e-9;
        prop_assert!(
            inner <= norm(&a, NormKind::Nuclear).unwrap() * norm(&b, NormKind::Spectral).unwrap() + slack
        );
        prop_assert!(
            inner <= norm(&a, NormKind::OneEntry).unwrap() * norm(&b, NormKind::InfEntry).unwrap() + slack
        );
    }

    #[test]
    fn mi_norm_is_submultiplicative_against_inf(
        a_data in proptest::collection::vec(-5.0f64..5.0, 3 * 4),
        m_data in proptest::collection::vec(-5.0f64..5.0, 4 * 5),
    ) {
        let a = Matrix::from_vec(3, 4, a_data).unwrap();
        let m = Matrix::from_vec(4, 5, m_data).unwrap();
        let lhs = norm(&a.matmul(&m), NormKind::InfEntry).unwrap();
        let rhs = norm(&a, NormKind::Mi).unwrap() * norm(&m, NormKind::InfEntry).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn svt_is_a_spectral_contraction(
        data in proptest::collection::vec(-5.0f64..5.0, 6 * 5),
        tau in 0.0f64..8.0,
    ) {
        let a = Matrix::from_vec(6, 5, data).unwrap();
        let out = singular_value_threshold(&a, tau).unwrap();
        prop_assert!(spectral_norm(&a.sub(&out)).unwrap() <= tau + 1e-9);
    }

    #[test]
    fn support_projection_partition(
        data in proptest::collection::vec(-5.0f64..5.0, 4 * 4),
        mask_bits in proptest::collection::vec(any::<bool>(), 4 * 4),
    ) {
        let x = Matrix::from_vec(4, 4, data).unwrap();
        let indices: Vec<(usize, usize)> = mask_bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| (k / 4, k % 4))
            .collect();
        let omega = SupportSet::from_indices(4, 4, &indices);
        let inside = support_project(&x, &omega, false).unwrap();
        let outside = support_project(&x, &omega, true).unwrap();
        prop_assert_eq!(inside.add(&outside), x);
        prop_assert_eq!(omega.cardinality(), indices.len());
    }

    #[test]
    fn svd_reconstructs_and_is_orthonormal(
        data in proptest::collection::vec(-5.0f64..5.0, 6 * 4),
    ) {
        let a = Matrix::from_vec(6, 4, data).unwrap();
        let f = reduced_svd(&a, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(f.reconstruct().sub(&a).max_abs() <= 1e-8 * a.max_abs().max(1.0));
        prop_assert!(f.orthonormality_defect() <= 1e-10);
        for w in f.singular_values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }
}
