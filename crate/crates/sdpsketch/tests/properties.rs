//! Property tests for the spectral primitives and data model.

#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use sdpsketch::linalg::{
    eigendecomp_sym, is_psd, schatten_norm, trace_product, Mat, SchattenP, SymMatrix,
};

fn sym_matrix_strategy(max_dim: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_dim).prop_flat_map(|dim| {
        proptest::collection::vec(-2.0..2.0_f64, dim * dim)
            .prop_map(move |data| SymMatrix::dense_from_rows(dim, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schatten_norms_are_ordered(m in sym_matrix_strategy(6)) {
        let n1 = schatten_norm(&m, SchattenP::One).unwrap();
        let n2 = schatten_norm(&m, SchattenP::Two).unwrap();
        let ninf = schatten_norm(&m, SchattenP::Inf).unwrap();
        let slack = 1e-10 * (1.0 + n1);
        prop_assert!(n1 + slack >= n2);
        prop_assert!(n2 + slack >= ninf);
    }

    #[test]
    fn trace_product_cauchy_schwarz(
        m in sym_matrix_strategy(5),
        n_data in proptest::collection::vec(-2.0..2.0_f64, 25),
    ) {
        let n = SymMatrix::dense_from_rows(5, n_data).unwrap();
        if m.dim() == 5 {
            let lhs = trace_product(&m, &n).unwrap().abs();
            let bound = schatten_norm(&m, SchattenP::Two).unwrap()
                * schatten_norm(&n, SchattenP::Two).unwrap();
            prop_assert!(lhs <= bound + 1e-9 * (1.0 + bound));
        }
    }

    #[test]
    fn eigendecomposition_reconstructs(m in sym_matrix_strategy(6)) {
        let s = eigendecomp_sym(&m).unwrap();
        let back = s.reconstruct();
        let tol = 1e-8 * m.max_abs().max(1.0);
        let md = m.to_mat();
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                prop_assert!((back.get(i, j) - md.get(i, j)).abs() <= tol);
            }
        }
        // Orthogonality defect of Q.
        let q = s.eigenvectors();
        let qtq = sdpsketch::linalg::dense::mat_mul(&q.transpose(), q);
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((qtq.get(i, j) - expect).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn conjugated_spectra_stay_psd(
        m in sym_matrix_strategy(6),
        diag in proptest::collection::vec(0.0..3.0_f64, 6),
    ) {
        // Q D Q^T with nonnegative D and orthogonal Q (from a random
        // symmetric matrix's eigenvectors) is PSD at tol 1e-8.
        let s = eigendecomp_sym(&m).unwrap();
        let q = s.eigenvectors();
        let dim = m.dim();
        let mut scaled = q.clone();
        for j in 0..dim {
            for i in 0..dim {
                scaled.set(i, j, q.get(i, j) * diag[j]);
            }
        }
        let mut psd = sdpsketch::linalg::dense::mat_mul_nt(&scaled, q);
        psd.symmetrize_average();
        let candidate = SymMatrix::from_symmetric_mat(psd);
        prop_assert!(is_psd(&candidate, 1e-8).unwrap());
    }

    #[test]
    fn matrix_json_roundtrips(m in sym_matrix_strategy(5)) {
        let text = serde_json::to_string(&m).unwrap();
        let back: SymMatrix = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn sparse_roundtrip_through_dense() {
    let m = SymMatrix::sparse_from_triplets(4, &[(0, 1, 0.5), (3, 3, -2.0)]).unwrap();
    let dense = SymMatrix::dense_from_rows(4, m.to_mat().into_vec()).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(m.entry(i, j), dense.entry(i, j));
        }
    }
    let _ = Mat::identity(3);
}
