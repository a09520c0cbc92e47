mod common;

use ncp_core::dynamics::{choi_of_interval, model_from_json, IntegratorTolerances};
use ncp_core::measure::{ncp, trace_distance, DEFAULT_NEG_THRESHOLD};
use ncp_core::qmat::{hermitian_eig, CMatrix, Subsystem, DEFAULT_HERMITICITY_TOL};
use ncp_core::scalar::cx;
use proptest::prelude::*;

fn any_matrix(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMatrix::new(n, n, v.into_iter().map(|(a, b)| cx(a, b)).collect()).unwrap())
}

fn any_hermitian(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
    any_matrix(n).prop_map(|a| &a + &a.adjoint())
}

/// `A A† / tr(A A†)`.
fn any_density(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
    any_matrix(n).prop_filter_map("rank deficient", |a| {
        let p = &a * &a.adjoint();
        let tr = p.trace().re;
        (tr > 1e-6).then(|| p.scale_real(1.0 / tr))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs(h in any_hermitian(4)) {
        let s = hermitian_eig(&h, DEFAULT_HERMITICITY_TOL).unwrap();
        prop_assert!(s.reconstruct().max_abs_diff(&h) < 1e-12);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = s.eigenvalues.iter().sum();
        prop_assert!((sum - h.trace().re).abs() < 1e-12);
    }

    #[test]
    fn vec_identity(a in any_matrix(2), x in any_matrix(2), b in any_matrix(2)) {
        let lhs = (&(&a * &x) * &b).vectorize();
        let rhs = b.transpose().kron(&a).apply(&x.vectorize());
        for (l, r) in lhs.iter().zip(&rhs) {
            prop_assert!((l - r).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product(a in any_matrix(2), b in any_matrix(3)) {
        let ab = a.kron(&b);
        let ta = ab.partial_trace((2, 3), Subsystem::A).unwrap();
        prop_assert!(ta.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        let tb = ab.partial_trace((2, 3), Subsystem::B).unwrap();
        prop_assert!(tb.max_abs_diff(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn trace_distance_is_a_bounded_metric(r1 in any_density(2), r2 in any_density(2), r3 in any_density(2)) {
        let d12 = trace_distance(&r1, &r2).unwrap();
        let d21 = trace_distance(&r2, &r1).unwrap();
        let d13 = trace_distance(&r1, &r3).unwrap();
        let d32 = trace_distance(&r3, &r2).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d12));
        prop_assert!((d12 - d21).abs() < 1e-12);
        prop_assert!(d12 <= d13 + d32 + 1e-12);
        prop_assert!(trace_distance(&r1, &r1).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Positive constant rates generate CP-divisible dynamics.
    #[test]
    fn constant_positive_rates_are_cp(
        g1 in 0.01f64..2.0,
        g2 in 0.01f64..2.0,
        w in -2.0f64..2.0,
        t1 in 0.0f64..3.0,
        dt in 0.0f64..3.0,
    ) {
        let json = format!(
            r#"{{"model": "custom", "dim": 2,
                "hamiltonian": {{"operator": [[{w}, 0.3], [0.3, {mw}]]}},
                "channels": [
                    {{"operator": [[0, 0], [1, 0]], "rate": {g1}}},
                    {{"operator": [[1, 0], [0, -1]], "rate": {g2}}}
                ]}}"#,
            mw = -w
        );
        let m = model_from_json::<f64>(&json).unwrap();
        let c = choi_of_interval(&m, t1, t1 + dt, &IntegratorTolerances::precise()).unwrap();
        prop_assert_eq!(ncp(&c, DEFAULT_NEG_THRESHOLD).unwrap(), 0.0);
        prop_assert!((c.matrix.trace().re - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn builtin_invariants(b in common::any_builtin()) {
        if let Err(e) = common::invariant_case(&b) {
            return Err(TestCaseError::fail(e));
        }
    }
}
