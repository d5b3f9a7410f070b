//! Property-based invariants over randomly generated shapes.

use nalgebra::DMatrix;
use proptest::prelude::*;
use shapespline::geometry::{
    exp_map, inverse_exp, project_horizontal, project_tangent, shape_distance, skew_basis,
    to_preshape, Configuration, HorizontalVector, PreShape,
};

const K: usize = 6;
const M: usize = 3;

fn entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, len)
}

fn preshape_strategy() -> impl Strategy<Value = PreShape> {
    entries(M * (K - 1)).prop_filter_map("nonzero and full-rank matrix", |v| {
        let m = DMatrix::from_column_slice(M, K - 1, &v);
        if m.norm() < 1e-2 {
            return None;
        }
        let x = PreShape::from_unnormalized(m).ok()?;
        // keep well-conditioned shapes: near the singular strata the cut
        // locus closes in and horizontal geodesics stop being minimal well
        // below pi/2
        let gram = x.matrix() * x.matrix().transpose();
        let eig = nalgebra::SymmetricEigen::new(gram);
        (eig.eigenvalues.min() > 0.1).then_some(x)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preshape_is_similarity_invariant(
        raw in entries(K * M),
        scale in 0.1f64..20.0,
        shift in entries(M),
    ) {
        let lm = DMatrix::from_column_slice(K, M, &raw);
        prop_assume!((0..M).any(|c| {
            let col = lm.column(c);
            (col.max() - col.min()) > 1e-3
        }));
        let c1 = Configuration::new(lm.clone(), 0.0).unwrap();
        let moved = DMatrix::from_fn(K, M, |r, c| lm[(r, c)] * scale + shift[c]);
        let c2 = Configuration::new(moved, 0.0).unwrap();
        let (x1, x2) = (to_preshape(&c1).unwrap(), to_preshape(&c2).unwrap());
        prop_assert!((x1.matrix() - x2.matrix()).norm() < 1e-10);
    }

    #[test]
    fn projections_are_idempotent_and_clean(
        x in preshape_strategy(),
        w_raw in entries(M * (K - 1)),
    ) {
        let w = DMatrix::from_column_slice(M, K - 1, &w_raw);
        let t = project_tangent(&x, &w);
        prop_assert!(t.dot(x.matrix()).abs() < 1e-12);
        let t2 = project_tangent(&x, &t);
        prop_assert!((&t2 - &t).norm() < 1e-12);

        let h = project_horizontal(&x, &t).unwrap();
        let h2 = project_horizontal(&x, h.matrix()).unwrap();
        prop_assert!((h2.matrix() - h.matrix()).norm() < 1e-10);
        for a in skew_basis(M) {
            prop_assert!(h.matrix().dot(&(&a * x.matrix())).abs() < 1e-10);
        }
    }

    #[test]
    fn exp_and_log_invert_each_other(
        x in preshape_strategy(),
        dir_raw in entries(M * (K - 1)),
        arc in 0.05f64..0.7,
    ) {
        let raw = DMatrix::from_column_slice(M, K - 1, &dir_raw);
        let t = project_tangent(&x, &raw);
        let h = project_horizontal(&x, &t).unwrap();
        prop_assume!(h.norm() > 1e-3);
        let step = HorizontalVector::new(x.clone(), h.matrix() * (arc / h.norm())).unwrap();
        let y = exp_map(&x, &step).unwrap();
        prop_assert!((shape_distance(&x, &y).unwrap() - arc).abs() < 1e-8);
        let log = inverse_exp(&x, &y).unwrap();
        prop_assert!((log.matrix() - step.matrix()).norm() < 1e-8);
    }
}
