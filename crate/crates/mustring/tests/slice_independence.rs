//! The Klein–Gordon pairing of two exact solutions does not depend on the slice.

use mustring::bogoliubov::{exp_modes, kg_pairing, Embedding, EndCondition};
use mustring::quadrature::Quadrature;
use mustring::C64;
use proptest::prelude::*;

fn ends() -> impl Strategy<Value = [EndCondition; 2]> {
    prop_oneof![
        Just([EndCondition::Dirichlet; 2]),
        (0.05f64..2.0, 0.05f64..2.0).prop_map(|(a, b)| [EndCondition::Robin(a), EndCondition::Robin(b)]),
        (0.05f64..2.0).prop_map(|a| [EndCondition::Dirichlet, EndCondition::Robin(a)]),
    ]
}

fn slice(ell: f64) -> impl Strategy<Value = Embedding> {
    prop_oneof![
        (-0.6f64..0.6).prop_map(move |s| Embedding::tilted(ell, s)),
        (-0.6f64..0.6).prop_map(move |f| Embedding::bump(ell, f * ell / std::f64::consts::PI)),
        (-3.0f64..3.0).prop_map(move |t| Embedding::flat(ell, t)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn pairing_is_slice_independent(
        (ell, x) in (0.5f64..2.0).prop_flat_map(|ell| (Just(ell), slice(ell))),
        ends in ends(),
        k in 1usize..8,
        l in 1usize..8,
        eta in prop_oneof![Just(1i8), Just(-1i8)],
        xi in prop_oneof![Just(1i8), Just(-1i8)],
    ) {
        x.validate().unwrap();
        let ms = exp_modes(ends, 8, ell).unwrap();
        let (a, b) = (ms.solution(k, eta).unwrap(), ms.solution(l, xi).unwrap());
        let q = Quadrature::with_tol(1e-12);
        let on_slice = kg_pairing(&a, &b, &x, &q).unwrap();
        let expect = if k == l { f64::from(eta + xi) / 2.0 } else { 0.0 };
        prop_assert!((on_slice - C64::new(expect, 0.0)).norm() < 1e-8, "{on_slice} vs {expect}");
    }
}
