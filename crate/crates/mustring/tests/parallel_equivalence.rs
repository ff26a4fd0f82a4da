//! The parallel and sequential paths produce bit-identical results.

use mustring::bogoliubov::{beta_matrix, exp_modes, Embedding, EndCondition};
use mustring::model::Ratios;
use mustring::par;
use mustring::quadrature::Quadrature;
use mustring::spectrum::find_modes;

#[test]
fn modes_and_beta_agree_bitwise() {
    let r = Ratios::new(1.3, [0.5, 0.8], [0.2, 0.4]);
    let ms = exp_modes([EndCondition::Dirichlet; 2], 12, 1.0).unwrap();
    let (xi, xf) = (Embedding::flat(1.0, 0.0), Embedding::tilted(1.0, 0.3));
    let q = Quadrature::with_tol(1e-10);

    let run = || {
        let omegas = find_modes(&r, 500).unwrap().omegas();
        let beta = beta_matrix(&ms, &xi, &xf, 12, &q).unwrap();
        (omegas, beta)
    };
    par::force_sequential(true);
    let seq = run();
    par::force_sequential(false);
    let parl = run();
    assert_eq!(seq.0, parl.0);
    assert_eq!(seq.1, parl.1);
}
