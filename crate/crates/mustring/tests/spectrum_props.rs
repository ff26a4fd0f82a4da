//! Mode tables checked against the boundary conditions written out directly.

use std::f64::consts::PI;

use mustring::model::Ratios;
use mustring::spectrum::find_modes;
use proptest::prelude::*;

/// Mismatch in the two endpoint conditions for X = ω cos ωx + a sin ωx with
/// a fixed by the x = 0 condition X'(0) = (r₀ − μ₀ω²) X(0).
fn far_end_mismatch(w: f64, r: &Ratios) -> f64 {
    let a = r.r[0] - r.mu[0] * w * w;
    let (s, c) = (w * r.ell).sin_cos();
    let x = w * c + a * s;
    let dx = -w * w * s + a * w * c;
    dx - (r.mu[1] * w * w - r.r[1]) * x
}

fn sign_changes(r: &Ratios, upto: f64, step: f64) -> usize {
    let mut n = 0;
    let mut prev = far_end_mismatch(step * 0.5, r);
    let mut w = step * 1.5;
    while w < upto {
        let cur = far_end_mismatch(w, r);
        if cur == 0.0 || cur.signum() != prev.signum() {
            n += 1;
        }
        prev = cur;
        w += step;
    }
    n
}

fn ratios() -> impl Strategy<Value = Ratios> {
    (0.5f64..3.0, 0.05f64..2.0, 0.05f64..2.0, 0.05f64..2.0, 0.05f64..2.0)
        .prop_map(|(ell, m0, ml, r0, rl)| Ratios::new(ell, [m0, ml], [r0, rl]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn modes_satisfy_both_endpoint_conditions(r in ratios()) {
        let table = find_modes(&r, 25).unwrap();
        prop_assert_eq!(table.len(), 25);
        for m in &table.modes {
            let x0 = m.x_deriv(0.0, 0);
            let (xl, dxl) = (m.x_deriv(r.ell, 0), m.x_deriv(r.ell, 1));
            let w2 = m.omega * m.omega;
            let scale = (1.0 + w2) * (m.omega.abs() + m.a.abs());
            prop_assert!((m.x_deriv(0.0, 1) - (r.r[0] - r.mu[0] * w2) * x0).abs() <= 1e-9 * scale);
            prop_assert!((dxl - (r.mu[1] * w2 - r.r[1]) * xl).abs() <= 1e-9 * scale * (1.0 + w2));
        }
    }

    #[test]
    fn no_root_is_skipped(r in ratios()) {
        let table = find_modes(&r, 15).unwrap();
        let omegas = table.omegas();
        prop_assert!(omegas.windows(2).all(|w| w[1] > w[0]));
        // midway between the last root and the next interval edge
        let h = PI / r.ell;
        let last = omegas[omegas.len() - 1];
        let next = find_modes(&r, 16).unwrap().modes[15].omega;
        let upto = 0.5 * (last + next);
        prop_assert!(upto < last + h);
        prop_assert_eq!(sign_changes(&r, upto, h / 4000.0), 15);
    }

    #[test]
    fn high_modes_approach_the_free_string(r in ratios()) {
        let table = find_modes(&r, 400).unwrap();
        let h = PI / r.ell;
        let top = &table.modes[399];
        // ω_m − (m−2)π/ℓ → 0 like 1/m when both ends carry a mass
        let offset = top.omega - (top.index as f64 - 2.0) * h;
        prop_assert!(offset.abs() < 2.0 * (1.0 / r.mu[0] + 1.0 / r.mu[1]) / (r.ell * top.omega) + 1e-9, "offset {}", offset);
    }
}
