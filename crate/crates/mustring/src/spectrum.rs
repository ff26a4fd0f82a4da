//! Frequency equation, normal modes and their normalizations.
//!
//! The classical modes are X_m(x) = A sin(ωx) + ω cos(ωx) with A = r₀ − μ₀ω².
//! Each interval I_m = [mπ/ℓ, (m+1)π/ℓ) holds one root, except the interval
//! containing ω* = √((r₀+r_ℓ)/(μ₀+μ_ℓ)), which holds two.

use std::f64::consts::PI;

use serde::Serialize;

use crate::model::{DerivedConstants, End, Ratios};
use crate::mu_space::{laplacian_mu, MuFunction};
use crate::quadrature::Quadrature;
use crate::roots::roots_on_grid;
use crate::{par, Error, Result};

/// Grid points per sub-bracket when scanning for sign changes.
const SUBGRID: usize = 64;

fn poly_parts(omega: f64, r: &Ratios) -> (f64, f64, f64, f64) {
    let (mu0, mul) = (r.mu[0], r.mu[1]);
    let (r0, rl) = (r.r[0], r.r[1]);
    let w2 = omega * omega;
    let a = (w2 * (mu0 + mul) - (r0 + rl)) * omega;
    let da = 3.0 * w2 * (mu0 + mul) - (r0 + rl);
    let b = (mu0 * w2 - r0) * (mul * w2 - rl) - w2;
    let db = 2.0 * omega * (mu0 * (mul * w2 - rl) + mul * (mu0 * w2 - r0) - 1.0);
    (a, da, b, db)
}

/// (ω²(μ₀+μ_ℓ) − (r₀+r_ℓ))ω cos(ωℓ) − ((μ₀ω²−r₀)(μ_ℓω²−r_ℓ) − ω²) sin(ωℓ).
pub fn frequency_equation(omega: f64, r: &Ratios) -> f64 {
    let (a, _, b, _) = poly_parts(omega, r);
    let (s, c) = (omega * r.ell).sin_cos();
    a * c - b * s
}

/// Derivative of [`frequency_equation`] in ω.
pub fn frequency_equation_deriv(omega: f64, r: &Ratios) -> f64 {
    let (a, da, b, db) = poly_parts(omega, r);
    let (s, c) = (omega * r.ell).sin_cos();
    let l = r.ell;
    da * c - a * l * s - db * s - b * l * c
}

/// ω* where the right-hand side of ω cot(ωℓ) = F(ω) has its pole.
pub fn pole(r: &Ratios) -> Option<f64> {
    let (m, k) = (r.mu_sum(), r.r_sum());
    (m > 0.0 && k > 0.0).then(|| (k / m).sqrt())
}

/// m₀ = (ℓ/π)ω*, when it is an integer to 1e-9.
pub fn exceptional_index(r: &Ratios) -> Option<usize> {
    let w = pole(r)?;
    let m0 = r.ell * w / PI;
    let n = m0.round();
    ((m0 - n).abs() < 1e-9 && n >= 1.0).then_some(n as usize)
}

/// g_m² = ⟪X_m, X_m⟫ in closed form.
pub fn normalization_gm2(omega: f64, r: &Ratios) -> f64 {
    let (mu0, mul) = (r.mu[0], r.mu[1]);
    let (r0, rl) = (r.r[0], r.r[1]);
    let l = r.ell;
    let w2 = omega * omega;
    let a2 = (mu0 * w2 - r0).powi(2);
    0.5 * (r0 + (l + mu0) * w2 + a2 * l + (mul * w2 + rl) * (w2 + a2) / (w2 + (mul * w2 - rl).powi(2)))
}

pub fn normalization_gm(omega: f64, r: &Ratios) -> f64 {
    normalization_gm2(omega, r).sqrt()
}

/// Leading large-m behaviour of 1/g_m, valid for μ₀ > 0.
pub fn inv_gm_asymptotic(m: usize, r: &Ratios) -> f64 {
    2f64.sqrt() * r.ell.powf(1.5) / (r.mu[0] * PI * PI * (m as f64).powi(2))
}

/// Asymptotic expansion of the root in I_m, by mass regime.
pub fn omega_asymptotic(m: usize, r: &Ratios) -> f64 {
    let mf = m as f64;
    let l = r.ell;
    let (mu0, mul) = (r.mu[0], r.mu[1]);
    match (mu0 > 0.0, mul > 0.0) {
        (true, true) => mf * PI / l + (mu0 + mul) / (mu0 * mul * PI * mf),
        (false, false) => mf * PI / l + r.r_sum() / (PI * mf),
        (only0, _) => {
            let (mu, r_other) = if only0 { (mu0, r.r[1]) } else { (mul, r.r[0]) };
            let k = (1.0 + mu * r_other) / (mu * PI);
            (2.0 * mf + 1.0) * PI / (2.0 * l) + k / mf - k / (2.0 * mf * mf)
        }
    }
}

/// One normal mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    /// Position in the increasing list of frequencies, starting at 1.
    pub index: usize,
    /// m such that ω ∈ I_m.
    pub interval: usize,
    pub omega: f64,
    /// Coefficient of sin(ωx); the cos(ωx) coefficient is ω.
    pub a: f64,
    pub gm: f64,
    /// One-sided limits X_m(j)/g_m.
    pub trace: [f64; 2],
}

impl Mode {
    /// k-th derivative of the classical mode X_m at x.
    pub fn x_deriv(&self, x: f64, k: u32) -> f64 {
        classical_deriv(self.omega, self.a, x, k)
    }

    /// Boundary values (1 − α_j r_j) X_m(j)/g_m of X̂^μ_m.
    pub fn boundary(&self, d: &DerivedConstants) -> [f64; 2] {
        [
            d.boundary_factor(End::Zero) * self.trace[0],
            d.boundary_factor(End::Ell) * self.trace[1],
        ]
    }
}

fn classical_deriv(omega: f64, a: f64, x: f64, k: u32) -> f64 {
    let (s, c) = (omega * x).sin_cos();
    let (s, c) = match k % 4 {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    };
    omega.powi(k as i32) * (a * s + omega * c)
}

fn make_mode(index: usize, omega: f64, r: &Ratios) -> Mode {
    let a = r.r[0] - r.mu[0] * omega * omega;
    let gm = normalization_gm(omega, r);
    let x0 = omega;
    let xl = classical_deriv(omega, a, r.ell, 0);
    Mode {
        index,
        interval: interval_of(omega, r.ell),
        omega,
        a,
        gm,
        trace: [x0 / gm, xl / gm],
    }
}

/// Index m of the interval I_m containing ω, tolerant to roots that land
/// an ulp below an endpoint.
pub fn interval_of(omega: f64, ell: f64) -> usize {
    (omega * ell / PI + 1e-9).floor() as usize
}

/// All roots of the frequency equation in the closed interval [mπ/ℓ, (m+1)π/ℓ].
pub fn interval_roots(m: usize, r: &Ratios) -> Result<Vec<f64>> {
    let h = PI / r.ell;
    // both ends computed the same way as the neighbours' so shared endpoints agree bitwise
    let lo = m as f64 * h;
    let hi = (m + 1) as f64 * h;
    let f = |w: f64| frequency_equation(w, r);
    let df = |w: f64| frequency_equation_deriv(w, r);
    let mut cuts = vec![lo];
    if let Some(w) = pole(r) {
        if w > lo + 1e-7 * h && w < hi - 1e-7 * h {
            cuts.push(w);
        }
    }
    cuts.push(hi);
    let mut out = Vec::new();
    for pair in cuts.windows(2) {
        out.extend(roots_on_grid(&f, &df, pair[0], pair[1], SUBGRID)?);
    }
    Ok(out)
}

/// Increasing list of normal modes, with bookkeeping for the double-root interval.
#[derive(Debug, Clone, Serialize)]
pub struct ModeTable {
    pub ratios: Ratios,
    pub modes: Vec<Mode>,
    pub pole: Option<f64>,
    /// m₀ when ω* = m₀π/ℓ exactly.
    pub exceptional: Option<usize>,
}

impl ModeTable {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    /// Interval hosting two roots, if any.
    pub fn double_interval(&self) -> Option<usize> {
        self.exceptional.or_else(|| self.pole.map(|w| interval_of(w, self.ratios.ell)))
    }
}

/// First `count` positive roots of the frequency equation, in increasing order.
///
/// The zero mode (ω = 0) is never returned; excluding it from the physics is
/// the caller's job, via [`crate::model::StringParams::require_spring`].
pub fn find_modes(r: &Ratios, count: usize) -> Result<ModeTable> {
    let h = PI / r.ell;
    let floor = 1e-9 * h;
    let mut roots: Vec<f64> = Vec::with_capacity(count + 2);
    let mut next = 0usize;
    loop {
        let complete = roots.iter().filter(|&&w| w < next as f64 * h - floor).count();
        if complete >= count {
            break;
        }
        let chunk = (count - complete + 2).max(8);
        let found = par::map_range(chunk, |i| interval_roots(next + i, r));
        let before = roots.len();
        for res in found {
            roots.extend(res?.into_iter().filter(|&w| w > floor));
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10 * h);
        if roots.len() == before {
            let lo = next as f64 * h;
            return Err(Error::BracketFailure { lo, hi: lo + chunk as f64 * h });
        }
        next += chunk;
    }
    let modes = roots
        .iter()
        .take(count)
        .enumerate()
        .map(|(i, &w)| make_mode(i + 1, w, r))
        .collect();
    Ok(ModeTable {
        ratios: *r,
        modes,
        pole: pole(r),
        exceptional: exceptional_index(r),
    })
}

/// Newton step size |f/f′| at the root, the residual used by the acceptance checks.
pub fn root_residual(omega: f64, r: &Ratios) -> f64 {
    (frequency_equation(omega, r) / frequency_equation_deriv(omega, r)).abs()
}

/// The classical mode X_m and the μ-normalized X̂^μ_m.
pub fn mode_functions(mode: &Mode, d: &DerivedConstants) -> (MuFunction, MuFunction) {
    let (w, a, g, l) = (mode.omega, mode.a, mode.gm, d.ell());
    let x = MuFunction::smooth(w, classical_deriv(w, a, l, 0), l, move |x, k| classical_deriv(w, a, x, k));
    let b = mode.boundary(d);
    let xhat = MuFunction::smooth(b[0], b[1], l, move |x, k| classical_deriv(w, a, x, k) / g);
    (x, xhat)
}

/// sup over `grid` and both endpoints of |Δ_μX̂ + ω²X̂|.
pub fn eigen_residual(mode: &Mode, d: &DerivedConstants, grid: usize) -> Result<f64> {
    let (_, xhat) = mode_functions(mode, d);
    let lap = laplacian_mu(&xhat, d)?;
    let w2 = mode.omega * mode.omega;
    let mut worst: f64 = 0.0;
    for j in End::BOTH {
        if d.alpha(j) > 0.0 {
            worst = worst.max((lap.boundary(j) + w2 * xhat.boundary(j)).abs());
        }
    }
    for i in 0..=grid {
        let x = d.ell() * i as f64 / grid as f64;
        worst = worst.max((lap.eval(x) + w2 * xhat.eval(x)).abs());
    }
    Ok(worst)
}

/// Tail of α_jΣX̂(j)² beyond N predicted by 1/g_m asymptotics: 2ℓ/(μ_jπ²N).
pub fn completeness_tail(mu: f64, ell: f64, n: usize) -> f64 {
    2.0 * ell / (mu * PI * PI * n as f64)
}

/// Smallest N whose predicted tail is at most `tol`.
pub fn completeness_cutoff(mu: f64, ell: f64, tol: f64) -> usize {
    (2.0 * ell / (mu * PI * PI * tol)).ceil() as usize
}

/// Partial sums of the boundary completeness identities.
#[derive(Debug, Clone, Serialize)]
pub struct CompletenessReport {
    pub n: usize,
    /// α_j Σ_{m≤N} X̂^μ_m(j)², for N = 1..n.
    pub weight_sums: [Vec<f64>; 2],
    /// Σ_{m≤N} X̂^μ_m(0) X̂^μ_m(ℓ), for N = 1..n.
    pub cross_sums: Vec<f64>,
    /// Predicted remaining tail of each weight sum at N = n (NaN when μ_j = 0).
    pub tail_estimate: [f64; 2],
}

impl CompletenessReport {
    /// |α_jΣX̂(j)² − 1| at N = n.
    pub fn weight_defect(&self, j: End) -> f64 {
        (self.weight_sums[j.index()].last().copied().unwrap_or(0.0) - 1.0).abs()
    }

    pub fn cross_defect(&self) -> f64 {
        self.cross_sums.last().copied().unwrap_or(0.0).abs()
    }
}

pub fn completeness_identities(table: &ModeTable, d: &DerivedConstants, n: usize) -> CompletenessReport {
    let n = n.min(table.len());
    let mut weight_sums = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut cross_sums = Vec::with_capacity(n);
    let (mut s0, mut sl, mut sc) = (0.0, 0.0, 0.0);
    for mode in &table.modes[..n] {
        let b = mode.boundary(d);
        s0 += d.alpha[0] * b[0] * b[0];
        sl += d.alpha[1] * b[1] * b[1];
        sc += b[0] * b[1];
        weight_sums[0].push(s0);
        weight_sums[1].push(sl);
        cross_sums.push(sc);
    }
    let tail = |j: End| {
        let mu = d.mu(j);
        if mu > 0.0 {
            completeness_tail(mu, d.ell(), n)
        } else {
            f64::NAN
        }
    };
    CompletenessReport {
        n,
        weight_sums,
        cross_sums,
        tail_estimate: [tail(End::Zero), tail(End::Ell)],
    }
}

/// Σ_{m≤n} X̂^μ_m(j) X̂^μ_m(x) for an interior point x.
pub fn boundary_point_sum(table: &ModeTable, d: &DerivedConstants, j: End, x: f64, n: usize) -> f64 {
    table.modes[..n.min(table.len())]
        .iter()
        .map(|m| m.boundary(d)[j.index()] * m.x_deriv(x, 0) / m.gm)
        .sum()
}

/// Interior L² norm of f − Σ_{m≤N}⟨f,X̂_m⟩_μ X̂_m for each N in `ns`.
pub fn expansion_residuals(
    table: &ModeTable,
    d: &DerivedConstants,
    f: &MuFunction,
    ns: &[usize],
    q: &Quadrature,
) -> Result<Vec<f64>> {
    let nmax = ns.iter().copied().max().unwrap_or(0).min(table.len());
    let modes = &table.modes[..nmax];
    let wmax = modes.last().map_or(1.0, |m| m.omega);
    let qq = q.for_frequency(wmax, 0.0, d.ell());
    let coeffs = par::map_slice(modes, |m| {
        let (_, xhat) = mode_functions(m, d);
        crate::mu_space::inner_mu(f, &xhat, d, &qq)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    ns.iter()
        .map(|&n| {
            let n = n.min(nmax);
            let resid = |x: f64| {
                let s: f64 = modes[..n]
                    .iter()
                    .zip(&coeffs)
                    .map(|(m, c)| c * m.x_deriv(x, 0) / m.gm)
                    .sum();
                (f.eval(x) - s).powi(2)
            };
            qq.integrate(&resid, 0.0, d.ell()).map(f64::sqrt)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_constants, StringParams};
    use crate::mu_space::{inner_mu, modified_inner, robin_domain_residual};

    fn baseline() -> Ratios {
        StringParams::default().ratios()
    }

    fn measure_params() -> StringParams {
        StringParams { m0: 0.5, ml: 0.5, k0: 0.2, kl: 0.2, ..Default::default() }
    }

    #[test]
    fn neumann_equation() {
        let r = Ratios::new(1.0, [0.0; 2], [0.0; 2]);
        for w in [0.3, 1.7, 4.0] {
            assert!((frequency_equation(w, &r) - w * w * w.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_at_pi_over_ell() {
        let r = baseline();
        let w = PI;
        let expect = (w * w * 2.0 - 2.0) * (-w);
        assert!((frequency_equation(w, &r) - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn baseline_fixture() {
        // (4·2 − 2)·2·cos 2 − ((4 − 1)² − 4) sin 2
        let expect = 12.0 * 2f64.cos() - 5.0 * 2f64.sin();
        assert!((frequency_equation(2.0, &baseline()) - expect).abs() < 1e-13);
        let t = find_modes(&baseline(), 5).unwrap();
        // reference values from a 30-digit mpmath findroot
        let want = [0.808675073391431, 1.598398325970072, 3.707706520061496, 6.591303172022426, 9.633874732111517];
        for (m, w) in t.modes.iter().zip(want) {
            assert!((m.omega - w).abs() < 1e-13, "{} vs {}", m.omega, w);
            assert!(root_residual(m.omega, &baseline()) < 1e-12);
        }
        assert_eq!(t.modes.iter().map(|m| m.interval).collect::<Vec<_>>(), [0, 0, 1, 2, 3]);
        assert_eq!(t.double_interval(), Some(0));
    }

    #[test]
    fn derivative_matches_difference() {
        let r = Ratios::new(1.3, [0.4, 0.2], [0.7, 0.1]);
        for w in [0.5, 2.0, 11.0] {
            let h = 1e-6;
            let fd = (frequency_equation(w + h, &r) - frequency_equation(w - h, &r)) / (2.0 * h);
            let an = frequency_equation_deriv(w, &r);
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0));
        }
    }

    #[test]
    fn roots_on_shared_endpoints_are_not_lost() {
        for ell in [1.0, 2.5, 0.7] {
            let t = find_modes(&Ratios::new(ell, [0.0; 2], [0.0; 2]), 200).unwrap();
            for (i, m) in t.modes.iter().enumerate() {
                assert!((m.omega - (i + 1) as f64 * PI / ell).abs() < 1e-10, "ell {ell} mode {}", i + 1);
            }
        }
    }

    #[test]
    fn neumann_roots_exact() {
        let r = Ratios::new(2.0, [0.0; 2], [0.0; 2]);
        let t = find_modes(&r, 20).unwrap();
        for (i, m) in t.modes.iter().enumerate() {
            assert!((m.omega - (i + 1) as f64 * PI / 2.0).abs() < 1e-12);
            assert_eq!(m.interval, i + 1);
        }
    }

    #[test]
    fn exceptional_interval() {
        // ω* = 2π exactly
        let w = 2.0 * PI;
        let r = Ratios::new(1.0, [0.5, 0.5], [0.5 * w * w, 0.5 * w * w]);
        assert_eq!(exceptional_index(&r), Some(2));
        let t = find_modes(&r, 6).unwrap();
        let hits = t.modes.iter().filter(|m| (m.omega - w).abs() < 1e-9).count();
        assert_eq!(hits, 1);
        let in2 = t.modes.iter().filter(|m| m.interval == 2).count();
        assert_eq!(in2, 2);
    }

    #[test]
    fn gm_matches_quadrature() {
        let p = measure_params();
        let d = derive_constants(&p).unwrap();
        let t = find_modes(&d.ratios, 12).unwrap();
        let q = Quadrature::default();
        for m in &t.modes {
            let (x, xhat) = mode_functions(m, &d);
            let g2 = modified_inner(&x, &x, &d, &q.for_frequency(2.0 * m.omega, 0.0, 1.0)).unwrap();
            assert!((g2 - m.gm * m.gm).abs() < 1e-9 * g2);
            let n = inner_mu(&xhat, &xhat, &d, &q).unwrap();
            assert!((n - 1.0).abs() < 1e-10);
            let (r0, rl) = robin_domain_residual(&xhat, &d);
            assert!(r0.abs() < 1e-10 && rl.abs() < 1e-10);
            assert!(eigen_residual(m, &d, 50).unwrap() < 1e-9 * m.omega.powi(2));
        }
    }

    #[test]
    fn x_at_zero_is_omega() {
        let t = find_modes(&baseline(), 3).unwrap();
        for m in &t.modes {
            assert!((m.x_deriv(0.0, 0) - m.omega).abs() < 1e-15);
        }
    }

    #[test]
    fn spring_only_boundary_equals_trace() {
        let p = StringParams { m0: 0.0, ml: 0.0, k0: 2.0, kl: 1.0, ..Default::default() };
        let d = derive_constants(&p).unwrap();
        let t = find_modes(&d.ratios, 4).unwrap();
        for m in &t.modes {
            assert_eq!(m.boundary(&d), m.trace);
        }
    }

    #[test]
    fn completeness_converges() {
        let p = measure_params();
        let d = derive_constants(&p).unwrap();
        let t = find_modes(&d.ratios, 200).unwrap();
        let rep = completeness_identities(&t, &d, 200);
        let w = &rep.weight_sums[0];
        assert!(w.windows(2).all(|p| p[1] >= p[0]));
        assert!(rep.weight_defect(End::Zero) < 1.5 * rep.tail_estimate[0]);
        assert!(rep.cross_defect() < 1e-2);
        let s = boundary_point_sum(&t, &d, End::Zero, 0.37, 200);
        assert!(s.abs() < 0.05, "{s}");
    }

    #[test]
    fn expansion_residual_decreases() {
        let p = measure_params();
        let d = derive_constants(&p).unwrap();
        let t = find_modes(&d.ratios, 40).unwrap();
        let f = MuFunction::smooth(0.0, 0.0, 1.0, |x, k| match k {
            0 => x * (1.0 - x),
            1 => 1.0 - 2.0 * x,
            2 => -2.0,
            _ => 0.0,
        });
        let res = expansion_residuals(&t, &d, &f, &[5, 10, 20, 40], &Quadrature::default()).unwrap();
        assert!(res.windows(2).all(|p| p[1] < p[0]), "{res:?}");
    }
}
