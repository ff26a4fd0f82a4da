//! Classical evolution by mode expansion.
//!
//! Physical data are a displacement Q(x) and momentum density P(x) on [0,ℓ].
//! In `L²_μ` they are represented with boundary values (1 − α_j r_j)·Q(j), which
//! places them in the Robin domain whenever they are smooth.

use num_complex::Complex64;
use serde::Serialize;

use crate::model::{DerivedConstants, End, StringParams};
use crate::mu_space::{inner_mu, rn_derivative, MuFunction, Smoothness};
use crate::quadrature::Quadrature;
use crate::spectrum::{mode_functions, Mode, ModeTable};
use crate::{par, Error, Result};

/// Position and momentum density on a constant-time slice.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub q: MuFunction,
    pub p: MuFunction,
}

impl CauchyData {
    pub fn new(q: MuFunction, p: MuFunction) -> Self {
        CauchyData { q, p }
    }

    /// Lift physical fields into `L²_μ`: boundary values become (1 − α_j r_j) times the trace.
    pub fn from_physical(mut q: MuFunction, mut p: MuFunction, d: &DerivedConstants) -> Self {
        for f in [&mut q, &mut p] {
            f.v0 = d.boundary_factor(End::Zero) * f.trace(End::Zero);
            f.vl = d.boundary_factor(End::Ell) * f.trace(End::Ell);
        }
        CauchyData { q, p }
    }
}

/// A displacement field that can be differentiated in x and t.
pub trait Field: Sync {
    /// ∂ₓ^kx ∂ₜ^kt Q(t, x).
    fn value(&self, t: f64, x: f64, kx: u32, kt: u32) -> f64;
}

impl<F: Fn(f64, f64, u32, u32) -> f64 + Sync> Field for F {
    fn value(&self, t: f64, x: f64, kx: u32, kt: u32) -> f64 {
        self(t, x, kx, kt)
    }
}

/// Raised when the first M modes miss a noticeable part of the data's energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationWarning {
    pub discarded_fraction: f64,
}

pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// Mode-sum solution Q(t) = Σ T_m(t) X̂_m with T_m(t) = T_m cos Ω_m t + Ṫ_m sin(Ω_m t)/Ω_m.
#[derive(Debug, Clone)]
pub struct Evolution {
    modes: Vec<Mode>,
    d: DerivedConstants,
    rho: f64,
    gamma: f64,
    pub t0: Vec<f64>,
    pub v0: Vec<f64>,
    pub warning: Option<TruncationWarning>,
}

impl Evolution {
    /// Evolution from explicit mode amplitudes T_m(0) and velocities Ṫ_m(0).
    pub fn from_coefficients(
        table: &ModeTable,
        params: &StringParams,
        d: &DerivedConstants,
        t0: Vec<f64>,
        v0: Vec<f64>,
    ) -> Result<Self> {
        if t0.len() != v0.len() {
            return Err(Error::CutoffMismatch { left: t0.len(), right: v0.len() });
        }
        if t0.len() > table.len() {
            return Err(Error::CutoffMismatch { left: t0.len(), right: table.len() });
        }
        Ok(Evolution {
            modes: table.modes[..t0.len()].to_vec(),
            d: *d,
            rho: params.rho,
            gamma: params.gamma,
            t0,
            v0,
            warning: None,
        })
    }

    /// Project Cauchy data onto every mode of `table`.
    ///
    /// T_m = ⟨X̂_m, Q⟩_μ and Ṫ_m = ⟨X̂_m, P⟩_μ/ρ. The warning is set when the
    /// modal energy falls short of the data's energy by more than
    /// [`TRUNCATION_THRESHOLD`] (relative); for data without a first derivative
    /// the μ-norms of Q and P/ρ are compared instead.
    pub fn project(
        data: &CauchyData,
        table: &ModeTable,
        params: &StringParams,
        d: &DerivedConstants,
        q: &Quadrature,
    ) -> Result<Self> {
        let wmax = table.modes.last().map_or(1.0, |m| m.omega);
        let qq = q.for_frequency(wmax, 0.0, d.ell());
        let coeffs = par::map_slice(&table.modes, |m| -> Result<(f64, f64)> {
            let (_, xhat) = mode_functions(m, d);
            let a = inner_mu(&xhat, &data.q, d, &qq)?;
            let b = inner_mu(&xhat, &data.p, d, &qq)? / params.rho;
            Ok((a, b))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let (t0, v0): (Vec<f64>, Vec<f64>) = coeffs.into_iter().unzip();
        let mut ev = Evolution::from_coefficients(table, params, d, t0, v0)?;

        let (kept, total) = if data.q.smoothness() >= Smoothness::H1 {
            (ev.modal_energy(), energy(data, params, d, &qq)?)
        } else {
            let kept: f64 = ev
                .t0
                .iter()
                .zip(&ev.v0)
                .map(|(a, b)| a * a + b * b)
                .sum();
            let total = inner_mu(&data.q, &data.q, d, &qq)?
                + inner_mu(&data.p, &data.p, d, &qq)? / (params.rho * params.rho);
            (kept, total)
        };
        if total > 0.0 {
            let fraction = ((total - kept) / total).max(0.0);
            if fraction > TRUNCATION_THRESHOLD {
                ev.warning = Some(TruncationWarning { discarded_fraction: fraction });
            }
        }
        Ok(ev)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Temporal frequency Ω_m = ω_m √(γ/ρ).
    pub fn time_frequency(&self, m: usize) -> f64 {
        self.modes[m].omega * (self.gamma / self.rho).sqrt()
    }

    /// k-th time derivative of T_m at t.
    pub fn amplitude(&self, m: usize, t: f64, k: u32) -> f64 {
        let w = self.time_frequency(m);
        let z = Complex64::new(self.t0[m], -self.v0[m] / w)
            * Complex64::new(0.0, w).powu(k)
            * Complex64::from_polar(1.0, w * t);
        z.re
    }

    /// Σ_m ρṪ_m²/2 + γω_m²T_m²/2, the energy carried by the retained modes.
    pub fn modal_energy(&self) -> f64 {
        self.modes
            .iter()
            .zip(self.t0.iter().zip(&self.v0))
            .map(|(m, (a, b))| 0.5 * self.rho * b * b + 0.5 * self.gamma * m.omega * m.omega * a * a)
            .sum()
    }

    /// Cauchy data of the evolved field at time t.
    pub fn at(&self, t: f64) -> CauchyData {
        CauchyData {
            q: self.slice(t, 0, 1.0),
            p: self.slice(t, 1, self.rho),
        }
    }

    fn slice(&self, t: f64, kt: u32, scale: f64) -> MuFunction {
        let me = self.clone();
        let ell = self.d.ell();
        let v0 = self.d.boundary_factor(End::Zero) * scale * self.value(t, 0.0, 0, kt);
        let vl = self.d.boundary_factor(End::Ell) * scale * self.value(t, ell, 0, kt);
        MuFunction::smooth(v0, vl, ell, move |x, k| scale * me.value(t, x, k, kt))
    }

    /// The same solution with its time origin moved to t.
    pub fn shifted(&self, t: f64) -> Evolution {
        let n = self.len();
        let mut out = self.clone();
        out.t0 = (0..n).map(|m| self.amplitude(m, t, 0)).collect();
        out.v0 = (0..n).map(|m| self.amplitude(m, t, 1)).collect();
        out
    }
}

impl Field for Evolution {
    fn value(&self, t: f64, x: f64, kx: u32, kt: u32) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, m)| self.amplitude(i, t, kt) * m.x_deriv(x, kx) / m.gm)
            .sum()
    }
}

/// Evolve Cauchy data by `t` using the modes of `table`.
pub fn evolve(
    data: &CauchyData,
    t: f64,
    table: &ModeTable,
    params: &StringParams,
    d: &DerivedConstants,
    q: &Quadrature,
) -> Result<CauchyData> {
    Ok(Evolution::project(data, table, params, d, q)?.at(t))
}

/// ⟨P,P⟩_μ/(2ρ) + (γ/2)⟨dQ/dμ, dQ/dμ⟩_μ + (γ/2) Σ_j r_j/(1 − α_j r_j) Q(j)².
///
/// The boundary weight equals c_j/α_j when α_j > 0 and stays finite, equal to
/// r_j, when the endpoint carries no mass.
pub fn energy(data: &CauchyData, params: &StringParams, d: &DerivedConstants, q: &Quadrature) -> Result<f64> {
    let dq = rn_derivative(&data.q, d)?;
    let kinetic = inner_mu(&data.p, &data.p, d, q)? / (2.0 * params.rho);
    let strain = 0.5 * params.gamma * inner_mu(&dq, &dq, d, q)?;
    let springs: f64 = End::BOTH
        .iter()
        .map(|&j| 0.5 * params.gamma * d.robin_ratio(j) * data.q.boundary(j).powi(2))
        .sum();
    Ok(kinetic + strain + springs)
}

/// m_jQ̈(t,j) + k_jQ(t,j) + (−1)^(σ(j)+1) γ Q′(t,j).
pub fn boundary_ode_residual(field: &dyn Field, params: &StringParams, j: End, t: f64) -> f64 {
    let x = endpoint(j, params.ell);
    params.mass(j) * field.value(t, x, 0, 2)
        + params.spring(j) * field.value(t, x, 0, 0)
        + j.outward() * params.gamma * field.value(t, x, 1, 0)
}

/// ρQ̈ − γQ″ at an interior point.
pub fn wave_residual(field: &dyn Field, params: &StringParams, t: f64, x: f64) -> f64 {
    params.rho * field.value(t, x, 0, 2) - params.gamma * field.value(t, x, 2, 0)
}

fn endpoint(j: End, ell: f64) -> f64 {
    match j {
        End::Zero => 0.0,
        End::Ell => ell,
    }
}

/// Explicit endpoint data (q_j, p_j, λ_j). When absent these are eliminated
/// through C², C³ and C¹, so those residuals vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryState {
    pub q: [f64; 2],
    pub p: [f64; 2],
    pub lambda: [f64; 2],
}

/// Residuals of the constraint chain at both endpoints.
///
/// `c4_q[k][j]` is the order-k iterate of C⁴ acting on Q, `c4_p[k][j]` the same
/// acting on P/ρ; `scale_*` holds the sum of absolute values of the terms, or
/// for a decoupled end the largest magnitude of its single term along the slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintChain {
    pub c1: [f64; 2],
    pub c2: [f64; 2],
    pub c3: [f64; 2],
    pub c4_q: Vec<[f64; 2]>,
    pub c4_p: Vec<[f64; 2]>,
    pub scale_q: Vec<[f64; 2]>,
    pub scale_p: Vec<[f64; 2]>,
}

impl ConstraintChain {
    /// Largest C⁴ iterate relative to the size of its terms.
    pub fn max_relative(&self) -> f64 {
        let rel = |c: &[[f64; 2]], s: &[[f64; 2]]| {
            c.iter()
                .zip(s)
                .flat_map(|(c, s)| (0..2).map(move |j| if s[j] > 0.0 { c[j].abs() / s[j] } else { c[j].abs() }))
                .fold(0.0, f64::max)
        };
        rel(&self.c4_q, &self.scale_q).max(rel(&self.c4_p, &self.scale_p))
    }

    /// Largest of the first three constraints, in absolute terms.
    pub fn max_primary(&self) -> f64 {
        self.c1
            .iter()
            .chain(&self.c2)
            .chain(&self.c3)
            .fold(0.0, |a, b| a.max(b.abs()))
    }
}

/// Evaluate C¹…C³ and the C⁴ iterates of order 0..=k_max at time t.
///
/// With ε_j = 1 and m_j > 0 the order-k iterate is
/// γQ^(2k+2)/ρ + (−1)^(σ+1)(γ/m_j)Q^(2k+1) + (k_j/m_j)Q^(2k); a massless end uses
/// the Robin form (−1)^(σ+1)γQ^(2k+1) + k_jQ^(2k), and a decoupled end
/// (ε_j = 0) the Dirichlet consequence Q^(2k+2)(j) = 0.
pub fn constraint_chain(
    field: &dyn Field,
    t: f64,
    k_max: u32,
    params: &StringParams,
    explicit: Option<&BoundaryState>,
) -> ConstraintChain {
    let mut chain = ConstraintChain {
        c1: [0.0; 2],
        c2: [0.0; 2],
        c3: [0.0; 2],
        c4_q: Vec::new(),
        c4_p: Vec::new(),
        scale_q: Vec::new(),
        scale_p: Vec::new(),
    };
    for j in End::BOTH {
        let i = j.index();
        let x = endpoint(j, params.ell);
        let eps = params.eps(j);
        let m = params.mass(j);
        let q = field.value(t, x, 0, 0);
        let qx = field.value(t, x, 1, 0);
        let qt = field.value(t, x, 0, 1);
        if eps == 0.0 {
            chain.c2[i] = q;
            chain.c3[i] = qt;
        } else if let Some(b) = explicit {
            chain.c1[i] = b.lambda[i] - params.gamma * j.outward() * qx;
            chain.c2[i] = q - b.q[i];
            if m > 0.0 {
                chain.c3[i] = qt - b.p[i] / m;
            }
        }
    }
    for k in 0..=k_max {
        let mut row = [[0.0; 2]; 4];
        for j in End::BOTH {
            let i = j.index();
            let x = endpoint(j, params.ell);
            for (family, kt) in [(0usize, 0u32), (1, 1)] {
                let dq = |n: u32| field.value(t, x, n, kt);
                let terms: Vec<f64> = if params.eps(j) == 0.0 {
                    vec![params.gamma / params.rho * dq(2 * k + 2)]
                } else if params.mass(j) > 0.0 {
                    let m = params.mass(j);
                    vec![
                        params.gamma / params.rho * dq(2 * k + 2),
                        j.outward() * params.gamma / m * dq(2 * k + 1),
                        params.spring(j) / m * dq(2 * k),
                    ]
                } else {
                    vec![
                        j.outward() * params.gamma * dq(2 * k + 1),
                        params.spring(j) * dq(2 * k),
                    ]
                };
                row[2 * family][i] = terms.iter().sum();
                row[2 * family + 1][i] = if params.eps(j) == 0.0 {
                    // a lone term cannot be compared to itself; use its size across the slice
                    (0..=16)
                        .map(|s| {
                            let y = params.ell * s as f64 / 16.0;
                            (params.gamma / params.rho * field.value(t, y, 2 * k + 2, kt)).abs()
                        })
                        .fold(0.0, f64::max)
                } else {
                    terms.iter().map(|v| v.abs()).sum()
                };
            }
        }
        chain.c4_q.push(row[0]);
        chain.scale_q.push(row[1]);
        chain.c4_p.push(row[2]);
        chain.scale_p.push(row[3]);
    }
    chain
}

/// Endpoint positions and velocities of the two-mass system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoMassState {
    pub q: [f64; 2],
    pub v: [f64; 2],
}

/// Closed-form motion of two masses joined by a massless string (ρ = 0, k_j = 0).
///
/// The string acts as a spring of stiffness γ/ℓ, so the separation d = q_ℓ − q₀
/// oscillates at ω = √(γ/(μℓ)) with μ the reduced mass while the centre of
/// mass drifts uniformly.
pub fn two_mass_limit(params: &StringParams, ic: &TwoMassState, t: f64) -> Result<TwoMassState> {
    let StringParams { rho, gamma, ell, m0, ml, k0, kl, .. } = *params;
    if rho != 0.0 || k0 != 0.0 || kl != 0.0 {
        return Err(Error::InvalidLimit("the two-mass limit needs rho = 0 and k0 = kl = 0".into()));
    }
    if !(m0 > 0.0 && ml > 0.0 && gamma > 0.0 && ell > 0.0) {
        return Err(Error::InvalidLimit("the two-mass limit needs m0, ml, gamma, ell > 0".into()));
    }
    let total = m0 + ml;
    let mu = m0 * ml / total;
    let w = (gamma / (mu * ell)).sqrt();
    let c0 = (m0 * ic.q[0] + ml * ic.q[1]) / total;
    let cv = (m0 * ic.v[0] + ml * ic.v[1]) / total;
    let d0 = ic.q[1] - ic.q[0];
    let dv = ic.v[1] - ic.v[0];
    let (s, c) = (w * t).sin_cos();
    let d = d0 * c + dv / w * s;
    let dd = -d0 * w * s + dv * c;
    let masses = [m0, ml];
    let mut out = TwoMassState { q: [0.0; 2], v: [0.0; 2] };
    for j in End::BOTH {
        let f = j.outward() * mu / masses[j.index()];
        out.q[j.index()] = c0 + cv * t + f * d;
        out.v[j.index()] = cv + f * dd;
    }
    Ok(out)
}

/// Named initial data.
pub mod presets {
    use super::*;

    /// Gaussian bump a·exp(−((x − c)/w)²) with analytic derivatives of every order.
    pub fn gaussian(center: f64, width: f64, amplitude: f64, ell: f64) -> MuFunction {
        let rule = move |x: f64, k: u32| {
            let u = (x - center) / width;
            // d^k/du^k e^{-u²} = (−1)^k H_k(u) e^{-u²}
            let (mut h0, mut h1) = (1.0, 2.0 * u);
            let hk = match k {
                0 => h0,
                _ => {
                    for n in 1..k {
                        let h2 = 2.0 * u * h1 - 2.0 * n as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                }
            };
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            amplitude * sign * hk * (-u * u).exp() / width.powi(k as i32)
        };
        let v0 = rule(0.0, 0);
        let vl = rule(ell, 0);
        MuFunction::smooth(v0, vl, ell, rule)
    }

    /// Amplitude vectors with a single excited mode (1-based index).
    pub fn single_mode(n: usize, m: usize, amplitude: f64) -> (Vec<f64>, Vec<f64>) {
        let mut t0 = vec![0.0; n];
        if (1..=n).contains(&m) {
            t0[m - 1] = amplitude;
        }
        (t0, vec![0.0; n])
    }

    /// Equal-amplitude superposition of modes m1 and m2 (1-based).
    pub fn two_mode(n: usize, m1: usize, m2: usize, amplitude: f64) -> (Vec<f64>, Vec<f64>) {
        let (mut t0, v0) = single_mode(n, m1, amplitude);
        if (1..=n).contains(&m2) {
            t0[m2 - 1] += amplitude;
        }
        (t0, v0)
    }
}
