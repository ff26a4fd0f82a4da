//! Bogoliubov coefficients between space-like embeddings of the massless string.
//!
//! The field obeys φ_tt = φ_xx on [0,ℓ] with Dirichlet or Robin ends
//! (φ′(0) = r₀φ(0), φ′(ℓ) = −r_ℓφ(ℓ)). Modes are written in exponential form
//! X_k = (α⁺e^{iω_kx} + α⁻e^{−iω_kx})/c_k with ⟨X_k, X_k⟩ = 1/(2ω_k), and the
//! solutions are φ^±_k = e^{∓iω_kt}X_k.
//!
//! Cauchy data of a solution on an embedding σ ↦ (t(σ), x(σ)) are its value and
//! the momentum density p = x′φ_t + t′φ_x. Data from two different embeddings
//! are compared at equal σ through
//! pair(A on X₁, B on X₂) = i∫[conj(φ_A)p_B − φ_B conj(p_A)]dσ, and
//! β_lm = pair(φ⁺_m on X_F, φ⁻_l on X_I), γ_lm = pair(φ⁺_m on X_F, φ⁺_l on X_I).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::quadrature::Quadrature;
use crate::roots::roots_on_grid;
use crate::{par, Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Boundary condition at one end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EndCondition {
    Dirichlet,
    /// Robin with parameter r ≥ 0; r = 0 is Neumann.
    Robin(f64),
}

impl EndCondition {
    /// (α⁺, α⁻) at frequency ω.
    fn alpha(self, omega: f64) -> [C64; 2] {
        match self {
            EndCondition::Dirichlet => [C64::new(0.0, -0.5), C64::new(0.0, 0.5)],
            EndCondition::Robin(r) => [C64::new(omega, -r), C64::new(omega, r)],
        }
    }

    fn alpha_plus_deriv(self) -> C64 {
        match self {
            EndCondition::Dirichlet => C64::new(0.0, 0.0),
            EndCondition::Robin(_) => C64::new(1.0, 0.0),
        }
    }
}

/// One regular mode in exponential form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMode {
    pub k: usize,
    pub omega: f64,
    /// (α^{0+}, α^{0−})
    pub alpha0: [C64; 2],
    /// (α^{ℓ+}, α^{ℓ−})
    pub alphal: [C64; 2],
    pub c: f64,
}

impl ExpMode {
    /// X_k(x) and X_k′(x).
    pub fn eval(&self, x: f64) -> (C64, C64) {
        let e = C64::from_polar(1.0, self.omega * x);
        let (p, m) = (self.alpha0[0] * e, self.alpha0[1] * e.conj());
        ((p + m) / self.c, I * self.omega * (p - m) / self.c)
    }
}

/// Modes of a boundary-value problem, with the Neumann zero mode when present.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSet {
    pub ell: f64,
    pub ends: [EndCondition; 2],
    /// Q₀ = 1/√(2ℓ) when both ends are Neumann.
    pub zero: Option<f64>,
    pub modes: Vec<ExpMode>,
}

impl ModeSet {
    /// Mode labels in increasing frequency: 0 is the zero mode, k ≥ 1 the regular ones.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let start = if self.zero.is_some() { 0 } else { 1 };
        (start..).take(n.min(self.len())).collect()
    }

    pub fn len(&self) -> usize {
        self.modes.len() + usize::from(self.zero.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn omega(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.modes[k - 1].omega
        }
    }

    /// The solution φ^η_k.
    pub fn solution(&self, k: usize, eta: i8) -> Result<Solution> {
        let kind = if k == 0 {
            let q0 = self
                .zero
                .ok_or_else(|| Error::InvalidParams("no zero mode outside the Neumann case".into()))?;
            ModeKind::Zero(q0)
        } else {
            let m = self
                .modes
                .get(k - 1)
                .ok_or(Error::CutoffMismatch { left: k, right: self.modes.len() })?;
            ModeKind::Regular(*m)
        };
        Ok(Solution { kind, eta: f64::from(eta.signum()) })
    }
}

/// Im[e^{iωℓ} α^{0+} α^{ℓ+}], whose positive zeros are the frequencies.
pub fn frequency_function(omega: f64, ends: [EndCondition; 2], ell: f64) -> f64 {
    let a0 = ends[0].alpha(omega)[0];
    let al = ends[1].alpha(omega)[0];
    (C64::from_polar(1.0, omega * ell) * a0 * al).im
}

fn frequency_function_deriv(omega: f64, ends: [EndCondition; 2], ell: f64) -> f64 {
    let a0 = ends[0].alpha(omega)[0];
    let al = ends[1].alpha(omega)[0];
    let d = I * ell * a0 * al + ends[0].alpha_plus_deriv() * al + a0 * ends[1].alpha_plus_deriv();
    (C64::from_polar(1.0, omega * ell) * d).im
}

/// c² = 4ωℓ|α|² + 2 sin(ωℓ)(α²e^{iωℓ} + c.c.) with α = α^{0+}.
pub fn normalization_c(omega: f64, alpha: C64, ell: f64) -> f64 {
    let z = alpha * alpha * C64::from_polar(1.0, omega * ell);
    (4.0 * omega * ell * alpha.norm_sqr() + 4.0 * (omega * ell).sin() * z.re).sqrt()
}

/// First `count` regular modes, searched interval by interval on [kπ/ℓ, (k+1)π/ℓ].
pub fn exp_modes(ends: [EndCondition; 2], count: usize, ell: f64) -> Result<ModeSet> {
    if !(ell > 0.0) {
        return Err(Error::InvalidParams(format!("ell must be positive, got {ell}")));
    }
    for e in ends {
        if let EndCondition::Robin(r) = e {
            if !(r >= 0.0) {
                return Err(Error::InvalidParams(format!("Robin parameter must be >= 0, got {r}")));
            }
        }
    }
    let h = PI / ell;
    let floor = 1e-9 * h;
    let f = |w: f64| frequency_function(w, ends, ell);
    let df = |w: f64| frequency_function_deriv(w, ends, ell);
    let mut roots: Vec<f64> = Vec::with_capacity(count + 2);
    let mut next = 0usize;
    while roots.iter().filter(|&&w| w < next as f64 * h - floor).count() < count {
        let chunk = count.max(8);
        let found = par::map_range(chunk, |i| {
            let (lo, hi) = ((next + i) as f64 * h, (next + i + 1) as f64 * h);
            roots_on_grid(&f, &df, lo, hi, 64)
        });
        for r in found {
            roots.extend(r?.into_iter().filter(|&w| w > floor));
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10 * h);
        next += chunk;
    }
    let modes = roots
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(i, omega)| {
            let alpha0 = ends[0].alpha(omega);
            let alphal = ends[1].alpha(omega);
            ExpMode { k: i + 1, omega, alpha0, alphal, c: normalization_c(omega, alpha0[0], ell) }
        })
        .collect();
    let neumann = ends.iter().all(|e| *e == EndCondition::Robin(0.0));
    Ok(ModeSet {
        ell,
        ends,
        zero: neumann.then(|| 1.0 / (2.0 * ell).sqrt()),
        modes,
    })
}

#[derive(Debug, Clone, Copy)]
enum ModeKind {
    Zero(f64),
    Regular(ExpMode),
}

/// φ^η_k: e^{−iηω_kt}X_k, or (1 − iηt)Q₀ for the zero mode.
#[derive(Debug, Clone, Copy)]
pub struct Solution {
    kind: ModeKind,
    eta: f64,
}

impl Solution {
    pub fn omega(&self) -> f64 {
        match self.kind {
            ModeKind::Zero(_) => 0.0,
            ModeKind::Regular(m) => m.omega,
        }
    }

    /// (φ, φ_t, φ_x) at (t, x).
    pub fn eval(&self, t: f64, x: f64) -> (C64, C64, C64) {
        match self.kind {
            ModeKind::Zero(q0) => {
                let v = C64::new(1.0, -self.eta * t) * q0;
                (v, C64::new(0.0, -self.eta * q0), C64::new(0.0, 0.0))
            }
            ModeKind::Regular(m) => {
                let phase = C64::from_polar(1.0, -self.eta * m.omega * t);
                let (x0, x1) = m.eval(x);
                let v = phase * x0;
                (v, -I * self.eta * m.omega * v, phase * x1)
            }
        }
    }
}

/// Point of an embedding with its σ-derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingPoint {
    pub t: f64,
    pub dt: f64,
    pub x: f64,
    pub dx: f64,
}

type EmbeddingMap = Arc<dyn Fn(f64) -> EmbeddingPoint + Send + Sync>;

/// Space-like curve σ ↦ (t(σ), x(σ)), σ ∈ [0,ℓ], with x(0) = 0 and x(ℓ) = ℓ.
#[derive(Clone)]
pub struct Embedding {
    pub ell: f64,
    pub name: String,
    map: EmbeddingMap,
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Embedding").field("ell", &self.ell).field("name", &self.name).finish()
    }
}

impl Embedding {
    pub fn new(ell: f64, name: impl Into<String>, map: impl Fn(f64) -> EmbeddingPoint + Send + Sync + 'static) -> Self {
        Embedding { ell, name: name.into(), map: Arc::new(map) }
    }

    /// The slice t ≡ t0.
    pub fn flat(ell: f64, t0: f64) -> Self {
        Self::new(ell, format!("flat:{t0}"), move |s| EmbeddingPoint { t: t0, dt: 0.0, x: s, dx: 1.0 })
    }

    /// t = sσ(1 − σ/ℓ)²: slope s at x = 0, flat at x = ℓ.
    pub fn tilted(ell: f64, s: f64) -> Self {
        Self::new(ell, format!("tilted:{s}"), move |sig| {
            let u = sig / ell;
            EmbeddingPoint {
                t: s * sig * (1.0 - u).powi(2),
                dt: s * (1.0 - u) * (1.0 - 3.0 * u),
                x: sig,
                dx: 1.0,
            }
        })
    }

    /// t = A sin²(πσ/ℓ): curved inside, flat at both ends. Space-like for Aπ/ℓ < 1.
    pub fn bump(ell: f64, a: f64) -> Self {
        Self::new(ell, format!("bump:{a}"), move |sig| {
            let th = PI * sig / ell;
            EmbeddingPoint {
                t: a * th.sin().powi(2),
                dt: a * PI / ell * (2.0 * th).sin(),
                x: sig,
                dx: 1.0,
            }
        })
    }

    /// Preset from `NAME[:ARG]`: `flat[:t0]`, `tilted:s`, `bump:A`.
    pub fn preset(spec: &str, ell: f64) -> Result<Self> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let num = |default: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidParams(format!("bad preset argument '{a}' in '{spec}'"))),
                None => default.ok_or_else(|| Error::InvalidParams(format!("preset '{name}' needs an argument"))),
            }
        };
        let e = match name {
            "flat" => Embedding::flat(ell, num(Some(0.0))?),
            "tilted" => Embedding::tilted(ell, num(None)?),
            "bump" => Embedding::bump(ell, num(None)?),
            _ => return Err(Error::InvalidParams(format!("unknown embedding preset '{name}'"))),
        };
        e.validate()?;
        Ok(e)
    }

    pub fn at(&self, sigma: f64) -> EmbeddingPoint {
        (self.map)(sigma)
    }

    /// The same curve moved by `dt` in time.
    pub fn shifted(&self, dt: f64) -> Embedding {
        let f = self.map.clone();
        Self::new(self.ell, format!("{}+{dt}", self.name), move |s| {
            let p = f(s);
            EmbeddingPoint { t: p.t + dt, ..p }
        })
    }

    /// X∘φ for a monotone φ: [0,ℓ] → [0,ℓ] given as σ ↦ (φ(σ), φ′(σ)).
    pub fn reparametrize(&self, phi: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Embedding {
        let f = self.map.clone();
        Self::new(self.ell, format!("{}∘φ", self.name), move |s| {
            let (v, dv) = phi(s);
            let p = f(v);
            EmbeddingPoint { t: p.t, dt: p.dt * dv, x: p.x, dx: p.dx * dv }
        })
    }

    /// x′² − t′² > 0 and x′ > 0 on a 257-point grid, plus the endpoint anchoring.
    pub fn validate(&self) -> Result<()> {
        for i in 0..=256 {
            let s = self.ell * i as f64 / 256.0;
            let p = self.at(s);
            if !(p.dx > 0.0 && p.dx * p.dx - p.dt * p.dt > 0.0) {
                return Err(Error::NotSpacelike { sigma: s });
            }
        }
        let (a, b) = (self.at(0.0).x, self.at(self.ell).x);
        if a.abs() > 1e-12 || (b - self.ell).abs() > 1e-12 * self.ell {
            return Err(Error::InvalidParams(format!(
                "embedding must satisfy x(0) = 0 and x(ell) = ell, got {a} and {b}"
            )));
        }
        Ok(())
    }

    /// t′/x′ at σ = 0 and σ = ℓ.
    pub fn slopes(&self) -> [f64; 2] {
        let s = |p: EmbeddingPoint| p.dt / p.dx;
        [s(self.at(0.0)), s(self.at(self.ell))]
    }
}

/// Starting panel count for an integrand oscillating with ω_l + ω_m:
/// max(32, 4(ω_l + ω_m)ℓ/π) Gauss nodes, 32 per panel.
fn panels_for(omega_sum: f64, ell: f64) -> usize {
    let nodes = (4.0 * omega_sum * ell / PI).max(32.0);
    (nodes / 32.0).ceil() as usize
}

fn data_on(sol: &Solution, x: &Embedding, sigma: f64) -> (C64, C64) {
    let p = x.at(sigma);
    let (v, vt, vx) = sol.eval(p.t, p.x);
    (v, p.dx * vt + p.dt * vx)
}

/// pair(A on X_a, B on X_b) = i∫[conj(φ_A)p_B − φ_B conj(p_A)]dσ.
pub fn pair(a: &Solution, xa: &Embedding, b: &Solution, xb: &Embedding, q: &Quadrature) -> Result<C64> {
    let ell = xa.ell;
    let f = |s: f64| {
        let (va, pa) = data_on(a, xa, s);
        let (vb, pb) = data_on(b, xb, s);
        I * (va.conj() * pb - vb * pa.conj())
    };
    let qq = Quadrature { panels: q.panels.max(panels_for(a.omega() + b.omega(), ell)), ..*q };
    qq.integrate(&f, 0.0, ell)
}

/// ⟪φ₁, φ₂⟫ evaluated on a single embedding.
pub fn kg_pairing(a: &Solution, b: &Solution, x: &Embedding, q: &Quadrature) -> Result<C64> {
    pair(a, x, b, x, q)
}

/// β_lm by direct quadrature of the pairing.
pub fn beta_direct(ms: &ModeSet, xi: &Embedding, xf: &Embedding, l: usize, m: usize, q: &Quadrature) -> Result<C64> {
    pair(&ms.solution(m, 1)?, xf, &ms.solution(l, -1)?, xi, q)
}

/// γ_lm = pair(φ⁺_m on X_F, φ⁺_l on X_I).
pub fn gamma(ms: &ModeSet, xi: &Embedding, xf: &Embedding, l: usize, m: usize, q: &Quadrature) -> Result<C64> {
    pair(&ms.solution(m, 1)?, xf, &ms.solution(l, 1)?, xi, q)
}

/// Light-cone coordinate t + s·x and its σ-derivative.
fn cone(p: &EmbeddingPoint, s: f64) -> (f64, f64) {
    (p.t + s * p.x, p.dt + s * p.dx)
}

/// I_lm with x_I → s_I x_I and x_F → s_F x_F:
/// ∫[ω_l u_I′ − ω_m u_F′] e^{i(ω_l u_I + ω_m u_F)} dσ, u = t + s x.
fn i_integral(wl: f64, wm: f64, xi: &Embedding, xf: &Embedding, s: f64, q: &Quadrature) -> Result<C64> {
    let f = |sig: f64| {
        let (ui, dui) = cone(&xi.at(sig), s);
        let (uf, duf) = cone(&xf.at(sig), s);
        C64::from_polar(wl * dui - wm * duf, 0.0) * C64::from_polar(1.0, wl * ui + wm * uf)
    };
    let qq = Quadrature { panels: q.panels.max(panels_for(wl + wm, xi.ell)), ..*q };
    qq.integrate(&f, 0.0, xi.ell)
}

/// Leading boundary term of I: −i[(ω_l u_I′ − ω_m u_F′)/(ω_l u_I′ + ω_m u_F′) e^{i(ω_l u_I + ω_m u_F)}]₀^ℓ.
fn i_leading(wl: f64, wm: f64, xi: &Embedding, xf: &Embedding, s: f64) -> C64 {
    let at = |sig: f64| {
        let (ui, dui) = cone(&xi.at(sig), s);
        let (uf, duf) = cone(&xf.at(sig), s);
        (wl * dui - wm * duf) / (wl * dui + wm * duf) * C64::from_polar(1.0, wl * ui + wm * uf)
    };
    -I * (at(xi.ell) - at(0.0))
}

/// ∫[ω_a(t_A′ + x_A′) + ω_b(t_B′ − x_B′)] e^{i f} dσ = −i(e^{if(ℓ)} − e^{if(0)}),
/// f = ω_a(t_A + x_A) + ω_b(t_B − x_B).
fn j_integral(wa: f64, xa: &Embedding, wb: f64, xb: &Embedding) -> C64 {
    let f = |sig: f64| wa * cone(&xa.at(sig), 1.0).0 + wb * cone(&xb.at(sig), -1.0).0;
    -I * (C64::from_polar(1.0, f(xa.ell)) - C64::from_polar(1.0, f(0.0)))
}

fn four_terms(ms: &ModeSet, l: usize, m: usize, ipp: C64, imm: C64, xi: &Embedding, xf: &Embedding) -> C64 {
    let (a, b) = (&ms.modes[l - 1], &ms.modes[m - 1]);
    let jlm = j_integral(a.omega, xi, b.omega, xf);
    let jml = j_integral(b.omega, xf, a.omega, xi);
    let [lp, lm] = a.alpha0;
    let [mp, mm] = b.alpha0;
    (-(lp * mp) * ipp - lp * mm * jlm + lm * mp * jml + lm * mm * imm) / (a.c * b.c)
}

/// β_lm from the four-integral formula: J in closed form, I by quadrature.
///
/// Under the pairing convention of this module the result is the negative of
/// the expression α⁺α⁺I + α⁺α⁻J_lm − α⁻α⁺J_ml − α⁻α⁻I(−x); rows or columns of
/// the Neumann zero mode fall back to [`beta_direct`].
pub fn beta(ms: &ModeSet, xi: &Embedding, xf: &Embedding, l: usize, m: usize, q: &Quadrature) -> Result<C64> {
    if l == 0 || m == 0 {
        return beta_direct(ms, xi, xf, l, m, q);
    }
    let (wl, wm) = (ms.omega(l), ms.omega(m));
    let ipp = i_integral(wl, wm, xi, xf, 1.0, q)?;
    let imm = i_integral(wl, wm, xi, xf, -1.0, q)?;
    Ok(four_terms(ms, l, m, ipp, imm, xi, xf))
}

/// β_lm with each I replaced by its integration-by-parts boundary term; the
/// neglected remainder is O(1/(ω_l + ω_m)) relative to the kept part.
pub fn beta_leading(ms: &ModeSet, xi: &Embedding, xf: &Embedding, l: usize, m: usize) -> Result<C64> {
    if l == 0 || m == 0 || l > ms.modes.len() || m > ms.modes.len() {
        return Err(Error::InvalidParams("beta_leading needs regular modes".into()));
    }
    let (wl, wm) = (ms.omega(l), ms.omega(m));
    let ipp = i_leading(wl, wm, xi, xf, 1.0);
    let imm = i_leading(wl, wm, xi, xf, -1.0);
    Ok(four_terms(ms, l, m, ipp, imm, xi, xf))
}

/// Pointwise quantities of the asymptotic β analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BogoliubovKernel {
    pub n_i: f64,
    pub n_f: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub f_tau: f64,
}

pub fn kernel_quantities(
    xi: &Embedding,
    xf: &Embedding,
    sigma: f64,
    omega_l: f64,
    omega_m: f64,
) -> Result<BogoliubovKernel> {
    let (p, q) = (xi.at(sigma), xf.at(sigma));
    let tau = omega_m / (omega_l + omega_m);
    let n_i = p.dx * p.dx - p.dt * p.dt;
    let n_f = q.dx * q.dx - q.dt * q.dt;
    let a = p.dx * q.dx - p.dt * q.dt;
    let b = p.dt * q.dx - q.dt * p.dx;
    let mx = p.dx * (1.0 - tau) + q.dx * tau;
    let mt = p.dt * (1.0 - tau) + q.dt * tau;
    let inv_f = mx * mx - mt * mt;
    if !(n_i > 0.0 && n_f > 0.0 && a > 0.0 && inv_f > 0.0) {
        return Err(Error::NotSpacelike { sigma });
    }
    Ok(BogoliubovKernel { n_i, n_f, a, b, tau, f_tau: 1.0 / inv_f })
}

/// n×n matrix of β_lm over the first n labels, rows l and columns m.
pub fn beta_matrix(ms: &ModeSet, xi: &Embedding, xf: &Embedding, n: usize, q: &Quadrature) -> Result<Vec<Vec<C64>>> {
    coefficient_matrix(ms, xi, xf, n, q, beta)
}

pub fn gamma_matrix(ms: &ModeSet, xi: &Embedding, xf: &Embedding, n: usize, q: &Quadrature) -> Result<Vec<Vec<C64>>> {
    coefficient_matrix(ms, xi, xf, n, q, gamma)
}

type Coefficient = fn(&ModeSet, &Embedding, &Embedding, usize, usize, &Quadrature) -> Result<C64>;

fn coefficient_matrix(
    ms: &ModeSet,
    xi: &Embedding,
    xf: &Embedding,
    n: usize,
    q: &Quadrature,
    f: Coefficient,
) -> Result<Vec<Vec<C64>>> {
    let labels = ms.labels(n);
    let n = labels.len();
    let flat = par::map_range(n * n, |k| f(ms, xi, xf, labels[k / n], labels[k % n], q))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(flat.chunks(n).map(|r| r.to_vec()).collect())
}

/// S_N = Σ_{l,m≤N} |β_lm|² for each N in `ns`, accumulated in index order.
pub fn partial_sums(beta: &[Vec<C64>], ns: &[usize]) -> Vec<f64> {
    ns.iter()
        .map(|&n| {
            let n = n.min(beta.len());
            beta[..n].iter().map(|row| row[..n].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Unitary,
    NonUnitary,
}

/// Slope-test decision plus the partial-sum evidence behind it.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub decision: Decision,
    /// t′/x′ of X_I and X_F at σ = 0 and σ = ℓ.
    pub slopes_i: [f64; 2],
    pub slopes_f: [f64; 2],
    pub ns: Vec<usize>,
    pub sums: Vec<f64>,
    /// S_{2N} − S_N for consecutive entries of `ns`.
    pub increments: Vec<f64>,
    /// 1e−4 · S_{N₀}.
    pub floor: f64,
}

impl Classification {
    /// Every dyadic increment stays at or above the floor, and the floor is positive.
    pub fn increments_bounded_below(&self) -> bool {
        self.floor > 0.0 && self.increments.iter().all(|&d| d >= self.floor)
    }

    /// No dyadic increment exceeds the previous one. Band-limited pairs reach
    /// exact zeros, so equality is allowed.
    pub fn increments_non_increasing(&self) -> bool {
        self.increments.windows(2).all(|w| w[1] <= w[0])
    }

    /// Whether the numerical evidence points the same way as the slope test.
    pub fn evidence_agrees(&self) -> bool {
        match self.decision {
            Decision::NonUnitary => self.increments_bounded_below(),
            Decision::Unitary => !self.increments_bounded_below(),
        }
    }
}

pub const SLOPE_TOL: f64 = 1e-10;

/// Decide unitary implementability from the boundary slopes and gather S_N for
/// the dyadic list `ns` (e.g. 20, 40, 80, 160) from one β matrix.
pub fn unitarity_classification(
    xi: &Embedding,
    xf: &Embedding,
    ms: &ModeSet,
    ns: &[usize],
    q: &Quadrature,
) -> Result<Classification> {
    xi.validate()?;
    xf.validate()?;
    let (si, sf) = (xi.slopes(), xf.slopes());
    let matched = (0..2).all(|j| (si[j] - sf[j]).abs() <= SLOPE_TOL);
    let nmax = ns.iter().copied().max().unwrap_or(0);
    let b = beta_matrix(ms, xi, xf, nmax, q)?;
    let sums = partial_sums(&b, ns);
    let increments = sums.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(Classification {
        decision: if matched { Decision::Unitary } else { Decision::NonUnitary },
        slopes_i: si,
        slopes_f: sf,
        ns: ns.to_vec(),
        floor: 1e-4 * sums.first().copied().unwrap_or(0.0),
        sums,
        increments,
    })
}

/// Transport mode coefficients (a⁺_l, a⁻_l) from X_I to X_F and back with n×n
/// truncations, returning the largest coefficient change.
///
/// With Φ = Σ a⁺φ⁺ + a⁻φ⁻, the image has b⁺_m = Σ_l a⁺_l γ_lm + a⁻_l β_lm and
/// b⁻_m = Σ_l a⁺_l conj(β_lm) + a⁻_l conj(γ_lm).
pub fn transport_closure(
    ms: &ModeSet,
    xi: &Embedding,
    xf: &Embedding,
    n: usize,
    plus: &[C64],
    minus: &[C64],
    q: &Quadrature,
) -> Result<f64> {
    let step = |x1: &Embedding, x2: &Embedding, p: &[C64], m: &[C64]| -> Result<(Vec<C64>, Vec<C64>)> {
        let b = beta_matrix(ms, x1, x2, n, q)?;
        let g = gamma_matrix(ms, x1, x2, n, q)?;
        let k = b.len();
        let pad = |v: &[C64]| (0..k).map(|i| v.get(i).copied().unwrap_or_default()).collect::<Vec<_>>();
        let (p, m) = (pad(p), pad(m));
        let bp = (0..k).map(|j| (0..k).map(|l| p[l] * g[l][j] + m[l] * b[l][j]).sum()).collect();
        let bm = (0..k)
            .map(|j| (0..k).map(|l| p[l] * b[l][j].conj() + m[l] * g[l][j].conj()).sum())
            .collect();
        Ok((bp, bm))
    };
    let (fp, fm) = step(xi, xf, plus, minus)?;
    let (bp, bm) = step(xf, xi, &fp, &fm)?;
    let err = |back: &[C64], orig: &[C64]| {
        back.iter()
            .enumerate()
            .map(|(i, z)| (z - orig.get(i).copied().unwrap_or_default()).norm())
            .fold(0.0, f64::max)
    };
    Ok(err(&bp, plus).max(err(&bm, minus)))
}
