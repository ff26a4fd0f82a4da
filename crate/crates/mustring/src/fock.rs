//! Truncated symmetric Fock space over the positive-frequency modes.
//!
//! One-particle vectors are coefficient lists in the orthonormal basis
//! X̃⁺_n = X̂_n/√(2ω_n). Fock states are sparse maps from occupation tuples to
//! amplitudes. Basis states |n⟩ are unnormalized symmetric products, so
//! ⟨n|n⟩ = Π n_i! and ⟨ε(v), ε(w)⟩ = e^⟨v,w⟩ holds exactly before truncation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dynamics::Evolution;
use crate::model::{DerivedConstants, End};
use crate::spectrum::ModeTable;
use crate::{Error, Result, C64};

/// Coefficients ψ_n in the basis X̃⁺_n.
#[derive(Debug, Clone, PartialEq)]
pub struct OneParticleVector(pub Vec<C64>);

impl OneParticleVector {
    pub fn zero(m: usize) -> Self {
        OneParticleVector(vec![C64::new(0.0, 0.0); m])
    }

    /// The basis vector X̃⁺_n (0-based).
    pub fn basis(m: usize, n: usize) -> Self {
        let mut v = Self::zero(m);
        v.0[n] = C64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, a: C64) -> Self {
        OneParticleVector(self.0.iter().map(|z| z * a).collect())
    }

    /// Apply a square matrix given row by row.
    pub fn apply(&self, t: &[Vec<C64>]) -> Self {
        OneParticleVector(
            t.iter()
                .map(|row| row.iter().zip(&self.0).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    /// e^{−ith} for h diagonal with eigenvalues `h`.
    pub fn evolve(&self, h: &[f64], t: f64) -> Self {
        OneParticleVector(
            self.0
                .iter()
                .zip(h)
                .map(|(z, w)| z * C64::from_polar(1.0, -w * t))
                .collect(),
        )
    }
}

/// ⟨v, w⟩₊, antilinear in v.
pub fn inner_plus(v: &OneParticleVector, w: &OneParticleVector) -> Result<C64> {
    if v.len() != w.len() {
        return Err(Error::CutoffMismatch { left: v.len(), right: w.len() });
    }
    Ok(v.0.iter().zip(&w.0).map(|(a, b)| a.conj() * b).sum())
}

/// ⟨Q₁, Q₂⟩₊ = 2 Σ conj(Q₁ₙ) ω_n Q₂ₙ in terms of X̂-coefficients.
pub fn inner_plus_q(q1: &[C64], q2: &[C64], omegas: &[f64]) -> C64 {
    q1.iter()
        .zip(q2)
        .zip(omegas)
        .map(|((a, b), w)| 2.0 * w * a.conj() * b)
        .sum()
}

/// Positive and negative frequency parts of complex mode data.
///
/// With Q_n the X̂-coefficients of the displacement, V_n those of the velocity
/// and Ω_n the time frequencies, Q⁺ = (Q − iV/Ω)/2 and Q⁻ = (Q + iV/Ω)/2. Data
/// with V = iΩQ have no negative part.
pub fn split_parts(q: &[C64], v: &[C64], time_freqs: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let i = C64::new(0.0, 1.0);
    q.iter()
        .zip(v)
        .zip(time_freqs)
        .map(|((q, v), w)| ((q - i * v / w) * 0.5, (q + i * v / w) * 0.5))
        .unzip()
}

/// Q⁺ written in the X̃⁺ basis: ψ_n = √(2ω_n) Q⁺_n.
pub fn plus_vector(q_plus: &[C64], omegas: &[f64]) -> OneParticleVector {
    OneParticleVector(
        q_plus
            .iter()
            .zip(omegas)
            .map(|(z, w)| z * (2.0 * w).sqrt())
            .collect(),
    )
}

/// One-particle label of real Cauchy data given by its mode evolution.
pub fn positive_frequency_split(ev: &Evolution) -> OneParticleVector {
    let q: Vec<C64> = ev.t0.iter().map(|&a| C64::new(a, 0.0)).collect();
    let v: Vec<C64> = ev.v0.iter().map(|&a| C64::new(a, 0.0)).collect();
    let freqs: Vec<f64> = (0..ev.len()).map(|m| ev.time_frequency(m)).collect();
    let omegas: Vec<f64> = ev.modes().iter().map(|m| m.omega).collect();
    let (plus, _) = split_parts(&q, &v, &freqs);
    plus_vector(&plus, &omegas)
}

/// Real mode data (T_n, Ṫ_n) from a one-particle label: Q = 2 Re Q⁺, V = −2Ω Im Q⁺.
pub fn reassemble(psi: &OneParticleVector, ev: &Evolution) -> (Vec<f64>, Vec<f64>) {
    psi.0
        .iter()
        .enumerate()
        .map(|(n, z)| {
            let qp = z / (2.0 * ev.modes()[n].omega).sqrt();
            (2.0 * qp.re, -2.0 * ev.time_frequency(n) * qp.im)
        })
        .unzip()
}

/// Occupation tuple.
pub type Occupation = Vec<u32>;

/// Truncated Fock vector: at most `nmax` particles in `modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub modes: usize,
    pub nmax: u32,
    pub amps: BTreeMap<Occupation, C64>,
    /// Set when an operator produced amplitude above the particle cutoff.
    pub overflow: bool,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl FockState {
    pub fn vacuum(modes: usize, nmax: u32) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(vec![0; modes], C64::new(1.0, 0.0));
        FockState { modes, nmax, amps, overflow: false }
    }

    pub fn empty(modes: usize, nmax: u32) -> Self {
        FockState { modes, nmax, amps: BTreeMap::new(), overflow: false }
    }

    /// A single occupation-basis state.
    pub fn basis(n: Occupation, nmax: u32) -> Self {
        let mut s = Self::empty(n.len(), nmax);
        s.amps.insert(n, C64::new(1.0, 0.0));
        s
    }

    /// Every occupation tuple with total at most `nmax`, in lexicographic order.
    pub fn occupations(modes: usize, nmax: u32) -> Vec<Occupation> {
        fn rec(prefix: &mut Vec<u32>, left: u32, modes: usize, out: &mut Vec<Occupation>) {
            if prefix.len() == modes {
                out.push(prefix.clone());
                return;
            }
            for k in 0..=left {
                prefix.push(k);
                rec(prefix, left - k, modes, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::with_capacity(modes), nmax, modes, &mut out);
        out
    }

    pub fn add_amp(&mut self, n: Occupation, a: C64) {
        *self.amps.entry(n).or_insert(C64::new(0.0, 0.0)) += a;
    }

    fn check(&self, other: &FockState) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::CutoffMismatch { left: self.modes, right: other.modes });
        }
        Ok(())
    }

    /// ⟨self, other⟩ with ⟨n|n⟩ = Π n_i!.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        self.check(other)?;
        Ok(self
            .amps
            .iter()
            .filter_map(|(n, a)| other.amps.get(n).map(|b| a.conj() * b * weight(n)))
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|(n, a)| a.norm_sqr() * weight(n)).sum()
    }

    pub fn scale(&self, c: C64) -> FockState {
        let mut out = self.clone();
        out.amps.values_mut().for_each(|a| *a *= c);
        out
    }

    /// a·self + b·other.
    pub fn combine(&self, a: C64, b: C64, other: &FockState) -> Result<FockState> {
        self.check(other)?;
        let mut out = self.scale(a);
        for (n, v) in &other.amps {
            out.add_amp(n.clone(), b * v);
        }
        out.overflow |= other.overflow;
        Ok(out)
    }

    /// ‖self − other‖ in the Fock norm.
    pub fn distance(&self, other: &FockState) -> Result<f64> {
        Ok(self.combine(C64::new(1.0, 0.0), C64::new(-1.0, 0.0), other)?.norm_sq().sqrt())
    }

    /// Total particle number of the highest occupied component.
    pub fn max_particles(&self) -> u32 {
        self.amps
            .iter()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(n, _)| n.iter().sum())
            .max()
            .unwrap_or(0)
    }
}

fn weight(n: &[u32]) -> f64 {
    n.iter().map(|&k| factorial(k)).product()
}

/// a*(u)|n⟩ = Σ u_i |n + e_i⟩. Terms above the cutoff are dropped and flagged.
pub fn create(u: &OneParticleVector, s: &FockState) -> Result<FockState> {
    if u.len() != s.modes {
        return Err(Error::CutoffMismatch { left: u.len(), right: s.modes });
    }
    let mut out = FockState::empty(s.modes, s.nmax);
    out.overflow = s.overflow;
    for (n, a) in &s.amps {
        let total: u32 = n.iter().sum();
        for (i, ui) in u.0.iter().enumerate() {
            if *ui == C64::new(0.0, 0.0) {
                continue;
            }
            if total + 1 > s.nmax {
                out.overflow = true;
                continue;
            }
            let mut m = n.clone();
            m[i] += 1;
            out.add_amp(m, a * ui);
        }
    }
    Ok(out)
}

/// a(u)|n⟩ = Σ n_i conj(u_i) |n − e_i⟩.
pub fn annihilate(u: &OneParticleVector, s: &FockState) -> Result<FockState> {
    if u.len() != s.modes {
        return Err(Error::CutoffMismatch { left: u.len(), right: s.modes });
    }
    let mut out = FockState::empty(s.modes, s.nmax);
    out.overflow = s.overflow;
    for (n, a) in &s.amps {
        for (i, ui) in u.0.iter().enumerate() {
            if n[i] == 0 {
                continue;
            }
            let mut m = n.clone();
            m[i] -= 1;
            out.add_amp(m, a * ui.conj() * f64::from(n[i]));
        }
    }
    Ok(out)
}

/// Σ_{k > nmax} x^k/k!, summed directly to avoid cancellation.
pub fn coherent_tail(x: f64, nmax: u32) -> f64 {
    let mut term: f64 = (1..=nmax).fold(1.0, |t, k| t * x / f64::from(k));
    let mut sum = 0.0;
    let mut k = nmax;
    loop {
        k += 1;
        term *= x / f64::from(k);
        sum += term;
        if term <= 1e-17 * sum || term == 0.0 {
            return sum;
        }
    }
}

/// Smallest N_max whose coherent-state tail at |v|² = `x` is at most `tol`.
pub fn nmax_for(x: f64, tol: f64) -> u32 {
    (0..).find(|&n| coherent_tail(x, n) <= tol).unwrap_or(0)
}

/// ε(v) = Σ_n Π v_i^{n_i}/n_i! |n⟩ truncated at `nmax` particles.
///
/// Fails when the neglected norm e^{|v|²} − Σ_{k≤nmax}|v|^{2k}/k! exceeds `tol`.
pub fn coherent_state(v: &OneParticleVector, nmax: u32, tol: f64) -> Result<FockState> {
    let x = v.norm_sq();
    let tail = coherent_tail(x, nmax);
    if tail > tol {
        return Err(Error::TruncationTooTight { nmax: nmax as usize, tail, tol });
    }
    let mut s = FockState::empty(v.len(), nmax);
    for n in FockState::occupations(v.len(), nmax) {
        let mut a = C64::new(1.0, 0.0);
        for (k, z) in n.iter().zip(&v.0) {
            a *= z.powu(*k) / factorial(*k);
        }
        if a != C64::new(0.0, 0.0) {
            s.amps.insert(n, a);
        }
    }
    Ok(s)
}

/// F(T): each mode factor e_i is replaced by T e_i = Σ_j T_ji e_j.
///
/// `t` is given row by row (t[j][i] = T_ji). Particle number is preserved, so
/// nothing is lost to the cutoff.
pub fn second_quantize_map(t: &[Vec<C64>], s: &FockState) -> Result<FockState> {
    if t.len() != s.modes || t.iter().any(|r| r.len() != s.modes) {
        return Err(Error::CutoffMismatch { left: t.len(), right: s.modes });
    }
    let m = s.modes;
    let mut out = FockState::empty(m, s.nmax);
    out.overflow = s.overflow;
    for (n, a) in &s.amps {
        let mut poly: BTreeMap<Occupation, C64> = BTreeMap::new();
        poly.insert(vec![0; m], *a);
        for (i, &ni) in n.iter().enumerate() {
            for _ in 0..ni {
                let mut next = BTreeMap::new();
                for (mono, c) in &poly {
                    for (j, row) in t.iter().enumerate() {
                        let tji = row[i];
                        if tji == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut k = mono.clone();
                        k[j] += 1;
                        *next.entry(k).or_insert(C64::new(0.0, 0.0)) += c * tji;
                    }
                }
                poly = next;
            }
        }
        for (k, c) in poly {
            out.add_amp(k, c);
        }
    }
    Ok(out)
}

/// H_h|n⟩ = (Σ n_i h_i)|n⟩ for h diagonal; h = 1 gives the number operator.
pub fn lifted_hamiltonian(h: &[f64], s: &FockState) -> FockState {
    let mut out = s.clone();
    for (n, a) in out.amps.iter_mut() {
        *a *= n.iter().zip(h).map(|(&k, w)| f64::from(k) * w).sum::<f64>();
    }
    out
}

/// F(e^{−ith}) applied to a state.
pub fn evolve(h: &[f64], t: f64, s: &FockState) -> FockState {
    let mut out = s.clone();
    for (n, a) in out.amps.iter_mut() {
        let e: f64 = n.iter().zip(h).map(|(&k, w)| f64::from(k) * w).sum();
        *a *= C64::from_polar(1.0, -e * t);
    }
    out
}

/// Left trace γ₀ of each basis vector X̃⁺_n: X_n(0)/(g_n √(2ω_n)).
pub fn basis_traces(table: &ModeTable, n: usize) -> Vec<f64> {
    table.modes[..n.min(table.len())]
        .iter()
        .map(|m| m.trace[End::Zero.index()] / (2.0 * m.omega).sqrt())
        .collect()
}

/// Boundary rate of a one-particle label evolved by e^{−ith}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRate {
    /// γ₀(v_t).
    pub trace: C64,
    /// ω₀ = γ₀(hv_t)/γ₀(v_t).
    pub omega0: C64,
    /// d/dt ‖ε(γ₀v_t)‖² = 2 e^{|γ₀v_t|²} |γ₀v_t|² Im ω₀.
    pub rate: f64,
}

/// γ₀(v_t) for v_t = e^{−ith}v₀.
pub fn boundary_trace(v0: &OneParticleVector, t: f64, table: &ModeTable) -> Result<C64> {
    let (z, _) = traces(v0, t, table)?;
    Ok(z)
}

fn traces(v0: &OneParticleVector, t: f64, table: &ModeTable) -> Result<(C64, C64)> {
    if v0.len() > table.len() {
        return Err(Error::CutoffMismatch { left: v0.len(), right: table.len() });
    }
    let tau = basis_traces(table, v0.len());
    let mut z = C64::new(0.0, 0.0);
    let mut hz = C64::new(0.0, 0.0);
    for ((psi, m), tr) in v0.0.iter().zip(&table.modes).zip(&tau) {
        let c = psi * C64::from_polar(1.0, -m.omega * t) * tr;
        z += c;
        hz += c * m.omega;
    }
    Ok((z, hz))
}

pub fn trace_nonunitarity_rate(v0: &OneParticleVector, t: f64, table: &ModeTable) -> Result<TraceRate> {
    let (z, hz) = traces(v0, t, table)?;
    let scale: f64 = v0.0.iter().map(|c| c.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    if z.norm() <= 1e-300 || z.norm() < 1e-14 * scale {
        return Err(Error::TraceVanishes);
    }
    let omega0 = hz / z;
    let r2 = z.norm_sqr();
    Ok(TraceRate {
        trace: z,
        omega0,
        rate: 2.0 * r2.exp() * r2 * omega0.im,
    })
}

/// Coefficients of F = (1,0,0) against X̃⁺_n and their partial sums.
#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    /// 4α₀/(πμ₀).
    pub k: f64,
    /// ⟨F, X̃⁺_n⟩₊ = √(2α₀μ₀) ω_n^{3/2}/g_n for n = 1..N.
    pub coeffs: Vec<f64>,
    /// S_N = Σ_{n≤N} ⟨F, X̃⁺_n⟩₊².
    pub partial: Vec<f64>,
}

impl FactorizationReport {
    /// n·⟨F, X̃⁺_n⟩₊² divided by its limit K (1-based n).
    pub fn leading_ratio(&self, n: usize) -> f64 {
        n as f64 * self.coeffs[n - 1].powi(2) / self.k
    }

    /// S_N/(K ln N).
    pub fn log_ratio(&self, n: usize) -> f64 {
        self.partial[n - 1] / (self.k * (n as f64).ln())
    }

    /// S_N/(K H_N) with H_N the harmonic number.
    pub fn harmonic_ratio(&self, n: usize) -> f64 {
        let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        self.partial[n - 1] / (self.k * h)
    }
}

pub fn factorization_diagnostic(table: &ModeTable, d: &DerivedConstants, n: usize) -> Result<FactorizationReport> {
    let (a0, mu0) = (d.alpha(End::Zero), d.mu(End::Zero));
    if mu0 <= 0.0 {
        return Err(Error::InvalidParams("the factorization diagnostic needs m0 > 0".into()));
    }
    if n > table.len() {
        return Err(Error::CutoffMismatch { left: n, right: table.len() });
    }
    let pref = (2.0 * a0 * mu0).sqrt();
    let coeffs: Vec<f64> = table.modes[..n]
        .iter()
        .map(|m| pref * m.omega.powf(1.5) / m.gm)
        .collect();
    let partial = coeffs
        .iter()
        .scan(0.0, |s, c| {
            *s += c * c;
            Some(*s)
        })
        .collect();
    Ok(FactorizationReport {
        k: 4.0 * a0 / (std::f64::consts::PI * mu0),
        coeffs,
        partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_constants, StringParams};
    use crate::mu_space::{inner_mu, MuFunction};
    use crate::quadrature::Quadrature;
    use crate::spectrum::{find_modes, mode_functions};
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_vec(rng: &mut impl Rng, m: usize, scale: f64) -> OneParticleVector {
        OneParticleVector((0..m).map(|_| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))).collect())
    }

    fn random_state(rng: &mut impl Rng, m: usize, nmax: u32, upto: u32) -> FockState {
        let mut s = FockState::empty(m, nmax);
        for n in FockState::occupations(m, upto) {
            s.amps.insert(n, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        s
    }

    fn measure_params() -> StringParams {
        StringParams { m0: 0.5, ml: 0.5, k0: 0.2, kl: 0.2, ..Default::default() }
    }

    #[test]
    fn occupations_count() {
        // C(M + N, N)
        assert_eq!(FockState::occupations(3, 4).len(), 35);
        assert_eq!(FockState::occupations(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn vacuum_rules() {
        let u = OneParticleVector(vec![c(0.3, 0.1), c(-1.0, 0.5)]);
        let vac = FockState::vacuum(2, 3);
        assert!(annihilate(&u, &vac).unwrap().norm_sq() == 0.0);
        let one = create(&u, &vac).unwrap();
        assert_eq!(one.amps[&vec![1, 0]], u.0[0]);
        assert_eq!(one.amps[&vec![0, 1]], u.0[1]);
        assert!((one.norm_sq() - u.norm_sq()).abs() < 1e-15);
    }

    #[test]
    fn create_flags_overflow() {
        let u = OneParticleVector::basis(2, 0);
        let s = FockState::basis(vec![1, 1], 2);
        let out = create(&u, &s).unwrap();
        assert!(out.overflow && out.amps.is_empty());
    }

    #[test]
    fn adjointness_against_dense_matrices() {
        let mut rng = StdRng::seed_from_u64(7);
        let (m, nmax) = (3, 4);
        let basis = FockState::occupations(m, nmax);
        let u = random_vec(&mut rng, m, 1.0);
        // dense matrices in the occupation basis, with the Gram weights Π n_i!
        let col = |op: &dyn Fn(&FockState) -> FockState, j: usize| {
            let out = op(&FockState::basis(basis[j].clone(), nmax));
            basis.iter().map(|n| out.amps.get(n).copied().unwrap_or(c(0.0, 0.0))).collect::<Vec<_>>()
        };
        let cre: Vec<Vec<C64>> = (0..basis.len()).map(|j| col(&|s| create(&u, s).unwrap(), j)).collect();
        let ann: Vec<Vec<C64>> = (0..basis.len()).map(|j| col(&|s| annihilate(&u, s).unwrap(), j)).collect();
        for (i, ni) in basis.iter().enumerate() {
            for (j, nj) in basis.iter().enumerate() {
                if nj.iter().sum::<u32>() >= nmax {
                    continue;
                }
                // ⟨e_i, a* e_j⟩ = w_i (a*)_{ij};  ⟨a e_i, e_j⟩ = conj((a)_{ji}) w_j
                let lhs = cre[j][i] * weight(ni);
                let rhs = ann[i][j].conj() * weight(nj);
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
        // the same identity on random states away from the shell
        let x = random_state(&mut rng, m, nmax, nmax - 1);
        let y = random_state(&mut rng, m, nmax, nmax);
        let l = create(&u, &x).unwrap().inner(&y).unwrap();
        let r = x.inner(&annihilate(&u, &y).unwrap()).unwrap();
        assert!((l - r).norm() < 1e-12 * (1.0 + l.norm()));
    }

    #[test]
    fn ccr_inside_truncation() {
        let mut rng = StdRng::seed_from_u64(3);
        let (m, nmax) = (3, 5);
        let u = random_vec(&mut rng, m, 1.0);
        let w = random_vec(&mut rng, m, 1.0);
        let x = random_state(&mut rng, m, nmax, nmax - 1);
        let aw = annihilate(&u, &create(&w, &x).unwrap()).unwrap();
        let wa = create(&w, &annihilate(&u, &x).unwrap()).unwrap();
        let comm = aw.combine(c(1.0, 0.0), c(-1.0, 0.0), &wa).unwrap();
        let expect = x.scale(inner_plus(&u, &w).unwrap());
        assert!(comm.distance(&expect).unwrap() < 1e-12 * x.norm_sq().sqrt());
    }

    #[test]
    fn coherent_overlap_and_eigenvector() {
        let mut rng = StdRng::seed_from_u64(11);
        let v = random_vec(&mut rng, 3, 0.6);
        let w = random_vec(&mut rng, 3, 0.6);
        let nmax = 18;
        let tol = coherent_tail(v.norm_sq().max(w.norm_sq()), nmax);
        assert!(tol < 1e-8);
        let ev = coherent_state(&v, nmax, 1e-8).unwrap();
        let ew = coherent_state(&w, nmax, 1e-8).unwrap();
        let exact = inner_plus(&v, &w).unwrap().exp();
        assert!((ev.inner(&ew).unwrap() - exact).norm() <= tol * 10.0);
        // a(u)ε(v) = ⟨u,v⟩ε(v) on every component the truncation keeps intact
        let u = random_vec(&mut rng, 3, 1.0);
        let lhs = annihilate(&u, &ev).unwrap();
        let rhs = ev.scale(inner_plus(&u, &v).unwrap());
        for (n, a) in &rhs.amps {
            if n.iter().sum::<u32>() < nmax {
                assert!((lhs.amps[n] - a).norm() < 1e-12);
            }
        }
        assert_eq!(coherent_state(&OneParticleVector::zero(3), 2, 1e-12).unwrap(), FockState::vacuum(3, 2));
    }

    #[test]
    fn coherent_rejects_short_truncation() {
        let v = OneParticleVector(vec![c(2.0, 0.0)]);
        assert!(matches!(coherent_state(&v, 5, 1e-8), Err(Error::TruncationTooTight { .. })));
        let n = nmax_for(4.0, 1e-8);
        assert!(coherent_state(&v, n, 1e-8).is_ok());
        assert!(coherent_state(&v, n - 1, 1e-8).is_err());
    }

    #[test]
    fn tail_matches_exponential() {
        let x: f64 = 1.7;
        let head: f64 = (0..=6).map(|k| x.powi(k) / factorial(k as u32)).sum();
        assert!((coherent_tail(x, 6) - (x.exp() - head)).abs() < 1e-13);
    }

    #[test]
    fn second_quantization_properties() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = 3;
        let nmax = 16;
        let t1: Vec<Vec<C64>> = (0..m).map(|_| random_vec(&mut rng, m, 0.5).0).collect();
        let t2: Vec<Vec<C64>> = (0..m).map(|_| random_vec(&mut rng, m, 0.5).0).collect();
        let v = random_vec(&mut rng, m, 0.5);
        let ev = coherent_state(&v, nmax, 1e-6).unwrap();
        let lhs = second_quantize_map(&t1, &ev).unwrap();
        let rhs = coherent_state(&v.apply(&t1), nmax, 1e-6).unwrap();
        assert!(lhs.distance(&rhs).unwrap() < 1e-12);

        let x = random_state(&mut rng, m, 4, 4);
        let id: Vec<Vec<C64>> = (0..m).map(|i| OneParticleVector::basis(m, i).0).collect();
        assert!(second_quantize_map(&id, &x).unwrap().distance(&x).unwrap() < 1e-14);

        let t12: Vec<Vec<C64>> = (0..m)
            .map(|i| (0..m).map(|j| (0..m).map(|k| t1[i][k] * t2[k][j]).sum()).collect())
            .collect();
        let a = second_quantize_map(&t12, &x).unwrap();
        let b = second_quantize_map(&t1, &second_quantize_map(&t2, &x).unwrap()).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-12 * (1.0 + a.norm_sq().sqrt()));
    }

    #[test]
    fn unitary_lift_preserves_norm() {
        let mut rng = StdRng::seed_from_u64(9);
        let (th, ph) = (0.7f64, 0.3f64);
        let u = vec![
            vec![c(th.cos(), 0.0), C64::from_polar(th.sin(), ph), c(0.0, 0.0)],
            vec![-C64::from_polar(th.sin(), -ph), c(th.cos(), 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, 1.1)],
        ];
        let x = random_state(&mut rng, 3, 5, 5);
        let y = second_quantize_map(&u, &x).unwrap();
        assert!((y.norm_sq() - x.norm_sq()).abs() < 1e-12 * x.norm_sq());
    }

    #[test]
    fn hamiltonian_and_number_operator() {
        let s = FockState::basis(vec![2, 1, 0], 4);
        let n = lifted_hamiltonian(&[1.0, 1.0, 1.0], &s);
        assert_eq!(n.amps[&vec![2, 1, 0]], c(3.0, 0.0));
        let h = [1.5, 2.0, 7.0];
        assert_eq!(lifted_hamiltonian(&h, &FockState::vacuum(3, 2)).norm_sq(), 0.0);
        let mut rng = StdRng::seed_from_u64(2);
        let v = random_vec(&mut rng, 3, 0.5);
        let lhs = evolve(&h, 0.8, &coherent_state(&v, 14, 1e-6).unwrap());
        let rhs = coherent_state(&v.evolve(&h, 0.8), 14, 1e-6).unwrap();
        assert!(lhs.distance(&rhs).unwrap() < 1e-12);
        let x = random_state(&mut rng, 3, 4, 3);
        let hn = lifted_hamiltonian(&h, &lifted_hamiltonian(&[1.0; 3], &x));
        let nh = lifted_hamiltonian(&[1.0; 3], &lifted_hamiltonian(&h, &x));
        assert!(hn.distance(&nh).unwrap() < 1e-12);
    }

    #[test]
    fn exponential_law() {
        let mut rng = StdRng::seed_from_u64(4);
        let (u, w) = (random_vec(&mut rng, 2, 0.5), random_vec(&mut rng, 2, 0.5));
        let (u2, w2) = (random_vec(&mut rng, 2, 0.5), random_vec(&mut rng, 2, 0.5));
        let join = |a: &OneParticleVector, b: &OneParticleVector| OneParticleVector([a.0.clone(), b.0.clone()].concat());
        let nmax = 24;
        let whole = coherent_state(&join(&u, &w), nmax, 1e-10)
            .unwrap()
            .inner(&coherent_state(&join(&u2, &w2), nmax, 1e-10).unwrap())
            .unwrap();
        let a = coherent_state(&u, nmax, 1e-10).unwrap().inner(&coherent_state(&u2, nmax, 1e-10).unwrap()).unwrap();
        let b = coherent_state(&w, nmax, 1e-10).unwrap().inner(&coherent_state(&w2, nmax, 1e-10).unwrap()).unwrap();
        assert!((whole - a * b).norm() < 1e-8);
    }

    #[test]
    fn unitary_evolution_keeps_overlaps() {
        let mut rng = StdRng::seed_from_u64(6);
        let h = [0.9, 2.1, 3.3];
        let (v, w) = (random_vec(&mut rng, 3, 0.5), random_vec(&mut rng, 3, 0.5));
        let o0 = coherent_state(&v, 16, 1e-8).unwrap().inner(&coherent_state(&w, 16, 1e-8).unwrap()).unwrap();
        let vt = coherent_state(&v.evolve(&h, 2.5), 16, 1e-8).unwrap();
        let wt = coherent_state(&w.evolve(&h, 2.5), 16, 1e-8).unwrap();
        assert!((vt.inner(&wt).unwrap() - o0).norm() < 1e-12);
    }

    #[test]
    fn split_round_trip() {
        let p = StringParams { rho: 2.0, gamma: 0.5, ..measure_params() };
        let d = derive_constants(&p).unwrap();
        let table = find_modes(&d.ratios, 4).unwrap();
        let ev = Evolution::from_coefficients(&table, &p, &d, vec![0.3, -0.1, 0.0, 0.2], vec![0.0, 0.4, -0.2, 0.0]).unwrap();
        let psi = positive_frequency_split(&ev);
        let (q, v) = reassemble(&psi, &ev);
        for i in 0..4 {
            assert!((q[i] - ev.t0[i]).abs() < 1e-15 && (v[i] - ev.v0[i]).abs() < 1e-15);
        }
        // static data: ψ_n = √(ω_n/2) Q_n and the negative part is the conjugate
        let st = Evolution::from_coefficients(&table, &p, &d, vec![0.3, -0.1, 0.0, 0.2], vec![0.0; 4]).unwrap();
        let psi = positive_frequency_split(&st);
        for (i, m) in table.modes.iter().enumerate() {
            assert!((psi.0[i] - c((m.omega / 2.0).sqrt() * st.t0[i], 0.0)).norm() < 1e-15);
        }
        // single mode
        let one = Evolution::from_coefficients(&table, &p, &d, vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        let psi = positive_frequency_split(&one);
        assert_eq!(psi.0.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn positive_data_has_no_negative_part() {
        let freqs = [1.0, 2.5, 4.0];
        let q = [c(0.2, 0.1), c(-0.4, 0.0), c(0.0, 0.3)];
        let v: Vec<C64> = q.iter().zip(&freqs).map(|(z, w)| c(0.0, *w) * z).collect();
        let (plus, minus) = split_parts(&q, &v, &freqs);
        assert!(minus.iter().all(|z| z.norm() < 1e-15));
        assert!(plus.iter().zip(&q).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn norm_in_q_labels() {
        let mut rng = StdRng::seed_from_u64(8);
        let omegas = [0.8, 1.6, 3.7, 6.6];
        let q: Vec<C64> = (0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let psi = plus_vector(&q, &omegas);
        let a = inner_plus(&psi, &psi).unwrap().re;
        let b = inner_plus_q(&q, &q, &omegas).re;
        assert!((a - b).abs() < 1e-13 * b);
        let e = OneParticleVector::basis(4, 1);
        assert_eq!(inner_plus(&e, &OneParticleVector::basis(4, 2)).unwrap(), c(0.0, 0.0));
        assert!(matches!(inner_plus(&e, &OneParticleVector::zero(3)), Err(Error::CutoffMismatch { .. })));
    }

    #[test]
    fn single_mode_trace_rate_vanishes() {
        let d = derive_constants(&measure_params()).unwrap();
        let table = find_modes(&d.ratios, 4).unwrap();
        let v = OneParticleVector::basis(4, 2).scale(c(0.3, -0.2));
        let r = trace_nonunitarity_rate(&v, 1.7, &table).unwrap();
        assert!((r.omega0 - c(table.modes[2].omega, 0.0)).norm() < 1e-12 * table.modes[2].omega);
        assert!(r.rate.abs() < 1e-12);
        assert!(matches!(
            trace_nonunitarity_rate(&OneParticleVector::zero(4), 0.0, &table),
            Err(Error::TraceVanishes)
        ));
    }

    #[test]
    fn two_mode_rate_matches_finite_difference() {
        let d = derive_constants(&measure_params()).unwrap();
        let table = find_modes(&d.ratios, 2).unwrap();
        let mut v = OneParticleVector::basis(2, 0);
        v.0[1] = c(1.0, 0.0);
        let t = 0.9;
        let r = trace_nonunitarity_rate(&v, t, &table).unwrap();
        assert!(r.omega0.im.abs() > 1e-3);
        let r2 = trace_nonunitarity_rate(&v.scale(c(0.0, 2.5)), t, &table).unwrap();
        assert!((r2.omega0 - r.omega0).norm() < 1e-13 * r.omega0.norm());
        let nmax = nmax_for(r.trace.norm_sqr() * 1.5, 1e-15);
        let norm = |t: f64| {
            let z = boundary_trace(&v, t, &table).unwrap();
            coherent_state(&OneParticleVector(vec![z]), nmax, 1e-14).unwrap().norm_sq()
        };
        let h = 1e-4;
        let fd = (norm(t + h) - norm(t - h)) / (2.0 * h);
        assert!((fd - r.rate).abs() < 1e-5 * r.rate.abs().max(1.0), "{fd} {}", r.rate);
    }

    #[test]
    fn factorization_coefficients_from_first_principles() {
        let d = derive_constants(&measure_params()).unwrap();
        let table = find_modes(&d.ratios, 6).unwrap();
        let rep = factorization_diagnostic(&table, &d, 6).unwrap();
        let f = MuFunction::boundary_spike(End::Zero, 1.0, d.ell());
        let q = Quadrature::with_tol(1e-13);
        for (n, m) in table.modes.iter().enumerate() {
            let (_, xhat) = mode_functions(m, &d);
            // ⟨F, X̃⁺_n⟩₊ = 2ω_n ⟨X̂_n, F⟩_μ / √(2ω_n)
            let direct = 2.0 * m.omega * inner_mu(&xhat, &f, &d, &q).unwrap() / (2.0 * m.omega).sqrt();
            assert!((direct - rep.coeffs[n]).abs() < 1e-8 * rep.coeffs[n].abs().max(1.0));
        }
        let massless = derive_constants(&StringParams { m0: 0.0, ..measure_params() }).unwrap();
        assert!(factorization_diagnostic(&table, &massless, 3).is_err());
    }

    proptest! {
        #[test]
        fn inner_plus_is_sesquilinear(a in -2.0..2.0f64, b in -2.0..2.0f64, seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let v = random_vec(&mut rng, 5, 1.0);
            let w = random_vec(&mut rng, 5, 1.0);
            let z = c(a, b);
            let l = inner_plus(&v.scale(z), &w).unwrap();
            let r = z.conj() * inner_plus(&v, &w).unwrap();
            prop_assert!((l - r).norm() < 1e-12 * (1.0 + r.norm()));
            prop_assert!(inner_plus(&v, &v).unwrap().re >= 0.0);
        }

        #[test]
        fn number_operator_counts(n in proptest::collection::vec(0u32..3, 3)) {
            let total: u32 = n.iter().sum();
            let s = FockState::basis(n.clone(), 6);
            let out = lifted_hamiltonian(&[1.0; 3], &s);
            prop_assert_eq!(out.amps[&n], c(f64::from(total), 0.0));
        }
    }
}
