//! Parametrized mechanics: a particle whose clock t is promoted to a
//! configuration variable, with the Hamiltonian constraint π + H(q,p) = 0
//! solved for π. Dynamics along the constraint surface is generated by
//! Y^N = N·(p/m, 1, −W′(q)) for an arbitrary lapse N.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::{Error, Result};

/// Point (q, t, p) of the constraint surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PMState {
    pub q: f64,
    pub t: f64,
    pub p: f64,
}

impl PMState {
    pub fn new(q: f64, t: f64, p: f64) -> Self {
        PMState { q, t, p }
    }

    fn axpy(self, h: f64, d: [f64; 3]) -> Self {
        PMState { q: self.q + h * d[0], t: self.t + h * d[1], p: self.p + h * d[2] }
    }

    fn is_finite(&self) -> bool {
        self.q.is_finite() && self.t.is_finite() && self.p.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Potential {
    Free,
    /// W = k q²/2
    Harmonic { k: f64 },
    /// W = λ q⁴/4
    Quartic { lambda: f64 },
}

impl Potential {
    pub fn value(&self, q: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { k } => 0.5 * k * q * q,
            Potential::Quartic { lambda } => 0.25 * lambda * q.powi(4),
        }
    }

    pub fn deriv(&self, q: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Harmonic { k } => k * q,
            Potential::Quartic { lambda } => lambda * q.powi(3),
        }
    }

    /// `free`, `harmonic[:k]` (k = 1) or `quartic[:lambda]` (λ = 1).
    pub fn preset(spec: &str) -> Result<Self> {
        let (name, arg) = split_preset(spec)?;
        match name {
            "free" if arg.is_none() => Ok(Potential::Free),
            "harmonic" => Ok(Potential::Harmonic { k: arg.unwrap_or(1.0) }),
            "quartic" => Ok(Potential::Quartic { lambda: arg.unwrap_or(1.0) }),
            _ => Err(Error::InvalidParams(format!("unknown potential preset '{spec}'"))),
        }
    }
}

fn split_preset(spec: &str) -> Result<(&str, Option<f64>)> {
    match spec.split_once(':') {
        None => Ok((spec, None)),
        Some((n, a)) => a
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| (n, Some(v)))
            .ok_or_else(|| Error::InvalidParams(format!("bad preset argument '{a}' in '{spec}'"))),
    }
}

type LapseRule = Arc<dyn Fn(f64, &PMState) -> f64 + Send + Sync>;

/// Lapse N(s, q, t, p).
#[derive(Clone)]
pub struct Lapse {
    pub name: String,
    /// N never vanishes and keeps one sign, so orbits of Y^N and Y¹ coincide as sets.
    pub sign_definite: bool,
    rule: LapseRule,
}

impl fmt::Debug for Lapse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lapse")
            .field("name", &self.name)
            .field("sign_definite", &self.sign_definite)
            .finish()
    }
}

impl Lapse {
    pub fn new(
        name: impl Into<String>,
        sign_definite: bool,
        rule: impl Fn(f64, &PMState) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Lapse { name: name.into(), sign_definite, rule: Arc::new(rule) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const:{c}"), c != 0.0, move |_, _| c)
    }

    /// N(s) = 1 + a sin(s).
    pub fn oscillating(a: f64) -> Self {
        Self::new(format!("sin:{a}"), a.abs() < 1.0, move |s, _| 1.0 + a * s.sin())
    }

    /// `one`, `const:c` or `sin:a`.
    pub fn preset(spec: &str) -> Result<Self> {
        match split_preset(spec)? {
            ("one", None) => Ok(Self::constant(1.0)),
            ("const", Some(c)) => Ok(Self::constant(c)),
            ("sin", a) => Ok(Self::oscillating(a.unwrap_or(0.5))),
            _ => Err(Error::InvalidParams(format!("unknown lapse preset '{spec}'"))),
        }
    }

    pub fn eval(&self, s: f64, state: &PMState) -> f64 {
        (self.rule)(s, state)
    }
}

/// (Y_q, Y_t, Y_p) = N·(p/m, 1, −W′(q)).
pub fn hamiltonian_field(state: &PMState, s: f64, lapse: &Lapse, w: &Potential, m: f64) -> [f64; 3] {
    let n = lapse.eval(s, state);
    [n * state.p / m, n, -n * w.deriv(state.q)]
}

/// Sampled orbit together with the field at every sample.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub mass: f64,
    pub potential: Potential,
    pub s: Vec<f64>,
    pub states: Vec<PMState>,
    pub field: Vec<[f64; 3]>,
}

/// Classical RK4 with `steps` fixed steps over `s_span`.
pub fn integrate_orbit(
    state0: PMState,
    lapse: &Lapse,
    w: &Potential,
    m: f64,
    s_span: (f64, f64),
    steps: usize,
) -> Result<Trajectory> {
    if !(m > 0.0) || steps == 0 || !(s_span.1 > s_span.0) {
        return Err(Error::InvalidParams(format!(
            "need m > 0, steps > 0 and an increasing span, got m = {m}, steps = {steps}, span = {s_span:?}"
        )));
    }
    let h = (s_span.1 - s_span.0) / steps as f64;
    let y = |x: &PMState, s: f64| hamiltonian_field(x, s, lapse, w, m);
    let mut s_vals = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut field = Vec::with_capacity(steps + 1);
    let mut x = state0;
    let mut d = y(&x, s_span.0);
    s_vals.push(s_span.0);
    states.push(x);
    field.push(d);
    for i in 0..steps {
        let s = s_span.0 + i as f64 * h;
        let k1 = d;
        let k2 = y(&x.axpy(0.5 * h, k1), s + 0.5 * h);
        let k3 = y(&x.axpy(0.5 * h, k2), s + 0.5 * h);
        let k4 = y(&x.axpy(h, k3), s + h);
        let inc: [f64; 3] = std::array::from_fn(|j| (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0);
        x = x.axpy(h, inc);
        let s_next = s_span.0 + (i + 1) as f64 * h;
        if !x.is_finite() {
            return Err(Error::StepFailure { s: s_next });
        }
        d = y(&x, s_next);
        s_vals.push(s_next);
        states.push(x);
        field.push(d);
    }
    Ok(Trajectory { mass: m, potential: *w, s: s_vals, states, field })
}

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, u: f64) -> f64 {
    let (u2, u3) = (u * u, u * u * u);
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0
        + (u3 - 2.0 * u2 + u) * h * d0
        + (-2.0 * u3 + 3.0 * u2) * y1
        + (u3 - u2) * h * d1
}

impl Trajectory {
    /// State at parameter s by cubic Hermite interpolation of the samples.
    pub fn at(&self, s: f64) -> PMState {
        let n = self.s.len() - 1;
        let h = self.s[1] - self.s[0];
        let i = (((s - self.s[0]) / h).floor().max(0.0) as usize).min(n - 1);
        self.interpolate(i, (s - self.s[i]) / h)
    }

    fn interpolate(&self, i: usize, u: f64) -> PMState {
        let h = self.s[i + 1] - self.s[i];
        let (a, b) = (&self.states[i], &self.states[i + 1]);
        let (da, db) = (&self.field[i], &self.field[i + 1]);
        PMState {
            q: hermite(a.q, da[0], b.q, db[0], h, u),
            t: hermite(a.t, da[1], b.t, db[1], h, u),
            p: hermite(a.p, da[2], b.p, db[2], h, u),
        }
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x.t), hi.max(x.t)))
    }
}

/// (q_τ, p_τ): intersection of the orbit with the slice t = τ.
///
/// The first sampled segment bracketing τ is refined by bisection on the
/// Hermite interpolant of t. Orbits frozen by a vanishing lapse never reach
/// later slices and report [`Error::NoCrossing`].
pub fn gauge_fix(traj: &Trajectory, tau: f64) -> Result<(f64, f64)> {
    for i in 0..traj.s.len() - 1 {
        let (t0, t1) = (traj.states[i].t - tau, traj.states[i + 1].t - tau);
        if t0 == 0.0 {
            return Ok((traj.states[i].q, traj.states[i].p));
        }
        if t0 * t1 > 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (traj.interpolate(i, mid).t - tau) * t0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = traj.interpolate(i, 0.5 * (lo + hi));
        return Ok((x.q, x.p));
    }
    Err(Error::NoCrossing { tau })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ObservableKind {
    /// p²/2m + W(q), a constant of motion.
    Energy,
    /// q_τ, which depends on the chosen slice.
    Projection,
}

pub fn observable(point: (f64, f64), kind: ObservableKind, w: &Potential, m: f64) -> f64 {
    match kind {
        ObservableKind::Energy => point.1 * point.1 / (2.0 * m) + w.value(point.0),
        ObservableKind::Projection => point.0,
    }
}

/// E = v∂L/∂v + τ̇∂L/∂τ̇ − L for L = m v²/(2τ̇) − τ̇W(q), from the sampled velocities.
pub fn zero_energy(traj: &Trajectory, i: usize) -> f64 {
    let m = traj.mass;
    let [v, tau, _] = traj.field[i];
    let w = traj.potential.value(traj.states[i].q);
    let lag = m * v * v / (2.0 * tau) - tau * w;
    let dl_dv = m * v / tau;
    let dl_dtau = -m * v * v / (2.0 * tau * tau) - w;
    v * dl_dv + tau * dl_dtau - lag
}

/// Y_π = −(p/m)Y_p − W′(q)Y_q, the π-component of the lifted field.
pub fn y_pi(traj: &Trajectory, i: usize) -> f64 {
    let x = &traj.states[i];
    let [yq, _, yp] = traj.field[i];
    -(x.p / traj.mass) * yp - traj.potential.deriv(x.q) * yq
}

/// Largest distance between the (q, p)-versus-t curves of two orbits at the given times.
pub fn curve_distance(a: &Trajectory, b: &Trajectory, ts: &[f64]) -> Result<f64> {
    ts.iter().try_fold(0.0f64, |acc, &t| {
        let (x, y) = (gauge_fix(a, t)?, gauge_fix(b, t)?);
        Ok(acc.max((x.0 - y.0).abs()).max((x.1 - y.1).abs()))
    })
}
