//! Composite 32-point Gauss–Legendre quadrature with panel doubling.

use std::ops::{Add, Mul};
use std::sync::OnceLock;

use crate::{Error, Result, C64};

pub const ORDER: usize = 32;

/// Nodes and weights on [-1, 1], computed once by Newton iteration on P_32.
pub fn gauss_legendre() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut x = [0.0; ORDER];
        let mut w = [0.0; ORDER];
        for i in 0..n / 2 {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
            w[n - 1 - i] = w[i];
        }
        (x, w)
    })
}

/// Values that can be integrated: reals and complex numbers.
pub trait Quadrand: Copy + Send + Sync + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Quadrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Quadrand for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Fixed composite rule with `panels` equal panels.
pub fn fixed<T: Quadrand>(f: &(dyn Fn(f64) -> T + Sync), a: f64, b: f64, panels: usize) -> T {
    let (x, w) = gauss_legendre();
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = T::zero();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = T::zero();
        for k in 0..ORDER {
            s = s + f(mid + 0.5 * h * x[k]) * w[k];
        }
        total = total + s * (0.5 * h);
    }
    total
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Starting panel count.
    pub panels: usize,
    /// Relative tolerance: stop when |Δ| < tol·(1 + |I|).
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            panels: 2,
            tol: 1e-10,
            max_panels: 1 << 14,
        }
    }
}

/// Result of an adaptive integration: value plus the last doubling change.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

impl Quadrature {
    pub fn with_tol(tol: f64) -> Self {
        Quadrature { tol, ..Default::default() }
    }

    /// Starting panel count suited to an integrand oscillating at angular
    /// frequency up to `omega` over [a, b].
    pub fn for_frequency(self, omega: f64, a: f64, b: f64) -> Self {
        let waves = (omega.abs() * (b - a).abs() / (2.0 * std::f64::consts::PI)).ceil() as usize;
        Quadrature {
            panels: self.panels.max(waves / 4 + 1),
            ..self
        }
    }

    pub fn estimate<T: Quadrand>(
        &self,
        f: &(dyn Fn(f64) -> T + Sync),
        a: f64,
        b: f64,
    ) -> Result<Estimate<T>> {
        let mut panels = self.panels.max(1);
        let mut prev = fixed(f, a, b, panels);
        loop {
            panels *= 2;
            let next = fixed(f, a, b, panels);
            let delta = (next + prev * -1.0).magnitude();
            if delta <= self.tol * (1.0 + next.magnitude()) {
                return Ok(Estimate { value: next, error: delta, panels });
            }
            if panels >= self.max_panels {
                return Err(Error::QuadratureFailure { tol: self.tol, delta, panels });
            }
            prev = next;
        }
    }

    pub fn integrate<T: Quadrand>(&self, f: &(dyn Fn(f64) -> T + Sync), a: f64, b: f64) -> Result<T> {
        self.estimate(f, a, b).map(|e| e.value)
    }
}
