//! The Hilbert space `L²_μ[0,ℓ]` for μ = α₀δ₀ + Lebesgue + α_ℓδ_ℓ.
//!
//! An element is a triple: a value at each endpoint and an interior function.
//! The endpoint values are independent of the interior one-sided limits, which
//! are called traces here.

use std::fmt;
use std::sync::Arc;

use crate::model::{DerivedConstants, End};
use crate::quadrature::Quadrature;
use crate::{Error, Result};

/// Interior rule: `rule(x, k)` is the k-th derivative at x.
pub type Rule = Arc<dyn Fn(f64, u32) -> f64 + Send + Sync>;

/// How many interior derivatives a function admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    L2,
    H1,
    H2,
    Smooth,
}

impl Smoothness {
    fn max_order(self) -> u32 {
        match self {
            Smoothness::L2 => 0,
            Smoothness::H1 => 1,
            Smoothness::H2 => 2,
            Smoothness::Smooth => u32::MAX,
        }
    }

    fn lower(self) -> Self {
        match self {
            Smoothness::L2 | Smoothness::H1 => Smoothness::L2,
            Smoothness::H2 => Smoothness::H1,
            Smoothness::Smooth => Smoothness::Smooth,
        }
    }
}

#[derive(Clone)]
pub struct MuFunction {
    pub v0: f64,
    pub vl: f64,
    ell: f64,
    rule: Rule,
    /// Orders the rule answers exactly; higher ones are differenced numerically.
    exact: u32,
    smoothness: Smoothness,
}

impl fmt::Debug for MuFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MuFunction")
            .field("v0", &self.v0)
            .field("vl", &self.vl)
            .field("ell", &self.ell)
            .field("exact", &self.exact)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl MuFunction {
    pub fn new(v0: f64, vl: f64, ell: f64, smoothness: Smoothness, exact: u32, rule: Rule) -> Self {
        MuFunction { v0, vl, ell, rule, exact, smoothness }
    }

    /// Interior rule with derivatives of every order available analytically.
    pub fn smooth(v0: f64, vl: f64, ell: f64, rule: impl Fn(f64, u32) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(v0, vl, ell, Smoothness::Smooth, u32::MAX, Arc::new(rule))
    }

    /// Plain function; derivatives up to `smoothness` are taken numerically.
    pub fn from_fn(
        v0: f64,
        vl: f64,
        ell: f64,
        smoothness: Smoothness,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(v0, vl, ell, smoothness, 0, Arc::new(move |x, _| f(x)))
    }

    /// Endpoint values and interior are all zero.
    pub fn zero(ell: f64) -> Self {
        Self::smooth(0.0, 0.0, ell, |_, _| 0.0)
    }

    /// Only the boundary value at `j` is set; the interior vanishes.
    pub fn boundary_spike(j: End, value: f64, ell: f64) -> Self {
        let (v0, vl) = match j {
            End::Zero => (value, 0.0),
            End::Ell => (0.0, value),
        };
        Self::smooth(v0, vl, ell, |_, _| 0.0)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.rule)(x, 0)
    }

    /// k-th interior derivative. Orders beyond the analytic ones use central
    /// differences with step 1e-6·ℓ.
    pub fn deriv(&self, x: f64, k: u32) -> Result<f64> {
        if k > self.smoothness.max_order() {
            return Err(Error::NotDifferentiable { order: k });
        }
        if k <= self.exact {
            return Ok((self.rule)(x, k));
        }
        let h = 1e-6 * self.ell;
        Ok((self.deriv(x + h, k - 1)? - self.deriv(x - h, k - 1)?) / (2.0 * h))
    }

    pub fn boundary(&self, j: End) -> f64 {
        match j {
            End::Zero => self.v0,
            End::Ell => self.vl,
        }
    }

    /// One-sided limit of the interior at the endpoint.
    pub fn trace(&self, j: End) -> f64 {
        self.eval(self.endpoint(j))
    }

    pub fn trace_deriv(&self, j: End, k: u32) -> Result<f64> {
        self.deriv(self.endpoint(j), k)
    }

    fn endpoint(&self, j: End) -> f64 {
        match j {
            End::Zero => 0.0,
            End::Ell => self.ell,
        }
    }

    /// a·self + b·other, componentwise.
    pub fn axpby(&self, a: f64, b: f64, other: &MuFunction) -> MuFunction {
        let (f, g) = (self.clone(), other.clone());
        let smoothness = self.smoothness.min(other.smoothness);
        let rule: Rule = Arc::new(move |x, k| {
            let fk = f.deriv(x, k).unwrap_or(f64::NAN);
            let gk = g.deriv(x, k).unwrap_or(f64::NAN);
            a * fk + b * gk
        });
        MuFunction {
            v0: a * self.v0 + b * other.v0,
            vl: a * self.vl + b * other.vl,
            ell: self.ell,
            rule,
            exact: smoothness.max_order(),
            smoothness,
        }
    }

    /// Pointwise product; interior derivatives by the Leibniz rule.
    pub fn product(&self, other: &MuFunction) -> MuFunction {
        let (f, g) = (self.clone(), other.clone());
        let smoothness = self.smoothness.min(other.smoothness);
        let rule: Rule = Arc::new(move |x, k| {
            let mut s = 0.0;
            let mut binom = 1.0;
            for i in 0..=k {
                let fi = f.deriv(x, i).unwrap_or(f64::NAN);
                let gi = g.deriv(x, k - i).unwrap_or(f64::NAN);
                s += binom * fi * gi;
                binom = binom * (k - i) as f64 / (i + 1) as f64;
            }
            s
        });
        MuFunction {
            v0: self.v0 * other.v0,
            vl: self.vl * other.vl,
            ell: self.ell,
            rule,
            exact: smoothness.max_order(),
            smoothness,
        }
    }

    /// Shift the interior rule by one derivative order.
    fn derivative_rule(&self) -> Result<(Rule, u32, Smoothness)> {
        if self.smoothness < Smoothness::H1 {
            return Err(Error::NotDifferentiable { order: 1 });
        }
        let f = self.clone();
        let rule: Rule = Arc::new(move |x, k| f.deriv(x, k + 1).unwrap_or(f64::NAN));
        // the shifted rule defers to `deriv`, so it answers every admissible order
        let lower = self.smoothness.lower();
        Ok((rule, lower.max_order(), lower))
    }
}

/// Plain L² product of the interiors.
pub fn inner_l2(f: &MuFunction, g: &MuFunction, q: &Quadrature) -> Result<f64> {
    q.integrate(&|x| f.eval(x) * g.eval(x), 0.0, f.ell)
}

/// ⟨f,g⟩_μ = α₀f(0)g(0) + ⟨f,g⟩ + α_ℓf(ℓ)g(ℓ).
pub fn inner_mu(f: &MuFunction, g: &MuFunction, d: &DerivedConstants, q: &Quadrature) -> Result<f64> {
    Ok(d.alpha[0] * f.v0 * g.v0 + inner_l2(f, g, q)? + d.alpha[1] * f.vl * g.vl)
}

/// ⟪f,g⟫ = μ₀f(0+)g(0+) + ⟨f,g⟩ + μ_ℓf(ℓ−)g(ℓ−), built from traces.
pub fn modified_inner(f: &MuFunction, g: &MuFunction, d: &DerivedConstants, q: &Quadrature) -> Result<f64> {
    let mut s = inner_l2(f, g, q)?;
    for j in End::BOTH {
        s += d.mu(j) * f.trace(j) * g.trace(j);
    }
    Ok(s)
}

/// Boundary RN derivative at `j`: (F(0+) − F(0))/α₀ or (F(ℓ) − F(ℓ−))/α_ℓ.
/// Zero at endpoints carrying no weight.
pub fn rn_boundary(f: &MuFunction, j: End, d: &DerivedConstants) -> f64 {
    let a = d.alpha(j);
    if a == 0.0 {
        return 0.0;
    }
    j.sign() * (f.trace(j) - f.boundary(j)) / a
}

/// Radon–Nikodym derivative dF/dμ.
pub fn rn_derivative(f: &MuFunction, d: &DerivedConstants) -> Result<MuFunction> {
    let (rule, exact, smoothness) = f.derivative_rule()?;
    Ok(MuFunction {
        v0: rn_boundary(f, End::Zero, d),
        vl: rn_boundary(f, End::Ell, d),
        ell: f.ell,
        rule,
        exact,
        smoothness,
    })
}

/// d(FG)/dμ = F′G + FG′ + K F′G′ with K(0) = α₀, K(ℓ) = −α_ℓ and K = 0 inside.
pub fn mu_product_derivative(f: &MuFunction, g: &MuFunction, d: &DerivedConstants) -> Result<MuFunction> {
    let df = rn_derivative(f, d)?;
    let dg = rn_derivative(g, d)?;
    let inner = df.product(g).axpby(1.0, 1.0, &f.product(&dg));
    let mut out = inner;
    for j in End::BOTH {
        let k = j.sign() * d.alpha(j);
        let v = df.boundary(j) * g.boundary(j)
            + f.boundary(j) * dg.boundary(j)
            + k * df.boundary(j) * dg.boundary(j);
        match j {
            End::Zero => out.v0 = v,
            End::Ell => out.vl = v,
        }
    }
    Ok(out)
}

/// Δ_μ u = (1 + C) d²u/dμ² with C(j) = c_j and C = 0 inside.
pub fn laplacian_mu(u: &MuFunction, d: &DerivedConstants) -> Result<MuFunction> {
    if u.smoothness < Smoothness::H2 {
        return Err(Error::NotDifferentiable { order: 2 });
    }
    let du = rn_derivative(u, d)?;
    let mut dd = rn_derivative(&du, d)?;
    dd.v0 *= 1.0 + d.c[0];
    dd.vl *= 1.0 + d.c[1];
    Ok(dd)
}

/// du/dμ(j) − (−1)^σ(j) (c_j/α_j) u(j) at both ends. At an endpoint with
/// α_j = 0 the equivalent trace condition γ_j(u) − (1 + c_j)u(j) is reported.
pub fn robin_domain_residual(u: &MuFunction, d: &DerivedConstants) -> (f64, f64) {
    let r = |j: End| {
        let a = d.alpha(j);
        if a == 0.0 {
            u.trace(j) - (1.0 + d.c(j)) * u.boundary(j)
        } else {
            rn_boundary(u, j, d) - j.sign() * (d.c(j) / a) * u.boundary(j)
        }
    };
    (r(End::Zero), r(End::Ell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_constants, StringParams};
    use std::f64::consts::PI;

    fn unit_weights() -> DerivedConstants {
        let p = StringParams { k0: 0.0, kl: 0.0, ..Default::default() };
        derive_constants(&p).unwrap()
    }

    fn sine(n: f64) -> MuFunction {
        MuFunction::smooth(0.0, 0.0, 1.0, move |x, k| {
            (n * PI).powi(k as i32) * (n * PI * x + k as f64 * PI / 2.0).sin()
        })
    }

    #[test]
    fn constant_one_has_mu_norm_three() {
        let d = unit_weights();
        let one = MuFunction::smooth(1.0, 1.0, 1.0, |_, k| if k == 0 { 1.0 } else { 0.0 });
        let v = inner_mu(&one, &one, &d, &Quadrature::default()).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sines_orthogonal() {
        let p = StringParams { m0: 0.0, ml: 0.0, k0: 1.0, ..Default::default() };
        let d = derive_constants(&p).unwrap();
        let v = inner_mu(&sine(1.0), &sine(2.0), &d, &Quadrature::default()).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn spike_derivative() {
        let d = unit_weights();
        let f = MuFunction::boundary_spike(End::Zero, 1.0, 1.0);
        let df = rn_derivative(&f, &d).unwrap();
        assert_eq!(df.v0, -1.0 / d.alpha[0]);
        assert_eq!(df.vl, 0.0);
        assert_eq!(df.eval(0.4), 0.0);
    }

    #[test]
    fn continuous_has_zero_boundary_derivative() {
        let d = unit_weights();
        let f = MuFunction::smooth(0.0, 1.0, 1.0, |x, k| match k {
            0 => x * x,
            1 => 2.0 * x,
            2 => 2.0,
            _ => 0.0,
        });
        let df = rn_derivative(&f, &d).unwrap();
        assert_eq!(df.v0, 0.0);
        assert_eq!(df.vl, 0.0);
        assert!((df.eval(0.3) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn numeric_fallback() {
        let d = unit_weights();
        let f = MuFunction::from_fn(0.0, 0.0, 1.0, Smoothness::H2, |x| x.sin());
        let df = rn_derivative(&f, &d).unwrap();
        assert!((df.eval(0.5) - 0.5f64.cos()).abs() < 1e-9);
        let l2 = MuFunction::from_fn(0.0, 0.0, 1.0, Smoothness::L2, |x| x);
        assert!(matches!(rn_derivative(&l2, &d), Err(Error::NotDifferentiable { .. })));
    }

    #[test]
    fn product_rule_on_spike() {
        let d = unit_weights();
        let f = MuFunction::boundary_spike(End::Zero, 1.0, 1.0);
        let lhs = mu_product_derivative(&f, &f, &d).unwrap();
        let rhs = rn_derivative(&f.product(&f), &d).unwrap();
        assert!((lhs.v0 + 1.0 / d.alpha[0]).abs() < 1e-15);
        assert!((lhs.v0 - rhs.v0).abs() < 1e-15);
    }

    #[test]
    fn robin_residual_of_spike() {
        let d = unit_weights();
        let f = MuFunction::boundary_spike(End::Zero, 1.0, 1.0);
        let (r0, rl) = robin_domain_residual(&f, &d);
        assert_eq!(r0, -1.0 / d.alpha[0]);
        assert_eq!(rl, 0.0);
    }

    #[test]
    fn product_rule_matches_direct() {
        let p = StringParams { m0: 0.1, ml: 0.05, k0: 1.0, kl: 2.0, ..Default::default() };
        let d = derive_constants(&p).unwrap();
        let f = MuFunction::smooth(0.3, -0.7, 1.0, |x, k| match k {
            0 => x.exp(),
            _ => x.exp(),
        });
        let g = MuFunction::smooth(1.1, 0.2, 1.0, |x, k| (x + k as f64 * PI / 2.0).cos());
        let lhs = mu_product_derivative(&f, &g, &d).unwrap();
        let rhs = rn_derivative(&f.product(&g), &d).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((lhs.eval(x) - rhs.eval(x)).abs() < 1e-12);
        }
        assert!((lhs.v0 - rhs.v0).abs() < 1e-10);
        assert!((lhs.vl - rhs.vl).abs() < 1e-10);
    }
}
