//! Physical parameters, derived ratios and configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One of the two string endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum End {
    Zero,
    Ell,
}

impl End {
    pub const BOTH: [End; 2] = [End::Zero, End::Ell];

    pub fn index(self) -> usize {
        match self {
            End::Zero => 0,
            End::Ell => 1,
        }
    }

    /// σ(j): 0 at x = 0 and 1 at x = ℓ.
    pub fn sigma(self) -> i32 {
        self.index() as i32
    }

    /// (−1)^σ(j).
    pub fn sign(self) -> f64 {
        match self {
            End::Zero => 1.0,
            End::Ell => -1.0,
        }
    }

    /// (−1)^(σ(j)+1), the sign in front of the string tension in the boundary equations.
    pub fn outward(self) -> f64 {
        -self.sign()
    }

    pub fn name(self) -> &'static str {
        match self {
            End::Zero => "0",
            End::Ell => "ell",
        }
    }
}

/// Physical inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StringParams {
    pub rho: f64,
    pub gamma: f64,
    pub ell: f64,
    pub m0: f64,
    pub ml: f64,
    pub k0: f64,
    pub kl: f64,
    pub eps0: f64,
    pub epsl: f64,
}

impl Default for StringParams {
    /// All constants equal to one.
    fn default() -> Self {
        StringParams {
            rho: 1.0,
            gamma: 1.0,
            ell: 1.0,
            m0: 1.0,
            ml: 1.0,
            k0: 1.0,
            kl: 1.0,
            eps0: 1.0,
            epsl: 1.0,
        }
    }
}

impl StringParams {
    pub fn mass(&self, j: End) -> f64 {
        [self.m0, self.ml][j.index()]
    }

    pub fn spring(&self, j: End) -> f64 {
        [self.k0, self.kl][j.index()]
    }

    pub fn eps(&self, j: End) -> f64 {
        [self.eps0, self.epsl][j.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("rho", self.rho),
            ("gamma", self.gamma),
            ("ell", self.ell),
            ("m0", self.m0),
            ("ml", self.ml),
            ("k0", self.k0),
            ("kl", self.kl),
            ("eps0", self.eps0),
            ("epsl", self.epsl),
        ];
        if let Some((k, _)) = named.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{k} is not finite")));
        }
        for (k, v) in &named[..3] {
            if *v <= 0.0 {
                return Err(Error::InvalidParams(format!("{k} must be positive, got {v}")));
            }
        }
        for (k, v) in &named[3..7] {
            if *v < 0.0 {
                return Err(Error::InvalidParams(format!("{k} must be non-negative, got {v}")));
            }
        }
        for (k, v) in &named[7..] {
            if *v != 0.0 && *v != 1.0 {
                return Err(Error::InvalidParams(format!("{k} must be 0 or 1, got {v}")));
            }
        }
        Ok(())
    }

    /// The spectral pipeline excludes the zero mode, which needs a spring somewhere.
    pub fn require_spring(&self) -> Result<()> {
        if self.k0 > 0.0 || self.kl > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "at least one of k0, kl must be positive".into(),
            ))
        }
    }

    /// μ_j, r_j and ℓ. Never fails for validated parameters.
    pub fn ratios(&self) -> Ratios {
        Ratios {
            ell: self.ell,
            mu: [self.m0 / self.rho, self.ml / self.rho],
            r: [self.k0 / self.gamma, self.kl / self.gamma],
        }
    }
}

/// Mass ratios μ_j = m_j/ρ and spring ratios r_j = k_j/γ. This is all the
/// frequency equation needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub ell: f64,
    pub mu: [f64; 2],
    pub r: [f64; 2],
}

impl Ratios {
    pub fn new(ell: f64, mu: [f64; 2], r: [f64; 2]) -> Self {
        Ratios { ell, mu, r }
    }

    pub fn mu_sum(&self) -> f64 {
        self.mu[0] + self.mu[1]
    }

    pub fn r_sum(&self) -> f64 {
        self.r[0] + self.r[1]
    }
}

/// Ratios plus the measure weights α_j and Robin parameters c_j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub ratios: Ratios,
    pub alpha: [f64; 2],
    pub c: [f64; 2],
}

impl DerivedConstants {
    pub fn ell(&self) -> f64 {
        self.ratios.ell
    }
    pub fn mu(&self, j: End) -> f64 {
        self.ratios.mu[j.index()]
    }
    pub fn r(&self, j: End) -> f64 {
        self.ratios.r[j.index()]
    }
    pub fn alpha(&self, j: End) -> f64 {
        self.alpha[j.index()]
    }
    pub fn c(&self, j: End) -> f64 {
        self.c[j.index()]
    }

    /// 1 − α_j r_j, the factor between a mode's trace and its boundary value.
    pub fn boundary_factor(&self, j: End) -> f64 {
        1.0 - self.alpha(j) * self.r(j)
    }

    /// c_j/α_j written as r_j/(1 − α_j r_j), which stays finite when α_j = 0.
    pub fn robin_ratio(&self, j: End) -> f64 {
        self.r(j) / self.boundary_factor(j)
    }
}

/// Root of α(1 − αr)² = μ on the increasing branch [0, 1/(3r)].
pub fn solve_alpha(mu: f64, r: f64) -> Option<f64> {
    if mu == 0.0 {
        return Some(0.0);
    }
    if r == 0.0 {
        return Some(mu);
    }
    let g = |a: f64| a * (1.0 - a * r).powi(2) - mu;
    let top = 1.0 / (3.0 * r);
    let limit = 4.0 / (27.0 * r);
    if mu > limit * (1.0 + 1e-14) {
        return None;
    }
    if mu >= limit {
        return Some(top);
    }
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = (1.0 - a * r) * (1.0 - 3.0 * a * r);
        if d.abs() < 1e-300 {
            break;
        }
        let next = a - g(a) / d;
        if next > 0.0 && next <= top {
            a = next;
        }
    }
    Some(a)
}

/// Derive μ_j, r_j, α_j and c_j.
pub fn derive_constants(params: &StringParams) -> Result<DerivedConstants> {
    params.validate()?;
    let ratios = params.ratios();
    let mut alpha = [0.0; 2];
    let mut c = [0.0; 2];
    for j in End::BOTH {
        let (mu, r) = (ratios.mu[j.index()], ratios.r[j.index()]);
        let a = solve_alpha(mu, r).ok_or(Error::UnsolvableAlpha {
            end: j.name(),
            mu,
            limit: 4.0 / (27.0 * r),
        })?;
        alpha[j.index()] = a;
        c[j.index()] = a * r / (1.0 - a * r);
    }
    Ok(DerivedConstants { ratios, alpha, c })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    rho: f64,
    gamma: f64,
    ell: f64,
    m0: f64,
    ml: f64,
    k0: f64,
    kl: f64,
    #[serde(default = "one")]
    eps0: f64,
    #[serde(default = "one")]
    epsl: f64,
}

fn one() -> f64 {
    1.0
}

/// Parse a `key = value` config. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<StringParams> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    let p = StringParams {
        rho: raw.rho,
        gamma: raw.gamma,
        ell: raw.ell,
        m0: raw.m0,
        ml: raw.ml,
        k0: raw.k0,
        kl: raw.kl,
        eps0: raw.eps0,
        epsl: raw.epsl,
    };
    p.validate()?;
    Ok(p)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<StringParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    parse_config(&text)
}
