//! Bracketed scalar root finding: bisection followed by a guarded Newton polish.

use crate::{Error, Result};

/// Refine a sign-change bracket [lo, hi] of `f` to a root.
///
/// Bisection runs for at most 80 steps or until the bracket is narrower than
/// 1e-13 of its starting width; up to five Newton steps then polish the
/// midpoint, each rejected if it leaves the final bracket.
pub fn bisect_newton(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::BracketFailure { lo, hi });
    }
    let width = hi - lo;
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= 1e-13 * width {
            break;
        }
    }
    let mut x = 0.5 * (a + b);
    let (blo, bhi) = (a.min(b) - 1e-13 * width, a.max(b) + 1e-13 * width);
    for _ in 0..5 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - f(x) / d;
        if !(blo..=bhi).contains(&next) || next == x {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// All sign changes of `f` on a uniform `samples`-point grid over [lo, hi],
/// each refined with [`bisect_newton`].
pub fn roots_on_grid(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    let n = samples.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(lo);
    for i in 1..n {
        let x1 = if i == n - 1 { hi } else { lo + i as f64 * h };
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push(x0);
        } else if f1 != 0.0 && f0.signum() != f1.signum() {
            out.push(bisect_newton(f, df, x0, x1)?);
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        out.push(x0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_root() {
        let r = bisect_newton(&|x| x.cos(), &|x| -x.sin(), 1.0, 2.0).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn no_bracket() {
        let r = bisect_newton(&|x| x * x + 1.0, &|x| 2.0 * x, -1.0, 1.0);
        assert!(matches!(r, Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn grid_finds_all() {
        let f = |x: f64| (x - 0.3) * (x - 0.5) * (x - 0.9);
        let df = |x: f64| {
            (x - 0.5) * (x - 0.9) + (x - 0.3) * (x - 0.9) + (x - 0.3) * (x - 0.5)
        };
        let r = roots_on_grid(&f, &df, 0.0, 1.0, 64).unwrap();
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([0.3, 0.5, 0.9]) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
