//! Scalar root finding and maximization.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket followed by Newton polishing.
///
/// `f(lo)` and `f(hi)` must have opposite signs. Newton steps that leave the
/// bracket or fail to reduce |f| are rejected.
pub fn bracketed_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::param("bracket", format!("no sign change on [{lo}, {hi}]")));
    }
    let lo_sign = flo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..20 {
        let fx = f(x);
        let d = df(x);
        if fx == 0.0 || d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) || f(next).abs() >= fx.abs() {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Golden-section search for the maximizer of a unimodal function on [lo, hi].
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of y against x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
