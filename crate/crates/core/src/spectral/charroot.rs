use crate::error::{Error, Result};
use crate::scalar::bracketed_root;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoot {
    pub xi: f64,
    /// Defect of the defining equation at ξ.
    pub residual: f64,
}

pub const GROWTH_ASSUMPTION: &str = "vintage growth assumption (A*T > 1)";

/// The positive root of ξ = A(1 − e^{−ξT}).
pub fn char_root_vintage(a: f64, t_scrap: f64) -> Result<CharRoot> {
    if !(a > 0.0) || !(t_scrap > 0.0) {
        return Err(Error::param("A, T", format!("must be positive, got A = {a}, T = {t_scrap}")));
    }
    if a * t_scrap <= 1.0 {
        return Err(Error::assumption(
            GROWTH_ASSUMPTION,
            format!("A*T = {} <= 1, no positive root of z = A(1 - exp(-zT))", a * t_scrap),
        ));
    }
    let f = |z: f64| a * (-(-z * t_scrap).exp_m1()) - z;
    let df = |z: f64| a * t_scrap * (-z * t_scrap).exp() - 1.0;
    // f > 0 just right of zero since f′(0) = AT − 1 > 0; shrink until it shows.
    let mut eps = 0.5 * a;
    while f(eps) <= 0.0 {
        eps *= 0.5;
        if eps < 1e-300 {
            return Err(Error::Singular("could not bracket the vintage root".into()));
        }
    }
    let xi = bracketed_root(f, df, eps, a)?;
    Ok(CharRoot { xi, residual: f(xi) })
}

/// The positive root of ξ = Ã e^{−ξd}.
pub fn char_root_ttb(a_tilde: f64, d: f64) -> Result<CharRoot> {
    if !(a_tilde > 0.0) {
        return Err(Error::param("Atilde", format!("A - delta must be positive, got {a_tilde}")));
    }
    if !(d >= 0.0) {
        return Err(Error::param("d", format!("must be nonnegative, got {d}")));
    }
    if d == 0.0 {
        return Ok(CharRoot { xi: a_tilde, residual: 0.0 });
    }
    let f = |z: f64| a_tilde * (-z * d).exp() - z;
    let df = |z: f64| -a_tilde * d * (-z * d).exp() - 1.0;
    let xi = bracketed_root(f, df, 0.0, a_tilde)?;
    Ok(CharRoot { xi, residual: f(xi) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vintage_examples() {
        let r = char_root_vintage(1.0, 2.0).unwrap();
        assert!((r.xi - 0.7968).abs() < 1e-4);
        assert!(r.residual.abs() < 1e-12);
        let r = char_root_vintage(2.0, 1.0).unwrap();
        assert!((r.xi - 1.5936).abs() < 1e-3);
        assert!(r.residual.abs() < 1e-12);
        assert!(matches!(char_root_vintage(1.0, 1.0), Err(Error::Assumption { .. })));
    }

    #[test]
    fn vintage_root_increases_with_a() {
        let mut last = 0.0;
        for k in 0..20 {
            let a = 0.6 + 0.1 * k as f64;
            let xi = char_root_vintage(a, 2.0).unwrap().xi;
            assert!(xi > last);
            last = xi;
        }
    }

    #[test]
    fn ttb_examples() {
        assert_eq!(char_root_ttb(0.3, 0.0).unwrap().xi, 0.3);
        let a_tilde = 0.2 * 0.4f64.exp();
        let r = char_root_ttb(a_tilde, 2.0).unwrap();
        assert!((r.xi - 0.2).abs() < 1e-12);
        let r = char_root_ttb(0.3, 1.0).unwrap();
        assert!((r.xi - 0.2368).abs() < 1e-4);
        assert!(r.residual.abs() < 1e-12);
        assert!(char_root_ttb(0.0, 1.0).is_err());
    }
}
