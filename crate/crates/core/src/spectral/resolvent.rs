use crate::error::Result;
use crate::gridcore::{AgeField, AgeGrid};

/// Age beyond which e^{−(ρ+μ)s} < 1e−10; replaces an infinite maximal age.
pub fn age_cutoff(rho: f64, mu: f64) -> f64 {
    10.0 * std::f64::consts::LN_10 / (rho + mu)
}

/// ᾱ(s) = ∫_s^{s̄} e^{−(ρ+μ)(σ−s)} α(σ) dσ by backward recursion.
///
/// α is taken piecewise linear between nodes and each cell integral is done
/// exactly, so constant and linear α are reproduced to rounding.
pub fn transport_resolvent(alpha: &AgeField, rho: f64, mu: f64) -> Result<AgeField> {
    let grid: AgeGrid = alpha.grid();
    let h = grid.spacing();
    let r = rho + mu;
    let (decay, i0, i1) = cell_weights(r, h);
    let a = alpha.values();
    let n = a.len();
    let mut out = vec![0.0; n];
    for k in (0..n - 1).rev() {
        let cell = a[k] * i0 + (a[k + 1] - a[k]) / h * i1;
        out[k] = decay * out[k + 1] + cell;
    }
    AgeField::new(grid, out)
}

/// e^{−rh}, ∫₀^h e^{−rτ}dτ and ∫₀^h τe^{−rτ}dτ, with series for small rh.
fn cell_weights(r: f64, h: f64) -> (f64, f64, f64) {
    let x = r * h;
    let decay = (-x).exp();
    if x.abs() < 1e-6 {
        let i0 = h * (1.0 - x / 2.0 + x * x / 6.0);
        let i1 = h * h * (0.5 - x / 3.0 + x * x / 8.0);
        return (decay, i0, i1);
    }
    let em1 = -(-x).exp_m1();
    (decay, em1 / r, (em1 - x * decay) / (r * r))
}
