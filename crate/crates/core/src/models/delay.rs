use crate::error::{Error, Result};
use crate::gridcore::HistorySegment;

/// Simulation state of the delay models: a scalar head and the chronological
/// control window on [t − d, t], newest sample last.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayState {
    pub head: f64,
    pub controls: HistorySegment,
}

impl DelayState {
    pub fn scaled(&self, k: f64) -> Self {
        Self { head: k * self.head, controls: self.controls.map(|v| k * v) }
    }
}

/// Trapezoid increment of ∫ over one cell of the window's two oldest samples
/// after the step, i.e. the delayed term on [t − d, t + dt − d].
pub(crate) fn delayed_cell(window: &HistorySegment, dt: f64) -> f64 {
    0.5 * dt * (window.get(0) + window.get(1))
}

/// Second-order finite-difference derivative of s ↦ e^{ξs} on the lag grid.
pub(crate) fn exp_weight_derivative(tail: &HistorySegment, xi: f64) -> HistorySegment {
    let m = tail.m();
    let h = tail.spacing();
    let w = |k: usize| (xi * tail.node(k)).exp();
    let d: Vec<f64> = (0..=m)
        .map(|k| {
            if k == 0 {
                (-3.0 * w(0) + 4.0 * w(1) - w(2)) / (2.0 * h)
            } else if k == m {
                (3.0 * w(m) - 4.0 * w(m - 1) + w(m - 2)) / (2.0 * h)
            } else {
                (w(k + 1) - w(k - 1)) / (2.0 * h)
            }
        })
        .collect();
    HistorySegment::new(tail.delay(), d).expect("same sampling")
}

/// Trapezoid ∫ f·g over the lag interval.
pub(crate) fn pair_integral(f: &HistorySegment, g: &HistorySegment) -> f64 {
    let h = f.spacing();
    let m = f.m();
    h * f
        .iter()
        .zip(g.iter())
        .enumerate()
        .map(|(k, (a, b))| if k == 0 || k == m { 0.5 * a * b } else { a * b })
        .sum::<f64>()
}

pub(crate) fn check_locked_step(window: &HistorySegment, dt: f64) -> Result<()> {
    let h = window.spacing();
    if (dt - h).abs() > 1e-9 * h {
        return Err(Error::StepMismatch { expected: h, got: dt });
    }
    Ok(())
}
