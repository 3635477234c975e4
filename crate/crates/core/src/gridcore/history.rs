use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Function sampled uniformly on a lag interval [−d, 0] at s_k = −d + k·d/m.
///
/// Stored as a ring buffer so advancing time by one sample is O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    delay: f64,
    values: VecDeque<f64>,
}

impl HistorySegment {
    pub const MIN_SAMPLES: usize = 4;

    /// `values` holds the m + 1 samples from s = −d to s = 0.
    pub fn new(delay: f64, values: Vec<f64>) -> Result<Self> {
        if !(delay > 0.0) || !delay.is_finite() {
            return Err(Error::param("delay", format!("must be positive, got {delay}")));
        }
        let m = values.len().saturating_sub(1);
        if m < Self::MIN_SAMPLES {
            return Err(Error::TooCoarse { what: "history cells", min: Self::MIN_SAMPLES, got: m });
        }
        Ok(Self { delay, values: values.into() })
    }

    pub fn from_fn(delay: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = delay / m as f64;
        Self::new(delay, (0..=m).map(|k| f(-delay + k as f64 * h)).collect())
    }

    pub fn constant(delay: f64, m: usize, c: f64) -> Result<Self> {
        Self::from_fn(delay, m, |_| c)
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Number of cells m.
    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.delay / self.m() as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.delay + k as f64 * self.spacing()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Value at s = 0.
    pub fn newest(&self) -> f64 {
        self.values[self.m()]
    }

    /// Value at s = −d.
    pub fn oldest(&self) -> f64 {
        self.values[0]
    }

    pub fn set_newest(&mut self, v: f64) {
        let m = self.m();
        self.values[m] = v;
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        self.values.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { delay: self.delay, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Sample order flipped, s ↦ −d − s.
    pub fn reversed(&self) -> Self {
        Self { delay: self.delay, values: self.values.iter().rev().copied().collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn same_sampling(&self, other: &HistorySegment) -> bool {
        self.m() == other.m() && (self.delay - other.delay).abs() <= 1e-12 * self.delay
    }

    /// Drop the sample at s = −d, shift, and append `new_value` at s = 0.
    pub fn advance(&mut self, dt: f64, new_value: f64) -> Result<()> {
        let h = self.spacing();
        if (dt - h).abs() > 1e-9 * h {
            return Err(Error::StepMismatch { expected: h, got: dt });
        }
        self.values.pop_front();
        self.values.push_back(new_value);
        Ok(())
    }

    /// Trapezoid quadrature of e^{ξs}·x(s) over [−d, 0].
    pub fn weighted_sum(&self, xi: f64) -> f64 {
        let h = self.spacing();
        let m = self.m();
        let sum: f64 = self
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                w * (xi * self.node(k)).exp() * v
            })
            .sum();
        h * sum
    }

    /// Trapezoid quadrature of the samples over [−d, 0].
    pub fn integral(&self) -> f64 {
        self.weighted_sum(0.0)
    }
}

pub fn history_advance(hseg: &HistorySegment, dt: f64, new_value: f64) -> Result<HistorySegment> {
    let mut next = hseg.clone();
    next.advance(dt, new_value)?;
    Ok(next)
}

pub fn history_weighted_sum(hseg: &HistorySegment, xi: f64) -> f64 {
    hseg.weighted_sum(xi)
}

/// Lifted state of a delay equation: a scalar head and a lag segment.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralState {
    pub head: f64,
    pub tail: HistorySegment,
}

impl StructuralState {
    pub fn new(head: f64, tail: HistorySegment) -> Result<Self> {
        if !head.is_finite() || !tail.is_finite() {
            return Err(Error::param("state", "non-finite head or tail"));
        }
        Ok(Self { head, tail })
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { head: k * self.head, tail: self.tail.map(|v| k * v) }
    }
}
