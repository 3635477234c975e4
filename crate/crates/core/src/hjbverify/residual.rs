use serde::Serialize;

use crate::error::Result;
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
}

/// Evaluate a relative residual at each state and summarize.
pub fn sample_residuals<S: Sync>(
    exec: Exec,
    states: &[S],
    residual: impl Fn(&S) -> Result<f64> + Sync,
) -> Result<ResidualStats> {
    let values = exec.map(states, |s| residual(s)).into_iter().collect::<Result<Vec<_>>>()?;
    let count = values.len();
    let max = values.iter().copied().fold(0.0, f64::max);
    let mean = if count == 0 { 0.0 } else { values.iter().sum::<f64>() / count as f64 };
    Ok(ResidualStats { count, max, mean })
}
