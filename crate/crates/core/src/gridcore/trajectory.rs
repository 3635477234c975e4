use crate::error::{Error, Result};

/// Time-stamped record of a controlled run on a uniform time grid.
///
/// `discounted_payoff[k]` is the trapezoid approximation of
/// ∫₀^{t_k} e^{−ρt} g(t) dt built from `running_payoff`.
#[derive(Debug, Clone)]
pub struct Trajectory<S, C> {
    pub dt: f64,
    pub discount: f64,
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub controls: Vec<C>,
    pub running_payoff: Vec<f64>,
    pub discounted_payoff: Vec<f64>,
    /// First time the state left the model's domain, with the reason.
    pub domain_exit: Option<(f64, String)>,
}

impl<S, C> Trajectory<S, C> {
    pub fn start(dt: f64, discount: f64, state: S, control: C, payoff: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self {
            dt,
            discount,
            times: vec![0.0],
            states: vec![state],
            controls: vec![control],
            running_payoff: vec![payoff],
            discounted_payoff: vec![0.0],
            domain_exit: None,
        })
    }

    pub fn push(&mut self, state: S, control: C, payoff: f64) {
        let k = self.times.len();
        let t_prev = self.times[k - 1];
        let t = k as f64 * self.dt;
        let g_prev = (-self.discount * t_prev).exp() * self.running_payoff[k - 1];
        let g = (-self.discount * t).exp() * payoff;
        let acc = self.discounted_payoff[k - 1] + 0.5 * self.dt * (g_prev + g);
        self.times.push(t);
        self.states.push(state);
        self.controls.push(control);
        self.running_payoff.push(payoff);
        self.discounted_payoff.push(acc);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has an initial point")
    }

    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory has an initial point")
    }

    pub fn total_payoff(&self) -> f64 {
        *self.discounted_payoff.last().expect("trajectory has an initial point")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_accumulation() {
        let rho = 0.1;
        let mut tr = Trajectory::start(0.01, rho, (), (), 1.0).unwrap();
        for _ in 0..1000 {
            tr.push((), (), 1.0);
        }
        let exact = (1.0 - (-rho * 10.0f64).exp()) / rho;
        assert!((tr.final_time() - 10.0).abs() < 1e-12);
        assert!((tr.total_payoff() - exact).abs() < 1e-5);
        assert!(Trajectory::start(0.0, rho, (), (), 0.0).is_err());
    }
}
