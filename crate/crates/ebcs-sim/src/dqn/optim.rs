//! Adam with bias correction, operating on the network's flat parameter
//! buffer.

use super::network::{Gradients, QNetwork};
use super::DqnError;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self::with_coefficients(num_params, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON)
    }

    pub fn with_coefficients(num_params: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self { m: vec![0.0; num_params], v: vec![0.0; num_params], t: 0, beta1, beta2, epsilon }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam update of every network parameter from `grads`.
    pub fn step(
        &mut self,
        net: &mut QNetwork,
        grads: &Gradients,
        learning_rate: f64,
    ) -> Result<(), DqnError> {
        if grads.len() != self.m.len() || net.num_params() != self.m.len() {
            return Err(DqnError::GradientShapeMismatch {
                expected: self.m.len(),
                got: grads.len(),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let params = net.params_mut();
        for (i, p) in params.iter_mut().enumerate() {
            let g = grads.get(i);
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
