use crate::math::Real;
use crate::transformer::TensorCollection;

use super::TrainError;

/// Adam hyperparameters (Kingma & Ba defaults except the learning rate,
/// which callers always set explicitly).
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators, one pair per tensor in collection
/// order. The order is fixed by `TensorCollection`, so state built for a
/// model stays valid for that model's lifetime.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(params: &impl TensorCollection<T>) -> Self {
        let sizes: Vec<usize> = params.tensors().iter().map(|t| t.data.len()).collect();
        Self {
            step: 0,
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update.
    pub fn step(
        &mut self,
        params: &mut impl TensorCollection<T>,
        grads: &impl TensorCollection<T>,
        cfg: &AdamConfig,
    ) -> Result<(), TrainError> {
        let mut slots = params.tensors_mut();
        let gs = grads.tensors();
        if slots.len() != self.m.len() || gs.len() != self.m.len() {
            return Err(TrainError::StateMismatch(format!(
                "{} parameter tensors, {} gradient tensors, state built for {}",
                slots.len(),
                gs.len(),
                self.m.len()
            )));
        }
        self.step += 1;
        let b1 = T::from_f64(cfg.beta1);
        let b2 = T::from_f64(cfg.beta2);
        let eps = T::from_f64(cfg.epsilon);
        // bias-corrected step size
        let correction = (1.0 - cfg.beta2.powi(self.step as i32)).sqrt()
            / (1.0 - cfg.beta1.powi(self.step as i32));
        let alpha = T::from_f64(cfg.learning_rate * correction);

        for ((slot, g), (m, v)) in slots
            .iter_mut()
            .zip(&gs)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if slot.data.len() != g.data.len() || slot.name != g.name {
                return Err(TrainError::StateMismatch(format!(
                    "tensor {} does not line up with gradient {}",
                    slot.name, g.name
                )));
            }
            for i in 0..slot.data.len() {
                let grad = g.data[i];
                m[i] = b1 * m[i] + (T::one() - b1) * grad;
                v[i] = b2 * v[i] + (T::one() - b2) * grad * grad;
                slot.data[i] = slot.data[i] - alpha * m[i] / (v[i].sqrt() + eps);
            }
        }
        Ok(())
    }
}
