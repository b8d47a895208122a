use alloc::vec;
use alloc::vec::Vec;

use super::params::ParamStore;
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Multiplicative learning-rate decay applied once per epoch.
    pub decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay: 0.95,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be > 0"));
        }
        if !(self.decay > 0.0) {
            return Err(Error::config("lr_decay", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta", "moment decays must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon", "must be > 0"));
        }
        Ok(())
    }
}

/// Adam with bias correction and an exponentially decaying step size.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
    epoch: u32,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            first: Vec::new(),
            second: Vec::new(),
            step: 0,
            epoch: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// `base · decay^epoch`.
    pub fn effective_rate(&self) -> f64 {
        self.config.learning_rate * math::powi(self.config.decay, self.epoch as i32)
    }

    pub fn end_epoch(&mut self) {
        self.epoch += 1;
    }

    /// One Adam step over every parameter of `params`; gradients are zeroed.
    pub fn update<P: ParamStore + ?Sized>(&mut self, params: &mut P) -> Result<()> {
        self.step += 1;
        let c = self.config;
        let rate = self.effective_rate();
        let t = self.step as f64;
        let correct1 = 1.0 - libm::pow(c.beta1, t);
        let correct2 = 1.0 - libm::pow(c.beta2, t);

        let mut index = 0;
        let mut failure = None;
        let first = &mut self.first;
        let second = &mut self.second;
        params.visit_mut(&mut |p| {
            if failure.is_some() {
                return;
            }
            if first.len() == index {
                first.push(vec![0.0; p.value.len()]);
                second.push(vec![0.0; p.value.len()]);
            }
            let (m, v) = (&mut first[index], &mut second[index]);
            if m.len() != p.value.len() {
                failure = Some(Error::shape("Adam moments", m.len(), p.value.len()));
                return;
            }
            for (((w, g), m), v) in p.value.iter_mut().zip(p.grad.iter_mut()).zip(m).zip(v) {
                *m = c.beta1 * *m + (1.0 - c.beta1) * *g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * *g * *g;
                let m_hat = *m / correct1;
                let v_hat = *v / correct2;
                *w -= rate * m_hat / (math::sqrt(v_hat) + c.epsilon);
                *g = 0.0;
            }
            index += 1;
        });
        failure.map_or(Ok(()), Err)
    }
}
