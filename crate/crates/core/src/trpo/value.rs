use rand::seq::SliceRandom;
use rand::Rng;

use super::policy::POLICY_HIDDEN;
use super::TrpoError;
use crate::numkit::{adam_step, Activation, AdamConfig, AdamState, Mlp};

/// State-value regression network `state -> 64 tanh -> 1` with its own
/// ADAM moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub net: Mlp,
    adam: Vec<AdamState>,
}

impl ValueFunction {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, config: AdamConfig, rng: &mut R) -> Self {
        let net = Mlp::new(&[state_dim, POLICY_HIDDEN, 1], Activation::Tanh, rng);
        Self::from_net(net, config)
    }

    pub fn from_net(net: Mlp, config: AdamConfig) -> Self {
        let adam = net.layers.iter().map(|l| AdamState::new(l, config)).collect();
        Self { net, adam }
    }

    pub fn predict(&self, state: &[f64]) -> Result<f64, TrpoError> {
        Ok(self.net.forward(state)?[0])
    }

    pub fn predict_batch(&self, states: &[Vec<f64>]) -> Result<Vec<f64>, TrpoError> {
        states.iter().map(|s| self.predict(s)).collect()
    }

    /// Mean squared error over the batch.
    pub fn loss(&self, states: &[Vec<f64>], targets: &[f64]) -> Result<f64, TrpoError> {
        check_lengths(states, targets)?;
        let mut total = 0.0;
        for (s, y) in states.iter().zip(targets) {
            total += (self.predict(s)? - y).powi(2);
        }
        Ok(total / states.len().max(1) as f64)
    }

    /// Accumulates the gradient of the mean squared error into the network.
    pub fn accumulate_grad(&mut self, states: &[Vec<f64>], targets: &[f64]) -> Result<f64, TrpoError> {
        check_lengths(states, targets)?;
        self.net.zero_grad();
        let scale = 1.0 / states.len().max(1) as f64;
        let mut total = 0.0;
        for (s, y) in states.iter().zip(targets) {
            let (v, cache) = self.net.forward_cached(s)?;
            let err = v[0] - y;
            total += err * err;
            self.net.backward(&cache, &[2.0 * err * scale])?;
        }
        Ok(total * scale)
    }

    /// `epochs` shuffled minibatch passes of ADAM regression. Returns the
    /// mean pre-update minibatch loss of each epoch.
    pub fn fit<R: Rng + ?Sized>(
        &mut self,
        states: &[Vec<f64>],
        targets: &[f64],
        epochs: usize,
        minibatch: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>, TrpoError> {
        check_lengths(states, targets)?;
        if states.is_empty() {
            return Ok(Vec::new());
        }
        let minibatch = minibatch.max(1);
        let mut order: Vec<usize> = (0..states.len()).collect();
        let mut history = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            order.shuffle(rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(minibatch) {
                let s: Vec<Vec<f64>> = chunk.iter().map(|&i| states[i].clone()).collect();
                let y: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
                epoch_loss += self.accumulate_grad(&s, &y)? * chunk.len() as f64;
                for (layer, state) in self.net.layers.iter_mut().zip(&mut self.adam) {
                    adam_step(layer, state)?;
                }
            }
            history.push(epoch_loss / states.len() as f64);
        }
        Ok(history)
    }
}

fn check_lengths(states: &[Vec<f64>], targets: &[f64]) -> Result<(), TrpoError> {
    if states.len() != targets.len() {
        return Err(TrpoError::Length(format!("{} states, {} targets", states.len(), targets.len())));
    }
    Ok(())
}

/// Free-function form of [`ValueFunction::fit`].
pub fn fit_value<R: Rng + ?Sized>(
    value: &mut ValueFunction,
    states: &[Vec<f64>],
    targets: &[f64],
    epochs: usize,
    minibatch: usize,
    rng: &mut R,
) -> Result<Vec<f64>, TrpoError> {
    value.fit(states, targets, epochs, minibatch, rng)
}
