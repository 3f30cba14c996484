use super::{LayerParams, NumError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }
}

/// Moment estimates for one [`LayerParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub config: AdamConfig,
    pub m_weights: Tensor,
    pub v_weights: Tensor,
    pub m_biases: Tensor,
    pub v_biases: Tensor,
}

impl AdamState {
    pub fn new(params: &LayerParams, config: AdamConfig) -> Self {
        Self {
            step_count: 0,
            config,
            m_weights: Tensor::zeros(params.weights.shape()),
            v_weights: Tensor::zeros(params.weights.shape()),
            m_biases: Tensor::zeros(params.biases.shape()),
            v_biases: Tensor::zeros(params.biases.shape()),
        }
    }
}

/// Bias-corrected ADAM update from the accumulated gradients, which are
/// zeroed afterwards.
pub fn adam_step(params: &mut LayerParams, state: &mut AdamState) -> Result<(), NumError> {
    if state.m_weights.shape() != params.weights.shape() || state.m_biases.shape() != params.biases.shape() {
        return Err(NumError::shape(
            "adam_step",
            format!("{:?} / {:?}", params.weights.shape(), params.biases.shape()),
            format!("{:?} / {:?}", state.m_weights.shape(), state.m_biases.shape()),
        ));
    }
    params.grad_weights.ensure_finite("adam_step")?;
    params.grad_biases.ensure_finite("adam_step")?;
    state.step_count += 1;
    let c = state.config;
    let t = state.step_count as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    let update = |theta: &mut [f64], grad: &mut [f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..theta.len() {
            let g = grad[i];
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            grad[i] = 0.0;
        }
    };
    update(
        params.weights.data_mut(),
        params.grad_weights.data_mut(),
        state.m_weights.data_mut(),
        state.v_weights.data_mut(),
    );
    update(
        params.biases.data_mut(),
        params.grad_biases.data_mut(),
        state.m_biases.data_mut(),
        state.v_biases.data_mut(),
    );
    Ok(())
}
