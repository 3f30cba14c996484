use rand::Rng;

use super::layers::{axpy, dot};
use super::{dense, dense_backward, Activation, LayerParams, NumError, Tensor};

/// Stack of dense layers with a shared hidden activation and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<LayerParams>,
    pub activation: Activation,
}

/// Forward activations kept for [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input of every layer (the first entry is the network input).
    inputs: Vec<Tensor>,
    /// Pre-activation of every hidden layer.
    pre: Vec<Tensor>,
}

impl Mlp {
    /// `sizes = [in, h1, ..., out]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs an input and an output size");
        let layers = sizes.windows(2).map(|w| LayerParams::dense(w[0], w[1], rng)).collect();
        Self { layers, activation }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].weights.shape()[1]
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().expect("nonempty").weights.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NumError> {
        let mut a = Tensor::vector(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = dense(&a, layer)?;
            a = if i < last { self.activation.forward(&z)? } else { z };
        }
        Ok(a.into_data())
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache), NumError> {
        let mut a = Tensor::vector(x.to_vec());
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(last);
        for (i, layer) in self.layers.iter().enumerate() {
            let z = dense(&a, layer)?;
            inputs.push(a);
            a = if i < last {
                let y = self.activation.forward(&z)?;
                pre.push(z);
                y
            } else {
                z
            };
        }
        Ok((a.into_data(), MlpCache { inputs, pre }))
    }

    /// Accumulates parameter gradients for `upstream` (gradient of the loss
    /// with respect to the output) and returns the input gradient.
    pub fn backward(&mut self, cache: &MlpCache, upstream: &[f64]) -> Result<Vec<f64>, NumError> {
        let mut g = Tensor::vector(upstream.to_vec());
        for i in (0..self.layers.len()).rev() {
            if i < self.layers.len() - 1 {
                // Input of layer i+1 is the activation of layer i.
                g = self.activation.backward(&cache.pre[i], &cache.inputs[i + 1], &g)?;
            }
            g = dense_backward(&cache.inputs[i], &mut self.layers[i], &g)?;
        }
        Ok(g.into_data())
    }

    /// Output and its directional derivative with respect to the parameters
    /// along `tangent` (flattened in [`Mlp::params`] order).
    pub fn jvp(&self, x: &[f64], tangent: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NumError> {
        if tangent.len() != self.num_params() {
            return Err(NumError::shape("mlp_jvp", format!("{} tangent entries", self.num_params()), format!("{}", tangent.len())));
        }
        let mut a = x.to_vec();
        let mut da = vec![0.0; x.len()];
        let mut rest = tangent;
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let (m, n) = (layer.weights.shape()[0], layer.weights.shape()[1]);
            if a.len() != n {
                return Err(NumError::shape("mlp_jvp", format!("input of length {n}"), format!("{}", a.len())));
            }
            let (dw, tail) = rest.split_at(m * n);
            let (db, tail) = tail.split_at(m);
            rest = tail;
            let w = layer.weights.data();
            let b = layer.biases.data();
            let mut z = vec![0.0; m];
            let mut dz = vec![0.0; m];
            for i in 0..m {
                let row = i * n..(i + 1) * n;
                z[i] = b[i] + dot(&w[row.clone()], &a);
                dz[i] = db[i] + dot(&dw[row.clone()], &a) + dot(&w[row], &da);
            }
            if li < last {
                let y = self.activation.forward(&Tensor::vector(z.clone()))?.into_data();
                for i in 0..m {
                    dz[i] *= self.activation.derivative(z[i], y[i]);
                }
                a = y;
            } else {
                a = z;
            }
            da = dz;
        }
        Ok((a, da))
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(LayerParams::num_params).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.layers.iter().for_each(|l| l.extend_params(&mut out));
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), NumError> {
        if flat.len() != self.num_params() {
            return Err(NumError::shape("mlp_set_params", format!("{}", self.num_params()), format!("{}", flat.len())));
        }
        let mut rest = flat;
        for l in &mut self.layers {
            rest = l.load_params(rest);
        }
        Ok(())
    }

    pub fn grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.layers.iter().for_each(|l| l.extend_grads(&mut out));
        out
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(LayerParams::zero_grad);
    }

    /// Adds `alpha * direction` to the flattened parameters.
    pub fn add_scaled(&mut self, alpha: f64, direction: &[f64]) -> Result<(), NumError> {
        let mut p = self.params();
        if direction.len() != p.len() {
            return Err(NumError::shape("mlp_add_scaled", format!("{}", p.len()), format!("{}", direction.len())));
        }
        axpy(alpha, direction, &mut p);
        self.set_params(&p)
    }
}
