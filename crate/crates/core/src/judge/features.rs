use rand::Rng;

use crate::numkit::{
    conv2d, conv2d_backward, conv2d_param_backward, maxpool2, maxpool2_backward, relu, relu_backward, LayerParams,
    NumError, Tensor,
};

/// Filters per convolution layer.
pub const CONV_FILTERS: usize = 5;
/// Length of the feature vector for a 50x50x3 input:
/// `50 -> 48 -> 24 -> 22 -> 11`, times 5 filters.
pub const FEATURE_LEN: usize = 11 * 11 * CONV_FILTERS;

/// Two rounds of conv3x3 (5 filters), relu and 2x2 max pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    pub conv1: LayerParams,
    pub conv2: LayerParams,
}

/// Intermediate activations for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct FeatureCache {
    conv1: Tensor,
    relu1: Tensor,
    pool1: Tensor,
    conv2: Tensor,
    relu2: Tensor,
}

impl FeatureExtractor {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::with_shape(3, CONV_FILTERS, rng)
    }

    /// Same two-round stack for `channels` input channels and `filters`
    /// filters per layer.
    pub fn with_shape<R: Rng + ?Sized>(channels: usize, filters: usize, rng: &mut R) -> Self {
        Self { conv1: LayerParams::conv(channels, filters, rng), conv2: LayerParams::conv(filters, filters, rng) }
    }

    pub fn num_params(&self) -> usize {
        self.conv1.num_params() + self.conv2.num_params()
    }

    pub fn forward(&self, image: &Tensor) -> Result<Vec<f64>, NumError> {
        Ok(self.forward_cached(image)?.0)
    }

    pub(crate) fn forward_cached(&self, image: &Tensor) -> Result<(Vec<f64>, FeatureCache), NumError> {
        let conv1 = conv2d(image, &self.conv1)?;
        let relu1 = relu(&conv1)?;
        let pool1 = maxpool2(&relu1)?;
        let conv2 = conv2d(&pool1, &self.conv2)?;
        let relu2 = relu(&conv2)?;
        let out = maxpool2(&relu2)?.into_data();
        Ok((out, FeatureCache { conv1, relu1, pool1, conv2, relu2 }))
    }

    /// Accumulates conv gradients for `upstream` (gradient with respect to
    /// the flattened features). The image gradient is not needed.
    pub(crate) fn backward(&mut self, image: &Tensor, cache: &FeatureCache, upstream: &[f64]) -> Result<(), NumError> {
        let [h, w, c] = pooled_shape(&cache.relu2);
        let up = Tensor::new(vec![h, w, c], upstream.to_vec())?;
        let g = maxpool2_backward(&cache.relu2, &up)?;
        let g = relu_backward(&cache.conv2, &g)?;
        let g = conv2d_backward(&cache.pool1, &mut self.conv2, &g)?;
        let g = maxpool2_backward(&cache.relu1, &g)?;
        let g = relu_backward(&cache.conv1, &g)?;
        conv2d_param_backward(image, &mut self.conv1, &g)
    }
}

fn pooled_shape(t: &Tensor) -> [usize; 3] {
    let s = t.shape();
    [s[0] / 2, s[1] / 2, s[2]]
}
