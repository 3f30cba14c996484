use rand::Rng;

use super::{ensure_finite, NumError, Tensor};

/// Spatial size of every convolution filter.
const KERNEL: usize = 3;

/// Trainable weights and biases of one layer plus gradient accumulators of
/// the same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Tensor,
    pub biases: Tensor,
    pub grad_weights: Tensor,
    pub grad_biases: Tensor,
}

impl LayerParams {
    /// Wraps explicit weights and biases with zeroed accumulators.
    pub fn new(weights: Tensor, biases: Tensor) -> Self {
        let grad_weights = Tensor::zeros(weights.shape());
        let grad_biases = Tensor::zeros(biases.shape());
        Self { weights, biases, grad_weights, grad_biases }
    }

    /// Uniform in `[-a, a]` with `a = sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        weight_shape: &[usize],
        bias_len: usize,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut weights = Tensor::zeros(weight_shape);
        for w in weights.data_mut() {
            *w = rng.gen_range(-a..=a);
        }
        Self::new(weights, Tensor::zeros(&[bias_len]))
    }

    /// Dense layer `inputs -> outputs`.
    pub fn dense<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self::glorot(&[outputs, inputs], outputs, inputs, outputs, rng)
    }

    /// `filters` 3x3 filters over `channels` input channels.
    pub fn conv<R: Rng + ?Sized>(channels: usize, filters: usize, rng: &mut R) -> Self {
        let area = KERNEL * KERNEL;
        Self::glorot(&[filters, KERNEL, KERNEL, channels], filters, area * channels, area * filters, rng)
    }

    pub fn zeroed_like(&self) -> Self {
        Self::new(Tensor::zeros(self.weights.shape()), Tensor::zeros(self.biases.shape()))
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.fill(0.0);
        self.grad_biases.fill(0.0);
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Weights then biases, appended to `out`.
    pub fn extend_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.weights.data());
        out.extend_from_slice(self.biases.data());
    }

    pub fn extend_grads(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.grad_weights.data());
        out.extend_from_slice(self.grad_biases.data());
    }

    /// Reads weights then biases from the front of `src`; returns the rest.
    pub fn load_params<'a>(&mut self, src: &'a [f64]) -> &'a [f64] {
        let nw = self.weights.len();
        let nb = self.biases.len();
        self.weights.data_mut().copy_from_slice(&src[..nw]);
        self.biases.data_mut().copy_from_slice(&src[nw..nw + nb]);
        &src[nw + nb..]
    }
}

fn dims3(op: &'static str, t: &Tensor) -> Result<(usize, usize, usize), NumError> {
    match *t.shape() {
        [h, w, c] => Ok((h, w, c)),
        ref s => Err(NumError::shape(op, "H x W x C", format!("{s:?}"))),
    }
}

fn conv_dims(input: &Tensor, params: &LayerParams) -> Result<(usize, usize, usize, usize), NumError> {
    let (h, w, c) = dims3("conv2d", input)?;
    if h < KERNEL || w < KERNEL {
        return Err(NumError::shape("conv2d", "H, W >= 3", format!("{h} x {w}")));
    }
    let k = match *params.weights.shape() {
        [k, KERNEL, KERNEL, pc] if pc == c => k,
        ref s => {
            return Err(NumError::shape("conv2d", format!("[K, 3, 3, {c}] filters"), format!("{s:?}")))
        }
    };
    if params.biases.shape() != [k] {
        return Err(NumError::shape("conv2d", format!("[{k}] biases"), format!("{:?}", params.biases.shape())));
    }
    Ok((h, w, c, k))
}

const LANES: usize = 8;

/// Valid 3x3 convolution with stride 1: `H x W x C -> (H-2) x (W-2) x K`.
pub fn conv2d(input: &Tensor, params: &LayerParams) -> Result<Tensor, NumError> {
    let (h, w, c, k) = conv_dims(input, params)?;
    input.ensure_finite("conv2d")?;
    let (oh, ow) = (h - 2, w - 2);
    let inp = input.data();
    let wts = params.weights.data();
    let bias = params.biases.data();
    let row = KERNEL * c;
    let taps = KERNEL * row;
    // Filters transposed to tap-major order so every tap updates all output
    // channels of a pixel at once (independent accumulators).
    let mut wt = vec![0.0; taps * k];
    for f in 0..k {
        for j in 0..taps {
            wt[j * k + f] = wts[f * taps + j];
        }
    }
    let mut out = vec![0.0; oh * ow * k];
    for y in 0..oh {
        for x in 0..ow {
            let o = (y * ow + x) * k;
            if k <= LANES {
                // Register-resident accumulators for the usual small filter counts.
                let mut acc = [0.0; LANES];
                acc[..k].copy_from_slice(bias);
                for dy in 0..KERNEL {
                    let ib = ((y + dy) * w + x) * c;
                    let wrow = &wt[dy * row * k..(dy + 1) * row * k];
                    for (&v, wk) in inp[ib..ib + row].iter().zip(wrow.chunks_exact(k)) {
                        for f in 0..k {
                            acc[f] += v * wk[f];
                        }
                    }
                }
                out[o..o + k].copy_from_slice(&acc[..k]);
            } else {
                let acc = &mut out[o..o + k];
                acc.copy_from_slice(bias);
                for dy in 0..KERNEL {
                    let ib = ((y + dy) * w + x) * c;
                    let wrow = &wt[dy * row * k..(dy + 1) * row * k];
                    for (&v, wk) in inp[ib..ib + row].iter().zip(wrow.chunks_exact(k)) {
                        for (a, &wv) in acc.iter_mut().zip(wk) {
                            *a += v * wv;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![oh, ow, k], out)
}

/// Backward pass of [`conv2d`]: accumulates filter and bias gradients into
/// `params` and returns the gradient with respect to `input`.
pub fn conv2d_backward(
    input: &Tensor,
    params: &mut LayerParams,
    upstream: &Tensor,
) -> Result<Tensor, NumError> {
    conv_backward_impl(input, params, upstream, true).map(|g| g.expect("input gradient requested"))
}

/// Like [`conv2d_backward`] but skips the input gradient (first layer of a stack).
pub fn conv2d_param_backward(
    input: &Tensor,
    params: &mut LayerParams,
    upstream: &Tensor,
) -> Result<(), NumError> {
    conv_backward_impl(input, params, upstream, false).map(|_| ())
}

fn conv_backward_impl(
    input: &Tensor,
    params: &mut LayerParams,
    upstream: &Tensor,
    want_input: bool,
) -> Result<Option<Tensor>, NumError> {
    let (h, w, c, k) = conv_dims(input, params)?;
    let (oh, ow) = (h - 2, w - 2);
    if upstream.shape() != [oh, ow, k] {
        return Err(NumError::shape("conv2d_backward", format!("[{oh}, {ow}, {k}]"), format!("{:?}", upstream.shape())));
    }
    upstream.ensure_finite("conv2d_backward")?;
    let row = KERNEL * c;
    let taps = KERNEL * row;
    let inp = input.data();
    let up = upstream.data();
    let mut grad_in = if want_input { vec![0.0; inp.len()] } else { Vec::new() };
    let LayerParams { weights, grad_weights, grad_biases, .. } = params;
    let wts = weights.data();
    // Tap-major copies of the filters and their gradient, as in the forward pass.
    let mut wt = vec![0.0; taps * k];
    let mut gwt = vec![0.0; taps * k];
    for f in 0..k {
        for j in 0..taps {
            wt[j * k + f] = wts[f * taps + j];
        }
    }
    let gb = grad_biases.data_mut();
    for y in 0..oh {
        for x in 0..ow {
            let o = (y * ow + x) * k;
            let g = &up[o..o + k];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (b, &v) in gb.iter_mut().zip(g) {
                *b += v;
            }
            for dy in 0..KERNEL {
                let ib = ((y + dy) * w + x) * c;
                let span = dy * row * k..(dy + 1) * row * k;
                for (&v, gw) in inp[ib..ib + row].iter().zip(gwt[span.clone()].chunks_exact_mut(k)) {
                    for (a, &gv) in gw.iter_mut().zip(g) {
                        *a += v * gv;
                    }
                }
                if want_input {
                    for (gi, wk) in grad_in[ib..ib + row].iter_mut().zip(wt[span].chunks_exact(k)) {
                        *gi += dot(wk, g);
                    }
                }
            }
        }
    }
    let gw = grad_weights.data_mut();
    for f in 0..k {
        for j in 0..taps {
            gw[f * taps + j] += gwt[j * k + f];
        }
    }
    if want_input {
        Ok(Some(Tensor::new(vec![h, w, c], grad_in)?))
    } else {
        Ok(None)
    }
}

/// Non-overlapping 2x2 max pooling; a trailing odd row or column is dropped.
pub fn maxpool2(input: &Tensor) -> Result<Tensor, NumError> {
    let (h, w, c) = dims3("maxpool2", input)?;
    if h < 2 || w < 2 {
        return Err(NumError::shape("maxpool2", "H, W >= 2", format!("{h} x {w}")));
    }
    input.ensure_finite("maxpool2")?;
    let (oh, ow) = (h / 2, w / 2);
    let inp = input.data();
    let mut out = vec![0.0; oh * ow * c];
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                out[(y * ow + x) * c + ch] = inp[argmax_window(inp, w, c, y, x, ch)];
            }
        }
    }
    Tensor::new(vec![oh, ow, c], out)
}

/// Routes each upstream value to the first maximal element of its window
/// (row-major order).
pub fn maxpool2_backward(input: &Tensor, upstream: &Tensor) -> Result<Tensor, NumError> {
    let (h, w, c) = dims3("maxpool2_backward", input)?;
    if h < 2 || w < 2 {
        return Err(NumError::shape("maxpool2_backward", "H, W >= 2", format!("{h} x {w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    if upstream.shape() != [oh, ow, c] {
        return Err(NumError::shape("maxpool2_backward", format!("[{oh}, {ow}, {c}]"), format!("{:?}", upstream.shape())));
    }
    let inp = input.data();
    let up = upstream.data();
    let mut grad = vec![0.0; inp.len()];
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                grad[argmax_window(inp, w, c, y, x, ch)] += up[(y * ow + x) * c + ch];
            }
        }
    }
    Tensor::new(vec![h, w, c], grad)
}

#[inline]
fn argmax_window(inp: &[f64], w: usize, c: usize, y: usize, x: usize, ch: usize) -> usize {
    let at = |yy: usize, xx: usize| (yy * w + xx) * c + ch;
    let candidates = [at(2 * y, 2 * x), at(2 * y, 2 * x + 1), at(2 * y + 1, 2 * x), at(2 * y + 1, 2 * x + 1)];
    let mut best = candidates[0];
    for &i in &candidates[1..] {
        if inp[i] > inp[best] {
            best = i;
        }
    }
    best
}

fn dense_dims(op: &'static str, input: &Tensor, params: &LayerParams) -> Result<(usize, usize), NumError> {
    let (m, n) = match *params.weights.shape() {
        [m, n] => (m, n),
        ref s => return Err(NumError::shape(op, "[m, n] weights", format!("{s:?}"))),
    };
    if input.len() != n {
        return Err(NumError::shape(op, format!("input of length {n}"), format!("length {}", input.len())));
    }
    if params.biases.shape() != [m] {
        return Err(NumError::shape(op, format!("[{m}] biases"), format!("{:?}", params.biases.shape())));
    }
    Ok((m, n))
}

/// `W x + b`.
pub fn dense(input: &Tensor, params: &LayerParams) -> Result<Tensor, NumError> {
    let (m, n) = dense_dims("dense", input, params)?;
    input.ensure_finite("dense")?;
    let x = input.data();
    let wts = params.weights.data();
    let out = params
        .biases
        .data()
        .iter()
        .enumerate()
        .map(|(i, b)| b + dot(&wts[i * n..(i + 1) * n], x))
        .collect::<Vec<_>>();
    debug_assert_eq!(out.len(), m);
    Ok(Tensor::vector(out))
}

pub fn dense_backward(
    input: &Tensor,
    params: &mut LayerParams,
    upstream: &Tensor,
) -> Result<Tensor, NumError> {
    let (m, n) = dense_dims("dense_backward", input, params)?;
    if upstream.len() != m {
        return Err(NumError::shape("dense_backward", format!("upstream of length {m}"), format!("length {}", upstream.len())));
    }
    upstream.ensure_finite("dense_backward")?;
    let x = input.data();
    let up = upstream.data();
    let LayerParams { weights, grad_weights, grad_biases, .. } = params;
    let wts = weights.data();
    let gw = grad_weights.data_mut();
    let gb = grad_biases.data_mut();
    let mut grad_in = vec![0.0; n];
    for (i, &g) in up.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        gb[i] += g;
        axpy(g, x, &mut gw[i * n..(i + 1) * n]);
        axpy(g, &wts[i * n..(i + 1) * n], &mut grad_in);
    }
    Ok(Tensor::vector(grad_in))
}

/// Elementwise nonlinearity used between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn forward(self, input: &Tensor) -> Result<Tensor, NumError> {
        match self {
            Activation::Relu => relu(input),
            Activation::Tanh => tanh(input),
        }
    }

    /// `input` and `output` are the pre- and post-activation values.
    pub fn backward(self, input: &Tensor, output: &Tensor, upstream: &Tensor) -> Result<Tensor, NumError> {
        match self {
            Activation::Relu => relu_backward(input, upstream),
            Activation::Tanh => tanh_backward(output, upstream),
        }
    }

    /// Derivative at a pre-activation `x` whose activation is `y`.
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

pub fn relu(input: &Tensor) -> Result<Tensor, NumError> {
    input.ensure_finite("relu")?;
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|x| *x = x.max(0.0));
    Ok(out)
}

/// Derivative at exactly zero is taken as zero.
pub fn relu_backward(input: &Tensor, upstream: &Tensor) -> Result<Tensor, NumError> {
    same_shape("relu_backward", input, upstream)?;
    let mut g = upstream.clone();
    for (gi, &x) in g.data_mut().iter_mut().zip(input.data()) {
        if x <= 0.0 {
            *gi = 0.0;
        }
    }
    Ok(g)
}

pub fn tanh(input: &Tensor) -> Result<Tensor, NumError> {
    input.ensure_finite("tanh")?;
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|x| *x = x.tanh());
    Ok(out)
}

/// Takes the forward *output* `y`; the derivative is `1 - y^2`.
pub fn tanh_backward(output: &Tensor, upstream: &Tensor) -> Result<Tensor, NumError> {
    same_shape("tanh_backward", output, upstream)?;
    let mut g = upstream.clone();
    for (gi, &y) in g.data_mut().iter_mut().zip(output.data()) {
        *gi *= 1.0 - y * y;
    }
    Ok(g)
}

/// Identity on the way forward.
pub fn gradient_reversal(input: &Tensor) -> Tensor {
    input.clone()
}

/// Negates the upstream gradient.
pub fn gradient_reversal_backward(upstream: &Tensor) -> Tensor {
    let mut g = upstream.clone();
    g.data_mut().iter_mut().for_each(|x| *x = -*x);
    g
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), NumError> {
    if a.shape() != b.shape() {
        return Err(NumError::shape(op, format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    ensure_finite(op, b.data())
}

/// Dot product with four independent accumulators so the adds pipeline.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ac, bc) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ac.remainder().iter().zip(bc.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ac.zip(bc) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_difference_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let mut t = Tensor::zeros(shape);
        t.data_mut().iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        t
    }

    /// Fixed random projection turns any tensor into a scalar loss.
    fn probe(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        random_tensor(shape, rng)
    }

    fn inner(a: &Tensor, b: &Tensor) -> f64 {
        dot(a.data(), b.data())
    }

    #[test]
    fn conv_identity_kernel_extracts_center() {
        let input = Tensor::new(vec![5, 5, 1], (0..25).map(f64::from).collect()).unwrap();
        let mut w = Tensor::zeros(&[1, 3, 3, 1]);
        w.data_mut()[4] = 1.0;
        let p = LayerParams::new(w, Tensor::zeros(&[1]));
        let out = conv2d(&input, &p).unwrap();
        assert_eq!(out.shape(), &[3, 3, 1]);
        let expected: Vec<f64> = [6, 7, 8, 11, 12, 13, 16, 17, 18].iter().map(|&v| v as f64).collect();
        assert_eq!(out.data(), expected.as_slice());
    }

    #[test]
    fn conv_zero_input_gives_bias() {
        let mut p = LayerParams::conv(2, 3, &mut rng());
        p.biases = Tensor::vector(vec![0.5, -1.0, 2.0]);
        let out = conv2d(&Tensor::zeros(&[4, 6, 2]), &p).unwrap();
        assert_eq!(out.shape(), &[2, 4, 3]);
        for px in out.data().chunks(3) {
            assert_eq!(px, &[0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn conv_rejects_bad_input() {
        let p = LayerParams::conv(2, 3, &mut rng());
        assert!(matches!(conv2d(&Tensor::zeros(&[5, 5, 3]), &p), Err(NumError::Shape { .. })));
        assert!(matches!(conv2d(&Tensor::zeros(&[2, 5, 2]), &p), Err(NumError::Shape { .. })));
        let mut bad = Tensor::zeros(&[5, 5, 2]);
        bad.data_mut()[3] = f64::INFINITY;
        assert!(matches!(conv2d(&bad, &p), Err(NumError::NonFinite { .. })));
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut r = rng();
        let input = random_tensor(&[6, 6, 2], &mut r);
        let mut params = LayerParams::conv(2, 3, &mut r);
        params.biases = random_tensor(&[3], &mut r);
        let pr = probe(&[4, 4, 3], &mut r);

        // Parameters.
        let mut theta = Vec::new();
        params.extend_params(&mut theta);
        let report = finite_difference_check(
            |th| {
                let mut p = params.clone();
                p.load_params(th);
                p.zero_grad();
                let out = conv2d(&input, &p).unwrap();
                conv2d_backward(&input, &mut p, &pr).unwrap();
                let mut g = Vec::new();
                p.extend_grads(&mut g);
                (inner(&out, &pr), g)
            },
            &theta,
            None,
        );
        assert!(report.max_rel_error <= 1e-5, "{report:?}");

        // Input.
        let report = finite_difference_check(
            |x| {
                let t = Tensor::new(vec![6, 6, 2], x.to_vec()).unwrap();
                let mut p = params.clone();
                let out = conv2d(&t, &p).unwrap();
                let g = conv2d_backward(&t, &mut p, &pr).unwrap();
                (inner(&out, &pr), g.into_data())
            },
            input.data(),
            None,
        );
        assert!(report.max_rel_error <= 1e-5, "{report:?}");
    }

    #[test]
    fn maxpool_picks_window_max() {
        let t = Tensor::new(vec![2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(maxpool2(&t).unwrap().data(), &[4.0]);
        let odd = Tensor::zeros(&[5, 3, 2]);
        assert_eq!(maxpool2(&odd).unwrap().shape(), &[2, 1, 2]);
        assert!(maxpool2(&Tensor::zeros(&[1, 4, 1])).is_err());
    }

    #[test]
    fn maxpool_tie_routes_to_first_element() {
        let t = Tensor::filled(&[4, 4, 1], 3.0);
        let out = maxpool2(&t).unwrap();
        assert!(out.data().iter().all(|&v| v == 3.0));
        let g = maxpool2_backward(&t, &Tensor::filled(&[2, 2, 1], 1.0)).unwrap();
        let expected = [
            1.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            1.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 0.0,
        ];
        assert_eq!(g.data(), &expected);
    }

    #[test]
    fn maxpool_gradient_matches_finite_differences() {
        let mut r = rng();
        // Distinct values well separated so a 1e-6 step never crosses a tie.
        let mut vals: Vec<f64> = (0..8 * 8 * 5).map(|i| i as f64 * 0.01).collect();
        for i in (1..vals.len()).rev() {
            let j = r.gen_range(0..=i);
            vals.swap(i, j);
        }
        let input = Tensor::new(vec![8, 8, 5], vals).unwrap();
        let pr = probe(&[4, 4, 5], &mut r);
        let report = finite_difference_check(
            |x| {
                let t = Tensor::new(vec![8, 8, 5], x.to_vec()).unwrap();
                let out = maxpool2(&t).unwrap();
                (inner(&out, &pr), maxpool2_backward(&t, &pr).unwrap().into_data())
            },
            input.data(),
            None,
        );
        assert!(report.max_rel_error <= 1e-5, "{report:?}");
    }

    #[test]
    fn dense_identity_and_constant() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.5]);
        let mut w = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        let id = LayerParams::new(w, Tensor::zeros(&[3]));
        assert_eq!(dense(&x, &id).unwrap(), x);
        let c = LayerParams::new(Tensor::zeros(&[2, 3]), Tensor::vector(vec![4.0, -1.0]));
        assert_eq!(dense(&x, &c).unwrap().data(), &[4.0, -1.0]);
        assert!(dense(&Tensor::vector(vec![1.0]), &c).is_err());
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut r = rng();
        let x = random_tensor(&[10], &mut r);
        let mut params = LayerParams::dense(10, 7, &mut r);
        params.biases = random_tensor(&[7], &mut r);
        let pr = probe(&[7], &mut r);
        let mut theta = Vec::new();
        params.extend_params(&mut theta);
        theta.extend_from_slice(x.data());
        let np = params.num_params();
        let report = finite_difference_check(
            |th| {
                let mut p = params.clone();
                let rest = p.load_params(th);
                p.zero_grad();
                let xi = Tensor::vector(rest.to_vec());
                let out = dense(&xi, &p).unwrap();
                let gx = dense_backward(&xi, &mut p, &pr).unwrap();
                let mut g = Vec::with_capacity(np + 10);
                p.extend_grads(&mut g);
                g.extend_from_slice(gx.data());
                (inner(&out, &pr), g)
            },
            &theta,
            None,
        );
        assert!(report.max_rel_error <= 1e-5, "{report:?}");
    }

    #[test]
    fn activations() {
        let x = Tensor::vector(vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).unwrap().data(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&x, &Tensor::filled(&[3], 1.0)).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
        let z = Tensor::vector(vec![0.0]);
        let y = tanh(&z).unwrap();
        assert_eq!(y.data(), &[0.0]);
        assert_eq!(tanh_backward(&y, &Tensor::vector(vec![1.0])).unwrap().data(), &[1.0]);
    }

    #[test]
    fn activation_gradients_match_finite_differences() {
        let mut r = rng();
        let mut x = random_tensor(&[20], &mut r);
        // Keep relu inputs away from the kink.
        x.data_mut().iter_mut().for_each(|v| {
            if v.abs() < 0.05 {
                *v += 0.1
            }
        });
        let pr = probe(&[20], &mut r);
        for act in [Activation::Relu, Activation::Tanh] {
            let report = finite_difference_check(
                |xs| {
                    let t = Tensor::vector(xs.to_vec());
                    let y = act.forward(&t).unwrap();
                    (inner(&y, &pr), act.backward(&t, &y, &pr).unwrap().into_data())
                },
                x.data(),
                None,
            );
            assert!(report.max_rel_error <= 1e-5, "{act:?} {report:?}");
        }
    }

    #[test]
    fn reversal_is_identity_forward_and_negation_backward() {
        let x = Tensor::vector(vec![1.0, -2.5, 3.0]);
        let y = gradient_reversal(&x);
        assert!(x.data().iter().zip(y.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        let g = gradient_reversal_backward(&Tensor::vector(vec![0.5, -1.0, 2.0]));
        assert_eq!(g.data(), &[-0.5, 1.0, -2.0]);
    }

    #[test]
    fn reversal_composed_gradient_is_negated() {
        // f(G(x)) = sum(tanh(x)); the reversed backward gives -grad f.
        let x = Tensor::vector(vec![0.3, -0.7, 1.1]);
        let up = Tensor::filled(&[3], 1.0);
        let y = tanh(&gradient_reversal(&x)).unwrap();
        let reversed = gradient_reversal_backward(&tanh_backward(&y, &up).unwrap());
        let report = finite_difference_check(
            |xs| {
                let t = Tensor::vector(xs.to_vec());
                let y = tanh(&t).unwrap();
                let neg = reversed.data().iter().map(|g| -g).collect();
                (y.data().iter().sum(), neg)
            },
            x.data(),
            None,
        );
        assert!(report.max_rel_error <= 1e-5, "{report:?}");
    }
}
