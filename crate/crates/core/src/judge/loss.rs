use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::features::{FeatureCache, FEATURE_LEN};
use super::{argmax2, ClassLabel, DiscriminatorParams, DomainLabel, JudgeError};
use crate::numkit::{
    adam_step, gradient_reversal, gradient_reversal_backward, softmax_cross_entropy, AdamConfig, AdamState, Tensor,
};
use crate::worlds::Observation;

/// One discriminator training example: a frame pair with its class label and
/// the domain label of the first frame.
#[derive(Debug, Clone, Copy)]
pub struct LabeledSample<'a> {
    pub obs_t: &'a Observation,
    pub obs_tn: &'a Observation,
    pub class: ClassLabel,
    pub domain: DomainLabel,
}

/// Batch-mean losses plus prediction counts from the same forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// `class_ce + lambda * domain_ce`.
    pub total: f64,
    pub class_ce: f64,
    pub domain_ce: f64,
    pub class_correct: usize,
    pub domain_correct: usize,
    pub count: usize,
}

/// Summary of one pass of [`train_discriminator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub loss: f64,
    pub class_ce: f64,
    pub domain_ce: f64,
    /// Accuracies of the predictions made just before each minibatch update.
    pub class_accuracy: f64,
    pub domain_accuracy: f64,
    pub minibatches: usize,
}

/// ADAM moments for every discriminator layer, in canonical layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorOptim {
    states: Vec<AdamState>,
}

impl DiscriminatorOptim {
    pub fn new(params: &DiscriminatorParams, config: AdamConfig) -> Self {
        Self { states: params.layers().into_iter().map(|l| AdamState::new(l, config)).collect() }
    }

    pub fn step(&mut self, params: &mut DiscriminatorParams) -> Result<(), JudgeError> {
        for (layer, state) in params.layers_mut().into_iter().zip(&mut self.states) {
            adam_step(layer, state)?;
        }
        Ok(())
    }
}

/// Distinct frames of a batch (by address) and, per sample, the indices of
/// its two frames.
fn unique_frames<'a>(batch: &[LabeledSample<'a>]) -> (Vec<&'a Observation>, Vec<(usize, usize)>) {
    let mut frames = Vec::new();
    let mut seen: HashMap<*const Observation, usize> = HashMap::new();
    let mut index = |o: &'a Observation| {
        *seen.entry(o as *const Observation).or_insert_with(|| {
            frames.push(o);
            frames.len() - 1
        })
    };
    let pairs = batch.iter().map(|s| (index(s.obs_t), index(s.obs_tn))).collect();
    (frames, pairs)
}

fn joint(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

/// Forward-only batch losses.
pub fn evaluate_loss(params: &DiscriminatorParams, batch: &[LabeledSample]) -> Result<LossBreakdown, JudgeError> {
    if batch.is_empty() {
        return Err(JudgeError::EmptyBatch);
    }
    let (frames, pairs) = unique_frames(batch);
    let feats = frames.iter().map(|f| params.features.forward(&f.image)).collect::<Result<Vec<_>, _>>()?;
    let mut acc = Accumulator::default();
    for (s, &(i, j)) in batch.iter().zip(&pairs) {
        let logits = params.class_head.forward(&joint(&feats[i], &feats[j]))?;
        let (ce, _) = softmax_cross_entropy(&Tensor::vector(logits.clone()), s.class.index())?;
        acc.class(ce, argmax2(&logits) == s.class.index());
        let dlogits = params.domain_head.forward(gradient_reversal(&Tensor::vector(feats[i].clone())).data())?;
        let (dce, _) = softmax_cross_entropy(&Tensor::vector(dlogits.clone()), s.domain.index())?;
        acc.domain(dce, argmax2(&dlogits) == s.domain.index());
    }
    Ok(acc.finish(batch.len(), params.lambda))
}

#[derive(Default)]
struct Accumulator {
    class_ce: f64,
    domain_ce: f64,
    class_correct: usize,
    domain_correct: usize,
}

impl Accumulator {
    fn class(&mut self, ce: f64, correct: bool) {
        self.class_ce += ce;
        self.class_correct += usize::from(correct);
    }

    fn domain(&mut self, ce: f64, correct: bool) {
        self.domain_ce += ce;
        self.domain_correct += usize::from(correct);
    }

    fn finish(self, n: usize, lambda: f64) -> LossBreakdown {
        let class_ce = self.class_ce / n as f64;
        let domain_ce = self.domain_ce / n as f64;
        LossBreakdown {
            total: class_ce + lambda * domain_ce,
            class_ce,
            domain_ce,
            class_correct: self.class_correct,
            domain_correct: self.domain_correct,
            count: n,
        }
    }
}

/// Batch-mean loss `mean(CE_class + lambda * CE_domain)`. Gradients of that
/// mean are left in the parameter accumulators (previous contents are
/// cleared). The domain gradient reaches the feature extractor through the
/// reversal layer, so the extractor receives `grad_class - lambda * grad_domain`.
pub fn discriminator_loss(
    params: &mut DiscriminatorParams,
    batch: &[LabeledSample],
) -> Result<LossBreakdown, JudgeError> {
    if batch.is_empty() {
        return Err(JudgeError::EmptyBatch);
    }
    params.zero_grad();
    let (frames, pairs) = unique_frames(batch);
    let mut feats = Vec::with_capacity(frames.len());
    let mut caches: Vec<FeatureCache> = Vec::with_capacity(frames.len());
    for f in &frames {
        let (s, c) = params.features.forward_cached(&f.image)?;
        feats.push(s);
        caches.push(c);
    }
    let scale = 1.0 / batch.len() as f64;
    let lambda = params.lambda;
    let mut dsigma = vec![vec![0.0; FEATURE_LEN]; frames.len()];
    let mut acc = Accumulator::default();
    for (s, &(i, j)) in batch.iter().zip(&pairs) {
        let (logits, cache) = params.class_head.forward_cached(&joint(&feats[i], &feats[j]))?;
        let (ce, g) = softmax_cross_entropy(&Tensor::vector(logits.clone()), s.class.index())?;
        acc.class(ce, argmax2(&logits) == s.class.index());
        let g: Vec<f64> = g.data().iter().map(|x| x * scale).collect();
        let dj = params.class_head.backward(&cache, &g)?;
        add_into(&mut dsigma[i], &dj[..FEATURE_LEN]);
        add_into(&mut dsigma[j], &dj[FEATURE_LEN..]);

        let reversed = gradient_reversal(&Tensor::vector(feats[i].clone()));
        let (dlogits, dcache) = params.domain_head.forward_cached(reversed.data())?;
        let (dce, dg) = softmax_cross_entropy(&Tensor::vector(dlogits.clone()), s.domain.index())?;
        acc.domain(dce, argmax2(&dlogits) == s.domain.index());
        if lambda > 0.0 {
            let dg: Vec<f64> = dg.data().iter().map(|x| x * lambda * scale).collect();
            let dr = params.domain_head.backward(&dcache, &dg)?;
            add_into(&mut dsigma[i], gradient_reversal_backward(&Tensor::vector(dr)).data());
        }
    }
    for ((f, cache), ds) in frames.iter().zip(&caches).zip(&dsigma) {
        params.features.backward(&f.image, cache, ds)?;
    }
    Ok(acc.finish(batch.len(), lambda))
}

/// One pass over `samples` in shuffled minibatches with an ADAM step after
/// each.
pub fn train_discriminator<R: Rng + ?Sized>(
    params: &mut DiscriminatorParams,
    optim: &mut DiscriminatorOptim,
    samples: &[LabeledSample],
    minibatch: usize,
    rng: &mut R,
) -> Result<TrainStats, JudgeError> {
    if samples.is_empty() {
        return Err(JudgeError::EmptyBatch);
    }
    if minibatch == 0 {
        return Err(JudgeError::Invalid("minibatch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let (mut loss, mut class_ce, mut domain_ce) = (0.0, 0.0, 0.0);
    let (mut class_correct, mut domain_correct, mut minibatches) = (0, 0, 0);
    for chunk in order.chunks(minibatch) {
        let batch: Vec<LabeledSample> = chunk.iter().map(|&k| samples[k]).collect();
        let b = discriminator_loss(params, &batch)?;
        optim.step(params)?;
        let w = batch.len() as f64;
        loss += b.total * w;
        class_ce += b.class_ce * w;
        domain_ce += b.domain_ce * w;
        class_correct += b.class_correct;
        domain_correct += b.domain_correct;
        minibatches += 1;
    }
    let n = samples.len() as f64;
    Ok(TrainStats {
        loss: loss / n,
        class_ce: class_ce / n,
        domain_ce: domain_ce / n,
        class_accuracy: class_correct as f64 / n,
        domain_accuracy: domain_correct as f64 / n,
        minibatches,
    })
}

/// Fraction of samples whose class-head argmax matches the label.
pub fn class_accuracy(params: &DiscriminatorParams, batch: &[LabeledSample]) -> Result<f64, JudgeError> {
    let b = evaluate_loss(params, batch)?;
    Ok(b.class_correct as f64 / b.count as f64)
}

/// Fraction of samples whose domain-head argmax (ties to the expert domain)
/// matches the domain label of `obs_t`.
pub fn domain_accuracy(params: &DiscriminatorParams, batch: &[LabeledSample]) -> Result<f64, JudgeError> {
    if batch.is_empty() {
        return Err(JudgeError::EmptyBatch);
    }
    let mut correct = 0usize;
    let mut cache: HashMap<*const Observation, usize> = HashMap::new();
    for s in batch {
        let pred = match cache.get(&(s.obs_t as *const Observation)) {
            Some(&p) => p,
            None => {
                let sigma = params.extract_features(s.obs_t)?;
                let p = argmax2(&params.classify_domain(&sigma)?);
                cache.insert(s.obs_t as *const Observation, p);
                p
            }
        };
        correct += usize::from(pred == s.domain.index());
    }
    Ok(correct as f64 / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_difference_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(rng: &mut ChaCha8Rng, tint: [f64; 3]) -> Observation {
        let data = (0..50 * 50 * 3).map(|k| (tint[k % 3] + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0)).collect();
        Observation { image: Tensor::new(vec![50, 50, 3], data).unwrap() }
    }

    #[test]
    fn zero_network_loss_is_one_plus_lambda_ln2() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let frames: Vec<Observation> = (0..4).map(|_| frame(&mut rng, [0.5, 0.5, 0.5])).collect();
        let batch = vec![
            LabeledSample { obs_t: &frames[0], obs_tn: &frames[1], class: ClassLabel::Expert, domain: DomainLabel::ExpertDomain },
            LabeledSample { obs_t: &frames[2], obs_tn: &frames[3], class: ClassLabel::NonExpert, domain: DomainLabel::NoviceDomain },
        ];
        for lambda in [0.0, 0.2, 1.0] {
            let mut p = DiscriminatorParams::zeroed(lambda, 4).unwrap();
            let b = discriminator_loss(&mut p, &batch).unwrap();
            let want = (1.0 + lambda) * std::f64::consts::LN_2;
            assert!((b.total - want).abs() < 1e-12, "lambda {lambda}: {}", b.total);
            assert_eq!(evaluate_loss(&p, &batch).unwrap().total, b.total);
            // Ties go to index 0.
            assert_eq!(domain_accuracy(&p, &batch).unwrap(), 0.5);
        }
        assert_eq!(discriminator_loss(&mut DiscriminatorParams::zeroed(0.2, 4).unwrap(), &[]), Err(JudgeError::EmptyBatch));
    }

    #[test]
    fn shared_frames_are_deduplicated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frames: Vec<Observation> = (0..3).map(|_| frame(&mut rng, [0.4, 0.5, 0.6])).collect();
        let batch = vec![
            LabeledSample { obs_t: &frames[0], obs_tn: &frames[1], class: ClassLabel::Expert, domain: DomainLabel::ExpertDomain },
            LabeledSample { obs_t: &frames[1], obs_tn: &frames[2], class: ClassLabel::Expert, domain: DomainLabel::ExpertDomain },
        ];
        let (u, pairs) = unique_frames(&batch);
        assert_eq!(u.len(), 3);
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn gradients_match_finite_differences_with_reversed_extractor_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = DiscriminatorParams::new(0.5, 4, &mut rng).unwrap();
        let frames: Vec<Observation> =
            (0..4).map(|k| frame(&mut rng, [0.2 + 0.2 * k as f64, 0.5, 0.8 - 0.2 * k as f64])).collect();
        let batch = vec![
            LabeledSample { obs_t: &frames[0], obs_tn: &frames[1], class: ClassLabel::Expert, domain: DomainLabel::ExpertDomain },
            LabeledSample { obs_t: &frames[2], obs_tn: &frames[3], class: ClassLabel::NonExpert, domain: DomainLabel::NoviceDomain },
            LabeledSample { obs_t: &frames[1], obs_tn: &frames[2], class: ClassLabel::NonExpert, domain: DomainLabel::ExpertDomain },
        ];
        let theta = params.params();
        let analytic = {
            let mut p = params.clone();
            discriminator_loss(&mut p, &batch).unwrap();
            p.grads()
        };
        // Heads descend the total loss; the extractor sees the domain term
        // through the reversal, so it descends class_ce - lambda * domain_ce.
        let heads: Vec<usize> = (params.feature_param_range().end..theta.len()).step_by(211).chain(params.domain_head_param_range().rev().take(20)).collect();
        let features: Vec<usize> = params.feature_param_range().step_by(3).collect();
        for (idx, sign) in [(heads, 1.0), (features, -1.0)] {
            let report = finite_difference_check(
                |th| {
                    let mut p = params.clone();
                    p.set_params(th).unwrap();
                    let b = evaluate_loss(&p, &batch).unwrap();
                    (b.class_ce + sign * p.lambda * b.domain_ce, analytic.clone())
                },
                &theta,
                Some(&idx),
            );
            assert!(report.max_rel_error <= 1e-5, "sign {sign}: {report:?}");
        }
    }

    #[test]
    fn separable_classes_are_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let expert: Vec<Observation> = (0..8).map(|_| frame(&mut rng, [0.8, 0.2, 0.2])).collect();
        let other: Vec<Observation> = (0..8).map(|_| frame(&mut rng, [0.2, 0.2, 0.8])).collect();
        let mut samples = Vec::new();
        for k in 0..7 {
            samples.push(LabeledSample { obs_t: &expert[k], obs_tn: &expert[k + 1], class: ClassLabel::Expert, domain: DomainLabel::ExpertDomain });
            samples.push(LabeledSample { obs_t: &other[k], obs_tn: &other[k + 1], class: ClassLabel::NonExpert, domain: DomainLabel::ExpertDomain });
        }
        let mut params = DiscriminatorParams::new(0.0, 1, &mut rng).unwrap();
        let mut optim = DiscriminatorOptim::new(&params, AdamConfig::default());
        let before = evaluate_loss(&params, &samples).unwrap().class_ce;
        for _ in 0..30 {
            train_discriminator(&mut params, &mut optim, &samples, 4, &mut rng).unwrap();
        }
        let after = evaluate_loss(&params, &samples).unwrap();
        assert!(after.class_ce < before * 0.5, "{before} -> {}", after.class_ce);
        assert_eq!(class_accuracy(&params, &samples).unwrap(), 1.0);
    }
}
