use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpil_core::judge::{
    class_accuracy, domain_accuracy, train_discriminator, ClassLabel, DiscriminatorOptim, DiscriminatorParams,
    DomainLabel, LabeledSample,
};
use tpil_core::numkit::{AdamConfig, Tensor};
use tpil_core::worlds::Observation;

/// Background tint carries the domain; a bright square in the upper-left
/// quadrant marks the expert class.
fn frame(rng: &mut ChaCha8Rng, domain: DomainLabel, class: ClassLabel) -> Observation {
    let tint = match domain {
        DomainLabel::ExpertDomain => [0.7, 0.3, 0.3],
        DomainLabel::NoviceDomain => [0.3, 0.3, 0.7],
    };
    let mut data = Vec::with_capacity(50 * 50 * 3);
    for row in 0..50 {
        for col in 0..50 {
            let lit = class == ClassLabel::Expert && (5..20).contains(&row) && (5..20).contains(&col);
            for c in 0..3 {
                let v = if lit { 1.0 } else { tint[c] + rng.gen_range(-0.05..0.05) };
                data.push(v);
            }
        }
    }
    Observation { image: Tensor::new(vec![50, 50, 3], data).unwrap() }
}

struct Corpus {
    frames: Vec<(Observation, Observation, ClassLabel, DomainLabel)>,
}

impl Corpus {
    fn new(per_cell: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut frames = Vec::new();
        for domain in [DomainLabel::ExpertDomain, DomainLabel::NoviceDomain] {
            for class in [ClassLabel::Expert, ClassLabel::NonExpert] {
                // the novice domain only ever shows non-expert behavior, as in training
                if domain == DomainLabel::NoviceDomain && class == ClassLabel::Expert {
                    continue;
                }
                for _ in 0..per_cell {
                    frames.push((frame(&mut rng, domain, class), frame(&mut rng, domain, class), class, domain));
                }
            }
        }
        Self { frames }
    }

    fn samples(&self) -> Vec<LabeledSample<'_>> {
        self.frames
            .iter()
            .map(|(a, b, class, domain)| LabeledSample { obs_t: a, obs_tn: b, class: *class, domain: *domain })
            .collect()
    }
}

fn train(lambda: f64, corpus: &Corpus, passes: usize, seed: u64) -> DiscriminatorParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = DiscriminatorParams::new(lambda, 1, &mut rng).unwrap();
    let mut optim = DiscriminatorOptim::new(&params, AdamConfig::default());
    let samples = corpus.samples();
    for _ in 0..passes {
        train_discriminator(&mut params, &mut optim, &samples, 8, &mut rng).unwrap();
    }
    params
}

#[test]
fn training_is_bitwise_repeatable() {
    let corpus = Corpus::new(4, 1);
    let a = train(0.5, &corpus, 3, 9);
    let b = train(0.5, &corpus, 3, 9);
    let bits = |p: &DiscriminatorParams| p.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&train(0.5, &corpus, 3, 10)));
}

#[test]
fn unconfused_domain_head_separates_tinted_domains() {
    let corpus = Corpus::new(8, 2);
    let params = train(0.0, &corpus, 1, 3);
    // with lambda = 0 the domain head gets no gradient at all
    let fresh = DiscriminatorParams::new(0.0, 1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let range = params.domain_head_param_range();
    assert_eq!(params.params()[range.clone()], fresh.params()[range]);

    let params = train(1e-3, &corpus, 25, 3);
    let samples = corpus.samples();
    assert_eq!(domain_accuracy(&params, &samples).unwrap(), 1.0);
    assert_eq!(class_accuracy(&params, &samples).unwrap(), 1.0);
}

#[test]
fn overweighted_confusion_erases_domain_and_class_signal() {
    // domain and class are correlated here (novice frames are all
    // non-expert), so a dominant reversal term also wipes out the class cue
    let corpus = Corpus::new(8, 4);
    let samples = corpus.samples();
    let weak = train(1e-3, &corpus, 25, 5);
    let strong = train(10.0, &corpus, 25, 5);
    let (weak_dom, strong_dom) = (domain_accuracy(&weak, &samples).unwrap(), domain_accuracy(&strong, &samples).unwrap());
    assert!(strong_dom < weak_dom, "domain accuracy {strong_dom} vs {weak_dom}");
    let (weak_cls, strong_cls) = (class_accuracy(&weak, &samples).unwrap(), class_accuracy(&strong, &samples).unwrap());
    assert!(strong_cls < weak_cls, "class accuracy {strong_cls} vs {weak_cls}");
}
