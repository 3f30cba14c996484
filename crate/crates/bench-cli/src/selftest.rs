//! Numerical self-checks: finite-difference gradients of every layer and
//! loss, the conjugate-gradient solver and the Fisher-vector product.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpil_core::judge::{evaluate_loss, discriminator_loss, ClassLabel, DiscriminatorParams, DomainLabel, LabeledSample};
use tpil_core::numkit::{
    conv2d, conv2d_backward, dense, dense_backward, finite_difference_check, maxpool2, maxpool2_backward,
    softmax_cross_entropy, AdamConfig, Activation, FdReport, LayerParams, Tensor,
};
use tpil_core::trpo::{conjugate_gradient, fisher_vector_product, GaussianPolicy, ValueFunction};
use tpil_core::worlds::{DomainConfig, EnvKind, EnvSpec, Observation, World};

/// Largest accepted finite-difference relative error.
pub const FD_TOLERANCE: f64 = 1e-5;
pub const CG_TOLERANCE: f64 = 1e-8;
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Measured error (or, for positivity, the smallest quadratic form).
    pub value: f64,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{verdict} {:<28} {:.3e}  {}", self.name, self.value, self.detail)
    }
}

fn fd(name: &str, report: FdReport) -> Check {
    Check {
        name: name.into(),
        value: report.max_rel_error,
        passed: report.max_rel_error <= FD_TOLERANCE,
        detail: format!(
            "{} coordinates, worst index {} (analytic {:.6e}, numeric {:.6e})",
            report.checked, report.worst_index, report.analytic, report.numeric
        ),
    }
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    t.data_mut().iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
    t
}

fn inner(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Parameters and input of one conv layer against a random projection.
fn conv_check(filters: usize, rng: &mut ChaCha8Rng) -> Vec<Check> {
    let input = random_tensor(&[7, 6, 3], rng);
    let mut params = LayerParams::conv(3, filters, rng);
    params.biases = random_tensor(&[filters], rng);
    let probe = random_tensor(&[5, 4, filters], rng);
    let mut theta = Vec::new();
    params.extend_params(&mut theta);
    let by_params = finite_difference_check(
        |th| {
            let mut p = params.clone();
            p.load_params(th);
            p.zero_grad();
            let out = conv2d(&input, &p).expect("conv");
            conv2d_backward(&input, &mut p, &probe).expect("conv backward");
            let mut g = Vec::new();
            p.extend_grads(&mut g);
            (inner(&out, &probe), g)
        },
        &theta,
        None,
    );
    let by_input = finite_difference_check(
        |x| {
            let t = Tensor::new(vec![7, 6, 3], x.to_vec()).expect("shape");
            let mut p = params.clone();
            let out = conv2d(&t, &p).expect("conv");
            (inner(&out, &probe), conv2d_backward(&t, &mut p, &probe).expect("conv backward").into_data())
        },
        input.data(),
        None,
    );
    vec![fd(&format!("conv{filters} params"), by_params), fd(&format!("conv{filters} input"), by_input)]
}

fn pool_check(rng: &mut ChaCha8Rng) -> Check {
    // Distinct, well separated values: a step never crosses a tie.
    let mut vals: Vec<f64> = (0..9 * 8 * 4).map(|i| i as f64 * 0.01).collect();
    vals.shuffle(rng);
    let input = Tensor::new(vec![9, 8, 4], vals).expect("shape");
    let probe = random_tensor(&[4, 4, 4], rng);
    fd(
        "maxpool2",
        finite_difference_check(
            |x| {
                let t = Tensor::new(vec![9, 8, 4], x.to_vec()).expect("shape");
                let out = maxpool2(&t).expect("pool");
                (inner(&out, &probe), maxpool2_backward(&t, &probe).expect("pool backward").into_data())
            },
            input.data(),
            None,
        ),
    )
}

fn dense_check(rng: &mut ChaCha8Rng) -> Check {
    let x = random_tensor(&[12], rng);
    let mut params = LayerParams::dense(12, 6, rng);
    params.biases = random_tensor(&[6], rng);
    let probe = random_tensor(&[6], rng);
    let mut theta = Vec::new();
    params.extend_params(&mut theta);
    theta.extend_from_slice(x.data());
    fd(
        "dense params+input",
        finite_difference_check(
            |th| {
                let mut p = params.clone();
                let rest = p.load_params(th);
                p.zero_grad();
                let xi = Tensor::vector(rest.to_vec());
                let out = dense(&xi, &p).expect("dense");
                let gx = dense_backward(&xi, &mut p, &probe).expect("dense backward");
                let mut g = Vec::new();
                p.extend_grads(&mut g);
                g.extend_from_slice(gx.data());
                (inner(&out, &probe), g)
            },
            &theta,
            None,
        ),
    )
}

fn activation_checks(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let mut x = random_tensor(&[24], rng);
    // Away from the relu kink.
    x.data_mut().iter_mut().for_each(|v| {
        if v.abs() < 0.05 {
            *v += 0.1
        }
    });
    let probe = random_tensor(&[24], rng);
    [(Activation::Relu, "relu"), (Activation::Tanh, "tanh")]
        .into_iter()
        .map(|(act, name)| {
            fd(
                name,
                finite_difference_check(
                    |xs| {
                        let t = Tensor::vector(xs.to_vec());
                        let y = act.forward(&t).expect("activation");
                        (inner(&y, &probe), act.backward(&t, &y, &probe).expect("activation backward").into_data())
                    },
                    x.data(),
                    None,
                ),
            )
        })
        .collect()
}

fn cross_entropy_check(rng: &mut ChaCha8Rng) -> Check {
    let logits: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let worst = (0..2)
        .map(|label| {
            finite_difference_check(
                |l| {
                    let (ce, g) = softmax_cross_entropy(&Tensor::vector(l.to_vec()), label).expect("ce");
                    (ce, g.into_data())
                },
                &logits,
                None,
            )
        })
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .expect("two labels");
    fd("softmax cross-entropy", worst)
}

fn policy_check(rng: &mut ChaCha8Rng) -> Check {
    let mut pi = GaussianPolicy::new(4, 2, -0.3, rng);
    // Move off the small-output initialisation so every weight matters.
    let p: Vec<f64> = pi.params().iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect();
    pi.set_params(&p).expect("params");
    let states: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let actions: Vec<Vec<f64>> = (0..5).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let weights: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
    fd(
        "policy log-prob",
        finite_difference_check(
            |th| {
                let mut q = pi.clone();
                q.set_params(th).expect("params");
                q.weighted_log_prob_grad(&states, &actions, &weights).expect("log-prob grad")
            },
            &pi.params(),
            None,
        ),
    )
}

fn value_check(rng: &mut ChaCha8Rng) -> Check {
    let vf = ValueFunction::new(3, AdamConfig::default(), rng);
    let states: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let targets: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
    fd(
        "value regression",
        finite_difference_check(
            |th| {
                let mut v = vf.clone();
                v.net.set_params(th).expect("params");
                let loss = v.accumulate_grad(&states, &targets).expect("value grad");
                (loss, v.net.grads())
            },
            &vf.net.params(),
            None,
        ),
    )
}

/// Rendered point-world frames from both domains.
pub fn sample_frames(count: usize, seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = EnvSpec::new(EnvKind::Point);
    (0..count)
        .map(|k| {
            let domain = if k % 2 == 0 { DomainConfig::expert(EnvKind::Point) } else { DomainConfig::novice(EnvKind::Point) };
            let world = World::new(spec.clone(), domain).expect("valid world");
            world.render(&world.reset(&mut rng))
        })
        .collect()
}

/// Four-sample batch over `frames` mixing both labels of each kind.
pub fn mixed_batch(frames: &[Observation]) -> Vec<LabeledSample<'_>> {
    let labels = [
        (ClassLabel::Expert, DomainLabel::ExpertDomain),
        (ClassLabel::NonExpert, DomainLabel::NoviceDomain),
        (ClassLabel::NonExpert, DomainLabel::ExpertDomain),
        (ClassLabel::Expert, DomainLabel::NoviceDomain),
    ];
    labels
        .iter()
        .enumerate()
        .map(|(k, &(class, domain))| LabeledSample {
            obs_t: &frames[k % frames.len()],
            obs_tn: &frames[(k + 1) % frames.len()],
            class,
            domain,
        })
        .collect()
}

/// Full discriminator loss on rendered frames, on a strided subset of
/// coordinates. Heads descend `class + lambda * domain`; the extractor sits
/// behind the reversal and descends `class - lambda * domain`.
fn discriminator_checks(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let frames = sample_frames(5, rng.gen());
    let batch = mixed_batch(&frames);
    let params = DiscriminatorParams::new(0.5, 4, rng).expect("lambda in range");
    let theta = params.params();
    let analytic = {
        let mut p = params.clone();
        discriminator_loss(&mut p, &batch).expect("loss");
        p.grads()
    };
    let heads: Vec<usize> = (params.feature_param_range().end..theta.len()).step_by(997).collect();
    let features: Vec<usize> = params.feature_param_range().step_by(7).collect();
    [("discriminator heads", heads, 1.0), ("discriminator features", features, -1.0)]
        .into_iter()
        .map(|(name, idx, sign)| {
            fd(
                name,
                finite_difference_check(
                    |th| {
                        let mut p = params.clone();
                        p.set_params(th).expect("params");
                        let b = evaluate_loss(&p, &batch).expect("loss");
                        (b.class_ce + sign * p.lambda * b.domain_ce, analytic.clone())
                    },
                    &theta,
                    Some(&idx),
                ),
            )
        })
        .collect()
}

/// Finite-difference checks of every differentiable building block.
pub fn gradient_checks(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    out.extend(conv_check(5, &mut rng));
    out.extend(conv_check(12, &mut rng));
    out.push(pool_check(&mut rng));
    out.push(dense_check(&mut rng));
    out.extend(activation_checks(&mut rng));
    out.push(cross_entropy_check(&mut rng));
    out.push(policy_check(&mut rng));
    out.push(value_check(&mut rng));
    out.extend(discriminator_checks(&mut rng));
    out
}

/// CG on a random 50x50 SPD system, and symmetry and positivity of the
/// damped Fisher-vector product.
pub fn solver_checks(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 50;
    let m: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // A = M^T M + I.
    let a: Vec<f64> = (0..n * n)
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            (0..n).map(|k| m[k * n + i] * m[k * n + j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 }
        })
        .collect();
    let matvec = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| dot(&a[i * n..(i + 1) * n], v)).collect() };
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cg = match conjugate_gradient(|v| Ok(matvec(v)), &b, 10 * n, 1e-12) {
        Ok(sol) => {
            let r: Vec<f64> = matvec(&sol.x).iter().zip(&b).map(|(x, y)| x - y).collect();
            let res = dot(&r, &r).sqrt();
            Check {
                name: "cg 50x50 spd".into(),
                value: res,
                passed: res <= CG_TOLERANCE,
                detail: format!("{} iterations", sol.iterations),
            }
        }
        Err(e) => Check { name: "cg 50x50 spd".into(), value: f64::INFINITY, passed: false, detail: e.to_string() },
    };

    let mut pi = GaussianPolicy::new(4, 2, -0.5, &mut rng);
    let p: Vec<f64> = pi.params().iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect();
    pi.set_params(&p).expect("params");
    let states: Vec<Vec<f64>> = (0..16).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let (mut asym, mut min_quad) = (0.0f64, f64::INFINITY);
    for _ in 0..10 {
        let u: Vec<f64> = (0..pi.num_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..pi.num_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fu = fisher_vector_product(&pi, &states, &u, 0.1).expect("fvp");
        let fv = fisher_vector_product(&pi, &states, &v, 0.1).expect("fvp");
        let (x, y) = (dot(&u, &fv), dot(&v, &fu));
        asym = asym.max((x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE));
        min_quad = min_quad.min(dot(&v, &fv));
    }
    vec![
        cg,
        Check {
            name: "fvp symmetry".into(),
            value: asym,
            passed: asym <= SYMMETRY_TOLERANCE,
            detail: "max |u'Fv - v'Fu| / scale over 10 pairs".into(),
        },
        Check {
            name: "fvp positivity".into(),
            value: min_quad,
            passed: min_quad > 0.0,
            detail: "min v'Fv over 10 vectors".into(),
        },
    ]
}
