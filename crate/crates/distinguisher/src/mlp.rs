//! ReLU MLP discriminators trained with Adam on the binary cross-entropy
//! (DCGAN discriminator) objective.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use forge_core::error::{invalid, ForgeError, Result};
use forge_core::rng::{derive_seed, stream_rng, RngSeed};
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

use crate::report::{dkw_halfwidth, AttackReport, CurvePoint, Method};
use crate::sampler::{check_dims, Sampler};
use crate::scan::CONFIDENCE;

/// Fractional bits kept when exporting trained weights.
pub const EXPORT_FRAC_BITS: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias-corrected moments, one state slot per parameter tensor.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    t: i32,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, sizes: &[usize]) -> Self {
        Adam {
            cfg,
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Advances the step counter; call once before the per-tensor updates.
    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    pub fn update(&mut self, slot: usize, params: &mut [f32], grads: &[f32]) {
        let c = self.cfg;
        let (b1, b2) = (c.beta1 as f32, c.beta2 as f32);
        let bc1 = 1.0 - c.beta1.powi(self.t);
        let bc2 = 1.0 - c.beta2.powi(self.t);
        let (lr, eps) = (c.lr as f32, c.eps as f32);
        let (bc1, bc2) = (bc1 as f32, bc2 as f32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m[slot].iter_mut().zip(self.v[slot].iter_mut())) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub adam: AdamConfig,
    /// Samples per side in each step.
    pub batch: usize,
    pub steps: usize,
    /// Test loss is recorded every `eval_every` steps.
    pub eval_every: usize,
    /// Fresh samples per side for each recorded test loss.
    pub eval_samples: usize,
    /// Fresh samples per side for the final report.
    pub final_eval_samples: usize,
    pub seed: RngSeed,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_layers: 1,
            width: 200,
            adam: AdamConfig::default(),
            batch: 128,
            steps: 20_000,
            eval_every: 1000,
            eval_samples: 10_000,
            final_eval_samples: 100_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.hidden_layers) {
            return invalid("hidden_layers must be between 1 and 4");
        }
        if self.width == 0 || self.batch == 0 || self.eval_every == 0 || self.final_eval_samples == 0 {
            return invalid("width, batch, eval_every and final_eval_samples must be positive");
        }
        if !(self.adam.lr > 0.0) {
            return invalid("learning rate must be positive");
        }
        Ok(())
    }
}

/// `d -> width^hidden -> 1` ReLU network with a logit output.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    /// Weight matrices, shape `(out, in)`.
    pub weights: Vec<Array2<f32>>,
    pub biases: Vec<Array1<f32>>,
}

fn softplus(x: f32) -> f64 {
    let x = x as f64;
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

impl Mlp {
    /// Kaiming-uniform weights `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    pub fn new(d: usize, hidden_layers: usize, width: usize, seed: RngSeed) -> Self {
        let mut rng = stream_rng(derive_seed(seed, "init"), 0);
        let mut dims = vec![d];
        dims.extend(std::iter::repeat_n(width, hidden_layers));
        dims.push(1);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in dims.windows(2) {
            let bound = (6.0 / w[0] as f64).sqrt() as f32;
            weights.push(Array2::from_shape_fn((w[1], w[0]), |_| rng.random_range(-bound..bound)));
            biases.push(Array1::zeros(w[1]));
        }
        Mlp { weights, biases }
    }

    pub fn hidden_layers(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn d_in(&self) -> usize {
        self.weights[0].ncols()
    }

    /// Post-activation values of every layer, input first; last entry holds logits.
    fn forward(&self, x: ArrayView2<f32>) -> Vec<Array2<f32>> {
        let mut acts = vec![x.to_owned()];
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[i].dot(&w.t());
            z += b;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn logits(&self, x: ArrayView2<f32>) -> Array1<f32> {
        self.forward(x).pop().expect("at least one layer").column(0).to_owned()
    }

    /// Gradients of `sum_i dlogit_i * logit_i` with respect to every tensor.
    fn backward(&self, acts: &[Array2<f32>], dlogit: Array1<f32>) -> (Vec<Array2<f32>>, Vec<Array1<f32>>) {
        let n = self.weights.len();
        let mut gw = vec![Array2::zeros((0, 0)); n];
        let mut gb = vec![Array1::zeros(0); n];
        let mut g = dlogit.insert_axis(Axis(1));
        for i in (0..n).rev() {
            gw[i] = g.t().dot(&acts[i]);
            gb[i] = g.sum_axis(Axis(0));
            if i > 0 {
                let mut up = g.dot(&self.weights[i]);
                ndarray::Zip::from(&mut up).and(&acts[i]).for_each(|u, &a| {
                    if a <= 0.0 {
                        *u = 0.0;
                    }
                });
                g = up;
            }
        }
        (gw, gb)
    }

    /// Exports the logit network with weights rounded to [`EXPORT_FRAC_BITS`] bits.
    pub fn to_relu_net(&self) -> Result<ReluNet> {
        let q = |v: f32| FixedScalar::quantize(v as f64, EXPORT_FRAC_BITS);
        let layers = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| {
                let data = w.iter().map(|&v| q(v)).collect::<Result<Vec<_>>>()?;
                let bias = b.iter().map(|&v| q(v)).collect::<Result<Vec<_>>>()?;
                Ok(Layer::new(Matrix::from_dense(w.nrows(), w.ncols(), &data)?, bias))
            })
            .collect::<Result<Vec<_>>>()?;
        ReluNet::new(layers)
    }
}

/// Held-out statistics of a discriminator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalStats {
    /// `E[-log D(target)] + E[-log(1 - D(gen))] - 2 log 2`.
    pub test_loss: f64,
    pub balanced_accuracy: f64,
    /// `Pr[D(target) > 1/2] - Pr[D(gen) > 1/2]`.
    pub gap: f64,
}

const EVAL_CHUNK: usize = 4096;

pub fn evaluate(net: &Mlp, gen: &dyn Sampler, target: &dyn Sampler, n: usize, seed: RngSeed) -> Result<EvalStats> {
    let d = check_dims(gen, target)?;
    let side = |s: &dyn Sampler, label: &str, real: bool| -> (f64, usize) {
        let data = s.sample(n, derive_seed(seed, label));
        let mut loss = 0.0;
        let mut hits = 0;
        for rows in data.chunks(EVAL_CHUNK * d) {
            let x = ArrayView2::from_shape((rows.len() / d, d), rows).expect("chunk shape");
            for l in net.logits(x) {
                if real {
                    loss += softplus(-l);
                    hits += usize::from(l > 0.0);
                } else {
                    loss += softplus(l);
                    hits += usize::from(l <= 0.0);
                }
            }
        }
        (loss / n as f64, hits)
    };
    let (lt, ht) = side(target, "eval-target", true);
    let (lg, hg) = side(gen, "eval-gen", false);
    let (tpr, tnr) = (ht as f64 / n as f64, hg as f64 / n as f64);
    Ok(EvalStats {
        test_loss: lt + lg - 2.0 * std::f64::consts::LN_2,
        balanced_accuracy: (tpr + tnr) / 2.0,
        gap: tpr - (1.0 - tnr),
    })
}

/// Trains a discriminator separating `target` (label 1) from `gen` (label 0).
///
/// Every step draws fresh batches from both samplers. The report's advantage is
/// `|Pr[D(target) > 1/2] - Pr[D(gen) > 1/2]|` on `final_eval_samples` held-out
/// draws per side, with a Hoeffding interval.
pub fn train_discriminator(cfg: &TrainConfig, gen: &dyn Sampler, target: &dyn Sampler) -> Result<(Mlp, AttackReport)> {
    cfg.validate()?;
    let d = check_dims(gen, target)?;
    let mut net = Mlp::new(d, cfg.hidden_layers, cfg.width, cfg.seed);
    let sizes: Vec<usize> = net.weights.iter().flat_map(|w| [w.len(), w.nrows()]).collect();
    let mut adam = Adam::new(cfg.adam, &sizes);
    let b = cfg.batch;
    let mut curve = Vec::new();
    let gseed = derive_seed(cfg.seed, "gen-batches");
    let tseed = derive_seed(cfg.seed, "target-batches");
    let mut x = Array2::<f32>::zeros((2 * b, d));
    for step in 0..cfg.steps {
        let real = target.sample(b, derive_seed(tseed, &step.to_string()));
        let fake = gen.sample(b, derive_seed(gseed, &step.to_string()));
        x.as_slice_mut().expect("contiguous")[..b * d].copy_from_slice(&real);
        x.as_slice_mut().expect("contiguous")[b * d..].copy_from_slice(&fake);
        let acts = net.forward(x.view());
        let logits = acts.last().expect("logits").column(0).to_owned();
        let mut loss = 0.0;
        let dlogit = Array1::from_shape_fn(2 * b, |i| {
            let l = logits[i];
            if i < b {
                loss += softplus(-l);
                (sigmoid(l) - 1.0) / b as f32
            } else {
                loss += softplus(l);
                sigmoid(l) / b as f32
            }
        });
        if !loss.is_finite() {
            return Err(ForgeError::Diverged { step, reason: format!("training loss {loss}") });
        }
        let (gw, gb) = net.backward(&acts, dlogit);
        adam.begin_step();
        for (i, (w, bias)) in net.weights.iter_mut().zip(net.biases.iter_mut()).enumerate() {
            adam.update(2 * i, w.as_slice_mut().expect("contiguous"), gw[i].as_slice().expect("contiguous"));
            adam.update(2 * i + 1, bias.as_slice_mut().expect("contiguous"), gb[i].as_slice().expect("contiguous"));
        }
        if (step + 1) % cfg.eval_every == 0 && cfg.eval_samples > 0 {
            let s = evaluate(&net, gen, target, cfg.eval_samples, derive_seed(cfg.seed, &format!("eval-{step}")))?;
            if !s.test_loss.is_finite() {
                return Err(ForgeError::Diverged { step, reason: "test loss is not finite".into() });
            }
            curve.push(CurvePoint { step: step + 1, test_loss: s.test_loss, accuracy: s.balanced_accuracy });
        }
    }
    let n = cfg.final_eval_samples;
    let fin = evaluate(&net, gen, target, n, derive_seed(cfg.seed, "final"))?;
    let adv = fin.gap.abs();
    let delta = (1.0 - CONFIDENCE) / 2.0;
    let slack = dkw_halfwidth(n, delta) + dkw_halfwidth(n, delta);
    let mut report = AttackReport::new(
        Method::Mlp { depth: cfg.hidden_layers },
        adv,
        ((adv - slack).max(0.0), (adv + slack).min(1.0)),
        n,
        n,
    );
    report.loss_curve = Some(curve);
    report.metrics.insert("test_loss".into(), fin.test_loss);
    report.metrics.insert("balanced_accuracy".into(), fin.balanced_accuracy);
    report.config = Some(cfg.clone());
    report.notes.push(format!("target={} gen={}", target.name(), gen.name()));
    report.notes.push("one discriminator step per batch, no label smoothing".into());
    Ok((net, report))
}
