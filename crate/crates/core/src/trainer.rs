//! Mean-squared-error training with Adam, plus the fit metrics used to judge
//! how well a network reproduces its generating function.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::objectives::{check_dim, Dataset, Objective};
use crate::resnet::{ResNet, Tape};

/// Datasets up to this size train full-batch when no batch size is given.
pub const FULL_BATCH_LIMIT: usize = 4096;
pub const DEFAULT_MINIBATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` picks full-batch for small datasets and 256 otherwise.
    pub batch_size: Option<usize>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 1000,
            batch_size: None,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if let Some(b) = self.batch_size {
            if b == 0 || b > dataset_len {
                return bad(format!("batch_size must lie in [1, {dataset_len}], got {b}"));
            }
        }
        for (name, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return bad(format!("{name} must lie in [0, 1), got {beta}"));
            }
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return bad(format!("adam_epsilon must be positive, got {}", self.adam_epsilon));
        }
        Ok(())
    }

    pub fn effective_batch_size(&self, dataset_len: usize) -> usize {
        self.batch_size.unwrap_or(if dataset_len <= FULL_BATCH_LIMIT {
            dataset_len
        } else {
            DEFAULT_MINIBATCH
        })
    }
}

/// Adam with bias correction over a flat parameter vector.
///
/// The update is element-wise, so callers may feed parameters in any order as
/// long as it is consistent between steps.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_epsilon,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step_segments(std::iter::once((params, grads)));
    }

    /// One update over consecutive `(params, grads)` segments.
    pub fn step_segments<'a>(
        &mut self,
        segments: impl IntoIterator<Item = (&'a mut [f64], &'a [f64])>,
    ) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut offset = 0;
        for (params, grads) in segments {
            assert_eq!(params.len(), grads.len());
            let m = &mut self.m[offset..offset + params.len()];
            let v = &mut self.v[offset..offset + params.len()];
            for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            offset += params.len();
        }
        assert_eq!(offset, self.m.len(), "segments must cover every parameter");
    }
}

/// Per-layer gradients in network order.
pub(crate) struct LayerGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Reverse pass given `d loss / d output` for every row of the batch.
pub(crate) fn backward(net: &ResNet, tape: &Tape, output_grad: Array2<f64>) -> Vec<LayerGrads> {
    let layers = net.layers();
    let act = net.activation();
    let mut grads = Vec::with_capacity(layers.len());
    let mut upstream = output_grad;
    for (l, layer) in layers.iter().enumerate().rev() {
        let mut dz = upstream.clone();
        if layer.has_activation {
            dz.zip_mut_with(&tape.pre[l], |g, &z| *g *= act.derivative(z));
        }
        let weights = dz.t().dot(&tape.inputs[l]);
        let bias = dz.sum_axis(Axis(0));
        if l > 0 {
            let mut next = dz.dot(&layer.weights);
            if layer.has_skip {
                next += &upstream;
            }
            upstream = next;
        }
        grads.push(LayerGrads { weights, bias });
    }
    grads.reverse();
    grads
}

fn flatten(grads: &[LayerGrads]) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
        .collect()
}

/// Gradient of `(net(x) - target)^2` with respect to every parameter, in the
/// order of [`ResNet::flat_params`].
pub fn gradient(net: &ResNet, x: &[f64], target: f64) -> Result<Vec<f64>> {
    check_dim(net.input_dim(), x)?;
    let xs = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("one row");
    let tape = net.forward_tape(xs)?;
    let residual = tape.output[[0, 0]] - target;
    let grads = backward(net, &tape, Array2::from_elem((1, 1), 2.0 * residual));
    Ok(flatten(&grads))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ResNet,
    /// Mean training loss seen during each epoch, before that epoch's updates.
    pub loss_history: Vec<f64>,
    /// Training MSE of the returned network over the whole dataset.
    pub final_mse: f64,
}

pub fn dataset_matrix(data: &Dataset) -> (Array2<f64>, Array1<f64>) {
    let d = data.dim();
    let flat: Vec<f64> = data.inputs.iter().flatten().copied().collect();
    (
        Array2::from_shape_vec((data.len(), d), flat).expect("rows share the domain dimension"),
        Array1::from(data.targets.clone()),
    )
}

fn mse(pred: &Array1<f64>, target: &Array1<f64>) -> f64 {
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / pred.len() as f64
}

/// Fits `net` to `data` by minimizing the mean squared error with Adam.
pub fn train(mut net: ResNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate(data.len())?;
    if data.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: data.dim(),
        });
    }
    let (xs, ys) = dataset_matrix(data);
    let n = data.len();
    let batch = cfg.effective_batch_size(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(net.param_count(), cfg);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch) {
            let (bx, by) = if batch < n {
                (xs.select(Axis(0), chunk), ys.select(Axis(0), chunk))
            } else {
                (xs.clone(), ys.clone())
            };
            let tape = net.forward_tape(bx).map_err(|e| match e {
                Error::NonFinite { .. } => Error::Diverged {
                    epoch,
                    loss: f64::NAN,
                },
                other => other,
            })?;
            let pred = tape.output.column(0).to_owned();
            let m = chunk.len() as f64;
            loss_sum += mse(&pred, &by) * m;
            let output_grad = (&pred - &by).mapv(|r| 2.0 * r / m).insert_axis(Axis(1));
            let grads = backward(&net, &tape, output_grad);
            adam.step_segments(net.layers_mut().iter_mut().zip(&grads).flat_map(|(layer, g)| {
                [
                    (
                        layer.weights.as_slice_mut().expect("standard layout"),
                        g.weights.as_slice().expect("standard layout"),
                    ),
                    (
                        layer.bias.as_slice_mut().expect("contiguous"),
                        g.bias.as_slice().expect("contiguous"),
                    ),
                ]
            }));
        }
        let loss = loss_sum / n as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
    }

    let final_mse = match net.forward_batch(xs.view()) {
        Ok(pred) => mse(&pred, &ys),
        Err(_) => f64::NAN,
    };
    if !final_mse.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            loss: final_mse,
        });
    }
    Ok(TrainOutcome {
        net,
        loss_history: history,
        final_mse,
    })
}

pub fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["epoch", "loss"])?;
    for (i, loss) in history.iter().enumerate() {
        writer.write_record([(i + 1).to_string(), loss.to_string()])?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mae: f64,
    pub mse: f64,
    pub n_eval_points: usize,
    pub eval_domain: BoxDomain,
    pub eval_seed: u64,
}

impl FitReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// MAE and MSE of `net` against `f` on `n` seeded uniform points of `eval_domain`.
pub fn evaluate_fit<F: Objective + ?Sized>(
    net: &ResNet,
    f: &F,
    eval_domain: &BoxDomain,
    n: usize,
    seed: u64,
) -> Result<FitReport> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one evaluation point".into()));
    }
    let d = eval_domain.dim();
    check_dim(net.input_dim(), &vec![0.0; d])?;
    check_dim(f.dim(), &vec![0.0; d])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<f64> = (0..n).flat_map(|_| eval_domain.sample_uniform(&mut rng)).collect();
    let predicted = net.evaluate_batch(&points)?;
    let truth = f.evaluate_batch(&points)?;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (p, t) in predicted.iter().zip(&truth) {
        abs += (p - t).abs();
        sq += (p - t).powi(2);
    }
    Ok(FitReport {
        mae: abs / n as f64,
        mse: sq / n as f64,
        n_eval_points: n,
        eval_domain: eval_domain.clone(),
        eval_seed: seed,
    })
}
