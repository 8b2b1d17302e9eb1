//! Plain mini-batch SGD with exact backpropagation of the squared error.
//!
//! Per-sample loss is `½‖output − target‖²` with one-hot 0/1 targets; a batch
//! step descends the mean of that loss over the batch.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::geometry::check_dim;
use crate::metrics::evaluate_accuracy;
use crate::runtime::{Activation, ActivationKind, FeedForwardNet, Layer};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetEncoding {
    #[default]
    ZeroOne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Steepness of the hidden tanh units.
    pub beta: f64,
    pub target_encoding: TargetEncoding,
    pub init_scale: f64,
    /// Classical momentum coefficient; 0 disables it.
    pub momentum: f64,
    /// Stop once training accuracy reaches this fraction (checked each epoch).
    pub stop_at_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 500,
            batch_size: 16,
            seed: 0,
            beta: 1.0,
            target_encoding: TargetEncoding::ZeroOne,
            init_scale: 1.0,
            momentum: 0.0,
            stop_at_train_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 || self.batch_size > dataset_len {
            return Err(Error::InvalidInput(format!(
                "batch_size {} must lie in 1..={dataset_len}",
                self.batch_size
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidInput("beta must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidInput("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_train_accuracy: f64,
    pub final_test_accuracy: f64,
    pub epoch_losses: Vec<f64>,
    pub epochs_run: usize,
}

impl TrainReport {
    pub fn write_losses_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "loss"])?;
        for (i, l) in self.epoch_losses.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{l:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Hidden layers use `tanh(beta ·)`, the output layer is linear. Weights are
/// uniform in `±init_scale/√fan_in`, biases zero.
pub fn init_weights(
    arch: &[usize],
    seed: u64,
    init_scale: f64,
    beta: f64,
) -> Result<FeedForwardNet> {
    if arch.len() < 2 || arch.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "invalid architecture {arch:?}"
        )));
    }
    if !(init_scale >= 0.0 && init_scale.is_finite()) {
        return Err(Error::InvalidInput(
            "init_scale must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = arch.len() - 1;
    let layers = arch
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = init_scale / (fan_in as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| {
                    if bound > 0.0 {
                        rng.random_range(-bound..=bound)
                    } else {
                        0.0
                    }
                })
                .collect();
            let act = if i + 1 == depth {
                Activation::identity()
            } else {
                Activation::tanh(beta)
            };
            Layer::new(fan_in, fan_out, weights, vec![0.0; fan_out], act)
        })
        .collect::<Result<Vec<_>>>()?;
    FeedForwardNet::new(arch[0], layers)
}

fn check_differentiable(net: &FeedForwardNet) -> Result<()> {
    match net
        .layers()
        .iter()
        .position(|l| l.activation().kind == ActivationKind::UnitStep)
    {
        Some(layer) => Err(Error::NotDifferentiable { layer }),
        None => Ok(()),
    }
}

/// Reusable forward/backward buffers.
struct Workspace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(net: &FeedForwardNet) -> Self {
        let arch = net.architecture();
        Self {
            acts: arch.iter().map(|&w| vec![0.0; w]).collect(),
            deltas: arch[1..].iter().map(|&w| vec![0.0; w]).collect(),
        }
    }

    fn forward(&mut self, net: &FeedForwardNet, x: &[f64]) {
        self.acts[0].copy_from_slice(x);
        for (l, layer) in net.layers().iter().enumerate() {
            let (head, tail) = self.acts.split_at_mut(l + 1);
            let out = &mut tail[0];
            layer.affine_into(&head[l], out);
            let act = layer.activation();
            for v in out.iter_mut() {
                *v = act.apply(*v);
            }
        }
    }

    /// Backpropagates `½‖out − target‖²` and adds `scale ×` its gradient into `grads`.
    /// Returns the sample loss.
    fn backward(
        &mut self,
        net: &FeedForwardNet,
        target: &[f64],
        grads: &mut [Vec<f64>],
        scale: f64,
    ) -> f64 {
        let layers = net.layers();
        let last = layers.len() - 1;
        let out = &self.acts[last + 1];
        let act = layers[last].activation();
        let mut loss = 0.0;
        for ((d, &o), &t) in self.deltas[last].iter_mut().zip(out).zip(target) {
            let e = o - t;
            loss += 0.5 * e * e;
            *d = e * act.derivative_from_output(o);
        }
        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let inputs = layer.inputs();
            let g = &mut grads[l];
            let (gw, gb) = g.split_at_mut(inputs * layer.outputs());
            let input = &self.acts[l];
            for (i, &d) in self.deltas[l].iter().enumerate() {
                let sd = scale * d;
                for (gw, &x) in gw[i * inputs..(i + 1) * inputs].iter_mut().zip(input) {
                    *gw += sd * x;
                }
                gb[i] += sd;
            }
            if l > 0 {
                let prev_act = layers[l - 1].activation();
                let (lower, upper) = self.deltas.split_at_mut(l);
                let prev = &mut lower[l - 1];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for (i, &d) in upper[0].iter().enumerate() {
                    for (p, &w) in prev.iter_mut().zip(layer.row(i)) {
                        *p += w * d;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(&self.acts[l]) {
                    *p *= prev_act.derivative_from_output(a);
                }
            }
        }
        loss
    }
}

fn zero_grads(net: &FeedForwardNet) -> Vec<Vec<f64>> {
    net.layers()
        .iter()
        .map(|l| vec![0.0; l.param_count()])
        .collect()
}

fn one_hot(label: usize, k: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), k);
    out.iter_mut().for_each(|v| *v = 0.0);
    out[label] = 1.0;
}

/// Exact gradient of `½‖net(x) − target‖²` with respect to every parameter,
/// per layer, weights (row-major) followed by biases.
pub fn loss_gradient(
    net: &FeedForwardNet,
    x: &[f64],
    target: &[f64],
) -> Result<(f64, Vec<Vec<f64>>)> {
    check_differentiable(net)?;
    check_dim(net.input_dim(), x.len())?;
    check_dim(net.output_dim(), target.len())?;
    let mut ws = Workspace::new(net);
    let mut grads = zero_grads(net);
    ws.forward(net, x);
    let loss = ws.backward(net, target, &mut grads, 1.0);
    Ok((loss, grads))
}

fn sample_loss(net: &FeedForwardNet, x: &[f64], target: &[f64]) -> Result<f64> {
    let out = net.forward(x)?;
    Ok(out
        .iter()
        .zip(target)
        .map(|(o, t)| 0.5 * (o - t) * (o - t))
        .sum())
}

/// Largest relative disagreement between the backpropagated gradient and
/// central differences `(f(w+h) − f(w−h)) / 2h` over all parameters.
pub fn numeric_gradient_check(
    net: &FeedForwardNet,
    x: &[f64],
    target: &[f64],
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step h must be positive".into()));
    }
    let (_, analytic) = loss_gradient(net, x, target)?;
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (l, g) in analytic.iter().enumerate() {
        for (p, &ga) in g.iter().enumerate() {
            let original = param(&mut probe, l, p);
            *param_mut(&mut probe, l, p) = original + h;
            let plus = sample_loss(&probe, x, target)?;
            *param_mut(&mut probe, l, p) = original - h;
            let minus = sample_loss(&probe, x, target)?;
            *param_mut(&mut probe, l, p) = original;
            let gn = (plus - minus) / (2.0 * h);
            let denom = ga.abs().max(gn.abs()).max(1e-12);
            worst = worst.max((ga - gn).abs() / denom);
        }
    }
    Ok(worst)
}

fn param(net: &mut FeedForwardNet, layer: usize, index: usize) -> f64 {
    *param_mut(net, layer, index)
}

fn param_mut(net: &mut FeedForwardNet, layer: usize, index: usize) -> &mut f64 {
    let (w, b) = net.layers_mut()[layer].params_mut();
    let nw = w.len();
    if index < nw {
        &mut w[index]
    } else {
        &mut b[index - nw]
    }
}

/// Trains `net` on `train`, reporting final accuracies on both sets.
/// Sample order is reshuffled every epoch from `cfg.seed`.
pub fn train_backprop(
    mut net: FeedForwardNet,
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(FeedForwardNet, TrainReport)> {
    check_differentiable(&net)?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate(train.len())?;
    check_dim(net.input_dim(), train.dim)?;
    let k = net.output_dim();
    if let Some(bad) = train.samples.iter().find(|s| s.class_label >= k) {
        return Err(Error::InvalidInput(format!(
            "class {} does not fit {k} outputs",
            bad.class_label
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut ws = Workspace::new(&net);
    let mut grads = zero_grads(&net);
    let mut velocity = zero_grads(&net);
    let mut target = vec![0.0; k];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads
                .iter_mut()
                .for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &train.samples[i];
                one_hot(s.class_label, k, &mut target);
                ws.forward(&net, s.point.coords());
                total += ws.backward(&net, &target, &mut grads, scale);
            }
            for ((layer, g), v) in net.layers_mut().iter_mut().zip(&grads).zip(&mut velocity) {
                let (w, b) = layer.params_mut();
                for ((p, &g), v) in w.iter_mut().chain(b.iter_mut()).zip(g).zip(v.iter_mut()) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *p += *v;
                }
            }
        }
        let loss = total / train.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_losses.push(loss);
        if let Some(goal) = cfg.stop_at_train_accuracy {
            if evaluate_accuracy(&net, train)? >= goal {
                break;
            }
        }
    }

    let report = TrainReport {
        final_train_accuracy: evaluate_accuracy(&net, train)?,
        final_test_accuracy: if test.is_empty() {
            f64::NAN
        } else {
            evaluate_accuracy(&net, test)?
        },
        epochs_run: epoch_losses.len(),
        epoch_losses,
    };
    Ok((net, report))
}
