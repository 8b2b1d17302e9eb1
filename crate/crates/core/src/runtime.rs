//! Dense feed-forward networks: evaluation, argmax readout, parameter counts
//! and the JSON model format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::check_dim;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    /// `tanh(beta * z)`
    TanhBeta,
    /// 1 if `beta * z > 0`, else 0.
    UnitStep,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    pub beta: f64,
}

impl Activation {
    pub fn tanh(beta: f64) -> Self {
        Self {
            kind: ActivationKind::TanhBeta,
            beta,
        }
    }

    pub fn unit_step() -> Self {
        Self {
            kind: ActivationKind::UnitStep,
            beta: 1.0,
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: ActivationKind::Identity,
            beta: 1.0,
        }
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::TanhBeta => (self.beta * z).tanh(),
            ActivationKind::UnitStep => {
                if self.beta * z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    #[inline]
    pub(crate) fn derivative_from_output(&self, a: f64) -> f64 {
        match self.kind {
            ActivationKind::TanhBeta => self.beta * (1.0 - a * a),
            ActivationKind::Identity => 1.0,
            ActivationKind::UnitStep => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind == ActivationKind::TanhBeta && !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tanh activation needs beta > 0, got {}",
                self.beta
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidInput("activation beta is not finite".into()));
        }
        Ok(())
    }
}

/// One dense layer. Weights are stored row-major, `outputs × inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "LayerRepr", try_from = "LayerRepr")]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct LayerRepr {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

impl From<Layer> for LayerRepr {
    fn from(l: Layer) -> Self {
        let weights = l.weights.chunks(l.inputs).map(<[f64]>::to_vec).collect();
        LayerRepr {
            weights,
            bias: l.bias,
            activation: l.activation,
        }
    }
}

impl TryFrom<LayerRepr> for Layer {
    type Error = Error;

    fn try_from(r: LayerRepr) -> Result<Self> {
        Layer::from_rows(r.weights, r.bias, r.activation)
    }
}

impl Layer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidInput("layer has a zero dimension".into()));
        }
        check_dim(inputs * outputs, weights.len())?;
        check_dim(outputs, bias.len())?;
        if weights.iter().chain(&bias).any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(
                "layer has non-finite parameters".into(),
            ));
        }
        activation.validate()?;
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let outputs = rows.len();
        let inputs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != inputs) {
            return Err(Error::InvalidInput("ragged weight matrix".into()));
        }
        Layer::new(inputs, outputs, rows.concat(), bias, activation)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.inputs..(i + 1) * self.inputs]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    /// Pre-activations `W x + b` written into `out`.
    #[inline]
    pub(crate) fn affine_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    pub fn param_count(&self) -> usize {
        (self.inputs + 1) * self.outputs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetRepr")]
pub struct FeedForwardNet {
    input_dim: usize,
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct NetRepr {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl TryFrom<NetRepr> for FeedForwardNet {
    type Error = Error;

    fn try_from(r: NetRepr) -> Result<Self> {
        FeedForwardNet::new(r.input_dim, r.layers)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub output: Vec<f64>,
    pub label: usize,
}

impl FeedForwardNet {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network has no layers".into()));
        }
        let mut width = input_dim;
        for l in &layers {
            check_dim(width, l.inputs)?;
            width = l.outputs;
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::outputs)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Layer widths including the input, e.g. `[4, 12, 256, 8]`.
    pub fn architecture(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    pub fn forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, p.len())?;
        let mut current = p.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.outputs];
            layer.affine_into(&current, &mut next);
            for v in &mut next {
                *v = layer.activation.apply(*v);
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: i });
            }
            current = next;
        }
        Ok(current)
    }

    pub fn predict_label(&self, p: &[f64]) -> Result<Prediction> {
        let output = self.forward(p)?;
        let label = argmax(&output);
        Ok(Prediction { output, label })
    }

    /// Weights plus biases over all layers.
    pub fn count_weights(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn save_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn load_json<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
