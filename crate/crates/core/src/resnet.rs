//! Fully connected residual networks with identity skips, evaluated in f64.
//!
//! Layer `l` computes `a_l = act(W_l a_{l-1} + b_l) + a_{l-1}` when it carries a
//! skip (input and output widths equal), `act(W_l a_{l-1} + b_l)` otherwise,
//! and the final layer is a plain affine map to a scalar.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{check_dim, Objective};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative at pre-activation `z`; the ReLU kink at 0 gets slope 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidConfig(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_width: usize,
    pub out_width: usize,
    pub has_activation: bool,
    pub has_skip: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out_width x in_width`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub has_activation: bool,
    pub has_skip: bool,
}

impl Layer {
    pub fn spec(&self) -> LayerSpec {
        LayerSpec {
            in_width: self.weights.ncols(),
            out_width: self.weights.nrows(),
            has_activation: self.has_activation,
            has_skip: self.has_skip,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResNet {
    activation: Activation,
    input_dim: usize,
    layers: Vec<Layer>,
}

/// Intermediate values of a batched forward pass, kept for backpropagation.
pub(crate) struct Tape {
    /// `inputs[l]` is the input to layer `l` (`inputs[0]` is the batch itself).
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activations of every layer.
    pub pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

impl ResNet {
    pub fn new(activation: Activation, input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let net = Self {
            activation,
            input_dim,
            layers,
        };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        let chain = |layer: usize, detail: String| Err(Error::WidthChain { layer, detail });
        if self.layers.is_empty() {
            return chain(0, "network has no layers".into());
        }
        let mut width = self.input_dim;
        if width == 0 {
            return chain(0, "input dimension must be positive".into());
        }
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let spec = layer.spec();
            if spec.in_width != width {
                return chain(
                    l,
                    format!("in_width {} does not match previous width {width}", spec.in_width),
                );
            }
            if spec.out_width == 0 {
                return chain(l, "out_width must be positive".into());
            }
            if layer.bias.len() != spec.out_width {
                return chain(
                    l,
                    format!("bias has {} entries, expected {}", layer.bias.len(), spec.out_width),
                );
            }
            if spec.has_skip && spec.in_width != spec.out_width {
                return chain(
                    l,
                    format!(
                        "identity skip needs equal widths, got {} -> {}",
                        spec.in_width, spec.out_width
                    ),
                );
            }
            if l == last && (spec.out_width != 1 || spec.has_activation || spec.has_skip) {
                return chain(l, "output layer must be a plain affine map to 1 unit".into());
            }
            width = spec.out_width;
        }
        Ok(())
    }

    /// Builds a network from a width list `[d, H_1, ..., H_L, 1]`.
    ///
    /// Hidden layers use the activation and an identity skip wherever the width
    /// is unchanged; weights are drawn uniformly in `+-sqrt(6 / in_width)`, biases
    /// start at zero.
    pub fn from_widths(widths: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidConfig(
                "need at least an input and an output width".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, pair)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let weights =
                    Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..limit));
                Layer {
                    weights,
                    bias: Array1::zeros(fan_out),
                    has_activation: l != last,
                    has_skip: l != last && fan_in == fan_out,
                }
            })
            .collect();
        Self::new(activation, widths[0], layers)
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    /// Widths `[d, H_1, ..., 1]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(|l| l.weights.nrows()))
            .collect()
    }

    /// Total number of weights and biases, `sum (H_{l-1} + 1) H_l`.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// All parameters in canonical order: per layer, weights row-major then bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend(layer.weights.iter());
            out.extend(layer.bias.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut rest = params;
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut() {
                *w = rest[0];
                rest = &rest[1..];
            }
            let n = layer.bias.len();
            layer.bias.as_slice_mut().unwrap().copy_from_slice(&rest[..n]);
            rest = &rest[n..];
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim, x)?;
        let mut a = Array1::from(x.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&a);
            z += &layer.bias;
            if layer.has_activation {
                z.mapv_inplace(|v| self.activation.apply(v));
            }
            if layer.has_skip {
                z += &a;
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l + 1 });
            }
            a = z;
        }
        Ok(a[0])
    }

    /// Forward pass over the rows of `xs` (`n x input_dim`).
    pub fn forward_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if xs.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: xs.ncols(),
            });
        }
        let mut a = xs.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = self.layer_forward(layer, &a, l)?;
            a = self.layer_output(layer, z, &a);
        }
        Ok(a.index_axis_move(Axis(1), 0))
    }

    fn layer_forward(&self, layer: &Layer, a: &Array2<f64>, l: usize) -> Result<Array2<f64>> {
        let mut z = a.dot(&layer.weights.t());
        z += &layer.bias;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { layer: l + 1 });
        }
        Ok(z)
    }

    fn layer_output(&self, layer: &Layer, mut z: Array2<f64>, input: &Array2<f64>) -> Array2<f64> {
        if layer.has_activation {
            z.mapv_inplace(|v| self.activation.apply(v));
        }
        if layer.has_skip {
            z += input;
        }
        z
    }

    pub(crate) fn forward_tape(&self, xs: Array2<f64>) -> Result<Tape> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = xs;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = self.layer_forward(layer, &a, l)?;
            let next = self.layer_output(layer, z.clone(), &a);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l + 1 });
            }
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(Tape {
            inputs,
            pre,
            output: a,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = WeightFile {
            format_version: FORMAT_VERSION,
            activation: self.activation,
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    in_width: l.weights.ncols(),
                    out_width: l.weights.nrows(),
                    has_skip: l.has_skip,
                    has_activation: l.has_activation,
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_string(&file)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightFile = serde_json::from_str(text).map_err(|e| {
            let offset = byte_offset(text, e.line(), e.column());
            Error::WeightFormat(format!("at byte {offset}: {e}"))
        })?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::WeightFormat(format!(
                "field `format_version`: unsupported version {}",
                file.format_version
            )));
        }
        let layers = file
            .layers
            .into_iter()
            .enumerate()
            .map(|(l, rec)| {
                let expected = rec.in_width * rec.out_width;
                if rec.weights.len() != expected {
                    return Err(Error::WeightFormat(format!(
                        "layer {l}, field `weights`: {} values, expected {expected} ({} x {})",
                        rec.weights.len(),
                        rec.out_width,
                        rec.in_width
                    )));
                }
                if rec.bias.len() != rec.out_width {
                    return Err(Error::WeightFormat(format!(
                        "layer {l}, field `bias`: {} values, expected {}",
                        rec.bias.len(),
                        rec.out_width
                    )));
                }
                let weights = Array2::from_shape_vec((rec.out_width, rec.in_width), rec.weights)
                    .map_err(|e| Error::WeightFormat(format!("layer {l}, field `weights`: {e}")))?;
                Ok(Layer {
                    weights,
                    bias: Array1::from(rec.bias),
                    has_activation: rec.has_activation,
                    has_skip: rec.has_skip,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.activation, file.input_dim, layers)
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    text.split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum::<usize>()
        + column.saturating_sub(1)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightFile {
    format_version: u32,
    activation: Activation,
    input_dim: usize,
    layers: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    in_width: usize,
    out_width: usize,
    has_skip: bool,
    has_activation: bool,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Objective for ResNet {
    fn dim(&self) -> usize {
        self.input_dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.forward(x)
    }

    fn evaluate_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if !xs.len().is_multiple_of(self.input_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: xs.len() % self.input_dim,
            });
        }
        let view = ArrayView2::from_shape((xs.len() / self.input_dim, self.input_dim), xs)
            .expect("shape checked above");
        Ok(self.forward_batch(view)?.to_vec())
    }

    fn name(&self) -> &str {
        "resnet"
    }
}

/// The three network layouts used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Ackley,
    Dropwave,
    Multimin,
}

impl Architecture {
    /// Layer widths; hidden widths are divided by `width_divisor` (at least 1 unit).
    pub fn widths(self, width_divisor: usize) -> Vec<usize> {
        let (input, hidden): (usize, &[usize]) = match self {
            Architecture::Ackley => (2, &[128, 256, 256, 256, 256, 128]),
            Architecture::Dropwave => (2, &[128, 256, 256, 512, 512, 512, 256, 128]),
            Architecture::Multimin => (3, &[128, 256, 256, 512, 512, 512, 256, 128]),
        };
        let div = width_divisor.max(1);
        std::iter::once(input)
            .chain(hidden.iter().map(|h| (h / div).max(1)))
            .chain(std::iter::once(1))
            .collect()
    }

    pub fn build(self, seed: u64, width_divisor: usize) -> ResNet {
        ResNet::from_widths(&self.widths(width_divisor), Activation::Relu, seed)
            .expect("preset widths form a valid chain")
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ackley" => Ok(Architecture::Ackley),
            "dropwave" => Ok(Architecture::Dropwave),
            "multimin" | "multiminima" => Ok(Architecture::Multimin),
            other => Err(Error::InvalidConfig(format!(
                "unknown architecture `{other}` (available: ackley, dropwave, multimin)"
            ))),
        }
    }
}

pub fn architecture_ackley(seed: u64) -> ResNet {
    Architecture::Ackley.build(seed, 1)
}

pub fn architecture_dropwave(seed: u64) -> ResNet {
    Architecture::Dropwave.build(seed, 1)
}

pub fn architecture_multimin(seed: u64) -> ResNet {
    Architecture::Multimin.build(seed, 1)
}
