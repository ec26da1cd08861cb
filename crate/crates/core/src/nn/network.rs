use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::loss::{self, LossKind, BCE_EPSILON};
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// One fully connected layer: `a = f(W x + b)`, optionally followed by dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Shape `(out, in)`.
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
    pub dropout_rate: f64,
}

impl DenseLayer {
    pub fn new(
        weights: Matrix,
        biases: Vec<f64>,
        activation: Activation,
        dropout_rate: f64,
    ) -> Result<Self> {
        let layer = Self {
            weights,
            biases,
            activation,
            dropout_rate,
        };
        layer.validate()?;
        Ok(layer)
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig("zero-width layer".into()));
        }
        let limit = (6.0 / (input_dim + output_dim) as f64).sqrt();
        let data = (0..input_dim * output_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self::new(
            Matrix::from_vec(output_dim, input_dim, data)?,
            vec![0.0; output_dim],
            activation,
            dropout_rate,
        )
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim() == 0 || self.output_dim() == 0 {
            return Err(Error::InvalidConfig("zero-width layer".into()));
        }
        if self.biases.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "bias length",
                expected: self.output_dim(),
                actual: self.biases.len(),
            });
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !self.weights.is_finite() || self.biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidConfig("non-finite layer parameters".into()));
        }
        Ok(())
    }

    fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        let mut z = self.weights.matvec(input);
        for (zi, b) in z.iter_mut().zip(&self.biases) {
            *zi += b;
        }
        z
    }
}

/// Shape of one layer when building a fresh network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
    pub dropout_rate: f64,
}

impl LayerSpec {
    pub fn new(units: usize, activation: Activation, dropout_rate: f64) -> Self {
        Self {
            units,
            activation,
            dropout_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-layer record of one forward pass, sufficient for [`DenseNet::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub input: Vec<f64>,
    pub pre_activation: Vec<f64>,
    /// Activations after dropout (what the next layer sees).
    pub output: Vec<f64>,
    /// Inverted-dropout multipliers: `0` for dropped units, `1/(1-rate)` for kept ones.
    pub mask: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub layers: Vec<LayerTrace>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.layers.last().expect("trace of an empty net").output
    }
}

/// Gradients for every layer, mirroring parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.output_dim(), l.input_dim()))
                .collect(),
            biases: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.output_dim()])
                .collect(),
        }
    }

    /// `self += scale · other`.
    pub fn accumulate(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += scale * y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights
            .iter()
            .all(|m| m.as_slice().iter().all(|&v| v == 0.0))
            && self.biases.iter().all(|b| b.iter().all(|&v| v == 0.0))
    }
}

/// Ordered stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    input_dim: usize,
    layers: Vec<DenseLayer>,
}

impl DenseNet {
    /// Assembles a net from existing layers, checking that dimensions chain and
    /// that the output layer carries no dropout.
    pub fn from_layers(input_dim: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig(
                "network needs at least one layer".into(),
            ));
        }
        let mut expected = input_dim;
        for layer in &layers {
            layer.validate()?;
            if layer.input_dim() != expected {
                return Err(Error::DimensionMismatch {
                    context: "layer chaining",
                    expected,
                    actual: layer.input_dim(),
                });
            }
            expected = layer.output_dim();
        }
        if layers.last().is_some_and(|l| l.dropout_rate != 0.0) {
            return Err(Error::InvalidConfig(
                "output layer cannot use dropout".into(),
            ));
        }
        Ok(Self { input_dim, layers })
    }

    /// Fresh Glorot-initialized network.
    pub fn build<R: Rng + ?Sized>(
        input_dim: usize,
        specs: &[LayerSpec],
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidConfig("zero input dimension".into()));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut fan_in = input_dim;
        for spec in specs {
            layers.push(DenseLayer::glorot(
                fan_in,
                spec.units,
                spec.activation,
                spec.dropout_rate,
                rng,
            )?);
            fan_in = spec.units;
        }
        Self::from_layers(input_dim, layers)
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::output_dim)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    /// `[input, hidden..., output]` widths.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(DenseLayer::output_dim))
            .collect()
    }

    /// Sub-network made of the first `count` layers (output-dropout rule not enforced).
    pub fn truncated(&self, count: usize) -> Result<DenseNet> {
        if count == 0 || count > self.layers.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot keep {count} of {} layers",
                self.layers.len()
            )));
        }
        Ok(DenseNet {
            input_dim: self.input_dim,
            layers: self.layers[..count].to_vec(),
        })
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim,
                actual: input.len(),
            });
        }
        if let Some(index) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }

    /// Forward pass recording a trace. In [`Mode::Train`] hidden layers with a
    /// nonzero rate draw a fresh inverted-dropout mask from `rng`; in
    /// [`Mode::Infer`] dropout is skipped and `rng` is untouched.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        input: &[f64],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Trace)> {
        self.check_input(input)?;
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for layer in &self.layers {
            let z = layer.pre_activation(&current);
            let mut a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            let mask = if mode == Mode::Train && layer.dropout_rate > 0.0 {
                let keep = 1.0 - layer.dropout_rate;
                let scale = 1.0 / keep;
                let mask: Vec<f64> = (0..a.len())
                    .map(|_| {
                        if rng.random::<f64>() < keep {
                            scale
                        } else {
                            0.0
                        }
                    })
                    .collect();
                for (ai, m) in a.iter_mut().zip(&mask) {
                    *ai *= m;
                }
                Some(mask)
            } else {
                None
            };
            layers.push(LayerTrace {
                input: std::mem::replace(&mut current, a.clone()),
                pre_activation: z,
                output: a,
                mask,
            });
        }
        Ok((current, Trace { layers }))
    }

    /// Inference-mode forward pass without a trace.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        for layer in &self.layers {
            current = layer
                .pre_activation(&current)
                .into_iter()
                .map(|v| layer.activation.apply(v))
                .collect();
        }
        Ok(current)
    }

    /// Exact gradients of the training objective for one example.
    pub fn backward(&self, trace: &Trace, target: &[f64], kind: LossKind) -> Result<Gradients> {
        self.check_trace(trace)?;
        if target.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "target length",
                expected: self.output_dim(),
                actual: target.len(),
            });
        }
        loss::validate_targets(kind, target)?;

        let last = self.layers.len() - 1;
        let prediction = trace.output();
        let n = prediction.len() as f64;

        // delta = dL/dz for the current layer
        let mut delta: Vec<f64> =
            if kind == LossKind::Bce && self.layers[last].activation == Activation::Sigmoid {
                prediction
                    .iter()
                    .zip(target)
                    .map(|(&p, &y)| {
                        if p <= BCE_EPSILON || p >= 1.0 - BCE_EPSILON {
                            0.0
                        } else {
                            (p - y) / n
                        }
                    })
                    .collect()
            } else {
                let da = loss::objective_gradient(kind, prediction, target);
                let lt = &trace.layers[last];
                da.iter()
                    .zip(lt.pre_activation.iter().zip(&lt.output))
                    .map(|(g, (&z, &a))| g * self.layers[last].activation.derivative(z, a))
                    .collect()
            };

        let mut grads = Gradients::zeros_like(self);
        for k in (0..=last).rev() {
            let lt = &trace.layers[k];
            grads.weights[k].add_outer(&delta, &lt.input, 1.0);
            grads.biases[k].copy_from_slice(&delta);
            if k == 0 {
                break;
            }
            // propagate into the previous layer's (post-dropout) output
            let upstream = self.layers[k].weights.transpose_matvec(&delta);
            let prev = &trace.layers[k - 1];
            let prev_act = self.layers[k - 1].activation;
            delta = upstream
                .iter()
                .enumerate()
                .map(|(j, &g)| {
                    let m = prev.mask.as_ref().map_or(1.0, |m| m[j]);
                    if m == 0.0 {
                        return 0.0;
                    }
                    // output = f(z) * m, so f(z) = output / m
                    let a = prev.output[j] / m;
                    g * m * prev_act.derivative(prev.pre_activation[j], a)
                })
                .collect();
        }
        Ok(grads)
    }

    fn check_trace(&self, trace: &Trace) -> Result<()> {
        if trace.layers.len() != self.layers.len() {
            return Err(Error::StaleTrace(format!(
                "trace has {} layers, net has {}",
                trace.layers.len(),
                self.layers.len()
            )));
        }
        for (k, (lt, layer)) in trace.layers.iter().zip(&self.layers).enumerate() {
            if lt.input.len() != layer.input_dim()
                || lt.pre_activation.len() != layer.output_dim()
                || lt.output.len() != layer.output_dim()
                || lt
                    .mask
                    .as_ref()
                    .is_some_and(|m| m.len() != layer.output_dim())
            {
                return Err(Error::StaleTrace(format!(
                    "layer {k} shape differs from trace"
                )));
            }
        }
        Ok(())
    }

    /// `params -= lr · grads`.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (layer, (gw, gb)) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            for (w, g) in layer.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                *w -= lr * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
    }

    /// Every parameter as one flat vector, layer by layer (weights then biases).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.biases.iter().all(|b| b.is_finite()))
    }
}

/// Sets the parameter at `index` in [`DenseNet::parameters`] order. Test support
/// for finite-difference checks.
pub fn set_parameter(net: &mut DenseNet, mut index: usize, value: f64) {
    for layer in net.layers_mut() {
        let nw = layer.weights.as_slice().len();
        if index < nw {
            layer.weights.as_mut_slice()[index] = value;
            return;
        }
        index -= nw;
        if index < layer.biases.len() {
            layer.biases[index] = value;
            return;
        }
        index -= layer.biases.len();
    }
    panic!("parameter index out of range");
}

/// Flattens gradients in [`DenseNet::parameters`] order.
pub fn flatten_gradients(grads: &Gradients) -> Vec<f64> {
    let mut out = Vec::new();
    for (w, b) in grads.weights.iter().zip(&grads.biases) {
        out.extend_from_slice(w.as_slice());
        out.extend_from_slice(b);
    }
    out
}
