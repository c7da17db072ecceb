//! Small fully connected networks with hand-written backpropagation.
//!
//! Samples are columns throughout: a layer maps `in×N` to `out×N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Linear => v,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}

/// Weight matrices serialise as nested row arrays.
mod nested {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::numerics::DenseMatrix;

    pub fn serialize<S: Serializer>(m: &DenseMatrix, s: S) -> Result<S::Ok, S::Error> {
        m.to_rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DenseMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        DenseMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `out×in`.
    #[serde(with = "nested")]
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    fn affine(&self, input: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = self.weight.matmul(input)?;
        for (i, &b) in self.bias.iter().enumerate() {
            if b != 0.0 {
                out.row_mut(i).iter_mut().for_each(|v| *v += b);
            }
        }
        Ok(out)
    }
}

/// A feed-forward network. Hidden layers use `activation`; the output layer is affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

/// Forward intermediates kept for backpropagation.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<DenseMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<LayerGrad>,
}

impl MlpGrad {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }
}

impl MlpParams {
    /// Random network with widths `[input, hidden..., output]`, weights
    /// drawn i.i.d. from N(0, 1/fan_in) and zero biases.
    pub fn new(widths: &[usize], activation: Activation, rng: &mut SeededRng) -> Result<Self> {
        Self::check_widths(widths)?;
        let layers = widths
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weight: DenseMatrix::from_fn(w[1], w[0], |_, _| scale * rng.normal()),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(Self { layers, activation })
    }

    /// Network with every weight and bias zero.
    pub fn zeros(widths: &[usize], activation: Activation) -> Result<Self> {
        Self::check_widths(widths)?;
        let layers = widths
            .windows(2)
            .map(|w| Layer {
                weight: DenseMatrix::zeros(w[1], w[0]),
                bias: vec![0.0; w[1]],
            })
            .collect();
        Ok(Self { layers, activation })
    }

    /// Builds from explicit layers, checking that the widths chain.
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::Shape(format!(
                    "layer {k}: bias length {} for {} outputs",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {k} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    k + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers, activation })
    }

    fn check_widths(widths: &[usize]) -> Result<()> {
        if widths.len() < 2 {
            return Err(Error::Config(format!(
                "need input and output widths, got {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Config(format!("zero layer width in {widths:?}")));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.output_dim()));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.as_slice().len() + l.bias.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Overwrites all parameters from a vector laid out as [`MlpParams::flatten`].
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let w = l.weight.as_mut_slice();
            w.copy_from_slice(&flat[at..at + w.len()]);
            at += w.len();
            let n = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Output-only forward pass.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.forward(x)?.0)
    }

    /// Forward pass returning the `d×N` output and the cache for [`MlpParams::backward`].
    pub fn forward(&self, x: &DenseMatrix) -> Result<(DenseMatrix, MlpCache)> {
        if x.rows() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} input features, got {}",
                self.input_dim(),
                x.rows()
            )));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = layer.affine(&cur)?;
            if k < last && self.activation != Activation::Linear {
                let act = self.activation;
                out.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
            }
            inputs.push(cur);
            cur = out;
        }
        Ok((cur, MlpCache { inputs }))
    }

    /// Backpropagates `d_out` (gradient w.r.t. the output) to the parameters and the input.
    pub fn backward(&self, cache: &MlpCache, d_out: &DenseMatrix) -> Result<(MlpGrad, DenseMatrix)> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[k];
            let weight = delta.matmul_t(input)?;
            let bias = (0..delta.rows()).map(|i| delta.row(i).iter().sum()).collect();
            grads.push(LayerGrad { weight, bias });
            let mut d_in = layer.weight.t_matmul(&delta)?;
            if k > 0 {
                // input to layer k is the activated output of layer k-1
                let act = self.activation;
                d_in.as_mut_slice()
                    .iter_mut()
                    .zip(input.as_slice())
                    .for_each(|(g, &a)| *g *= act.derivative_from_output(a));
            }
            delta = d_in;
        }
        grads.reverse();
        Ok((MlpGrad { layers: grads }, delta))
    }

    pub(crate) fn descend(&mut self, grad: &MlpGrad, step: &mut crate::optim::Stepper, slot0: usize) {
        for (k, (l, g)) in self.layers.iter_mut().zip(&grad.layers).enumerate() {
            step.apply(slot0 + 2 * k, l.weight.as_mut_slice(), g.weight.as_slice());
            step.apply(slot0 + 2 * k + 1, &mut l.bias, &g.bias);
        }
    }

    /// Number of optimizer slots used by [`MlpParams::descend`].
    pub(crate) fn slots(&self) -> usize {
        2 * self.layers.len()
    }
}
