use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::params::{ParamMut, ParamRef, ParamStore};
use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => math::tanh(x),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative given the pre-activation and the activation output.
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - out * out,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Values recorded by a forward pass and consumed by the matching backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub input: Vec<f64>,
    pub pre: Vec<f64>,
    pub output: Vec<f64>,
}

/// Affine map followed by an elementwise activation: `act(W·x + b)`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    weight_name: String,
    bias_name: String,
    inputs: usize,
    outputs: usize,
    activation: Activation,
    /// Row-major, `outputs × inputs`.
    weight: Vec<f64>,
    bias: Vec<f64>,
    grad_weight: Vec<f64>,
    grad_bias: Vec<f64>,
    cache: Option<LayerTrace>,
}

impl DenseLayer {
    pub fn zeros(name: &str, inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            weight_name: format!("{name}.weight"),
            bias_name: format!("{name}.bias"),
            inputs,
            outputs,
            activation,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            grad_weight: vec![0.0; inputs * outputs],
            grad_bias: vec![0.0; outputs],
            cache: None,
        }
    }

    /// Uniform init in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        name: &str,
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut layer = DenseLayer::zeros(name, inputs, outputs, activation);
        let limit = math::sqrt(6.0 / (inputs + outputs) as f64);
        for w in &mut layer.weight {
            *w = rng.random_range(-limit..limit);
        }
        layer
    }

    pub fn from_parts(
        name: &str,
        weight: &Matrix,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        check_len("DenseLayer bias", weight.rows(), bias.len())?;
        let mut layer = DenseLayer::zeros(name, weight.cols(), weight.rows(), activation);
        layer.weight.copy_from_slice(weight.as_slice());
        layer.bias = bias;
        Ok(layer)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn grad_weight(&self) -> &[f64] {
        &self.grad_weight
    }

    pub fn grad_bias(&self) -> &[f64] {
        &self.grad_bias
    }

    /// Pure evaluation without recording anything.
    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("DenseLayer input", self.inputs, input.len())?;
        Ok(self
            .pre_activation(input)
            .into_iter()
            .map(|v| self.activation.apply(v))
            .collect())
    }

    pub fn trace(&self, input: &[f64]) -> Result<LayerTrace> {
        check_len("DenseLayer input", self.inputs, input.len())?;
        let pre = self.pre_activation(input);
        let output = pre.iter().map(|&v| self.activation.apply(v)).collect();
        Ok(LayerTrace {
            input: input.to_vec(),
            pre,
            output,
        })
    }

    /// Forward pass that caches its trace for a later [`DenseLayer::backward`].
    pub fn forward(&mut self, input: &[f64]) -> Result<Vec<f64>> {
        let trace = self.trace(input)?;
        let out = trace.output.clone();
        self.cache = Some(trace);
        Ok(out)
    }

    /// Backward pass against the trace cached by the last `forward`.
    pub fn backward(&mut self, upstream: &[f64]) -> Result<Vec<f64>> {
        let trace = self
            .cache
            .take()
            .ok_or_else(|| Error::State(format!("{}: backward before forward", self.bias_name)))?;
        let grad = self.backward_trace(&trace, upstream);
        self.cache = Some(trace);
        grad
    }

    /// Accumulates parameter gradients for `trace` and returns `∂loss/∂input`.
    pub fn backward_trace(&mut self, trace: &LayerTrace, upstream: &[f64]) -> Result<Vec<f64>> {
        check_len("DenseLayer upstream", self.outputs, upstream.len())?;
        check_len("DenseLayer trace", self.inputs, trace.input.len())?;
        let mut grad_input = vec![0.0; self.inputs];
        for o in 0..self.outputs {
            let delta = upstream[o] * self.activation.derivative(trace.pre[o], trace.output[o]);
            if delta == 0.0 {
                continue;
            }
            self.grad_bias[o] += delta;
            let row = o * self.inputs;
            let grad_row = &mut self.grad_weight[row..row + self.inputs];
            for (g, x) in grad_row.iter_mut().zip(&trace.input) {
                *g += delta * x;
            }
            for (gi, w) in grad_input.iter_mut().zip(&self.weight[row..row + self.inputs]) {
                *gi += delta * w;
            }
        }
        Ok(grad_input)
    }

    fn pre_activation(&self, input: &[f64]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.inputs.max(1))
            .take(self.outputs)
            .zip(&self.bias)
            .map(|(row, b)| {
                if self.inputs == 0 {
                    *b
                } else {
                    math::dot(row, input) + b
                }
            })
            .collect()
    }
}

impl ParamStore for DenseLayer {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        f(ParamRef {
            name: &self.weight_name,
            rows: self.outputs,
            cols: self.inputs,
            value: &self.weight,
            grad: &self.grad_weight,
        });
        f(ParamRef {
            name: &self.bias_name,
            rows: self.outputs,
            cols: 1,
            value: &self.bias,
            grad: &self.grad_bias,
        });
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        f(ParamMut {
            name: &self.weight_name,
            rows: self.outputs,
            cols: self.inputs,
            value: &mut self.weight,
            grad: &mut self.grad_weight,
        });
        f(ParamMut {
            name: &self.bias_name,
            rows: self.outputs,
            cols: 1,
            value: &mut self.bias,
            grad: &mut self.grad_bias,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn identity_layer(act: Activation) -> DenseLayer {
        DenseLayer::from_parts("l", &Matrix::identity(2), vec![0.0; 2], act).unwrap()
    }

    #[test]
    fn forward_identity() {
        let mut l = identity_layer(Activation::Identity);
        assert_eq!(l.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn forward_relu_gates_negative() {
        let mut l = identity_layer(Activation::Relu);
        assert_eq!(l.forward(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn forward_tanh_zero() {
        let mut l = DenseLayer::from_parts(
            "t",
            &Matrix::from_rows(&[vec![1.0]]).unwrap(),
            vec![0.0],
            Activation::Tanh,
        )
        .unwrap();
        assert_eq!(l.forward(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let mut l = identity_layer(Activation::Identity);
        assert!(matches!(l.forward(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn backward_identity_passes_upstream() {
        let mut l = identity_layer(Activation::Identity);
        l.forward(&[3.0, 4.0]).unwrap();
        assert_eq!(l.backward(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(l.grad_bias(), &[1.0, 0.0]);
        assert_eq!(l.grad_weight(), &[3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn backward_relu_gate() {
        let mut l = identity_layer(Activation::Relu);
        l.forward(&[-1.0, 2.0]).unwrap();
        assert_eq!(l.backward(&[5.0, 5.0]).unwrap(), vec![0.0, 5.0]);
    }

    #[test]
    fn backward_before_forward_is_state_error() {
        let mut l = identity_layer(Activation::Tanh);
        assert!(matches!(l.backward(&[1.0, 1.0]), Err(Error::State(_))));
    }

    #[test]
    fn glorot_is_bounded_and_seeded() {
        let mut r1 = rng::seeded(3, rng::stream::INIT);
        let mut r2 = rng::seeded(3, rng::stream::INIT);
        let a = DenseLayer::glorot("a", 10, 6, Activation::Tanh, &mut r1);
        let b = DenseLayer::glorot("a", 10, 6, Activation::Tanh, &mut r2);
        assert_eq!(a.weight(), b.weight());
        let limit = math::sqrt(6.0 / 16.0);
        assert!(a.weight().iter().all(|w| w.abs() <= limit));
    }
}
