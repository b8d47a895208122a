use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::layer::{Activation, DenseLayer, LayerTrace};
use super::params::{ParamMut, ParamRef, ParamStore};
use crate::error::Result;

/// One tanh hidden layer followed by an identity output layer.
#[derive(Debug, Clone)]
pub struct Mlp {
    hidden: DenseLayer,
    output: DenseLayer,
}

#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub hidden: LayerTrace,
    pub output: LayerTrace,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        &self.output.output
    }
}

impl Mlp {
    pub fn glorot<R: Rng + ?Sized>(
        name: &str,
        inputs: usize,
        hidden: usize,
        outputs: usize,
        rng: &mut R,
    ) -> Self {
        Mlp {
            hidden: DenseLayer::glorot(&format!("{name}.hidden"), inputs, hidden, Activation::Tanh, rng),
            output: DenseLayer::glorot(&format!("{name}.out"), hidden, outputs, Activation::Identity, rng),
        }
    }

    pub fn from_layers(hidden: DenseLayer, output: DenseLayer) -> Self {
        Mlp { hidden, output }
    }

    pub fn hidden_layer(&self) -> &DenseLayer {
        &self.hidden
    }

    pub fn output_layer(&self) -> &DenseLayer {
        &self.output
    }

    pub fn output_layer_mut(&mut self) -> &mut DenseLayer {
        &mut self.output
    }

    pub fn inputs(&self) -> usize {
        self.hidden.inputs()
    }

    pub fn outputs(&self) -> usize {
        self.output.outputs()
    }

    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.output.apply(&self.hidden.apply(input)?)
    }

    pub fn trace(&self, input: &[f64]) -> Result<MlpTrace> {
        let hidden = self.hidden.trace(input)?;
        let output = self.output.trace(&hidden.output)?;
        Ok(MlpTrace { hidden, output })
    }

    pub fn backward(&mut self, trace: &MlpTrace, upstream: &[f64]) -> Result<Vec<f64>> {
        let g = self.output.backward_trace(&trace.output, upstream)?;
        self.hidden.backward_trace(&trace.hidden, &g)
    }
}

impl ParamStore for Mlp {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.hidden.visit(f);
        self.output.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.hidden.visit_mut(f);
        self.output.visit_mut(f);
    }
}
