use alloc::vec::Vec;

use rand::Rng;

use super::config::WsciConfig;
use super::density::{
    reparameterize, semantic_class_probs, DecoderOutput, GaussianPosterior,
};
use crate::encoding::SemanticMatrix;
use crate::error::{check_len, Error, Result};
use crate::nn::{Activation, DenseLayer, LayerTrace, Mlp, MlpTrace, ParamMut, ParamRef, ParamStore};
use crate::rng::{self, stream};

/// Shared tanh hidden layer with linear heads for `μ_z` and `log σ_z²`.
#[derive(Debug, Clone)]
pub struct Encoder {
    hidden: DenseLayer,
    mean: DenseLayer,
    log_var: DenseLayer,
}

#[derive(Debug, Clone)]
pub struct EncoderTrace {
    hidden: LayerTrace,
    mean: LayerTrace,
    log_var: LayerTrace,
}

impl EncoderTrace {
    pub fn posterior(&self) -> GaussianPosterior {
        GaussianPosterior {
            mean: self.mean.output.clone(),
            log_var: self.log_var.output.clone(),
        }
    }
}

impl Encoder {
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, hidden: usize, latent: usize, rng: &mut R) -> Self {
        Encoder {
            hidden: DenseLayer::glorot("encoder.hidden", inputs, hidden, Activation::Tanh, rng),
            mean: DenseLayer::glorot("encoder.mean", hidden, latent, Activation::Identity, rng),
            log_var: DenseLayer::glorot("encoder.log_var", hidden, latent, Activation::Identity, rng),
        }
    }

    /// Heads start at zero, so `μ_z = 0` and `σ_z = 1` for every input.
    pub fn with_zero_heads<R: Rng + ?Sized>(
        inputs: usize,
        hidden: usize,
        latent: usize,
        rng: &mut R,
    ) -> Self {
        Encoder {
            hidden: DenseLayer::glorot("encoder.hidden", inputs, hidden, Activation::Tanh, rng),
            mean: DenseLayer::zeros("encoder.mean", hidden, latent, Activation::Identity),
            log_var: DenseLayer::zeros("encoder.log_var", hidden, latent, Activation::Identity),
        }
    }

    pub fn inputs(&self) -> usize {
        self.hidden.inputs()
    }

    pub fn latent(&self) -> usize {
        self.mean.outputs()
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden.outputs()
    }

    pub fn encode(&self, x: &[f64]) -> Result<GaussianPosterior> {
        let h = self.hidden.apply(x)?;
        Ok(GaussianPosterior {
            mean: self.mean.apply(&h)?,
            log_var: self.log_var.apply(&h)?,
        })
    }

    pub fn trace(&self, x: &[f64]) -> Result<EncoderTrace> {
        let hidden = self.hidden.trace(x)?;
        let mean = self.mean.trace(&hidden.output)?;
        let log_var = self.log_var.trace(&hidden.output)?;
        Ok(EncoderTrace {
            hidden,
            mean,
            log_var,
        })
    }

    /// Accumulates gradients given `∂loss/∂μ_z` and `∂loss/∂log σ_z²`;
    /// returns `∂loss/∂x`.
    pub fn backward(
        &mut self,
        trace: &EncoderTrace,
        grad_mean: &[f64],
        grad_log_var: &[f64],
    ) -> Result<Vec<f64>> {
        let mut grad_hidden = self.mean.backward_trace(&trace.mean, grad_mean)?;
        let from_log_var = self.log_var.backward_trace(&trace.log_var, grad_log_var)?;
        for (g, v) in grad_hidden.iter_mut().zip(from_log_var) {
            *g += v;
        }
        self.hidden.backward_trace(&trace.hidden, &grad_hidden)
    }
}

impl ParamStore for Encoder {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.hidden.visit(f);
        self.mean.visit(f);
        self.log_var.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.hidden.visit_mut(f);
        self.mean.visit_mut(f);
        self.log_var.visit_mut(f);
    }
}

/// One-hidden-layer decoder producing `μ_x`; `σ_x` is not learned.
#[derive(Debug, Clone)]
pub struct Decoder {
    net: Mlp,
}

impl Decoder {
    pub fn glorot<R: Rng + ?Sized>(latent: usize, hidden: usize, outputs: usize, rng: &mut R) -> Self {
        Decoder {
            net: Mlp::glorot("decoder", latent, hidden, outputs, rng),
        }
    }

    /// Output layer starts at zero, so `μ_x = 0` for every latent.
    pub fn with_zero_output<R: Rng + ?Sized>(
        latent: usize,
        hidden: usize,
        outputs: usize,
        rng: &mut R,
    ) -> Self {
        let mut net = Mlp::glorot("decoder", latent, hidden, outputs, rng);
        net.output_layer_mut().visit_mut(&mut |p| p.value.fill(0.0));
        Decoder { net }
    }

    pub fn outputs(&self) -> usize {
        self.net.outputs()
    }

    pub fn decode(&self, z: &[f64]) -> Result<DecoderOutput> {
        Ok(DecoderOutput {
            mean: self.net.apply(z)?,
        })
    }

    pub fn trace(&self, z: &[f64]) -> Result<MlpTrace> {
        self.net.trace(z)
    }

    pub fn backward(&mut self, trace: &MlpTrace, grad_mean: &[f64]) -> Result<Vec<f64>> {
        self.net.backward(trace, grad_mean)
    }
}

impl ParamStore for Decoder {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.net.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.net.visit_mut(f);
    }
}

/// Encoder and decoder of a (semantic or plain) VAE.
#[derive(Debug, Clone)]
pub struct VaeNet {
    pub encoder: Encoder,
    pub decoder: Decoder,
}

impl VaeNet {
    pub fn glorot<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        latent: usize,
        rng: &mut R,
    ) -> Self {
        let encoder = Encoder::glorot(input_dim, hidden, latent, rng);
        let decoder = Decoder::glorot(latent, hidden, input_dim, rng);
        VaeNet { encoder, decoder }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.inputs()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.latent()
    }
}

impl ParamStore for VaeNet {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.encoder.visit(f);
        self.decoder.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.encoder.visit_mut(f);
        self.decoder.visit_mut(f);
    }
}

/// A trained (or initialized) model: network, configuration and the fixed
/// semantic matrix its classifier scores against.
#[derive(Debug, Clone)]
pub struct WsciModel {
    pub config: WsciConfig,
    pub net: VaeNet,
    pub semantic: SemanticMatrix,
}

impl WsciModel {
    /// Glorot-initialized model seeded from `config.seed`.
    pub fn new(config: WsciConfig, semantic: SemanticMatrix) -> Result<Self> {
        config.validate()?;
        Self::check_semantic(&config, &semantic)?;
        let mut rng = rng::seeded(config.seed, stream::INIT);
        let net = VaeNet::glorot(config.input_dim, config.hidden, config.semantic_dim, &mut rng);
        Ok(WsciModel {
            config,
            net,
            semantic,
        })
    }

    pub fn from_parts(config: WsciConfig, net: VaeNet, semantic: SemanticMatrix) -> Result<Self> {
        config.validate()?;
        Self::check_semantic(&config, &semantic)?;
        check_len("WsciModel encoder input", config.input_dim, net.input_dim())?;
        check_len("WsciModel latent", config.semantic_dim, net.latent_dim())?;
        Ok(WsciModel {
            config,
            net,
            semantic,
        })
    }

    fn check_semantic(config: &WsciConfig, semantic: &SemanticMatrix) -> Result<()> {
        if semantic.classes() != config.classes {
            return Err(Error::config(
                "classes",
                alloc::format!(
                    "semantic matrix has {} columns, config expects {}",
                    semantic.classes(),
                    config.classes
                ),
            ));
        }
        if semantic.dim() != config.semantic_dim {
            return Err(Error::config(
                "semantic_dim",
                alloc::format!(
                    "semantic matrix has {} rows, config expects {}",
                    semantic.dim(),
                    config.semantic_dim
                ),
            ));
        }
        Ok(())
    }

    pub fn encode(&self, x: &[f64]) -> Result<GaussianPosterior> {
        self.net.encoder.encode(x)
    }

    pub fn decode(&self, z: &[f64]) -> Result<DecoderOutput> {
        self.net.decoder.decode(z)
    }

    /// Class probabilities averaged over the supplied noise draws.
    pub fn predict_with_eps(&self, x: &[f64], eps_draws: &[Vec<f64>]) -> Result<Vec<f64>> {
        if eps_draws.is_empty() {
            return Err(Error::Domain("prediction needs at least one latent sample".into()));
        }
        let q = self.encode(x)?;
        let mut mean = alloc::vec![0.0; self.semantic.classes()];
        for eps in eps_draws {
            let sample = reparameterize(&q, eps)?;
            for (m, p) in mean.iter_mut().zip(semantic_class_probs(&sample.z, &self.semantic)?) {
                *m += p;
            }
        }
        let n = eps_draws.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }

    /// Averages `samples` fresh latent draws from `rng`.
    pub fn predict<R: Rng + ?Sized>(&self, x: &[f64], samples: usize, rng: &mut R) -> Result<Vec<f64>> {
        let draws: Vec<Vec<f64>> = (0..samples)
            .map(|_| rng::normal_vec(rng, self.config.semantic_dim))
            .collect();
        self.predict_with_eps(x, &draws)
    }

    /// Predicts every input with `config.predict_samples` draws from a stream
    /// keyed by `seed`, consumed in input order.
    pub fn predict_all(&self, inputs: &[&[f64]], seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = rng::seeded(seed, stream::PREDICT);
        inputs
            .iter()
            .map(|x| self.predict(x, self.config.predict_samples, &mut rng))
            .collect()
    }

    /// Reconstruction-density weights `p̃` with `ε = 0`, normalized per
    /// evaluation batch of `batch_size` consecutive inputs.
    pub fn outlier_scores(&self, inputs: &[&[f64]], batch_size: usize) -> Result<Vec<f64>> {
        super::predict::outlier_scores(&self.net, inputs, batch_size)
    }
}

impl ParamStore for WsciModel {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.net.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.net.visit_mut(f);
    }
}
