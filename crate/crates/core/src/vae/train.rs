use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::config::WsciConfig;
use super::model::WsciModel;
use super::objective::{accumulate_gradients, VaeObjective};
use crate::data::TrainingExample;
use crate::encoding::SemanticMatrix;
use crate::error::{Error, Result};
use crate::nn::AdamState;
use crate::rng::{self, stream};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochStats {
    pub epoch: usize,
    /// Sum of mini-batch losses over the epoch.
    pub loss: f64,
    /// `p̃` of every training instance from its mini-batch, indexed like the
    /// training set.
    pub weights: Vec<f64>,
}

/// Mini-batches for one epoch: a seeded shuffle of `0..n` cut into chunks of
/// `batch_size`, each paired with one standard-normal draw of length `latent`
/// per instance. Deterministic in `(seed, epoch)`.
pub fn epoch_batches(
    seed: u64,
    epoch: usize,
    n: usize,
    batch_size: usize,
    latent: usize,
) -> Vec<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut rng = rng::seeded(seed, stream::EPOCH_BASE + epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
        .chunks(batch_size.max(1))
        .map(|chunk| {
            let eps = chunk.iter().map(|_| rng::normal_vec(&mut rng, latent)).collect();
            (chunk.to_vec(), eps)
        })
        .collect()
}

pub(crate) fn validate_training_set(data: &[TrainingExample], dim: usize, classes: usize) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Domain("training set is empty".into()));
    }
    for (i, ex) in data.iter().enumerate() {
        if ex.x.len() != dim {
            return Err(Error::config("input_dim", format!("instance {i} has {} features", ex.x.len())));
        }
        if ex.label >= classes {
            return Err(Error::Domain(format!("instance {i} has label {} >= {classes}", ex.label)));
        }
        if ex.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("instance {i} has non-finite features")));
        }
    }
    Ok(())
}

/// Epoch-at-a-time trainer.
pub struct Trainer<'a> {
    model: WsciModel,
    adam: AdamState,
    objective: VaeObjective,
    data: &'a [TrainingExample],
    epoch: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a [TrainingExample], semantic: SemanticMatrix, config: WsciConfig) -> Result<Self> {
        let model = WsciModel::new(config, semantic)?;
        Self::from_model(data, model)
    }

    /// Continues from an existing model with a fresh optimizer.
    pub fn from_model(data: &'a [TrainingExample], model: WsciModel) -> Result<Self> {
        validate_training_set(data, model.config.input_dim, model.config.classes)?;
        Ok(Trainer {
            adam: AdamState::new(model.config.adam),
            objective: VaeObjective::from_config(&model.config),
            model,
            data,
            epoch: 0,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn model(&self) -> &WsciModel {
        &self.model
    }

    pub fn into_model(self) -> WsciModel {
        self.model
    }

    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let cfg = &self.model.config;
        let batches = epoch_batches(cfg.seed, self.epoch, self.data.len(), cfg.batch_size, cfg.semantic_dim);
        let mut weights = vec![0.0; self.data.len()];
        let mut loss = 0.0;
        for (indices, eps) in &batches {
            let batch: Vec<&TrainingExample> = indices.iter().map(|&i| &self.data[i]).collect();
            let outcome = accumulate_gradients(
                &mut self.model.net,
                &batch,
                eps,
                Some(&self.model.semantic),
                &self.objective,
            )?;
            self.adam.update(&mut self.model.net)?;
            loss += outcome.loss;
            for (&i, w) in indices.iter().zip(&outcome.weights.tilde_p) {
                weights[i] = *w;
            }
        }
        self.adam.end_epoch();
        let stats = EpochStats {
            epoch: self.epoch,
            loss,
            weights,
        };
        self.epoch += 1;
        Ok(stats)
    }
}

/// Trains for `config.epochs` epochs.
pub fn train(
    data: &[TrainingExample],
    semantic: SemanticMatrix,
    config: WsciConfig,
) -> Result<(WsciModel, Vec<EpochStats>)> {
    let epochs = config.epochs;
    let mut trainer = Trainer::new(data, semantic, config)?;
    let stats = (0..epochs).map(|_| trainer.run_epoch()).collect::<Result<Vec<_>>>()?;
    Ok((trainer.into_model(), stats))
}
