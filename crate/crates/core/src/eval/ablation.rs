use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::metrics::{accuracy, mean_and_std, mean_weight_by_flag, outlier_auc, precision_at_k, DEFAULT_PRECISION_K};
use crate::data::{generate, rank_order_noise, region_proposals, split, Dataset, SyntheticSpec, TrainingExample};
use crate::encoding::{build_visual_encoding, hybrid_concat, SemanticMatrix, VisualEncodingConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::nn::{AdamConfig, AdamState, Mlp};
use crate::rng::{self, stream};
use crate::vae::objective::accumulate_gradients;
use crate::vae::{self, epoch_batches, VaeNet, VaeObjective, WsciConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AblationMode {
    /// Semantic VAE whose latent classifier is weighted by its own `p̃`.
    Wsci,
    /// Plain VAE; a separate classifier on `x` weighted by that VAE's `p̃`.
    Sim1,
    /// Semantic VAE; a separate classifier on `x` weighted by its `p̃`.
    Sim2,
    /// Latent classifier with every weight one and no reconstruction term.
    Unweighted,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [
        AblationMode::Wsci,
        AblationMode::Sim1,
        AblationMode::Sim2,
        AblationMode::Unweighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::Wsci => "wsci",
            AblationMode::Sim1 => "sim1",
            AblationMode::Sim2 => "sim2",
            AblationMode::Unweighted => "unweighted",
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("mode", format!("unknown mode '{s}' (wsci, sim1, sim2, unweighted)")))
    }
}

/// Everything a single ablation run depends on besides the mode and seed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub spec: SyntheticSpec,
    pub test_fraction: f64,
    /// GMM components of the visual codebook.
    pub components: usize,
    /// Rows of the learned transform; also the semantic dimension.
    pub target_rows: usize,
    pub beta: f64,
    pub gmm_max_iters: usize,
    pub epochs: usize,
    pub lambda: f64,
    pub batch_size: usize,
    pub predict_samples: usize,
    /// Inputs per normalization batch when scoring outliers.
    pub eval_batch: usize,
    /// Defaults to `round((d + m) / 2)`.
    pub hidden: Option<usize>,
    pub adam: AdamConfig,
}

impl ExperimentConfig {
    pub fn desk_default() -> Self {
        ExperimentConfig {
            spec: SyntheticSpec::desk_default(),
            test_fraction: 0.5,
            components: 64,
            target_rows: 32,
            beta: 100.0,
            gmm_max_iters: 100,
            epochs: 50,
            lambda: 1e-4,
            batch_size: 64,
            predict_samples: 5,
            eval_batch: 64,
            hidden: None,
            adam: AdamConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config("test_fraction", "must lie in (0, 1)"));
        }
        if self.eval_batch == 0 {
            return Err(Error::config("eval_batch", "must be >= 1"));
        }
        self.model_config(0, AblationMode::Wsci).validate()
    }

    /// Model configuration of `mode` for a run with `seed`.
    pub fn model_config(&self, seed: u64, mode: AblationMode) -> WsciConfig {
        let mut cfg = WsciConfig::new(self.spec.dim, self.target_rows, self.spec.classes);
        cfg.lambda = self.lambda;
        cfg.batch_size = self.batch_size;
        cfg.epochs = self.epochs;
        cfg.predict_samples = self.predict_samples;
        cfg.seed = seed;
        cfg.adam = self.adam;
        if let Some(h) = self.hidden {
            cfg.hidden = h;
        }
        if mode == AblationMode::Unweighted {
            cfg = cfg.unweighted();
        }
        cfg
    }

    fn encoding_config(&self, seed: u64) -> VisualEncodingConfig {
        VisualEncodingConfig {
            components: self.components,
            target_rows: self.target_rows,
            beta: self.beta,
            gmm_max_iters: self.gmm_max_iters,
            gmm_tol: 1e-6,
            seed,
        }
    }
}

/// Rank-ordered noise windows drawn from a large per-category pool, scored on
/// a separate clean test set from the same clusters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepConfig {
    pub pool_per_class: usize,
    pub pool_outlier_ratio: f64,
    pub pool_flip_ratio: f64,
    pub window: usize,
    pub test_per_class: usize,
}

impl SweepConfig {
    /// Window starts that overlap like the default window: each step moves
    /// 40% of a window deeper into the ranking.
    pub const DEFAULT_STARTS: [usize; 3] = [1, 81, 161];
}

impl Default for SweepConfig {
    /// Half the pool is noise, so the last window is mostly outliers.
    fn default() -> Self {
        SweepConfig {
            pool_per_class: 360,
            pool_outlier_ratio: 0.45,
            pool_flip_ratio: 0.05,
            window: 200,
            test_per_class: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunReport {
    pub mode: AblationMode,
    pub seed: u64,
    /// 1-based start of the noise window, for sweep runs.
    pub window: Option<usize>,
    pub accuracy: f64,
    /// `None` when the training set has no outliers (or no inliers).
    pub auc: Option<f64>,
    pub precision_at_k: Option<f64>,
    pub mean_weight_inlier: Option<f64>,
    pub mean_weight_outlier: Option<f64>,
    pub epoch_loss: Vec<f64>,
    /// Mean training-batch `p̃` of inliers and outliers, per epoch.
    pub epoch_weight_inlier: Vec<Option<f64>>,
    pub epoch_weight_outlier: Vec<Option<f64>>,
}

/// Data and semantic matrix shared by every mode of one seed.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub seed: u64,
    pub train: Dataset,
    pub test: Dataset,
    pub semantic: SemanticMatrix,
}

fn build_semantic(train: &Dataset, config: &ExperimentConfig, seed: u64) -> Result<SemanticMatrix> {
    let view = train.training_view();
    let groups = region_proposals(
        &view,
        train.classes,
        config.spec.proposals_per_instance,
        config.spec.proposal_jitter,
        seed,
    )?;
    let visual = build_visual_encoding(&groups, &config.encoding_config(seed))?;
    hybrid_concat(&[("visual", visual.block)])
}

pub fn prepare_run(config: &ExperimentConfig, seed: u64) -> Result<PreparedRun> {
    config.validate()?;
    let data = generate(&config.spec.clone().with_seed(seed))?;
    let (train, test) = split(&data, config.test_fraction, seed)?;
    let semantic = build_semantic(&train, config, seed)?;
    Ok(PreparedRun {
        seed,
        train,
        test,
        semantic,
    })
}

struct Trained {
    predictions: Vec<Vec<f64>>,
    scores: Vec<f64>,
    epoch_loss: Vec<f64>,
    epoch_weights: Vec<Vec<f64>>,
}

fn train_latent_classifier(
    run: &PreparedRun,
    test_inputs: &[&[f64]],
    config: WsciConfig,
    eval_batch: usize,
) -> Result<Trained> {
    let seed = config.seed;
    let (model, stats) = vae::train(&run.train.training_view(), run.semantic.clone(), config)?;
    Ok(Trained {
        predictions: model.predict_all(test_inputs, seed)?,
        scores: model.outlier_scores(&run.train.inputs(), eval_batch)?,
        epoch_loss: stats.iter().map(|s| s.loss).collect(),
        epoch_weights: stats.into_iter().map(|s| s.weights).collect(),
    })
}

/// A VAE (semantic or plain) trained jointly with a separate classifier on
/// `x`; the classifier's per-instance loss is weighted by the VAE's `p̃`.
/// Both losses are summed; they share no parameters.
fn train_detached_classifier(
    run: &PreparedRun,
    test_inputs: &[&[f64]],
    config: WsciConfig,
    objective: VaeObjective,
    eval_batch: usize,
) -> Result<Trained> {
    config.validate()?;
    let data = run.train.training_view();
    let semantic = match objective.latent {
        vae::LatentTerm::Semantic { .. } => Some(&run.semantic),
        vae::LatentTerm::KlStandardNormal => None,
    };
    let mut rng = rng::seeded(config.seed, stream::INIT);
    let mut net = VaeNet::glorot(config.input_dim, config.hidden, config.semantic_dim, &mut rng);
    let mut classifier = Mlp::glorot("classifier", config.input_dim, config.hidden, config.classes, &mut rng);
    let mut adam = AdamState::new(config.adam);
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut epoch_weights = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let batches = epoch_batches(config.seed, epoch, data.len(), config.batch_size, config.semantic_dim);
        let mut loss = 0.0;
        let mut weights = vec![0.0; data.len()];
        for (indices, eps) in &batches {
            let batch: Vec<&TrainingExample> = indices.iter().map(|&i| &data[i]).collect();
            let outcome = accumulate_gradients(&mut net, &batch, eps, semantic, &objective)?;
            loss += outcome.loss;
            for ((ex, &w), &i) in batch.iter().zip(&outcome.weights.tilde_p).zip(indices) {
                weights[i] = w;
                let trace = classifier.trace(&ex.x)?;
                let log_probs = math::log_softmax(trace.output());
                loss -= w * log_probs[ex.label];
                let mut grad: Vec<f64> = log_probs.iter().map(|lp| w * math::exp(*lp)).collect();
                grad[ex.label] -= w;
                classifier.backward(&trace, &grad)?;
            }
            adam.update(&mut (&mut net, &mut classifier))?;
        }
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss in epoch {epoch}")));
        }
        adam.end_epoch();
        epoch_loss.push(loss);
        epoch_weights.push(weights);
    }

    let predictions = test_inputs
        .iter()
        .map(|x| classifier.apply(x).map(|logits| math::softmax(&logits)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trained {
        predictions,
        scores: vae::outlier_scores(&net, &run.train.inputs(), eval_batch)?,
        epoch_loss,
        epoch_weights,
    })
}

/// Trains `mode` on the prepared data and evaluates it: accuracy on test
/// instances of known category, outlier metrics on the training set.
pub fn run_mode(mode: AblationMode, run: &PreparedRun, config: &ExperimentConfig) -> Result<RunReport> {
    let (test_inputs, test_labels) = run.test.with_known_truth();
    let model_config = config.model_config(run.seed, mode);
    let trained = match mode {
        AblationMode::Wsci | AblationMode::Unweighted => {
            train_latent_classifier(run, &test_inputs, model_config, config.eval_batch)?
        }
        AblationMode::Sim1 => {
            train_detached_classifier(run, &test_inputs, model_config, VaeObjective::plain_vae(), config.eval_batch)?
        }
        AblationMode::Sim2 => train_detached_classifier(
            run,
            &test_inputs,
            model_config,
            VaeObjective::semantic_vae(),
            config.eval_batch,
        )?,
    };
    let truth: Vec<Option<usize>> = test_labels.into_iter().map(Some).collect();
    let accuracy = accuracy(&trained.predictions, &truth)?;

    let flags = run.train.inlier_flags()?;
    let both = flags.iter().any(|&h| h) && flags.iter().any(|&h| !h);
    let (auc, precision) = if both {
        let k = DEFAULT_PRECISION_K.min(flags.len());
        (
            Some(outlier_auc(&trained.scores, &flags)?),
            Some(precision_at_k(&trained.scores, &flags, k)?),
        )
    } else {
        (None, None)
    };
    let (mean_weight_inlier, mean_weight_outlier) = mean_weight_by_flag(&trained.scores, &flags)?;
    Ok(RunReport {
        mode,
        seed: run.seed,
        window: None,
        accuracy,
        auc,
        precision_at_k: precision,
        mean_weight_inlier,
        mean_weight_outlier,
        epoch_loss: trained.epoch_loss,
        epoch_weight_inlier: trained
            .epoch_weights
            .iter()
            .map(|w| mean_weight_by_flag(w, &flags).map(|(inl, _)| inl))
            .collect::<Result<_>>()?,
        epoch_weight_outlier: trained
            .epoch_weights
            .iter()
            .map(|w| mean_weight_by_flag(w, &flags).map(|(_, out)| out))
            .collect::<Result<_>>()?,
    })
}

/// Every mode on every seed, seed-major. Modes of one seed share data and
/// semantic matrix.
pub fn run_ablation(modes: &[AblationMode], config: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<RunReport>> {
    if modes.is_empty() {
        return Err(Error::Domain("no ablation modes requested".into()));
    }
    let mut reports = Vec::with_capacity(modes.len() * seeds.len());
    for &seed in seeds {
        let run = prepare_run(config, seed)?;
        for &mode in modes {
            reports.push(run_mode(mode, &run, config)?);
        }
    }
    Ok(reports)
}

/// Training window `[start, start + window)` of each category's rank-ordered pool.
pub fn sweep_run(config: &ExperimentConfig, sweep: &SweepConfig, seed: u64, start: usize) -> Result<PreparedRun> {
    let mut pool_spec = config.spec.clone().with_seed(seed);
    pool_spec.per_class = sweep.pool_per_class;
    pool_spec.outlier_ratio = sweep.pool_outlier_ratio;
    pool_spec.flip_ratio = sweep.pool_flip_ratio;
    let pool = generate(&pool_spec)?;
    let train = rank_order_noise(&pool, start, sweep.window, seed)?;

    let mut test_spec = config.spec.clone().clean();
    test_spec.per_class = sweep.test_per_class;
    test_spec.seed = seed ^ 0x7E57_0000_0000_0000;
    let test = generate(&test_spec)?;
    let semantic = build_semantic(&train, config, seed)?;
    Ok(PreparedRun {
        seed,
        train,
        test,
        semantic,
    })
}

/// Trains `mode` on each noise window for every seed, seed-major.
pub fn noise_sweep(
    mode: AblationMode,
    starts: &[usize],
    config: &ExperimentConfig,
    sweep: &SweepConfig,
    seeds: &[u64],
) -> Result<Vec<RunReport>> {
    config.validate()?;
    let mut reports = Vec::with_capacity(starts.len() * seeds.len());
    for &seed in seeds {
        for &start in starts {
            let run = sweep_run(config, sweep, seed, start)?;
            let mut report = run_mode(mode, &run, config)?;
            report.window = Some(start);
            reports.push(report);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub mode: AblationMode,
    pub window: Option<usize>,
    pub runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub auc_mean: Option<f64>,
    pub auc_std: Option<f64>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10}", self.mode.name())?;
        if let Some(w) = self.window {
            write!(f, " s({w})")?;
        }
        write!(
            f,
            " acc {:.4} ± {:.4}",
            self.accuracy_mean, self.accuracy_std
        )?;
        if let (Some(m), Some(s)) = (self.auc_mean, self.auc_std) {
            write!(f, " auc {m:.4} ± {s:.4}")?;
        }
        write!(f, " (n={})", self.runs)
    }
}

/// Mean ± sample standard deviation per `(mode, window)`, in first-seen order.
pub fn summarize(reports: &[RunReport]) -> Vec<Summary> {
    let mut keys: Vec<(AblationMode, Option<usize>)> = Vec::new();
    for r in reports {
        if !keys.contains(&(r.mode, r.window)) {
            keys.push((r.mode, r.window));
        }
    }
    keys.into_iter()
        .map(|(mode, window)| {
            let group: Vec<&RunReport> = reports.iter().filter(|r| r.mode == mode && r.window == window).collect();
            let acc: Vec<f64> = group.iter().map(|r| r.accuracy).collect();
            let aucs: Vec<f64> = group.iter().filter_map(|r| r.auc).collect();
            let (accuracy_mean, accuracy_std) = mean_and_std(&acc);
            let (auc_mean, auc_std) = if aucs.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_and_std(&aucs);
                (Some(m), Some(s))
            };
            Summary {
                mode,
                window,
                runs: group.len(),
                accuracy_mean,
                accuracy_std,
                auc_mean,
                auc_std,
            }
        })
        .collect()
}
