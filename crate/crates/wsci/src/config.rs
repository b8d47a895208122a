//! Flat run configuration: a TOML file of `key = value` pairs, overridden by
//! the `WSCI_SEED` environment variable (seed only) and then by `--key value`
//! flags.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};
use wsci_core::data::SyntheticSpec;
use wsci_core::encoding::{GmmFitOptions, VisualEncodingConfig};
use wsci_core::eval::{AblationMode, ExperimentConfig, SweepConfig};
use wsci_core::nn::AdamConfig;
use wsci_core::vae::default_hidden;
use wsci_core::vae::WsciConfig;

use crate::error::{CliError, Context, Result};
use crate::formats::read_to_string;

pub const SEED_ENV: &str = "WSCI_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,

    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    /// Distance between any two category means.
    pub separation: f64,
    /// Per-coordinate standard deviation of every category cluster.
    pub scale: f64,
    pub geometry_seed: u64,
    pub outlier_ratio: f64,
    pub flip_ratio: f64,
    pub outlier_margin: f64,
    pub box_padding: f64,
    pub proposals_per_instance: usize,
    /// Defaults to a quarter of `scale`.
    pub proposal_jitter: Option<f64>,

    pub components: usize,
    pub target_rows: usize,
    pub beta: f64,
    pub gmm_max_iters: usize,
    pub gmm_tol: f64,

    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub predict_samples: usize,
    /// Defaults to `round((d + m) / 2)`.
    pub hidden: Option<usize>,
    pub learning_rate: f64,
    pub lr_decay: f64,

    pub modes: Vec<String>,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub eval_batch: usize,
    pub ablation_components: usize,
    pub ablation_target_rows: usize,

    pub sweep_modes: Vec<String>,
    pub starts: Vec<usize>,
    pub window: usize,
    pub pool_per_class: usize,
    pub pool_outlier_ratio: f64,
    pub pool_flip_ratio: f64,
    pub test_per_class: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let experiment = ExperimentConfig::desk_default();
        let sweep = SweepConfig::default();
        let adam = AdamConfig::default();
        RunConfig {
            seed: 0,
            classes: SyntheticSpec::DESK_CLASSES,
            dim: SyntheticSpec::DESK_DIM,
            per_class: SyntheticSpec::DESK_PER_CLASS,
            separation: SyntheticSpec::DESK_SEPARATION,
            scale: SyntheticSpec::DESK_SCALE,
            geometry_seed: SyntheticSpec::DESK_GEOMETRY_SEED,
            outlier_ratio: 0.3,
            flip_ratio: 0.05,
            outlier_margin: 2.0,
            box_padding: 2.5,
            proposals_per_instance: 3,
            proposal_jitter: None,
            components: 256,
            target_rows: 128,
            beta: 100.0,
            gmm_max_iters: 200,
            gmm_tol: 1e-6,
            lambda: 1e-4,
            epochs: 50,
            batch_size: 64,
            predict_samples: 5,
            hidden: None,
            learning_rate: adam.learning_rate,
            lr_decay: adam.decay,
            modes: AblationMode::ALL.iter().map(|m| m.name().to_string()).collect(),
            seeds: vec![1, 2, 3, 4, 5],
            test_fraction: experiment.test_fraction,
            eval_batch: experiment.eval_batch,
            ablation_components: experiment.components,
            ablation_target_rows: experiment.target_rows,
            sweep_modes: vec!["wsci".into(), "unweighted".into()],
            starts: SweepConfig::DEFAULT_STARTS.to_vec(),
            window: sweep.window,
            pool_per_class: sweep.pool_per_class,
            pool_outlier_ratio: sweep.pool_outlier_ratio,
            pool_flip_ratio: sweep.pool_flip_ratio,
            test_per_class: sweep.test_per_class,
        }
    }
}

/// Command-line overrides; every flag is named after its config key.
#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(rename_all = "snake_case")]
pub struct ConfigArgs {
    /// TOML file with `key = value` settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<std::path::PathBuf>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier_ratio: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flip_ratio: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier_margin: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_padding: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposals_per_instance: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal_jitter: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_rows: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmm_max_iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmm_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predict_samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_decay: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_batch: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation_components: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation_target_rows: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_modes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_per_class: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_outlier_ratio: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_flip_ratio: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_per_class: Option<usize>,
}

impl ConfigArgs {
    /// File settings, then `WSCI_SEED`, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut table = match &self.config {
            Some(path) => parse_table(path, &read_to_string(path)?)?,
            None => toml::Table::new(),
        };
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed: u64 = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}='{raw}' is not an unsigned integer")))?;
            table.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        let flags = toml::Table::try_from(self).map_err(|e| CliError::Usage(format!("bad flag value: {e}")))?;
        table.extend(flags);
        let config: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("configuration: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }
}

fn parse_table(path: &Path, text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.synthetic_spec()?.validate().context("configuration")?;
        self.experiment()?.validate().context("configuration")?;
        self.ablation_modes()?;
        self.sweep_mode_list()?;
        if self.seeds.is_empty() {
            return Err(CliError::Usage("seeds must not be empty".into()));
        }
        Ok(())
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticSpec> {
        let mut spec = SyntheticSpec::planted(
            self.classes,
            self.dim,
            self.per_class,
            self.separation,
            self.scale,
            self.geometry_seed,
        )
        .context("configuration")?;
        spec.outlier_ratio = self.outlier_ratio;
        spec.flip_ratio = self.flip_ratio;
        spec.outlier_margin = self.outlier_margin;
        spec.box_padding = self.box_padding;
        spec.proposals_per_instance = self.proposals_per_instance;
        spec.proposal_jitter = self.proposal_jitter.unwrap_or(0.25 * self.scale);
        spec.seed = self.seed;
        Ok(spec)
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            decay: self.lr_decay,
            ..AdamConfig::default()
        }
    }

    /// Model settings for features of dimension `d`, semantic dimension `m`
    /// and `classes` categories.
    pub fn model(&self, d: usize, m: usize, classes: usize) -> WsciConfig {
        let mut cfg = WsciConfig::new(d, m, classes);
        cfg.hidden = self.hidden.unwrap_or_else(|| default_hidden(d, m));
        cfg.lambda = self.lambda;
        cfg.epochs = self.epochs;
        cfg.batch_size = self.batch_size;
        cfg.predict_samples = self.predict_samples;
        cfg.seed = self.seed;
        cfg.adam = self.adam();
        cfg
    }

    pub fn gmm_options(&self) -> GmmFitOptions {
        let mut options = GmmFitOptions::new(self.components, self.seed);
        options.max_iters = self.gmm_max_iters;
        options.tol = self.gmm_tol;
        options
    }

    pub fn visual_encoding(&self) -> VisualEncodingConfig {
        VisualEncodingConfig {
            components: self.components,
            target_rows: self.target_rows,
            beta: self.beta,
            gmm_max_iters: self.gmm_max_iters,
            gmm_tol: self.gmm_tol,
            seed: self.seed,
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            spec: self.synthetic_spec()?,
            test_fraction: self.test_fraction,
            components: self.ablation_components,
            target_rows: self.ablation_target_rows,
            beta: self.beta,
            gmm_max_iters: self.gmm_max_iters,
            epochs: self.epochs,
            lambda: self.lambda,
            batch_size: self.batch_size,
            predict_samples: self.predict_samples,
            eval_batch: self.eval_batch,
            hidden: self.hidden,
            adam: self.adam(),
        })
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            pool_per_class: self.pool_per_class,
            pool_outlier_ratio: self.pool_outlier_ratio,
            pool_flip_ratio: self.pool_flip_ratio,
            window: self.window,
            test_per_class: self.test_per_class,
        }
    }

    pub fn ablation_modes(&self) -> Result<Vec<AblationMode>> {
        parse_modes(&self.modes)
    }

    pub fn sweep_mode_list(&self) -> Result<Vec<AblationMode>> {
        parse_modes(&self.sweep_modes)
    }
}

fn parse_modes(names: &[String]) -> Result<Vec<AblationMode>> {
    if names.is_empty() {
        return Err(CliError::Usage("mode list must not be empty".into()));
    }
    names
        .iter()
        .map(|n| n.parse::<AblationMode>().context("configuration"))
        .collect()
}
