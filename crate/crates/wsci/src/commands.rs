//! One function per subcommand. Each takes resolved settings and paths and
//! returns the lines to show the user.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wsci_core::data::{generate, region_proposals, Dataset};
use wsci_core::encoding::{encode_with_codebook, gmm_fit, hybrid_concat, GmmModel, SemanticMatrix};
use wsci_core::eval::{
    accuracy, mean_weight_by_flag, outlier_auc, prepare_run, run_mode, summarize, sweep_run, RunReport,
};
use wsci_core::math::argmax;
use wsci_core::vae::{Trainer, WsciModel};
use wsci_core::Matrix;

use crate::config::RunConfig;
use crate::error::{CliError, Context, Result};
use crate::formats::{
    read_checkpoint, read_features, read_gmm, read_semantic, write_checkpoint, write_features, write_gmm,
    write_semantic,
};
use crate::report::{write_csv, write_jsonl, write_summary_csv, EpochMetrics};

pub const REPORTS_FILE: &str = "reports.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

pub fn gen_data(config: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let data = generate(&config.synthetic_spec()?).context("gen-data")?;
    write_features(out, &data)?;
    Ok(vec![format!(
        "wrote {} instances (d={} C={}) to {}",
        data.len(),
        data.dim,
        data.classes,
        out.display()
    )])
}

fn proposals(config: &RunConfig, data: &Dataset) -> Result<Vec<Vec<Vec<f64>>>> {
    let jitter = config.proposal_jitter.unwrap_or(0.25 * config.scale);
    region_proposals(
        &data.training_view(),
        data.classes,
        config.proposals_per_instance,
        jitter,
        config.seed,
    )
    .context("region proposals")
}

pub fn fit_gmm(config: &RunConfig, features: &Path, out: &Path) -> Result<Vec<String>> {
    let data = read_features(features)?;
    let pooled: Vec<Vec<f64>> = proposals(config, &data)?.into_iter().flatten().collect();
    let fit = gmm_fit(&pooled, &config.gmm_options()).context("fit-gmm")?;
    write_gmm(out, &fit.model)?;
    let last = fit.log_likelihoods.last().copied().unwrap_or(f64::NAN);
    let mut lines = vec![format!(
        "K={} iterations={} converged={} mean log-likelihood={last:.6}",
        fit.model.components(),
        fit.log_likelihoods.len().saturating_sub(1),
        fit.converged
    )];
    if !fit.reseeds.is_empty() {
        lines.push(format!("re-seeded {} empty components", fit.reseeds.len()));
    }
    Ok(lines)
}

pub fn encode(config: &RunConfig, features: &Path, gmm: Option<&Path>, out: &Path) -> Result<Vec<String>> {
    let data = read_features(features)?;
    let groups = proposals(config, &data)?;
    let codebook: GmmModel = match gmm {
        Some(path) => read_gmm(path)?,
        None => {
            let pooled: Vec<Vec<f64>> = groups.iter().flatten().cloned().collect();
            gmm_fit(&pooled, &config.gmm_options()).context("encode")?.model
        }
    };
    let (_, transform, block) = encode_with_codebook(&groups, &codebook, &config.visual_encoding()).context("encode")?;
    let semantic = SemanticMatrix::single_block("visual", block).context("encode")?;
    write_semantic(out, &semantic)?;
    let drift = transform.orthonormality_error().context("encode")?;
    Ok(vec![format!(
        "visual block {}x{} (orthonormality error {:.3e}) written to {}",
        semantic.dim(),
        semantic.classes(),
        drift,
        out.display()
    )])
}

/// Stacks the blocks of every file, in order, renormalizing columns per block.
pub fn load_semantic(paths: &[PathBuf]) -> Result<SemanticMatrix> {
    if paths.is_empty() {
        return Err(CliError::Usage("at least one --semantic file is required".into()));
    }
    let mut blocks: Vec<(String, Matrix)> = Vec::new();
    for path in paths {
        let s = read_semantic(path)?;
        for (i, b) in s.blocks().iter().enumerate() {
            blocks.push((b.name.clone(), s.block_matrix(i)));
        }
    }
    let named: Vec<(&str, Matrix)> = blocks.iter().map(|(n, m)| (n.as_str(), m.clone())).collect();
    hybrid_concat(&named).context("semantic matrix")
}

pub struct TrainPaths<'a> {
    pub features: &'a Path,
    pub semantic: &'a [PathBuf],
    pub out: &'a Path,
    pub heldout: Option<&'a Path>,
    pub metrics: Option<&'a Path>,
}

pub fn train(config: &RunConfig, paths: &TrainPaths<'_>) -> Result<Vec<String>> {
    let data = read_features(paths.features)?;
    let semantic = load_semantic(paths.semantic)?;
    if semantic.classes() != data.classes {
        return Err(CliError::Usage(format!(
            "semantic matrix has {} categories, features have {}",
            semantic.classes(),
            data.classes
        )));
    }
    let heldout = paths.heldout.map(read_features).transpose()?;
    let inlier = if data.has_truth() { Some(data.inlier_flags().context("train")?) } else { None };

    let model_config = config.model(data.dim, semantic.dim(), data.classes);
    let examples = data.training_view();
    let mut trainer = Trainer::new(&examples, semantic, model_config).context("train")?;
    let mut metrics = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let stats = trainer.run_epoch().context("train")?;
        let (mean_weight_inlier, mean_weight_outlier) = match &inlier {
            Some(flags) => mean_weight_by_flag(&stats.weights, flags).context("train")?,
            None => (None, None),
        };
        let heldout_accuracy = heldout
            .as_ref()
            .map(|h| heldout_accuracy(trainer.model(), h, config.seed))
            .transpose()?;
        log::info!("epoch {} loss {:.6}", stats.epoch, stats.loss);
        metrics.push(EpochMetrics {
            epoch: stats.epoch,
            loss: stats.loss,
            heldout_accuracy,
            mean_weight_inlier,
            mean_weight_outlier,
        });
    }
    let model = trainer.into_model();
    write_checkpoint(paths.out, &model)?;
    if let Some(path) = paths.metrics {
        write_jsonl(path, &metrics)?;
    }
    let mut lines = vec![format!("checkpoint written to {}", paths.out.display())];
    if let Some(last) = metrics.last() {
        lines.push(format!("final epoch loss {:.6}", last.loss));
        if let Some(acc) = last.heldout_accuracy {
            lines.push(format!("held-out accuracy {acc:.4}"));
        }
    }
    Ok(lines)
}

fn heldout_accuracy(model: &WsciModel, data: &Dataset, seed: u64) -> Result<f64> {
    let (inputs, labels) = data.with_known_truth();
    let probs = model.predict_all(&inputs, seed).context("held-out prediction")?;
    let labels: Vec<Option<usize>> = labels.into_iter().map(Some).collect();
    accuracy(&probs, &labels).context("held-out accuracy")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: usize,
    pub label: usize,
    pub predicted: usize,
    pub confidence: f64,
}

pub fn predict(config: &RunConfig, checkpoint: &Path, features: &Path, out: &Path) -> Result<Vec<String>> {
    let model = read_checkpoint(checkpoint)?;
    let data = read_features(features)?;
    check_compatible(&model, &data)?;
    let probs = model.predict_all(&data.inputs(), config.seed).context("predict")?;
    let rows: Vec<PredictionRow> = data
        .items
        .iter()
        .zip(&probs)
        .map(|(item, p)| {
            let predicted = argmax(p);
            PredictionRow { id: item.id, label: item.label, predicted, confidence: p[predicted] }
        })
        .collect();
    write_csv(out, &rows)?;
    let mut lines = vec![format!("{} predictions written to {}", rows.len(), out.display())];
    if data.has_truth() {
        let (known_probs, known_labels): (Vec<Vec<f64>>, Vec<Option<usize>>) = probs
            .iter()
            .zip(data.true_labels())
            .filter(|(_, t)| t.is_some())
            .map(|(p, t)| (p.clone(), t))
            .unzip();
        if !known_labels.is_empty() {
            let acc = accuracy(&known_probs, &known_labels).context("predict")?;
            lines.push(format!("accuracy {acc:.4} on {} instances of known category", known_labels.len()));
        }
    }
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub rank: usize,
    pub id: usize,
    pub label: usize,
    pub score: f64,
}

/// Ranks instances by `p̃`, highest first; ties keep file order. The whole
/// file is one normalization batch so scores compare across the ranking.
pub fn detect(checkpoint: &Path, features: &Path, out: &Path) -> Result<Vec<String>> {
    let model = read_checkpoint(checkpoint)?;
    let data = read_features(features)?;
    check_compatible(&model, &data)?;
    let scores = model.outlier_scores(&data.inputs(), data.len().max(1)).context("detect")?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let rows: Vec<DetectionRow> = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| DetectionRow {
            rank: rank + 1,
            id: data.items[i].id,
            label: data.items[i].label,
            score: scores[i],
        })
        .collect();
    write_csv(out, &rows)?;
    let mut lines = vec![format!("{} ranked instances written to {}", rows.len(), out.display())];
    if data.has_truth() {
        let flags = data.inlier_flags().context("detect")?;
        if let Ok(auc) = outlier_auc(&scores, &flags) {
            lines.push(format!("outlier AUC {auc:.4}"));
        }
    }
    Ok(lines)
}

fn check_compatible(model: &WsciModel, data: &Dataset) -> Result<()> {
    if model.config.input_dim != data.dim || model.config.classes != data.classes {
        return Err(CliError::Usage(format!(
            "checkpoint expects d={} C={}, features have d={} C={}",
            model.config.input_dim, model.config.classes, data.dim, data.classes
        )));
    }
    Ok(())
}

fn write_reports(out_dir: &Path, reports: &[RunReport]) -> Result<Vec<String>> {
    write_jsonl(&out_dir.join(REPORTS_FILE), reports)?;
    write_summary_csv(&out_dir.join(SUMMARY_FILE), reports)?;
    let mut lines: Vec<String> = summarize(reports).iter().map(|s| s.to_string()).collect();
    lines.push(format!("{} runs written to {}", reports.len(), out_dir.display()));
    Ok(lines)
}

/// Runs every mode on every seed. Seeds fan out across threads; reports keep
/// seed-major order.
pub fn ablate(config: &RunConfig, out_dir: &Path) -> Result<Vec<String>> {
    let modes = config.ablation_modes()?;
    let experiment = config.experiment()?;
    let per_seed: Vec<Vec<RunReport>> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = prepare_run(&experiment, seed)?;
            modes.iter().map(|&m| run_mode(m, &run, &experiment)).collect()
        })
        .collect::<wsci_core::Result<_>>()
        .context("ablate")?;
    let reports: Vec<RunReport> = per_seed.into_iter().flatten().collect();
    write_reports(out_dir, &reports)
}

/// Trains each sweep mode on each noise window. Reports are mode-major, then
/// seed, then window.
pub fn sweep(config: &RunConfig, out_dir: &Path) -> Result<Vec<String>> {
    let modes = config.sweep_mode_list()?;
    let experiment = config.experiment()?;
    let sweep = config.sweep();
    if config.starts.is_empty() {
        return Err(CliError::Usage("starts must not be empty".into()));
    }
    let jobs: Vec<(u64, usize)> = config
        .seeds
        .iter()
        .flat_map(|&seed| config.starts.iter().map(move |&start| (seed, start)))
        .collect();
    let per_job: Vec<Vec<RunReport>> = jobs
        .par_iter()
        .map(|&(seed, start)| {
            let run = sweep_run(&experiment, &sweep, seed, start)?;
            modes
                .iter()
                .map(|&m| {
                    let mut r = run_mode(m, &run, &experiment)?;
                    r.window = Some(start);
                    Ok(r)
                })
                .collect()
        })
        .collect::<wsci_core::Result<_>>()
        .context("sweep")?;
    let mut reports: Vec<RunReport> = Vec::with_capacity(jobs.len() * modes.len());
    for (mi, _) in modes.iter().enumerate() {
        reports.extend(per_job.iter().map(|job| job[mi].clone()));
    }
    write_reports(out_dir, &reports)
}
