//! Model checkpoint: configuration header lines, the semantic matrix and the
//! parameter snapshot listing.
//!
//! ```text
//! wsci-checkpoint
//! d=16 m=32 C=5 hidden=24 lambda=0.0001 seed=7
//! weighting=reconstruction predict_samples=5 batch_size=64 epochs=50
//! learning_rate=0.001 beta1=0.9 beta2=0.999 epsilon=0.00000001 decay=0.95
//! blocks=visual:32
//! param semantic 32 5
//! <row-major values>
//! param encoder.hidden.weight 24 16
//! <row-major values>
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use wsci_core::encoding::SemanticMatrix;
use wsci_core::nn::{AdamConfig, ParamStore, Snapshot, SnapshotEntry};
use wsci_core::vae::{Weighting, WsciConfig, WsciModel};
use wsci_core::Matrix;

use super::semantic::{block_list, parse_blocks};
use super::{join_values, numbered_lines, parse_values, read_to_string, write_string, Header};
use crate::error::{CliError, Context, Result};

const MAGIC: &str = "wsci-checkpoint";
const SEMANTIC_ENTRY: &str = "semantic";

fn weighting_name(w: Weighting) -> &'static str {
    match w {
        Weighting::Reconstruction => "reconstruction",
        Weighting::Uniform => "uniform",
    }
}

pub fn write_checkpoint(path: &Path, model: &WsciModel) -> Result<()> {
    let c = &model.config;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(
        out,
        "d={} m={} C={} hidden={} lambda={} seed={}",
        c.input_dim, c.semantic_dim, c.classes, c.hidden, c.lambda, c.seed
    )
    .unwrap();
    writeln!(
        out,
        "weighting={} predict_samples={} batch_size={} epochs={}",
        weighting_name(c.weighting),
        c.predict_samples,
        c.batch_size,
        c.epochs
    )
    .unwrap();
    writeln!(
        out,
        "learning_rate={} beta1={} beta2={} epsilon={} decay={}",
        c.adam.learning_rate, c.adam.beta1, c.adam.beta2, c.adam.epsilon, c.adam.decay
    )
    .unwrap();
    writeln!(out, "blocks={}", block_list(&model.semantic)).unwrap();

    let a = model.semantic.matrix();
    let mut entries = vec![SnapshotEntry {
        name: SEMANTIC_ENTRY.to_string(),
        rows: a.rows(),
        cols: a.cols(),
        values: a.as_slice().to_vec(),
    }];
    entries.extend(model.snapshot().entries);
    for e in entries {
        writeln!(out, "param {} {} {}", e.name, e.rows, e.cols).unwrap();
        writeln!(out, "{}", join_values(&e.values)).unwrap();
    }
    write_string(path, &out)
}

pub fn read_checkpoint(path: &Path) -> Result<WsciModel> {
    let text = read_to_string(path)?;
    let lines: Vec<(usize, &str)> = numbered_lines(&text).collect();
    if lines.len() < 5 || lines[0].1 != MAGIC {
        return Err(CliError::parse(path, 1, format!("not a checkpoint (expected '{MAGIC}' and 4 header lines)")));
    }
    let shape = Header::parse(path, lines[1].0, lines[1].1)?;
    let training = Header::parse(path, lines[2].0, lines[2].1)?;
    let optimizer = Header::parse(path, lines[3].0, lines[3].1)?;
    let blocks_line = Header::parse(path, lines[4].0, lines[4].1)?;

    let weighting = match training.raw("weighting")? {
        "reconstruction" => Weighting::Reconstruction,
        "uniform" => Weighting::Uniform,
        other => return Err(CliError::parse(path, lines[2].0, format!("unknown weighting '{other}'"))),
    };
    let config = WsciConfig {
        input_dim: shape.get("d")?,
        semantic_dim: shape.get("m")?,
        classes: shape.get("C")?,
        hidden: shape.get("hidden")?,
        lambda: shape.get("lambda")?,
        seed: shape.get("seed")?,
        weighting,
        predict_samples: training.get("predict_samples")?,
        batch_size: training.get("batch_size")?,
        epochs: training.get("epochs")?,
        adam: AdamConfig {
            learning_rate: optimizer.get("learning_rate")?,
            beta1: optimizer.get("beta1")?,
            beta2: optimizer.get("beta2")?,
            epsilon: optimizer.get("epsilon")?,
            decay: optimizer.get("decay")?,
        },
    };
    let blocks = parse_blocks(path, lines[4].0, blocks_line.raw("blocks")?)?;

    let mut snapshot = Snapshot::default();
    let mut rest = lines[5..].iter();
    while let Some(&(line, head)) = rest.next() {
        let parts: Vec<&str> = head.split_whitespace().collect();
        let (name, rows, cols) = match parts.as_slice() {
            ["param", name, rows, cols] => (
                name.to_string(),
                rows.parse::<usize>()
                    .map_err(|_| CliError::parse(path, line, "bad row count"))?,
                cols.parse::<usize>()
                    .map_err(|_| CliError::parse(path, line, "bad column count"))?,
            ),
            _ => return Err(CliError::parse(path, line, "expected 'param <name> <rows> <cols>'")),
        };
        let &(vline, vtext) = rest
            .next()
            .ok_or_else(|| CliError::parse(path, line, format!("parameter {name} has no values")))?;
        let values: Vec<f64> = parse_values(path, vline, vtext)?;
        if values.len() != rows * cols {
            return Err(CliError::parse(
                path,
                vline,
                format!("{name}: expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        snapshot.push(SnapshotEntry {
            name,
            rows,
            cols,
            values,
        });
    }
    let ctx = format!("{}", path.display());
    snapshot.validate().context(ctx.clone())?;

    let a = snapshot
        .get(SEMANTIC_ENTRY)
        .ok_or_else(|| CliError::parse(path, lines[4].0, "checkpoint lacks the semantic matrix"))?;
    let matrix = Matrix::from_row_major(a.rows, a.cols, a.values.clone()).context(ctx.clone())?;
    let semantic = SemanticMatrix::new(matrix, blocks).context(ctx.clone())?;
    let mut model = WsciModel::new(config, semantic).context(ctx.clone())?;
    model.restore(&snapshot).context(ctx)?;
    Ok(model)
}
