//! `d=<int> C=<int> truth=<0|1>` then one row per instance:
//! `label,x_1,...,x_d[,h,true_label]` with `true_label = -1` when unknown.

use std::fmt::Write as _;
use std::path::Path;

use wsci_core::data::{Dataset, HiddenTruth, LabeledFeature, NoiseKind};

use super::{join_values, numbered_lines, parse_values, read_to_string, write_string, Header};
use crate::error::{CliError, Context, Result};

pub fn write_features(path: &Path, data: &Dataset) -> Result<()> {
    let truth = data.has_truth() && !data.is_empty();
    let mut out = format!("d={} C={} truth={}\n", data.dim, data.classes, u8::from(truth));
    for it in &data.items {
        write!(out, "{},{}", it.label, join_values(&it.x)).expect("write to String");
        if truth {
            let t = it.truth.expect("checked by has_truth");
            let true_label = t.true_label.map_or(-1, |l| l as i64);
            write!(out, ",{},{}", u8::from(t.is_inlier()), true_label).expect("write to String");
        }
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn read_features(path: &Path) -> Result<Dataset> {
    let text = read_to_string(path)?;
    let mut lines = numbered_lines(&text);
    let (hline, htext) = lines
        .next()
        .ok_or_else(|| CliError::parse(path, 1, "empty feature file"))?;
    let header = Header::parse(path, hline, htext)?;
    let dim: usize = header.get("d")?;
    let classes: usize = header.get("C")?;
    let truth = match header.raw("truth")? {
        "0" => false,
        "1" => true,
        other => return Err(CliError::parse(path, hline, format!("truth must be 0 or 1, found '{other}'"))),
    };
    let columns = 1 + dim + if truth { 2 } else { 0 };

    let mut items = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != columns {
            return Err(CliError::parse(
                path,
                line,
                format!("shape mismatch: expected {columns} columns for d={dim}, found {}", fields.len()),
            ));
        }
        let label = parse_label(path, line, fields[0], classes)?;
        let x: Vec<f64> = parse_values(path, line, &fields[1..=dim].join(","))?;
        let truth = if truth {
            Some(parse_truth(path, line, fields[dim + 1], fields[dim + 2], label, classes)?)
        } else {
            None
        };
        items.push(LabeledFeature {
            id: items.len(),
            x,
            label,
            truth,
        });
    }
    Dataset::new(dim, classes, items).context(format!("{}", path.display()))
}

fn parse_label(path: &Path, line: usize, raw: &str, classes: usize) -> Result<usize> {
    let label: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("label '{raw}' is not a category index")))?;
    if label >= classes {
        return Err(CliError::parse(path, line, format!("label {label} >= C={classes}")));
    }
    Ok(label)
}

fn parse_truth(path: &Path, line: usize, h: &str, true_label: &str, label: usize, classes: usize) -> Result<HiddenTruth> {
    let true_label: i64 = true_label
        .trim()
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("true_label '{true_label}' is not an integer")))?;
    if true_label < -1 || true_label >= classes as i64 {
        return Err(CliError::parse(path, line, format!("true_label {true_label} outside -1..{classes}")));
    }
    let true_label = usize::try_from(true_label).ok();
    let kind = match (h.trim(), true_label) {
        ("1", Some(t)) if t == label => NoiseKind::Clean,
        ("1", _) => return Err(CliError::parse(path, line, "h=1 requires true_label equal to the label")),
        ("0", None) => NoiseKind::Outlier,
        ("0", Some(t)) if t != label => NoiseKind::Flip,
        ("0", Some(_)) => return Err(CliError::parse(path, line, "h=0 with true_label equal to the label")),
        (other, _) => return Err(CliError::parse(path, line, format!("h must be 0 or 1, found '{other}'"))),
    };
    Ok(HiddenTruth { kind, true_label })
}
