//! `m=<int> C=<int> blocks=<name>:<width>[,<name>:<width>...]` then one line
//! per category holding that category's column of `A`.

use std::path::Path;

use wsci_core::encoding::{SemanticBlock, SemanticMatrix};
use wsci_core::Matrix;

use super::{join_values, numbered_lines, parse_values, read_to_string, write_string, Header};
use crate::error::{CliError, Context, Result};

pub(crate) fn block_list(semantic: &SemanticMatrix) -> String {
    semantic
        .blocks()
        .iter()
        .map(|b| format!("{}:{}", b.name, b.width))
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn parse_blocks(path: &Path, line: usize, raw: &str) -> Result<Vec<SemanticBlock>> {
    let mut offset = 0;
    raw.split(',')
        .map(|item| {
            let (name, width) = item
                .split_once(':')
                .ok_or_else(|| CliError::parse(path, line, format!("block '{item}' is not name:width")))?;
            let width: usize = width
                .parse()
                .map_err(|_| CliError::parse(path, line, format!("bad block width '{width}'")))?;
            let block = SemanticBlock {
                name: name.to_string(),
                offset,
                width,
            };
            offset += width;
            Ok(block)
        })
        .collect()
}

pub fn write_semantic(path: &Path, semantic: &SemanticMatrix) -> Result<()> {
    let mut out = format!(
        "m={} C={} blocks={}\n",
        semantic.dim(),
        semantic.classes(),
        block_list(semantic)
    );
    for c in 0..semantic.classes() {
        out.push_str(&join_values(&semantic.column(c)));
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn read_semantic(path: &Path) -> Result<SemanticMatrix> {
    let text = read_to_string(path)?;
    let mut lines = numbered_lines(&text);
    let (hline, htext) = lines
        .next()
        .ok_or_else(|| CliError::parse(path, 1, "empty semantic matrix file"))?;
    let header = Header::parse(path, hline, htext)?;
    let m: usize = header.get("m")?;
    let classes: usize = header.get("C")?;
    let blocks = parse_blocks(path, hline, header.raw("blocks")?)?;
    let mut columns = Vec::with_capacity(classes);
    for (line, row) in lines {
        let col: Vec<f64> = parse_values(path, line, row)?;
        if col.len() != m {
            return Err(CliError::parse(path, line, format!("expected m={m} values, found {}", col.len())));
        }
        columns.push(col);
    }
    if columns.len() != classes {
        return Err(CliError::parse(path, hline, format!("header says C={classes}, found {} columns", columns.len())));
    }
    let ctx = format!("{}", path.display());
    let matrix = Matrix::from_columns(&columns).context(ctx.clone())?;
    SemanticMatrix::new(matrix, blocks).context(ctx)
}
