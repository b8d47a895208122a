//! Text artifact formats. Every file starts with a `key=value` header line;
//! floats are written with Rust's shortest round-trip formatting so a
//! write/read cycle is lossless.

mod checkpoint;
mod features;
mod gmm;
mod semantic;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use features::{read_features, write_features};
pub use gmm::{read_gmm, write_gmm};
pub use semantic::{read_semantic, write_semantic};

use crate::error::{CliError, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_string(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Whitespace-separated `key=value` tokens of one line.
pub(crate) struct Header<'a> {
    path: &'a Path,
    line: usize,
    fields: BTreeMap<&'a str, &'a str>,
}

impl<'a> Header<'a> {
    pub(crate) fn parse(path: &'a Path, line: usize, text: &'a str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        for token in text.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| CliError::parse(path, line, format!("expected key=value, found '{token}'")))?;
            if fields.insert(k, v).is_some() {
                return Err(CliError::parse(path, line, format!("duplicate header key '{k}'")));
            }
        }
        Ok(Header { path, line, fields })
    }

    pub(crate) fn raw(&self, key: &str) -> Result<&'a str> {
        self.fields
            .get(key)
            .copied()
            .ok_or_else(|| CliError::parse(self.path, self.line, format!("header lacks '{key}='")))
    }

    pub(crate) fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| CliError::parse(self.path, self.line, format!("bad value '{raw}' for '{key}'")))
    }
}

/// Numbered non-blank lines (1-based numbers).
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub(crate) fn parse_values<T: FromStr>(path: &Path, line: usize, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse()
                .map_err(|_| CliError::parse(path, line, format!("'{v}' is not a number")))
        })
        .collect()
}

pub(crate) fn join_values(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&v.to_string());
    }
    out
}
