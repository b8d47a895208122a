//! `K=<int> p=<int>` then one line per component: `weight,mean_1..mean_p,var_1..var_p`.

use std::path::Path;

use wsci_core::encoding::GmmModel;

use super::{join_values, numbered_lines, parse_values, read_to_string, write_string, Header};
use crate::error::{CliError, Context, Result};

pub fn write_gmm(path: &Path, gmm: &GmmModel) -> Result<()> {
    let mut out = format!("K={} p={}\n", gmm.components(), gmm.dim());
    for k in 0..gmm.components() {
        let mut row = vec![gmm.weights[k]];
        row.extend_from_slice(&gmm.means[k]);
        row.extend_from_slice(&gmm.variances[k]);
        out.push_str(&join_values(&row));
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn read_gmm(path: &Path) -> Result<GmmModel> {
    let text = read_to_string(path)?;
    let mut lines = numbered_lines(&text);
    let (hline, htext) = lines.next().ok_or_else(|| CliError::parse(path, 1, "empty GMM file"))?;
    let header = Header::parse(path, hline, htext)?;
    let k: usize = header.get("K")?;
    let p: usize = header.get("p")?;
    let (mut weights, mut means, mut variances) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in lines {
        let v: Vec<f64> = parse_values(path, line, row)?;
        if v.len() != 1 + 2 * p {
            return Err(CliError::parse(path, line, format!("expected {} values, found {}", 1 + 2 * p, v.len())));
        }
        weights.push(v[0]);
        means.push(v[1..=p].to_vec());
        variances.push(v[p + 1..].to_vec());
    }
    if weights.len() != k {
        return Err(CliError::parse(path, hline, format!("header says K={k}, found {} components", weights.len())));
    }
    GmmModel::new(weights, means, variances).context(format!("{}", path.display()))
}
