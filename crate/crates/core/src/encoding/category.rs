use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::gmm::{responsibilities, GmmModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Mean responsibility vector of one category after suppression.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryEncoding {
    pub values: Vec<f64>,
    /// Number of entries zeroed by suppression.
    pub suppressed: usize,
}

/// `min(10, K − 1)`.
pub fn suppression_count(components: usize) -> usize {
    10.min(components.saturating_sub(1))
}

/// Zeroes the `count` smallest entries, ties broken by lower index first.
pub fn suppress_smallest(values: &mut [f64], count: usize) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    for &i in order.iter().take(count) {
        values[i] = 0.0;
    }
}

/// Encodes every category from its proposal features.
pub fn encode_categories(groups: &[Vec<Vec<f64>>], gmm: &GmmModel) -> Result<Vec<CategoryEncoding>> {
    let k = gmm.components();
    let count = suppression_count(k);
    groups
        .iter()
        .enumerate()
        .map(|(c, proposals)| {
            if proposals.is_empty() {
                return Err(Error::Domain(format!("category {c} has no region proposals")));
            }
            let mut mean = vec![0.0; k];
            for p in proposals {
                for (m, g) in mean.iter_mut().zip(responsibilities(p, gmm)?) {
                    *m += g;
                }
            }
            let n = proposals.len() as f64;
            mean.iter_mut().for_each(|m| *m /= n);
            suppress_smallest(&mut mean, count);
            Ok(CategoryEncoding {
                values: mean,
                suppressed: count,
            })
        })
        .collect()
}

/// Stacks encodings as the columns of a `K × C` matrix.
pub fn encoding_matrix(encodings: &[CategoryEncoding]) -> Result<Matrix> {
    let columns: Vec<Vec<f64>> = encodings.iter().map(|e| e.values.clone()).collect();
    Matrix::from_columns(&columns)
}
