use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::math;

pub const DEFAULT_PRECISION_K: usize = 5;

/// Fraction of rows whose argmax equals the true label.
pub fn accuracy(predictions: &[Vec<f64>], true_labels: &[Option<usize>]) -> Result<f64> {
    check_len("accuracy labels", predictions.len(), true_labels.len())?;
    if predictions.is_empty() {
        return Err(Error::Domain("accuracy of an empty prediction set".into()));
    }
    let mut hits = 0usize;
    for (i, (p, t)) in predictions.iter().zip(true_labels).enumerate() {
        let t = t.ok_or_else(|| Error::State(format!("true label of instance {i} is unknown")))?;
        if math::argmax(p) == t {
            hits += 1;
        }
    }
    Ok(hits as f64 / predictions.len() as f64)
}

/// Probability that a random inlier scores above a random outlier, ties
/// counting one half.
pub fn outlier_auc(scores: &[f64], inlier: &[bool]) -> Result<f64> {
    check_len("outlier_auc flags", scores.len(), inlier.len())?;
    let positives = inlier.iter().filter(|&&h| h).count();
    let negatives = inlier.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Domain("AUC needs both inliers and outliers".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numerical("NaN outlier score".into()));
    }
    // Rank-sum with midranks for ties.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if inlier[k] {
                rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// Fraction of outliers among the `k` lowest scores (lower index first on ties).
pub fn precision_at_k(scores: &[f64], inlier: &[bool], k: usize) -> Result<f64> {
    check_len("precision_at_k flags", scores.len(), inlier.len())?;
    if k == 0 || k > scores.len() {
        return Err(Error::Domain(format!("k = {k} outside 1..={}", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    Ok(order[..k].iter().filter(|&&i| !inlier[i]).count() as f64 / k as f64)
}

/// Mean score of inliers and of outliers; `None` for an empty group.
pub fn mean_weight_by_flag(scores: &[f64], inlier: &[bool]) -> Result<(Option<f64>, Option<f64>)> {
    check_len("mean_weight_by_flag flags", scores.len(), inlier.len())?;
    let mean_of = |want: bool| {
        let v: Vec<f64> = scores
            .iter()
            .zip(inlier)
            .filter(|(_, &h)| h == want)
            .map(|(s, _)| *s)
            .collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    Ok((mean_of(true), mean_of(false)))
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var))
}
