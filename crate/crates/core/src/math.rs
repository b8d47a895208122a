//! Scalar and vector helpers.
//!
//! Transcendentals go through `libm` so results are bit-identical whether or
//! not the crate is built with `std`.

use alloc::vec::Vec;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, f64::from(n))
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `log Σ exp(v_i)` with max-subtraction. Returns `-inf` for empty input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = max(values);
    if !m.is_finite() {
        return m;
    }
    m + ln(values.iter().map(|v| exp(v - m)).sum::<f64>())
}

/// Numerically stable softmax; the result sums to one.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = max(logits);
    let mut out: Vec<f64> = logits.iter().map(|v| exp(v - m)).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// `log softmax(logits)[i]` for every `i`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|v| v - lse).collect()
}

/// Index of the largest value, ties broken by the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_2pi_constant() {
        assert!((LN_2PI - ln(2.0 * core::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn softmax_two_classes() {
        let p = softmax(&[1.0, 0.0]);
        assert!((p[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((p[1] - 0.268_941_421_369_995_1).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_large_values() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + ln(2.0))).abs() < 1e-9);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
    }
}
