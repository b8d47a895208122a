use proptest::prelude::*;
use wsci_core::encoding::SemanticMatrix;
use wsci_core::rng;
use wsci_core::vae::{
    kl_standard_normal, normalize_batch_weights, recon_log_density, reparameterize, semantic_class_probs,
    DecoderOutput, GaussianPosterior,
};
use wsci_core::Matrix;

/// Monte-Carlo estimate of `E_q[log q(z) − log N(z; 0, I)]` with its standard error.
fn kl_monte_carlo(q: &GaussianPosterior, samples: usize, seed: u64) -> (f64, f64) {
    let mut r = rng::seeded(seed, 0);
    let std = q.std();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut log_ratio = 0.0;
        for j in 0..q.dim() {
            let e = rng::standard_normal(&mut r);
            let z = q.mean[j] + std[j] * e;
            // log q − log p per coordinate; the 2π terms cancel.
            log_ratio += -0.5 * e * e - std[j].ln() + 0.5 * z * z;
        }
        sum += log_ratio;
        sum_sq += log_ratio * log_ratio;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn kl_matches_monte_carlo_on_random_posteriors() {
    let mut r = rng::seeded(2024, 0);
    for trial in 0..5 {
        let dim = 1 + trial % 4;
        let mean: Vec<f64> = (0..dim).map(|_| 1.5 * rng::standard_normal(&mut r)).collect();
        let std: Vec<f64> = (0..dim).map(|_| (0.6 * rng::standard_normal(&mut r)).exp()).collect();
        let q = GaussianPosterior::from_std(mean, &std).unwrap();
        let exact = kl_standard_normal(&q).unwrap();
        let (estimate, se) = kl_monte_carlo(&q, 1_000_000, 77 + trial as u64);
        assert!(
            (exact - estimate).abs() <= 3.0 * se,
            "trial {trial}: closed form {exact}, estimate {estimate} ± {se}"
        );
    }
}

#[test]
fn kl_examples() {
    let unit = GaussianPosterior::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
    assert_eq!(kl_standard_normal(&unit).unwrap(), 0.0);
    let shifted = GaussianPosterior::new(vec![1.0], vec![0.0]).unwrap();
    assert!((kl_standard_normal(&shifted).unwrap() - 0.5).abs() < 1e-15);
    let wide = GaussianPosterior::from_std(vec![0.0], &[2.0]).unwrap();
    let want = 0.5 * (4.0 - 1.0 - 4.0f64.ln());
    assert!((kl_standard_normal(&wide).unwrap() - want).abs() < 1e-15);
}

#[test]
fn recon_density_matches_per_coordinate_sum() {
    let mut r = rng::seeded(31, 0);
    for _ in 0..50 {
        let d = 1 + (rng::standard_normal(&mut r).abs() * 10.0) as usize;
        let x: Vec<f64> = (0..d).map(|_| 3.0 * rng::standard_normal(&mut r)).collect();
        let mean: Vec<f64> = (0..d).map(|_| 3.0 * rng::standard_normal(&mut r)).collect();
        let want: f64 = x
            .iter()
            .zip(&mean)
            .map(|(xi, mi)| -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * (xi - mi) * (xi - mi))
            .sum();
        let got = recon_log_density(&x, &DecoderOutput { mean }).unwrap();
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn recon_density_rejects_length_mismatch() {
    assert!(recon_log_density(&[0.0, 1.0], &DecoderOutput { mean: vec![0.0] }).is_err());
}

#[test]
fn normalization_on_random_batches() {
    let mut r = rng::seeded(100, 0);
    for _ in 0..100 {
        let n = 1 + (rng::standard_normal(&mut r).abs() * 40.0) as usize;
        let log_p: Vec<f64> = (0..n).map(|_| -20.0 + 15.0 * rng::standard_normal(&mut r)).collect();
        let w = normalize_batch_weights(&log_p).unwrap().tilde_p;
        assert_eq!(w.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
        for i in 0..n {
            for j in 0..n {
                if log_p[i] < log_p[j] {
                    assert!(w[i] <= w[j]);
                }
            }
        }
    }
}

#[test]
fn normalization_rejects_empty_and_non_finite() {
    assert!(normalize_batch_weights(&[]).is_err());
    assert!(normalize_batch_weights(&[0.0, f64::NAN]).is_err());
    assert!(normalize_batch_weights(&[f64::INFINITY]).is_err());
}

proptest! {
    #[test]
    fn normalization_is_shift_invariant(
        log_p in prop::collection::vec(-500.0f64..0.0, 1..64),
        shift in -1000.0f64..1000.0,
    ) {
        let a = normalize_batch_weights(&log_p).unwrap().tilde_p;
        let shifted: Vec<f64> = log_p.iter().map(|v| v + shift).collect();
        let b = normalize_batch_weights(&shifted).unwrap().tilde_p;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * x.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn normalization_keeps_order_and_range(log_p in prop::collection::vec(-700.0f64..700.0, 1..64)) {
        let w = normalize_batch_weights(&log_p).unwrap().tilde_p;
        prop_assert!(w.iter().any(|&v| v == 1.0));
        prop_assert!(w.iter().all(|&v| v >= 0.0 && v <= 1.0));
        for i in 0..w.len() {
            for j in 0..w.len() {
                if log_p[i] <= log_p[j] {
                    prop_assert!(w[i] <= w[j]);
                }
            }
        }
    }

    #[test]
    fn class_probabilities_sum_to_one(
        columns in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 2..7),
        z in prop::collection::vec(-50.0f64..50.0, 4),
    ) {
        let semantic = SemanticMatrix::single_block("p", Matrix::from_columns(&columns).unwrap()).unwrap();
        let p = semantic_class_probs(&z, &semantic).unwrap();
        prop_assert_eq!(p.len(), columns.len());
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reparameterize_is_affine_in_noise(
        mean in prop::collection::vec(-5.0f64..5.0, 3),
        log_var in prop::collection::vec(-4.0f64..4.0, 3),
        eps in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let q = GaussianPosterior::new(mean.clone(), log_var.clone()).unwrap();
        let s = reparameterize(&q, &eps).unwrap();
        for j in 0..3 {
            let want = mean[j] + (0.5 * log_var[j]).exp() * eps[j];
            prop_assert!((s.z[j] - want).abs() < 1e-12);
        }
        prop_assert_eq!(s.eps, eps);
    }
}
