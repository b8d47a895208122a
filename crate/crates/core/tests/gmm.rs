use proptest::prelude::*;
use wsci_core::encoding::{
    encode_categories, gmm_fit, responsibilities, suppress_smallest, suppression_count, GmmFitOptions, GmmModel,
};
use wsci_core::rng;

fn planted(centers: &[Vec<f64>], per: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::seeded(seed, 0);
    let mut out = Vec::new();
    for _ in 0..per {
        for c in centers {
            out.push(c.iter().map(|m| m + spread * rng::standard_normal(&mut r)).collect());
        }
    }
    out
}

#[test]
fn log_likelihood_never_decreases() {
    let mut meta = rng::seeded(20, 0);
    for instance in 0..20u64 {
        let dim = 1 + (instance as usize % 4);
        let clusters = 2 + (instance as usize % 3);
        let centers: Vec<Vec<f64>> = (0..clusters).map(|_| rng::normal_vec(&mut meta, dim).iter().map(|v| 3.0 * v).collect()).collect();
        let samples = planted(&centers, 40, 0.4 + 0.1 * (instance % 5) as f64, instance);
        let mut options = GmmFitOptions::new(2 + instance as usize % 5, instance);
        options.max_iters = 200;
        let fit = gmm_fit(&samples, &options).unwrap();
        assert!(fit.reseeds.is_empty(), "instance {instance} re-seeded");
        for pair in fit.log_likelihoods.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "instance {instance}: {} -> {}", pair[0], pair[1]);
        }
    }
}

#[test]
fn two_planted_clusters_are_recovered() {
    let centers = vec![vec![-3.0, 1.0, 0.5], vec![2.5, -2.0, 4.0]];
    let samples = planted(&centers, 500, 0.5, 9);
    let fit = gmm_fit(&samples, &GmmFitOptions::new(2, 1)).unwrap();
    assert!(fit.converged);
    let mut means = fit.model.means.clone();
    means.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for (got, want) in means.iter().zip(&centers) {
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 0.1, "{got:?} vs {want:?}");
        }
    }
    for w in &fit.model.weights {
        assert!((w - 0.5).abs() < 0.05);
    }
}

#[test]
fn fitting_is_deterministic() {
    let samples = planted(&[vec![0.0, 0.0], vec![4.0, 4.0], vec![0.0, 5.0]], 60, 0.7, 2);
    let a = gmm_fit(&samples, &GmmFitOptions::new(4, 3)).unwrap();
    let b = gmm_fit(&samples, &GmmFitOptions::new(4, 3)).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.log_likelihoods, b.log_likelihoods);
}

#[test]
fn invalid_fits_are_rejected() {
    let samples = planted(&[vec![0.0]], 3, 1.0, 1);
    assert!(gmm_fit(&samples, &GmmFitOptions::new(0, 1)).is_err());
    assert!(gmm_fit(&samples, &GmmFitOptions::new(4, 1)).is_err());
    assert!(gmm_fit(&[], &GmmFitOptions::new(1, 1)).is_err());
}

#[test]
fn category_encodings_are_mean_responsibilities() {
    let gmm = GmmModel::new(
        vec![0.5, 0.5],
        vec![vec![-2.0], vec![2.0]],
        vec![vec![1.0], vec![1.0]],
    )
    .unwrap();
    let groups = vec![vec![vec![-2.0], vec![-1.5]], vec![vec![2.0], vec![0.0]]];
    let enc = encode_categories(&groups, &gmm).unwrap();
    for (group, e) in groups.iter().zip(&enc) {
        let mut want = vec![0.0; 2];
        for x in group {
            for (w, r) in want.iter_mut().zip(responsibilities(x, &gmm).unwrap()) {
                *w += r / group.len() as f64;
            }
        }
        suppress_smallest(&mut want, suppression_count(2));
        assert_eq!(e.suppressed, 1);
        for (g, w) in e.values.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn responsibilities_form_a_distribution(
        x in prop::collection::vec(-10.0f64..10.0, 2),
        means in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..6),
    ) {
        let k = means.len();
        let gmm = GmmModel::new(vec![1.0 / k as f64; k], means, vec![vec![1.0, 2.0]; k]).unwrap();
        let r = responsibilities(&x, &gmm).unwrap();
        prop_assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn suppression_zeroes_exactly_the_smallest(values in prop::collection::vec(0.0f64..1.0, 1..80)) {
        let count = suppression_count(values.len());
        let mut out = values.clone();
        suppress_smallest(&mut out, count);
        prop_assert_eq!(out.iter().filter(|&&v| v == 0.0).count() >= count, true);
        let kept: Vec<f64> = out.iter().cloned().filter(|&v| v != 0.0).collect();
        let zeroed_max = values
            .iter()
            .zip(&out)
            .filter(|(_, o)| **o == 0.0)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        for k in kept {
            prop_assert!(k >= zeroed_max);
        }
    }
}
