use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use wsci_core::encoding::{
    build_laplacian, learn_transform, separation_objective, step_matrix, PowerIterationOptions, SeparationProblem,
};
use wsci_core::rng;
use wsci_core::Matrix;

/// Columns are random responsibility-like encodings: non-negative, summing to one.
fn random_encodings(k: usize, c: usize, seed: u64) -> Matrix {
    let mut r = rng::seeded(seed, 0);
    let columns: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng::standard_normal(&mut r).powi(4)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|v| v / total).collect()
        })
        .collect();
    Matrix::from_columns(&columns).unwrap()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// `Σ_{i<j} ‖W rᵢ − W rⱼ‖²` over category columns.
fn pairwise_objective(w: &Matrix, r: &Matrix) -> f64 {
    let wr = to_na(w) * to_na(r);
    let mut total = 0.0;
    for i in 0..wr.ncols() {
        for j in i + 1..wr.ncols() {
            total += (wr.column(i) - wr.column(j)).norm_squared();
        }
    }
    total
}

#[test]
fn learned_rows_are_leading_eigenvectors_of_their_step() {
    let r = random_encodings(32, 8, 3);
    let problem = SeparationProblem::new(r.clone(), 100.0, None).unwrap();
    assert_eq!(problem.target_rows, 16);
    let transform = learn_transform(&problem, &PowerIterationOptions::default()).unwrap();
    assert_eq!((transform.weights.rows(), transform.weights.cols()), (16, 32));

    let scatter = problem.scatter().unwrap();
    for step in 0..problem.target_rows {
        let previous = Matrix::from_rows(
            &(0..step).map(|i| transform.weights.row(i).to_vec()).collect::<Vec<_>>(),
        )
        .unwrap_or_else(|_| Matrix::zeros(0, 32));
        let m = step_matrix(&scatter, &previous, 100.0).unwrap();
        let w = transform.weights.row(step);

        let norm: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-9, "row {step} norm {norm}");

        let mw = m.matvec(w).unwrap();
        let lambda: f64 = w.iter().zip(&mw).map(|(a, b)| a * b).sum();
        let residual: f64 = mw.iter().zip(w).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        assert!(residual <= 1e-8, "row {step} residual {residual}");

        let eig = SymmetricEigen::new(to_na(&m));
        let top = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = eig.eigenvalues.amax().max(1.0);
        assert!((lambda - top).abs() <= 1e-8 * scale, "row {step}: {lambda} vs leading {top}");
    }
    let drift = transform.orthonormality_error().unwrap();
    assert!(drift < 0.1, "‖WWᵀ − I‖_F = {drift}");
}

#[test]
fn objective_equals_pairwise_distances_for_learned_transform() {
    let r = random_encodings(32, 8, 4);
    let problem = SeparationProblem::new(r.clone(), 100.0, None).unwrap();
    let transform = learn_transform(&problem, &PowerIterationOptions::default()).unwrap();
    let h = build_laplacian(8).unwrap();
    let got = separation_objective(&transform.weights, &r, &h).unwrap();
    let want = pairwise_objective(&transform.weights, &r);
    assert!((got - want).abs() <= 1e-8 * want.max(1.0), "{got} vs {want}");
}

#[test]
fn first_row_beats_random_unit_rows() {
    let r = random_encodings(32, 8, 5);
    let problem = SeparationProblem::new(r.clone(), 100.0, Some(1)).unwrap();
    let transform = learn_transform(&problem, &PowerIterationOptions::default()).unwrap();
    let best = pairwise_objective(&transform.weights, &r);
    let mut g = rng::seeded(6, 0);
    for _ in 0..200 {
        let v = rng::normal_vec(&mut g, 32);
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let w = Matrix::from_rows(&[v.iter().map(|x| x / n).collect()]).unwrap();
        assert!(pairwise_objective(&w, &r) <= best + 1e-12);
    }
}

#[test]
fn transform_is_deterministic_and_sign_fixed() {
    let r = random_encodings(16, 4, 8);
    let problem = SeparationProblem::new(r, 100.0, None).unwrap();
    let a = learn_transform(&problem, &PowerIterationOptions::default()).unwrap();
    let b = learn_transform(&problem, &PowerIterationOptions::default()).unwrap();
    assert_eq!(a.weights, b.weights);
    for i in 0..a.weights.rows() {
        let row = a.weights.row(i);
        let lead = row.iter().cloned().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        assert!(lead > 0.0);
    }
}

#[test]
fn degenerate_problems_are_rejected() {
    let r = random_encodings(8, 1, 1);
    assert!(SeparationProblem::new(r, 100.0, None).is_err());
    let r = random_encodings(8, 3, 1);
    assert!(SeparationProblem::new(r.clone(), 100.0, Some(9)).is_err());
    assert!(SeparationProblem::new(r.clone(), 100.0, Some(0)).is_err());
    assert!(SeparationProblem::new(r, -1.0, None).is_err());
}

proptest! {
    #[test]
    fn objective_matches_pairwise_oracle(
        k in 2usize..8,
        c in 2usize..6,
        rows in 1usize..4,
        seed in any::<u64>(),
    ) {
        let r = random_encodings(k, c, seed);
        let mut g = rng::seeded(seed, 1);
        let w = Matrix::from_rows(&(0..rows).map(|_| rng::normal_vec(&mut g, k)).collect::<Vec<_>>()).unwrap();
        let h = build_laplacian(c).unwrap();
        let got = separation_objective(&w, &r, &h).unwrap();
        let want = pairwise_objective(&w, &r);
        prop_assert!((got - want).abs() <= 1e-10 * want.max(1.0));
    }

    #[test]
    fn laplacian_rows_sum_to_zero(c in 2usize..20) {
        let h = build_laplacian(c).unwrap();
        for i in 0..c {
            prop_assert_eq!(h.row(i).iter().sum::<f64>(), 0.0);
            prop_assert_eq!(h[(i, i)], (c - 1) as f64);
        }
    }
}
