use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::math;
use crate::rng::{self, stream};

/// `H = C·I − 1·1ᵀ`: diagonal `C − 1`, off-diagonal `−1`.
pub fn build_laplacian(classes: usize) -> Result<Matrix> {
    if classes < 2 {
        return Err(Error::Domain(format!(
            "category separation needs at least 2 categories, got {classes}"
        )));
    }
    let mut h = Matrix::zeros(classes, classes);
    for i in 0..classes {
        for j in 0..classes {
            h[(i, j)] = if i == j { (classes - 1) as f64 } else { -1.0 };
        }
    }
    Ok(h)
}

/// `trace(W R H Rᵀ Wᵀ)`.
pub fn separation_objective(w: &Matrix, r: &Matrix, h: &Matrix) -> Result<f64> {
    let wr = w.matmul(r)?;
    Ok(wr.matmul(h)?.matmul(&wr.transpose())?.trace())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationProblem {
    /// `R`: `K × C`, column `c` is the encoding of category `c`.
    pub encodings: Matrix,
    pub laplacian: Matrix,
    pub beta: f64,
    /// Rows `K̃` of the transform to learn.
    pub target_rows: usize,
}

impl SeparationProblem {
    pub const DEFAULT_BETA: f64 = 100.0;

    /// Builds `H` for the column count of `encodings`; `K̃` defaults to `K / 2`.
    pub fn new(encodings: Matrix, beta: f64, target_rows: Option<usize>) -> Result<Self> {
        let laplacian = build_laplacian(encodings.cols())?;
        let target_rows = target_rows.unwrap_or(encodings.rows() / 2);
        let problem = SeparationProblem {
            encodings,
            laplacian,
            beta,
            target_rows,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, c) = (self.encodings.rows(), self.encodings.cols());
        if c < 2 {
            return Err(Error::Domain("category separation needs at least 2 categories".into()));
        }
        check_len("laplacian", c, self.laplacian.rows())?;
        if self.target_rows == 0 || self.target_rows > k {
            return Err(Error::config(
                "target_rows",
                format!("need 1 <= K̃ <= K = {k}, got {}", self.target_rows),
            ));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::config("beta", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// `R H Rᵀ`.
    pub fn scatter(&self) -> Result<Matrix> {
        self.encodings
            .matmul(&self.laplacian)?
            .matmul(&self.encodings.transpose())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions {
    /// Required `‖M w − λ w‖`.
    pub tol: f64,
    pub max_iters: usize,
    /// Each iteration applies `(M + sI)^(2^squarings)` instead of `M + sI`.
    pub squarings: u32,
    /// Extra iterations after reaching `tol`, stopped once the residual
    /// no longer decreases.
    pub polish_iters: usize,
    pub seed: u64,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions {
            tol: 1e-8,
            max_iters: 10_000,
            squarings: 20,
            polish_iters: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit norm; sign fixed so the largest-magnitude entry is positive.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Eigenvector of the algebraically largest eigenvalue of symmetric `m`.
///
/// The matrix is shifted by its Gershgorin radius so every eigenvalue of
/// `m + sI` is non-negative and the wanted one dominates. Power iteration then
/// runs on `(m + sI)^(2^q)`, formed by repeated squaring with rescaling.
pub fn leading_eigenpair(m: &Matrix, start: &[f64], options: &PowerIterationOptions) -> Result<EigenPair> {
    let n = m.rows();
    check_len("leading_eigenpair square", n, m.cols())?;
    check_len("leading_eigenpair start", n, start.len())?;
    let shift = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if !(shift > f64::MIN_POSITIVE) || !shift.is_finite() {
        return Err(Error::Numerical(format!("degenerate matrix (Gershgorin radius {shift})")));
    }

    let mut power = m.add(&Matrix::identity(n).scale(shift))?;
    for _ in 0..options.squarings {
        let scale = power.max_abs();
        power = power.scale(1.0 / scale);
        power = power.matmul(&power)?;
    }
    let scale = power.max_abs();
    let power = power.scale(1.0 / scale);

    let mut v = normalized(start.to_vec())?;
    let mut residual = f64::INFINITY;
    for iter in 1..=options.max_iters {
        v = normalized(power.matvec(&v)?)?;
        let (value, r) = rayleigh(m, &v)?;
        residual = r;
        if residual <= options.tol {
            // Later rows see earlier ones through `WᵀW`, so a row that is only
            // just within tolerance splits degenerate eigenvalues of the next
            // step matrix. Keep iterating while the residual still improves.
            let mut best = (value, residual, v.clone());
            for _ in 0..options.polish_iters {
                v = normalized(power.matvec(&v)?)?;
                let (value, r) = rayleigh(m, &v)?;
                if r >= best.1 {
                    break;
                }
                best = (value, r, v.clone());
            }
            let (value, residual, mut vector) = best;
            orient(&mut vector);
            return Ok(EigenPair {
                value,
                vector,
                residual,
                iterations: iter,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: options.max_iters,
        residual,
    })
}

/// Rayleigh quotient of unit `v` and the residual `‖M v − λ v‖`.
fn rayleigh(m: &Matrix, v: &[f64]) -> Result<(f64, f64)> {
    let mv = m.matvec(v)?;
    let value = math::dot(v, &mv);
    let residual = math::norm(&mv.iter().zip(v).map(|(a, b)| a - value * b).collect::<Vec<_>>());
    Ok((value, residual))
}

fn normalized(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = math::norm(&v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Numerical("power iteration collapsed to a zero vector".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

fn orient(v: &mut [f64]) {
    let lead = v
        .iter()
        .copied()
        .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Diagnostics for one appended row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStep {
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix {
    /// `K̃ × K`, unit-norm rows.
    pub weights: Matrix,
    pub steps: Vec<RowStep>,
}

impl TransformMatrix {
    /// `W R`: transformed encodings, one column per category.
    pub fn apply(&self, encodings: &Matrix) -> Result<Matrix> {
        self.weights.matmul(encodings)
    }

    /// `‖W Wᵀ − I‖_F`.
    pub fn orthonormality_error(&self) -> Result<f64> {
        let gram = self.weights.matmul(&self.weights.transpose())?;
        Ok(gram.sub(&Matrix::identity(gram.rows()))?.frobenius_norm())
    }
}

/// The step matrix `R H Rᵀ − 2β WᵀW` for the rows learned so far.
pub fn step_matrix(scatter: &Matrix, rows: &Matrix, beta: f64) -> Result<Matrix> {
    if rows.rows() == 0 {
        return Ok(scatter.clone());
    }
    scatter.sub(&rows.transpose().matmul(rows)?.scale(2.0 * beta))
}

/// Learns `K̃` rows one at a time; row `k + 1` is the leading eigenvector of
/// `R H Rᵀ − 2β WₖᵀWₖ`.
pub fn learn_transform(problem: &SeparationProblem, options: &PowerIterationOptions) -> Result<TransformMatrix> {
    problem.validate()?;
    let k = problem.encodings.rows();
    let scatter = problem.scatter()?;
    let mut rows = Matrix::zeros(0, k);
    let mut steps = Vec::with_capacity(problem.target_rows);
    for step in 0..problem.target_rows {
        let m = step_matrix(&scatter, &rows, problem.beta)?;
        let mut rng = rng::seeded(options.seed, stream::TRANSFORM + ((step as u64) << 8));
        let start = rng::normal_vec(&mut rng, k);
        let pair = leading_eigenpair(&m, &start, options)?;
        rows.push_row(&pair.vector)?;
        steps.push(RowStep {
            eigenvalue: pair.value,
            residual: pair.residual,
            iterations: pair.iterations,
        });
    }
    Ok(TransformMatrix {
        weights: rows,
        steps,
    })
}
