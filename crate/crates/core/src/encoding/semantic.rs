use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::math;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SemanticBlock {
    pub name: String,
    pub offset: usize,
    pub width: usize,
}

/// The `m × C` category-level matrix `A`; column `c` describes category `c`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SemanticMatrix {
    matrix: Matrix,
    blocks: Vec<SemanticBlock>,
}

impl SemanticMatrix {
    pub fn new(matrix: Matrix, blocks: Vec<SemanticBlock>) -> Result<Self> {
        let mut offset = 0;
        for b in &blocks {
            if b.offset != offset {
                return Err(Error::shape("semantic block offset", offset, b.offset));
            }
            offset += b.width;
        }
        check_len("semantic block widths", matrix.rows(), offset)?;
        if matrix.cols() == 0 || matrix.rows() == 0 {
            return Err(Error::Domain("semantic matrix must be non-empty".into()));
        }
        if let Some(c) = (0..matrix.cols()).find(|&c| (0..matrix.rows()).all(|r| matrix[(r, c)] == 0.0)) {
            return Err(Error::Domain(format!("semantic matrix column {c} is all zero")));
        }
        if matrix.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("semantic matrix has non-finite entries".into()));
        }
        Ok(SemanticMatrix { matrix, blocks })
    }

    pub fn single_block(name: &str, matrix: Matrix) -> Result<Self> {
        let blocks = alloc::vec![SemanticBlock {
            name: name.to_string(),
            offset: 0,
            width: matrix.rows(),
        }];
        Self::new(matrix, blocks)
    }

    /// Rows of block `index` as a `width × C` matrix.
    pub fn block_matrix(&self, index: usize) -> Matrix {
        let b = &self.blocks[index];
        let mut data = Vec::with_capacity(b.width * self.matrix.cols());
        for r in b.offset..b.offset + b.width {
            data.extend_from_slice(self.matrix.row(r));
        }
        Matrix::from_row_major(b.width, self.matrix.cols(), data).expect("block lies inside the matrix")
    }

    /// Semantic dimension `m`.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn classes(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn blocks(&self) -> &[SemanticBlock] {
        &self.blocks
    }

    pub fn column(&self, class: usize) -> Vec<f64> {
        self.matrix.column(class)
    }

    /// `zᵀA`.
    pub fn logits(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.matrix.tr_matvec(z)
    }

    /// `A·g`: maps a gradient over logits back to the latent space.
    pub fn pull_back(&self, grad_logits: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(grad_logits)
    }
}

/// L2-normalizes every column of every block, then stacks the blocks
/// vertically, recording their offsets.
pub fn hybrid_concat(blocks: &[(&str, Matrix)]) -> Result<SemanticMatrix> {
    let classes = blocks
        .first()
        .map(|(_, m)| m.cols())
        .ok_or_else(|| Error::Domain("need at least one semantic block".into()))?;
    let mut stacked = Matrix::zeros(0, 0);
    let mut descriptors = Vec::with_capacity(blocks.len());
    for (name, block) in blocks {
        check_len("semantic block columns", classes, block.cols())?;
        let norms: Vec<f64> = (0..classes).map(|c| math::norm(&block.column(c))).collect();
        for r in 0..block.rows() {
            let row: Vec<f64> = (0..classes)
                .map(|c| if norms[c] > 0.0 { block[(r, c)] / norms[c] } else { 0.0 })
                .collect();
            stacked.push_row(&row)?;
        }
        descriptors.push(SemanticBlock {
            name: name.to_string(),
            offset: stacked.rows() - block.rows(),
            width: block.rows(),
        });
    }
    SemanticMatrix::new(stacked, descriptors)
}
