//! Block partition of augmented gramians and the Schur complement that
//! extracts the parameter block.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::pinv;

/// Default relative cut-off for the pseudo-inverse inside [`schur_complement`].
pub const DEFAULT_SCHUR_TOL: f64 = 1e-12;

/// Blocks of an `(n+P)×(n+P)` matrix `[W11 W12; W21 W22]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBlocks {
    pub w11: DMatrix<f64>,
    pub w12: DMatrix<f64>,
    pub w22: DMatrix<f64>,
}

impl AugmentedBlocks {
    pub fn new(w11: DMatrix<f64>, w12: DMatrix<f64>, w22: DMatrix<f64>) -> Result<Self> {
        let b = Self { w11, w12, w22 };
        b.check()?;
        Ok(b)
    }

    /// Splits a square matrix after its first `n` rows and columns.
    pub fn split(parent: &DMatrix<f64>, n: usize) -> Result<Self> {
        if !parent.is_square() || n > parent.nrows() {
            return Err(Error::InvalidBlocks(format!(
                "cannot split a {}x{} matrix at {n}",
                parent.nrows(),
                parent.ncols()
            )));
        }
        let p = parent.nrows() - n;
        Ok(Self {
            w11: parent.view((0, 0), (n, n)).into_owned(),
            w12: parent.view((0, n), (n, p)).into_owned(),
            w22: parent.view((n, n), (p, p)).into_owned(),
        })
    }

    fn check(&self) -> Result<()> {
        let n = self.w11.nrows();
        let p = self.w22.nrows();
        if !self.w11.is_square() || !self.w22.is_square() || self.w12.shape() != (n, p) {
            return Err(Error::InvalidBlocks(format!(
                "W11 {:?}, W12 {:?}, W22 {:?} are inconsistent",
                self.w11.shape(),
                self.w12.shape(),
                self.w22.shape()
            )));
        }
        Ok(())
    }
}

/// `W22 − W12ᵀ · pinv(W11, tol) · W12`.
pub fn schur_complement(blocks: &AugmentedBlocks, tol: f64) -> Result<DMatrix<f64>> {
    blocks.check()?;
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {tol}")));
    }
    let inv = pinv(&blocks.w11, tol);
    let mut s = &blocks.w22 - blocks.w12.transpose() * inv * &blocks.w12;
    // Symmetric blocks have a symmetric complement; remove the pinv roundoff.
    if blocks.w11 == blocks.w11.transpose() && blocks.w22 == blocks.w22.transpose() {
        s = (&s + s.transpose()) * 0.5;
    }
    Ok(s)
}
