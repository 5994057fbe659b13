//! Small dense helpers shared by the combiners and the ZF post-equalizer.

use nalgebra::DMatrix;

use crate::dsp::C64;
use crate::error::{Error, Result};

/// Matrices whose 1-norm condition number exceeds this are refused.
pub const COND_LIMIT: f64 = 1e12;

/// Induced 1-norm (largest absolute column sum).
pub fn norm1(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts a square matrix through LU and reports `||A||_1 ||A^-1||_1`.
/// `subcarrier` only labels the error.
pub fn checked_inverse(a: &DMatrix<C64>, subcarrier: usize) -> Result<(DMatrix<C64>, f64)> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned {
            subcarrier,
            cond: f64::INFINITY,
        })?;
    let cond = norm1(a) * norm1(&inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(Error::IllConditioned { subcarrier, cond });
    }
    Ok((inv, cond))
}
