//! Symmetric 2x2 matrices and inverse-Wishart sampling via the Bartlett
//! decomposition of the Wishart of the inverted scale.

use super::gamma::sample_chi_square;
use crate::rng::RngStream;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatError {
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
}

/// Symmetric 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn scaled_identity(c: f64) -> Self {
        Self::new(c, 0.0, c)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn is_spd(&self) -> bool {
        self.a11 > 0.0 && self.det() > 0.0
    }

    pub fn inverse(&self) -> Result<SymMat2, MatError> {
        let d = self.det();
        if !self.is_spd() {
            return Err(MatError::NotSpd);
        }
        Ok(SymMat2::new(self.a22 / d, -self.a12 / d, self.a11 / d))
    }

    /// Lower Cholesky factor `L` with `L L' = self`, returned as
    /// `(l11, l21, l22)`.
    pub fn cholesky(&self) -> Result<(f64, f64, f64), MatError> {
        if !self.is_spd() {
            return Err(MatError::NotSpd);
        }
        let l11 = self.a11.sqrt();
        let l21 = self.a12 / l11;
        let l22 = (self.a22 - l21 * l21).sqrt();
        if !l22.is_finite() || l22 <= 0.0 {
            return Err(MatError::NotSpd);
        }
        Ok((l11, l21, l22))
    }

    /// Correlation implied by the off-diagonal.
    pub fn correlation(&self) -> f64 {
        self.a12 / (self.a11 * self.a22).sqrt()
    }
}

/// Draw from the 2x2 inverse-Wishart distribution IW(df, scale) with
/// density proportional to |X|^-(df+3)/2 exp(-tr(scale X^-1)/2).
///
/// `X ~ IW(df, S)` iff `X^-1 ~ Wishart(df, S^-1)`; the Wishart draw uses
/// the Bartlett decomposition, which is exact for non-integer df > 1.
pub fn sample_inverse_wishart_2(
    df: f64,
    scale: SymMat2,
    rng: &mut RngStream,
) -> Result<SymMat2, MatError> {
    assert!(df > 1.0, "df must exceed p - 1 = 1");
    let v = scale.inverse()?;
    let (l11, l21, l22) = v.cholesky()?;
    // Bartlett factor A: lower triangular
    let a11 = sample_chi_square(df, rng).sqrt();
    let a21 = rng.standard_normal();
    let a22 = sample_chi_square(df - 1.0, rng).sqrt();
    // T = L * A, W = T T'
    let t11 = l11 * a11;
    let t21 = l21 * a11 + l22 * a21;
    let t22 = l22 * a22;
    let w = SymMat2::new(t11 * t11, t11 * t21, t21 * t21 + t22 * t22);
    w.inverse()
}
