//! Dense complex Hermitian kernels: square roots, log-determinants and
//! contraction tests for the small `p x p` blocks used everywhere else.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense square complex matrix. Dimension is a runtime quantity `p`.
pub type CMatrix = DMatrix<Complex64>;

/// Asymmetry (relative to `max(1, max |a_ij|)`) tolerated before a matrix
/// is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Eigenvalues in `[-PSD_TOL, 0)` are treated as zero.
pub const PSD_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(p: usize) -> CMatrix {
    CMatrix::identity(p, p)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

/// Inverse through LU, rejecting matrices whose 1-norm condition number
/// exceeds `1e13`.
pub fn checked_inverse(m: &CMatrix) -> Option<CMatrix> {
    let inv = m.clone().lu().try_inverse()?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    let cond = norm_one(m) * norm_one(&inv);
    if !(cond < 1e13) {
        return None;
    }
    Some(inv)
}

fn norm_one(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Complex Hermitian matrix. Symmetrized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::MatrixJson", into = "crate::io::MatrixJson")]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asymmetry = max_abs_diff(&m, &m.adjoint());
        if asymmetry > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self(hermitian_part(&m)))
    }

    pub fn identity(p: usize) -> Self {
        Self(identity(p))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = c(x, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }
}

impl AsRef<CMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Maps the eigenvalues of `a` through `f`, keeping the eigenvectors.
fn spectral_map(a: &HermitianMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let eig = a.0.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c(f(x), 0.0)));
    u * d * u.adjoint()
}

/// Unique PSD square root. Eigenvalues in `[-1e-12, 0)` are clamped to zero.
pub fn hermitian_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let min = a.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(HermitianMatrix(hermitian_part(&spectral_map(a, |x| x.max(0.0).sqrt()))))
}

/// Inverse square root of a positive definite matrix.
pub fn hermitian_inv_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let min = a.min_eigenvalue();
    if min <= 0.0 {
        return Err(Error::NotPd { min_eigenvalue: min });
    }
    Ok(HermitianMatrix(hermitian_part(&spectral_map(a, |x| 1.0 / x.sqrt()))))
}

/// `log det a` through the Cholesky factor.
pub fn logdet_pd(a: &HermitianMatrix) -> Result<f64> {
    match Cholesky::new(a.0.clone()) {
        Some(ch) => {
            let l = ch.l_dirty();
            let mut s = 0.0;
            for i in 0..a.dim() {
                let d = l[(i, i)].re;
                if !(d > 0.0) {
                    return Err(Error::NotPd { min_eigenvalue: a.min_eigenvalue() });
                }
                s += d.ln();
            }
            Ok(2.0 * s)
        }
        None => Err(Error::NotPd { min_eigenvalue: a.min_eigenvalue() }),
    }
}

/// `1 - ||m||_2`. Positive iff `m` lies in the open unit ball.
pub fn contraction_margin(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    1.0 - sv.iter().copied().fold(0.0, f64::max)
}

fn require_contraction(alpha: &CMatrix) -> Result<()> {
    let margin = contraction_margin(alpha);
    if !(margin > 0.0) {
        return Err(Error::NotContraction { margin });
    }
    Ok(())
}

/// `alpha alpha†` as a Hermitian matrix.
pub fn gram_right(alpha: &CMatrix) -> HermitianMatrix {
    HermitianMatrix(hermitian_part(&(alpha * alpha.adjoint())))
}

/// `alpha† alpha` as a Hermitian matrix.
pub fn gram_left(alpha: &CMatrix) -> HermitianMatrix {
    HermitianMatrix(hermitian_part(&(alpha.adjoint() * alpha)))
}

/// Defect pair `(rho_R, rho_L) = ((1 - a a†)^{1/2}, (1 - a† a)^{1/2})`.
pub fn defect_matrices(alpha: &CMatrix) -> Result<(HermitianMatrix, HermitianMatrix)> {
    require_contraction(alpha)?;
    let p = alpha.nrows();
    let right = HermitianMatrix(identity(p) - gram_right(alpha).0);
    let left = HermitianMatrix(identity(p) - gram_left(alpha).0);
    Ok((hermitian_sqrt(&right)?, hermitian_sqrt(&left)?))
}

/// `log det(1 - a a†)` for a strict contraction, computed from the singular
/// values so it stays accurate for tiny `a`.
pub fn logdet_defect(alpha: &CMatrix) -> Result<f64> {
    require_contraction(alpha)?;
    Ok(gram_right(alpha)
        .eigenvalues()
        .into_iter()
        .map(|x| (-x.clamp(0.0, 1.0)).ln_1p())
        .sum())
}

/// `-log(1 - x) - x - x^2/2`, nonnegative on `[0, 1)`.
fn remainder_scalar(x: f64) -> f64 {
    if x < 1e-2 {
        let mut term = x * x * x;
        let mut s = 0.0;
        let mut n = 3.0;
        while term > 1e-300 && n < 200.0 {
            s += term / n;
            term *= x;
            n += 1.0;
        }
        s
    } else {
        -(-x).ln_1p() - x - 0.5 * x * x
    }
}

/// `R(a) = -log det(1 - a a†) - tr(a a†) - tr((a a†)^2)/2`.
pub fn logdet_remainder(alpha: &CMatrix) -> Result<f64> {
    require_contraction(alpha)?;
    Ok(gram_right(alpha)
        .eigenvalues()
        .into_iter()
        .map(|x| remainder_scalar(x.clamp(0.0, 1.0)))
        .sum())
}
