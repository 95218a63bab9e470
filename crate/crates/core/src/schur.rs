//! Matrix Schur functions and the Schur algorithm.
//!
//! `f(z) = z^{-1} (F(z) - 1)(F(z) + 1)^{-1}` for the Caratheodory function
//! `F` of a measure. Stripping one coefficient,
//! `f_1 = z^{-1} (rho^R)^{-1} (f - alpha)(1 - alpha† f)^{-1} rho^L`, has a
//! removable singularity at the origin; its value there is recovered by a
//! Cauchy mean on a small circle.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{c, checked_inverse, contraction_margin, defect_matrices, identity, max_abs_diff, CMatrix};
use crate::measure::{MatrixMeasure, R_MAX};
use crate::opuc::{VerblunskySequence, STRICTNESS_TOL};

/// Radius of the circle used for values at the origin.
pub const CAUCHY_RADIUS: f64 = 0.5;
/// Number of nodes on that circle.
pub const CAUCHY_NODES: usize = 64;

fn cauchy_nodes() -> &'static [Complex64] {
    static NODES: OnceLock<Vec<Complex64>> = OnceLock::new();
    NODES.get_or_init(|| {
        (0..CAUCHY_NODES)
            .map(|k| Complex64::from_polar(CAUCHY_RADIUS, 2.0 * std::f64::consts::PI * k as f64 / CAUCHY_NODES as f64))
            .collect()
    })
}

#[derive(Debug)]
enum Source {
    Measure { mu: Arc<MatrixMeasure>, cache: OnceLock<Option<Vec<CMatrix>>> },
    Constant(CMatrix),
    Stripped { parent: SchurFunction, alpha: CMatrix, rho_r_inv: CMatrix, rho_l: CMatrix },
    Unstripped { child: SchurFunction, alpha: CMatrix, rho_r_inv: CMatrix, rho_l: CMatrix },
}

/// Immutable handle to a matrix Schur function. Cloning is cheap and
/// evaluation is safe to share across threads.
#[derive(Debug, Clone)]
pub struct SchurFunction {
    dim: usize,
    level: usize,
    source: Arc<Source>,
}

fn measure_schur(mu: &MatrixMeasure, z: Complex64) -> Result<CMatrix> {
    if z == c(0.0, 0.0) {
        return mu.moment(1);
    }
    let f = mu.caratheodory(z)?;
    let one = identity(mu.dim());
    let inv = checked_inverse(&(&f + &one)).ok_or(Error::SingularPencil { context: "F + 1" })?;
    Ok((f - one) * inv / z)
}

impl SchurFunction {
    /// Schur function of a measure (level 0).
    pub fn from_measure(mu: Arc<MatrixMeasure>) -> Self {
        Self {
            dim: mu.dim(),
            level: 0,
            source: Arc::new(Source::Measure { mu, cache: OnceLock::new() }),
        }
    }

    /// The constant Schur function `f = a`.
    pub fn constant(a: CMatrix) -> Result<Self> {
        let margin = contraction_margin(&a);
        if !(margin >= 0.0) {
            return Err(Error::NotContraction { margin });
        }
        Ok(Self { dim: a.nrows(), level: 0, source: Arc::new(Source::Constant(a)) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coefficients stripped relative to the starting function.
    pub fn level(&self) -> usize {
        self.level
    }

    /// Value at `z`, `|z| <= 0.99`.
    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        if z.norm() > R_MAX {
            return Err(Error::RadiusTooLarge { radius: z.norm() });
        }
        match &*self.source {
            Source::Measure { mu, cache } => {
                let nodes = cauchy_nodes();
                if let Some(k) = nodes.iter().position(|&w| w == z) {
                    let table = cache.get_or_init(|| nodes.iter().map(|&w| measure_schur(mu, w).ok()).collect());
                    if let Some(table) = table {
                        return Ok(table[k].clone());
                    }
                }
                measure_schur(mu, z)
            }
            Source::Constant(a) => Ok(a.clone()),
            Source::Stripped { parent, alpha, rho_r_inv, rho_l } => {
                if z == c(0.0, 0.0) {
                    return self.cauchy_mean();
                }
                let f = parent.eval(z)?;
                let one = identity(self.dim);
                let pencil = &one - alpha.adjoint() * &f;
                let inv = checked_inverse(&pencil).ok_or(Error::SingularPencil { context: "1 - alpha† f" })?;
                Ok(rho_r_inv * (f - alpha) * inv * rho_l / z)
            }
            Source::Unstripped { child, alpha, rho_r_inv, rho_l } => {
                let f1 = child.eval(z)?;
                let one = identity(self.dim);
                let pencil = &one + alpha.adjoint() * &f1 * z;
                let inv = checked_inverse(&pencil).ok_or(Error::SingularPencil { context: "1 + z alpha† f_1" })?;
                Ok(rho_r_inv * (alpha + f1 * z) * inv * rho_l)
            }
        }
    }

    /// `(1/K) sum_k f(r w^k)`, equal to `f(0)` up to `O(r^K)` aliasing.
    pub fn cauchy_mean(&self) -> Result<CMatrix> {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for &w in cauchy_nodes() {
            acc += self.eval(w)?;
        }
        Ok(acc / c(CAUCHY_NODES as f64, 0.0))
    }

    /// Strips `alpha = f(0)`.
    pub fn strip(&self, alpha: &CMatrix) -> Result<Self> {
        let (rho_r, rho_l) = defects(alpha)?;
        let rho_r_inv = inverse_defect(&rho_r, alpha)?;
        Ok(Self {
            dim: self.dim,
            level: self.level + 1,
            source: Arc::new(Source::Stripped { parent: self.clone(), alpha: alpha.clone(), rho_r_inv, rho_l }),
        })
    }

    /// Inverse of [`strip`](Self::strip):
    /// `f = (rho^R)^{-1} (alpha + z f_1)(1 + z alpha† f_1)^{-1} rho^L`.
    pub fn unstrip(&self, alpha: &CMatrix) -> Result<Self> {
        let (rho_r, rho_l) = defects(alpha)?;
        let rho_r_inv = inverse_defect(&rho_r, alpha)?;
        Ok(Self {
            dim: self.dim,
            level: self.level.saturating_sub(1),
            source: Arc::new(Source::Unstripped { child: self.clone(), alpha: alpha.clone(), rho_r_inv, rho_l }),
        })
    }
}

fn defects(alpha: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let margin = contraction_margin(alpha);
    if !(margin > 0.0) {
        return Err(Error::NotContraction { margin });
    }
    let (r, l) = defect_matrices(alpha)?;
    Ok((r.into_inner(), l.into_inner()))
}

fn inverse_defect(rho: &CMatrix, alpha: &CMatrix) -> Result<CMatrix> {
    checked_inverse(rho).ok_or(Error::NotContraction { margin: contraction_margin(alpha) })
}

/// `alpha_0, ..., alpha_{n-1}` by repeated stripping of the Schur function.
pub fn verblunsky_via_schur(mu: &MatrixMeasure, n: usize) -> Result<VerblunskySequence> {
    let mut f = SchurFunction::from_measure(Arc::new(mu.clone()));
    let mut alphas = Vec::with_capacity(n);
    for level in 0..n {
        let alpha = f.eval(c(0.0, 0.0))?;
        let margin = contraction_margin(&alpha);
        if !(margin >= STRICTNESS_TOL) {
            return Err(Error::DepthExceeded { level, margin });
        }
        if level + 1 < n {
            f = f.strip(&alpha)?;
        }
        alphas.push(alpha);
    }
    VerblunskySequence::new(mu.dim(), alphas)
}

/// `Re F(z) = (1 - conj z f†)^{-1} (1 - |z|^2 f† f)(1 - z f)^{-1}` from the
/// Schur function alone.
pub fn real_part_f(f: &SchurFunction, z: Complex64) -> Result<CMatrix> {
    let fz = f.eval(z)?;
    let one = identity(f.dim());
    let left = checked_inverse(&(&one - fz.adjoint() * z.conj()))
        .ok_or(Error::SingularPencil { context: "1 - conj z f†" })?;
    let right = checked_inverse(&(&one - &fz * z)).ok_or(Error::SingularPencil { context: "1 - z f" })?;
    Ok(left * (&one - fz.adjoint() * &fz * c(z.norm_sqr(), 0.0)) * right)
}

/// `D_0(z) = (1 - z f)^{-1} (1 - z f_1) (rho^L_0)^{-1} (1 - f alpha_0†)`.
pub fn d0_eval(f: &SchurFunction, f1: &SchurFunction, alpha0: &CMatrix, z: Complex64) -> Result<CMatrix> {
    let fz = f.eval(z)?;
    let f1z = f1.eval(z)?;
    let one = identity(f.dim());
    let (_, rho_l) = defects(alpha0)?;
    let rho_l_inv = inverse_defect(&rho_l, alpha0)?;
    let left = checked_inverse(&(&one - &fz * z)).ok_or(Error::SingularPencil { context: "1 - z f" })?;
    Ok(left * (&one - f1z * z) * rho_l_inv * (&one - fz * alpha0.adjoint()))
}

/// Residuals of the one-step factorization identities at a point `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResidual {
    /// `|det(Re F (Re F_1)^{-1}) - det(D_0 D_0†) det(1 - |z|^2 f†f) / det(1 - f†f)|`.
    pub determinant: f64,
    /// Max-entry residual of
    /// `1 - |z|^2 f_1†f_1 = rho^L (1 - f†alpha_0)^{-1} (1 - f†f) (1 - alpha_0†f)^{-1} rho^L`.
    pub defect: f64,
    /// Same, with the right factor written `(1 - f alpha_0†)^{-1}`. The two
    /// agree for scalars only.
    pub defect_transposed: f64,
}

impl FactorizationResidual {
    pub fn max(&self) -> f64 {
        self.determinant.max(self.defect)
    }
}

/// Evaluates the one-step identities linking the Schur function `f` of `mu`
/// and its first strip `f_1` at `z`. `Re F_1` is built from `f_1`, not from
/// the stripped measure.
pub fn ff1_residual(mu: &MatrixMeasure, z: Complex64) -> Result<FactorizationResidual> {
    let f = SchurFunction::from_measure(Arc::new(mu.clone()));
    let alpha0 = f.eval(c(0.0, 0.0))?;
    let f1 = f.strip(&alpha0)?;
    ff1_residual_with(&f, &f1, &alpha0, z)
}

pub fn ff1_residual_with(
    f: &SchurFunction,
    f1: &SchurFunction,
    alpha0: &CMatrix,
    z: Complex64,
) -> Result<FactorizationResidual> {
    let fz = f.eval(z)?;
    let f1z = f1.eval(z)?;
    let one = identity(f.dim());
    let (_, rho_l) = defects(alpha0)?;
    let sing = |context| Error::SingularPencil { context };

    let re_f = real_part_f(f, z)?;
    let re_f1 = real_part_f(f1, z)?;
    let ratio = re_f * checked_inverse(&re_f1).ok_or(sing("Re F_1"))?;
    let d0 = d0_eval(f, f1, alpha0, z)?;
    let gap = &one - fz.adjoint() * &fz;
    let rhs = (&d0 * d0.adjoint()).determinant() * (&one - fz.adjoint() * &fz * c(z.norm_sqr(), 0.0)).determinant()
        / gap.determinant();
    let determinant = (ratio.determinant() - rhs).norm();

    let lhs = &one - f1z.adjoint() * &f1z * c(z.norm_sqr(), 0.0);
    let left = &rho_l * checked_inverse(&(&one - fz.adjoint() * alpha0)).ok_or(sing("1 - f† alpha"))?;
    let right = checked_inverse(&(&one - alpha0.adjoint() * &fz)).ok_or(sing("1 - alpha† f"))? * &rho_l;
    let right_t = checked_inverse(&(&one - &fz * alpha0.adjoint())).ok_or(sing("1 - f alpha†"))? * &rho_l;
    let defect = max_abs_diff(&lhs, &(&left * &gap * right));
    let defect_transposed = max_abs_diff(&lhs, &(left * gap * right_t));
    Ok(FactorizationResidual { determinant, defect, defect_transposed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opuc::{bernstein_szego_measure, opuc_basis};

    fn s(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c(x, 0.0))
    }

    fn sample_alpha() -> VerblunskySequence {
        let a0 = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.1), c(-0.2, 0.0), c(0.1, 0.25), c(0.05, -0.3)]);
        let a1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.2), c(0.15, 0.1), c(-0.3, 0.0), c(0.2, 0.1)]);
        let a2 = CMatrix::from_row_slice(2, 2, &[c(-0.25, 0.0), c(0.0, 0.0), c(0.1, -0.1), c(0.35, 0.2)]);
        VerblunskySequence::new(2, vec![a0, a1, a2]).unwrap()
    }

    #[test]
    fn lambda0_schur_function_vanishes() {
        let l0 = Arc::new(MatrixMeasure::lambda0(2, 1024).unwrap());
        let f = SchurFunction::from_measure(l0);
        for z in [c(0.0, 0.0), c(0.3, 0.4), c(-0.9, 0.0)] {
            assert!(f.eval(z).unwrap().iter().all(|x| x.norm() < 1e-14));
        }
        assert!(matches!(f.eval(c(0.995, 0.0)), Err(Error::RadiusTooLarge { .. })));
    }

    #[test]
    fn single_coefficient_schur_function() {
        let mu = bernstein_szego_measure(&VerblunskySequence::new(1, vec![s(0.5)]).unwrap(), 4096).unwrap();
        let f = SchurFunction::from_measure(Arc::new(mu));
        for z in [c(0.0, 0.0), c(0.5, 0.0), c(0.1, -0.7)] {
            assert!((f.eval(z).unwrap()[(0, 0)] - c(0.5, 0.0)).norm() < 1e-12);
        }
        let a = f.eval(c(0.0, 0.0)).unwrap();
        let f1 = f.strip(&a).unwrap();
        assert_eq!(f1.level(), 1);
        assert!(f1.eval(c(0.0, 0.0)).unwrap()[(0, 0)].norm() < 1e-12);
        assert!(f1.eval(c(0.2, 0.3)).unwrap()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn d0_at_origin_and_first_order() {
        let scalar = bernstein_szego_measure(&VerblunskySequence::new(1, vec![s(0.5)]).unwrap(), 1024).unwrap();
        let f = SchurFunction::from_measure(Arc::new(scalar));
        let a0 = f.eval(c(0.0, 0.0)).unwrap();
        let d = d0_eval(&f, &f.strip(&a0).unwrap(), &a0, c(0.0, 0.0)).unwrap();
        assert!((d[(0, 0)] - c(0.75f64.sqrt(), 0.0)).norm() < 1e-12);

        // det D_0(z) = det rho (1 + z tr(a0 - a1 - a1 a0†)) + O(z^2)
        let alpha = sample_alpha();
        let mu = bernstein_szego_measure(&alpha, 2048).unwrap();
        let f = SchurFunction::from_measure(Arc::new(mu));
        let a0 = f.eval(c(0.0, 0.0)).unwrap();
        let f1 = f.strip(&a0).unwrap();
        let det = |z| d0_eval(&f, &f1, &a0, z).unwrap().determinant();
        let h = 1e-4;
        let slope = (det(c(h, 0.0)) - det(c(0.0, 0.0))) / h;
        let (a0, a1) = (alpha.get(0), alpha.get(1));
        let rho_det = defect_matrices(&a0).unwrap().0.as_matrix().determinant();
        let expected = rho_det * crate::hermitian::trace(&(&a0 - &a1 - &a1 * a0.adjoint()));
        assert!((slope - expected).norm() < 1e-3 * expected.norm(), "{slope} vs {expected}");
    }

    #[test]
    fn schur_values_are_contractions() {
        let mu = bernstein_szego_measure(&sample_alpha(), 1024).unwrap();
        let f = SchurFunction::from_measure(Arc::new(mu));
        for k in 0..20 {
            let z = Complex64::from_polar(0.95 * (k as f64 / 20.0), 0.7 * k as f64);
            assert!(contraction_margin(&f.eval(z).unwrap()) > 0.0);
        }
    }

    #[test]
    fn real_part_matches_caratheodory() {
        let mu = bernstein_szego_measure(&sample_alpha(), 1024).unwrap();
        let f = SchurFunction::from_measure(Arc::new(mu.clone()));
        for z in [c(0.2, 0.1), c(-0.5, 0.6), c(0.0, -0.8)] {
            let fz = mu.caratheodory(z).unwrap();
            let re = (&fz + fz.adjoint()) * c(0.5, 0.0);
            assert!(max_abs_diff(&real_part_f(&f, z).unwrap(), &re) < 1e-10);
        }
    }

    #[test]
    fn schur_path_matches_gram_schmidt() {
        let alpha = sample_alpha();
        let mu = bernstein_szego_measure(&alpha, 4096).unwrap();
        let via_schur = verblunsky_via_schur(&mu, 5).unwrap();
        let gs = opuc_basis(&mu, 5).unwrap().alphas;
        assert!(via_schur.max_abs_diff(&alpha) < 1e-10, "{}", via_schur.max_abs_diff(&alpha));
        assert!(gs.max_abs_diff(&alpha) < 1e-10, "{}", gs.max_abs_diff(&alpha));
    }

    #[test]
    fn unstrip_inverts_strip() {
        let mu = bernstein_szego_measure(&sample_alpha(), 1024).unwrap();
        let f = SchurFunction::from_measure(Arc::new(mu));
        let a = f.eval(c(0.0, 0.0)).unwrap();
        let back = f.strip(&a).unwrap().unstrip(&a).unwrap();
        assert_eq!(back.level(), 0);
        for z in [c(0.3, 0.0), c(-0.2, 0.6), c(0.0, -0.9)] {
            assert!(max_abs_diff(&back.eval(z).unwrap(), &f.eval(z).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn unstrip_of_constant() {
        let zero = SchurFunction::constant(CMatrix::zeros(2, 2)).unwrap();
        let a = sample_alpha().get(1);
        let f = zero.unstrip(&a).unwrap();
        let (rho_r, rho_l) = defects(&a).unwrap();
        let expected = checked_inverse(&rho_r).unwrap() * &a * rho_l;
        // rho^R alpha = alpha rho^L, so this is just alpha
        assert!(max_abs_diff(&expected, &a) < 1e-14);
        assert!(max_abs_diff(&f.eval(c(0.4, 0.4)).unwrap(), &a) < 1e-14);
    }

    #[test]
    fn depth_exceeded_near_boundary() {
        let f = SchurFunction::constant(identity(1)).unwrap();
        assert!(f.strip(&identity(1)).is_err());
    }

    #[test]
    fn factorization_identities() {
        let mu = bernstein_szego_measure(&sample_alpha(), 2048).unwrap();
        for z in [c(0.3, 0.2), c(-0.6, 0.1), c(0.0, 0.7)] {
            let r = ff1_residual(&mu, z).unwrap();
            assert!(r.determinant < 1e-10, "{r:?}");
            assert!(r.defect < 1e-10, "{r:?}");
            // the transposed right factor is not an identity for p >= 2
            assert!(r.defect_transposed > 1e-3, "{r:?}");
        }
    }
}
