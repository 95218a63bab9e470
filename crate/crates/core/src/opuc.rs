//! Matrix orthogonal polynomials on the unit circle.
//!
//! Monic polynomials come from block Toeplitz solves on the moments; the
//! Verblunsky coefficients are read off their constant terms after
//! normalization, and the Szego recursion runs the other way to rebuild
//! Bernstein-Szego measures from a coefficient list.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{
    checked_inverse, contraction_margin, defect_matrices, hermitian_part, identity, max_abs_diff,
    CMatrix, HermitianMatrix,
};
use crate::io::MatrixJson;
use crate::measure::{unchecked_measure, MatrixMeasure, UnitRoots};
use crate::schur;

/// Extracted coefficients closer than this to the unit sphere are rejected.
pub const STRICTNESS_TOL: f64 = 1e-8;
/// Minimum eigenvalue of the block Toeplitz matrix for a non-trivial measure.
pub const TOEPLITZ_TOL: f64 = 1e-10;
/// Allowed disagreement between Gram-Schmidt and Schur extraction.
pub const DUAL_PATH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    dim: usize,
    coeffs: Vec<CMatrix>,
}

impl MatrixPolynomial {
    /// Coefficient `j` multiplies `z^j`.
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let dim = coeffs.first().map(|m| m.nrows()).ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
        for m in &coeffs {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.nrows() });
            }
        }
        Ok(Self { dim, coeffs })
    }

    pub fn constant(m: CMatrix) -> Self {
        Self { dim: m.nrows(), coeffs: vec![m] }
    }

    pub fn one(p: usize) -> Self {
        Self::constant(identity(p))
    }

    /// `z^k 1`.
    pub fn monomial(p: usize, k: usize) -> Self {
        let mut coeffs = vec![CMatrix::zeros(p, p); k + 1];
        coeffs[k] = identity(p);
        Self { dim: p, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Formal degree, i.e. `len(coeffs) - 1`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> CMatrix {
        self.coeffs.get(j).cloned().unwrap_or_else(|| CMatrix::zeros(self.dim, self.dim))
    }

    pub fn leading(&self) -> &CMatrix {
        &self.coeffs[self.degree()]
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let mut acc = self.leading().clone();
        for m in self.coeffs.iter().rev().skip(1) {
            acc = acc * z + m;
        }
        acc
    }

    /// `z P(z)`.
    pub fn shift(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(CMatrix::zeros(self.dim, self.dim));
        coeffs.extend(self.coeffs.iter().cloned());
        Self { dim: self.dim, coeffs }
    }

    pub fn left_mul(&self, a: &CMatrix) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().map(|m| a * m).collect() }
    }

    pub fn right_mul(&self, a: &CMatrix) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().map(|m| m * a).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self { dim: self.dim, coeffs: (0..n).map(|j| self.coeff(j) - other.coeff(j)).collect() }
    }

    /// Reversed polynomial `P*(z) = z^k P(1/conj z)†` for declared degree `k`.
    pub fn reversed(&self, k: usize) -> Result<Self> {
        if self.coeffs.len() > k + 1 {
            return Err(Error::DegreeMismatch { len: self.coeffs.len(), degree: k });
        }
        Ok(Self { dim: self.dim, coeffs: (0..=k).map(|j| self.coeff(k - j).adjoint()).collect() })
    }

    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).map(|j| max_abs_diff(&self.coeff(j), &other.coeff(j))).fold(0.0, f64::max)
    }
}

/// Moments `c_0, ..., c_n` with `c_{-k} = c_k†`.
#[derive(Debug, Clone)]
pub struct Moments(Vec<CMatrix>);

impl Moments {
    pub fn new(nonnegative: Vec<CMatrix>) -> Self {
        Self(nonnegative)
    }

    pub fn from_measure(mu: &MatrixMeasure, n: usize) -> Result<Self> {
        Ok(Self(mu.moments(n)?))
    }

    pub fn max_order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn get(&self, n: i64) -> CMatrix {
        if n >= 0 {
            self.0[n as usize].clone()
        } else {
            self.0[(-n) as usize].adjoint()
        }
    }

    fn require(&self, needed: usize) -> Result<()> {
        if needed > self.max_order() {
            return Err(Error::InsufficientMoments { available: self.max_order(), needed });
        }
        Ok(())
    }
}

/// `<<f, g>>_R = sum_{j,m} f_j† c_{j-m} g_m`.
pub fn inner_r(f: &MatrixPolynomial, g: &MatrixPolynomial, moments: &Moments) -> Result<CMatrix> {
    moments.require(f.degree().max(g.degree()))?;
    let mut acc = CMatrix::zeros(f.dim, f.dim);
    for (j, fj) in f.coeffs.iter().enumerate() {
        for (m, gm) in g.coeffs.iter().enumerate() {
            acc += fj.adjoint() * moments.get(j as i64 - m as i64) * gm;
        }
    }
    Ok(acc)
}

/// `<<f, g>>_L = sum_{j,m} g_m c_{j-m} f_j†`.
pub fn inner_l(f: &MatrixPolynomial, g: &MatrixPolynomial, moments: &Moments) -> Result<CMatrix> {
    moments.require(f.degree().max(g.degree()))?;
    let mut acc = CMatrix::zeros(f.dim, f.dim);
    for (j, fj) in f.coeffs.iter().enumerate() {
        for (m, gm) in g.coeffs.iter().enumerate() {
            acc += gm * moments.get(j as i64 - m as i64) * fj.adjoint();
        }
    }
    Ok(acc)
}

/// Block matrix with block `(j, m) = block(j, m)`, `0 <= j, m < k`.
fn block_matrix(k: usize, p: usize, block: impl Fn(usize, usize) -> CMatrix) -> CMatrix {
    let mut t = CMatrix::zeros(k * p, k * p);
    for j in 0..k {
        for m in 0..k {
            t.view_mut((j * p, m * p), (p, p)).copy_from(&block(j, m));
        }
    }
    t
}

fn block_column(k: usize, p: usize, block: impl Fn(usize) -> CMatrix) -> CMatrix {
    let mut v = CMatrix::zeros(k * p, p);
    for j in 0..k {
        v.view_mut((j * p, 0), (p, p)).copy_from(&block(j));
    }
    v
}

/// Smallest eigenvalue of the block Toeplitz matrix `(c_{j-m})_{0 <= j,m <= n}`.
pub fn toeplitz_min_eigenvalue(moments: &Moments, n: usize) -> Result<f64> {
    moments.require(n)?;
    let p = moments.get(0).nrows();
    let t = block_matrix(n + 1, p, |j, m| moments.get(j as i64 - m as i64));
    Ok(HermitianMatrix::new(hermitian_part(&t))?.min_eigenvalue())
}

fn solve_hpd(a: CMatrix, b: &CMatrix, degree: usize) -> Result<CMatrix> {
    let ch = Cholesky::new(hermitian_part(&a))
        .ok_or(Error::TrivialMeasure { degree, min_eigenvalue: f64::NAN })?;
    Ok(ch.solve(b))
}

/// Monic right and left orthogonal polynomials `Phi_0, ..., Phi_n` by block
/// Gram-Schmidt on the moments.
pub fn monic_orthogonals_from_moments(
    moments: &Moments,
    n: usize,
) -> Result<(Vec<MatrixPolynomial>, Vec<MatrixPolynomial>)> {
    moments.require(n)?;
    let min = toeplitz_min_eigenvalue(moments, n)?;
    if !(min >= TOEPLITZ_TOL) {
        return Err(Error::TrivialMeasure { degree: n, min_eigenvalue: min });
    }
    let p = moments.get(0).nrows();
    let mut right = vec![MatrixPolynomial::one(p)];
    let mut left = vec![MatrixPolynomial::one(p)];
    for k in 1..=n {
        // sum_m c_{j-m} B_m = -c_{j-k}, j < k
        let t = block_matrix(k, p, |j, m| moments.get(j as i64 - m as i64));
        let rhs = -block_column(k, p, |j| moments.get(j as i64 - k as i64));
        let b = solve_hpd(t, &rhs, k)?;
        // sum_m c_{m-j} C_m† = -c_{k-j}, j < k
        let u = block_matrix(k, p, |j, m| moments.get(m as i64 - j as i64));
        let rhs = -block_column(k, p, |j| moments.get(k as i64 - j as i64));
        let cd = solve_hpd(u, &rhs, k)?;

        let mut rc = Vec::with_capacity(k + 1);
        let mut lc = Vec::with_capacity(k + 1);
        for m in 0..k {
            rc.push(b.view((m * p, 0), (p, p)).into_owned());
            lc.push(cd.view((m * p, 0), (p, p)).adjoint());
        }
        rc.push(identity(p));
        lc.push(identity(p));
        right.push(MatrixPolynomial { dim: p, coeffs: rc });
        left.push(MatrixPolynomial { dim: p, coeffs: lc });
    }
    Ok((right, left))
}

/// Largest degree whose orthogonal polynomials the grid supports.
pub fn degree_budget(mu: &MatrixMeasure) -> usize {
    mu.grid_size() / 8
}

pub fn monic_orthogonals(
    mu: &MatrixMeasure,
    n: usize,
) -> Result<(Vec<MatrixPolynomial>, Vec<MatrixPolynomial>)> {
    if n > degree_budget(mu) {
        return Err(Error::InsufficientMoments { available: degree_budget(mu), needed: n });
    }
    monic_orthogonals_from_moments(&Moments::from_measure(mu, n)?, n)
}

/// Finite list of strict `p x p` contractions `alpha_0, ..., alpha_{N-1}`.
/// Entries past the end are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VerblunskyFile", into = "VerblunskyFile")]
pub struct VerblunskySequence {
    dim: usize,
    coeffs: Vec<CMatrix>,
}

impl VerblunskySequence {
    pub fn new(dim: usize, coeffs: Vec<CMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for a in &coeffs {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: a.nrows() });
            }
            let margin = contraction_margin(a);
            if !(margin > 0.0) {
                return Err(Error::NotContraction { margin });
            }
        }
        Ok(Self { dim, coeffs })
    }

    pub fn zeros(dim: usize, n: usize) -> Self {
        Self { dim, coeffs: vec![CMatrix::zeros(dim, dim); n] }
    }

    /// Scalar multiples of the identity, `alpha_k = a_k 1`.
    pub fn scalar(dim: usize, values: &[Complex64]) -> Result<Self> {
        Self::new(dim, values.iter().map(|&a| identity(dim) * a).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    /// `alpha_k`, zero past the end.
    pub fn get(&self, k: usize) -> CMatrix {
        self.coeffs.get(k).cloned().unwrap_or_else(|| CMatrix::zeros(self.dim, self.dim))
    }

    /// Coefficients of the stripped measure, `alpha_{j + n}`.
    pub fn shifted(&self, n: usize) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().skip(n).cloned().collect() }
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().take(n).cloned().collect() }
    }

    /// Coefficients of the measure rotated by `pi`: `(-1)^{k+1} alpha_k`.
    pub fn flipped(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| if k % 2 == 0 { -a } else { a.clone() })
            .collect();
        Self { dim: self.dim, coeffs }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.len().max(other.len());
        (0..n).map(|k| max_abs_diff(&self.get(k), &other.get(k))).fold(0.0, f64::max)
    }

    pub fn min_margin(&self) -> f64 {
        self.coeffs.iter().map(contraction_margin).fold(1.0, f64::min)
    }
}

/// Coefficient file: `{"dim": p, "coeffs": [matrix, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerblunskyFile {
    pub dim: usize,
    pub coeffs: Vec<MatrixJson>,
}

impl TryFrom<VerblunskyFile> for VerblunskySequence {
    type Error = Error;

    fn try_from(f: VerblunskyFile) -> Result<Self> {
        let coeffs = f.coeffs.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
        VerblunskySequence::new(f.dim, coeffs)
    }
}

impl From<VerblunskySequence> for VerblunskyFile {
    fn from(s: VerblunskySequence) -> Self {
        Self { dim: s.dim, coeffs: s.coeffs.iter().map(MatrixJson::from).collect() }
    }
}

/// Monic and orthonormal polynomials of a measure together with its
/// Verblunsky coefficients, defects and leading coefficients `kappa`.
#[derive(Debug, Clone)]
pub struct OpucBasis {
    pub dim: usize,
    pub monic_r: Vec<MatrixPolynomial>,
    pub monic_l: Vec<MatrixPolynomial>,
    pub normalized_r: Vec<MatrixPolynomial>,
    pub normalized_l: Vec<MatrixPolynomial>,
    /// `phi^R_k = Phi^R_k kappa^R_k`.
    pub kappa_r: Vec<CMatrix>,
    /// `phi^L_k = kappa^L_k Phi^L_k`.
    pub kappa_l: Vec<CMatrix>,
    pub alphas: VerblunskySequence,
    pub defects_r: Vec<HermitianMatrix>,
    pub defects_l: Vec<HermitianMatrix>,
}

/// Builds the basis up to degree `n` from moments `c_0..c_n`.
///
/// With `kappa_0 = 1` the Szego recursion forces
/// `kappa^R_{k+1} = kappa^R_k (rho^R_k)^{-1}` and
/// `kappa^L_{k+1} = (rho^L_k)^{-1} kappa^L_k`; comparing constant terms gives
/// `alpha_k = -(kappa^R_k)† Phi^R_{k+1}(0)† (kappa^L_k)^{-1}`.
pub fn opuc_basis_from_moments(moments: &Moments, n: usize) -> Result<OpucBasis> {
    let (monic_r, monic_l) = monic_orthogonals_from_moments(moments, n)?;
    let p = moments.get(0).nrows();
    let mut kappa_r = vec![identity(p)];
    let mut kappa_l = vec![identity(p)];
    let mut alphas = Vec::with_capacity(n);
    let mut defects_r = Vec::with_capacity(n);
    let mut defects_l = Vec::with_capacity(n);
    for k in 0..n {
        let kl_inv = checked_inverse(&kappa_l[k]).ok_or(Error::TrivialMeasure { degree: k, min_eigenvalue: 0.0 })?;
        let alpha = -(kappa_r[k].adjoint() * monic_r[k + 1].coeff(0).adjoint() * kl_inv);
        let margin = contraction_margin(&alpha);
        if !(margin >= STRICTNESS_TOL) {
            return Err(Error::NotContraction { margin });
        }
        let (rho_r, rho_l) = defect_matrices(&alpha)?;
        let rr_inv = checked_inverse(rho_r.as_matrix()).ok_or(Error::NotContraction { margin })?;
        let rl_inv = checked_inverse(rho_l.as_matrix()).ok_or(Error::NotContraction { margin })?;
        kappa_r.push(&kappa_r[k] * rr_inv);
        kappa_l.push(rl_inv * &kappa_l[k]);
        alphas.push(alpha);
        defects_r.push(rho_r);
        defects_l.push(rho_l);
    }
    let normalized_r = monic_r.iter().zip(&kappa_r).map(|(phi, k)| phi.right_mul(k)).collect();
    let normalized_l = monic_l.iter().zip(&kappa_l).map(|(phi, k)| phi.left_mul(k)).collect();
    Ok(OpucBasis {
        dim: p,
        monic_r,
        monic_l,
        normalized_r,
        normalized_l,
        kappa_r,
        kappa_l,
        alphas: VerblunskySequence { dim: p, coeffs: alphas },
        defects_r,
        defects_l,
    })
}

pub fn opuc_basis(mu: &MatrixMeasure, n: usize) -> Result<OpucBasis> {
    if n > degree_budget(mu) {
        return Err(Error::InsufficientMoments { available: degree_budget(mu), needed: n });
    }
    opuc_basis_from_moments(&Moments::from_measure(mu, n)?, n)
}

/// Gram-Schmidt extraction only, without the Schur cross-check.
pub fn verblunsky_gram_schmidt(mu: &MatrixMeasure, n: usize) -> Result<VerblunskySequence> {
    let n = n.min(degree_budget(mu));
    Ok(opuc_basis(mu, n)?.alphas)
}

/// Verblunsky coefficients `alpha_0..alpha_{n-1}` (with `n` capped at `M/8`).
///
/// The Gram-Schmidt result is returned after checking it against the Schur
/// algorithm to within `1e-6`.
pub fn verblunsky_from_measure(mu: &MatrixMeasure, n: usize) -> Result<VerblunskySequence> {
    let gs = verblunsky_gram_schmidt(mu, n)?;
    let via_schur = schur::verblunsky_via_schur(mu, gs.len())?;
    for k in 0..gs.len() {
        let deviation = max_abs_diff(&gs.get(k), &via_schur.get(k));
        if !(deviation <= DUAL_PATH_TOL) {
            return Err(Error::ConventionCheckFailed { index: k, deviation });
        }
    }
    Ok(gs)
}

/// One step of the normalized Szego recursion:
/// `phi^L_{k+1} = (rho^L)^{-1} (z phi^L_k - alpha† (phi^R_k)*)` and
/// `phi^R_{k+1} = (z phi^R_k - (phi^L_k)* alpha†) (rho^R)^{-1}`.
pub fn szego_step(
    phi_l: &MatrixPolynomial,
    phi_r: &MatrixPolynomial,
    alpha: &CMatrix,
) -> Result<(MatrixPolynomial, MatrixPolynomial)> {
    let k = phi_l.degree();
    if phi_r.degree() != k {
        return Err(Error::DegreeMismatch { len: phi_r.coeffs.len(), degree: k });
    }
    let (rho_r, rho_l) = defect_matrices(alpha)?;
    let margin = contraction_margin(alpha);
    let rr_inv = checked_inverse(rho_r.as_matrix()).ok_or(Error::NotContraction { margin })?;
    let rl_inv = checked_inverse(rho_l.as_matrix()).ok_or(Error::NotContraction { margin })?;
    let ad = alpha.adjoint();
    let next_l = phi_l.shift().sub(&phi_r.reversed(k)?.left_mul(&ad)).left_mul(&rl_inv);
    let next_r = phi_r.shift().sub(&phi_l.reversed(k)?.right_mul(&ad)).right_mul(&rr_inv);
    Ok((next_l, next_r))
}

/// Runs the Szego recursion from `phi_0 = 1`; returns `(phi^L_k, phi^R_k)` for
/// `k = 0..=len(alpha)`.
pub fn szego_polynomials(alpha: &VerblunskySequence) -> Result<Vec<(MatrixPolynomial, MatrixPolynomial)>> {
    let p = alpha.dim();
    let mut out = vec![(MatrixPolynomial::one(p), MatrixPolynomial::one(p))];
    for a in alpha.coeffs() {
        let (l, r) = out.last().expect("non-empty");
        let next = szego_step(l, r, a)?;
        out.push(next);
    }
    Ok(out)
}

/// Samples of `[phi^R_N phi^R_N†]^{-1}` at the nodes `2 pi j / m`,
/// `N = len(alpha)`, with no normalization check.
pub fn bernstein_szego_density(alpha: &VerblunskySequence, m: usize) -> Result<Vec<HermitianMatrix>> {
    let (_, phi) = szego_polynomials(alpha)?.pop().expect("non-empty");
    let roots = UnitRoots::new(m);
    (0..m)
        .map(|j| {
            let inv = checked_inverse(&phi.eval(roots.get(j as i64))).ok_or(Error::SingularPolynomial { node: j })?;
            HermitianMatrix::new(hermitian_part(&(inv.adjoint() * inv)))
        })
        .collect()
}

/// Bernstein-Szego measure `[phi^R_N phi^R_N†]^{-1} d lambda_0` whose
/// coefficients are `alpha` followed by zeros, `N = len(alpha)`.
///
/// The mass is the identity exactly, so it is not re-checked: zeros of
/// `det phi_N` near the circle make the quadrature mass (and low moments)
/// converge slowly in `m`, while log-det integrals are already accurate.
/// See [`MatrixMeasure::normalization_deviation`].
pub fn bernstein_szego_measure(alpha: &VerblunskySequence, m: usize) -> Result<MatrixMeasure> {
    if m < 8 * alpha.len().max(1) {
        return Err(Error::BadGridSize(m));
    }
    unchecked_measure(bernstein_szego_density(alpha, m)?, Vec::new())
}
