//! Normalized `p x p` matrix measures on the unit circle.
//!
//! A measure is an absolutely continuous part sampled on the uniform grid
//! `theta_j = 2 pi j / M` plus a finite list of atoms. Integrals over the
//! a.c. part use the periodic rectangle rule; atoms are integrated exactly
//! and never enter entropy integrals.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{
    c, hermitian_inv_sqrt, hermitian_part, identity, logdet_pd, max_abs_diff, CMatrix,
    HermitianMatrix, PSD_TOL,
};
use crate::io::MatrixJson;
use crate::summation::{MatrixAccumulator, NeumaierSum};

pub const DEFAULT_GRID: usize = 4096;
/// Allowed deviation of the total mass from the identity.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Largest `|z|` at which the Caratheodory transform is evaluated.
pub const R_MAX: f64 = 0.99;
/// `det W` below this is clamped in entropy integrals.
pub const DET_FLOOR: f64 = 1e-300;
/// Fraction of clamped nodes beyond which an entropy integral is infinite.
pub const FLOOR_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub theta: f64,
    pub weight: HermitianMatrix,
}

/// The reference weight `1 - g cos(theta)`, `|g| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceWeight(f64);

impl ReferenceWeight {
    pub fn new(g: f64) -> Result<Self> {
        if !(g.abs() <= 1.0) {
            return Err(Error::BadConfig(format!("|g| must be <= 1, got {g}")));
        }
        Ok(Self(g))
    }

    pub fn g(self) -> f64 {
        self.0
    }

    pub fn at(self, cos_theta: f64) -> f64 {
        1.0 - self.0 * cos_theta
    }
}

/// `M`-th roots of unity `e^{2 pi i k / M}` with exact conjugate symmetry
/// `root[M - k] = conj(root[k])`.
#[derive(Debug)]
pub(crate) struct UnitRoots {
    roots: Vec<Complex64>,
}

impl UnitRoots {
    pub(crate) fn new(m: usize) -> Self {
        let mut roots = vec![c(1.0, 0.0); m];
        for k in 1..=m / 2 {
            let (s, co) = (2.0 * PI * k as f64 / m as f64).sin_cos();
            roots[k] = c(co, s);
        }
        if m >= 4 {
            roots[m / 4] = c(0.0, 1.0);
        }
        if m >= 2 {
            roots[m / 2] = c(-1.0, 0.0);
        }
        for k in m / 2 + 1..m {
            roots[k] = roots[m - k].conj();
        }
        Self { roots }
    }

    /// `e^{2 pi i k / M}` for any integer `k`.
    pub(crate) fn get(&self, k: i64) -> Complex64 {
        let m = self.roots.len() as i64;
        self.roots[k.rem_euclid(m) as usize]
    }
}

#[derive(Debug, Clone)]
pub struct MatrixMeasure {
    dim: usize,
    density: Vec<HermitianMatrix>,
    atoms: Vec<Atom>,
    roots: Arc<UnitRoots>,
}

fn check_grid(m: usize) -> Result<()> {
    if m < 8 || !m.is_power_of_two() {
        return Err(Error::BadGridSize(m));
    }
    Ok(())
}

fn check_sample(index: usize, dim: usize, w: &HermitianMatrix) -> Result<()> {
    if w.dim() != dim {
        return Err(Error::BadSample { index, reason: format!("dimension {} != {dim}", w.dim()) });
    }
    let min = w.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::BadSample { index, reason: format!("min eigenvalue {min:e}") });
    }
    Ok(())
}

/// Builds a measure from grid samples and atoms.
///
/// With `renormalize` the total mass `S` is removed by symmetric conjugation
/// `S^{-1/2} mu S^{-1/2}`; otherwise `S = 1` is checked to within `1e-8`.
pub fn make_measure(
    density: Vec<HermitianMatrix>,
    atoms: Vec<Atom>,
    renormalize: bool,
) -> Result<MatrixMeasure> {
    let mut mu = unchecked_measure(density, atoms)?;
    let mass = mu.total_mass();
    if renormalize {
        let min = mass.min_eigenvalue();
        if !(min > 1e-14) {
            return Err(Error::NotNormalizable { min_eigenvalue: min });
        }
        let s = hermitian_inv_sqrt(&mass)?.into_inner();
        let conj = |w: &HermitianMatrix| HermitianMatrix::new(hermitian_part(&(&s * w.as_matrix() * &s)));
        mu.density = mu.density.iter().map(conj).collect::<Result<_>>()?;
        for atom in &mut mu.atoms {
            atom.weight = conj(&atom.weight)?;
        }
    } else {
        let deviation = mu.normalization_deviation();
        if !(deviation <= NORMALIZATION_TOL) {
            return Err(Error::NotNormalized { deviation });
        }
    }
    Ok(mu)
}

/// Sample and grid checks only. For densities that are normalized exactly in
/// theory, where the quadrature mass may still be off on a coarse grid.
pub(crate) fn unchecked_measure(density: Vec<HermitianMatrix>, atoms: Vec<Atom>) -> Result<MatrixMeasure> {
    let m = density.len();
    check_grid(m)?;
    let dim = density[0].dim();
    for (j, w) in density.iter().enumerate() {
        check_sample(j, dim, w)?;
    }
    for (a, atom) in atoms.iter().enumerate() {
        check_sample(m + a, dim, &atom.weight)?;
        if !atom.theta.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    let atoms = atoms
        .into_iter()
        .map(|a| Atom { theta: a.theta.rem_euclid(2.0 * PI), weight: a.weight })
        .collect();
    Ok(MatrixMeasure { dim, density, atoms, roots: Arc::new(UnitRoots::new(m)) })
}

impl MatrixMeasure {
    /// Samples `density(theta_j)` on an `m`-point grid.
    pub fn from_density_fn(
        m: usize,
        renormalize: bool,
        density: impl Fn(f64) -> HermitianMatrix,
    ) -> Result<Self> {
        check_grid(m)?;
        let samples = (0..m).map(|j| density(node_angle(j, m))).collect();
        make_measure(samples, Vec::new(), renormalize)
    }

    /// `Lambda_0 = 1 * d theta / 2 pi`.
    pub fn lambda0(p: usize, m: usize) -> Result<Self> {
        Self::from_density_fn(m, false, |_| HermitianMatrix::identity(p))
    }

    /// `Lambda_g = 1 * (1 - g cos theta) d theta / 2 pi`.
    pub fn lambda_g(p: usize, g: ReferenceWeight, m: usize) -> Result<Self> {
        check_grid(m)?;
        let roots = UnitRoots::new(m);
        let samples = (0..m)
            .map(|j| HermitianMatrix::identity(p).scale(g.at(roots.get(j as i64).re)))
            .collect();
        make_measure(samples, Vec::new(), false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_size(&self) -> usize {
        self.density.len()
    }

    pub fn density(&self) -> &[HermitianMatrix] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `e^{i theta_j}` for grid node `j`.
    pub fn node(&self, j: usize) -> Complex64 {
        self.roots.get(j as i64)
    }

    pub fn total_mass(&self) -> HermitianMatrix {
        let m = self.grid_size();
        let mut acc = MatrixAccumulator::new(self.dim);
        for w in &self.density {
            acc.add_scaled(c(1.0 / m as f64, 0.0), w.as_matrix());
        }
        for a in &self.atoms {
            acc.add_scaled(c(1.0, 0.0), a.weight.as_matrix());
        }
        HermitianMatrix::new(hermitian_part(&acc.value())).expect("sum of Hermitian matrices")
    }

    /// Largest moment order the grid integrates reliably.
    /// Max-entry distance of the quadrature mass from the identity.
    pub fn normalization_deviation(&self) -> f64 {
        max_abs_diff(self.total_mass().as_matrix(), &identity(self.dim))
    }

    pub fn moment_budget(&self) -> usize {
        self.grid_size() / 4
    }

    /// `c_n = int e^{-i n theta} d mu(theta)`.
    pub fn moment(&self, n: i64) -> Result<CMatrix> {
        let max = self.moment_budget() as i64;
        if n.abs() > max {
            return Err(Error::MomentOrderTooHigh { order: n, max });
        }
        let m = self.grid_size();
        let mut acc = MatrixAccumulator::new(self.dim);
        for (j, w) in self.density.iter().enumerate() {
            let phase = self.roots.get(-n * j as i64) / m as f64;
            acc.add_scaled(phase, w.as_matrix());
        }
        for a in &self.atoms {
            let phase = Complex64::from_polar(1.0, -(n as f64) * a.theta);
            acc.add_scaled(phase, a.weight.as_matrix());
        }
        Ok(acc.value())
    }

    /// `c_0, ..., c_n`.
    pub fn moments(&self, n: usize) -> Result<Vec<CMatrix>> {
        (0..=n as i64).map(|k| self.moment(k)).collect()
    }

    /// Caratheodory transform `F(z) = int (e^{it} + z) / (e^{it} - z) d mu(t)`.
    pub fn caratheodory(&self, z: Complex64) -> Result<CMatrix> {
        if z.norm() > R_MAX {
            return Err(Error::RadiusTooLarge { radius: z.norm() });
        }
        let m = self.grid_size();
        let mut acc = MatrixAccumulator::new(self.dim);
        for (j, w) in self.density.iter().enumerate() {
            let e = self.node(j);
            acc.add_scaled((e + z) / (e - z) / m as f64, w.as_matrix());
        }
        for a in &self.atoms {
            let e = Complex64::from_polar(1.0, a.theta);
            acc.add_scaled((e + z) / (e - z), a.weight.as_matrix());
        }
        Ok(acc.value())
    }

    /// Rotation by `pi`: `d mu~(theta) = d mu(theta + pi)`.
    pub fn flip(&self) -> MatrixMeasure {
        let m = self.grid_size();
        let density = (0..m).map(|j| self.density[(j + m / 2) % m].clone()).collect();
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                theta: if a.theta < PI { a.theta + PI } else { a.theta - PI },
                weight: a.weight.clone(),
            })
            .collect();
        MatrixMeasure { dim: self.dim, density, atoms, roots: Arc::clone(&self.roots) }
    }

    /// Quadrature of `(1 - g cos) log det W` over the a.c. part with the
    /// clamping policy applied.
    pub fn weighted_logdet(&self, g: ReferenceWeight) -> LogdetIntegral {
        weighted_logdet_samples(&self.density, g)
    }

    /// Absolutely continuous density `W(theta_j)` as a plain matrix.
    pub fn sample(&self, j: usize) -> &CMatrix {
        self.density[j].as_matrix()
    }
}

/// [`MatrixMeasure::weighted_logdet`] on raw samples at the nodes
/// `2 pi j / M`, without any normalization requirement.
pub fn weighted_logdet_samples(density: &[HermitianMatrix], g: ReferenceWeight) -> LogdetIntegral {
    let m = density.len();
    let roots = UnitRoots::new(m);
    let floor = DET_FLOOR.ln();
    let mut integral = NeumaierSum::new();
    let mut reference = NeumaierSum::new();
    let mut clamped = 0usize;
    for (j, w) in density.iter().enumerate() {
        let weight = g.at(roots.get(j as i64).re);
        let ld = match logdet_pd(w) {
            Ok(v) if v > floor => v,
            _ => {
                clamped += 1;
                floor
            }
        };
        if weight > 0.0 {
            integral.add(weight * ld / m as f64);
            reference.add(weight * weight.ln() / m as f64);
        }
    }
    LogdetIntegral {
        value: integral.value(),
        reference_term: reference.value(),
        clamped,
        infinite: clamped as f64 > FLOOR_FRACTION * m as f64,
    }
}

/// Angle of grid node `j` on an `m`-point grid.
pub fn node_angle(j: usize, m: usize) -> f64 {
    2.0 * PI * j as f64 / m as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogdetIntegral {
    /// `(1/M) sum_j (1 - g cos theta_j) log det W_j`.
    pub value: f64,
    /// `(1/M) sum_j (1 - g cos theta_j) log(1 - g cos theta_j)`.
    pub reference_term: f64,
    pub clamped: usize,
    pub infinite: bool,
}

/// `K(lambda_g | lambda_0) = 1 - sqrt(1 - g^2) + log((1 + sqrt(1 - g^2)) / 2)`.
pub fn entropy_reference(g: ReferenceWeight) -> f64 {
    let s = (1.0 - g.g() * g.g()).max(0.0).sqrt();
    1.0 - s + ((1.0 + s) / 2.0).ln()
}

/// Relative entropy `K(Lambda_g | mu)`; `+inf` under the clamping policy.
pub fn entropy_k(g: ReferenceWeight, mu: &MatrixMeasure) -> f64 {
    let li = mu.weighted_logdet(g);
    if li.infinite {
        return f64::INFINITY;
    }
    -li.value + mu.dim() as f64 * li.reference_term
}

/// Lebesgue part `(1/M) sum (1 - g cos) log det W`; `-inf` under clamping.
pub fn lhs_integral(g: ReferenceWeight, mu: &MatrixMeasure) -> f64 {
    let li = mu.weighted_logdet(g);
    if li.infinite {
        f64::NEG_INFINITY
    } else {
        li.value
    }
}

/// Density given either as samples or as a builtin name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityJson {
    Builtin(String),
    Samples(Vec<MatrixJson>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomJson {
    pub theta: f64,
    pub weight: MatrixJson,
}

/// Measure file: `{"dim", "grid_size", "density", "atoms"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub dim: usize,
    pub grid_size: usize,
    pub density: DensityJson,
    #[serde(default)]
    pub atoms: Vec<AtomJson>,
}

impl MeasureFile {
    pub fn from_measure(mu: &MatrixMeasure) -> Self {
        Self {
            dim: mu.dim(),
            grid_size: mu.grid_size(),
            density: DensityJson::Samples(mu.density.iter().map(|w| MatrixJson::from(w.as_matrix())).collect()),
            atoms: mu
                .atoms
                .iter()
                .map(|a| AtomJson { theta: a.theta, weight: MatrixJson::from(a.weight.as_matrix()) })
                .collect(),
        }
    }

    /// Builds the measure. Sampled densities are renormalized when
    /// `renormalize` is set; builtin densities are normalized by construction.
    pub fn into_measure(self, renormalize: bool) -> Result<MatrixMeasure> {
        let p = self.dim;
        let m = self.grid_size;
        check_grid(m)?;
        let atoms = self
            .atoms
            .into_iter()
            .map(|a| {
                let weight = HermitianMatrix::try_from(a.weight)?;
                if weight.dim() != p {
                    return Err(Error::DimensionMismatch { expected: p, found: weight.dim() });
                }
                Ok(Atom { theta: a.theta, weight })
            })
            .collect::<Result<Vec<_>>>()?;
        let samples: Vec<HermitianMatrix> = match self.density {
            DensityJson::Builtin(name) => {
                let g = parse_builtin(&name)?;
                let roots = UnitRoots::new(m);
                (0..m).map(|j| HermitianMatrix::identity(p).scale(g.at(roots.get(j as i64).re))).collect()
            }
            DensityJson::Samples(v) => {
                if v.len() != m {
                    return Err(Error::Format(format!("{} density samples for grid_size {m}", v.len())));
                }
                v.into_iter().map(HermitianMatrix::try_from).collect::<Result<_>>()?
            }
        };
        if let Some(w) = samples.iter().find(|w| w.dim() != p) {
            return Err(Error::DimensionMismatch { expected: p, found: w.dim() });
        }
        make_measure(samples, atoms, renormalize)
    }
}

/// `"lambda0"` or `"lambda_g:<g>"`.
pub fn parse_builtin(name: &str) -> Result<ReferenceWeight> {
    if name == "lambda0" {
        return ReferenceWeight::new(0.0);
    }
    if let Some(g) = name.strip_prefix("lambda_g:") {
        let g: f64 = g.trim().parse().map_err(|_| Error::Format(format!("bad builtin density {name:?}")))?;
        return ReferenceWeight::new(g);
    }
    Err(Error::Format(format!("unknown builtin density {name:?}")))
}
