//! Compensated (Neumaier) accumulators.
//!
//! Quadrature sums run over thousands of nodes and are compared against
//! closed forms at the 1e-10 level, so every long accumulation in the crate
//! goes through these instead of a bare `+=`.

use num_complex::Complex64;

use crate::hermitian::CMatrix;

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Sum an iterator of reals with compensation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Entry-wise compensated accumulator for square complex matrices.
#[derive(Debug, Clone)]
pub struct MatrixAccumulator {
    dim: usize,
    re: Vec<NeumaierSum>,
    im: Vec<NeumaierSum>,
}

impl MatrixAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            re: vec![NeumaierSum::new(); dim * dim],
            im: vec![NeumaierSum::new(); dim * dim],
        }
    }

    /// Adds `scale * m`.
    pub fn add_scaled(&mut self, scale: Complex64, m: &CMatrix) {
        for j in 0..self.dim {
            for i in 0..self.dim {
                let v = scale * m[(i, j)];
                let idx = i + j * self.dim;
                self.re[idx].add(v.re);
                self.im[idx].add(v.im);
            }
        }
    }

    pub fn value(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| {
            let idx = i + j * self.dim;
            Complex64::new(self.re[idx].value(), self.im[idx].value())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn matrix_accumulator_matches_exact_sum() {
        let mut acc = MatrixAccumulator::new(2);
        let m = CMatrix::from_element(2, 2, Complex64::new(0.1, -0.2));
        for _ in 0..10 {
            acc.add_scaled(Complex64::new(1.0, 0.0), &m);
        }
        let v = acc.value();
        assert!((v[(1, 0)] - Complex64::new(1.0, -2.0)).norm() < 1e-15);
    }
}
