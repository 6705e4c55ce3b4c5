//! Linear operators acting on register amplitudes.
//!
//! [`DenseOperator`] is the reference container used by oracles and for
//! assembling the full PDE matrix. [`PermutationOp`] and [`DiagonalOp`] are
//! structured forms applied in `O(2^N)`, which the measurement protocols use.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{argument, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Anything that maps a `dim`-length amplitude slice to another.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `self · input` into `output`. Both slices have length `dim()`.
    fn apply_to(&self, input: &[C64], output: &mut [C64]);

    fn to_dense(&self) -> DenseOperator;

    fn is_unitary(&self, tol: f64) -> bool {
        self.to_dense().is_unitary(tol)
    }
}

/// A dense complex `dim × dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    entries: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(argument(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { entries: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn from_real_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(dim, |r, c| C64::new(f(r, c), 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        Self::from_real_fn(dim, |r, c| if r == c { values[r] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint() }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { entries: &self.entries * C64::new(factor, 0.0) }
    }

    /// Kronecker product `self ⊗ other`; `self` acts on the more significant qubits.
    pub fn kron(&self, other: &DenseOperator) -> Self {
        Self { entries: self.entries.kronecker(&other.entries) }
    }

    /// `self^power` for `power ≥ 1`.
    pub fn pow(&self, power: u32) -> Result<Self> {
        if power == 0 {
            return Err(argument("operator power must be at least 1"));
        }
        let mut out = self.clone();
        for _ in 1..power {
            out = &out * self;
        }
        Ok(out)
    }

    pub fn apply(&self, amps: &[C64]) -> Result<Vec<C64>> {
        if amps.len() != self.dim() {
            return Err(argument(format!(
                "operator of dimension {} applied to vector of length {}",
                self.dim(),
                amps.len()
            )));
        }
        let mut out = vec![ZERO; amps.len()];
        self.apply_to(amps, &mut out);
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// `‖U†U − I‖_max ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let product = self.entries.adjoint() * &self.entries;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        product.iter().zip(id.iter()).all(|(a, b)| (a - b).norm() <= tol)
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.entries.nrows()
    }

    fn apply_to(&self, input: &[C64], output: &mut [C64]) {
        let dim = self.dim();
        for (row, out) in output.iter_mut().enumerate().take(dim) {
            let mut acc = ZERO;
            for (col, x) in input.iter().enumerate() {
                acc += self.entries[(row, col)] * x;
            }
            *out = acc;
        }
    }

    fn to_dense(&self) -> DenseOperator {
        self.clone()
    }

    fn is_unitary(&self, tol: f64) -> bool {
        DenseOperator::is_unitary(self, tol)
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { entries: &self.entries * &rhs.entries }
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { entries: &self.entries + &rhs.entries }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { entries: &self.entries - &rhs.entries }
    }
}

/// Basis permutation `|g⟩ ↦ |image[g]⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationOp {
    image: Vec<usize>,
}

impl PermutationOp {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &target in &image {
            if target >= image.len() || seen[target] {
                return Err(argument("permutation image must be a bijection on 0..dim"));
            }
            seen[target] = true;
        }
        if image.is_empty() {
            return Err(argument("permutation must be non-empty"));
        }
        Ok(Self { image })
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (from, &to) in self.image.iter().enumerate() {
            inv[to] = from;
        }
        Self { image: inv }
    }
}

impl LinearOperator for PermutationOp {
    fn dim(&self) -> usize {
        self.image.len()
    }

    fn apply_to(&self, input: &[C64], output: &mut [C64]) {
        for (from, &to) in self.image.iter().enumerate() {
            output[to] = input[from];
        }
    }

    fn to_dense(&self) -> DenseOperator {
        let mut m = DenseOperator::zeros(self.dim());
        for (from, &to) in self.image.iter().enumerate() {
            m.entries[(to, from)] = ONE;
        }
        m
    }

    fn is_unitary(&self, _tol: f64) -> bool {
        true
    }
}

/// Diagonal operator `Σ_g d_g |g⟩⟨g|` with real entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalOp {
    diag: Vec<f64>,
}

impl DiagonalOp {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn values(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearOperator for DiagonalOp {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_to(&self, input: &[C64], output: &mut [C64]) {
        for ((out, x), d) in output.iter_mut().zip(input).zip(&self.diag) {
            *out = x * *d;
        }
    }

    fn to_dense(&self) -> DenseOperator {
        DenseOperator::diagonal(&self.diag)
    }

    fn is_unitary(&self, tol: f64) -> bool {
        self.diag.iter().all(|d| (d.abs() - 1.0).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_dense_matches_structured_apply() {
        let perm = PermutationOp::new(vec![2, 0, 3, 1]).unwrap();
        let input: Vec<C64> = (0..4).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let mut fast = vec![ZERO; 4];
        perm.apply_to(&input, &mut fast);
        let dense = perm.to_dense().apply(&input).unwrap();
        assert_eq!(fast, dense);
        let back = perm.inverse().to_dense();
        assert!((&back * &perm.to_dense()).max_abs_diff(&DenseOperator::identity(4)) == 0.0);
    }

    #[test]
    fn rejects_non_bijection() {
        assert!(PermutationOp::new(vec![0, 0, 1]).is_err());
        assert!(PermutationOp::new(vec![0, 3]).is_err());
    }

    #[test]
    fn pow_zero_is_an_error() {
        assert!(DenseOperator::identity(2).pow(0).is_err());
    }

    #[test]
    fn diagonal_unitarity() {
        assert!(DiagonalOp::new(vec![1.0, -1.0]).is_unitary(1e-12));
        assert!(!DiagonalOp::new(vec![1.0, 0.5]).is_unitary(1e-12));
    }
}
