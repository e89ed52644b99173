use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix with finite entries.
///
/// A thin wrapper over `nalgebra::DMatrix` that fixes the element type and
/// guarantees the no-NaN/no-Inf invariant for matrices built from external
/// data.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::arg("matrix must have at least one row and column"));
        }
        if entries.len() != rows * cols {
            return Err(Error::arg(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries
            .iter()
            .find(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::arg(format!("non-finite matrix entry {bad}")));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    /// Builds a matrix from a closure over `(row, col)`.
    ///
    /// Finiteness is the caller's responsibility; used for internally
    /// generated operators.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Square matrix from real row-major entries.
    pub fn real_square(n: usize, entries: &[f64]) -> Result<Self> {
        Self::from_row_major(n, n, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |r, c| if r == c { entries[r] } else { ZERO })
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// Kronecker product with `self` as the most significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise deviation from Hermiticity; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Eigendecomposition of a Hermitian matrix.
    ///
    /// Returns eigenvalues in ascending order and the unitary whose columns are
    /// the matching eigenvectors. Only the Hermitian part of `self` is used.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        debug_assert!(self.is_square());
        let symmetric = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let eig = symmetric.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let n = self.rows();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, ComplexMatrix(vectors))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let symmetric = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let mut values: Vec<f64> = symmetric.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Spectral norm of a Hermitian matrix (largest eigenvalue modulus).
    pub fn hermitian_norm(&self) -> f64 {
        self.hermitian_eigenvalues()
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    /// `self · x · self†`
    pub fn conjugate(&self, x: &Self) -> Self {
        Self(&self.0 * &x.0 * self.0.adjoint())
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.rows();
        let mut acc = ZERO;
        for r in 0..n {
            for k in 0..self.cols() {
                acc += self.0[(r, k)] * other.0[(k, r)];
            }
        }
        acc
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for r in 0..self.rows() {
            write!(f, "  ")?;
            for c in 0..self.cols() {
                let z = self.0[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Single-qubit Pauli matrices.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn i() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |r, c| C64::new(if r != c { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        })
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(ComplexMatrix::from_row_major(0, 1, vec![]).is_err());
        assert!(ComplexMatrix::from_row_major(2, 2, vec![ONE; 3]).is_err());
        assert!(ComplexMatrix::from_row_major(1, 1, vec![C64::new(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::from_row_major(1, 1, vec![C64::new(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn kron_puts_left_factor_first() {
        let z = pauli::z();
        let k = z.kron(&ComplexMatrix::identity(2));
        assert_eq!(k.get(0, 0), ONE);
        assert_eq!(k.get(1, 1), ONE);
        assert_eq!(k.get(2, 2), -ONE);
        assert_eq!(k.get(3, 3), -ONE);
    }

    #[test]
    fn eigen_reconstructs_hermitian() {
        let y = pauli::y();
        let x = pauli::x();
        let h = &(&y + &x.scale_real(0.3)) + &pauli::z().scale_real(-0.7);
        let (vals, vecs) = h.hermitian_eigen();
        assert!(vals[0] <= vals[1]);
        let diag =
            ComplexMatrix::diagonal(&vals.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
        let back = vecs.conjugate(&diag);
        assert!(back.max_abs_diff(&h) < 1e-13);
    }

    #[test]
    fn pauli_algebra() {
        let xy = &pauli::x() * &pauli::y();
        assert!(xy.max_abs_diff(&pauli::z().scale(C64::new(0.0, 1.0))) < 1e-15);
        assert!(pauli::y().is_hermitian(0.0));
    }
}
