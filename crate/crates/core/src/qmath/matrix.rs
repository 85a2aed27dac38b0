use std::ops::{Index, IndexMut};

use num_complex::Complex;

use super::{c, check_dim, QmathError};
use crate::Scalar;

/// Dense complex square matrix of dimension 2, 4, 8 or 16, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T: Scalar> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> SquareMatrix<T> {
    /// All-zero matrix.  Panics on an unsupported dimension; dimensions are
    /// compile-time literals at every call site.
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim).expect("supported dimension");
        SquareMatrix {
            dim,
            data: vec![c(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    /// Builds from a row-major slice of `dim²` entries.
    pub fn from_rows(dim: usize, entries: &[Complex<T>]) -> Result<Self, QmathError> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(QmathError::DimMismatch(entries.len(), dim * dim));
        }
        Ok(SquareMatrix {
            dim,
            data: entries.to_vec(),
        })
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Result<Self, QmathError> {
        check_dim(entries.len())?;
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits this operator acts on (`log₂ dim`).
    pub fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, QmathError> {
        if self.dim != other.dim {
            return Err(QmathError::DimMismatch(self.dim, other.dim));
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == c(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, QmathError> {
        if self.dim != other.dim {
            return Err(QmathError::DimMismatch(self.dim, other.dim));
        }
        let mut out = self.clone();
        for (o, e) in out.data.iter_mut().zip(&other.data) {
            *o += *e;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, QmathError> {
        if self.dim != other.dim {
            return Err(QmathError::DimMismatch(self.dim, other.dim));
        }
        let mut out = self.clone();
        for (o, e) in out.data.iter_mut().zip(&other.data) {
            *o -= *e;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        let mut out = self.clone();
        for e in out.data.iter_mut() {
            *e *= factor;
        }
        out
    }

    pub fn scale_re(&self, factor: T) -> Self {
        self.scale(Complex::new(factor, T::zero()))
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self[(i, i)]).fold(c(0.0, 0.0), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// `max |(U†U − I)_{ij}|`; zero for an exactly unitary matrix.
    pub fn unitarity_residual(&self) -> T {
        let gram = self
            .dagger()
            .matmul(self)
            .expect("same dimension by construction");
        gram.max_abs_diff(&Self::identity(self.dim))
    }

    /// `max |(A − A†)_{ij}|`.
    pub fn hermiticity_residual(&self) -> T {
        self.max_abs_diff(&self.dagger())
    }

    /// Conjugation `U self U†`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self, QmathError> {
        u.matmul(self)?.matmul(&u.dagger())
    }
}

impl<T: Scalar> Index<(usize, usize)> for SquareMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (r, col): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + col]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + col]
    }
}
