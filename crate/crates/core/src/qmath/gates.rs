//! Standard gates and measurement projectors.
//!
//! The square roots of the Paulis use the principal branch: eigenvalue 1 maps
//! to 1 and eigenvalue −1 to `i` (phase π/2, inside (−π, π]).

use num_complex::Complex;

use super::matrix::SquareMatrix;
use super::c;
use crate::Scalar;

pub fn identity<T: Scalar>(dim: usize) -> SquareMatrix<T> {
    SquareMatrix::identity(dim)
}

pub fn pauli_x<T: Scalar>() -> SquareMatrix<T> {
    SquareMatrix::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
}

pub fn pauli_y<T: Scalar>() -> SquareMatrix<T> {
    SquareMatrix::from_rows(2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap()
}

pub fn pauli_z<T: Scalar>() -> SquareMatrix<T> {
    SquareMatrix::from_rows(2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).unwrap()
}

pub fn hadamard<T: Scalar>() -> SquareMatrix<T> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    SquareMatrix::from_rows(2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]).unwrap()
}

/// Principal √X = ½·[[1+i, 1−i], [1−i, 1+i]].
pub fn sqrt_x<T: Scalar>() -> SquareMatrix<T> {
    SquareMatrix::from_rows(
        2,
        &[c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)],
    )
    .unwrap()
}

/// Principal √Y = ½(1+i)·[[1, −1], [1, 1]].
pub fn sqrt_y<T: Scalar>() -> SquareMatrix<T> {
    SquareMatrix::from_rows(
        2,
        &[c(0.5, 0.5), c(-0.5, -0.5), c(0.5, 0.5), c(0.5, 0.5)],
    )
    .unwrap()
}

/// Principal √Z = diag(1, i), the S gate.
pub fn sqrt_z<T: Scalar>() -> SquareMatrix<T> {
    SquareMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap()
}

/// diag(1, e^{iα}).
pub fn phase<T: Scalar>(alpha: T) -> SquareMatrix<T> {
    SquareMatrix::diagonal(&[
        Complex::new(T::one(), T::zero()),
        Complex::from_polar(T::one(), alpha),
    ])
    .unwrap()
}

/// CNOT with qubit 0 (high-order) as control, qubit 1 as target.
pub fn cnot<T: Scalar>() -> SquareMatrix<T> {
    let mut m = SquareMatrix::zeros(4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

/// `{|0⟩⟨0|, |1⟩⟨1|}`.
pub fn computational_projectors<T: Scalar>() -> [SquareMatrix<T>; 2] {
    let mut p0 = SquareMatrix::zeros(2);
    p0[(0, 0)] = c(1.0, 0.0);
    let mut p1 = SquareMatrix::zeros(2);
    p1[(1, 1)] = c(1.0, 0.0);
    [p0, p1]
}

/// `{|+⟩⟨+|, |−⟩⟨−|}`.
pub fn xbasis_projectors<T: Scalar>() -> [SquareMatrix<T>; 2] {
    let plus = SquareMatrix::from_rows(
        2,
        &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)],
    )
    .unwrap();
    let minus = SquareMatrix::from_rows(
        2,
        &[c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0)],
    )
    .unwrap();
    [plus, minus]
}
