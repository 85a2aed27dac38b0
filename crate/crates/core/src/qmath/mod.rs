//! Dense complex linear algebra and measurement primitives for systems of
//! one to four qubits.
//!
//! Everything here is a pure function of its inputs plus, for sampling, an
//! explicit random stream.  States are stored dense and row-major; the
//! largest object the simulator ever needs is the 16×16 joint state of two
//! Bell pairs during a purification round, so no sparse or stabilizer
//! representation is provided.
//!
//! # Qubit ordering
//!
//! Qubit 0 is the **highest-order** tensor factor: for an `n`-qubit system,
//! qubit `q` owns bit `n - 1 - q` of the computational-basis index.  So for
//! two qubits, basis index 2 (`0b10`) is qubit 0 in `|1⟩` and qubit 1 in
//! `|0⟩`.  This convention is used everywhere in the crate.

mod density;
pub mod eigen;
pub mod gates;
mod matrix;
mod state;

use num_complex::Complex;

pub use density::{DensityDiagnostics, DensityMatrix, Measurement};
pub(crate) use density::{apply_left, apply_right_dagger, partial_trace_raw};
pub use matrix::SquareMatrix;
pub use state::PureState;

use crate::Scalar;

/// Largest supported Hilbert-space dimension (four qubits).
pub const MAX_DIM: usize = 16;

/// Errors from the linear-algebra layer.
#[derive(Debug, Clone, thiserror::Error)]
pub enum QmathError {
    #[error("dimension {0} is not supported (must be 2, 4, 8 or 16)")]
    BadDimension(usize),
    #[error("tensor product dimension {0} exceeds the 4-qubit (16) limit")]
    DimensionOverflow(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("operator is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("invalid qubit targets {targets:?} for a {qubits}-qubit system")]
    BadTargets { targets: Vec<usize>, qubits: usize },
    #[error("partial trace keep-list must be a non-empty strictly increasing subset of qubits")]
    BadKeepList,
    #[error("projectors are not a complete orthogonal set (residual {residual:e})")]
    BadProjectors { residual: f64 },
    #[error("sampled measurement branch has degenerate probability {prob:e}")]
    DegenerateBranch { prob: f64 },
    #[error("matrix is not a valid density operator: {0}")]
    InvalidDensity(String),
    #[error("state vector is not normalized (|Σ|a|² − 1| = {0:e})")]
    NotNormalized(f64),
    #[error("non-finite entry in state data")]
    NonFinite,
}

pub(crate) fn c<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::real(re), T::real(im))
}

fn check_dim(dim: usize) -> Result<(), QmathError> {
    if matches!(dim, 2 | 4 | 8 | 16) {
        Ok(())
    } else {
        Err(QmathError::BadDimension(dim))
    }
}

/// Kronecker product of two operators, `a` on the high-order qubits.
pub fn tensor_product<T: Scalar>(
    a: &SquareMatrix<T>,
    b: &SquareMatrix<T>,
) -> Result<SquareMatrix<T>, QmathError> {
    let dim = a.dim() * b.dim();
    if dim > MAX_DIM {
        return Err(QmathError::DimensionOverflow(dim));
    }
    let mut out = SquareMatrix::zeros(dim);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            let aij = a[(i, j)];
            for k in 0..b.dim() {
                for l in 0..b.dim() {
                    out[(i * b.dim() + k, j * b.dim() + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two kets, `a` on the high-order qubits.
pub fn tensor_product_states<T: Scalar>(
    a: &PureState<T>,
    b: &PureState<T>,
) -> Result<PureState<T>, QmathError> {
    let dim = a.dim() * b.dim();
    if dim > MAX_DIM {
        return Err(QmathError::DimensionOverflow(dim));
    }
    let mut amps = vec![c::<T>(0.0, 0.0); dim];
    for (i, &ai) in a.amplitudes().iter().enumerate() {
        for (j, &bj) in b.amplitudes().iter().enumerate() {
            amps[i * b.dim() + j] = ai * bj;
        }
    }
    PureState::new(amps)
}

/// `ρ → Ũ ρ Ũ†` with `u` embedded on `targets` and identity elsewhere.
pub fn apply_unitary<T: Scalar>(
    rho: &DensityMatrix<T>,
    u: &SquareMatrix<T>,
    targets: &[usize],
) -> Result<DensityMatrix<T>, QmathError> {
    rho.apply_unitary(u, targets)
}

/// Reduced state on `keep` (strictly increasing qubit indices).
pub fn partial_trace<T: Scalar>(
    rho: &DensityMatrix<T>,
    keep: &[usize],
) -> Result<DensityMatrix<T>, QmathError> {
    rho.partial_trace(keep)
}

/// Samples one outcome of a projective measurement on `target`.
pub fn projective_measure<T: Scalar, R: rand::Rng + ?Sized>(
    rho: &DensityMatrix<T>,
    projectors: &[SquareMatrix<T>],
    target: usize,
    rng: &mut R,
) -> Result<Measurement<T>, QmathError> {
    rho.projective_measure(projectors, target, rng)
}

/// `⟨ψ|ρ|ψ⟩` as a real number.
pub fn fidelity<T: Scalar>(rho: &DensityMatrix<T>, psi: &PureState<T>) -> Result<T, QmathError> {
    rho.fidelity(psi)
}

/// Residual report for the density-matrix invariants at tolerance `tol`.
pub fn validate_density<T: Scalar>(rho: &DensityMatrix<T>, tol: T) -> DensityDiagnostics<T> {
    rho.validate(tol)
}
