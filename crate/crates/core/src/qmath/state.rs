use num_complex::Complex;

use super::{c, check_dim, QmathError};
use crate::Scalar;

/// Normalized ket over 1–4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Scalar> {
    dim: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Scalar> PureState<T> {
    /// Builds from amplitudes, requiring `Σ|aᵢ|² = 1` within the tight
    /// tolerance and finite entries.
    pub fn new(amps: Vec<Complex<T>>) -> Result<Self, QmathError> {
        check_dim(amps.len())?;
        if !amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(QmathError::NonFinite);
        }
        let norm_sqr: T = amps.iter().map(|z| z.norm_sqr()).sum();
        let dev = (norm_sqr - T::one()).abs();
        if dev > T::tight_tol() {
            return Err(QmathError::NotNormalized(dev.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(PureState {
            dim: amps.len(),
            amps,
        })
    }

    /// Builds from unnormalized amplitudes by rescaling.
    pub fn normalized(amps: Vec<Complex<T>>) -> Result<Self, QmathError> {
        check_dim(amps.len())?;
        let norm: T = amps.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if !norm.is_finite() || norm < T::prob_floor() {
            return Err(QmathError::NonFinite);
        }
        let inv = Complex::new(T::one() / norm, T::zero());
        PureState::new(amps.into_iter().map(|a| a * inv).collect())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self, QmathError> {
        check_dim(dim)?;
        if index >= dim {
            return Err(QmathError::DimMismatch(index, dim));
        }
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[index] = c(1.0, 0.0);
        PureState::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>, QmathError> {
        if self.dim != other.dim {
            return Err(QmathError::DimMismatch(self.dim, other.dim));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * *b)
            .fold(c(0.0, 0.0), |acc, z| acc + z))
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> Result<T, QmathError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Applies a unitary on the full register, returning the rotated ket.
    pub fn apply(&self, u: &super::SquareMatrix<T>) -> Result<Self, QmathError> {
        if u.dim() != self.dim {
            return Err(QmathError::DimMismatch(u.dim(), self.dim));
        }
        let mut amps = vec![c(0.0, 0.0); self.dim];
        for (i, amp) in amps.iter_mut().enumerate() {
            for j in 0..self.dim {
                *amp += u[(i, j)] * self.amps[j];
            }
        }
        PureState::new(amps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_input() {
        let amps = vec![c::<f64>(0.9, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            PureState::new(amps),
            Err(QmathError::NotNormalized(_))
        ));
    }

    #[test]
    fn normalized_rescales() {
        let s = PureState::normalized(vec![c::<f64>(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let amps = vec![c::<f64>(f64::NAN, 0.0), c(0.0, 0.0)];
        assert!(matches!(PureState::new(amps), Err(QmathError::NonFinite)));
    }

    #[test]
    fn basis_state_inner_products() {
        let e0 = PureState::<f64>::basis(4, 0).unwrap();
        let e1 = PureState::<f64>::basis(4, 1).unwrap();
        assert_eq!(e0.inner(&e0).unwrap(), c(1.0, 0.0));
        assert_eq!(e0.inner(&e1).unwrap(), c(0.0, 0.0));
    }
}
