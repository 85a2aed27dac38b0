//! Hermitian eigensolver via the cyclic complex Jacobi method.
//!
//! For the 16×16-and-below matrices this crate handles, Jacobi sweeps are
//! simple, accurate and fast; no external LAPACK backend is needed.

use num_complex::Complex;

use super::matrix::SquareMatrix;
use crate::Scalar;

/// Real eigenvalues of a Hermitian matrix, ascending.
///
/// The input is symmetrized as `(A + A†)/2` first, so slightly non-Hermitian
/// inputs (rounding from chained conjugations) are handled gracefully.
pub fn hermitian_eigenvalues<T: Scalar>(m: &SquareMatrix<T>) -> Vec<T> {
    let n = m.dim();
    let half = Complex::new(T::real(0.5), T::zero());
    let mut a = m.add(&m.dagger()).expect("same dimension").scale(half);

    let off_norm = |a: &SquareMatrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let tol = T::epsilon() * T::from_usize(n * n).unwrap() * (T::one() + a.frobenius_norm());
    for _sweep in 0..60 {
        if off_norm(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= tol / T::from_usize(n).unwrap() {
                    continue;
                }
                // Unit phase of the off-diagonal entry, and the rotation
                // angle that annihilates it.
                let phase = apq / Complex::new(mag, T::zero());
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = T::real(0.5) * (T::real(2.0) * mag).atan2(app - aqq);
                let (s, c0) = theta.sin_cos();
                let cc = Complex::new(c0, T::zero());
                let s_phase = phase * Complex::new(s, T::zero());

                // Columns: A ← A R with R[p][p]=c, R[p][q]=−s·φ, R[q][p]=s·φ*, R[q][q]=c.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * cc + aiq * s_phase.conj();
                    a[(i, q)] = aiq * cc - aip * s_phase;
                }
                // Rows: A ← R† A.
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * cc + aqj * s_phase;
                    a[(q, j)] = aqj * cc - apj * s_phase.conj();
                }
            }
        }
    }

    let mut eigs: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eigs
}
