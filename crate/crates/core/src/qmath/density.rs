use rand::Rng;

use super::eigen;
use super::matrix::SquareMatrix;
use super::state::PureState;
use super::{c, QmathError};
use crate::Scalar;

/// Hermitian, trace-one, positive-semidefinite operator over 1–4 qubits.
///
/// Hermiticity and trace are enforced on construction at the tight tolerance;
/// positivity is only checked on demand through [`DensityMatrix::validate`],
/// since chained floating-point conjugations can push eigenvalues slightly
/// negative.  States are never re-projected.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Scalar> {
    mat: SquareMatrix<T>,
}

/// One sampled projective-measurement branch.
#[derive(Debug, Clone)]
pub struct Measurement<T: Scalar> {
    pub outcome: usize,
    pub post_state: DensityMatrix<T>,
    pub probability: T,
}

/// Residuals of the density-matrix invariants, with pass/fail at the
/// tolerance the report was produced with.
#[derive(Debug, Clone, Copy)]
pub struct DensityDiagnostics<T: Scalar> {
    pub hermiticity_residual: T,
    pub trace_deviation: T,
    pub min_eigenvalue: T,
    pub hermitian_ok: bool,
    pub trace_ok: bool,
    pub psd_ok: bool,
}

impl<T: Scalar> DensityDiagnostics<T> {
    pub fn pass(&self) -> bool {
        self.hermitian_ok && self.trace_ok && self.psd_ok
    }
}

/// Index bookkeeping for embedding a k-qubit gate into an n-qubit register.
struct Embedding {
    /// Gate row extracted from each full index.
    gate_row: Vec<usize>,
    /// Full-index bit pattern for each gate column.
    scatter: Vec<usize>,
    /// Bits owned by the targets.
    mask: usize,
}

impl Embedding {
    fn new(dim: usize, qubits: usize, targets: &[usize], gate_dim: usize) -> Self {
        let k = targets.len();
        let shift = |q: usize| qubits - 1 - q;
        let mut mask = 0usize;
        for &t in targets {
            mask |= 1 << shift(t);
        }
        let scatter: Vec<usize> = (0..gate_dim)
            .map(|b| {
                let mut s = 0usize;
                for (j, &t) in targets.iter().enumerate() {
                    s |= ((b >> (k - 1 - j)) & 1) << shift(t);
                }
                s
            })
            .collect();
        let gate_row: Vec<usize> = (0..dim)
            .map(|i| {
                let mut a = 0usize;
                for (j, &t) in targets.iter().enumerate() {
                    a |= ((i >> shift(t)) & 1) << (k - 1 - j);
                }
                a
            })
            .collect();
        Embedding {
            gate_row,
            scatter,
            mask,
        }
    }
}

impl<T: Scalar> DensityMatrix<T> {
    /// Builds from a matrix, enforcing Hermiticity and unit trace at the
    /// tight tolerance and finiteness of every entry.
    pub fn from_matrix(mat: SquareMatrix<T>) -> Result<Self, QmathError> {
        if !mat.is_finite() {
            return Err(QmathError::NonFinite);
        }
        let herm = mat.hermiticity_residual();
        if herm > T::tight_tol() {
            return Err(QmathError::InvalidDensity(format!(
                "hermiticity residual {herm}"
            )));
        }
        let tr = mat.trace();
        let dev = ((tr.re - T::one()).abs()).max(tr.im.abs());
        if dev > T::tight_tol() {
            return Err(QmathError::InvalidDensity(format!("trace deviation {dev}")));
        }
        Ok(DensityMatrix { mat })
    }

    /// Constructor for internal operations that preserve the invariants by
    /// construction; still asserted in test builds.
    pub(crate) fn from_matrix_unchecked(mat: SquareMatrix<T>) -> Self {
        debug_assert!(
            mat.hermiticity_residual() <= T::loose_tol(),
            "operation broke Hermiticity"
        );
        debug_assert!(
            (mat.trace().re - T::one()).abs() <= T::loose_tol()
                && mat.trace().im.abs() <= T::loose_tol(),
            "operation broke unit trace"
        );
        DensityMatrix { mat }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &PureState<T>) -> Self {
        let dim = psi.dim();
        let mut mat = SquareMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] = psi.amplitudes()[i] * psi.amplitudes()[j].conj();
            }
        }
        DensityMatrix::from_matrix_unchecked(mat)
    }

    /// `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mat = SquareMatrix::identity(dim).scale_re(T::one() / T::from_usize(dim).unwrap());
        DensityMatrix::from_matrix_unchecked(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn qubits(&self) -> usize {
        self.mat.qubits()
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> SquareMatrix<T> {
        self.mat
    }

    fn check_targets(&self, targets: &[usize], gate_qubits: usize) -> Result<(), QmathError> {
        let n = self.qubits();
        let distinct = targets
            .iter()
            .all(|&t| t < n && targets.iter().filter(|&&u| u == t).count() == 1);
        if targets.len() != gate_qubits || !distinct {
            return Err(QmathError::BadTargets {
                targets: targets.to_vec(),
                qubits: n,
            });
        }
        Ok(())
    }

    /// `ρ → Ũ ρ Ũ†` with `u` acting on `targets` (in the order given) and
    /// identity elsewhere.  Rejects operators whose unitarity residual
    /// exceeds the loose tolerance.
    pub fn apply_unitary(
        &self,
        u: &SquareMatrix<T>,
        targets: &[usize],
    ) -> Result<Self, QmathError> {
        self.check_targets(targets, u.qubits())?;
        let residual = u.unitarity_residual();
        if residual > T::loose_tol() {
            return Err(QmathError::NotUnitary {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        let left = apply_left(&self.mat, u, targets);
        let out = apply_right_dagger(&left, u, targets);
        Ok(DensityMatrix::from_matrix_unchecked(out))
    }

    /// Reduced state on `keep`, which must be non-empty, strictly increasing
    /// and within range.  Keeping every qubit returns the state unchanged.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, QmathError> {
        Ok(DensityMatrix::from_matrix_unchecked(partial_trace_raw(
            &self.mat, keep,
        )?))
    }

    /// Samples a projective measurement of a single-qubit projector set on
    /// `target`.  The set must be complete (`ΣPᵢ = I`) and orthogonal within
    /// the loose tolerance.
    pub fn projective_measure<R: Rng + ?Sized>(
        &self,
        projectors: &[SquareMatrix<T>],
        target: usize,
        rng: &mut R,
    ) -> Result<Measurement<T>, QmathError> {
        self.check_targets(&[target], 1)?;
        check_projector_set(projectors)?;
        let probs: Vec<T> = projectors
            .iter()
            .map(|p| self.branch_probability(p, target))
            .collect();
        let u: f64 = rng.random();
        let mut acc = 0.0f64;
        let mut outcome = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p.to_f64().unwrap_or(0.0).max(0.0);
            if u < acc {
                outcome = i;
                break;
            }
        }
        let prob = probs[outcome];
        if prob < T::prob_floor() {
            return Err(QmathError::DegenerateBranch {
                prob: prob.to_f64().unwrap_or(f64::NAN),
            });
        }
        let post = self.collapse(&projectors[outcome], target, prob);
        Ok(Measurement {
            outcome,
            post_state: post,
            probability: prob,
        })
    }

    /// `Re tr(P̃ ρ)` for a single-qubit projector embedded on `target`.
    pub(crate) fn branch_probability(&self, projector: &SquareMatrix<T>, target: usize) -> T {
        let emb = Embedding::new(self.dim(), self.qubits(), &[target], projector.dim());
        let mut tr = c::<T>(0.0, 0.0);
        for i in 0..self.dim() {
            let base = i & !emb.mask;
            for b in 0..projector.dim() {
                tr += projector[(emb.gate_row[i], b)] * self.mat[(base | emb.scatter[b], i)];
            }
        }
        tr.re
    }

    /// `PᵢρPᵢ / prob` without re-sampling; `prob` must be the branch
    /// probability of `projector`.
    pub(crate) fn collapse(
        &self,
        projector: &SquareMatrix<T>,
        target: usize,
        prob: T,
    ) -> DensityMatrix<T> {
        DensityMatrix::from_matrix_unchecked(
            self.project_raw(projector, target).scale_re(T::one() / prob),
        )
    }

    /// Unnormalized `P̃ρP̃†` for a single-qubit projector on `target`.
    /// The result is not a density matrix; its trace is the branch weight.
    pub(crate) fn project_raw(
        &self,
        projector: &SquareMatrix<T>,
        target: usize,
    ) -> SquareMatrix<T> {
        let left = apply_left(&self.mat, projector, &[target]);
        apply_right_dagger(&left, projector, &[target])
    }

    /// `⟨ψ|ρ|ψ⟩` as a real number in `[0, 1]` up to rounding.
    pub fn fidelity(&self, psi: &PureState<T>) -> Result<T, QmathError> {
        if self.dim() != psi.dim() {
            return Err(QmathError::DimMismatch(self.dim(), psi.dim()));
        }
        let mut acc = c::<T>(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += psi.amplitudes()[i].conj() * self.mat[(i, j)] * psi.amplitudes()[j];
            }
        }
        debug_assert!(
            acc.im.abs() <= T::tight_tol(),
            "fidelity imaginary residual too large"
        );
        Ok(acc.re)
    }

    /// Real spectrum of the (symmetrized) matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        eigen::hermitian_eigenvalues(&self.mat)
    }

    /// Residual report for the three invariants at tolerance `tol`.
    pub fn validate(&self, tol: T) -> DensityDiagnostics<T> {
        let hermiticity_residual = self.mat.hermiticity_residual();
        let tr = self.mat.trace();
        let trace_deviation = ((tr.re - T::one()).abs()).max(tr.im.abs());
        let eigs = self.eigenvalues();
        let min_eigenvalue = eigs.first().copied().unwrap_or_else(T::zero);
        DensityDiagnostics {
            hermiticity_residual,
            trace_deviation,
            min_eigenvalue,
            hermitian_ok: hermiticity_residual <= tol,
            trace_ok: trace_deviation <= tol,
            psd_ok: min_eigenvalue >= -tol,
        }
    }
}

/// `Ũ m` for `u` embedded on `targets`.
pub(crate) fn apply_left<T: Scalar>(
    m: &SquareMatrix<T>,
    u: &SquareMatrix<T>,
    targets: &[usize],
) -> SquareMatrix<T> {
    let dim = m.dim();
    let emb = Embedding::new(dim, m.qubits(), targets, u.dim());
    let mut out = SquareMatrix::zeros(dim);
    for i in 0..dim {
        let base = i & !emb.mask;
        let row = emb.gate_row[i];
        for col in 0..dim {
            let mut acc = c::<T>(0.0, 0.0);
            for b in 0..u.dim() {
                acc += u[(row, b)] * m[(base | emb.scatter[b], col)];
            }
            out[(i, col)] = acc;
        }
    }
    out
}

/// `m Ũ†` for `u` embedded on `targets`.
pub(crate) fn apply_right_dagger<T: Scalar>(
    m: &SquareMatrix<T>,
    u: &SquareMatrix<T>,
    targets: &[usize],
) -> SquareMatrix<T> {
    let dim = m.dim();
    let emb = Embedding::new(dim, m.qubits(), targets, u.dim());
    let mut out = SquareMatrix::zeros(dim);
    for j in 0..dim {
        let base = j & !emb.mask;
        let row = emb.gate_row[j];
        for r in 0..dim {
            let mut acc = c::<T>(0.0, 0.0);
            for b in 0..u.dim() {
                acc += m[(r, base | emb.scatter[b])] * u[(row, b)].conj();
            }
            out[(r, j)] = acc;
        }
    }
    out
}

/// Partial trace on a raw matrix (not necessarily trace-one).
pub(crate) fn partial_trace_raw<T: Scalar>(
    mat: &SquareMatrix<T>,
    keep: &[usize],
) -> Result<SquareMatrix<T>, QmathError> {
    let n = mat.qubits();
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&q| q >= n) {
        return Err(QmathError::BadKeepList);
    }
    if keep.len() == n {
        return Ok(mat.clone());
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let shift = |q: usize| n - 1 - q;
    let kd = 1usize << keep.len();
    let td = 1usize << traced.len();
    let place = |bits: usize, qs: &[usize]| -> usize {
        let mut s = 0usize;
        for (j, &q) in qs.iter().enumerate() {
            s |= ((bits >> (qs.len() - 1 - j)) & 1) << shift(q);
        }
        s
    };
    let keep_scat: Vec<usize> = (0..kd).map(|i| place(i, keep)).collect();
    let tr_scat: Vec<usize> = (0..td).map(|t| place(t, &traced)).collect();
    let mut out = SquareMatrix::zeros(kd);
    for i in 0..kd {
        for j in 0..kd {
            let mut acc = c::<T>(0.0, 0.0);
            for &t in &tr_scat {
                acc += mat[(keep_scat[i] | t, keep_scat[j] | t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

fn check_projector_set<T: Scalar>(projectors: &[SquareMatrix<T>]) -> Result<(), QmathError> {
    if projectors.is_empty() {
        return Err(QmathError::BadProjectors { residual: f64::NAN });
    }
    let dim = projectors[0].dim();
    let mut residual = T::zero();
    let mut sum = SquareMatrix::zeros(dim);
    for p in projectors {
        if p.dim() != dim {
            return Err(QmathError::DimMismatch(p.dim(), dim));
        }
        residual = residual.max(p.hermiticity_residual());
        sum = sum.add(p).expect("same dimension");
    }
    residual = residual.max(sum.max_abs_diff(&SquareMatrix::identity(dim)));
    for (i, p) in projectors.iter().enumerate() {
        for (j, q) in projectors.iter().enumerate() {
            let prod = p.matmul(q).expect("same dimension");
            let expect = if i == j {
                p.clone()
            } else {
                SquareMatrix::zeros(dim)
            };
            residual = residual.max(prod.max_abs_diff(&expect));
        }
    }
    if residual > T::loose_tol() {
        return Err(QmathError::BadProjectors {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}
