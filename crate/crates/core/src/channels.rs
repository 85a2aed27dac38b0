//! The depolarizing channel, the local Bell basis, and the 12-element
//! bilateral twirl group.
//!
//! Averaging a two-qubit state over random bilateral rotations (the same
//! single-qubit rotation applied to both halves of a pair) projects it onto
//! Werner form: the singlet weight is preserved and the three triplet weights
//! are equalized.  The continuous average can be replaced by a finite group
//! generated by `G_M = √M ⊗ √M` for `M ∈ {I, X, Y, Z}`; the twelve products
//! below act on the triplet subspace as the rotation group of the
//! tetrahedron, whose three-dimensional representation is irreducible, which
//! is exactly what makes the uniform average a Werner projection.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::frames::phase_singlet;
use crate::qmath::{gates, tensor_product, DensityMatrix, PureState, QmathError, SquareMatrix};
use crate::Scalar;

/// Errors from the channel layer.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ChannelError {
    #[error("noise probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("fidelity {0} outside [0, 1]")]
    BadFidelity(f64),
    #[error("twirl output is not Bell-diagonal (off-diagonal residual {residual:e})")]
    NotBellDiagonal { residual: f64 },
    #[error(transparent)]
    Qmath(#[from] QmathError),
}

/// Depolarizing noise strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel<T: Scalar> {
    p: T,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn new(p: T) -> Result<Self, ChannelError> {
        if !(T::zero()..=T::one()).contains(&p) || !p.is_finite() {
            return Err(ChannelError::BadProbability(p.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(NoiseModel { p })
    }

    pub fn probability(&self) -> T {
        self.p
    }
}

/// Weights on the four local-basis Bell projectors, in the order
/// `(ψ⁻, ψ⁺, φ⁻, φ⁺)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonal<T: Scalar> {
    pub w_psi_minus: T,
    pub w_psi_plus: T,
    pub w_phi_minus: T,
    pub w_phi_plus: T,
}

impl<T: Scalar> BellDiagonal<T> {
    pub fn new(w_psi_minus: T, w_psi_plus: T, w_phi_minus: T, w_phi_plus: T) -> Self {
        let bd = BellDiagonal {
            w_psi_minus,
            w_psi_plus,
            w_phi_minus,
            w_phi_plus,
        };
        debug_assert!(
            bd.weight_sum_deviation() <= T::loose_tol(),
            "weights must sum to 1"
        );
        debug_assert!(
            bd.weights().iter().all(|&w| w >= -T::tight_tol()),
            "weights must be non-negative"
        );
        bd
    }

    pub fn weights(&self) -> [T; 4] {
        [
            self.w_psi_minus,
            self.w_psi_plus,
            self.w_phi_minus,
            self.w_phi_plus,
        ]
    }

    pub fn weight_sum_deviation(&self) -> T {
        (self.weights().iter().copied().sum::<T>() - T::one()).abs()
    }

    /// Reassembles the full matrix `Σ wᵢ |bᵢ⟩⟨bᵢ|`.
    pub fn to_density(&self) -> DensityMatrix<T> {
        let basis = bell_basis();
        let mut acc = SquareMatrix::zeros(4);
        for (w, b) in self.weights().into_iter().zip(basis.iter()) {
            let proj = DensityMatrix::from_pure(b);
            acc = acc
                .add(&proj.matrix().scale_re(w))
                .expect("same dimension");
        }
        DensityMatrix::from_matrix_unchecked(acc)
    }
}

/// The four Bell states in the fixed order `(ψ⁻, ψ⁺, φ⁻, φ⁺)`:
/// `ψ∓ = (|10⟩ ∓ |01⟩)/√2`, `φ∓ = (|00⟩ ∓ |11⟩)/√2`.
pub fn bell_basis<T: Scalar>() -> [PureState<T>; 4] {
    let h = T::real(std::f64::consts::FRAC_1_SQRT_2);
    let z = Complex::new(T::zero(), T::zero());
    let ph = Complex::new(h, T::zero());
    let mh = Complex::new(-h, T::zero());
    let mk = |amps: [Complex<T>; 4]| PureState::new(amps.to_vec()).unwrap();
    [
        mk([z, mh, ph, z]),
        mk([z, ph, ph, z]),
        mk([ph, z, z, mh]),
        mk([ph, z, z, ph]),
    ]
}

/// One element of the bilateral twirl group.
#[derive(Debug, Clone)]
pub struct TwirlElement<T: Scalar> {
    /// The single-qubit rotation each party applies to its half.
    pub local: SquareMatrix<T>,
    /// The combined two-qubit operator `local ⊗ local`.
    pub bilateral: SquareMatrix<T>,
}

/// The 12-element twirl group.  Immutable once built; share it freely.
#[derive(Debug, Clone)]
pub struct TwirlGroup<T: Scalar> {
    elements: Vec<TwirlElement<T>>,
}

impl<T: Scalar> TwirlGroup<T> {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[TwirlElement<T>] {
        &self.elements
    }

    /// Uniformly samples one element index from a shared stream.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.elements.len())
    }
}

/// Builds the 12-element group: with `G_M = √M ⊗ √M`, the products
/// `{G_I, G_X G_Y, G_Y G_Z, G_Z G_X, (G_X G_Y)², (G_Y G_Z)², (G_Z G_X)²,
///   G_X G_Z, (G_X G_Z)², G_X², G_Y², G_Z²}`,
/// using principal square roots throughout.  Every element is unitary and
/// leaves the singlet invariant up to a unit phase.
pub fn twirl_group<T: Scalar>() -> TwirlGroup<T> {
    let roots = [
        gates::identity::<T>(2),
        gates::sqrt_x(),
        gates::sqrt_y(),
        gates::sqrt_z(),
    ];
    // A word lists the roots in the order the parties apply them, so the
    // matrix product composes right-to-left.  Reading the words as plain
    // matrix products instead collapses two of the twelve rotations onto the
    // same triplet action and the average stops being a twirl.
    let prod = |factors: &[usize]| -> SquareMatrix<T> {
        factors.iter().fold(SquareMatrix::identity(2), |acc, &f| {
            roots[f].matmul(&acc).expect("2x2 product")
        })
    };
    const I: usize = 0;
    const X: usize = 1;
    const Y: usize = 2;
    const Z: usize = 3;
    let words: [&[usize]; 12] = [
        &[I],
        &[X, Y],
        &[Y, Z],
        &[Z, X],
        &[X, Y, X, Y],
        &[Y, Z, Y, Z],
        &[Z, X, Z, X],
        &[X, Z],
        &[X, Z, X, Z],
        &[X, X],
        &[Y, Y],
        &[Z, Z],
    ];
    let singlet = phase_singlet(T::zero());
    let elements = words
        .iter()
        .map(|w| {
            let local = prod(w);
            let bilateral = tensor_product(&local, &local).expect("4x4");
            debug_assert!(bilateral.unitarity_residual() <= T::loose_tol());
            debug_assert!({
                let rotated = singlet.apply(&bilateral).expect("dims match");
                (rotated.overlap(&singlet).expect("dims match") - T::one()).abs()
                    <= T::loose_tol()
            });
            TwirlElement { local, bilateral }
        })
        .collect();
    TwirlGroup { elements }
}

/// The depolarizing channel `ρ → (p/4)·I + (1−p)·ρ`.
pub fn depolarize<T: Scalar>(rho: &DensityMatrix<T>, noise: &NoiseModel<T>) -> DensityMatrix<T> {
    let p = noise.probability();
    let mixed = SquareMatrix::identity(rho.dim()).scale_re(p / T::from_usize(rho.dim()).unwrap());
    let kept = rho.matrix().scale_re(T::one() - p);
    DensityMatrix::from_matrix_unchecked(mixed.add(&kept).expect("same dimension"))
}

/// Diagonal Bell-basis weights plus the Frobenius norm of the discarded
/// off-diagonal part.
pub fn bell_weights<T: Scalar>(rho: &DensityMatrix<T>) -> (BellDiagonal<T>, T) {
    let basis = bell_basis::<T>();
    // ρ in the Bell basis: entries ⟨bᵢ|ρ|bⱼ⟩.
    let mut in_bell = SquareMatrix::zeros(4);
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for r in 0..4 {
                for s in 0..4 {
                    acc += bi.amplitudes()[r].conj() * rho.matrix()[(r, s)] * bj.amplitudes()[s];
                }
            }
            in_bell[(i, j)] = acc;
        }
    }
    let mut off = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                off += in_bell[(i, j)].norm_sqr();
            }
        }
    }
    let bd = BellDiagonal {
        w_psi_minus: in_bell[(0, 0)].re,
        w_psi_plus: in_bell[(1, 1)].re,
        w_phi_minus: in_bell[(2, 2)].re,
        w_phi_plus: in_bell[(3, 3)].re,
    };
    (bd, off.sqrt())
}

/// Deterministic twirl: the uniform average `(1/12) Σₙ Bₙ ρ Bₙ†` of the full
/// group, decomposed in the Bell basis.  Errors if the average is not
/// Bell-diagonal, which would indicate a broken group table.
pub fn twirl<T: Scalar>(rho: &DensityMatrix<T>) -> Result<BellDiagonal<T>, ChannelError> {
    let group = twirl_group::<T>();
    let avg = twirl_average(rho, &group)?;
    let (bd, residual) = bell_weights(&avg);
    if residual > T::loose_tol() * T::real(100.0) {
        return Err(ChannelError::NotBellDiagonal {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(bd)
}

/// The averaged matrix itself, for callers that need more than the weights.
pub fn twirl_average<T: Scalar>(
    rho: &DensityMatrix<T>,
    group: &TwirlGroup<T>,
) -> Result<DensityMatrix<T>, ChannelError> {
    let mut acc = SquareMatrix::zeros(4);
    for el in group.elements() {
        let rotated = rho.apply_unitary(&el.bilateral, &[0, 1])?;
        acc = acc.add(rotated.matrix()).expect("same dimension");
    }
    let weight = T::one() / T::from_usize(group.len()).unwrap();
    Ok(DensityMatrix::from_matrix_unchecked(acc.scale_re(weight)))
}

/// Closed form for the twirl of the depolarized phase-offset singlet:
/// singlet weight `p/4 + (1−p)cos²(φ/2)`, each other weight
/// `p/4 + (1−p)sin²(φ/2)/3`.
pub fn twirled_weights_closed_form<T: Scalar>(p: T, phi: T) -> BellDiagonal<T> {
    let quarter = T::real(0.25);
    let third = T::one() / T::real(3.0);
    let c2 = (phi / T::real(2.0)).cos().powi(2);
    let s2 = T::one() - c2;
    let w_singlet = p * quarter + (T::one() - p) * c2;
    let w_other = p * quarter + (T::one() - p) * s2 * third;
    BellDiagonal {
        w_psi_minus: w_singlet,
        w_psi_plus: w_other,
        w_phi_minus: w_other,
        w_phi_plus: w_other,
    }
}

/// Singlet fidelity of the depolarized phase-offset singlet:
/// `F(p, φ) = p/4 + (1−p)cos²(φ/2)`.
pub fn singlet_fidelity_closed_form<T: Scalar>(p: T, phi: T) -> T {
    p * T::real(0.25) + (T::one() - p) * (phi / T::real(2.0)).cos().powi(2)
}

/// The Werner state `F·|ψ⁻⟩⟨ψ⁻| + (1−F)/3·(I − |ψ⁻⟩⟨ψ⁻|)`.
pub fn werner_from_fidelity<T: Scalar>(f: T) -> Result<DensityMatrix<T>, ChannelError> {
    if !(T::zero()..=T::one()).contains(&f) || !f.is_finite() {
        return Err(ChannelError::BadFidelity(f.to_f64().unwrap_or(f64::NAN)));
    }
    let singlet = DensityMatrix::from_pure(&phase_singlet(T::zero()));
    let rest = SquareMatrix::identity(4)
        .sub(singlet.matrix())
        .expect("same dimension")
        .scale_re((T::one() - f) / T::real(3.0));
    let mat = singlet
        .matrix()
        .scale_re(f)
        .add(&rest)
        .expect("same dimension");
    Ok(DensityMatrix::from_matrix_unchecked(mat))
}

/// The depolarized phase-offset singlet `(p/4)·I + (1−p)·|ψ⁻_φ⟩⟨ψ⁻_φ|`.
pub fn depolarized_phase_singlet<T: Scalar>(
    p: T,
    phi: T,
) -> Result<DensityMatrix<T>, ChannelError> {
    let noise = NoiseModel::new(p)?;
    Ok(depolarize(
        &DensityMatrix::from_pure(&phase_singlet(phi)),
        &noise,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn depolarize_limits() {
        let singlet = DensityMatrix::from_pure(&phase_singlet::<f64>(0.0));
        let p0 = depolarize(&singlet, &NoiseModel::new(0.0).unwrap());
        assert!(p0.matrix().max_abs_diff(singlet.matrix()) == 0.0);

        let p1 = depolarize(&singlet, &NoiseModel::new(1.0).unwrap());
        assert!(
            p1.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(4).matrix())
                < 1e-15
        );

        // p = 0.2 leaves singlet fidelity 0.05 + 0.8 = 0.85.
        let p02 = depolarize(&singlet, &NoiseModel::new(0.2).unwrap());
        let f = p02.fidelity(&phase_singlet(0.0)).unwrap();
        assert!((f - 0.85).abs() < 1e-14);

        assert!(NoiseModel::new(-0.1).is_err());
        assert!(NoiseModel::new(1.1).is_err());
    }

    #[test]
    fn group_has_twelve_singlet_preserving_unitaries() {
        let g = twirl_group::<f64>();
        assert_eq!(g.len(), 12);
        assert!(
            g.elements()[0]
                .bilateral
                .max_abs_diff(&SquareMatrix::identity(4))
                < 1e-15
        );
        let singlet = phase_singlet::<f64>(0.0);
        for el in g.elements() {
            assert!(el.bilateral.unitarity_residual() < 1e-14);
            let rotated = singlet.apply(&el.bilateral).unwrap();
            // ∝ |ψ⁻⟩ with unit amplitude.
            assert!((rotated.overlap(&singlet).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn group_actions_are_pairwise_distinct() {
        // Twelve distinct conjugation actions; coincidences would leave the
        // average short of a full twirl.
        let g = twirl_group::<f64>();
        // A state with no special symmetry axis; symmetric probes (like the
        // phase singlet) cannot tell some rotations apart.
        let probe = DensityMatrix::from_pure(
            &crate::qmath::PureState::normalized(vec![
                c(0.15, 0.05),
                c(0.40, -0.20),
                c(0.55, 0.10),
                c(0.30, 0.65),
            ])
            .unwrap(),
        );
        let images: Vec<_> = g
            .elements()
            .iter()
            .map(|el| probe.apply_unitary(&el.bilateral, &[0, 1]).unwrap())
            .collect();
        for i in 0..images.len() {
            for j in (i + 1)..images.len() {
                assert!(
                    images[i].matrix().max_abs_diff(images[j].matrix()) > 1e-6,
                    "elements {i} and {j} act identically"
                );
            }
        }
    }

    #[test]
    fn group_permutes_triplet_projectors() {
        let g = twirl_group::<f64>();
        let basis = bell_basis::<f64>();
        let triplet = [&basis[1], &basis[2], &basis[3]];
        for el in g.elements() {
            for t in triplet {
                let rotated = DensityMatrix::from_pure(t)
                    .apply_unitary(&el.bilateral, &[0, 1])
                    .unwrap();
                // The image must be one of the triplet projectors again.
                let matches = triplet
                    .iter()
                    .filter(|u| {
                        rotated
                            .matrix()
                            .max_abs_diff(DensityMatrix::from_pure(u).matrix())
                            < 1e-12
                    })
                    .count();
                assert_eq!(matches, 1);
            }
        }
    }

    #[test]
    fn twirl_fixes_maximally_mixed() {
        let bd = twirl(&DensityMatrix::<f64>::maximally_mixed(4)).unwrap();
        for w in bd.weights() {
            assert!((w - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn twirl_matches_closed_form_spot_check() {
        // p = 0.2, φ = π/3: singlet weight 0.65, the rest 0.11666…
        let rho = depolarized_phase_singlet::<f64>(0.2, std::f64::consts::FRAC_PI_3).unwrap();
        let bd = twirl(&rho).unwrap();
        assert!((bd.w_psi_minus - 0.65).abs() < 1e-12);
        for w in [bd.w_psi_plus, bd.w_phi_minus, bd.w_phi_plus] {
            assert!((w - 0.7 / 6.0).abs() < 1e-12);
        }
        let closed = twirled_weights_closed_form(0.2, std::f64::consts::FRAC_PI_3);
        for (a, b) in bd.weights().into_iter().zip(closed.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn twirl_idempotent() {
        let rho = depolarized_phase_singlet::<f64>(0.3, 0.8).unwrap();
        let once = twirl(&rho).unwrap();
        let again = twirl(&once.to_density()).unwrap();
        for (a, b) in once.weights().into_iter().zip(again.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn twirl_preserves_singlet_fidelity() {
        let singlet = phase_singlet::<f64>(0.0);
        for (p, phi) in [(0.0, 0.3), (0.4, 1.2), (0.9, 2.0), (0.15, -0.7)] {
            let rho = depolarized_phase_singlet(p, phi).unwrap();
            let f = rho.fidelity(&singlet).unwrap();
            let bd = twirl(&rho).unwrap();
            assert!((f - bd.w_psi_minus).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_twirl_agrees_in_expectation() {
        // Averaging single sampled rotations over many draws converges to
        // the deterministic group average.
        let rho = depolarized_phase_singlet::<f64>(0.2, 0.9).unwrap();
        let group = twirl_group::<f64>();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let trials = 60_000usize;
        let mut acc = SquareMatrix::zeros(4);
        for _ in 0..trials {
            let el = &group.elements()[group.sample_index(&mut rng)];
            let rotated = rho.apply_unitary(&el.bilateral, &[0, 1]).unwrap();
            acc = acc.add(rotated.matrix()).unwrap();
        }
        let sampled = acc.scale_re(1.0 / trials as f64);
        let exact = twirl_average(&rho, &group).unwrap();
        // Monte Carlo error ~ 1/√trials on each entry.
        assert!(sampled.max_abs_diff(exact.matrix()) < 0.01);
    }

    #[test]
    fn bell_weights_examples() {
        let singlet = DensityMatrix::from_pure(&phase_singlet::<f64>(0.0));
        let (bd, res) = bell_weights(&singlet);
        assert!((bd.w_psi_minus - 1.0).abs() < 1e-14);
        assert!(res < 1e-14);

        let (bd, res) = bell_weights(&DensityMatrix::<f64>::maximally_mixed(4));
        for w in bd.weights() {
            assert!((w - 0.25).abs() < 1e-14);
        }
        assert!(res < 1e-14);

        // |ψ⁻_φ⟩: weights (cos², sin², 0, 0); off-diagonal Frobenius |sin φ|/√2.
        for phi in [0.3f64, 1.1, 2.7] {
            let rho = DensityMatrix::from_pure(&phase_singlet(phi));
            let (bd, res) = bell_weights(&rho);
            assert!((bd.w_psi_minus - (phi / 2.0).cos().powi(2)).abs() < 1e-12);
            assert!((bd.w_psi_plus - (phi / 2.0).sin().powi(2)).abs() < 1e-12);
            assert!(bd.w_phi_minus.abs() < 1e-13 && bd.w_phi_plus.abs() < 1e-13);
            assert!((res - phi.sin().abs() / std::f64::consts::SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn werner_construction() {
        let pure = werner_from_fidelity::<f64>(1.0).unwrap();
        assert!(
            pure.matrix()
                .max_abs_diff(DensityMatrix::from_pure(&phase_singlet(0.0)).matrix())
                < 1e-15
        );
        let mixed = werner_from_fidelity::<f64>(0.25).unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(4).matrix())
                < 1e-15
        );
        // F = 0.9: eigenvalues (1/30, 1/30, 1/30, 0.9).
        let w = werner_from_fidelity::<f64>(0.9).unwrap();
        let eigs = w.eigenvalues();
        assert!((eigs[3] - 0.9).abs() < 1e-12);
        for e in &eigs[..3] {
            assert!((e - 1.0 / 30.0).abs() < 1e-12);
        }
        assert!(werner_from_fidelity::<f64>(1.2).is_err());
    }

    #[test]
    fn f32_twirl_closed_form_within_f32_tolerance() {
        let rho = depolarized_phase_singlet::<f32>(0.2, 0.9).unwrap();
        let bd = twirl(&rho).unwrap();
        let closed = twirled_weights_closed_form::<f32>(0.2, 0.9);
        for (a, b) in bd.weights().into_iter().zip(closed.weights()) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
