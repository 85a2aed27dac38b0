//! Basis-convention bookkeeping.
//!
//! Each party assigns private phases `θ₀, θ₁` to the logical states, so a ket
//! `|σ⟩` in party P's convention relates to the shared reference convention
//! by `|σ⟩⁽ᴾ⁾ = e^{−iθ_σ}|σ⟩⁽ʳᵉᶠ⁾`.  Without synchronized clocks no party can
//! learn another's convention, and the simulator threads these angles through
//! every locally-executed gate to keep that honest.
//!
//! Phases are stored raw (not wrapped into a period) so drift studies can
//! exceed one period; wrapping is for reports only.  Global phases are never
//! normalized away in storage; state comparisons are always fidelity-based.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::qmath::{PureState, QmathError, SquareMatrix};
use crate::Scalar;

/// A party's private phase convention `(θ₀, θ₁)` relative to the reference
/// convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisFrame<T: Scalar> {
    pub theta0: T,
    pub theta1: T,
}

impl<T: Scalar> BasisFrame<T> {
    pub fn new(theta0: T, theta1: T) -> Self {
        BasisFrame { theta0, theta1 }
    }

    /// The reference convention itself.
    pub fn reference() -> Self {
        BasisFrame {
            theta0: T::zero(),
            theta1: T::zero(),
        }
    }

    /// Angles wrapped into `(−π, π]` for reporting.
    pub fn wrapped(&self) -> (T, T) {
        (wrap_angle(self.theta0), wrap_angle(self.theta1))
    }
}

fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = a % two_pi;
    if w > T::PI() {
        w -= two_pi;
    }
    if w <= -T::PI() {
        w += two_pi;
    }
    w
}

/// A party's syntonized clock: correct rate `ω`, unknown offset from the
/// reference clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockModel<T: Scalar> {
    /// Qubit transition angular frequency, rad/s.  Must be positive.
    pub omega: T,
    /// This party's clock reading minus the reference clock, seconds.
    pub offset: T,
}

impl<T: Scalar> ClockModel<T> {
    pub fn new(omega: T, offset: T) -> Result<Self, QmathError> {
        if omega <= T::zero() || !omega.is_finite() || !offset.is_finite() {
            return Err(QmathError::NonFinite);
        }
        Ok(ClockModel { omega, offset })
    }

    /// This clock's reading at reference time `t`.
    pub fn reading(&self, t: T) -> T {
        t + self.offset
    }

    /// Reference time at which this clock shows `reading`.
    pub fn reference_time(&self, reading: T) -> T {
        reading - self.offset
    }
}

/// The single residual phase of a distributed singlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSinglet<T: Scalar> {
    pub phi: T,
}

impl<T: Scalar> PhaseSinglet<T> {
    pub fn new(phi: T) -> Self {
        PhaseSinglet { phi }
    }

    pub fn state(&self) -> PureState<T> {
        phase_singlet(self.phi)
    }
}

/// Diagonal unitary with entries `e^{i(θ_σ^{from} − θ_σ^{to})}`, mapping kets
/// of the `from` convention onto kets of the `to` convention.
/// `frame_unitary(a, b)` is the adjoint of `frame_unitary(b, a)`.
pub fn frame_unitary<T: Scalar>(from: &BasisFrame<T>, to: &BasisFrame<T>) -> SquareMatrix<T> {
    SquareMatrix::diagonal(&[
        Complex::from_polar(T::one(), from.theta0 - to.theta0),
        Complex::from_polar(T::one(), from.theta1 - to.theta1),
    ])
    .unwrap()
}

/// `U op U†`: the matrix of `op` transported by the frame change `u_frame`.
pub fn conjugate_to_frame<T: Scalar>(
    op: &SquareMatrix<T>,
    u_frame: &SquareMatrix<T>,
) -> Result<SquareMatrix<T>, QmathError> {
    let residual = u_frame.unitarity_residual();
    if residual > T::loose_tol() {
        return Err(QmathError::NotUnitary {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    op.conjugate_by(u_frame)
}

/// Reference-convention matrix of a single-qubit gate that a party executes
/// in its own convention.
///
/// A state array `v` in the reference convention reads `D v` in the party's
/// convention with `D = diag(e^{iθ_σ})`, so the executed gate `G` acts on the
/// stored array as `D† G D = U G U†` with `U = frame_unitary(reference, frame)`.
pub fn gate_in_frame<T: Scalar>(
    gate: &SquareMatrix<T>,
    frame: &BasisFrame<T>,
) -> Result<SquareMatrix<T>, QmathError> {
    conjugate_to_frame(gate, &frame_unitary(&BasisFrame::reference(), frame))
}

/// Two-qubit variant of [`gate_in_frame`] for a gate both of whose qubits
/// belong to the same party.
pub fn two_qubit_gate_in_frame<T: Scalar>(
    gate: &SquareMatrix<T>,
    frame: &BasisFrame<T>,
) -> Result<SquareMatrix<T>, QmathError> {
    let u = frame_unitary(&BasisFrame::reference(), frame);
    let uu = crate::qmath::tensor_product(&u, &u)?;
    conjugate_to_frame(gate, &uu)
}

/// The time-delay operator `diag(1, e^{−iω·δt})`: precession accumulated on
/// `|1⟩` over an execution-time offset `δt`.
pub fn time_delay_operator<T: Scalar>(omega: T, delta_t: T) -> SquareMatrix<T> {
    SquareMatrix::diagonal(&[
        Complex::new(T::one(), T::zero()),
        Complex::from_polar(T::one(), -omega * delta_t),
    ])
    .unwrap()
}

/// The effective singlet phase
/// `φ = θ₀^A + θ₁^B − θ₁^A − θ₀^B − ω·δt`, returned unreduced.
pub fn effective_phase<T: Scalar>(
    frame_a: &BasisFrame<T>,
    frame_b: &BasisFrame<T>,
    omega: T,
    delta_t: T,
) -> T {
    frame_a.theta0 + frame_b.theta1 - frame_a.theta1 - frame_b.theta0 - omega * delta_t
}

/// The singlet as written in the parties' local conventions, expressed in
/// reference-convention amplitudes:
/// `(e^{−i(θ₁ᴬ+θ₀ᴮ)}|10⟩ − e^{−i(θ₀ᴬ+θ₁ᴮ)}|01⟩)/√2`.
///
/// This is the state purification converges to; local measurements see it as
/// the plain singlet with no residual phase.
pub fn local_singlet<T: Scalar>(frame_a: &BasisFrame<T>, frame_b: &BasisFrame<T>) -> PureState<T> {
    let h = T::real(std::f64::consts::FRAC_1_SQRT_2);
    let amps = vec![
        Complex::new(T::zero(), T::zero()),
        -Complex::from_polar(h, -(frame_a.theta0 + frame_b.theta1)),
        Complex::from_polar(h, -(frame_a.theta1 + frame_b.theta0)),
        Complex::new(T::zero(), T::zero()),
    ];
    PureState::new(amps).expect("normalized by construction")
}

/// The phase-offset singlet `(|10⟩ − e^{iφ}|01⟩)/√2`, Alice = qubit 0.
pub fn phase_singlet<T: Scalar>(phi: T) -> PureState<T> {
    let h = T::real(std::f64::consts::FRAC_1_SQRT_2);
    let amps = vec![
        Complex::new(T::zero(), T::zero()),
        -Complex::from_polar(h, phi),
        Complex::new(h, T::zero()),
        Complex::new(T::zero(), T::zero()),
    ];
    PureState::new(amps).expect("normalized by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{self, gates, DensityMatrix};

    type F = BasisFrame<f64>;

    #[test]
    fn frame_unitary_identity_when_frames_match() {
        let f = F::new(0.3, -1.2);
        let u = frame_unitary(&f, &f);
        assert!(u.max_abs_diff(&SquareMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn frame_unitary_example_and_inverse_pair() {
        let a = F::new(0.0, 0.0);
        let b = F::new(0.0, std::f64::consts::PI);
        let u = frame_unitary(&a, &b);
        // diag(1, e^{−iπ}) = diag(1, −1)
        assert!((u[(0, 0)] - qmath::gates::identity::<f64>(2)[(0, 0)]).norm() < 1e-15);
        assert!((u[(1, 1)].re + 1.0).abs() < 1e-12);
        assert!(u[(1, 1)].im.abs() < 1e-12);

        let ab = frame_unitary(&a, &b);
        let ba = frame_unitary(&b, &a);
        assert!(ab.max_abs_diff(&ba.dagger()) < 1e-15);
        let prod = ab.matmul(&ba).unwrap();
        assert!(prod.max_abs_diff(&SquareMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn conjugation_examples() {
        let alpha = 0.77;
        let d = gates::phase::<f64>(alpha);
        // Diagonals commute: Z is untouched.
        let z = gates::pauli_z::<f64>();
        assert!(conjugate_to_frame(&z, &d).unwrap().max_abs_diff(&z) < 1e-15);
        // Identity is untouched by anything.
        let i2 = SquareMatrix::identity(2);
        assert!(conjugate_to_frame(&i2, &d).unwrap().max_abs_diff(&i2) < 1e-15);
        // X picks up the phases: [[0, e^{−iα}], [e^{iα}, 0]].
        let x = gates::pauli_x::<f64>();
        let got = conjugate_to_frame(&x, &d).unwrap();
        assert!((got[(0, 1)] - Complex::from_polar(1.0, -alpha)).norm() < 1e-15);
        assert!((got[(1, 0)] - Complex::from_polar(1.0, alpha)).norm() < 1e-15);
        // Non-unitary conjugators are rejected.
        let bad = d.scale_re(2.0);
        assert!(conjugate_to_frame(&x, &bad).is_err());
    }

    #[test]
    fn time_delay_examples() {
        let t0 = time_delay_operator::<f64>(1.0, 0.0);
        assert!(t0.max_abs_diff(&SquareMatrix::identity(2)) < 1e-15);

        let half = time_delay_operator::<f64>(std::f64::consts::PI, 1.0);
        assert!((half[(1, 1)].re + 1.0).abs() < 1e-12);

        // Cs clock transition: ω·δt ≈ 1 rad at δt = 17.3 ps.
        let omega = 2.0 * std::f64::consts::PI * 9.192_631_770e9;
        let phase = omega * 17.3e-12;
        assert!((phase - 1.0).abs() < 0.01, "got {phase}");
    }

    #[test]
    fn effective_phase_examples_and_antisymmetry() {
        let zero = F::new(0.0, 0.0);
        assert_eq!(effective_phase(&zero, &zero, 1.0, 0.0), 0.0);

        let a = F::new(0.3, 0.1);
        let b = F::new(0.2, 0.5);
        assert!((effective_phase(&a, &b, 1.0, 0.0) - 0.5).abs() < 1e-15);

        let same = F::new(0.4, 0.4);
        assert!((effective_phase(&same, &same, 1.0, 0.7) + 0.7).abs() < 1e-15);

        // Swapping parties with δt → −δt flips the sign.
        for (dt, fa, fb) in [(0.2, a, b), (-1.3, b, same)] {
            let lhs = effective_phase(&fa, &fb, 1.0, dt);
            let rhs = -effective_phase(&fb, &fa, 1.0, -dt);
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_singlet_examples() {
        // The newtype wraps the same construction.
        let wrapped = PhaseSinglet::new(0.7f64).state();
        assert_eq!(wrapped, phase_singlet(0.7));

        // φ = 0: the plain singlet.
        let s0 = phase_singlet::<f64>(0.0);
        assert!((s0.amplitudes()[2].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s0.amplitudes()[1].re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);

        // φ = π: the ψ⁺ triplet.
        let spi = phase_singlet::<f64>(std::f64::consts::PI);
        let psi_plus = PureState::normalized(vec![
            Complex::new(0.0, 0.0),
            Complex::new(1.0, 0.0),
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 0.0),
        ])
        .unwrap();
        assert!(spi.overlap(&psi_plus).unwrap() > 1.0 - 1e-12);

        // Fidelity to the plain singlet is cos²(φ/2); 0.5 at φ = π/2.
        for phi in [0.0, 0.4, std::f64::consts::FRAC_PI_2, 2.5] {
            let f = phase_singlet::<f64>(phi).overlap(&s0).unwrap();
            assert!((f - (phi / 2.0).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn global_frame_shift_leaves_singlet_invariant() {
        // A common convention shift applied identically to both qubits only
        // changes the global phase; fidelity with the original is 1.
        let s0 = phase_singlet::<f64>(0.0);
        let rho = DensityMatrix::from_pure(&s0);
        for (t0, t1) in [(0.9, -0.4), (2.2, 0.0), (-1.0, 3.3)] {
            let shift = frame_unitary(&F::new(t0, t1), &F::reference());
            let both = qmath::tensor_product(&shift, &shift).unwrap();
            let rot = rho.apply_unitary(&both, &[0, 1]).unwrap();
            assert!((rot.fidelity(&s0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delay_operator_consistent_with_effective_phase() {
        // The ω·δt term of the effective phase is realized by the delay
        // operator acting on Bob's qubit: T_B(ω, δt) |ψ⁻_{φ+ωδt}⟩ ≍ |ψ⁻_φ⟩,
        // equivalently T_A(ω, −δt) on Alice's.  (The sign convention is fixed
        // by the φ formula; see the harness docs.)
        let omega = 1.0;
        let dt = 0.37;
        let phi = 0.25;
        let target = DensityMatrix::from_pure(&phase_singlet::<f64>(phi));
        let start = DensityMatrix::from_pure(&phase_singlet::<f64>(phi + omega * dt));

        let on_bob = start
            .apply_unitary(&time_delay_operator(omega, dt), &[1])
            .unwrap();
        assert!((on_bob.fidelity(&phase_singlet(phi)).unwrap() - 1.0).abs() < 1e-12);

        let on_alice = start
            .apply_unitary(&time_delay_operator(omega, -dt), &[0])
            .unwrap();
        assert!(on_alice.matrix().max_abs_diff(target.matrix()) < 1e-12);
    }
}
