//! BBPSSW entanglement purification.
//!
//! One round takes two shared pairs, applies a fresh random bilateral
//! rotation to each (predecided by the parties from a shared seed), converts
//! the singlet-fraction form to the φ⁺-fraction form with a one-sided σy,
//! runs the bilateral CNOT, measures both target qubits in the computational
//! basis, postselects on coinciding outcomes and converts the kept pair back.
//! Every gate a party performs is expressed in that party's private basis
//! convention; nothing in the circuit references the other party's frame.
//!
//! The analytic counterpart is the fidelity recurrence
//! `F' = (F² + (1−F)²/9) / (F² + 2F(1−F)/3 + 5(1−F)²/9)`, whose denominator
//! is the success probability of the round on Werner inputs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{twirl_group, ChannelError, TwirlGroup};
use crate::frames::{gate_in_frame, local_singlet, two_qubit_gate_in_frame, BasisFrame};
use crate::qmath::{
    self, gates, tensor_product, DensityMatrix, PureState, QmathError, SquareMatrix,
};
use crate::seed;
use crate::Scalar;

#[derive(Debug, Clone, thiserror::Error)]
pub enum PurifyError {
    #[error("fidelity {0} outside [0, 1]")]
    BadFidelity(f64),
    #[error("pair count {0} must be non-negative")]
    BadCount(f64),
    #[error("input pair rejected: {0}")]
    InvalidPair(String),
    #[error("ensemble exhausted at round {round}: {remaining} pair(s) left, need at least 2")]
    Exhausted { round: u32, remaining: usize },
    #[error(transparent)]
    Qmath(#[from] QmathError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// How surviving pair counts are accounted per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum YieldConvention {
    /// Halve the pair count each round (the convention the error budget
    /// uses).
    Ideal,
    /// Additionally multiply by the per-round success probability, as a real
    /// experiment would observe.
    Realistic,
}

/// Which representation a purification run works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleMode {
    Analytic,
    MonteCarlo,
}

/// A collection of shared pairs, either as a summary (fidelity, count) or as
/// explicit density matrices.
#[derive(Debug, Clone)]
pub enum PairEnsemble<T: Scalar> {
    Analytic { fidelity: T, count: T },
    MonteCarlo { pairs: Vec<DensityMatrix<T>> },
}

impl<T: Scalar> PairEnsemble<T> {
    pub fn analytic(fidelity: T, count: T) -> Result<Self, PurifyError> {
        if !(T::zero()..=T::one()).contains(&fidelity) || !fidelity.is_finite() {
            return Err(PurifyError::BadFidelity(
                fidelity.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if count < T::zero() || !count.is_finite() {
            return Err(PurifyError::BadCount(count.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(PairEnsemble::Analytic { fidelity, count })
    }

    /// Explicit ensemble; every pair must be a valid two-qubit state.
    pub fn monte_carlo(pairs: Vec<DensityMatrix<T>>) -> Result<Self, PurifyError> {
        for p in &pairs {
            check_pair(p)?;
        }
        Ok(PairEnsemble::MonteCarlo { pairs })
    }

    pub fn mode(&self) -> EnsembleMode {
        match self {
            PairEnsemble::Analytic { .. } => EnsembleMode::Analytic,
            PairEnsemble::MonteCarlo { .. } => EnsembleMode::MonteCarlo,
        }
    }
}

fn check_pair<T: Scalar>(pair: &DensityMatrix<T>) -> Result<(), PurifyError> {
    if pair.dim() != 4 {
        return Err(PurifyError::InvalidPair(format!(
            "expected a two-qubit pair, got dimension {}",
            pair.dim()
        )));
    }
    let diag = pair.validate(T::loose_tol());
    if !diag.pass() {
        return Err(PurifyError::InvalidPair(format!(
            "invariants violated (hermiticity {}, trace {}, min eigenvalue {})",
            diag.hermiticity_residual, diag.trace_deviation, diag.min_eigenvalue
        )));
    }
    Ok(())
}

/// One analytic purification step: `(F_next, success_prob)`.
pub fn recurrence_step<T: Scalar>(f: T) -> Result<(T, T), PurifyError> {
    if !(T::zero()..=T::one()).contains(&f) || !f.is_finite() {
        return Err(PurifyError::BadFidelity(f.to_f64().unwrap_or(f64::NAN)));
    }
    let g = T::one() - f;
    let third = T::one() / T::real(3.0);
    let ninth = T::one() / T::real(9.0);
    let numerator = f * f + g * g * ninth;
    let success = f * f + T::real(2.0) * f * g * third + T::real(5.0) * g * g * ninth;
    Ok((numerator / success, success))
}

/// Outcome of one sampled round on a specific pair of pairs.
#[derive(Debug, Clone)]
pub enum RoundOutcome<T: Scalar> {
    Success {
        state: DensityMatrix<T>,
        alice_bit: u8,
        bob_bit: u8,
    },
    Failure {
        alice_bit: u8,
        bob_bit: u8,
    },
}

impl<T: Scalar> RoundOutcome<T> {
    pub fn bits(&self) -> (u8, u8) {
        match self {
            RoundOutcome::Success {
                alice_bit, bob_bit, ..
            }
            | RoundOutcome::Failure {
                alice_bit, bob_bit, ..
            } => (*alice_bit, *bob_bit),
        }
    }

    pub fn succeeded(&self) -> bool {
        matches!(self, RoundOutcome::Success { .. })
    }
}

/// Precomputed circuit elements for one pair of party frames.
///
/// Joint-state qubit layout: `A1 = 0, B1 = 1, A2 = 2, B2 = 3`; pair 1 is
/// kept on success, pair 2 is measured.
pub struct BbpsswCircuit<T: Scalar> {
    group: TwirlGroup<T>,
    rotations_a: Vec<SquareMatrix<T>>,
    rotations_b: Vec<SquareMatrix<T>>,
    convert_a: SquareMatrix<T>,
    deconvert_a: SquareMatrix<T>,
    cnot_a: SquareMatrix<T>,
    cnot_b: SquareMatrix<T>,
    target: PureState<T>,
}

impl<T: Scalar> BbpsswCircuit<T> {
    pub fn new(frame_a: &BasisFrame<T>, frame_b: &BasisFrame<T>) -> Result<Self, PurifyError> {
        let group = twirl_group::<T>();
        let rotations_a = group
            .elements()
            .iter()
            .map(|el| gate_in_frame(&el.local, frame_a))
            .collect::<Result<Vec<_>, _>>()?;
        let rotations_b = group
            .elements()
            .iter()
            .map(|el| gate_in_frame(&el.local, frame_b))
            .collect::<Result<Vec<_>, _>>()?;
        let convert_a = gate_in_frame(&gates::pauli_y(), frame_a)?;
        let deconvert_a = convert_a.dagger();
        let cnot_a = two_qubit_gate_in_frame(&gates::cnot(), frame_a)?;
        let cnot_b = two_qubit_gate_in_frame(&gates::cnot(), frame_b)?;
        Ok(BbpsswCircuit {
            group,
            rotations_a,
            rotations_b,
            convert_a,
            deconvert_a,
            cnot_a,
            cnot_b,
            target: local_singlet(frame_a, frame_b),
        })
    }

    /// The local-basis singlet this circuit purifies towards.
    pub fn target(&self) -> &PureState<T> {
        &self.target
    }

    /// Joint state after the rotations for draws `(i1, i2)`, the conversion
    /// and the bilateral CNOTs, ready for target measurement.
    fn pre_measurement(
        &self,
        pair1: &DensityMatrix<T>,
        pair2: &DensityMatrix<T>,
        i1: usize,
        i2: usize,
    ) -> Result<DensityMatrix<T>, PurifyError> {
        let mut joint = tensor_to_density(pair1, pair2)?;
        joint = joint.apply_unitary(&self.rotations_a[i1], &[0])?;
        joint = joint.apply_unitary(&self.rotations_b[i1], &[1])?;
        joint = joint.apply_unitary(&self.rotations_a[i2], &[2])?;
        joint = joint.apply_unitary(&self.rotations_b[i2], &[3])?;
        joint = joint.apply_unitary(&self.convert_a, &[0])?;
        joint = joint.apply_unitary(&self.convert_a, &[2])?;
        joint = joint.apply_unitary(&self.cnot_a, &[0, 2])?;
        joint = joint.apply_unitary(&self.cnot_b, &[1, 3])?;
        Ok(joint)
    }

    /// One sampled round.  The rotation draws and measurement branches come
    /// from `rng`; both parties are assumed to derive the rotation part from
    /// their common predecided seed.
    pub fn round<R: Rng + ?Sized>(
        &self,
        pair1: &DensityMatrix<T>,
        pair2: &DensityMatrix<T>,
        rng: &mut R,
    ) -> Result<RoundOutcome<T>, PurifyError> {
        check_pair(pair1)?;
        check_pair(pair2)?;
        let i1 = self.group.sample_index(rng);
        let i2 = self.group.sample_index(rng);
        let joint = self.pre_measurement(pair1, pair2, i1, i2)?;

        let projectors = gates::computational_projectors::<T>();
        let alice = joint.projective_measure(&projectors, 2, rng)?;
        let bob = alice.post_state.projective_measure(&projectors, 3, rng)?;
        let alice_bit = alice.outcome as u8;
        let bob_bit = bob.outcome as u8;
        if alice_bit != bob_bit {
            return Ok(RoundOutcome::Failure { alice_bit, bob_bit });
        }
        let kept = bob.post_state.partial_trace(&[0, 1])?;
        let state = kept.apply_unitary(&self.deconvert_a, &[0])?;
        Ok(RoundOutcome::Success {
            state,
            alice_bit,
            bob_bit,
        })
    }

    /// Deterministic round average: exhausts all 12×12 rotation draws and
    /// both coinciding branches, returning the exact success probability and
    /// the expected kept state conditioned on success.
    ///
    /// On Werner(`F`) inputs this reproduces [`recurrence_step`] to near
    /// machine precision, which is the cross-check the Monte Carlo path is
    /// tested against.
    pub fn expected_round(
        &self,
        pair1: &DensityMatrix<T>,
        pair2: &DensityMatrix<T>,
    ) -> Result<(T, DensityMatrix<T>), PurifyError> {
        check_pair(pair1)?;
        check_pair(pair2)?;
        let projectors = gates::computational_projectors::<T>();
        let n = self.group.len();
        let mut kept_acc = SquareMatrix::<T>::zeros(4);
        let mut prob_acc = T::zero();
        for i1 in 0..n {
            for i2 in 0..n {
                let joint = self.pre_measurement(pair1, pair2, i1, i2)?;
                // Coinciding branches only: both targets 0 or both 1.
                for projector in &projectors {
                    let after_a = joint.project_raw(projector, 2);
                    let after_ab = qmath::apply_right_dagger(&after_a, projector, &[3]);
                    let both = qmath::apply_left(&after_ab, projector, &[3]);
                    let kept = qmath::partial_trace_raw(&both, &[0, 1])?;
                    prob_acc += kept.trace().re;
                    kept_acc = kept_acc.add(&kept).expect("same dimension");
                }
            }
        }
        let combos = T::from_usize(n * n).unwrap();
        let success_prob = prob_acc / combos;
        let state = DensityMatrix::from_matrix(kept_acc.scale_re(T::one() / prob_acc))
            .map_err(PurifyError::from)?;
        let state = state.apply_unitary(&self.deconvert_a, &[0])?;
        Ok((success_prob, state))
    }
}

fn tensor_to_density<T: Scalar>(
    pair1: &DensityMatrix<T>,
    pair2: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>, PurifyError> {
    let mat = tensor_product(pair1.matrix(), pair2.matrix())?;
    Ok(DensityMatrix::from_matrix(mat)?)
}

/// One sampled BBPSSW round on two shared pairs, with all of each party's
/// gates expressed in that party's own basis convention.
pub fn bbpssw_round_mc<T: Scalar, R: Rng + ?Sized>(
    pair1: &DensityMatrix<T>,
    pair2: &DensityMatrix<T>,
    frame_a: &BasisFrame<T>,
    frame_b: &BasisFrame<T>,
    rng: &mut R,
) -> Result<RoundOutcome<T>, PurifyError> {
    BbpsswCircuit::new(frame_a, frame_b)?.round(pair1, pair2, rng)
}

/// Result of one Monte Carlo round over a whole ensemble.
#[derive(Debug, Clone)]
pub struct McRoundOutput<T: Scalar> {
    /// Kept pairs in pairing order, followed by an odd unpaired carry if the
    /// input count was odd.
    pub survivors: Vec<DensityMatrix<T>>,
    pub attempts: usize,
    pub successes: usize,
    /// Per-attempt measurement bits, in pairing order (the content of the
    /// parties' outcome-comparison messages).
    pub alice_bits: Vec<u8>,
    pub bob_bits: Vec<u8>,
}

/// Runs one round over `pairs`, two at a time in order.  The stream for the
/// attempt at pairing index `j` of round `round` is derived as
/// `seed::stream(master_seed, PURIFY_MEASURE, round·2³² + j)`, so the loop
/// parallelizes over attempts with results bit-identical to sequential
/// execution.  An odd trailing pair sits the round out and is appended to
/// the survivors.
pub fn run_mc_round<T: Scalar>(
    circuit: &BbpsswCircuit<T>,
    pairs: &[DensityMatrix<T>],
    master_seed: u64,
    round: u32,
) -> Result<McRoundOutput<T>, PurifyError> {
    let attempts = pairs.len() / 2;
    let outcomes: Vec<RoundOutcome<T>> = (0..attempts)
        .into_par_iter()
        .map(|j| {
            let mut rng = seed::stream(
                master_seed,
                seed::domain::PURIFY_MEASURE,
                ((round as u64) << 32) | j as u64,
            );
            circuit.round(&pairs[2 * j], &pairs[2 * j + 1], &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = McRoundOutput {
        survivors: Vec::with_capacity(attempts + 1),
        attempts,
        successes: 0,
        alice_bits: Vec::with_capacity(attempts),
        bob_bits: Vec::with_capacity(attempts),
    };
    for outcome in outcomes {
        let (a, b) = outcome.bits();
        out.alice_bits.push(a);
        out.bob_bits.push(b);
        if let RoundOutcome::Success { state, .. } = outcome {
            out.successes += 1;
            out.survivors.push(state);
        }
    }
    if pairs.len() % 2 == 1 {
        out.survivors.push(pairs[pairs.len() - 1].clone());
    }
    Ok(out)
}

/// One row of a purification trajectory.  Row 0 is the initial point with
/// `success_rate = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord<T: Scalar> {
    pub round: u32,
    pub fidelity: T,
    pub pairs_remaining: T,
    pub success_rate: T,
}

/// Per-round fidelity and pair-count history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationTrajectory<T: Scalar> {
    pub mode: EnsembleMode,
    pub yield_convention: YieldConvention,
    pub rounds: Vec<RoundRecord<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> PurificationTrajectory<T> {
    pub fn final_record(&self) -> &RoundRecord<T> {
        self.rounds.last().expect("trajectory has at least row 0")
    }
}

/// Schedule parameters for [`purify_schedule`].
#[derive(Debug, Clone)]
pub struct ScheduleParams<T: Scalar> {
    pub rounds: u32,
    pub yield_convention: YieldConvention,
    /// Party frames; only the Monte Carlo mode uses them.
    pub frame_a: BasisFrame<T>,
    pub frame_b: BasisFrame<T>,
    /// Master seed for derived streams; only the Monte Carlo mode uses it.
    pub master_seed: u64,
}

impl<T: Scalar> ScheduleParams<T> {
    pub fn analytic(rounds: u32, yield_convention: YieldConvention) -> Self {
        ScheduleParams {
            rounds,
            yield_convention,
            frame_a: BasisFrame::reference(),
            frame_b: BasisFrame::reference(),
            master_seed: 0,
        }
    }
}

/// Runs `params.rounds` purification rounds over the ensemble.
///
/// Analytic mode iterates [`recurrence_step`], halving the pair count per
/// round (or scaling by the success probability under the realistic yield
/// convention).  Monte Carlo mode pairs ensemble members two at a time and
/// keeps the survivors; its fidelity column is the mean fidelity to the
/// local-basis singlet of `params`' frames.
pub fn purify_schedule<T: Scalar>(
    initial: &PairEnsemble<T>,
    params: &ScheduleParams<T>,
) -> Result<PurificationTrajectory<T>, PurifyError> {
    let mut warnings = Vec::new();
    match initial {
        PairEnsemble::Analytic { fidelity, count } => {
            let needed = T::real(2.0).powi(params.rounds as i32);
            if *count < needed {
                warnings.push(format!(
                    "count {count} is below 2^{} = {needed}; pair accounting goes fractional",
                    params.rounds
                ));
            }
            let mut rounds = vec![RoundRecord {
                round: 0,
                fidelity: *fidelity,
                pairs_remaining: *count,
                success_rate: T::one(),
            }];
            let mut f = *fidelity;
            let mut remaining = *count;
            for r in 1..=params.rounds {
                let (f_next, success) = recurrence_step(f)?;
                f = f_next;
                remaining /= T::real(2.0);
                if params.yield_convention == YieldConvention::Realistic {
                    remaining *= success;
                }
                rounds.push(RoundRecord {
                    round: r,
                    fidelity: f,
                    pairs_remaining: remaining,
                    success_rate: success,
                });
            }
            Ok(PurificationTrajectory {
                mode: EnsembleMode::Analytic,
                yield_convention: params.yield_convention,
                rounds,
                warnings,
            })
        }
        PairEnsemble::MonteCarlo { pairs } => {
            let circuit = BbpsswCircuit::new(&params.frame_a, &params.frame_b)?;
            let mean_fidelity = |pairs: &[DensityMatrix<T>]| -> Result<T, PurifyError> {
                if pairs.is_empty() {
                    return Ok(T::zero());
                }
                let mut acc = T::zero();
                for p in pairs {
                    acc += p.fidelity(circuit.target())?;
                }
                Ok(acc / T::from_usize(pairs.len()).unwrap())
            };
            let mut rounds = vec![RoundRecord {
                round: 0,
                fidelity: mean_fidelity(pairs)?,
                pairs_remaining: T::from_usize(pairs.len()).unwrap(),
                success_rate: T::one(),
            }];
            let mut current = pairs.clone();
            for r in 1..=params.rounds {
                if current.len() < 2 {
                    return Err(PurifyError::Exhausted {
                        round: r,
                        remaining: current.len(),
                    });
                }
                let output = run_mc_round(&circuit, &current, params.master_seed, r)?;
                current = output.survivors;
                rounds.push(RoundRecord {
                    round: r,
                    fidelity: mean_fidelity(&current)?,
                    pairs_remaining: T::from_usize(current.len()).unwrap(),
                    success_rate: T::from_usize(output.successes).unwrap()
                        / T::from_usize(output.attempts.max(1)).unwrap(),
                });
            }
            Ok(PurificationTrajectory {
                mode: EnsembleMode::MonteCarlo,
                yield_convention: params.yield_convention,
                rounds,
                warnings,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarized_phase_singlet, werner_from_fidelity};
    use crate::frames::effective_phase;

    fn werner(f: f64) -> DensityMatrix<f64> {
        werner_from_fidelity(f).unwrap()
    }

    #[test]
    fn recurrence_examples() {
        // F = 1 is an exact fixed point with certain success.
        let (f, d) = recurrence_step(1.0f64).unwrap();
        assert_eq!(f, 1.0);
        assert_eq!(d, 1.0);

        // F = 1/2 is the unstable fixed point; success probability 5/9.
        let (f, d) = recurrence_step(0.5f64).unwrap();
        assert!((f - 0.5).abs() < 1e-15);
        assert!((d - 5.0 / 9.0).abs() < 1e-15);

        // F = 0.9: frozen from an independent evaluation of the map.
        let (f, d) = recurrence_step(0.9f64).unwrap();
        assert!((f - 0.926_395_939_086_294_4).abs() < 1e-12);
        assert!((d - 0.875_555_555_555_555_6).abs() < 1e-12);

        assert!(recurrence_step(-0.1f64).is_err());
        assert!(recurrence_step(1.1f64).is_err());
    }

    #[test]
    fn recurrence_monotone_convergence() {
        // Above 1/2 the map climbs towards 1; below, it falls away.
        for i in 1..20 {
            let f0 = 0.5 + 0.025 * i as f64;
            let mut f = f0;
            for _ in 0..30 {
                let (next, _) = recurrence_step(f).unwrap();
                assert!(next >= f - 1e-15, "map must be non-decreasing from {f0}");
                f = next;
            }
            assert!(f > 0.99, "F after 30 rounds from {f0} was only {f}");
        }
        // Below one half the map never purifies: it stays under 1/2 and
        // contracts towards the mixed fixed point at 1/4.
        for i in 1..10 {
            let f0 = 0.5 - 0.045 * i as f64;
            let mut f = f0;
            for _ in 0..30 {
                let (next, _) = recurrence_step(f).unwrap();
                assert!(next < 0.5, "map must stay below 1/2 from {f0}");
                f = next;
            }
            assert!((f - 0.25).abs() <= (f0 - 0.25).abs() + 1e-12);
            assert!((f - 0.25).abs() < 0.02, "F after 30 rounds from {f0} was {f}");
        }
    }

    #[test]
    fn exact_round_average_matches_recurrence_on_werner() {
        let frames = [
            (BasisFrame::reference(), BasisFrame::reference()),
            (BasisFrame::new(0.7, -0.2), BasisFrame::new(1.9, 0.4)),
        ];
        for (fa, fb) in frames {
            let circuit = BbpsswCircuit::new(&fa, &fb).unwrap();
            for f0 in [0.6, 0.75, 0.9, 0.98] {
                let w = werner(f0);
                // With mismatched frames the relevant input fidelity is the
                // one against the local-basis singlet; the first round
                // twirls the pair into local Werner form at that weight.
                let f_in = w.fidelity(circuit.target()).unwrap();
                let (success, kept) = circuit.expected_round(&w, &w).unwrap();
                let (f_expect, d_expect) = recurrence_step(f_in).unwrap();
                assert!(
                    (success - d_expect).abs() < 1e-10,
                    "success {success} vs {d_expect} at F={f0}"
                );
                let f_got = kept.fidelity(circuit.target()).unwrap();
                assert!(
                    (f_got - f_expect).abs() < 1e-10,
                    "fidelity {f_got} vs {f_expect} at F={f0}"
                );
            }
        }
    }

    #[test]
    fn exact_round_average_handles_phase_offset_inputs() {
        // Depolarization-free pairs with residual phase 0.4 in mismatched
        // frames: the effective input fidelity is cos²(0.2) and one round
        // must match the recurrence at that fidelity.
        let fa = BasisFrame::<f64>::new(0.3, -0.8);
        let fb = BasisFrame::new(-0.5, 0.25);
        let omega = 1.0;
        let dt = {
            // Choose δt so the total effective phase is exactly 0.4.
            let theta_part = effective_phase(&fa, &fb, omega, 0.0);
            (theta_part - 0.4) / omega
        };
        let phi = effective_phase(&fa, &fb, omega, dt);
        assert!((phi - 0.4).abs() < 1e-12);

        // Build the arriving pair in reference components: singlet with the
        // delay phase on Bob's side.
        let pair = DensityMatrix::from_pure(&crate::frames::phase_singlet(0.0))
            .apply_unitary(&crate::frames::time_delay_operator(omega, dt), &[1])
            .unwrap();
        let circuit = BbpsswCircuit::new(&fa, &fb).unwrap();
        let f_in = pair.fidelity(circuit.target()).unwrap();
        assert!((f_in - (0.2f64).cos().powi(2)).abs() < 1e-12);

        let (success, kept) = circuit.expected_round(&pair, &pair).unwrap();
        let (f_expect, d_expect) = recurrence_step(f_in).unwrap();
        assert!((success - d_expect).abs() < 1e-10);
        let f_got = kept.fidelity(circuit.target()).unwrap();
        assert!((f_got - f_expect).abs() < 1e-10);
    }

    #[test]
    fn perfect_singlets_always_succeed() {
        let circuit = BbpsswCircuit::new(
            &BasisFrame::<f64>::new(0.1, 0.9),
            &BasisFrame::new(-0.3, 0.6),
        )
        .unwrap();
        let ideal = DensityMatrix::from_pure(circuit.target());
        let mut rng = seed::stream(5, seed::domain::TRIAL, 0);
        for _ in 0..200 {
            match circuit.round(&ideal, &ideal, &mut rng).unwrap() {
                RoundOutcome::Success { state, .. } => {
                    assert!((state.fidelity(circuit.target()).unwrap() - 1.0).abs() < 1e-10);
                }
                RoundOutcome::Failure { .. } => panic!("ideal inputs must never fail"),
            }
        }
    }

    #[test]
    fn sampled_round_statistics_match_recurrence() {
        // Smoke-sized version of the acceptance run: 20k trials, 4σ bounds.
        let circuit =
            BbpsswCircuit::new(&BasisFrame::reference(), &BasisFrame::reference()).unwrap();
        let w = werner(0.9);
        let trials = 20_000usize;
        let outcomes: Vec<(bool, f64)> = (0..trials)
            .into_par_iter()
            .map(|j| {
                let mut rng = seed::stream(99, seed::domain::TRIAL, j as u64);
                match circuit.round(&w, &w, &mut rng).unwrap() {
                    RoundOutcome::Success { state, .. } => {
                        (true, state.fidelity(circuit.target()).unwrap())
                    }
                    RoundOutcome::Failure { .. } => (false, 0.0),
                }
            })
            .collect();
        let successes = outcomes.iter().filter(|(s, _)| *s).count();
        let rate = successes as f64 / trials as f64;
        let (f_expect, d_expect) = recurrence_step(0.9f64).unwrap();
        let sigma = (d_expect * (1.0 - d_expect) / trials as f64).sqrt();
        assert!((rate - d_expect).abs() < 4.0 * sigma, "rate {rate}");

        let mean_f: f64 =
            outcomes.iter().filter(|(s, _)| *s).map(|(_, f)| f).sum::<f64>() / successes as f64;
        assert!((mean_f - f_expect).abs() < 0.005, "mean fidelity {mean_f}");
    }

    #[test]
    fn rejects_invalid_pairs() {
        let circuit =
            BbpsswCircuit::new(&BasisFrame::reference(), &BasisFrame::reference()).unwrap();
        let single = DensityMatrix::<f64>::maximally_mixed(2);
        let good = werner(0.9);
        let mut rng = seed::stream(1, seed::domain::TRIAL, 0);
        assert!(matches!(
            circuit.round(&single, &good, &mut rng),
            Err(PurifyError::InvalidPair(_))
        ));
    }

    #[test]
    fn analytic_schedule_examples() {
        // n = 0: just the initial point.
        let e = PairEnsemble::analytic(0.8f64, 64.0).unwrap();
        let t = purify_schedule(&e, &ScheduleParams::analytic(0, YieldConvention::Ideal)).unwrap();
        assert_eq!(t.rounds.len(), 1);
        assert_eq!(t.final_record().fidelity, 0.8);

        // F₀ = 0.9, n = 4: F₄ ≈ 0.97434, pairs N/16.
        let e = PairEnsemble::analytic(0.9f64, 1e4).unwrap();
        let t = purify_schedule(&e, &ScheduleParams::analytic(4, YieldConvention::Ideal)).unwrap();
        assert_eq!(t.rounds.len(), 5);
        assert!((t.final_record().fidelity - 0.97434).abs() < 5e-6);
        assert!((t.final_record().pairs_remaining - 625.0).abs() < 1e-9);
        assert!(t.rounds.windows(2).all(|w| w[1].pairs_remaining
            <= w[0].pairs_remaining));

        // Realistic yield scales by the success probability too.
        let t2 =
            purify_schedule(&e, &ScheduleParams::analytic(1, YieldConvention::Realistic)).unwrap();
        let (_, d) = recurrence_step(0.9f64).unwrap();
        assert!((t2.final_record().pairs_remaining - 5e3 * d).abs() < 1e-9);

        // Under-provisioned counts warn but still run.
        let small = PairEnsemble::analytic(0.9f64, 4.0).unwrap();
        let t3 =
            purify_schedule(&small, &ScheduleParams::analytic(4, YieldConvention::Ideal)).unwrap();
        assert!(!t3.warnings.is_empty());
    }

    #[test]
    fn mc_schedule_tracks_recurrence() {
        // 2¹⁰ Werner(0.9) copies, two rounds: survivor mean fidelity within
        // 3σ of F₂ ≈ 0.94721.
        let pairs = vec![werner(0.9); 1 << 10];
        let e = PairEnsemble::monte_carlo(pairs).unwrap();
        let params = ScheduleParams {
            rounds: 2,
            yield_convention: YieldConvention::Ideal,
            frame_a: BasisFrame::reference(),
            frame_b: BasisFrame::reference(),
            master_seed: 1234,
        };
        let t = purify_schedule(&e, &params).unwrap();
        let mut f = 0.9f64;
        for _ in 0..2 {
            f = recurrence_step(f).unwrap().0;
        }
        assert!((f - 0.94721).abs() < 5e-6, "recurrence check");
        let survivors = t.final_record().pairs_remaining;
        // Rough per-pair fidelity spread is ≤ 0.25; 3σ of the mean estimate.
        let sigma = 0.25 / survivors.sqrt();
        assert!(
            (t.final_record().fidelity - f).abs() < 3.0 * sigma,
            "mean fidelity {} vs analytic {f} (3σ = {})",
            t.final_record().fidelity,
            3.0 * sigma
        );
        assert!(t
            .rounds
            .windows(2)
            .all(|w| w[1].pairs_remaining <= w[0].pairs_remaining));
    }

    #[test]
    fn mc_schedule_exhaustion_and_odd_carry() {
        let e = PairEnsemble::monte_carlo(vec![werner(0.9)]).unwrap();
        let params = ScheduleParams {
            rounds: 1,
            yield_convention: YieldConvention::Ideal,
            frame_a: BasisFrame::reference(),
            frame_b: BasisFrame::reference(),
            master_seed: 7,
        };
        assert!(matches!(
            purify_schedule(&e, &params),
            Err(PurifyError::Exhausted { .. })
        ));

        // Odd ensembles carry the unpaired trailing pair into the survivors.
        let circuit =
            BbpsswCircuit::new(&BasisFrame::reference(), &BasisFrame::reference()).unwrap();
        let pairs = vec![werner(0.9); 5];
        let out = run_mc_round(&circuit, &pairs, 3, 1).unwrap();
        assert_eq!(out.attempts, 2);
        assert_eq!(out.alice_bits.len(), 2);
        assert_eq!(out.survivors.len(), out.successes + 1);
        let carried = out.survivors.last().unwrap();
        assert!(carried.matrix().max_abs_diff(pairs[4].matrix()) == 0.0);
    }

    #[test]
    fn mc_schedule_is_frame_independent() {
        // A framed run with the offset folded into the pairs must climb to
        // the local singlet round by round, matching a frame-free run of the
        // same effective fidelity within Monte Carlo error.
        let fa = BasisFrame::<f64>::new(0.9, -1.4);
        let fb = BasisFrame::new(0.3, 0.8);
        let omega = 1.0;
        let phi_target = 0.5f64;
        let dt = (effective_phase(&fa, &fb, omega, 0.0) - phi_target) / omega;
        let p = 0.1;
        let pair = depolarized_phase_singlet(p, 0.0)
            .unwrap()
            .apply_unitary(&crate::frames::time_delay_operator(omega, dt), &[1])
            .unwrap();

        let n = 1 << 10;
        let framed = purify_schedule(
            &PairEnsemble::monte_carlo(vec![pair; n]).unwrap(),
            &ScheduleParams {
                rounds: 2,
                yield_convention: YieldConvention::Ideal,
                frame_a: fa,
                frame_b: fb,
                master_seed: 77,
            },
        )
        .unwrap();

        // Frame-free control at the same effective input fidelity.
        let f0 = crate::channels::singlet_fidelity_closed_form(p, phi_target);
        let plain = purify_schedule(
            &PairEnsemble::monte_carlo(vec![
                crate::channels::werner_from_fidelity(f0).unwrap();
                n
            ])
            .unwrap(),
            &ScheduleParams {
                rounds: 2,
                yield_convention: YieldConvention::Ideal,
                frame_a: BasisFrame::reference(),
                frame_b: BasisFrame::reference(),
                master_seed: 77,
            },
        )
        .unwrap();

        assert!((framed.rounds[0].fidelity - f0).abs() < 1e-10);
        for (a, b) in framed.rounds.iter().zip(&plain.rounds) {
            // Fidelity climbs every round and the two runs track each other.
            let sigma = 0.25 / a.pairs_remaining.max(1.0).sqrt();
            assert!(
                (a.fidelity - b.fidelity).abs() < 4.0 * sigma,
                "round {}: framed {} vs plain {}",
                a.round,
                a.fidelity,
                b.fidelity
            );
        }
        assert!(framed.rounds.windows(2).all(|w| w[1].fidelity > w[0].fidelity));
    }

    #[test]
    fn frame_independence_of_round_statistics() {
        // The same depolarized phase-offset input run under wildly different
        // frame pairs (with identical effective phase) produces identical
        // expected round outputs.
        let phi = 0.5;
        let rho = depolarized_phase_singlet(0.1, 0.0).unwrap();
        let mut reference: Option<(f64, f64)> = None;
        for (fa, fb) in [
            (BasisFrame::new(0.0, 0.0), BasisFrame::new(0.0, 0.0)),
            (BasisFrame::new(1.3, -0.4), BasisFrame::new(0.2, 2.0)),
        ] {
            // Fold the full effective phase into a delay so φ is `phi` for
            // both frame choices.
            let dt = (effective_phase(&fa, &fb, 1.0, 0.0) - phi) / 1.0;
            let pair = rho
                .apply_unitary(&crate::frames::time_delay_operator(1.0, dt), &[1])
                .unwrap();
            let circuit = BbpsswCircuit::new(&fa, &fb).unwrap();
            let (success, kept) = circuit.expected_round(&pair, &pair).unwrap();
            let f = kept.fidelity(circuit.target()).unwrap();
            match reference {
                None => reference = Some((success, f)),
                Some((s0, f0)) => {
                    assert!((success - s0).abs() < 1e-10);
                    assert!((f - f0).abs() < 1e-10);
                }
            }
        }
    }
}

