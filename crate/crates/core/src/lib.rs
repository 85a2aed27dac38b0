//! Simulation and analysis toolkit for entanglement-based quantum clock
//! synchronization between parties that share no phase reference.
//!
//! The library is organized bottom-up:
//!
//! * [`qmath`]: dense complex linear algebra and measurement primitives for
//!   systems of 1–4 qubits (the simulation substrate).
//! * [`frames`]: basis-convention bookkeeping, the frame-change unitaries, the
//!   time-delay operator and the effective singlet phase.
//! * [`channels`]: the depolarizing channel, Bell-basis decomposition and the
//!   12-element bilateral twirl group that projects states to Werner form.
//! * [`purify`]: BBPSSW entanglement purification, with the circuit at
//!   density-matrix level, the analytic fidelity recurrence and schedule
//!   execution in analytic and Monte Carlo modes.
//! * [`qcs`]: the clock-synchronization protocol itself, with measurement
//!   statistics, the offset estimator and the round-count error budget.
//! * [`harness`]: a deterministic discrete-event scenario tying everything
//!   together: Charlie distributes noisy pairs, Alice and Bob purify and
//!   estimate their clock offset over a latency-bearing classical channel.
//!
//! All numerical code is generic over the scalar type through [`Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod channels;
pub mod frames;
pub mod harness;
pub mod purify;
pub mod qcs;
pub mod qmath;
mod scalar;
pub mod seed;

pub use scalar::Scalar;

/// 64-bit complex scalar used by the concrete aliases below.
pub type Complex64 = num_complex::Complex<f64>;

pub type SquareMatrix64 = qmath::SquareMatrix<f64>;
pub type PureState64 = qmath::PureState<f64>;
pub type DensityMatrix64 = qmath::DensityMatrix<f64>;
pub type BasisFrame64 = frames::BasisFrame<f64>;
pub type ClockModel64 = frames::ClockModel<f64>;
pub type BellDiagonal64 = channels::BellDiagonal<f64>;
pub type TwirlGroup64 = channels::TwirlGroup<f64>;
pub type PairEnsemble64 = purify::PairEnsemble<f64>;
pub type PurificationTrajectory64 = purify::PurificationTrajectory<f64>;
pub type QcsConfig64 = qcs::QcsConfig<f64>;
pub type EstimateReport64 = qcs::EstimateReport<f64>;
pub type ErrorBudget64 = qcs::ErrorBudget<f64>;
pub type Scenario64 = harness::Scenario<f64>;
pub type RunReport64 = harness::RunReport<f64>;
