//! Discrete-event end-to-end scenario.
//!
//! Charlie prepares singlets in his own convention and distributes them
//! through a depolarizing channel.  Alice and Bob, each with a private
//! basis convention and a syntonized but offset clock, purify the pairs in
//! their local bases and then run the clock-synchronization measurement,
//! exchanging only rotation seeds, outcome bits and outcome counts over a
//! latency-bearing classical channel.  No message payload ever carries a
//! frame angle or a clock offset.
//!
//! # Timing model
//!
//! The reference clock is Alice's (her offset is zero); Bob's clock reads
//! `clock_offset` seconds more at any instant.  The parties follow a
//! pre-agreed schedule expressed in *local clock readings*: purification
//! round `r` at reading `r·round_slot`, Alice's estimation measurement at
//! `(rounds+1)·round_slot`.  Each party tracks and compensates its own
//! qubits' free precession against that schedule, so the only physical
//! phase that survives is the one produced by the clock offset itself.  It
//! enters twice:
//!
//! * the distributed pairs carry the delay phase `ω·δt` folded into the
//!   effective singlet phase `φ` (removed by purification), and
//! * Bob's final compensation is anchored at the pre-agreed measurement
//!   reading, so his qubits keep the residual phase `ω·δt`, which is what
//!   the estimator measures.
//!
//! Message latency shifts event times but cancels out of the residual, so
//! it never biases the estimate.  Charlie's own convention enters nowhere:
//! a singlet is convention-invariant up to global phase, which a density
//! matrix does not retain, and the run report is bit-identical under any
//! shift of his frame.

mod event;

pub use event::{Event, EventKind, EventQueue};

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channels::{depolarize, BellDiagonal, NoiseModel};
use crate::frames::{
    effective_phase, gate_in_frame, local_singlet, phase_singlet, time_delay_operator, BasisFrame,
    ClockModel,
};
use crate::purify::{
    recurrence_step, BbpsswCircuit, EnsembleMode, PurificationTrajectory, PurifyError,
    RoundRecord, YieldConvention,
};
use crate::qcs::{
    bell_diagonal_p_zero, error_budget, estimate_report, ErrorBudget, EstimateReport, QcsError,
};
use crate::qmath::{gates, DensityMatrix, QmathError};
use crate::seed;
use crate::Scalar;

#[derive(Debug, Clone, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("precondition refused: {0}")]
    Refusal(String),
    #[error("protocol-order violation: {0}")]
    ProtocolOrder(String),
    #[error("ensemble exhausted before estimation: {0} surviving pair(s)")]
    Exhausted(usize),
    #[error("internal invariant failure: {0}")]
    Internal(String),
}

impl From<QmathError> for HarnessError {
    fn from(e: QmathError) -> Self {
        HarnessError::Internal(e.to_string())
    }
}
impl From<PurifyError> for HarnessError {
    fn from(e: PurifyError) -> Self {
        HarnessError::Internal(e.to_string())
    }
}
impl From<QcsError> for HarnessError {
    fn from(e: QcsError) -> Self {
        HarnessError::Internal(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartyId {
    Alice,
    Bob,
    Charlie,
}

/// Protocol progress of one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartyPhase {
    Distributing,
    Purifying,
    QcsAliceMeasured,
    Done,
}

/// One protocol participant.  Code acting *as* a party may only read that
/// party's own frame and clock; the physics layer reads everything.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Party<T: Scalar> {
    pub id: PartyId,
    pub frame: BasisFrame<T>,
    pub clock: ClockModel<T>,
    pub phase: PartyPhase,
}

/// Classical message content.  Only discrete protocol data (seeds, bits,
/// counts) is representable, which is the no-hidden-synchronization rule
/// made structural.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    RotationSeed { seed: u64 },
    PurifyOutcomes { round: u32, bits: Vec<u8> },
    PurifySummary { round: u32, attempts: u64, successes: u64 },
    QcsOutcomes { bits: Vec<u8> },
    QcsSummary { count: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMessage<T: Scalar> {
    pub sender: PartyId,
    pub receiver: PartyId,
    /// Send instant on the reference clock.
    pub send_time: T,
    pub payload: Payload,
}

/// A delivered message as recorded in the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedMessage<T: Scalar> {
    pub message: ClassicalMessage<T>,
    pub delivery_time: T,
}

/// Classical-channel latency plus quantum-channel depolarizing noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel<T: Scalar> {
    /// Fixed one-way latency, seconds.
    pub latency: T,
    /// Uniform extra delay in `[0, jitter]`, sampled per message.
    pub jitter: T,
    /// Depolarizing probability applied to each distributed pair.
    pub noise_p: T,
}

/// Which party's qubit carries the delivery-time delay phase.  The two
/// choices produce the same density matrix; the sign convention is fixed so
/// the effective phase formula holds either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelaySide {
    Alice,
    Bob,
}

/// Number of purification rounds, or `auto` to use the error-budget
/// optimizer on the scenario's own parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundPlan {
    Auto,
    Fixed(u32),
}

/// Full configuration of one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario<T: Scalar> {
    pub n_pairs: u64,
    pub channel: ChannelModel<T>,
    pub frame_alice: BasisFrame<T>,
    pub frame_bob: BasisFrame<T>,
    pub frame_charlie: BasisFrame<T>,
    /// True clock offset: Bob's reading minus Alice's, seconds.
    pub clock_offset: T,
    pub omega: T,
    pub rounds: RoundPlan,
    pub mode: EnsembleMode,
    pub master_seed: u64,
    /// Pre-agreed schedule slot, seconds of local clock per protocol step.
    pub round_slot: T,
    pub delay_side: DelaySide,
}

/// Largest Monte Carlo ensemble accepted (memory and runtime guard).
pub const MAX_MC_PAIRS: u64 = 1 << 16;

impl<T: Scalar> Scenario<T> {
    /// A quiet, passing starting point tests and the CLI build on.
    pub fn baseline(master_seed: u64) -> Self {
        Scenario {
            n_pairs: 1 << 12,
            channel: ChannelModel {
                latency: T::real(1e-3),
                jitter: T::zero(),
                noise_p: T::zero(),
            },
            frame_alice: BasisFrame::reference(),
            frame_bob: BasisFrame::reference(),
            frame_charlie: BasisFrame::reference(),
            clock_offset: T::zero(),
            omega: T::one(),
            rounds: RoundPlan::Fixed(0),
            mode: EnsembleMode::MonteCarlo,
            master_seed,
            round_slot: T::real(10.0),
            delay_side: DelaySide::Bob,
        }
    }

    /// The ground-truth effective singlet phase of the distributed pairs.
    pub fn true_phase(&self) -> T {
        effective_phase(
            &self.frame_alice,
            &self.frame_bob,
            self.omega,
            self.clock_offset,
        )
    }

    fn resolved_rounds(&self) -> Result<u32, HarnessError> {
        match self.rounds {
            RoundPlan::Fixed(n) => Ok(n),
            RoundPlan::Auto => {
                let f0 = crate::channels::singlet_fidelity_closed_form(
                    self.channel.noise_p,
                    self.true_phase(),
                );
                let opt = crate::qcs::optimize_rounds(self.n_pairs, f0, self.omega, 20)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                Ok(opt.n_star)
            }
        }
    }

    fn validate(&self) -> Result<u32, HarnessError> {
        let cfg = |msg: String| Err(HarnessError::Config(msg));
        if self.n_pairs < 1 {
            return cfg("n_pairs must be at least 1".into());
        }
        if self.mode == EnsembleMode::MonteCarlo && self.n_pairs > MAX_MC_PAIRS {
            return cfg(format!(
                "monte carlo mode caps n_pairs at {MAX_MC_PAIRS}; use analytic mode"
            ));
        }
        if !(T::zero()..=T::one()).contains(&self.channel.noise_p) {
            return cfg(format!("noise_p {} outside [0, 1]", self.channel.noise_p));
        }
        if self.omega <= T::zero() || !self.omega.is_finite() {
            return cfg(format!("omega must be positive, got {}", self.omega));
        }
        if self.channel.latency < T::zero() || self.channel.jitter < T::zero() {
            return cfg("latency and jitter must be non-negative".into());
        }
        if !self.clock_offset.is_finite() {
            return cfg("clock_offset must be finite".into());
        }
        let rounds = self.resolved_rounds()?;
        if rounds >= 64 || (1u64 << rounds) > self.n_pairs {
            return cfg(format!(
                "{} pairs cannot sustain {} purification rounds",
                self.n_pairs, rounds
            ));
        }
        // Every message of a protocol step must land before the next step
        // starts, for any send-time skew the clock offset can cause.
        let needed = (self.channel.latency + self.channel.jitter + self.clock_offset.abs())
            * T::real(2.0);
        if self.round_slot <= needed {
            return cfg(format!(
                "round_slot {} too small for latency {} + jitter {} + |offset| {} (need > {})",
                self.round_slot,
                self.channel.latency,
                self.channel.jitter,
                self.clock_offset.abs(),
                needed
            ));
        }
        Ok(rounds)
    }
}

/// Scan result for the information firewall over the message log.
#[derive(Debug, Clone, Serialize)]
pub struct FirewallReport {
    pub messages_scanned: usize,
    pub violations: Vec<String>,
}

impl FirewallReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Everything a completed run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport<T: Scalar> {
    pub scenario: Scenario<T>,
    pub rounds_executed: u32,
    pub trajectory: PurificationTrajectory<T>,
    pub estimate: EstimateReport<T>,
    pub budget: ErrorBudget<T>,
    pub estimated_offset: T,
    pub true_offset: T,
    /// Ground-truth diagnostics, not party knowledge.
    pub effective_phase: T,
    pub initial_fidelity: T,
    /// Whether the signal phase `ω·δt` sits inside the principal branch
    /// `[0, π)`; outside it the estimator aliases.
    pub branch_ok: bool,
    pub messages: Vec<LoggedMessage<T>>,
}

impl<T: Scalar> RunReport<T> {
    /// Walks every delivered payload and reports any token that looks like a
    /// non-integer number.  Payload variants are integer-only by
    /// construction; this guards the boundary against future regressions.
    pub fn firewall_scan(&self) -> FirewallReport {
        let mut violations = Vec::new();
        for (i, logged) in self.messages.iter().enumerate() {
            let text = format!("{:?}", logged.message.payload);
            if contains_float_token(&text) {
                violations.push(format!("message {i}: {text}"));
            }
        }
        FirewallReport {
            messages_scanned: self.messages.len(),
            violations,
        }
    }
}

fn contains_float_token(s: &str) -> bool {
    let b = s.as_bytes();
    for i in 1..b.len().saturating_sub(1) {
        if b[i] == b'.' && b[i - 1].is_ascii_digit() && b[i + 1].is_ascii_digit() {
            return true;
        }
    }
    false
}

/// Data Alice holds between her estimation measurement and Bob's step.
struct AliceQcsData<T: Scalar> {
    collapsed: Vec<DensityMatrix<T>>,
    lab_time: T,
}

/// The simulation universe: parties, the event queue, and the quantum state
/// store.  Single-threaded and deterministic.
pub struct Simulation<T: Scalar> {
    scenario: Scenario<T>,
    rounds: u32,
    queue: EventQueue<T>,
    pub alice: Party<T>,
    pub bob: Party<T>,
    pub charlie: Party<T>,

    circuit: BbpsswCircuit<T>,
    pairs: Vec<DensityMatrix<T>>,
    analytic: Option<(T, T)>, // (fidelity, count)
    distributed: bool,
    initial_fidelity: T,

    rotation_seed: u64,
    bob_has_seed: bool,
    next_round_exec: u32,
    alice_round_acks: u32,
    bob_round_acks: u32,
    trajectory_rows: Vec<RoundRecord<T>>,
    alice_qcs: Option<AliceQcsData<T>>,
    estimate: Option<EstimateReport<T>>,
    messages: Vec<LoggedMessage<T>>,
    latency_rng: rand_chacha::ChaCha12Rng,
}

/// What one [`Simulation::step`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Progressed,
    QueueEmpty,
}

impl<T: Scalar> Simulation<T> {
    /// Validates the scenario, checks the convergence preconditions, and
    /// schedules the pre-agreed protocol timeline.
    pub fn new(scenario: Scenario<T>) -> Result<Self, HarnessError> {
        let rounds = scenario.validate()?;

        let phi = scenario.true_phase();
        let f0 = crate::channels::singlet_fidelity_closed_form(scenario.channel.noise_p, phi);
        if rounds > 0 {
            // |φ| ≥ π/2 alone already forces F ≤ 1/2, so test it first to
            // name the sharper bound.
            if phi.abs() >= T::FRAC_PI_2() {
                return Err(HarnessError::Refusal(format!(
                    "|φ| = {} ≥ π/2; effective phase out of the purifiable range",
                    phi.abs()
                )));
            }
            if f0 <= T::real(0.5) {
                return Err(HarnessError::Refusal(format!(
                    "initial fidelity F(p, φ) = {f0} ≤ 0.5; purification diverges"
                )));
            }
        }

        let alice = Party {
            id: PartyId::Alice,
            frame: scenario.frame_alice,
            clock: ClockModel::new(scenario.omega, T::zero())
                .map_err(|e| HarnessError::Config(e.to_string()))?,
            phase: PartyPhase::Distributing,
        };
        let bob = Party {
            id: PartyId::Bob,
            frame: scenario.frame_bob,
            clock: ClockModel::new(scenario.omega, scenario.clock_offset)
                .map_err(|e| HarnessError::Config(e.to_string()))?,
            phase: PartyPhase::Distributing,
        };
        let charlie = Party {
            id: PartyId::Charlie,
            frame: scenario.frame_charlie,
            clock: ClockModel::new(scenario.omega, T::zero())
                .map_err(|e| HarnessError::Config(e.to_string()))?,
            phase: PartyPhase::Distributing,
        };

        let circuit = BbpsswCircuit::new(&scenario.frame_alice, &scenario.frame_bob)
            .map_err(|e| HarnessError::Internal(e.to_string()))?;

        let rotation_seed = seed::mix(scenario.master_seed, seed::domain::ROTATIONS, 0);
        let latency_rng = seed::stream(scenario.master_seed, seed::domain::LATENCY, 0);

        let mut sim = Simulation {
            scenario,
            rounds,
            queue: EventQueue::new(),
            alice,
            bob,
            charlie,
            circuit,
            pairs: Vec::new(),
            analytic: None,
            distributed: false,
            initial_fidelity: f0,
            rotation_seed,
            bob_has_seed: false,
            next_round_exec: 1,
            alice_round_acks: 0,
            bob_round_acks: 0,
            trajectory_rows: Vec::new(),
            alice_qcs: None,
            estimate: None,
            messages: Vec::new(),
            latency_rng,
        };
        sim.schedule_protocol();
        Ok(sim)
    }

    /// Pushes the pre-agreed timeline: distribution and the seed exchange at
    /// reading 0, round `r` at reading `r·slot`, Alice's measurement at
    /// `(rounds+1)·slot`.  Message deliveries are scheduled as sends happen.
    fn schedule_protocol(&mut self) {
        let slot = self.scenario.round_slot;
        self.queue.push(T::zero(), EventKind::DistributePairs);
        // Alice's seed message, sent at her reading 0 (= lab 0).
        let seed_msg = ClassicalMessage {
            sender: PartyId::Alice,
            receiver: PartyId::Bob,
            send_time: T::zero(),
            payload: Payload::RotationSeed {
                seed: self.rotation_seed,
            },
        };
        self.send(seed_msg);
        for r in 1..=self.rounds {
            // The round fires when its first participant acts: Alice at lab
            // r·slot, Bob at lab r·slot − offset.
            let lab = T::from_u32(r).unwrap() * slot - self.scenario.clock_offset.max(T::zero());
            self.queue.push(lab, EventKind::StartRound { round: r });
        }
        let tau_qcs = T::from_u32(self.rounds + 1).unwrap() * slot;
        self.queue.push(
            self.alice.clock.reference_time(tau_qcs),
            EventKind::AliceQcsMeasure,
        );
    }

    /// Queues the delivery of `msg` after the channel's latency.
    fn send(&mut self, msg: ClassicalMessage<T>) {
        use rand::Rng;
        let jitter = if self.scenario.channel.jitter > T::zero() {
            // One draw per message, from the latency stream only, so jitter
            // settings cannot shift any measurement stream.
            T::real(self.latency_rng.random::<f64>()) * self.scenario.channel.jitter
        } else {
            T::zero()
        };
        let delivery = msg.send_time + self.scenario.channel.latency + jitter;
        self.queue.push(delivery, EventKind::Deliver(msg));
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Test access: inject an arbitrary event.
    pub fn push_event(&mut self, time: T, kind: EventKind<T>) {
        self.queue.push(time, kind);
    }

    /// Pops and processes the earliest event (ties in insertion order).
    pub fn step(&mut self) -> Result<StepOutcome, HarnessError> {
        let Some(event) = self.queue.pop() else {
            return Ok(StepOutcome::QueueEmpty);
        };
        match event.kind {
            EventKind::DistributePairs => self.on_distribute(event.time)?,
            EventKind::StartRound { round } => self.on_round(round, event.time)?,
            EventKind::Deliver(msg) => self.on_deliver(msg, event.time)?,
            EventKind::AliceQcsMeasure => self.on_alice_qcs(event.time)?,
        }
        Ok(StepOutcome::Progressed)
    }

    fn on_distribute(&mut self, _time: T) -> Result<(), HarnessError> {
        if self.distributed {
            return Err(HarnessError::ProtocolOrder(
                "pairs distributed twice".into(),
            ));
        }
        // The singlet is convention-invariant up to a global phase, which a
        // density matrix drops, so Charlie's frame never enters the state he
        // sends; the delay phase lands on the configured side.
        let noise = NoiseModel::new(self.scenario.channel.noise_p)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let base = depolarize(&DensityMatrix::from_pure(&phase_singlet(T::zero())), &noise);
        let delayed = match self.scenario.delay_side {
            DelaySide::Bob => base.apply_unitary(
                &time_delay_operator(self.scenario.omega, self.scenario.clock_offset),
                &[1],
            )?,
            DelaySide::Alice => base.apply_unitary(
                &time_delay_operator(self.scenario.omega, -self.scenario.clock_offset),
                &[0],
            )?,
        };
        let target = local_singlet(&self.scenario.frame_alice, &self.scenario.frame_bob);
        self.initial_fidelity = delayed.fidelity(&target)?;
        match self.scenario.mode {
            EnsembleMode::MonteCarlo => {
                self.pairs = vec![delayed; self.scenario.n_pairs as usize];
            }
            EnsembleMode::Analytic => {
                self.analytic = Some((
                    self.initial_fidelity,
                    T::from_u64(self.scenario.n_pairs).unwrap(),
                ));
            }
        }
        self.distributed = true;
        self.charlie.phase = PartyPhase::Done;
        self.alice.phase = PartyPhase::Purifying;
        self.bob.phase = PartyPhase::Purifying;
        self.trajectory_rows.push(RoundRecord {
            round: 0,
            fidelity: self.initial_fidelity,
            pairs_remaining: T::from_u64(self.scenario.n_pairs).unwrap(),
            success_rate: T::one(),
        });
        Ok(())
    }

    fn on_round(&mut self, round: u32, _time: T) -> Result<(), HarnessError> {
        if !self.distributed {
            return Err(HarnessError::ProtocolOrder(format!(
                "round {round} started before pair distribution"
            )));
        }
        if round != self.next_round_exec {
            return Err(HarnessError::ProtocolOrder(format!(
                "round {round} started out of order (expected {})",
                self.next_round_exec
            )));
        }
        if !self.bob_has_seed {
            return Err(HarnessError::ProtocolOrder(format!(
                "round {round} started before Bob holds the rotation seed"
            )));
        }
        self.next_round_exec += 1;

        let slot = self.scenario.round_slot;
        let reading = T::from_u32(round).unwrap() * slot;
        let (alice_payload, bob_payload) = match self.scenario.mode {
            EnsembleMode::MonteCarlo => {
                if self.pairs.len() < 2 {
                    return Err(HarnessError::Exhausted(self.pairs.len()));
                }
                let out = crate::purify::run_mc_round(
                    &self.circuit,
                    &self.pairs,
                    self.rotation_seed,
                    round,
                )
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
                self.pairs = out.survivors;
                let mean_f = self.mean_fidelity()?;
                self.trajectory_rows.push(RoundRecord {
                    round,
                    fidelity: mean_f,
                    pairs_remaining: T::from_usize(self.pairs.len()).unwrap(),
                    success_rate: T::from_usize(out.successes).unwrap()
                        / T::from_usize(out.attempts.max(1)).unwrap(),
                });
                (
                    Payload::PurifyOutcomes {
                        round,
                        bits: out.alice_bits,
                    },
                    Payload::PurifyOutcomes {
                        round,
                        bits: out.bob_bits,
                    },
                )
            }
            EnsembleMode::Analytic => {
                let (f, count) = self.analytic.expect("analytic state present");
                let (f_next, success) =
                    recurrence_step(f).map_err(|e| HarnessError::Internal(e.to_string()))?;
                let next_count = count / T::real(2.0);
                self.analytic = Some((f_next, next_count));
                self.trajectory_rows.push(RoundRecord {
                    round,
                    fidelity: f_next,
                    pairs_remaining: next_count,
                    success_rate: success,
                });
                let attempts = (count / T::real(2.0)).floor().to_u64().unwrap_or(0);
                let successes = (T::from_u64(attempts).unwrap() * success)
                    .round()
                    .to_u64()
                    .unwrap_or(0);
                (
                    Payload::PurifySummary {
                        round,
                        attempts,
                        successes,
                    },
                    Payload::PurifySummary {
                        round,
                        attempts,
                        successes,
                    },
                )
            }
        };
        // Each party reports its half of the outcomes from its own
        // scheduled instant.
        let alice_send = self.alice.clock.reference_time(reading);
        let bob_send = self.bob.clock.reference_time(reading);
        self.send(ClassicalMessage {
            sender: PartyId::Alice,
            receiver: PartyId::Bob,
            send_time: alice_send,
            payload: alice_payload,
        });
        self.send(ClassicalMessage {
            sender: PartyId::Bob,
            receiver: PartyId::Alice,
            send_time: bob_send,
            payload: bob_payload,
        });
        Ok(())
    }

    fn mean_fidelity(&self) -> Result<T, HarnessError> {
        if self.pairs.is_empty() {
            return Ok(T::zero());
        }
        let mut acc = T::zero();
        for p in &self.pairs {
            acc += p.fidelity(self.circuit.target())?;
        }
        Ok(acc / T::from_usize(self.pairs.len()).unwrap())
    }

    fn on_deliver(&mut self, msg: ClassicalMessage<T>, time: T) -> Result<(), HarnessError> {
        self.messages.push(LoggedMessage {
            message: msg.clone(),
            delivery_time: time,
        });
        match (&msg.receiver, &msg.payload) {
            (PartyId::Bob, Payload::RotationSeed { .. }) => {
                if self.bob_has_seed {
                    return Err(HarnessError::ProtocolOrder(
                        "duplicate rotation seed".into(),
                    ));
                }
                self.bob_has_seed = true;
                Ok(())
            }
            (PartyId::Bob, Payload::PurifyOutcomes { round, .. })
            | (PartyId::Bob, Payload::PurifySummary { round, .. }) => {
                if !self.bob_has_seed {
                    return Err(HarnessError::ProtocolOrder(format!(
                        "round {round} outcomes reached Bob before the rotation seed"
                    )));
                }
                if *round != self.bob_round_acks + 1 {
                    return Err(HarnessError::ProtocolOrder(format!(
                        "Bob got round {round} outcomes, expected round {}",
                        self.bob_round_acks + 1
                    )));
                }
                self.bob_round_acks = *round;
                Ok(())
            }
            (PartyId::Alice, Payload::PurifyOutcomes { round, .. })
            | (PartyId::Alice, Payload::PurifySummary { round, .. }) => {
                if *round != self.alice_round_acks + 1 {
                    return Err(HarnessError::ProtocolOrder(format!(
                        "Alice got round {round} outcomes, expected round {}",
                        self.alice_round_acks + 1
                    )));
                }
                self.alice_round_acks = *round;
                Ok(())
            }
            (PartyId::Bob, Payload::QcsOutcomes { .. })
            | (PartyId::Bob, Payload::QcsSummary { .. }) => self.on_bob_qcs(&msg, time),
            (receiver, payload) => Err(HarnessError::ProtocolOrder(format!(
                "unexpected payload {payload:?} for {receiver:?}"
            ))),
        }
    }

    fn on_alice_qcs(&mut self, time: T) -> Result<(), HarnessError> {
        if self.alice_round_acks != self.rounds {
            return Err(HarnessError::ProtocolOrder(format!(
                "Alice measuring with only {}/{} round acknowledgements",
                self.alice_round_acks, self.rounds
            )));
        }
        if self.alice.phase != PartyPhase::Purifying {
            return Err(HarnessError::ProtocolOrder(format!(
                "Alice cannot measure while {:?}",
                self.alice.phase
            )));
        }
        let payload = match self.scenario.mode {
            EnsembleMode::MonteCarlo => {
                if self.pairs.is_empty() {
                    return Err(HarnessError::Exhausted(0));
                }
                let h_alice = gate_in_frame(&gates::hadamard(), &self.alice.frame)?;
                let projectors = gates::computational_projectors::<T>();
                let mut rng =
                    seed::stream(self.scenario.master_seed, seed::domain::QCS_ALICE, 0);
                let mut bits = Vec::with_capacity(self.pairs.len());
                let mut collapsed = Vec::with_capacity(self.pairs.len());
                for pair in &self.pairs {
                    let rotated = pair.apply_unitary(&h_alice, &[0])?;
                    let meas = rotated.projective_measure(&projectors, 0, &mut rng)?;
                    bits.push(meas.outcome as u8);
                    collapsed.push(meas.post_state);
                }
                self.alice_qcs = Some(AliceQcsData {
                    collapsed,
                    lab_time: time,
                });
                Payload::QcsOutcomes { bits }
            }
            EnsembleMode::Analytic => {
                let (_, count) = self.analytic.expect("analytic state present");
                let m = count.floor().to_u64().unwrap_or(0).max(1);
                self.alice_qcs = Some(AliceQcsData {
                    collapsed: Vec::new(),
                    lab_time: time,
                });
                Payload::QcsSummary { count: m }
            }
        };
        self.alice.phase = PartyPhase::QcsAliceMeasured;
        self.send(ClassicalMessage {
            sender: PartyId::Alice,
            receiver: PartyId::Bob,
            send_time: time,
            payload,
        });
        Ok(())
    }

    fn on_bob_qcs(&mut self, msg: &ClassicalMessage<T>, time: T) -> Result<(), HarnessError> {
        if self.bob_round_acks != self.rounds {
            return Err(HarnessError::ProtocolOrder(format!(
                "Bob got estimation outcomes with only {}/{} round acknowledgements",
                self.bob_round_acks, self.rounds
            )));
        }
        if self.bob.phase != PartyPhase::Purifying {
            return Err(HarnessError::ProtocolOrder(
                "Bob already finished estimation".into(),
            ));
        }
        let alice_data = self
            .alice_qcs
            .as_ref()
            .ok_or_else(|| HarnessError::ProtocolOrder("estimation outcomes without Alice's measurement".into()))?;

        // Bob's own knowledge: his clock reading now, and the pre-agreed
        // measurement reading.  The difference is his believed elapsed time.
        let tau_qcs = T::from_u32(self.rounds + 1).unwrap() * self.scenario.round_slot;
        let believed = self.bob.clock.reading(time) - tau_qcs;
        // Physics: the actual elapsed time since Alice's measurement.
        let actual = time - alice_data.lab_time;
        // Bob compensates `believed` of free precession; the rest survives.
        let residual = actual - believed;

        let omega = self.scenario.omega;
        let (m, k) = match self.scenario.mode {
            EnsembleMode::MonteCarlo => {
                let net = time_delay_operator(omega, residual);
                let z = gates::pauli_z::<T>();
                let h_bob = gate_in_frame(&gates::hadamard(), &self.bob.frame)?;
                let projectors = gates::computational_projectors::<T>();
                let mut rng = seed::stream(self.scenario.master_seed, seed::domain::QCS_BOB, 0);
                let mut k = 0u64;
                let bits = match &msg.payload {
                    Payload::QcsOutcomes { bits } => bits,
                    _ => {
                        return Err(HarnessError::ProtocolOrder(
                            "monte carlo run requires the explicit outcome list".into(),
                        ))
                    }
                };
                if bits.len() != alice_data.collapsed.len() {
                    return Err(HarnessError::Internal(
                        "outcome list length mismatch".into(),
                    ));
                }
                for (pair, &bit) in alice_data.collapsed.iter().zip(bits) {
                    let mut state = pair.apply_unitary(&net, &[1])?;
                    if bit == 0 {
                        state = state.apply_unitary(&z, &[1])?;
                    }
                    let state = state.apply_unitary(&h_bob, &[1])?;
                    let meas = state.projective_measure(&projectors, 1, &mut rng)?;
                    if meas.outcome == 0 {
                        k += 1;
                    }
                }
                (bits.len() as u64, k)
            }
            EnsembleMode::Analytic => {
                let m = match &msg.payload {
                    Payload::QcsSummary { count } => *count,
                    Payload::QcsOutcomes { bits } => bits.len() as u64,
                    _ => unreachable!("routed by payload kind"),
                };
                let (f, _) = self.analytic.expect("analytic state present");
                let third = (T::one() - f) / T::real(3.0);
                let weights = BellDiagonal::new(f, third, third, third);
                let theta = -(omega * residual);
                let p0 = bell_diagonal_p_zero(&weights, theta)
                    .to_f64()
                    .unwrap()
                    .clamp(0.0, 1.0);
                let mut rng = seed::stream(self.scenario.master_seed, seed::domain::QCS_BOB, 0);
                let k = Binomial::new(m, p0)
                    .map_err(|e| HarnessError::Internal(e.to_string()))?
                    .sample(&mut rng);
                (m, k)
            }
        };
        self.estimate = Some(estimate_report(m, k, omega));
        self.bob.phase = PartyPhase::Done;
        self.alice.phase = PartyPhase::Done;
        Ok(())
    }

    /// Drains the queue and assembles the report.
    pub fn run(mut self) -> Result<RunReport<T>, HarnessError> {
        while self.step()? == StepOutcome::Progressed {}
        let estimate = self
            .estimate
            .ok_or_else(|| HarnessError::Internal("run ended without an estimate".into()))?;
        let trajectory = PurificationTrajectory {
            mode: self.scenario.mode,
            yield_convention: YieldConvention::Ideal,
            rounds: self.trajectory_rows,
            warnings: Vec::new(),
        };
        let f0 = trajectory.rounds[0].fidelity;
        let budget = error_budget(self.scenario.n_pairs, self.rounds, f0, self.scenario.omega)
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
        let theta_signal = self.scenario.omega * self.scenario.clock_offset;
        Ok(RunReport {
            rounds_executed: self.rounds,
            trajectory,
            estimate,
            budget,
            estimated_offset: estimate.t_hat,
            true_offset: self.scenario.clock_offset,
            effective_phase: self.scenario.true_phase(),
            initial_fidelity: self.initial_fidelity,
            branch_ok: theta_signal >= T::zero() && theta_signal < T::PI(),
            messages: self.messages,
            scenario: self.scenario,
        })
    }
}

/// Pops and processes the next event; exposed for drivers and tests.
pub fn step_events<T: Scalar>(sim: &mut Simulation<T>) -> Result<StepOutcome, HarnessError> {
    sim.step()
}

/// Runs a scenario end to end.
pub fn run_scenario<T: Scalar>(scenario: Scenario<T>) -> Result<RunReport<T>, HarnessError> {
    Simulation::new(scenario)?.run()
}
