//! Clock-offset estimation from shared singlets, and its error budget.
//!
//! After purification the parties hold `M` near-singlet pairs.  Alice
//! measures her halves in the `|±⟩` basis and publishes the outcome bits;
//! Bob, after his qubits have precessed for the elapsed time `t`, applies a
//! conditional Z, a Hadamard, and measures.  Each of his qubits lands on
//! `|0⟩` with probability `p₀ = cos²((ωt+ε)/2)`, so the count `k` of zeros
//! estimates the precession phase, and with it the elapsed time:
//! `t̂ = (arccos x − ε)/ω` with `x = (2k−M)/M`.
//!
//! Two error sources are budgeted: the binomial spread of `k` (the standard
//! quantum limit, `1/(ω√M)`) and the residual infidelity of the pairs
//! (`√(1−F)/ω`), combined in quadrature.  Purifying longer raises `F` but
//! halves the pair count per round, so the total error has an interior
//! optimum in the round count.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::purify::{recurrence_step, PurifyError};
use crate::Scalar;

/// Largest per-qubit register; above this, sampling uses the binomial fast
/// path (identical in distribution).
pub const PER_QUBIT_LIMIT: u64 = 1_000;

/// Largest `M` for which the exact outcome distribution is materialized.
pub const EXACT_DISTRIBUTION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, thiserror::Error)]
pub enum QcsError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("exact distribution limited to M ≤ {max}, got {m}")]
    TooManyPairs { m: u64, max: u64 },
    #[error("{pairs} pairs cannot sustain {rounds} purification rounds (need 2^rounds)")]
    InsufficientPairs { pairs: u64, rounds: u32 },
    #[error(transparent)]
    Purify(#[from] PurifyError),
}

/// Ground-truth parameters of one estimation run.
///
/// `epsilon` is the residual systematic phase of the shared pairs; it is
/// threaded through the simulation as truth but hidden from the estimator
/// (the protocol has no way to know it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcsConfig<T: Scalar> {
    pub m: u64,
    pub epsilon: T,
    pub omega: T,
    pub t_true: T,
}

impl<T: Scalar> QcsConfig<T> {
    pub fn new(m: u64, epsilon: T, omega: T, t_true: T) -> Result<Self, QcsError> {
        if m < 1 {
            return Err(QcsError::BadConfig("M must be at least 1".into()));
        }
        if omega <= T::zero() || !omega.is_finite() {
            return Err(QcsError::BadConfig(format!("omega must be positive, got {omega}")));
        }
        if !epsilon.is_finite() || !t_true.is_finite() {
            return Err(QcsError::BadConfig("non-finite epsilon or t_true".into()));
        }
        Ok(QcsConfig {
            m,
            epsilon,
            omega,
            t_true,
        })
    }

    /// The total signal phase `ωt + ε`.
    pub fn theta(&self) -> T {
        self.omega * self.t_true + self.epsilon
    }

    /// Whether the signal phase sits strictly inside the principal arccos
    /// branch `(0, π)`.  Outside it the estimator aliases; callers flag this
    /// rather than refuse, since the boundary case θ = 0 is a legitimate
    /// null experiment.
    pub fn branch_ok(&self) -> bool {
        let theta = self.theta();
        theta > T::zero() && theta < T::PI()
    }
}

/// One estimation run: the zero count, the derived estimator and its spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport<T: Scalar> {
    pub m: u64,
    /// Count of Bob's qubits found in `|0⟩`.
    pub k: u64,
    /// `(2k − M)/M ∈ [−1, 1]`.
    pub x: T,
    /// Elapsed-time estimate, seconds.
    pub t_hat: T,
    /// Standard error propagated from the exact binomial variance
    /// `4p̂₀p̂₁/M`; infinite at the degenerate endpoints `x = ±1`.
    pub stderr: T,
    /// The standard-quantum-limit bound `1/(ω√M)` (the binomial error's
    /// envelope over θ).
    pub stderr_sql: T,
}

/// `t̂ = (arccos((2k−M)/M) − ε_assumed)/ω`, principal branch.
pub fn estimate_time<T: Scalar>(k: u64, m: u64, omega: T, epsilon_assumed: T) -> T {
    let x = x_of::<T>(k, m);
    (x.acos() - epsilon_assumed) / omega
}

fn x_of<T: Scalar>(k: u64, m: u64) -> T {
    let two = T::real(2.0);
    (two * T::from_u64(k).unwrap() - T::from_u64(m).unwrap()) / T::from_u64(m).unwrap()
}

/// Assembles the report for an observed zero count `k` out of `m`, with the
/// estimator evaluated at `ε_assumed = 0`.
pub fn estimate_report<T: Scalar>(m: u64, k: u64, omega: T) -> EstimateReport<T> {
    let x = x_of::<T>(k, m);
    let t_hat = estimate_time(k, m, omega, T::zero());
    let mf = T::from_u64(m).unwrap();
    let p0_hat = T::from_u64(k).unwrap() / mf;
    let var_x = T::real(4.0) * p0_hat * (T::one() - p0_hat) / mf;
    let denom = (T::one() - x * x).sqrt();
    let stderr = if denom > T::zero() {
        var_x.sqrt() / (omega * denom)
    } else {
        T::infinity()
    };
    EstimateReport {
        m,
        k,
        x,
        t_hat,
        stderr,
        stderr_sql: T::one() / (omega * mf.sqrt()),
    }
}

/// Samples one full estimation run.
///
/// Below [`PER_QUBIT_LIMIT`] every qubit is simulated: Alice's `±` outcome is
/// drawn, Bob's amplitudes are evolved for `t_true`, corrected and rotated,
/// and his outcome drawn from the resulting amplitude; the slow path exists
/// as an oracle for the fast path.  Above the limit, `k` is drawn directly
/// from `Binomial(M, p₀)`, which the per-qubit path reduces to exactly.
pub fn simulate_qcs_sampling<T: Scalar, R: Rng + ?Sized>(
    cfg: &QcsConfig<T>,
    rng: &mut R,
) -> EstimateReport<T> {
    let k = if cfg.m <= PER_QUBIT_LIMIT {
        sample_per_qubit(cfg, rng)
    } else {
        let p0 = p_zero(cfg.theta()).to_f64().unwrap().clamp(0.0, 1.0);
        Binomial::new(cfg.m, p0)
            .expect("probability in range")
            .sample(rng)
    };
    estimate_report(cfg.m, k, cfg.omega)
}

/// `p₀ = cos²(θ/2)`.
fn p_zero<T: Scalar>(theta: T) -> T {
    (theta / T::real(2.0)).cos().powi(2)
}

/// Final-measurement zero probability when the shared pairs are the given
/// Bell-diagonal mixture and the uncompensated signal phase is `θ`.
///
/// Component by component, the ψ⁻ and φ⁻ projectors land on `|0⟩` with
/// probability `cos²(θ/2)` and the ψ⁺ and φ⁺ projectors with `sin²(θ/2)`
/// (the φ states differ from the ψ states only in correlations Alice's `±`
/// measurement cannot see).  Equivalently the mean of `x` shrinks to
/// `((4F−1)/3)·cos θ` on a Werner state of singlet weight `F`.
pub fn bell_diagonal_p_zero<T: Scalar>(weights: &crate::channels::BellDiagonal<T>, theta: T) -> T {
    let c2 = p_zero(theta);
    let s2 = T::one() - c2;
    (weights.w_psi_minus + weights.w_phi_minus) * c2
        + (weights.w_psi_plus + weights.w_phi_plus) * s2
}

fn sample_per_qubit<T: Scalar, R: Rng + ?Sized>(cfg: &QcsConfig<T>, rng: &mut R) -> u64 {
    let half = T::real(std::f64::consts::FRAC_1_SQRT_2);
    let mut k = 0u64;
    for _ in 0..cfg.m {
        // Alice measures |±⟩; outcome "+" collapses Bob to (|0⟩ − e^{iε}|1⟩)/√2.
        let plus = rng.random_bool(0.5);
        let sign = if plus { -T::one() } else { T::one() };
        let c0 = Complex::new(half, T::zero());
        let mut c1 = Complex::from_polar(half, cfg.epsilon) * Complex::new(sign, T::zero());
        // Free precession for t_true.
        c1 *= Complex::from_polar(T::one(), cfg.omega * cfg.t_true);
        // Conditional Z removes the sign Alice's outcome imprinted.
        if plus {
            c1 = -c1;
        }
        // Hadamard, then a computational measurement.
        let a0 = (c0 + c1) * Complex::new(half, T::zero());
        let p0 = a0.norm_sqr().to_f64().unwrap().clamp(0.0, 1.0);
        if rng.random_bool(p0) {
            k += 1;
        }
    }
    k
}

/// Gaussian approximant to the distribution of `x = (2k−M)/M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianApprox<T: Scalar> {
    pub mean_x: T,
    pub var_x: T,
}

impl<T: Scalar> GaussianApprox<T> {
    pub fn pdf(&self, x: T) -> T {
        let two = T::real(2.0);
        let norm = (two * T::PI() * self.var_x).sqrt();
        let d = x - self.mean_x;
        (-(d * d) / (two * self.var_x)).exp() / norm
    }
}

/// Exact outcome distribution over `k`, with its Gaussian approximant in `x`
/// (mean `cos θ`, variance `4p₀p₁/M`).
#[derive(Debug, Clone)]
pub struct OutcomeDistribution<T: Scalar> {
    pub m: u64,
    pub p0: T,
    /// `P_k` for `k = 0..=M`, computed in log space.
    pub probabilities: Vec<T>,
    pub gaussian: GaussianApprox<T>,
}

/// `P_k = C(M,k) p₀^k (1−p₀)^{M−k}` with `p₀ = cos²(θ/2)`.
pub fn outcome_distribution<T: Scalar>(m: u64, theta: T) -> Result<OutcomeDistribution<T>, QcsError> {
    if !(1..=EXACT_DISTRIBUTION_LIMIT).contains(&m) {
        return Err(QcsError::TooManyPairs {
            m,
            max: EXACT_DISTRIBUTION_LIMIT,
        });
    }
    let p0 = p_zero(theta);
    let p1 = T::one() - p0;
    let n = m as usize;
    let mut probabilities = vec![T::zero(); n + 1];
    if p0 <= T::zero() {
        probabilities[0] = T::one();
    } else if p1 <= T::zero() {
        probabilities[n] = T::one();
    } else {
        // Log-space recurrence: ln P_{k+1} = ln P_k + ln((M−k)/(k+1)) + ln(p₀/p₁).
        let ratio = (p0 / p1).ln();
        let mut ln_pk = T::from_u64(m).unwrap() * p1.ln();
        probabilities[0] = ln_pk.exp();
        for k in 0..n {
            let step = (T::from_usize(n - k).unwrap() / T::from_usize(k + 1).unwrap()).ln();
            ln_pk = ln_pk + step + ratio;
            probabilities[k + 1] = ln_pk.exp();
        }
    }
    let var_x = T::real(4.0) * p0 * p1 / T::from_u64(m).unwrap();
    Ok(OutcomeDistribution {
        m,
        p0,
        probabilities,
        gaussian: GaussianApprox {
            mean_x: theta.cos(),
            var_x,
        },
    })
}

/// The two-component error budget after `n_rounds` of purification starting
/// from `n_pairs` pairs at fidelity `f0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget<T: Scalar> {
    pub n_rounds: u32,
    /// Fidelity after `n_rounds` applications of the recurrence.
    pub f_n: T,
    /// Pairs left for estimation, `N / 2ⁿ` (ideal-yield accounting).
    pub pairs_used: T,
    /// `(1/ω)·√(2ⁿ/N)`, seconds.
    pub dt_sql: T,
    /// `√(1−Fₙ)/ω`, seconds.
    pub dt_fidelity: T,
    /// Quadrature total, seconds.
    pub dt_total: T,
}

pub fn error_budget<T: Scalar>(
    n_pairs: u64,
    n_rounds: u32,
    f0: T,
    omega: T,
) -> Result<ErrorBudget<T>, QcsError> {
    if n_rounds >= 64 || (1u64 << n_rounds) > n_pairs {
        return Err(QcsError::InsufficientPairs {
            pairs: n_pairs,
            rounds: n_rounds,
        });
    }
    if omega <= T::zero() || !omega.is_finite() {
        return Err(QcsError::BadConfig(format!("omega must be positive, got {omega}")));
    }
    let mut f_n = f0;
    for _ in 0..n_rounds {
        f_n = recurrence_step(f_n)?.0;
    }
    let pairs_used = T::from_u64(n_pairs).unwrap() / T::real(2.0).powi(n_rounds as i32);
    let dt_sql = T::one() / (omega * pairs_used.sqrt());
    let dt_fidelity = (T::one() - f_n).max(T::zero()).sqrt() / omega;
    let dt_total = (dt_sql * dt_sql + dt_fidelity * dt_fidelity).sqrt();
    let budget = ErrorBudget {
        n_rounds,
        f_n,
        pairs_used,
        dt_sql,
        dt_fidelity,
        dt_total,
    };
    debug_assert!(budget.quadrature_deviation() <= T::tight_tol());
    Ok(budget)
}

impl<T: Scalar> ErrorBudget<T> {
    /// `|dt_total² − dt_sql² − dt_fidelity²|`, normalized by `dt_total²`.
    pub fn quadrature_deviation(&self) -> T {
        let lhs = self.dt_total * self.dt_total;
        let rhs = self.dt_sql * self.dt_sql + self.dt_fidelity * self.dt_fidelity;
        if lhs > T::zero() {
            (lhs - rhs).abs() / lhs
        } else {
            (lhs - rhs).abs()
        }
    }
}

/// The full δt(n) curve and its minimizer (ties broken toward smaller n).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizedBudget<T: Scalar> {
    pub n_star: u32,
    pub best: ErrorBudget<T>,
    pub curve: Vec<ErrorBudget<T>>,
}

pub fn optimize_rounds<T: Scalar>(
    n_pairs: u64,
    f0: T,
    omega: T,
    n_max: u32,
) -> Result<OptimizedBudget<T>, QcsError> {
    let mut curve = Vec::new();
    for n in 0..=n_max {
        if n >= 64 || (1u64 << n) > n_pairs {
            break;
        }
        curve.push(error_budget(n_pairs, n, f0, omega)?);
    }
    if curve.is_empty() {
        return Err(QcsError::InsufficientPairs {
            pairs: n_pairs,
            rounds: 0,
        });
    }
    let mut n_star = 0usize;
    for (i, b) in curve.iter().enumerate() {
        if b.dt_total < curve[n_star].dt_total {
            n_star = i;
        }
    }
    Ok(OptimizedBudget {
        n_star: curve[n_star].n_rounds,
        best: curve[n_star],
        curve,
    })
}
