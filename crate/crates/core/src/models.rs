//! Built-in models: Grover, generalized Grover and the Ising chain with
//! cut-count partitions, with their closed-form reference results.

use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::configspace::{cut_count, ModelSpec, Partition, Potential};
use crate::error::{Error, Result};
use crate::scalar::{log_two_cosh, Real};

/// Grover search Hamiltonian, `V(n) = -J N` on the targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroverSpec {
    pub n_qubits: u32,
    pub j: f64,
    pub gamma: f64,
    /// Sorted, pairwise Hamming distance >= 3 when more than one.
    pub targets: Vec<u64>,
}

impl GroverSpec {
    /// Single target at the all-ones pattern.
    pub fn new(n_qubits: u32, j: f64, gamma: f64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > crate::configspace::MAX_QUBITS {
            return Err(Error::InvalidModel(format!(
                "unsupported qubit count {n_qubits}"
            )));
        }
        let all_ones = (1u64 << n_qubits) - 1;
        Self::with_targets(n_qubits, j, gamma, vec![all_ones])
    }

    pub fn with_targets(n_qubits: u32, j: f64, gamma: f64, mut targets: Vec<u64>) -> Result<Self> {
        if !(j > 0.0) || !j.is_finite() {
            return Err(Error::InvalidModel(format!(
                "Grover coupling J must be positive, got {j}"
            )));
        }
        if targets.is_empty() {
            return Err(Error::InvalidModel(
                "Grover model needs at least one target".into(),
            ));
        }
        targets.sort_unstable();
        targets.dedup();
        for (i, &a) in targets.iter().enumerate() {
            for &b in &targets[i + 1..] {
                if (a ^ b).count_ones() < 3 {
                    return Err(Error::InvalidModel(format!(
                        "targets {a:#b} and {b:#b} are closer than three flips"
                    )));
                }
            }
        }
        let spec = Self {
            n_qubits,
            j,
            gamma,
            targets,
        };
        spec.model()?;
        Ok(spec)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        ModelSpec::new(
            self.n_qubits,
            self.gamma,
            Potential::Grover {
                j: self.j,
                targets: self.targets.clone(),
            },
        )
    }

    /// The targets form the condensed set.
    pub fn partition(&self) -> Result<Partition> {
        Partition::new(self.n_qubits, self.targets.iter().copied())
    }
}

/// Closed-form `(F_cond, F_norm)` of the single-target Grover model.
///
/// `F_cond = -J N`; `F_norm = -(N/β) log(2 cosh βΓ)`, the free energy of the
/// bare hopping operator, which differs from the normal block by the single
/// missing target.
pub fn grover_free_energies<T: Real>(n_qubits: u32, j: T, gamma: T, beta: T) -> Result<(T, T)> {
    check_beta(beta)?;
    let n = T::of(f64::from(n_qubits));
    let f_cond = -j * n;
    let f_norm = -n * log_two_cosh(beta * gamma) / beta;
    Ok((f_cond, f_norm))
}

/// Critical hopping `Γ_c(T)` of the Grover model at temperature `T`.
///
/// Returns `None` above `k_B T = J / log 2`, where no condensed phase exists.
/// Of the two roots of `x + 1/x = e^{βJ}` with `x = e^{βΓ}`, the one with
/// `x > 1` is returned.
pub fn grover_critical_gamma<T: Real>(j: T, temperature: T, k_b: T) -> Option<T> {
    if temperature < T::zero() {
        return None;
    }
    if temperature == T::zero() {
        return Some(j);
    }
    let kt = k_b * temperature;
    if kt > j / T::LN_2() {
        return None;
    }
    let mut radicand = T::of(0.25) - (-(j + j) / kt).exp();
    if radicand < T::zero() {
        if radicand < T::of(-1e-12) {
            return None;
        }
        radicand = T::zero();
    }
    let gamma = j + kt * (T::half() + radicand.sqrt()).ln();
    Some(gamma.max(T::zero()))
}

/// Closed-form Grover thermodynamics at one temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroverThermo<T> {
    pub u_cond: T,
    pub u_norm: T,
    pub s_cond: T,
    pub s_norm: T,
    pub c_cond: T,
    /// Specific heat per qubit of the normal phase.
    pub c_norm: T,
}

pub fn grover_thermo<T: Real>(
    n_qubits: u32,
    j: T,
    gamma: T,
    beta: T,
    k_b: T,
) -> Result<GroverThermo<T>> {
    check_beta(beta)?;
    let n = T::of(f64::from(n_qubits));
    let x = beta * gamma;
    let sech_term = if x.abs() > T::of(300.0) {
        T::zero()
    } else {
        x / x.cosh()
    };
    Ok(GroverThermo {
        u_cond: -j * n,
        u_norm: -gamma * n * x.tanh(),
        s_cond: T::zero(),
        s_norm: n * k_b * (log_two_cosh(x) - x * x.tanh()),
        c_cond: T::zero(),
        c_norm: k_b * sech_term * sech_term,
    })
}

/// Ising chain with cut-count threshold partitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingChainSpec {
    pub n_qubits: u32,
    pub j: f64,
    pub gamma: f64,
    /// Highest cut count kept in the condensed set, `0 <= k <= N-2`.
    pub k: u32,
}

impl IsingChainSpec {
    pub fn new(n_qubits: u32, j: f64, gamma: f64, k: u32) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::InvalidModel(
                "Ising chain needs at least two qubits".into(),
            ));
        }
        if !(j > 0.0) || !j.is_finite() {
            return Err(Error::InvalidModel(format!(
                "Ising coupling J must be positive, got {j}"
            )));
        }
        if k > n_qubits - 2 {
            return Err(Error::OutOfRange {
                what: "threshold index k",
                value: i64::from(k),
            });
        }
        Ok(Self {
            n_qubits,
            j,
            gamma,
            k,
        })
    }

    pub fn model(&self) -> Result<ModelSpec> {
        ModelSpec::new(
            self.n_qubits,
            self.gamma,
            Potential::IsingChain { j: self.j },
        )
    }
}

/// `(V_q, D(q))`: level energy `-J N + 2 J q` and its degeneracy `2 C(N-1, q)`.
pub fn ising_level<T: Real>(n_qubits: u32, q: u32, j: T) -> Result<(T, u64)> {
    if n_qubits == 0 || q > n_qubits - 1 {
        return Err(Error::OutOfRange {
            what: "cut count q",
            value: i64::from(q),
        });
    }
    let v = -j * T::of(f64::from(n_qubits)) + T::two() * j * T::of(f64::from(q));
    Ok((v, 2 * binomial(u64::from(n_qubits - 1), u64::from(q))))
}

/// Condensed set `{ n : V(n) <= V_k }`, i.e. cut count at most `k`.
pub fn ising_partition(spec: &IsingChainSpec, limit: u64) -> Result<Partition> {
    let model = spec.model()?;
    model.check_enumerable(limit)?;
    let n = spec.n_qubits;
    Partition::new(n, (0..model.dim()).filter(|&b| cut_count(b, n) <= spec.k))
}

/// `2 Σ_{q <= k} C(N-1, q)`.
pub fn ising_cond_dimension(n_qubits: u32, k: u32) -> u64 {
    (0..=k.min(n_qubits - 1))
        .map(|q| 2 * binomial(u64::from(n_qubits - 1), u64::from(q)))
        .sum()
}

pub(crate) fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBeta(beta.to_f64_lossy()))
    }
}
