//! Dense spectral engine.
//!
//! Builds `H` and its restrictions to the condensed and normal blocks in the
//! configuration basis, diagonalizes them, and evaluates free energies,
//! thermodynamic derivatives, the occupation probability of the condensed
//! subspace and the diagonal matrix elements of `e^{-βH}`.
//!
//! Restricted blocks are standalone matrices of the subspace dimension. Links
//! crossing the partition are dropped, so `H_cond ⊕ H_norm != H` whenever
//! `Γ > 0`.

use faer::{Mat, MatRef, Side as FaerSide};
use serde::Serialize;

use crate::configspace::{ModelSpec, Partition, Side};
use crate::error::{Error, Result};
use crate::models::check_beta;
use crate::scalar::{log_sum_exp, pairwise_sum, Real};

/// Default cap on the dimension of a dense matrix.
pub const DEFAULT_DENSE_LIMIT: u64 = 1 << 14;

/// Vectors up to this dimension are checked for `‖Hv - λv‖ <= 1e-10 ‖H‖` on construction.
pub const RESIDUAL_CHECK_MAX_DIM: usize = 2048;

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    Full,
    Cond,
    Norm,
}

impl From<Side> for Restriction {
    fn from(side: Side) -> Self {
        match side {
            Side::Cond => Restriction::Cond,
            Side::Norm => Restriction::Norm,
        }
    }
}

/// Real symmetric matrix of `H` (or one of its blocks) in the configuration basis.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    restriction: Restriction,
    basis: Vec<u64>,
    entries: Mat<f64>,
}

impl HamiltonianMatrix {
    pub fn restriction(&self) -> Restriction {
        self.restriction
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Bit pattern of each row, ascending.
    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn entries(&self) -> MatRef<'_, f64> {
        self.entries.as_ref()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dimension();
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Dense `H`, `H_cond` or `H_norm`.
///
/// `partition` is ignored for [`Restriction::Full`] and required otherwise.
pub fn build_hamiltonian(
    spec: &ModelSpec,
    partition: Option<&Partition>,
    restriction: Restriction,
    dense_limit: u64,
) -> Result<HamiltonianMatrix> {
    let basis: Vec<u64> = match restriction {
        Restriction::Full => {
            check_dense(spec.dim(), dense_limit)?;
            (0..spec.dim()).collect()
        }
        Restriction::Cond | Restriction::Norm => {
            let p = partition
                .ok_or_else(|| Error::InvalidModel("restricted matrix needs a partition".into()))?;
            if p.n_qubits() != spec.n_qubits() {
                return Err(Error::InvalidModel(
                    "partition and model disagree on N".into(),
                ));
            }
            let dim = if restriction == Restriction::Cond {
                p.dim_cond()
            } else {
                p.dim_norm()
            };
            check_dense(dim, dense_limit)?;
            if restriction == Restriction::Cond {
                p.cond_members().to_vec()
            } else {
                p.norm_members().collect()
            }
        }
    };
    if basis.is_empty() {
        return Err(Error::EmptySubspace(if restriction == Restriction::Cond {
            "cond"
        } else {
            "norm"
        }));
    }

    // row index of every bit pattern, or usize::MAX outside the block
    let mut index = vec![usize::MAX; spec.dim() as usize];
    for (row, &b) in basis.iter().enumerate() {
        index[b as usize] = row;
    }
    let hop = spec.gamma() * spec.hopping().element();
    let n = basis.len();
    let mut entries = Mat::<f64>::zeros(n, n);
    for (row, &b) in basis.iter().enumerate() {
        entries[(row, row)] = spec.v(b);
        if hop != 0.0 {
            for i in 0..spec.n_qubits() {
                let col = index[(b ^ (1u64 << i)) as usize];
                if col != usize::MAX {
                    entries[(row, col)] = hop;
                }
            }
        }
    }
    Ok(HamiltonianMatrix {
        restriction,
        basis,
        entries,
    })
}

fn check_dense(dim: u64, limit: u64) -> Result<()> {
    if dim > limit {
        Err(Error::TooLarge {
            what: "dense",
            dim,
            limit,
        })
    } else {
        Ok(())
    }
}

/// Spectrum of one matrix; eigenvalues ascending, vectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralCache {
    restriction: Restriction,
    basis: Vec<u64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Option<Mat<f64>>,
}

impl SpectralCache {
    /// Spectrum without a basis, for abstract level sets.
    pub fn from_levels(mut levels: Vec<f64>) -> Self {
        levels.sort_by(f64::total_cmp);
        Self {
            restriction: Restriction::Full,
            basis: Vec::new(),
            eigenvalues: levels,
            eigenvectors: None,
        }
    }

    pub fn restriction(&self) -> Restriction {
        self.restriction
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> Option<MatRef<'_, f64>> {
        self.eigenvectors.as_ref().map(|m| m.as_ref())
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn free_energy(&self, beta: f64) -> Result<f64> {
        free_energy(&self.eigenvalues, beta)
    }

    pub fn thermo_point(&self, beta: f64, k_b: f64) -> Result<ThermoPoint<f64>> {
        thermo_point(&self.eigenvalues, beta, k_b)
    }

    /// Largest `‖Hv - λv‖ / ‖H‖_∞` over the stored pairs.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> Option<f64> {
        let u = self.eigenvectors.as_ref()?;
        let hu = h.entries() * u.as_ref();
        let scale = h.norm_inf().max(f64::MIN_POSITIVE);
        let n = u.nrows();
        let worst = (0..u.ncols())
            .map(|k| {
                let lambda = self.eigenvalues[k];
                (0..n)
                    .map(|i| (hu[(i, k)] - lambda * u[(i, k)]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        Some(worst / scale)
    }

    /// `log ⟨n|e^{-βH}|n⟩` for every basis row.
    pub fn log_diagonal_of_exp(&self, beta: f64) -> Result<Vec<f64>> {
        check_beta(beta)?;
        let u = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::Eigen("eigenvectors were not kept".into()))?;
        let e0 = self.ground_energy();
        let mut terms = vec![0.0; self.eigenvalues.len()];
        Ok((0..u.nrows())
            .map(|row| {
                for (k, t) in terms.iter_mut().enumerate() {
                    let amp = u[(row, k)];
                    *t = -beta * (self.eigenvalues[k] - e0) + (amp * amp).ln();
                }
                -beta * e0 + log_sum_exp(&terms)
            })
            .collect())
    }
}

/// Diagonalize a dense matrix.
pub fn diagonalize(h: &HamiltonianMatrix, keep_vectors: bool) -> Result<SpectralCache> {
    let (eigenvalues, eigenvectors) = if keep_vectors {
        let evd = h
            .entries
            .self_adjoint_eigen(FaerSide::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let values: Vec<f64> = evd.S().column_vector().iter().copied().collect();
        (values, Some(evd.U().to_owned()))
    } else {
        let values = h
            .entries
            .self_adjoint_eigenvalues(FaerSide::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        (values, None)
    };
    let cache = SpectralCache {
        restriction: h.restriction,
        basis: h.basis.clone(),
        eigenvalues,
        eigenvectors,
    };
    if h.dimension() <= RESIDUAL_CHECK_MAX_DIM {
        if let Some(r) = cache.max_residual(h) {
            if r > RESIDUAL_TOLERANCE {
                return Err(Error::Eigen(format!(
                    "eigenpair residual {r:e} above tolerance"
                )));
            }
        }
    }
    Ok(cache)
}

/// Canonical thermodynamics of one spectrum at inverse temperature `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermoPoint<T> {
    pub beta: T,
    pub temperature: T,
    pub free_energy: T,
    pub internal_energy: T,
    pub entropy: T,
    pub specific_heat: T,
    pub k_b: T,
}

/// `F = -(1/β) log Σ e^{-β E_i}`, shifted by the lowest level.
pub fn free_energy<T: Real>(levels: &[T], beta: T) -> Result<T> {
    check_beta(beta)?;
    if levels.is_empty() {
        return Err(Error::EmptySubspace("spectrum"));
    }
    let e0 = levels.iter().copied().fold(T::infinity(), T::min);
    let shifted: Vec<T> = levels.iter().map(|&e| -beta * (e - e0)).collect();
    Ok(e0 - log_sum_exp(&shifted) / beta)
}

pub fn thermo_point<T: Real>(levels: &[T], beta: T, k_b: T) -> Result<ThermoPoint<T>> {
    check_beta(beta)?;
    if levels.is_empty() {
        return Err(Error::EmptySubspace("spectrum"));
    }
    let e0 = levels.iter().copied().fold(T::infinity(), T::min);
    let boltzmann: Vec<T> = levels.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z = pairwise_sum(&boltzmann);
    let weights: Vec<T> = boltzmann.iter().map(|&w| w / z).collect();
    let u = pairwise_sum(
        &weights
            .iter()
            .zip(levels)
            .map(|(&w, &e)| w * e)
            .collect::<Vec<_>>(),
    );
    let var = pairwise_sum(
        &weights
            .iter()
            .zip(levels)
            .map(|(&w, &e)| w * (e - u) * (e - u))
            .collect::<Vec<_>>(),
    );
    let log_z_shifted = z.ln();
    let f = e0 - log_z_shifted / beta;
    // S = k_B (log tr e^{-βH} + βU)
    let entropy = k_b * (log_z_shifted + beta * (u - e0));
    Ok(ThermoPoint {
        beta,
        temperature: T::one() / (k_b * beta),
        free_energy: f,
        internal_energy: u,
        entropy: entropy.max(T::zero()),
        specific_heat: k_b * beta * beta * var,
        k_b,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroundEnergies {
    pub full: f64,
    pub cond: f64,
    pub norm: f64,
}

/// Lowest eigenvalues of `H`, `H_cond` and `H_norm`.
pub fn ground_energies(
    spec: &ModelSpec,
    p: &Partition,
    dense_limit: u64,
) -> Result<GroundEnergies> {
    let lowest = |r| -> Result<f64> {
        let h = build_hamiltonian(spec, Some(p), r, dense_limit)?;
        Ok(diagonalize(&h, false)?.ground_energy())
    };
    Ok(GroundEnergies {
        full: lowest(Restriction::Full)?,
        cond: lowest(Restriction::Cond)?,
        norm: lowest(Restriction::Norm)?,
    })
}

/// Spectra of `H`, `H_cond` and `H_norm` for one model and partition.
#[derive(Clone, Debug)]
pub struct ExactSystem {
    spec: ModelSpec,
    partition: Partition,
    full: SpectralCache,
    cond: SpectralCache,
    norm: SpectralCache,
    /// `Σ_{n ∈ cond} |⟨n|E_i⟩|²` per full eigenvector.
    cond_weight: Option<Vec<f64>>,
}

impl ExactSystem {
    /// Diagonalizes all three matrices. With `keep_vectors`, eigenvectors are
    /// stored for `p_cond` and the matrix-element checks.
    pub fn new(
        spec: &ModelSpec,
        partition: &Partition,
        keep_vectors: bool,
        dense_limit: u64,
    ) -> Result<Self> {
        let solve = |r| -> Result<SpectralCache> {
            let h = build_hamiltonian(spec, Some(partition), r, dense_limit)?;
            diagonalize(&h, keep_vectors)
        };
        let full = solve(Restriction::Full)?;
        let cond_weight = full.eigenvectors.as_ref().map(|u| {
            (0..u.ncols())
                .map(|k| {
                    partition
                        .cond_members()
                        .iter()
                        .map(|&b| u[(b as usize, k)].powi(2))
                        .sum()
                })
                .collect()
        });
        Ok(Self {
            spec: spec.clone(),
            partition: partition.clone(),
            full,
            cond: solve(Restriction::Cond)?,
            norm: solve(Restriction::Norm)?,
            cond_weight,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn spectrum(&self, r: Restriction) -> &SpectralCache {
        match r {
            Restriction::Full => &self.full,
            Restriction::Cond => &self.cond,
            Restriction::Norm => &self.norm,
        }
    }

    pub fn ground_energies(&self) -> GroundEnergies {
        GroundEnergies {
            full: self.full.ground_energy(),
            cond: self.cond.ground_energy(),
            norm: self.norm.ground_energy(),
        }
    }

    /// `(F, F_cond, F_norm)`.
    pub fn free_energies(&self, beta: f64) -> Result<(f64, f64, f64)> {
        Ok((
            self.full.free_energy(beta)?,
            self.cond.free_energy(beta)?,
            self.norm.free_energy(beta)?,
        ))
    }

    /// Gibbs-state occupation of the condensed subspace.
    pub fn p_cond(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        let weights = self
            .cond_weight
            .as_ref()
            .ok_or_else(|| Error::Eigen("eigenvectors were not kept".into()))?;
        let e0 = self.full.ground_energy();
        let boltzmann: Vec<f64> = self
            .full
            .eigenvalues
            .iter()
            .map(|&e| (-beta * (e - e0)).exp())
            .collect();
        let z = pairwise_sum(&boltzmann);
        let num = pairwise_sum(
            &boltzmann
                .iter()
                .zip(weights)
                .map(|(b, w)| b * w)
                .collect::<Vec<_>>(),
        );
        Ok((num / z).clamp(0.0, 1.0))
    }

    /// `1 / (1 + e^{-β(F_norm - F_cond)})`.
    pub fn p_cond_logistic(&self, beta: f64) -> Result<f64> {
        let (_, fc, fnorm) = self.free_energies(beta)?;
        Ok(1.0 / (1.0 + (-beta * (fnorm - fc)).exp()))
    }

    pub fn thermo_row(&self, beta: f64, k_b: f64) -> Result<ThermoRow> {
        let full = self.full.thermo_point(beta, k_b)?;
        let cond = self.cond.thermo_point(beta, k_b)?;
        let norm = self.norm.thermo_point(beta, k_b)?;
        let p_cond = if self.cond_weight.is_some() {
            self.p_cond(beta)?
        } else {
            f64::NAN
        };
        Ok(ThermoRow {
            beta,
            temperature: full.temperature,
            f_full: full.free_energy,
            f_cond: cond.free_energy,
            f_norm: norm.free_energy,
            u_full: full.internal_energy,
            u_cond: cond.internal_energy,
            u_norm: norm.internal_energy,
            s_full: full.entropy,
            s_cond: cond.entropy,
            s_norm: norm.entropy,
            c_full: full.specific_heat,
            c_cond: cond.specific_heat,
            c_norm: norm.specific_heat,
            p_cond,
        })
    }

    /// Ratios `r(n) = ⟨n|e^{-βH}|n⟩ / ⟨n|e^{-βH_X}|n⟩` against
    /// `1 <= r(n) <= exp(βΓ min{A_cond^out, A_norm^out})`.
    pub fn matrix_inequality_report(&self, beta: f64) -> Result<MatrixInequalityReport> {
        let log_full = self.full.log_diagonal_of_exp(beta)?;
        let log_cond = self.cond.log_diagonal_of_exp(beta)?;
        let log_norm = self.norm.log_diagonal_of_exp(beta)?;
        let a_min = self.partition.min_max_out();
        let log_bound = beta * self.spec.gamma() * f64::from(a_min);

        let mut rows = Vec::with_capacity(log_full.len());
        for (block, logs, side) in [
            (&self.cond, &log_cond, Side::Cond),
            (&self.norm, &log_norm, Side::Norm),
        ] {
            for (&b, &log_x) in block.basis.iter().zip(logs) {
                rows.push((b, side, log_full[b as usize] - log_x));
            }
        }
        rows.sort_by_key(|r| r.0);

        let mut violations = Vec::new();
        for &(bits, side, log_ratio) in &rows {
            if log_ratio < -INEQUALITY_SLACK {
                violations.push(RatioViolation {
                    bits,
                    side,
                    which: BoundSide::Lower,
                    log_ratio,
                });
            } else if log_ratio > log_bound + INEQUALITY_SLACK {
                violations.push(RatioViolation {
                    bits,
                    side,
                    which: BoundSide::Upper,
                    log_ratio,
                });
            }
        }
        let (min_row, max_row) = rows.iter().fold((rows[0], rows[0]), |(lo, hi), &r| {
            (
                if r.2 < lo.2 { r } else { lo },
                if r.2 > hi.2 { r } else { hi },
            )
        });
        Ok(MatrixInequalityReport {
            beta,
            gamma: self.spec.gamma(),
            a_out_min: a_min,
            upper_bound: log_bound.exp(),
            min_ratio: min_row.2.exp(),
            min_ratio_at: min_row.0,
            max_ratio: max_row.2.exp(),
            max_ratio_at: max_row.0,
            n_checked: rows.len(),
            violations,
        })
    }

    /// `min{F_cond,F_norm} - Γ min{A^out} <= F <= min{F_cond,F_norm}`.
    pub fn free_energy_bounds_report(&self, beta: f64) -> Result<FreeEnergyBoundsReport> {
        let (f, fc, fnorm) = self.free_energies(beta)?;
        let gamma = self.spec.gamma();
        let a_cond = f64::from(self.partition.max_out(Side::Cond));
        let a_norm = f64::from(self.partition.max_out(Side::Norm));
        let f_min = fc.min(fnorm);
        let width = gamma * a_cond.min(a_norm);
        let slack = INEQUALITY_SLACK * f.abs().max(1.0);
        // Weyl: each level of H lies above the matching level of H_cond ⊕ H_norm
        // minus ‖ΓK_cross‖ <= Γ sqrt(A_cond^out A_norm^out).
        let f_blocks = free_energy(&[fc, fnorm], beta)?;
        let provable_lower = f_blocks - gamma * (a_cond * a_norm).sqrt();
        Ok(FreeEnergyBoundsReport {
            beta,
            f,
            f_cond: fc,
            f_norm: fnorm,
            upper: f_min,
            lower: f_min - width,
            width,
            upper_holds: f <= f_min + slack,
            lower_holds: f >= f_min - width - slack,
            provable_lower,
            provable_lower_holds: f >= provable_lower - slack,
        })
    }
}

/// Relative slack for round-off in the bound checks.
pub const INEQUALITY_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioViolation {
    pub bits: u64,
    pub side: Side,
    pub which: BoundSide,
    pub log_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixInequalityReport {
    pub beta: f64,
    pub gamma: f64,
    pub a_out_min: u32,
    pub upper_bound: f64,
    pub min_ratio: f64,
    pub min_ratio_at: u64,
    pub max_ratio: f64,
    pub max_ratio_at: u64,
    pub n_checked: usize,
    pub violations: Vec<RatioViolation>,
}

impl MatrixInequalityReport {
    pub fn lower_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| v.which == BoundSide::Lower)
            .count()
    }

    pub fn upper_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| v.which == BoundSide::Upper)
            .count()
    }

    pub fn check(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::BoundViolation {
                bits: v.bits,
                detail: format!(
                    "{:?} ratio bound on the {} side: r = {:e}, bound {:e}",
                    v.which,
                    v.side,
                    v.log_ratio.exp(),
                    if v.which == BoundSide::Lower {
                        1.0
                    } else {
                        self.upper_bound
                    }
                ),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreeEnergyBoundsReport {
    pub beta: f64,
    pub f: f64,
    pub f_cond: f64,
    pub f_norm: f64,
    pub upper: f64,
    pub lower: f64,
    pub width: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
    /// `-(1/β) log(e^{-βF_cond} + e^{-βF_norm}) - Γ sqrt(A_cond^out A_norm^out)`.
    pub provable_lower: f64,
    pub provable_lower_holds: bool,
}

impl FreeEnergyBoundsReport {
    pub fn check(&self) -> Result<()> {
        if !self.upper_holds {
            return Err(Error::BoundViolation {
                bits: 0,
                detail: format!("F = {} above min(F_cond, F_norm) = {}", self.f, self.upper),
            });
        }
        if !self.lower_holds {
            return Err(Error::BoundViolation {
                bits: 0,
                detail: format!(
                    "F = {} below min(F_cond, F_norm) - Γ A^out = {}",
                    self.f, self.lower
                ),
            });
        }
        Ok(())
    }
}

/// One row of the exported thermodynamics table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermoRow {
    pub beta: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "F_full")]
    pub f_full: f64,
    #[serde(rename = "F_cond")]
    pub f_cond: f64,
    #[serde(rename = "F_norm")]
    pub f_norm: f64,
    #[serde(rename = "U_full")]
    pub u_full: f64,
    #[serde(rename = "U_cond")]
    pub u_cond: f64,
    #[serde(rename = "U_norm")]
    pub u_norm: f64,
    #[serde(rename = "S_full")]
    pub s_full: f64,
    #[serde(rename = "S_cond")]
    pub s_cond: f64,
    #[serde(rename = "S_norm")]
    pub s_norm: f64,
    pub c_full: f64,
    pub c_cond: f64,
    pub c_norm: f64,
    pub p_cond: f64,
}

pub const THERMO_CSV_HEADER: &str =
    "beta,T,F_full,F_cond,F_norm,U_full,U_cond,U_norm,S_full,S_cond,S_norm,c_full,c_cond,c_norm,p_cond";

/// Exact occupation of the condensed subspace.
pub fn p_cond_exact(spec: &ModelSpec, p: &Partition, beta: f64, dense_limit: u64) -> Result<f64> {
    check_beta(beta)?;
    ExactSystem::new(spec, p, true, dense_limit)?.p_cond(beta)
}

pub fn matrix_inequality_report(
    spec: &ModelSpec,
    p: &Partition,
    beta: f64,
    dense_limit: u64,
) -> Result<MatrixInequalityReport> {
    check_beta(beta)?;
    ExactSystem::new(spec, p, true, dense_limit)?.matrix_inequality_report(beta)
}

pub fn free_energy_bounds_report(
    spec: &ModelSpec,
    p: &Partition,
    beta: f64,
    dense_limit: u64,
) -> Result<FreeEnergyBoundsReport> {
    check_beta(beta)?;
    ExactSystem::new(spec, p, false, dense_limit)?.free_energy_bounds_report(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::Potential;
    use crate::models::GroverSpec;

    const LIMIT: u64 = DEFAULT_DENSE_LIMIT;

    fn grover(n: u32, j: f64, gamma: f64) -> (ModelSpec, Partition) {
        let g = GroverSpec::new(n, j, gamma).unwrap();
        (g.model().unwrap(), g.partition().unwrap())
    }

    #[test]
    fn single_qubit_matrix() {
        let spec = ModelSpec::new(
            1,
            0.5,
            Potential::Table {
                values: vec![0.0, 0.0],
            },
        )
        .unwrap();
        let h = build_hamiltonian(&spec, None, Restriction::Full, LIMIT).unwrap();
        assert_eq!(h.dimension(), 2);
        assert_eq!(
            [h.get(0, 0), h.get(0, 1), h.get(1, 0), h.get(1, 1)],
            [0.0, -0.5, -0.5, 0.0]
        );
    }

    #[test]
    fn grover_without_hopping_is_diagonal() {
        let (spec, _) = grover(2, 1.0, 0.0);
        let h = build_hamiltonian(&spec, None, Restriction::Full, LIMIT).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| h.get(i, i)).collect();
        assert_eq!(diag, vec![0.0, 0.0, 0.0, -2.0]);
        assert!((0..4).all(|i| (0..4).all(|j| i == j || h.get(i, j) == 0.0)));
    }

    #[test]
    fn norm_block_is_full_matrix_without_target() {
        let (spec, p) = grover(3, 1.0, 0.7);
        let full = build_hamiltonian(&spec, None, Restriction::Full, LIMIT).unwrap();
        let norm = build_hamiltonian(&spec, Some(&p), Restriction::Norm, LIMIT).unwrap();
        assert_eq!(norm.dimension(), 7);
        assert_eq!(norm.basis(), &[0, 1, 2, 3, 4, 5, 6]);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(norm.get(i, j), full.get(i, j));
            }
        }
        assert!((0..7).any(|i| full.get(i, 7) != 0.0));
    }

    #[test]
    fn dense_limit_enforced() {
        let (spec, p) = grover(5, 1.0, 0.5);
        assert!(matches!(
            build_hamiltonian(&spec, Some(&p), Restriction::Full, 16),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn free_energy_small_spectra() {
        assert_eq!(free_energy(&[-5.0], 0.3).unwrap(), -5.0);
        assert_eq!(free_energy(&[-5.0], 30.0).unwrap(), -5.0);
        // -log(e + 1/e)
        let f = free_energy::<f64>(&[-1.0, 1.0], 1.0).unwrap();
        assert!((f - -1.126_928_011_042_972_5).abs() < 1e-12);
        assert!(matches!(
            free_energy(&[0.0], 0.0),
            Err(Error::InvalidBeta(_))
        ));
        assert!(matches!(
            free_energy(&[0.0], -1.0),
            Err(Error::InvalidBeta(_))
        ));
        // no overflow at β‖E‖ = 1e4
        let f = free_energy::<f64>(&[-100.0, 100.0], 100.0).unwrap();
        assert!((f - -100.0).abs() < 1e-12);
    }

    #[test]
    fn single_level_thermo() {
        let t = thermo_point(&[-2.5], 1.7, 1.0).unwrap();
        assert_eq!(
            (t.internal_energy, t.entropy, t.specific_heat),
            (-2.5, 0.0, 0.0)
        );
    }

    #[test]
    fn cold_limit_entropy_counts_ground_degeneracy() {
        let t = thermo_point(&[-1.0, -1.0, -1.0, 2.0], 200.0, 1.0).unwrap();
        assert!((t.entropy - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn grover_norm_block_thermo_close_to_free_spins() {
        let (spec, p) = grover(10, 1.0, 1.0);
        let h = build_hamiltonian(&spec, Some(&p), Restriction::Norm, LIMIT).unwrap();
        let cache = diagonalize(&h, false).unwrap();
        let t = cache.thermo_point(1.0, 1.0).unwrap();
        let u_closed = -10.0 * 1f64.tanh();
        assert!((u_closed - -7.615_941_559_557_649).abs() < 1e-12);
        let s_closed = 10.0 * ((2.0 * 1f64.cosh()).ln() - 1f64.tanh());
        // a single missing configuration out of 1024
        assert!((t.internal_energy - u_closed).abs() < 0.02);
        assert!((t.entropy - s_closed).abs() < 0.02);
    }

    #[test]
    fn grover_ground_energies() {
        let (spec, p) = grover(6, 1.0, 0.3);
        let g = ground_energies(&spec, &p, LIMIT).unwrap();
        assert_eq!(g.cond, -6.0);

        let pure_k = ModelSpec::new(
            10,
            1.0,
            Potential::Grover {
                j: 0.0,
                targets: vec![1023],
            },
        )
        .unwrap();
        let p10 = Partition::new(10, [1023]).unwrap();
        let g = ground_energies(&pure_k, &p10, LIMIT).unwrap();
        assert!((g.full - -10.0).abs() < 1e-10);

        let (spec, p) = grover(8, 1.0, 1.0);
        let g = ground_energies(&spec, &p, LIMIT).unwrap();
        let delta = g.norm - -8.0;
        assert!(delta > 0.0 && delta < 8.0 / 256.0, "delta = {delta}");
    }

    #[test]
    fn residuals_and_trace_identity() {
        let (spec, p) = grover(6, 1.0, 0.8);
        let h = build_hamiltonian(&spec, Some(&p), Restriction::Full, LIMIT).unwrap();
        let cache = diagonalize(&h, true).unwrap();
        assert!(cache.max_residual(&h).unwrap() <= RESIDUAL_TOLERANCE);
        for beta in [0.3, 1.0, 4.0] {
            let diag_sum: f64 = cache
                .log_diagonal_of_exp(beta)
                .unwrap()
                .iter()
                .map(|l| l.exp())
                .sum();
            let trace: f64 = cache.eigenvalues().iter().map(|e| (-beta * e).exp()).sum();
            assert!((diag_sum - trace).abs() <= 1e-9 * trace);
        }
    }

    #[test]
    fn p_cond_high_temperature_and_logistic() {
        let (spec, p) = grover(6, 1.0, 0.5);
        let sys = ExactSystem::new(&spec, &p, true, LIMIT).unwrap();
        assert!((sys.p_cond(1e-6).unwrap() - 1.0 / 64.0).abs() < 1e-5);

        let (spec, p) = grover(10, 1.0, 0.5);
        let sys = ExactSystem::new(&spec, &p, true, LIMIT).unwrap();
        let exact = sys.p_cond(4.0).unwrap();
        let logistic = sys.p_cond_logistic(4.0).unwrap();
        assert!((exact - logistic).abs() <= 0.05, "{exact} vs {logistic}");
    }

    #[test]
    fn zero_hopping_ratios_are_one() {
        let (spec, p) = grover(4, 1.0, 0.0);
        let r = matrix_inequality_report(&spec, &p, 1.5, LIMIT).unwrap();
        assert!((r.min_ratio - 1.0).abs() < 1e-12 && (r.max_ratio - 1.0).abs() < 1e-12);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn grover_ratio_lower_bound_holds_everywhere() {
        let (spec, p) = grover(6, 1.0, 0.7);
        let r = matrix_inequality_report(&spec, &p, 2.0, LIMIT).unwrap();
        assert_eq!(r.lower_violations(), 0);
        assert_eq!(r.a_out_min, 1);
        assert!((r.upper_bound - (2.0f64 * 0.7).exp()).abs() < 1e-12);
        assert_eq!(r.n_checked, 64);
    }

    #[test]
    fn grover_free_energy_sandwich() {
        let (spec, p) = grover(8, 1.0, 0.5);
        let r = free_energy_bounds_report(&spec, &p, 3.0, LIMIT).unwrap();
        assert_eq!(r.width, 0.5);
        assert!(r.upper_holds && r.lower_holds && r.provable_lower_holds);
        r.check().unwrap();
    }

    #[test]
    fn zero_hopping_free_energy_is_block_sum() {
        let spec = ModelSpec::new(
            3,
            0.0,
            Potential::Table {
                values: vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0, 2.0, 1.5],
            },
        )
        .unwrap();
        let p = Partition::new(3, [1, 5]).unwrap();
        let sys = ExactSystem::new(&spec, &p, false, LIMIT).unwrap();
        let beta = 1.3;
        let (f, fc, fnorm) = sys.free_energies(beta).unwrap();
        let combined = -((-beta * fc).exp() + (-beta * fnorm).exp()).ln() / beta;
        assert!((f - combined).abs() < 1e-10);
        let r = sys.free_energy_bounds_report(beta).unwrap();
        assert!(r.upper_holds && r.provable_lower_holds);
    }

    #[test]
    fn free_energy_is_nonincreasing_in_temperature() {
        let (spec, p) = grover(6, 1.0, 0.6);
        let sys = ExactSystem::new(&spec, &p, false, LIMIT).unwrap();
        let mut last = f64::INFINITY;
        for i in 1..60 {
            let t = 0.05 * f64::from(i);
            let (f, _, _) = sys.free_energies(1.0 / t).unwrap();
            assert!(f <= last + 1e-12);
            last = f;
        }
    }

    #[test]
    fn cold_limit_reaches_ground_energies() {
        let (spec, p) = grover(6, 1.0, 0.8);
        let sys = ExactSystem::new(&spec, &p, false, LIMIT).unwrap();
        let g = sys.ground_energies();
        let beta = 1e3 / 6.0 * 3.0;
        let (f, fc, fnorm) = sys.free_energies(beta).unwrap();
        assert!((f - g.full).abs() < 1e-6);
        assert!((fc - g.cond).abs() < 1e-6);
        assert!((fnorm - g.norm).abs() < 1e-6);
    }
}
