//! Configuration space of an N-qubit system and the single-flip hopping graph.
//!
//! A configuration is an eigenstate of the potential, stored as an N-bit
//! pattern (bit `i` is the state of qubit `i`). The hopping operator links
//! every configuration to the N patterns at Hamming distance one, so the
//! configuration graph is the N-dimensional hypercube and every degree is
//! `A(n) = N`.
//!
//! A [`Partition`] splits the configurations into a condensed set and its
//! complement, the normal set. Boundary sets and per-configuration
//! out-degrees are cached on first use.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported qubit count (bit patterns live in a `u64`).
pub const MAX_QUBITS: u32 = 63;

/// Default cap on `dim H` for operations that enumerate every configuration.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    bits: u64,
    n_qubits: u32,
}

impl Configuration {
    pub fn new(bits: u64, n_qubits: u32) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS || bits >= (1u64 << n_qubits) {
            return Err(Error::InvalidConfiguration { bits, n_qubits });
        }
        Ok(Self { bits, n_qubits })
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn n_qubits(self) -> u32 {
        self.n_qubits
    }

    pub fn flip(self, qubit: u32) -> Self {
        debug_assert!(qubit < self.n_qubits);
        Self {
            bits: self.bits ^ (1u64 << qubit),
            n_qubits: self.n_qubits,
        }
    }

    pub fn hamming(self, other: Self) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // most significant qubit first
        write!(f, "{:0width$b}", self.bits, width = self.n_qubits as usize)
    }
}

/// Diagonal potential `V(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V(n) = -J N` on the target patterns, 0 elsewhere. Targets are kept sorted.
    Grover { j: f64, targets: Vec<u64> },
    /// `V(n) = -J N + 2 J q(n)` with `q(n)` the number of sign inversions
    /// met reading the spins from qubit 0 to qubit N-1.
    IsingChain { j: f64 },
    /// Explicit value per bit pattern; length must be `2^N`.
    Table { values: Vec<f64> },
}

impl Potential {
    pub fn value(&self, bits: u64, n_qubits: u32) -> f64 {
        match self {
            Potential::Grover { j, targets } => {
                if targets.binary_search(&bits).is_ok() {
                    -j * f64::from(n_qubits)
                } else {
                    0.0
                }
            }
            Potential::IsingChain { j } => {
                -j * f64::from(n_qubits) + 2.0 * j * f64::from(cut_count(bits, n_qubits))
            }
            Potential::Table { values } => values[bits as usize],
        }
    }
}

/// Number of neighbouring qubit pairs `(i, i+1)`, `i < N-1`, with opposite states.
pub fn cut_count(bits: u64, n_qubits: u32) -> u32 {
    if n_qubits < 2 {
        return 0;
    }
    let pair_mask = (1u64 << (n_qubits - 1)) - 1;
    ((bits ^ (bits >> 1)) & pair_mask).count_ones()
}

/// Off-diagonal hopping rule. Only single-bit flips are supported; the sign
/// of the matrix element is kept so that sign-problem inputs are representable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hopping {
    /// `K = -Σ σ^x_i`: every link carries `⟨n|K|n'⟩ = -1`.
    #[default]
    SingleFlip,
    /// `K = +Σ σ^x_i`. Dense routines accept it; path sampling rejects it.
    PositiveSingleFlip,
}

impl Hopping {
    pub fn element(self) -> f64 {
        match self {
            Hopping::SingleFlip => -1.0,
            Hopping::PositiveSingleFlip => 1.0,
        }
    }

    pub fn is_sign_free(self) -> bool {
        self.element() <= 0.0
    }
}

/// A concrete `H = ΓK + V` instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    n_qubits: u32,
    gamma: f64,
    potential: Potential,
    hopping: Hopping,
}

impl ModelSpec {
    pub fn new(n_qubits: u32, gamma: f64, potential: Potential) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidModel(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidModel(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        let potential = match potential {
            Potential::Grover { j, mut targets } => {
                if !j.is_finite() {
                    return Err(Error::InvalidModel("J must be finite".into()));
                }
                if targets.is_empty() {
                    return Err(Error::InvalidModel(
                        "Grover potential needs at least one target".into(),
                    ));
                }
                targets.sort_unstable();
                targets.dedup();
                if let Some(&t) = targets.iter().find(|&&t| t >> n_qubits != 0) {
                    return Err(Error::InvalidConfiguration { bits: t, n_qubits });
                }
                Potential::Grover { j, targets }
            }
            Potential::IsingChain { j } => {
                if !j.is_finite() {
                    return Err(Error::InvalidModel("J must be finite".into()));
                }
                Potential::IsingChain { j }
            }
            Potential::Table { values } => {
                if n_qubits >= usize::BITS || values.len() != 1usize << n_qubits {
                    return Err(Error::InvalidModel(format!(
                        "potential table has {} entries, expected 2^{n_qubits}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidModel(
                        "potential table contains a non-finite value".into(),
                    ));
                }
                Potential::Table { values }
            }
        };
        Ok(Self {
            n_qubits,
            gamma,
            potential,
            hopping: Hopping::SingleFlip,
        })
    }

    pub fn with_hopping(mut self, hopping: Hopping) -> Self {
        self.hopping = hopping;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidModel(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn hopping(&self) -> Hopping {
        self.hopping
    }

    /// `dim H = 2^N`.
    pub fn dim(&self) -> u64 {
        1u64 << self.n_qubits
    }

    pub fn v(&self, bits: u64) -> f64 {
        self.potential.value(bits, self.n_qubits)
    }

    /// Number of links `A(n)`; constant for single flips.
    pub fn degree(&self, _bits: u64) -> u32 {
        self.n_qubits
    }

    pub fn configuration(&self, bits: u64) -> Result<Configuration> {
        Configuration::new(bits, self.n_qubits)
    }

    pub fn check_enumerable(&self, limit: u64) -> Result<()> {
        if self.dim() > limit {
            return Err(Error::TooLarge {
                what: "enumeration",
                dim: self.dim(),
                limit,
            });
        }
        Ok(())
    }

    pub(crate) fn require_sign_free(&self) -> Result<()> {
        if self.hopping.is_sign_free() {
            Ok(())
        } else {
            Err(Error::SignProblem)
        }
    }
}

/// The N configurations one flip away from `c`, ordered by flipped qubit.
pub fn hop_neighbors(c: Configuration, spec: &ModelSpec) -> Vec<Configuration> {
    debug_assert_eq!(c.n_qubits(), spec.n_qubits());
    (0..c.n_qubits()).map(|i| c.flip(i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Cond,
    Norm,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Cond => Side::Norm,
            Side::Norm => Side::Cond,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Cond => "cond",
            Side::Norm => "norm",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Boundary configurations of both sides with their out-degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Boundaries {
    /// `∂̂`: cond members with at least one norm neighbour, ascending.
    pub cond: Vec<(u64, u32)>,
    /// `∂̃`: norm members with at least one cond neighbour, ascending.
    pub norm: Vec<(u64, u32)>,
}

/// Split of the configurations into a condensed set and its complement.
#[derive(Debug)]
pub struct Partition {
    n_qubits: u32,
    cond: Vec<u64>,
    boundaries: OnceLock<Boundaries>,
}

impl Clone for Partition {
    fn clone(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            cond: self.cond.clone(),
            boundaries: self.boundaries.clone(),
        }
    }
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits && self.cond == other.cond
    }
}

/// On-disk form: `{ "n_qubits": int, "cond": [int, ...] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionFile {
    pub n_qubits: u32,
    pub cond: Vec<u64>,
}

impl Partition {
    pub fn new(n_qubits: u32, cond: impl IntoIterator<Item = u64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidModel(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut cond: Vec<u64> = cond.into_iter().collect();
        cond.sort_unstable();
        cond.dedup();
        if let Some(&bad) = cond.iter().find(|&&b| b >> n_qubits != 0) {
            return Err(Error::InvalidConfiguration {
                bits: bad,
                n_qubits,
            });
        }
        if cond.is_empty() {
            return Err(Error::EmptySubspace("cond"));
        }
        if cond.len() as u64 == 1u64 << n_qubits {
            return Err(Error::EmptySubspace("norm"));
        }
        Ok(Self {
            n_qubits,
            cond,
            boundaries: OnceLock::new(),
        })
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    /// Condensed members, ascending.
    pub fn cond_members(&self) -> &[u64] {
        &self.cond
    }

    /// Normal members, ascending. Enumerates the whole space.
    pub fn norm_members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..1u64 << self.n_qubits).filter(move |&b| !self.contains(b))
    }

    pub fn dim_cond(&self) -> u64 {
        self.cond.len() as u64
    }

    pub fn dim_norm(&self) -> u64 {
        (1u64 << self.n_qubits) - self.dim_cond()
    }

    pub fn contains(&self, bits: u64) -> bool {
        self.cond.binary_search(&bits).is_ok()
    }

    pub fn side(&self, bits: u64) -> Side {
        if self.contains(bits) {
            Side::Cond
        } else {
            Side::Norm
        }
    }

    /// Links from `bits` to the other side.
    pub fn out_degree(&self, bits: u64) -> u32 {
        let here = self.contains(bits);
        (0..self.n_qubits)
            .filter(|&i| self.contains(bits ^ (1u64 << i)) != here)
            .count() as u32
    }

    /// Boundary sets, computed from the cond members alone.
    pub fn boundaries(&self) -> &Boundaries {
        self.boundaries.get_or_init(|| {
            let mut cond_side = Vec::new();
            let mut norm_side: BTreeMap<u64, u32> = BTreeMap::new();
            for &c in &self.cond {
                let mut out = 0;
                for i in 0..self.n_qubits {
                    let nb = c ^ (1u64 << i);
                    if !self.contains(nb) {
                        out += 1;
                        *norm_side.entry(nb).or_insert(0) += 1;
                    }
                }
                if out > 0 {
                    cond_side.push((c, out));
                }
            }
            Boundaries {
                cond: cond_side,
                norm: norm_side.into_iter().collect(),
            }
        })
    }

    pub fn boundary(&self, side: Side) -> &[(u64, u32)] {
        match side {
            Side::Cond => &self.boundaries().cond,
            Side::Norm => &self.boundaries().norm,
        }
    }

    /// `A_X^out`: maximum out-degree over the boundary of `side`.
    pub fn max_out(&self, side: Side) -> u32 {
        self.boundary(side)
            .iter()
            .map(|&(_, a)| a)
            .max()
            .unwrap_or(0)
    }

    /// `min{A_cond^out, A_norm^out}`.
    pub fn min_max_out(&self) -> u32 {
        self.max_out(Side::Cond).min(self.max_out(Side::Norm))
    }

    pub fn to_file(&self) -> PartitionFile {
        PartitionFile {
            n_qubits: self.n_qubits,
            cond: self.cond.clone(),
        }
    }

    pub fn from_file(file: PartitionFile) -> Result<Self> {
        Self::new(file.n_qubits, file.cond)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("partition serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PartitionFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("partition JSON: {e}")))?;
        Self::from_file(file)
    }
}

/// `(A^in(c), A^out(c))` for configuration `c`.
pub fn split_degree(c: Configuration, p: &Partition) -> (u32, u32) {
    let out = p.out_degree(c.bits());
    (c.n_qubits() - out, out)
}

/// Condensed set `{ n : V(n) <= max_v_cond }`.
pub fn partition_from_threshold(
    spec: &ModelSpec,
    max_v_cond: f64,
    limit: u64,
) -> Result<Partition> {
    spec.check_enumerable(limit)?;
    let cond = (0..spec.dim()).filter(|&b| spec.v(b) <= max_v_cond);
    Partition::new(spec.n_qubits(), cond)
}

/// Cross-link bookkeeping between the two boundaries.
///
/// `mean_out_cond * |∂̂| == mean_out_norm * |∂̃| == cross_links` holds
/// exactly; construction fails if the two per-side totals disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkBalance {
    pub cross_links: u64,
    pub boundary_cond: u64,
    pub boundary_norm: u64,
    pub max_out_cond: u32,
    pub max_out_norm: u32,
    pub mean_out_cond: Ratio<u64>,
    pub mean_out_norm: Ratio<u64>,
}

impl LinkBalance {
    /// From the out-degrees of the boundary nodes of each side.
    pub fn from_out_degrees(cond_out: &[u32], norm_out: &[u32]) -> Result<Self> {
        let from_cond: u64 = cond_out.iter().map(|&a| u64::from(a)).sum();
        let from_norm: u64 = norm_out.iter().map(|&a| u64::from(a)).sum();
        if from_cond != from_norm || cond_out.is_empty() || norm_out.is_empty() {
            return Err(Error::LinkMismatch {
                from_cond,
                from_norm,
            });
        }
        Ok(Self {
            cross_links: from_cond,
            boundary_cond: cond_out.len() as u64,
            boundary_norm: norm_out.len() as u64,
            max_out_cond: cond_out.iter().copied().max().unwrap_or(0),
            max_out_norm: norm_out.iter().copied().max().unwrap_or(0),
            mean_out_cond: Ratio::new(from_cond, cond_out.len() as u64),
            mean_out_norm: Ratio::new(from_norm, norm_out.len() as u64),
        })
    }

    /// Both sides of `Ā_cond^out |∂̂| = Ā_norm^out |∂̃|`, as exact rationals.
    pub fn identity_sides(&self) -> (Ratio<u64>, Ratio<u64>) {
        (
            self.mean_out_cond * Ratio::from_integer(self.boundary_cond),
            self.mean_out_norm * Ratio::from_integer(self.boundary_norm),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionStats {
    pub n_qubits: u32,
    pub dim_cond: u64,
    pub dim_norm: u64,
    pub links: LinkBalance,
    /// `|∂̂| / dim_cond`; a diagnostic only.
    pub alpha_cond: f64,
}

/// Boundary statistics of `p`.
///
/// The norm-side out-degrees are recounted by scanning the neighbours of
/// every norm boundary node, independently of the cond-side scan that
/// discovered them, so the link identity is a real check.
pub fn partition_stats(spec: &ModelSpec, p: &Partition, limit: u64) -> Result<PartitionStats> {
    spec.check_enumerable(limit)?;
    if spec.n_qubits() != p.n_qubits() {
        return Err(Error::InvalidModel(
            "partition and model disagree on N".into(),
        ));
    }
    let cond_out: Vec<u32> = p.boundary(Side::Cond).iter().map(|&(_, a)| a).collect();
    let norm_out: Vec<u32> = p
        .boundary(Side::Norm)
        .iter()
        .map(|&(b, _)| p.out_degree(b))
        .collect();
    let links = LinkBalance::from_out_degrees(&cond_out, &norm_out)?;
    Ok(PartitionStats {
        n_qubits: p.n_qubits(),
        dim_cond: p.dim_cond(),
        dim_norm: p.dim_norm(),
        alpha_cond: links.boundary_cond as f64 / p.dim_cond() as f64,
        links,
    })
}

/// Invariant measure `π_n = A(n) / Σ A(n')` of the jump chain, indexed by bit pattern.
pub fn stationary_measure(spec: &ModelSpec, limit: u64) -> Result<Vec<f64>> {
    spec.check_enumerable(limit)?;
    let total: f64 = (0..spec.dim()).map(|b| f64::from(spec.degree(b))).sum();
    Ok((0..spec.dim())
        .map(|b| f64::from(spec.degree(b)) / total)
        .collect())
}
