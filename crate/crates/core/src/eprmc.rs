//! Exact path-sampling representation of `e^{-Ht}`.
//!
//! A trajectory is a continuous-time Markov chain on the configuration graph:
//! the chain waits an exponential time of rate `Γ A(n)` at configuration `n`
//! and then moves to a uniformly chosen neighbour. With the functional
//!
//! ```text
//! M = exp( Σ_k [Γ A(n_k) - V(n_k)] (s_{k+1} - s_k) )
//! ```
//!
//! the diagonal matrix element is `⟨n0|e^{-Ht}|n0⟩ = E[M · δ(n_final, n0)]`,
//! where `n_final` is the configuration held on `[s_last, t)`.
//!
//! Trajectory `i` of an estimator draws from its own ChaCha8 stream
//! (`seed`, stream `i`), and sample means are reduced in index order with a
//! pairwise sum, so every result is a pure function of `(seed, n_samples)`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::configspace::{Configuration, ModelSpec, Partition, Side};
use crate::error::{Error, Result};
use crate::scalar::pairwise_sum;

/// Most boundary configurations visited by [`crossing_probability_report`].
pub const MAX_BOUNDARY_STARTS: usize = 1024;

/// One sample path on `[0, t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: Configuration,
    pub horizon: f64,
    /// `(s_k, configuration entered at s_k)`, strictly increasing in `s_k`.
    pub jumps: Vec<(f64, Configuration)>,
    pub log_weight: f64,
}

impl Trajectory {
    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn final_config(&self) -> Configuration {
        self.jumps.last().map_or(self.start, |&(_, c)| c)
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    /// Start followed by every configuration entered.
    pub fn configurations(&self) -> impl Iterator<Item = Configuration> + '_ {
        std::iter::once(self.start).chain(self.jumps.iter().map(|&(_, c)| c))
    }
}

/// Runs one path, reporting every jump to `on_jump`. Returns `(log M, final bits)`.
fn walk<R: RngExt + ?Sized>(
    spec: &ModelSpec,
    start: u64,
    t: f64,
    rng: &mut R,
    mut on_jump: impl FnMut(f64, u64),
) -> (f64, u64) {
    let n = spec.n_qubits();
    let rate = spec.gamma() * f64::from(spec.degree(start));
    let mut current = start;
    let mut s = 0.0;
    let mut log_w = 0.0;
    if rate > 0.0 {
        loop {
            let mut dt: f64 = rng.sample(Exp1);
            while dt == 0.0 {
                dt = rng.sample(Exp1);
            }
            dt /= rate;
            if s + dt >= t {
                break;
            }
            log_w += (rate - spec.v(current)) * dt;
            s += dt;
            current ^= 1u64 << rng.random_range(0..n);
            on_jump(s, current);
        }
    }
    log_w += (rate - spec.v(current)) * (t - s);
    (log_w, current)
}

fn check_horizon(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!(
            "imaginary time must be finite and >= 0, got {t}"
        )))
    }
}

pub fn sample_trajectory<R: RngExt + ?Sized>(
    spec: &ModelSpec,
    start: Configuration,
    t: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    spec.require_sign_free()?;
    check_horizon(t)?;
    if start.n_qubits() != spec.n_qubits() {
        return Err(Error::InvalidConfiguration {
            bits: start.bits(),
            n_qubits: spec.n_qubits(),
        });
    }
    let n = spec.n_qubits();
    let mut jumps = Vec::new();
    let (log_weight, _) = walk(spec, start.bits(), t, rng, |s, b| {
        jumps.push((s, Configuration::new(b, n).expect("flip stays in range")));
    });
    Ok(Trajectory {
        start,
        horizon: t,
        jumps,
        log_weight,
    })
}

/// Transit counts of one trajectory with respect to a partition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TransitCounters {
    /// Completed cond sojourns entered from norm and left back to norm.
    pub k_t: u32,
    /// Completed norm sojourns entered from cond and left back to cond.
    pub l_t: u32,
    /// Entries into cond from norm.
    pub q_t: u32,
}

/// Streaming form of [`transit_counters`].
#[derive(Clone, Copy, Debug)]
struct TransitTracker {
    side: Side,
    /// The current sojourn was entered from the other side.
    entered: bool,
    counts: TransitCounters,
}

impl TransitTracker {
    fn new(side: Side) -> Self {
        Self {
            side,
            entered: false,
            counts: TransitCounters::default(),
        }
    }

    fn step(&mut self, side: Side) {
        if side == self.side {
            return;
        }
        if self.entered {
            match self.side {
                Side::Cond => self.counts.k_t += 1,
                Side::Norm => self.counts.l_t += 1,
            }
        }
        if side == Side::Cond {
            self.counts.q_t += 1;
        }
        self.side = side;
        self.entered = true;
    }
}

pub fn transit_counters(traj: &Trajectory, p: &Partition) -> TransitCounters {
    let mut configs = traj.configurations();
    let mut tracker = TransitTracker::new(p.side(configs.next().expect("start").bits()));
    for c in configs {
        tracker.step(p.side(c.bits()));
    }
    tracker.counts
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl EstimatorResult {
    /// Mean and standard error of `values`, reduced pairwise in index order.
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            pairwise_sum(values) / n as f64
        };
        let std_error = if n < 2 {
            0.0
        } else {
            let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        };
        Self {
            mean,
            std_error,
            n_samples: n as u64,
            seed,
        }
    }

    /// `|mean - exact| <= k · std_error`, with exact equality accepted when the error is zero.
    pub fn agrees_with(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.std_error + 1e-12 * exact.abs()
    }
}

/// Sampling knobs that never change results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplingOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluates `f(rng_i)` for every trajectory index, in index order.
fn map_trajectories<T, F>(n_samples: u64, seed: u64, opts: SamplingOptions, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let run = || -> Vec<T> {
        (0..n_samples)
            .into_par_iter()
            .map(|i| f(&mut stream_rng(seed, i)))
            .collect()
    };
    match opts.workers {
        None => Ok(run()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidModel(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

fn check_samples(n_samples: u64) -> Result<()> {
    if n_samples == 0 {
        Err(Error::InvalidModel("n_samples must be >= 1".into()))
    } else {
        Ok(())
    }
}

fn check_config(spec: &ModelSpec, c: Configuration) -> Result<()> {
    if c.n_qubits() == spec.n_qubits() {
        Ok(())
    } else {
        Err(Error::InvalidConfiguration {
            bits: c.bits(),
            n_qubits: spec.n_qubits(),
        })
    }
}

/// Estimates `⟨n0|e^{-Ht}|n0⟩`.
pub fn estimate_diagonal(
    spec: &ModelSpec,
    n0: Configuration,
    t: f64,
    n_samples: u64,
    seed: u64,
) -> Result<EstimatorResult> {
    estimate_diagonal_with(spec, n0, t, n_samples, seed, SamplingOptions::default())
}

pub fn estimate_diagonal_with(
    spec: &ModelSpec,
    n0: Configuration,
    t: f64,
    n_samples: u64,
    seed: u64,
    opts: SamplingOptions,
) -> Result<EstimatorResult> {
    spec.require_sign_free()?;
    check_horizon(t)?;
    check_samples(n_samples)?;
    check_config(spec, n0)?;
    let start = n0.bits();
    let values = map_trajectories(n_samples, seed, opts, |rng| {
        let (log_w, last) = walk(spec, start, t, rng, |_, _| {});
        if last == start {
            log_w.exp()
        } else {
            0.0
        }
    })?;
    Ok(EstimatorResult::from_samples(&values, seed))
}

/// Restriction on the transit count of the start's side: `k_t` for norm
/// starts, `l_t` for cond starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    NoTransit,
    SomeTransit,
}

/// Both constrained parts of `⟨n0|e^{-Ht}|n0⟩` from one set of trajectories.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub side: Side,
    pub no_transit: EstimatorResult,
    pub some_transit: EstimatorResult,
    pub total: EstimatorResult,
    /// Every per-trajectory total equals the sum of its two parts bit for bit.
    pub additive_per_trajectory: bool,
    /// `|mean(no) + mean(some) - mean(total)|`, round-off of the reductions.
    pub mean_additivity_residual: f64,
    /// Fraction of trajectories with at least one completed transit.
    pub p_some_transit: f64,
    /// `mean(some) - mean(total) · p_some_transit`, the error of the
    /// uncorrelated-transit approximation.
    pub factorization_gap: f64,
}

pub fn decompose(
    spec: &ModelSpec,
    p: &Partition,
    n0: Configuration,
    t: f64,
    n_samples: u64,
    seed: u64,
    opts: SamplingOptions,
) -> Result<Decomposition> {
    spec.require_sign_free()?;
    check_horizon(t)?;
    check_samples(n_samples)?;
    check_config(spec, n0)?;
    if p.n_qubits() != spec.n_qubits() {
        return Err(Error::InvalidModel(
            "partition and model disagree on N".into(),
        ));
    }
    let start = n0.bits();
    let side = p.side(start);
    // (value, transited)
    let samples = map_trajectories(n_samples, seed, opts, |rng| {
        let mut tracker = TransitTracker::new(side);
        let (log_w, last) = walk(spec, start, t, rng, |_, b| tracker.step(p.side(b)));
        let transits = match side {
            Side::Norm => tracker.counts.k_t,
            Side::Cond => tracker.counts.l_t,
        };
        let value = if last == start { log_w.exp() } else { 0.0 };
        (value, transits > 0)
    })?;

    let total: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let none: Vec<f64> = samples
        .iter()
        .map(|&(v, k)| if k { 0.0 } else { v })
        .collect();
    let some: Vec<f64> = samples
        .iter()
        .map(|&(v, k)| if k { v } else { 0.0 })
        .collect();
    let additive = total
        .iter()
        .zip(&none)
        .zip(&some)
        .all(|((t, a), b)| a + b == *t);
    let hits: Vec<f64> = samples
        .iter()
        .map(|s| if s.1 { 1.0 } else { 0.0 })
        .collect();
    let p_some = pairwise_sum(&hits) / n_samples as f64;

    let total = EstimatorResult::from_samples(&total, seed);
    let no_transit = EstimatorResult::from_samples(&none, seed);
    let some_transit = EstimatorResult::from_samples(&some, seed);
    Ok(Decomposition {
        side,
        mean_additivity_residual: (no_transit.mean + some_transit.mean - total.mean).abs(),
        factorization_gap: some_transit.mean - total.mean * p_some,
        no_transit,
        some_transit,
        total,
        additive_per_trajectory: additive,
        p_some_transit: p_some,
    })
}

/// One constrained part of `⟨n0|e^{-Ht}|n0⟩`.
///
/// With [`Constraint::NoTransit`] the estimate targets `⟨n0|e^{-H_X t}|n0⟩`
/// for the block `X` holding `n0`. `required` rejects starts on the wrong side.
#[allow(clippy::too_many_arguments)]
pub fn estimate_constrained(
    spec: &ModelSpec,
    p: &Partition,
    n0: Configuration,
    t: f64,
    constraint: Constraint,
    required: Option<Side>,
    n_samples: u64,
    seed: u64,
) -> Result<EstimatorResult> {
    if let Some(expected) = required {
        if p.side(n0.bits()) != expected {
            return Err(Error::WrongSide {
                bits: n0.bits(),
                expected: expected.name(),
            });
        }
    }
    let d = decompose(spec, p, n0, t, n_samples, seed, SamplingOptions::default())?;
    Ok(match constraint {
        Constraint::NoTransit => d.no_transit,
        Constraint::SomeTransit => d.some_transit,
    })
}

/// Transit and stay statistics for one boundary start.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossingRow {
    pub start: u64,
    pub a_out: u32,
    /// `P(K_t >= 1)` (norm starts) or `P(L_t >= 1)` (cond starts).
    pub p_transit: f64,
    pub p_transit_std_error: f64,
    /// Probability of never leaving the start's side.
    pub p_stay: f64,
    pub p_stay_std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossingReport {
    pub side: Side,
    pub t: f64,
    pub gamma: f64,
    pub a_norm_out: u32,
    /// `1 - exp(-Γ A_norm^out t)`.
    pub bound: f64,
    /// `exp(-Γ A_norm^out t)`, the floor for `p_stay` on norm starts.
    pub stay_floor: f64,
    pub boundary_size: usize,
    pub n_samples: u64,
    pub seed: u64,
    pub rows: Vec<CrossingRow>,
    pub sup_p_transit: f64,
    pub sup_std_error: f64,
    pub transit_violations: Vec<u64>,
    pub stay_violations: Vec<u64>,
}

impl CrossingReport {
    pub fn holds(&self) -> bool {
        self.transit_violations.is_empty() && self.stay_violations.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        if let Some(&bits) = self.transit_violations.first() {
            return Err(Error::BoundViolation {
                bits,
                detail: format!(
                    "transit probability above 1 - exp(-Γ A_norm^out t) = {}",
                    self.bound
                ),
            });
        }
        if let Some(&bits) = self.stay_violations.first() {
            return Err(Error::BoundViolation {
                bits,
                detail: format!(
                    "stay probability below exp(-Γ A_norm^out t) = {}",
                    self.stay_floor
                ),
            });
        }
        Ok(())
    }
}

/// Bernoulli mean and standard error.
fn bernoulli(hits: &[f64]) -> (f64, f64) {
    let r = EstimatorResult::from_samples(hits, 0);
    (r.mean, r.std_error)
}

/// Samples the transit probability from boundary starts on `side` and compares
/// it with `1 - exp(-Γ A_norm^out t)`. Boundaries above
/// [`MAX_BOUNDARY_STARTS`] are subsampled uniformly with `seed`.
pub fn crossing_probability_report(
    spec: &ModelSpec,
    p: &Partition,
    side: Side,
    t: f64,
    n_samples: u64,
    seed: u64,
    opts: SamplingOptions,
) -> Result<CrossingReport> {
    spec.require_sign_free()?;
    check_horizon(t)?;
    check_samples(n_samples)?;
    let boundary = p.boundary(side);
    let a_norm_out = p.max_out(Side::Norm);
    let rate = spec.gamma() * f64::from(a_norm_out) * t;
    let bound = -(-rate).exp_m1();
    let stay_floor = (-rate).exp();

    let starts: Vec<(u64, u32)> = if boundary.len() <= MAX_BOUNDARY_STARTS {
        boundary.to_vec()
    } else {
        let mut rng = stream_rng(seed, u64::MAX);
        let mut picks =
            rand::seq::index::sample(&mut rng, boundary.len(), MAX_BOUNDARY_STARTS).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|i| boundary[i]).collect()
    };

    let mut rows = Vec::with_capacity(starts.len());
    for (k, &(start, a_out)) in starts.iter().enumerate() {
        // distinct stream block per start
        let start_seed = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let samples = map_trajectories(n_samples, start_seed, opts, |rng| {
            let mut tracker = TransitTracker::new(side);
            let mut left = false;
            walk(spec, start, t, rng, |_, b| {
                let s = p.side(b);
                left |= s != side;
                tracker.step(s);
            });
            let transits = match side {
                Side::Norm => tracker.counts.k_t,
                Side::Cond => tracker.counts.l_t,
            };
            (transits > 0, !left)
        })?;
        let transit: Vec<f64> = samples.iter().map(|s| f64::from(u8::from(s.0))).collect();
        let stay: Vec<f64> = samples.iter().map(|s| f64::from(u8::from(s.1))).collect();
        let (p_transit, p_transit_std_error) = bernoulli(&transit);
        let (p_stay, p_stay_std_error) = bernoulli(&stay);
        rows.push(CrossingRow {
            start,
            a_out,
            p_transit,
            p_transit_std_error,
            p_stay,
            p_stay_std_error,
        });
    }

    let transit_violations = rows
        .iter()
        .filter(|r| r.p_transit > bound + 3.0 * r.p_transit_std_error + 1e-12)
        .map(|r| r.start)
        .collect();
    // staying put on the cond side is governed by A_cond^out, not A_norm^out
    let stay_violations = if side == Side::Norm {
        rows.iter()
            .filter(|r| r.p_stay < stay_floor - 3.0 * r.p_stay_std_error - 1e-12)
            .map(|r| r.start)
            .collect()
    } else {
        Vec::new()
    };
    let (sup_p_transit, sup_std_error) = rows
        .iter()
        .map(|r| (r.p_transit, r.p_transit_std_error))
        .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok(CrossingReport {
        side,
        t,
        gamma: spec.gamma(),
        a_norm_out,
        bound,
        stay_floor,
        boundary_size: boundary.len(),
        n_samples,
        seed,
        rows,
        sup_p_transit,
        sup_std_error,
        transit_violations,
        stay_violations,
    })
}
