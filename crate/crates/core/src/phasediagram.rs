//! Critical surfaces `F_cond = F_norm`.
//!
//! The root finder is a bracketing Illinois iteration (regula falsi with
//! halving of the stale endpoint), which keeps the bisection guarantee and
//! converges superlinearly on the smooth free-energy differences met here.
//! Surfaces are produced as one-dimensional curves over a sweep.

use rayon::prelude::*;
use serde::Serialize;

use crate::configspace::{ModelSpec, Partition, Side};
use crate::error::{Error, Result};
use crate::exactthermo::{build_hamiltonian, diagonalize, free_energy, Restriction};
use crate::models::{grover_free_energies, GroverSpec};
use crate::scalar::Real;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;
pub const MAX_EXPANSIONS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootOptions<T> {
    /// Accept `|F_cond - F_norm| <= tol · max(1, |F_norm|)`.
    pub tol: T,
    pub max_iterations: usize,
    pub max_expansions: usize,
    /// A zero at a bracket end counts as a root even without a sign change.
    pub accept_endpoint_zero: bool,
}

impl<T: Real> Default for RootOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::of(DEFAULT_TOLERANCE),
            max_iterations: MAX_ITERATIONS,
            max_expansions: MAX_EXPANSIONS,
            accept_endpoint_zero: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    Converged,
    /// Zero found at an end of the bracket.
    Endpoint,
    /// The difference vanishes on the whole bracket; the midpoint is returned.
    DegenerateBracket,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Root<T> {
    pub x: T,
    /// `F_cond - F_norm` at `x`.
    pub residual: T,
    pub evaluations: usize,
    pub status: RootStatus,
}

struct Probe<T, F> {
    pair: F,
    tol: T,
    evaluations: usize,
}

impl<T: Real, F: FnMut(T) -> Result<(T, T)>> Probe<T, F> {
    /// `(difference, acceptance threshold)`.
    fn eval(&mut self, x: T) -> Result<(T, T)> {
        self.evaluations += 1;
        let (fc, fnorm) = (self.pair)(x)?;
        Ok((fc - fnorm, self.tol * fnorm.abs().max(T::one())))
    }
}

fn no_bracket<T: Real>(lo: T, hi: T) -> Error {
    Error::NoBracket {
        lo: lo.to_f64_lossy(),
        hi: hi.to_f64_lossy(),
    }
}

/// Root of `F_cond(x) - F_norm(x)` inside `[lo, hi]`, without expansion.
pub fn find_crossing<T, F>(pair: F, lo: T, hi: T, opts: &RootOptions<T>) -> Result<Root<T>>
where
    T: Real,
    F: FnMut(T) -> Result<(T, T)>,
{
    let mut probe = Probe {
        pair,
        tol: opts.tol,
        evaluations: 0,
    };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, ta) = probe.eval(a)?;
    let (mut fb, tb) = probe.eval(b)?;
    let zero_a = fa.abs() <= ta;
    let zero_b = fb.abs() <= tb;

    if zero_a && zero_b {
        let mid = (a + b) * T::half();
        let (fm, tm) = probe.eval(mid)?;
        if fm.abs() <= tm {
            return Ok(Root {
                x: mid,
                residual: fm,
                evaluations: probe.evaluations,
                status: RootStatus::DegenerateBracket,
            });
        }
    }
    if zero_a || zero_b {
        if !opts.accept_endpoint_zero {
            return Err(no_bracket(lo, hi));
        }
        let (x, residual) = if fa.abs() <= fb.abs() {
            (a, fa)
        } else {
            (b, fb)
        };
        return Ok(Root {
            x,
            residual,
            evaluations: probe.evaluations,
            status: RootStatus::Endpoint,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(no_bracket(lo, hi));
    }

    for _ in 0..opts.max_iterations {
        let (left, right) = if a < b { (a, b) } else { (b, a) };
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > left && c < right) {
            c = (a + b) * T::half();
        }
        if !(c > left && c < right) {
            // bracket exhausted at working precision
            break;
        }
        let (fc, tc) = probe.eval(c)?;
        if fc.abs() <= tc {
            return Ok(Root {
                x: c,
                residual: fc,
                evaluations: probe.evaluations,
                status: RootStatus::Converged,
            });
        }
        if fc.signum() != fb.signum() {
            a = b;
            fa = fb;
        } else {
            fa = fa * T::half();
        }
        b = c;
        fb = fc;
    }
    Err(Error::NonConvergence(opts.max_iterations))
}

/// Grows `[lo, hi]` geometrically until `F_cond - F_norm` changes sign or
/// vanishes at an end. `hi` doubles every step; a positive `lo` halves.
pub fn expand_bracket<T, F>(mut pair: F, lo: T, hi: T, opts: &RootOptions<T>) -> Result<(T, T)>
where
    T: Real,
    F: FnMut(T) -> Result<(T, T)>,
{
    if !(lo < hi) || lo < T::zero() {
        return Err(no_bracket(lo, hi));
    }
    let mut probe = Probe {
        pair: &mut pair,
        tol: opts.tol,
        evaluations: 0,
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, ta) = probe.eval(a)?;
    let (fb, tb) = probe.eval(b)?;
    if fa.signum() != fb.signum() || fa.abs() <= ta || fb.abs() <= tb {
        return Ok((a, b));
    }
    // from here on every probe shares the sign of fa
    for _ in 0..opts.max_expansions {
        if a > T::zero() {
            let next = a * T::half();
            let (f, t) = probe.eval(next)?;
            if f.signum() != fa.signum() || f.abs() <= t {
                return Ok((next, a));
            }
            a = next;
        }
        let next = b * T::two();
        let (f, t) = probe.eval(next)?;
        if f.signum() != fb.signum() || f.abs() <= t {
            return Ok((b, next));
        }
        b = next;
    }
    Err(no_bracket(a, b))
}

/// Critical temperature: root of `F_cond(T) - F_norm(T)` with bracket expansion.
///
/// `pair` must accept `T = 0` (ground energies) when `lo` is zero.
pub fn critical_temperature<T, F>(
    mut pair: F,
    bracket: (T, T),
    opts: &RootOptions<T>,
) -> Result<Root<T>>
where
    T: Real,
    F: FnMut(T) -> Result<(T, T)>,
{
    let (lo, hi) = expand_bracket(&mut pair, bracket.0, bracket.1, opts)?;
    find_crossing(pair, lo, hi, opts)
}

/// Source of Grover free energies.
#[derive(Clone, Debug, PartialEq)]
pub enum GroverSource<T> {
    /// `F_cond = -J N`, `F_norm = -(N/β) log(2 cosh βΓ)`.
    ClosedForm,
    /// Spectrum of the hopping operator on the normal block (`Γ = 1`).
    /// The normal block carries no potential, so its spectrum at `Γ` is `Γ μ_i`.
    Spectral { k_norm: Vec<T> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    SpectralFiniteSize,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::SpectralFiniteSize => "spectral_finite_size",
        }
    }
}

/// Single-target Grover model at fixed `N` as a function of `(J, Γ, T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroverFamily<T> {
    pub n_qubits: u32,
    pub k_b: T,
    pub source: GroverSource<T>,
}

impl<T: Real> GroverFamily<T> {
    pub fn closed_form(n_qubits: u32, k_b: T) -> Self {
        Self {
            n_qubits,
            k_b,
            source: GroverSource::ClosedForm,
        }
    }

    /// Diagonalizes the normal block once.
    pub fn spectral(n_qubits: u32, k_b: T, dense_limit: u64) -> Result<Self> {
        let g = GroverSpec::new(n_qubits, 1.0, 1.0)?;
        let h = build_hamiltonian(
            &g.model()?,
            Some(&g.partition()?),
            Restriction::Norm,
            dense_limit,
        )?;
        let k_norm = diagonalize(&h, false)?
            .eigenvalues()
            .iter()
            .map(|&x| T::of(x))
            .collect();
        Ok(Self {
            n_qubits,
            k_b,
            source: GroverSource::Spectral { k_norm },
        })
    }

    pub fn method(&self) -> Method {
        match self.source {
            GroverSource::ClosedForm => Method::ClosedForm,
            GroverSource::Spectral { .. } => Method::SpectralFiniteSize,
        }
    }

    /// `(E_cond, E_norm)` at zero temperature.
    pub fn ground_pair(&self, j: T, gamma: T) -> (T, T) {
        let n = T::of(f64::from(self.n_qubits));
        let e_norm = match &self.source {
            GroverSource::ClosedForm => -gamma * n,
            GroverSource::Spectral { k_norm } => gamma * k_norm[0],
        };
        (-j * n, e_norm)
    }

    /// `(F_cond, F_norm)`; `temperature = 0` gives the ground energies.
    pub fn pair(&self, j: T, gamma: T, temperature: T) -> Result<(T, T)> {
        if temperature < T::zero() || !temperature.is_finite() {
            return Err(Error::InvalidBeta(
                (T::one() / (self.k_b * temperature)).to_f64_lossy(),
            ));
        }
        if temperature == T::zero() {
            return Ok(self.ground_pair(j, gamma));
        }
        let beta = T::one() / (self.k_b * temperature);
        match &self.source {
            GroverSource::ClosedForm => grover_free_energies(self.n_qubits, j, gamma, beta),
            GroverSource::Spectral { k_norm } => {
                let levels: Vec<T> = k_norm.iter().map(|&m| gamma * m).collect();
                let n = T::of(f64::from(self.n_qubits));
                Ok((-j * n, free_energy(&levels, beta)?))
            }
        }
    }

    /// `T_c` at fixed `(J, Γ)`, bracket seeded with `[0, J / k_B]`.
    pub fn critical_temperature(&self, j: T, gamma: T, opts: &RootOptions<T>) -> Result<Root<T>> {
        let seed = (j / self.k_b).max(T::of(1e-3));
        critical_temperature(|t| self.pair(j, gamma, t), (T::zero(), seed), opts)
    }

    /// `Γ_c` at fixed `(J, T)`, bracket seeded with `[0, J]`.
    pub fn critical_gamma(&self, j: T, temperature: T, opts: &RootOptions<T>) -> Result<Root<T>> {
        let mut pair = |g: T| self.pair(j, g, temperature);
        let seed = j.max(T::of(1e-3));
        let (lo, hi) = expand_bracket(&mut pair, T::zero(), seed, opts)?;
        find_crossing(pair, lo, hi, opts)
    }
}

/// Swept parameter of a critical curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Sweep `Γ` at fixed `J`, solve for `T`.
    Gamma,
    /// Sweep `J` at fixed `Γ`, solve for `T`.
    J,
    /// Sweep `T` at fixed `J`, solve for `Γ`.
    T,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Gamma => "gamma",
            Axis::J => "J",
            Axis::T => "T",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Solved(RootStatus),
    PhaseAbsent,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint<T> {
    pub sweep_value: T,
    pub critical_value: Option<T>,
    pub residual: Option<T>,
    pub status: PointStatus,
    /// Module-qualified error code for failed points.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalCurve<T> {
    pub axis: Axis,
    /// Value of the fixed parameter (`J` for `Gamma`/`T` sweeps, `Γ` for `J` sweeps).
    pub fixed: T,
    pub method: Method,
    pub n_qubits: u32,
    pub points: Vec<CurvePoint<T>>,
}

/// One CSV record of a critical curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub sweep_value: f64,
    pub critical_value: Option<f64>,
    pub residual: Option<f64>,
    pub method: &'static str,
    #[serde(rename = "N")]
    pub n: u32,
}

pub const CURVE_CSV_HEADER: &str = "sweep_value,critical_value,residual,method,N";

impl<T: Real> CriticalCurve<T> {
    pub fn rows(&self) -> Vec<CurveRow> {
        self.points
            .iter()
            .map(|p| CurveRow {
                sweep_value: p.sweep_value.to_f64_lossy(),
                critical_value: p.critical_value.map(Real::to_f64_lossy),
                residual: p.residual.map(Real::to_f64_lossy),
                method: self.method.name(),
                n: self.n_qubits,
            })
            .collect()
    }

    pub fn solved(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.points
            .iter()
            .filter_map(|p| p.critical_value.map(|c| (p.sweep_value, c)))
    }
}

/// Solves every sweep point independently; failures are recorded per point.
pub fn critical_curve<T: Real>(
    family: &GroverFamily<T>,
    axis: Axis,
    fixed: T,
    sweep: &[T],
    opts: &RootOptions<T>,
) -> Result<CriticalCurve<T>> {
    if sweep.is_empty() {
        return Err(Error::InvalidModel("empty sweep".into()));
    }
    let mut order: Vec<T> = sweep.to_vec();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let points = order
        .par_iter()
        .map(|&x| {
            let solved = match axis {
                Axis::Gamma => family.critical_temperature(fixed, x, opts),
                Axis::J => family.critical_temperature(x, fixed, opts),
                Axis::T => family.critical_gamma(fixed, x, opts),
            };
            match solved {
                Ok(root) => CurvePoint {
                    sweep_value: x,
                    critical_value: Some(root.x),
                    residual: Some(root.residual),
                    status: PointStatus::Solved(root.status),
                    error: None,
                },
                Err(e) => CurvePoint {
                    sweep_value: x,
                    critical_value: None,
                    residual: None,
                    status: if matches!(e, Error::NoBracket { .. }) {
                        PointStatus::PhaseAbsent
                    } else {
                        PointStatus::Failed
                    },
                    error: Some(e.code().to_string()),
                },
            }
        })
        .collect();
    Ok(CriticalCurve {
        axis,
        fixed,
        method: family.method(),
        n_qubits: family.n_qubits,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoteEstimate<T> {
    pub j: T,
    pub t_c: T,
    /// `T_c(J) / J`.
    pub gamma_estimate: T,
}

/// `T_c(J) / J` at fixed `Γ` for each `J`. Points outside the phase region are skipped.
pub fn gamma_asymptote<T: Real>(
    family: &GroverFamily<T>,
    gamma: T,
    j_values: &[T],
    opts: &RootOptions<T>,
) -> Result<Vec<AsymptoteEstimate<T>>> {
    let mut out = Vec::with_capacity(j_values.len());
    for &j in j_values {
        match family.critical_temperature(j, gamma, opts) {
            Ok(root) => out.push(AsymptoteEstimate {
                j,
                t_c: root.x,
                gamma_estimate: root.x / j,
            }),
            Err(Error::NoBracket { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeEstimate<T> {
    pub offset: T,
    pub j: T,
    pub slope: T,
}

/// Central differences of `T_c(J)` at `J = J_c + offset`, step `offset / 10`.
pub fn qcp_slope_scan<T: Real>(
    family: &GroverFamily<T>,
    gamma: T,
    j_c: T,
    offsets: &[T],
    opts: &RootOptions<T>,
) -> Result<Vec<SlopeEstimate<T>>> {
    offsets
        .iter()
        .map(|&offset| {
            if !(offset > T::zero()) {
                return Err(Error::InvalidModel("slope offsets must be positive".into()));
            }
            let j = j_c + offset;
            let h = offset / T::of(10.0);
            let up = family.critical_temperature(j + h, gamma, opts)?.x;
            let down = family.critical_temperature(j - h, gamma, opts)?.x;
            Ok(SlopeEstimate {
                offset,
                j,
                slope: (up - down) / (h + h),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T0Crossing {
    pub gamma_c: f64,
    pub e_cond: f64,
    pub e_norm: f64,
    pub residual: f64,
    pub evaluations: usize,
    /// Sweep interval that contained the first sign change.
    pub bracket: (f64, f64),
}

/// Zero-temperature crossing of `E_cond(Γ)` and `E_norm(Γ)`.
///
/// `ground` returns `(E_cond, E_norm)`. The sweep is scanned in order for the
/// first strict sign change, which is then refined.
pub fn t0_crossing<F>(mut ground: F, sweep: &[f64], tol: f64) -> Result<T0Crossing>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if sweep.len() < 2 {
        return Err(Error::InvalidModel(
            "zero-temperature sweep needs two points".into(),
        ));
    }
    let mut evaluations = 0;
    let mut prev: Option<(f64, f64)> = None;
    for &g in sweep {
        let (ec, en) = ground(g)?;
        evaluations += 1;
        let d = ec - en;
        if let Some((pg, pd)) = prev {
            if pd.signum() != d.signum() && pd != 0.0 && d != 0.0 {
                let opts = RootOptions {
                    tol,
                    accept_endpoint_zero: false,
                    ..RootOptions::default()
                };
                let root = find_crossing(&mut ground, pg, g, &opts)?;
                let (e_cond, e_norm) = ground(root.x)?;
                return Ok(T0Crossing {
                    gamma_c: root.x,
                    e_cond,
                    e_norm,
                    residual: root.residual,
                    evaluations: evaluations + root.evaluations + 1,
                    bracket: (pg, g),
                });
            }
        }
        prev = Some((g, d));
    }
    Err(no_bracket(sweep[0], sweep[sweep.len() - 1]))
}

/// `(E_cond, E_norm)` of a dense model by diagonalizing only the two blocks.
pub fn dense_ground_pair(spec: &ModelSpec, p: &Partition, dense_limit: u64) -> Result<(f64, f64)> {
    let lowest = |side: Side| -> Result<f64> {
        let h = build_hamiltonian(spec, Some(p), side.into(), dense_limit)?;
        Ok(diagonalize(&h, false)?.ground_energy())
    };
    Ok((lowest(Side::Cond)?, lowest(Side::Norm)?))
}
