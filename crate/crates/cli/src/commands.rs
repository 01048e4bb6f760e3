use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use qcond::configspace::{partition_stats, DEFAULT_ENUMERATION_LIMIT};
use qcond::eprmc::{
    crossing_probability_report, decompose, estimate_diagonal_with, Constraint, SamplingOptions,
};
use qcond::exactthermo::{ExactSystem, DEFAULT_DENSE_LIMIT, THERMO_CSV_HEADER};
use qcond::modelfile::{ModelFile, ModelKind, PartitionSource};
use qcond::phasediagram::{
    critical_curve, dense_ground_pair, t0_crossing, Axis, GroverFamily, RootOptions,
    CURVE_CSV_HEADER,
};
use qcond::{Configuration, ModelSpec, Partition, Side};

use crate::output::{finish, output_path, write_csv, write_json, CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "qcond",
    version,
    about = "Restricted free energies, path sampling and critical curves of qubit models"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Thermodynamics of H, H_cond and H_norm on a β grid (CSV).
    Thermo(ThermoArgs),
    /// Critical curve F_cond = F_norm of the Grover model (CSV).
    Phase(PhaseArgs),
    /// Path-sampling estimate of a diagonal element of e^{-Ht} (JSON).
    Mc(McArgs),
    /// Partition, boundary and link statistics (JSON).
    Graph(GraphArgs),
    /// Zero-temperature crossing of the restricted ground energies (JSON).
    T0(T0Args),
    /// Matrix-element, free-energy and crossing-probability bounds (JSON).
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    /// Model definition file.
    #[arg(long)]
    model: PathBuf,
    /// Override the number of qubits.
    #[arg(long = "N")]
    n_qubits: Option<u32>,
    /// Override Γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Partition JSON file, overriding the model file.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Threshold partition `V(n) <= max_v_cond`, overriding the model file.
    #[arg(long, allow_hyphen_values = true)]
    max_v_cond: Option<f64>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
    dense_limit: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct GridArgs {
    /// Inverse temperatures, comma separated.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Temperatures, comma separated; converted with k_B.
    #[arg(long = "T", value_delimiter = ',')]
    temperature: Vec<f64>,
}

#[derive(Args, Debug)]
struct ThermoArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Swept parameter (gamma, J or T) and inclusive range start:stop:step.
    #[arg(long, num_args = 2, value_names = ["AXIS", "RANGE"], required = true)]
    sweep: Vec<String>,
    /// Use the closed forms instead of the finite-size spectrum.
    #[arg(long)]
    closed_form: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ConstraintArg {
    None,
    NoTransit,
    SomeTransit,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SamplingArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Imaginary time.
    #[arg(long)]
    t: f64,
    /// Start and end configuration as an integer bit pattern.
    #[arg(long, default_value_t = 0)]
    start: u64,
    #[arg(long, value_enum, default_value_t = ConstraintArg::None)]
    constraint: ConstraintArg,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct T0Args {
    #[command(flatten)]
    model: ModelArgs,
    /// Γ range start:stop:step scanned for the first sign change; default 0:2J:J/4.
    #[arg(long)]
    range: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Imaginary times for the crossing-probability checks; defaults to the β grid.
    #[arg(long = "t", value_delimiter = ',')]
    times: Vec<f64>,
    /// Skip the sampled crossing-probability checks.
    #[arg(long)]
    no_mc: bool,
}

/// Fully resolved inputs, echoed into the manifest.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    model_path: &'a Path,
    model: &'a ModelFile,
    partition_source: Option<&'a PartitionSource>,
    dense_limit: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    beta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<serde_json::Value>,
    output: &'a Path,
    format: &'static str,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Thermo(a) => thermo(a),
        Command::Phase(a) => phase(a),
        Command::Mc(a) => mc(a),
        Command::Graph(a) => graph(a),
        Command::T0(a) => t0(a),
        Command::Verify(a) => verify(a),
    }
}

fn load_model(a: &ModelArgs) -> CliResult<ModelFile> {
    let mut file = ModelFile::load(&a.model)?;
    if let Some(n) = a.n_qubits {
        file = file.with_n_qubits(n);
    }
    if let Some(g) = a.gamma {
        file = file.with_gamma(g);
    }
    if let Some(p) = &a.partition {
        file.partition_file = Some(p.clone());
        file.max_v_cond = None;
    } else if let Some(v) = a.max_v_cond {
        file.max_v_cond = Some(v);
        file.partition_file = None;
    }
    Ok(file)
}

fn resolve(file: &ModelFile) -> CliResult<(ModelSpec, Partition, PartitionSource)> {
    Ok(file.resolve()?)
}

fn betas(grid: &GridArgs, k_b: f64) -> CliResult<Vec<f64>> {
    let mut out = grid.beta.clone();
    out.extend(grid.temperature.iter().map(|t| 1.0 / (k_b * t)));
    if out.is_empty() {
        return Err(CliError::Usage(
            "give at least one --beta or --T value".into(),
        ));
    }
    if let Some(b) = out.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
        return Err(qcond::Error::InvalidBeta(*b).into());
    }
    Ok(out)
}

/// Inclusive `start:stop:step` grid.
fn parse_range(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("range must be start:stop:step, got {text:?}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let span = (stop - start) / step;
    let count = (span + 1e-9).floor() as usize + 1;
    // dividing by an integral 1/step rounds 0.05-style grids exactly
    let inv = 1.0 / step;
    let value = |i: usize| {
        if (inv - inv.round()).abs() < 1e-9 {
            let m = inv.round();
            let s = start * m;
            if (s - s.round()).abs() < 1e-9 {
                (s.round() + i as f64) / m
            } else {
                start + i as f64 / m
            }
        } else {
            start + step * i as f64
        }
    };
    Ok((0..count)
        .map(|i| {
            if i + 1 == count && (span - (count - 1) as f64).abs() < 1e-9 {
                stop
            } else {
                value(i)
            }
        })
        .collect())
}

fn thermo(a: ThermoArgs) -> CliResult<()> {
    let file = load_model(&a.model)?;
    let (spec, p, source) = resolve(&file)?;
    let betas = betas(&a.grid, file.k_b)?;
    let sys = ExactSystem::new(&spec, &p, true, a.model.dense_limit)?;
    let rows = betas
        .iter()
        .map(|&b| sys.thermo_row(b, file.k_b))
        .collect::<qcond::Result<Vec<_>>>()?;
    let out = output_path("thermo", "csv", a.model.out.as_deref());
    write_csv(&out, &rows, THERMO_CSV_HEADER)?;
    let config = RunConfig {
        command: "thermo",
        model_path: &a.model.model,
        model: &file,
        partition_source: Some(&source),
        dense_limit: a.model.dense_limit,
        beta: betas,
        extra: None,
        output: &out,
        format: "csv",
    };
    finish("thermo", &out, &config, file.k_b)
}

fn phase(a: PhaseArgs) -> CliResult<()> {
    let file = load_model(&a.model)?;
    if file.model != ModelKind::Grover || file.targets.as_ref().is_some_and(|t| t.len() != 1) {
        return Err(qcond::Error::InvalidModel(
            "phase curves are available for the single-target Grover model".into(),
        )
        .into());
    }
    let axis = match a.sweep[0].as_str() {
        "gamma" | "Gamma" => Axis::Gamma,
        "J" | "j" => Axis::J,
        "T" | "t" => Axis::T,
        other => {
            return Err(CliError::Usage(format!(
                "unknown sweep axis {other:?}; use gamma, J or T"
            )))
        }
    };
    let grid = parse_range(&a.sweep[1])?;
    let family = if a.closed_form {
        GroverFamily::closed_form(file.n_qubits, file.k_b)
    } else {
        GroverFamily::spectral(file.n_qubits, file.k_b, a.model.dense_limit)?
    };
    let fixed = if axis == Axis::J { file.gamma } else { file.j };
    let opts = RootOptions {
        tol: a.tol,
        ..RootOptions::default()
    };
    let curve = critical_curve(&family, axis, fixed, &grid, &opts)?;
    let out = output_path("phase", "csv", a.model.out.as_deref());
    write_csv(&out, &curve.rows(), CURVE_CSV_HEADER)?;
    let config = RunConfig {
        command: "phase",
        model_path: &a.model.model,
        model: &file,
        partition_source: None,
        dense_limit: a.model.dense_limit,
        beta: Vec::new(),
        extra: Some(json!({
            "axis": axis,
            "fixed": fixed,
            "sweep": grid,
            "method": family.method(),
            "tol": a.tol,
            "points": curve.points,
        })),
        output: &out,
        format: "csv",
    };
    finish("phase", &out, &config, file.k_b)
}

fn mc(a: McArgs) -> CliResult<()> {
    let file = load_model(&a.model)?;
    let spec = file.spec()?;
    let start = Configuration::new(a.start, spec.n_qubits())?;
    let opts = SamplingOptions {
        workers: a.sampling.workers,
    };
    let (samples, seed) = (a.sampling.samples, a.sampling.seed);
    let (estimate, source, decomposition) = match a.constraint {
        ConstraintArg::None => (
            estimate_diagonal_with(&spec, start, a.t, samples, seed, opts)?,
            None,
            None,
        ),
        c => {
            let (_, p, source) = resolve(&file)?;
            let d = decompose(&spec, &p, start, a.t, samples, seed, opts)?;
            let part = if c == ConstraintArg::NoTransit {
                d.no_transit
            } else {
                d.some_transit
            };
            (part, Some(source), Some(d))
        }
    };
    let constraint = match a.constraint {
        ConstraintArg::None => None,
        ConstraintArg::NoTransit => Some(Constraint::NoTransit),
        ConstraintArg::SomeTransit => Some(Constraint::SomeTransit),
    };
    let report = json!({
        "estimate": estimate.mean,
        "std_error": estimate.std_error,
        "n_samples": estimate.n_samples,
        "seed": estimate.seed,
        "t": a.t,
        "start": a.start,
        "model": file,
        "constraint": constraint,
        "decomposition": decomposition,
    });
    let out = output_path("mc", "json", a.model.out.as_deref());
    write_json(&out, &report)?;
    let config = RunConfig {
        command: "mc",
        model_path: &a.model.model,
        model: &file,
        partition_source: source.as_ref(),
        dense_limit: a.model.dense_limit,
        beta: Vec::new(),
        extra: Some(
            json!({ "t": a.t, "start": a.start, "sampling": a.sampling, "constraint": a.constraint }),
        ),
        output: &out,
        format: "json",
    };
    finish("mc", &out, &config, file.k_b)
}

fn graph(a: GraphArgs) -> CliResult<()> {
    let file = load_model(&a.model)?;
    let (spec, p, source) = resolve(&file)?;
    let stats = partition_stats(&spec, &p, DEFAULT_ENUMERATION_LIMIT)?;
    let (lhs, rhs) = stats.links.identity_sides();
    let report = json!({
        "model": file,
        "partition_source": source,
        "stats": stats,
        "mean_out_cond": stats.links.mean_out_cond.to_string(),
        "mean_out_norm": stats.links.mean_out_norm.to_string(),
        "link_identity": {
            "cond_side": lhs.to_string(),
            "norm_side": rhs.to_string(),
            "holds": lhs == rhs,
        },
    });
    let out = output_path("graph", "json", a.model.out.as_deref());
    write_json(&out, &report)?;
    let config = RunConfig {
        command: "graph",
        model_path: &a.model.model,
        model: &file,
        partition_source: Some(&source),
        dense_limit: a.model.dense_limit,
        beta: Vec::new(),
        extra: None,
        output: &out,
        format: "json",
    };
    finish("graph", &out, &config, file.k_b)
}

fn t0(a: T0Args) -> CliResult<()> {
    let file = load_model(&a.model)?;
    let (_, p, source) = resolve(&file)?;
    let sweep = match &a.range {
        Some(r) => parse_range(r)?,
        None => {
            let j = file.j.abs().max(1e-3);
            (0..=8).map(|i| 0.25 * j * f64::from(i)).collect()
        }
    };
    let limit = a.model.dense_limit;
    let crossing = t0_crossing(
        |g| {
            let spec = file.clone().with_gamma(g).spec()?;
            dense_ground_pair(&spec, &p, limit)
        },
        &sweep,
        a.tol,
    )?;
    let report = json!({
        "model": file,
        "partition_source": source,
        "sweep": sweep,
        "crossing": crossing,
        "distance_from_J": (crossing.gamma_c - file.j).abs(),
    });
    let out = output_path("t0", "json", a.model.out.as_deref());
    write_json(&out, &report)?;
    let config = RunConfig {
        command: "t0",
        model_path: &a.model.model,
        model: &file,
        partition_source: Some(&source),
        dense_limit: limit,
        beta: Vec::new(),
        extra: Some(json!({ "sweep": sweep, "tol": a.tol })),
        output: &out,
        format: "json",
    };
    finish("t0", &out, &config, file.k_b)
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    let file = load_model(&a.model)?;
    let (spec, p, source) = resolve(&file)?;
    let betas = betas(&a.grid, file.k_b)?;
    let sys = ExactSystem::new(&spec, &p, true, a.model.dense_limit)?;

    let mut matrix_lower = 0;
    let mut matrix_upper = 0;
    let mut f_upper = 0;
    let mut f_lower = 0;
    let mut per_beta = Vec::new();
    for &b in &betas {
        let m = sys.matrix_inequality_report(b)?;
        let f = sys.free_energy_bounds_report(b)?;
        matrix_lower += m.lower_violations();
        matrix_upper += m.upper_violations();
        f_upper += usize::from(!f.upper_holds);
        f_lower += usize::from(!f.lower_holds);
        per_beta.push(json!({ "beta": b, "matrix": m, "free_energy": f }));
    }

    let times = if a.times.is_empty() {
        betas.clone()
    } else {
        a.times.clone()
    };
    let mut crossing = Vec::new();
    let mut crossing_violations = 0;
    if !a.no_mc {
        let opts = SamplingOptions {
            workers: a.sampling.workers,
        };
        for &t in &times {
            for side in [Side::Norm, Side::Cond] {
                let r = crossing_probability_report(
                    &spec,
                    &p,
                    side,
                    t,
                    a.sampling.samples,
                    a.sampling.seed,
                    opts,
                )?;
                crossing_violations += r.transit_violations.len() + r.stay_violations.len();
                crossing.push(r);
            }
        }
    }

    let passed = matrix_lower + matrix_upper + f_upper + f_lower + crossing_violations == 0;
    let summary = json!({
        "matrix_lower_violations": matrix_lower,
        "matrix_upper_violations": matrix_upper,
        "free_energy_upper_failures": f_upper,
        "free_energy_lower_failures": f_lower,
        "crossing_violations": crossing_violations,
        "all_passed": passed,
    });
    let report = json!({
        "model": file,
        "partition_source": source,
        "summary": summary,
        "beta": per_beta,
        "crossing": crossing,
    });
    let out = output_path("verify", "json", a.model.out.as_deref());
    write_json(&out, &report)?;
    let config = RunConfig {
        command: "verify",
        model_path: &a.model.model,
        model: &file,
        partition_source: Some(&source),
        dense_limit: a.model.dense_limit,
        beta: betas,
        extra: Some(json!({ "t": times, "sampling": a.sampling, "no_mc": a.no_mc })),
        output: &out,
        format: "json",
    };
    finish("verify", &out, &config, file.k_b)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Violations(format!(
            "bound checks failed: {summary}"
        )))
    }
}
