//! Command-line front end: loads a model JSON file, dispatches subcommands,
//! and emits machine-readable JSON/CSV reports.
//!
//! Exit codes: 0 success, 1 validation/usage/domain errors, 2 numerical
//! failures (degenerate landscapes, refused pooling, and the like). Every
//! failure prints one machine-parsable line `error: {category}: {message}`
//! on stderr. Floating-point CSV fields are printed with 17 significant
//! digits so values round-trip exactly; JSON numbers use the shortest
//! representation that round-trips.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::clt::{
    mu_shift_check, predicted_params, verify_clt, CltParams, CltReport, VerifySource, VerifyTols,
};
use crate::error::{McwError, Result};
use crate::exact::{
    laplace_log_z, parse_boxes, sector_law, MagnetBox, SectorLaw,
};
use crate::landscape::{global_maximizers, landscape_of, StationaryPoint, TIE_TOL};
use crate::model::{ModelSpec, PriorSpec};
use crate::sampler::{multichain, ChainConfig, ChainInit, MultiChainResult};
use crate::variational::{infsup_solve, InfSupOptions};

/// Grid density handed to the landscape search from the CLI.
const CLI_GRID_DENSITY: usize = crate::landscape::DEFAULT_GRID_DENSITY;
/// Report pipeline sizes: exact stage and verification ladder.
const REPORT_EXACT_N: usize = 200;
const REPORT_VERIFY_NS: [usize; 3] = [100, 200, 400];

/// Schema the `report` subcommand validates its output against; the same
/// document ships in the repository under `schemas/`.
const REPORT_SCHEMA: &str = include_str!("../../../schemas/report.schema.json");

#[derive(Parser, Debug)]
#[command(
    name = "mcw",
    version,
    about = "Multispecies Curie-Weiss toolkit: pressure, landscapes, exact laws, sampling, fluctuation checks"
)]
struct Cli {
    /// Model description JSON file.
    #[arg(long, global = true, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Directory for emitted files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Single-threaded reductions and fixed seeds; two runs are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads (default: all cores; MCW_THREADS overrides).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Limiting pressure by the inf-sup variational principle.
    Pressure,
    /// Stationary points of the limiting free energy.
    Landscape {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Predicted fluctuation-law parameters (mean shift and covariance).
    Clt {
        /// Conditioning box per species, e.g. "(0:1]" or "[-1:0),[0:1)".
        #[arg(long = "box", value_name = "BOXES")]
        box_spec: Option<String>,
    },
    /// Exact sector-law statistics at one size.
    Exact {
        #[arg(long = "N")]
        n: usize,
        /// Tilt vector, comma-separated (default zero).
        #[arg(long, value_name = "T1,..,TK")]
        tilt: Option<String>,
        /// Conditioning box per species.
        #[arg(long = "box", value_name = "BOXES")]
        box_spec: Option<String>,
        /// Write the full law as CSV (columns x_1..x_K, probability).
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
    },
    /// Glauber samples of the magnetization.
    Sample {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 4)]
        chains: usize,
        /// Post-burn-in sweeps per chain.
        #[arg(long, default_value_t = 2000)]
        sweeps: usize,
        #[arg(long, default_value_t = 200)]
        burn: usize,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Initial state: up, down, random, or "x1,..,xK".
        #[arg(long, default_value = "random")]
        init: String,
        /// Retention box per species; samples outside are discarded.
        #[arg(long = "box", value_name = "BOXES")]
        box_spec: Option<String>,
        /// Write retained samples as CSV (columns m_1..m_K).
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
    },
    /// Compare predicted fluctuations against finite-N statistics.
    Verify {
        /// Sizes, comma-separated.
        #[arg(long = "N", value_name = "N1,N2,..", default_value = "200,400,800")]
        n_list: String,
        #[arg(long, value_enum, default_value_t = SourceArg::Exact)]
        source: SourceArg,
        #[arg(long = "box", value_name = "BOXES")]
        box_spec: Option<String>,
        /// Also write the CSV to a file.
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
        /// Also run the finite-maximizer shift check on the same sizes.
        #[arg(long)]
        shift: bool,
    },
    /// Full pipeline (pressure, landscape, clt, exact, verify) as one JSON.
    Report,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SourceArg {
    Exact,
    Sampler,
}

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// [`run`] over explicit arguments (first one is the program name).
pub fn run_from<I>(args: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1 regardless of clap's own convention;
            // --help/--version are successes.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads(cli.threads, cli.deterministic);
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.category());
            e.exit_code()
        }
    }
}

fn init_threads(threads: Option<usize>, deterministic: bool) {
    let n = if deterministic {
        1
    } else {
        threads
            .or_else(|| std::env::var("MCW_THREADS").ok().and_then(|v| v.parse().ok()))
            .unwrap_or(0)
    };
    if n > 0 {
        // A second initialization in the same process is harmless: the
        // first pool stays, which only matters for in-process tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let model_path = cli.model.as_ref().ok_or_else(|| {
        McwError::Validation("--model PATH is required for every subcommand".into())
    })?;
    let spec = ModelSpec::from_json_file(model_path)?;
    match &cli.cmd {
        Cmd::Pressure => cmd_pressure(&spec),
        Cmd::Landscape { format } => cmd_landscape(&spec, *format),
        Cmd::Clt { box_spec } => cmd_clt(&spec, box_spec.as_deref()),
        Cmd::Exact { n, tilt, box_spec, emit } => {
            cmd_exact(&spec, *n, tilt.as_deref(), box_spec.as_deref(), emit.as_deref(), &cli.out)
        }
        Cmd::Sample { n, chains, sweeps, burn, thin, seed, init, box_spec, emit } => cmd_sample(
            &spec,
            SampleArgs {
                n: *n,
                chains: *chains,
                sweeps: *sweeps,
                burn: *burn,
                thin: *thin,
                seed: *seed,
                init,
                box_spec: box_spec.as_deref(),
                emit: emit.as_deref(),
            },
            &cli.out,
        ),
        Cmd::Verify { n_list, source, box_spec, emit, shift } => cmd_verify(
            &spec,
            n_list,
            *source,
            box_spec.as_deref(),
            emit.as_deref(),
            *shift,
            &cli.out,
        ),
        Cmd::Report => cmd_report(&spec, &cli.out),
    }
}

// ---------------------------------------------------------------------------
// Shared formatting helpers
// ---------------------------------------------------------------------------

/// 17 significant digits: round-trips f64 exactly.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn vec_json(v: &DVector<f64>) -> Value {
    Value::from(v.iter().copied().collect::<Vec<f64>>())
}

fn mat_json(m: &DMatrix<f64>) -> Value {
    let rows: Vec<Vec<f64>> =
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect();
    Value::from(rows)
}

fn parse_f64_list(s: &str, k: usize, what: &str) -> Result<DVector<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != k {
        return Err(McwError::Validation(format!(
            "{what} has {} entries for {k} species",
            parts.len()
        )));
    }
    let mut out = DVector::zeros(k);
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.trim().parse::<f64>().map_err(|_| {
            McwError::Validation(format!("{what} entry {:?} is not a number", p.trim()))
        })?;
    }
    Ok(out)
}

fn parse_box_arg(s: Option<&str>, k: usize) -> Result<Option<Vec<MagnetBox>>> {
    match s {
        None => Ok(None),
        Some(raw) => {
            let boxes = parse_boxes(raw)?;
            if boxes.len() != k {
                return Err(McwError::Validation(format!(
                    "--box lists {} slices for {k} species",
                    boxes.len()
                )));
            }
            Ok(Some(boxes))
        }
    }
}

fn write_out_file(out_dir: &Path, rel: &Path, content: &str) -> Result<PathBuf> {
    let path = if rel.is_absolute() { rel.to_path_buf() } else { out_dir.join(rel) };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&path, content)?;
    Ok(path)
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn pressure_json(spec: &ModelSpec) -> Result<Value> {
    let saddle = infsup_solve(spec, &InfSupOptions::default())?;
    let mut out = json!({
        "prior_convention": saddle.value,
        "counting_convention": saddle.value + std::f64::consts::LN_2,
        "saddle_point": vec_json(&saddle.x_star),
        "grad_norm": saddle.grad_norm,
        "converged": saddle.converged,
        "multistart_spread": saddle.multistart_spread,
    });
    if spec.prior().is_ising() {
        let (_, points) = landscape_of(spec, CLI_GRID_DENSITY);
        let maxset = global_maximizers(&points, TIE_TOL)?;
        let gap = (saddle.value + std::f64::consts::LN_2 - maxset.f_max).abs();
        out["ising_max_f"] = json!(maxset.f_max);
        out["ising_gap"] = json!(gap);
    }
    Ok(out)
}

fn cmd_pressure(spec: &ModelSpec) -> Result<()> {
    print_json(&pressure_json(spec)?)
}

fn point_json(p: &StationaryPoint) -> Value {
    json!({
        "x": vec_json(&p.x),
        "f": p.f_value,
        "grad_norm": p.grad_norm,
        "kind": p.kind.as_str(),
        "min_hessian_eigenvalue": p.hess_eigs[0],
        "max_hessian_eigenvalue": p.hess_eigs[p.hess_eigs.len() - 1],
        "basin_seed_count": p.basin_seed_count,
    })
}

fn landscape_json(spec: &ModelSpec) -> Result<Value> {
    let (_, points) = landscape_of(spec, CLI_GRID_DENSITY);
    let maxset = global_maximizers(&points, TIE_TOL)?;
    Ok(json!({
        "points": points.iter().map(point_json).collect::<Vec<_>>(),
        "global_maximizers": maxset.points.len(),
        "degenerate": maxset.degenerate,
        "f_max": maxset.f_max,
    }))
}

fn cmd_landscape(spec: &ModelSpec, format: Format) -> Result<()> {
    match format {
        Format::Json => print_json(&landscape_json(spec)?),
        Format::Csv => {
            let (_, points) = landscape_of(spec, CLI_GRID_DENSITY);
            let k = spec.k();
            let mut header: Vec<String> = (1..=k).map(|l| format!("x_{l}")).collect();
            header.extend(
                ["f", "grad_norm", "kind", "min_eig", "max_eig", "seeds"]
                    .iter()
                    .map(|s| s.to_string()),
            );
            println!("{}", header.join(","));
            for p in &points {
                let mut row: Vec<String> = p.x.iter().map(|&v| fmt_f(v)).collect();
                row.push(fmt_f(p.f_value));
                row.push(fmt_f(p.grad_norm));
                row.push(p.kind.as_str().to_string());
                row.push(fmt_f(p.hess_eigs[0]));
                row.push(fmt_f(p.hess_eigs[p.hess_eigs.len() - 1]));
                row.push(p.basin_seed_count.to_string());
                println!("{}", row.join(","));
            }
            Ok(())
        }
    }
}

fn clt_json(params: &CltParams) -> Value {
    let mut out = json!({
        "mu": vec_json(&params.mu),
        "nu": vec_json(&params.nu),
        "sigma": mat_json(&params.sigma),
        "theta": params.theta,
    });
    if let Some(boxes) = &params.conditioned_box {
        out["conditioned_box"] =
            Value::from(boxes.iter().map(|b| format!("{b}")).collect::<Vec<_>>());
    }
    out
}

fn cmd_clt(spec: &ModelSpec, box_spec: Option<&str>) -> Result<()> {
    let boxes = parse_box_arg(box_spec, spec.k())?;
    let params = predicted_params(spec, boxes.as_deref())?;
    print_json(&clt_json(&params))
}

fn law_csv(law: &SectorLaw) -> String {
    let k = law.k();
    let mut out = String::new();
    let header: Vec<String> = (1..=k).map(|l| format!("x_{l}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",probability\n");
    let cells = law.grid().cell_count() as usize;
    for flat in 0..cells {
        let idx = law.grid().decode(flat);
        let x = law.grid().point(&idx);
        let p = law.probability(flat);
        if p == 0.0 {
            // Conditioned-away cells carry no mass; keep the CSV to the law's
            // actual support.
            continue;
        }
        let mut row: Vec<String> = x.iter().map(|&v| fmt_f(v)).collect();
        row.push(fmt_f(p));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn exact_json(spec: &ModelSpec, n: usize, t: &DVector<f64>, law: &SectorLaw) -> Value {
    let nf = n as f64;
    let moments = law.moments();
    let mut out = json!({
        "n": n,
        "tilt": vec_json(t),
        "log_z": law.log_z(),
        "pressure_counting": law.log_z() / nf,
        "pressure_prior": law.log_z() / nf - std::f64::consts::LN_2,
        "mean": vec_json(&moments.mean),
        "cov": mat_json(&moments.cov),
    });
    match laplace_log_z(spec, n, t) {
        Ok(est) => {
            out["laplace_log_z"] = json!(est.log_z_estimate);
            out["laplace_abs_err"] = json!((est.log_z_estimate - law.log_z()).abs());
            out["laplace_note"] = json!(est.error_order_note);
        }
        Err(e) => {
            out["laplace_error"] = json!(e.to_string());
        }
    }
    out
}

fn cmd_exact(
    spec: &ModelSpec,
    n: usize,
    tilt: Option<&str>,
    box_spec: Option<&str>,
    emit: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let k = spec.k();
    let t = match tilt {
        Some(s) => parse_f64_list(s, k, "--tilt")?,
        None => DVector::zeros(k),
    };
    let mut law = sector_law(spec, n, &t)?;
    if let Some(boxes) = parse_box_arg(box_spec, k)? {
        law = law.conditional(&boxes)?;
    }
    let mut out = exact_json(spec, n, &t, &law);
    if let Some(rel) = emit {
        let path = write_out_file(out_dir, rel, &law_csv(&law))?;
        out["law_csv"] = json!(path.display().to_string());
    }
    print_json(&out)
}

struct SampleArgs<'a> {
    n: usize,
    chains: usize,
    sweeps: usize,
    burn: usize,
    thin: usize,
    seed: u64,
    init: &'a str,
    box_spec: Option<&'a str>,
    emit: Option<&'a Path>,
}

fn parse_init(s: &str, k: usize) -> Result<ChainInit> {
    match s {
        "up" => Ok(ChainInit::AllUp),
        "down" => Ok(ChainInit::AllDown),
        "random" => Ok(ChainInit::Random),
        other => Ok(ChainInit::AtPoint(parse_f64_list(other, k, "--init")?)),
    }
}

fn cmd_sample(spec: &ModelSpec, args: SampleArgs<'_>, out_dir: &Path) -> Result<()> {
    let k = spec.k();
    let boxes = parse_box_arg(args.box_spec, k)?;
    let cfg = ChainConfig {
        n: args.n,
        seed: args.seed,
        burn_in_sweeps: args.burn,
        sample_sweeps: args.sweeps,
        thinning: args.thin,
        init: parse_init(args.init, k)?,
    };
    let MultiChainResult { pooled, rhats } =
        multichain(spec, &cfg, args.chains, boxes.as_deref())?;
    let mut out = json!({
        "n": args.n,
        "chains": args.chains,
        "retained": pooled.len(),
        "mean": vec_json(&pooled.mean()),
        "cov": mat_json(&pooled.cov()),
        "seed": args.seed,
    });
    out["rhats"] = match rhats {
        Some(rs) => Value::from(rs),
        None => Value::Null,
    };
    if let Some(rel) = args.emit {
        let mut csv = String::new();
        let header: Vec<String> = (1..=k).map(|l| format!("m_{l}")).collect();
        csv.push_str(&header.join(","));
        csv.push('\n');
        for row in pooled.rows() {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f(v)).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        let path = write_out_file(out_dir, rel, &csv)?;
        out["samples_csv"] = json!(path.display().to_string());
    }
    print_json(&out)
}

fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| McwError::Validation(format!("size {:?} is not an integer", p.trim())))
        })
        .collect()
}

fn verify_csv(report: &CltReport, k: usize) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = vec!["N".into()];
    header.extend((1..=k).map(|l| format!("mean_err_{l}")));
    header.push("cov_rel_err".into());
    header.push("mgf_err".into());
    header.push("pass".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &report.rows {
        let mut cells: Vec<String> = vec![row.n.to_string()];
        cells.extend(row.mean_err.iter().map(|&e| fmt_f(e)));
        cells.push(fmt_f(row.cov_rel_err));
        cells.push(fmt_f(row.mgf_err));
        cells.push(if row.pass { "PASS".into() } else { "FAIL".into() });
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn cmd_verify(
    spec: &ModelSpec,
    n_list: &str,
    source: SourceArg,
    box_spec: Option<&str>,
    emit: Option<&Path>,
    shift: bool,
    out_dir: &Path,
) -> Result<()> {
    let sizes = parse_n_list(n_list)?;
    let boxes = parse_box_arg(box_spec, spec.k())?;
    let src = match source {
        SourceArg::Exact => VerifySource::Exact,
        SourceArg::Sampler => VerifySource::Sampler {
            chains: 4,
            seed: 1,
            burn_in_sweeps: 200,
            sample_sweeps: 2000,
            thinning: 1,
        },
    };
    let report = verify_clt(spec, &sizes, &src, boxes.as_deref(), &VerifyTols::default())?;
    let csv = verify_csv(&report, spec.k());
    print!("{csv}");
    if let Some(rel) = emit {
        write_out_file(out_dir, rel, &csv)?;
    }
    if shift {
        let shift_report = mu_shift_check(spec, &sizes)?;
        eprintln!(
            "shift: predicted {:?}, errors {:?}, residual slope {:?}",
            shift_report.predicted.as_slice(),
            shift_report.rows.iter().map(|r| r.err).collect::<Vec<_>>(),
            shift_report.slope
        );
    }
    Ok(())
}

fn prior_name(prior: &PriorSpec) -> &'static str {
    match prior {
        PriorSpec::Ising => "ising",
        PriorSpec::Atoms { .. } => "atoms",
        PriorSpec::Quadrature { .. } => "quadrature",
    }
}

fn cmd_report(spec: &ModelSpec, out_dir: &Path) -> Result<()> {
    if !spec.prior().is_ising() {
        return Err(McwError::Validation(
            "the report pipeline needs the two-valued prior (exact and verify stages)".into(),
        ));
    }
    let pressure = pressure_json(spec)?;
    let landscape = landscape_json(spec)?;
    let params = predicted_params(spec, None)?;
    let t0 = DVector::zeros(spec.k());
    let law = sector_law(spec, REPORT_EXACT_N, &t0)?;
    let exact = exact_json(spec, REPORT_EXACT_N, &t0, &law);
    let verify = verify_clt(
        spec,
        &REPORT_VERIFY_NS,
        &VerifySource::Exact,
        None,
        &VerifyTols::default(),
    )?;
    let report = json!({
        "model": {
            "k": spec.k(),
            "prior": prior_name(spec.prior()),
            "theta": spec.theta(),
            "perturbed": spec.beta().iter().any(|&b| b != 0.0),
        },
        "pressure": pressure,
        "landscape": landscape,
        "clt": clt_json(&params),
        "exact": exact,
        "verify": {
            "rows": verify.rows.iter().map(|r| json!({
                "n": r.n,
                "mean_err": r.mean_err.clone(),
                "cov_rel_err": r.cov_rel_err,
                "mgf_err": r.mgf_err,
                "pass": r.pass,
            })).collect::<Vec<_>>(),
            "trend_ok": verify.trend_ok,
        },
    });
    let schema: Value = serde_json::from_str(REPORT_SCHEMA)?;
    validate_schema(&report, &schema, "report")
        .map_err(|msg| McwError::Numerical(format!("report failed schema validation: {msg}")))?;
    let path = write_out_file(
        out_dir,
        Path::new("report.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    let mut with_path = report;
    with_path["report_path"] = json!(path.display().to_string());
    print_json(&with_path)
}

// ---------------------------------------------------------------------------
// Minimal JSON-schema validation (the subset the report schema uses)
// ---------------------------------------------------------------------------

/// Validates `value` against the subset of JSON Schema the report schema
/// uses: `type`, `required`, `properties`, `items`, `enum`.
fn validate_schema(value: &Value, schema: &Value, path: &str) -> std::result::Result<(), String> {
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "number" => value.is_number(),
            "integer" => value.is_i64() || value.is_u64(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            other => return Err(format!("{path}: unsupported schema type {other:?}")),
        };
        if !ok {
            return Err(format!("{path}: expected {ty}"));
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{path}: {value} not in {allowed:?}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required.iter().filter_map(Value::as_str) {
            if value.get(key).is_none() {
                return Err(format!("{path}: missing required key {key:?}"));
            }
        }
    }
    if let (Some(props), Some(obj)) =
        (schema.get("properties").and_then(Value::as_object), value.as_object())
    {
        for (key, sub) in props {
            if let Some(v) = obj.get(key) {
                validate_schema(v, sub, &format!("{path}.{key}"))?;
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate_schema(v, items, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}
