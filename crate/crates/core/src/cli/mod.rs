//! Command-line front end: `reconstruct`, `coherence`, `monitor`, `validate`.

pub mod config;
pub mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::checks::{validation_suite, CheckResult};
use crate::error::Error;
use crate::protocol::{CoherenceEstimate, Protocol, ProtocolSettings, U00Variant};
use crate::tomography::{decoherence_monitor, reconstruct, MonitorPoint, ReconstructOptions, ReconstructionReport};
use config::{OutputFormat, RunConfig};
use render::{complex, complex_matrix, format_float, real_matrix, to_canonical_json};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::ConfigParse { .. } => "config-parse",
            CliError::ConfigInvalid { .. } => "config-invalid",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.kind(),
            CliError::ChecksFailed { .. } => "checks-failed",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::ConfigParse { .. } | CliError::ConfigInvalid { .. } => 2,
            _ => 1,
        }
    }

    /// `{"error": {"kind", "message", ...}}`
    pub fn to_record(&self) -> Value {
        let mut body = serde_json::Map::new();
        body.insert("kind".into(), json!(self.kind()));
        body.insert("message".into(), json!(self.to_string()));
        match self {
            CliError::Io { path, .. } => {
                body.insert("path".into(), json!(path.display().to_string()));
            }
            CliError::ConfigParse { line, column, .. } => {
                body.insert("line".into(), json!(line));
                body.insert("column".into(), json!(column));
            }
            CliError::ConfigInvalid { field, .. } => {
                body.insert("field".into(), json!(field));
            }
            CliError::ChecksFailed { failed, total } => {
                body.insert("failed".into(), json!(failed));
                body.insert("total".into(), json!(total));
            }
            CliError::Core(Error::TruncationLeakage { tail_mass, tail_tol, required_dim }) => {
                body.insert("tail_mass".into(), json!(tail_mass));
                body.insert("tail_tol".into(), json!(tail_tol));
                body.insert("required_dim".into(), json!(required_dim));
            }
            _ => {}
        }
        json!({ "error": Value::Object(body) })
    }
}

#[derive(Debug, Parser)]
#[command(name = "iontomo", version, about = "Motional-state tomography of a trapped ion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; overrides the config. Standard output when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Close U00 with the printed R-(pi/4) pulse instead of R+(-pi/4).
    #[arg(long)]
    pub compat_printed_eq6: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure every element of the leading (nmax+1)x(nmax+1) block.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Measure only m <= n and fill the rest by conjugation.
        #[arg(long)]
        use_hermitian_symmetry: bool,
    },
    /// Measure one density-matrix element.
    Coherence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Track |rho_20| against sqrt(rho_00 rho_22) under dephasing.
    Monitor {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, sorted, nonnegative dephasing strengths.
        #[arg(long, allow_hyphen_values = true)]
        lambdas: String,
    },
    /// Run the invariant suite and print a pass/fail table.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            RunConfig::parse(&text)
        }
    }
}

fn variant(common: &Common) -> U00Variant {
    if common.compat_printed_eq6 {
        U00Variant::PrintedLeftmost
    } else {
        U00Variant::Restoring
    }
}

struct Sink {
    path: Option<PathBuf>,
    format: OutputFormat,
}

impl Sink {
    fn new(common: &Common, cfg: &RunConfig) -> Self {
        Self {
            path: common.out.clone().or_else(|| cfg.output.path.clone()),
            format: common.format.unwrap_or(cfg.output.format),
        }
    }

    fn write(&self, text: &str) -> Result<(), CliError> {
        match &self.path {
            Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            }),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })
            }
        }
    }
}

fn settings_record(s: &ProtocolSettings) -> Value {
    json!({
        "dx": s.dims.dx(),
        "dz": s.dims.dz(),
        "v_mode": s.v_mode,
        "shots": s.shots,
        "seed": s.seed,
        "u00_variant": s.u00_variant,
    })
}

pub fn report_json(r: &ReconstructionReport) -> Value {
    json!({
        "nmax": r.nmax,
        "estimates": complex_matrix(&r.estimates),
        "stderr": real_matrix(&r.stderr),
        "shots_per_cell": r.shots_per_cell,
        "projected": r.projected.as_ref().map(|p| complex_matrix(p.matrix())),
        "metrics": r.metrics.map(|m| json!({
            "max_abs_error": m.max_abs_error,
            "trace_distance": m.trace_distance,
            "hs_distance": m.hs_distance,
        })),
        "use_hermitian_symmetry": r.options.use_hermitian_symmetry,
        "settings": settings_record(&r.settings),
    })
}

pub fn report_csv(r: &ReconstructionReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = vec![["m", "n", "re", "im", "stderr"].map(String::from)];
    for m in 0..=r.nmax {
        for n in 0..=r.nmax {
            let z = r.estimates[(m, n)];
            rows.push([
                m.to_string(),
                n.to_string(),
                format_float(z.re),
                format_float(z.im),
                format_float(r.stderr[(m, n)]),
            ]);
        }
    }
    for row in rows {
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn coherence_json(e: &CoherenceEstimate) -> Value {
    json!({
        "m": e.m,
        "n": e.n,
        "value": complex(e.value),
        "stderr": e.stderr,
        "shots": e.shots_used,
    })
}

fn coherence_csv(e: &CoherenceEstimate) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["m", "n", "re", "im", "stderr", "shots"]).expect("in-memory csv write");
    w.write_record([
        e.m.to_string(),
        e.n.to_string(),
        format_float(e.value.re),
        format_float(e.value.im),
        format_float(e.stderr),
        e.shots_used.to_string(),
    ])
    .expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn monitor_json(points: &[MonitorPoint]) -> Value {
    json!({
        "series": points
            .iter()
            .map(|p| json!({"lambda": p.lambda, "rho20_abs": p.rho20_abs, "bound": p.bound}))
            .collect::<Vec<_>>(),
    })
}

pub fn monitor_csv(points: &[MonitorPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "rho20_abs", "bound"]).expect("in-memory csv write");
    for p in points {
        w.write_record([format_float(p.lambda), format_float(p.rho20_abs), format_float(p.bound)])
            .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

fn parse_lambdas(text: &str) -> Result<Vec<f64>, CliError> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage("--lambdas needs at least one value".into()));
    }
    items
        .into_iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--lambdas: `{s}` is not a number")))
        })
        .collect()
}

pub fn cmd_reconstruct(common: &Common, use_hermitian_symmetry: bool) -> Result<(), CliError> {
    let cfg = load_config(common.config.as_deref())?;
    let settings = cfg.settings(variant(common))?;
    let phi = cfg.build_state()?;
    let report = reconstruct(&phi, cfg.nmax, &settings, ReconstructOptions { use_hermitian_symmetry })?;
    let sink = Sink::new(common, &cfg);
    sink.write(&match sink.format {
        OutputFormat::Json => to_canonical_json(&report_json(&report)),
        OutputFormat::Csv => report_csv(&report),
    })
}

pub fn cmd_coherence(common: &Common, m: usize, n: usize) -> Result<(), CliError> {
    let cfg = load_config(common.config.as_deref())?;
    let settings = cfg.settings(variant(common))?;
    let phi = cfg.build_state()?;
    let est = Protocol::new(settings)?.measure_element(&phi, m, n)?;
    let sink = Sink::new(common, &cfg);
    sink.write(&match sink.format {
        OutputFormat::Json => to_canonical_json(&coherence_json(&est)),
        OutputFormat::Csv => coherence_csv(&est),
    })
}

pub fn cmd_monitor(common: &Common, lambdas: &str) -> Result<(), CliError> {
    let lambdas = parse_lambdas(lambdas)?;
    let cfg = load_config(common.config.as_deref())?;
    let settings = cfg.settings(variant(common))?;
    let phi = cfg.build_state()?;
    let points = decoherence_monitor(&phi, &lambdas, &settings).map_err(|e| match e {
        Error::InvalidArguments(msg) => CliError::Usage(format!("--lambdas: {msg}")),
        other => other.into(),
    })?;
    let sink = Sink::new(common, &cfg);
    sink.write(&match sink.format {
        OutputFormat::Json => to_canonical_json(&monitor_json(&points)),
        OutputFormat::Csv => monitor_csv(&points),
    })
}

fn validation_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<6} {:<width$} {:>12} {:>12}  detail\n", "status", "check", "value", "tolerance");
    for r in results {
        out.push_str(&format!(
            "{:<6} {:<width$} {:>12.3e} {:>12.1e}  {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.tolerance,
            r.detail
        ));
    }
    out
}

fn validation_csv(results: &[CheckResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check", "passed", "value", "tolerance", "detail"]).expect("in-memory csv write");
    for r in results {
        w.write_record([
            r.name.clone(),
            r.passed.to_string(),
            format_float(r.value),
            format_float(r.tolerance),
            r.detail.clone(),
        ])
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn cmd_validate(common: &Common) -> Result<(), CliError> {
    let cfg = load_config(common.config.as_deref())?;
    let settings = cfg.settings(variant(common))?;
    let results = validation_suite(&settings)?;
    let sink = Sink::new(common, &cfg);
    // the table is the default; structured output only on request
    let text = match common.format {
        None => validation_table(&results),
        Some(OutputFormat::Json) => to_canonical_json(&json!({
            "checks": serde_json::to_value(&results).expect("check results serialize"),
            "passed": results.iter().all(|r| r.passed),
        })),
        Some(OutputFormat::Csv) => validation_csv(&results),
    };
    sink.write(&text)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total: results.len() });
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Reconstruct { common, use_hermitian_symmetry } => {
            cmd_reconstruct(common, *use_hermitian_symmetry)
        }
        Command::Coherence { common, m, n } => cmd_coherence(common, *m, *n),
        Command::Monitor { common, lambdas } => cmd_monitor(common, lambdas),
        Command::Validate { common } => cmd_validate(common),
    }
}

fn report(err: &CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&err.to_record()).expect("error record serializes"));
    ExitCode::from(err.exit_code())
}

pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report(&CliError::Usage(e.to_string().trim().to_string()));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
