//! `intricacy`: runs one scenario from a TOML configuration.
//!
//! Exit status is 0 on success, 1 for usage or configuration errors and 2
//! for numerical failures. Errors are reported on stderr as one JSON object.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use intricacy_core::scenario::{self, OutputFormat, ScenarioConfig, ScenarioKind, DEFAULT_OUT_DIR, OUT_DIR_ENV};
use intricacy_core::Error;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Estimate,
    Wavefront,
    Field,
    Sectors,
    Predecoherence,
    Collapse,
}

impl From<Kind> for ScenarioKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Estimate => ScenarioKind::Estimate,
            Kind::Wavefront => ScenarioKind::Wavefront,
            Kind::Field => ScenarioKind::Field,
            Kind::Sectors => ScenarioKind::Sectors,
            Kind::Predecoherence => ScenarioKind::Predecoherence,
            Kind::Collapse => ScenarioKind::Collapse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "intricacy", version, about = "Run an intricacy simulation scenario")]
struct Cli {
    /// Scenario to run; must match `kind` in the configuration when one is given.
    #[arg(value_enum)]
    kind: Kind,

    /// TOML scenario file; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory [default: config `output_dir`, then $INTRICACY_OUT_DIR, then ./intricacy-out].
    #[arg(long, short)]
    out: Option<PathBuf>,

    /// Output formats to write (comma separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

fn kind_name(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Stability { .. } => "stability",
        Error::Numerical(_) => "numerical",
        Error::Eigensolver(_) => "eigensolver",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
        Error::Context { source, .. } => kind_name(source),
    }
}

fn field_errors(e: &Error) -> Vec<serde_json::Value> {
    match e {
        Error::Config(list) => list.iter().map(|f| json!({ "path": f.path, "reason": f.reason })).collect(),
        Error::Context { source, .. } => field_errors(source),
        _ => Vec::new(),
    }
}

fn report(e: &Error) -> ExitCode {
    let code: u8 = if e.is_usage() { 1 } else { 2 };
    let body = json!({
        "error": kind_name(e),
        "message": e.to_string(),
        "fields": field_errors(e),
        "exit_code": code,
    });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let kind = ScenarioKind::from(cli.kind);
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?,
        None => format!("kind = \"{}\"\n", kind.name()),
    };
    let mut config = scenario::parse_config(&text)?;
    if config.kind != kind {
        return Err(Error::config(
            "kind",
            format!("configuration is a `{}` scenario, not `{}`", config.kind.name(), kind.name()),
        ));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if !cli.format.is_empty() {
        let mut formats: Vec<OutputFormat> = cli
            .format
            .iter()
            .map(|f| match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            })
            .collect();
        formats.dedup();
        config.formats = formats;
    }
    Ok(config)
}

fn out_dir(cli: &Cli, config: &ScenarioConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| Path::new(DEFAULT_OUT_DIR).to_path_buf())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    let dir = out_dir(&cli, &config);
    match scenario::run_scenario(&config, &dir) {
        Ok(manifest) => {
            for entry in &manifest.outputs {
                println!("{}  {}", entry.sha256, dir.join(&entry.file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
