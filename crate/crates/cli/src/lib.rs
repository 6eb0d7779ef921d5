//! Scenario runner for the `infogap` library.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or I/O
//! error, 3 numerical convergence failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod config;
pub mod runner;
pub mod table;
pub mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{parse_config, ConfigError, Output, ScenarioConfig};
use crate::runner::{run_scenario, RunError};
use crate::table::{PlotSpec, ResultTable, TableError};

#[derive(Debug, Parser)]
#[command(
    name = "infogap",
    version,
    about = "Decoherence and environmental distinguishability scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Use hbar = k_B = 1 regardless of the config's `units`.
    #[arg(long, global = true)]
    pub natural_units: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Noise, dissipation and QFI kernels on a lag grid.
    Kernels,
    /// Environment-state overlap along the time grid.
    Overlap,
    /// Influence-functional exponents along the time grid.
    Influence,
    /// Decoherence and distinguishability scales.
    Scales,
    /// Fock-space oracle and cross-method checks.
    Verify,
    /// Every output listed in the config, over its sweep axis.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use infogap::Error as E;
        match self {
            CliError::VerificationFailed => 1,
            CliError::Run(r) => match r.domain_error() {
                Some(
                    E::QuadratureNoConvergence { .. }
                    | E::SeriesNoConvergence { .. }
                    | E::TruncationTooSmall { .. },
                ) => 3,
                _ => 2,
            },
            CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. } | CliError::Table(_) => {
                2
            }
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_config(cli: &Cli) -> Result<Option<ScenarioConfig>, CliError> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let cfg = parse_config(&text)?;
    Ok(Some(if cli.natural_units {
        cfg.with_natural_units()
    } else {
        cfg
    }))
}

fn plot_for(table: &ResultTable, sweep_axis: Option<&str>) -> PlotSpec {
    let has = |c: &str| table.columns().iter().any(|x| x == c);
    let pick = |names: &[&str]| {
        names
            .iter()
            .filter(|n| has(n))
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
    };
    let mut plot = PlotSpec::default_for(table);
    match table.name.as_str() {
        "kernels" => {
            plot.x = "Lambda_tau".into();
            plot.y = pick(&["nu", "eta", "phi_quadrature"]);
            plot.log_x = true;
        }
        "overlap" => {
            plot.x = "t".into();
            plot.y = pick(&["B_exact", "B_cl", "B_modes"]);
        }
        "influence" => {
            plot.x = "t".into();
            plot.y = pick(&["re_exponent", "re_exponent_cl"]);
        }
        "scales" => {
            plot.x = sweep_axis.unwrap_or("separation_d").into();
            plot.y = pick(&["length_ratio", "time_ratio"]);
        }
        "verify" => {
            plot.x = "check".into();
            plot.y = vec!["error".into(), "tolerance".into()];
            plot.log_y = true;
        }
        _ => {}
    }
    // one curve per sweep value where each value owns several rows
    if let Some(axis) = sweep_axis {
        if plot.x != axis {
            plot.group_by = Some(axis.to_string());
        }
    }
    plot
}

fn emit(
    tables: &[ResultTable],
    cli: &Cli,
    sweep_axis: Option<&str>,
    stdout: &mut impl Write,
) -> Result<(), CliError> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            for t in tables {
                if cli.format.csv() {
                    let path = dir.join(format!("{}.csv", t.name));
                    fs::write(&path, t.to_csv()?).map_err(io_err(&path))?;
                }
                if cli.format.svg() {
                    let path = dir.join(format!("{}.svg", t.name));
                    fs::write(&path, t.to_svg(&plot_for(t, sweep_axis))?).map_err(io_err(&path))?;
                }
            }
        }
        None => {
            if cli.format.svg() {
                return Err(CliError::Usage("--format svg|both needs --out".into()));
            }
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout).map_err(io_err(Path::new("<stdout>")))?;
                }
                stdout
                    .write_all(t.to_csv()?.as_bytes())
                    .map_err(io_err(Path::new("<stdout>")))?;
            }
        }
    }
    Ok(())
}

fn verification_passed(tables: &[ResultTable]) -> bool {
    tables.iter().filter(|t| t.name == "verify").all(|t| {
        t.metadata_value("error").is_none()
            && t.column("passed")
                .is_ok_and(|p| p.iter().all(|v| *v == 1.0))
    })
}

/// Runs one invocation. Human-readable progress goes to `stderr`.
pub fn execute(
    cli: &Cli,
    stdout: &mut impl Write,
    stderr: &mut impl Write,
) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if cli.command == Command::Verify {
        let seed = cfg.as_ref().map_or(0, |c| c.seed);
        let report = verify::run_checks(seed);
        let _ = writeln!(stderr, "{}", report.summary());
        let passed = report.all_passed();
        if cli.out.is_some() {
            let cfg_hash = cfg
                .as_ref()
                .map_or_else(|| "none".to_string(), |c| c.config_hash.clone());
            let table = report.into_table(
                ResultTable::new(
                    "verify",
                    verify::COLUMNS.iter().map(|s| s.to_string()).collect(),
                )
                .with_metadata("version", table::TOOL_VERSION)
                .with_metadata("config_sha256", cfg_hash)
                .with_metadata("table", "verify"),
            )?;
            emit(&[table], cli, None, stdout)?;
        }
        return if passed {
            Ok(())
        } else {
            Err(CliError::VerificationFailed)
        };
    }

    let cfg = cfg.ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let cfg = match cli.command {
        Command::Kernels => cfg.with_outputs(vec![Output::Kernels]),
        Command::Overlap => cfg.with_outputs(vec![Output::Overlap]),
        Command::Influence => cfg.with_outputs(vec![Output::Influence]),
        Command::Scales => cfg.with_outputs(vec![Output::Scales]),
        Command::Sweep if cfg.sweep.is_none() => {
            return Err(ConfigError::Validation {
                key: "sweep".into(),
                reason: "required".into(),
            }
            .into())
        }
        Command::Sweep | Command::Verify => cfg,
    };
    let tables = run_scenario(&cfg)?;
    let axis = cfg.sweep.as_ref().map(|s| s.axis.name());
    emit(&tables, cli, axis, stdout)?;
    for t in &tables {
        let _ = writeln!(stderr, "{}: {} rows", t.name, t.rows().len());
    }
    if verification_passed(&tables) {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    match execute(&cli, &mut out, &mut err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
