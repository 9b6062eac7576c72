//! Command-line surface and subcommand dispatch.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cmt_core::Energy;

use crate::config::{ExperimentConfig, Quantity};
use crate::error::CliError;
use crate::experiment::Model;
use crate::run::{
    compute_resonances, compute_spectrum, nudge_off_thresholds, write_field_csv,
    write_resonances_csv,
};
use crate::selfcheck::{run_selfcheck, Fault};

#[derive(Debug, Parser)]
#[command(
    name = "cmt-scatter",
    version,
    about = "Scattering through open resonators via an effective non-Hermitian Hamiltonian"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep frequency or energy and write transmission/reflection per channel.
    Spectrum {
        #[command(flatten)]
        io: ConfigIo,
        /// Worker threads for the sweep.
        #[arg(long, env = "CMT_THREADS")]
        threads: Option<usize>,
    },
    /// Complex pressure map at one working point.
    Field {
        #[command(flatten)]
        io: ConfigIo,
        #[arg(long, conflicts_with = "energy", allow_negative_numbers = true)]
        omega: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<String>,
    },
    /// Complex eigenvalues of the effective Hamiltonian at the probe energies.
    Resonances {
        #[command(flatten)]
        io: ConfigIo,
    },
    /// Run the built-in invariant suite.
    Selfcheck {
        #[arg(long, hide = true)]
        inject: Option<Fault>,
    },
}

#[derive(Debug, Args)]
pub struct ConfigIo {
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV; defaults to the path in the config, then standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<(ExperimentConfig, Model), CliError> {
    let config = ExperimentConfig::from_path(path).map_err(|errors| CliError::Config {
        path: path.to_path_buf(),
        errors,
    })?;
    let model = Model::build(&config.model).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        errors: crate::config::ConfigErrors(vec![crate::config::ConfigError {
            line: None,
            message: e.to_string(),
        }]),
    })?;
    if let Some(&bad) = config
        .incoming
        .iter()
        .find(|&&c| c >= model.channel_count())
    {
        return Err(CliError::Usage(format!(
            "{}: incoming channel {bad} exceeds the {} channel(s) kept per lead",
            path.display(),
            model.channel_count()
        )));
    }
    Ok((config, model))
}

fn emit(
    target: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            }
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            write(&mut w)
                .and_then(|_| w.flush())
                .map_err(io_err(path))?;
            log::info!("wrote {}", path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)
                .and_then(|_| w.flush())
                .map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(())
}

fn parse_value(flag: &str, text: &str) -> Result<f64, CliError> {
    crate::config::parse_real(text)
        .ok_or_else(|| CliError::Usage(format!("--{flag}: cannot parse `{text}` as a number")))
}

/// Worker count when neither the flag nor the environment gives one.
fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum { io, threads } => {
            let (config, model) = load(&io.config)?;
            let sweep = config.sweep.ok_or_else(|| {
                CliError::Usage(format!("{}: no [sweep] section", io.config.display()))
            })?;
            let threads = match threads {
                Some(0) => return Err(CliError::Usage("thread count must be at least 1".into())),
                Some(n) => n,
                None => default_threads(),
            };
            let spectrum =
                compute_spectrum(&model, &sweep, &config.incoming, threads).map_err(|source| {
                    CliError::Io {
                        path: PathBuf::from("<thread pool>"),
                        source,
                    }
                })?;
            let failed = spectrum
                .points
                .iter()
                .filter(|p| p.outcome.is_err())
                .count();
            if failed > 0 {
                log::warn!(
                    "{failed} of {} sweep points failed; see the error column",
                    spectrum.points.len()
                );
            }
            let target = io.out.or(config.outputs.spectrum);
            emit(target.as_deref(), |w| spectrum.write_csv(w))
        }
        Command::Field { io, omega, energy } => {
            let (config, model) = load(&io.config)?;
            let at = match (omega, energy) {
                (Some(o), _) => (Quantity::Omega, parse_value("omega", &o)?),
                (None, Some(e)) => (Quantity::Energy, parse_value("energy", &e)?),
                (None, None) => config.field.at.ok_or_else(|| {
                    CliError::Usage(format!(
                        "{}: give --omega or set omega/E in [field]",
                        io.config.display()
                    ))
                })?,
            };
            let (e, nudged) = nudge_off_thresholds(at.0.to_energy(at.1), &model.thresholds());
            if nudged {
                log::info!("working point sits on a threshold; E moved to {e}");
            }
            let grid = model.field(
                Energy::new(e)?,
                config.incoming[0],
                config.amplitude,
                config.field.grid,
            )?;
            let target = io.out.or(config.outputs.field);
            emit(target.as_deref(), |w| write_field_csv(&grid, w))
        }
        Command::Resonances { io } => {
            let (config, model) = load(&io.config)?;
            if config.probes.is_empty() {
                return Err(CliError::Usage(format!(
                    "{}: no probe energies; add energies or omegas to [resonances]",
                    io.config.display()
                )));
            }
            let snapshots = compute_resonances(&model, &config.probes);
            if let Some((e, Err(msg))) = snapshots.iter().find(|(_, r)| r.is_err()) {
                log::warn!("resonances at E = {e} failed: {msg}");
            }
            let target = io.out.or(config.outputs.resonances);
            emit(target.as_deref(), |w| write_resonances_csv(&snapshots, w))
        }
        Command::Selfcheck { inject } => {
            let report = run_selfcheck(inject);
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Selfcheck(report.failures()))
            }
        }
    }
}
