//! `scjc`: Jaynes-Cummings propagators from the command line.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 when a
//! solver did not converge. Failed rows are still written, carrying the
//! best residual reached.

mod config;
mod run;

use clap::{Args, Parser};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{Axis, ConfigError, Format, Observable, Settings, StateLabel};
use run::Command;
use scjc::model::Method;

#[derive(Parser, Debug)]
#[command(name = "scjc", version, about = "Exact and semiclassical Jaynes-Cummings propagators")]
struct Cli {
    /// exact | dopa | linearized | fluct | compare | scan
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coupling, or start:end:count for `scan`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<Axis>,
    /// Detuning, or start:end:count for `scan`.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<Axis>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Number of time points on [0, t_end].
    #[arg(long)]
    samples: Option<usize>,
    /// up-vacuum, down-vacuum or coherent:<alpha>:<theta>:<phi>.
    #[arg(long)]
    state: Option<StateLabel>,
    /// exact, dopa, linearized or fluctuation-corrected; comma-separated for `compare`.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    method: Option<Vec<Method>>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    /// Quantity reduced over the time grid by `scan`.
    #[arg(long, value_enum)]
    observable: Option<Observable>,
    /// Fock cutoff of the exact propagator (0 sizes it from the state).
    #[arg(long)]
    n_max: Option<usize>,
    /// `dopa`: write the path at t_end rather than the amplitude series.
    #[arg(long)]
    trajectory: bool,
    #[arg(long)]
    tol_ode: Option<f64>,
    #[arg(long)]
    tol_shoot: Option<f64>,
    #[arg(long)]
    tol_quad: Option<f64>,
    #[arg(long)]
    tol_agreement: Option<f64>,
    #[arg(long)]
    tol_truncation: Option<f64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "exact" => Ok(Method::Exact),
        "dopa" => Ok(Method::Dopa),
        "linearized" => Ok(Method::Linearized),
        "fluctuation-corrected" | "fluct" => Ok(Method::FluctuationCorrected),
        _ => Err(format!("unknown method {s:?}")),
    }
}

impl Flags {
    fn settings(&self) -> Result<Settings, ConfigError> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { s.$($field).+ = v; })*
            };
        }
        set!(
            lambda => lambda,
            delta => delta,
            t_end => t_end,
            samples => samples,
            state => state,
            method => method,
            format => format,
            observable => observable,
            n_max => n_max,
            tol_ode => tol.ode,
            tol_shoot => tol.shoot,
            tol_quad => tol.quad,
            tol_agreement => tol.agreement,
            tol_truncation => tol.truncation,
        );
        if let Some(out) = &self.out {
            s.out = Some(out.clone());
        }
        s.trajectory |= self.trajectory;
        Ok(s)
    }
}

fn workers() -> Result<Option<usize>, ConfigError> {
    match std::env::var("SCJC_NUM_WORKERS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError(format!("SCJC_NUM_WORKERS must be a positive integer, got {v:?}"))),
        },
    }
}

fn write_output(cmd: Command, s: &Settings, table: &scjc::export::Table) -> io::Result<()> {
    let sink: Box<dyn Write> = match &s.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match s.format {
        Format::Csv => table.write_csv(&mut w).map_err(io::Error::other)?,
        Format::Json => {
            let mut config = serde_json::to_value(s).map_err(io::Error::other)?;
            config["command"] = cmd.name().into();
            serde_json::to_writer_pretty(&mut w, &table.to_json(config)).map_err(io::Error::other)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match cli.flags.settings().and_then(|s| s.validate().map(|_| s)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.flags.dump_config {
        print!("{}", settings.to_toml());
        return ExitCode::SUCCESS;
    }
    let outcome = match workers().and_then(|w| run::run(cli.command, &settings, w)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_output(cli.command, &settings, &outcome.table) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(2);
    }
    match outcome.failure {
        Some(r) => {
            eprintln!("solver did not converge; best residual {r:e}");
            ExitCode::from(3)
        }
        None => ExitCode::SUCCESS,
    }
}
