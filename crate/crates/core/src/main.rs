use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coded_caching::field::FieldMode;
use coded_caching::runner::{
    cmd_bounds, cmd_sweep, cmd_table, cmd_verify, write_reports, write_sweep, DemandSpec,
    OutputFormat, RunConfig, SweepRange,
};

#[derive(Parser)]
#[command(
    name = "coded-caching",
    version,
    about = "Multi-server coded caching simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate seeded trials and check decoding and delivery-time optimality.
    Verify(Common),
    /// Tabulate achieved, converse and uncoded delivery times over (N, L).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N-min", default_value_t = 2)]
        n_min: usize,
        #[arg(long = "N-max", default_value_t = 9)]
        n_max: usize,
    },
    /// Print the delivery table of one instance.
    Table(Common),
    /// Print the delivery-time formulas without simulating.
    Bounds(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Gf,
    Complex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Args)]
struct Common {
    /// Number of files.
    #[arg(long = "N", default_value_t = 4)]
    n: usize,
    /// Number of users; must equal N.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Number of servers (antennas); defaults to N-1. Sweeps use all L when omitted.
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long, env = "CODED_CACHING_PRIME", default_value_t = 65_537)]
    prime: u64,
    #[arg(long, value_enum, default_value_t = Mode::Gf)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// "random" or a 1-based comma-separated permutation, e.g. 2,1,4,3.
    #[arg(long, default_value = "random")]
    demand: String,
    /// Symbols per minifile.
    #[arg(long, default_value_t = 1)]
    scale: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn run_config(&self, default_format: OutputFormat) -> coded_caching::Result<RunConfig> {
        Ok(RunConfig {
            files: self.n,
            users: self.k,
            servers: self.l,
            mode: match self.mode {
                Mode::Gf => FieldMode::Gf,
                Mode::Complex => FieldMode::Complex,
            },
            prime: self.prime,
            scale: self.scale,
            seed: self.seed,
            trials: self.trials,
            demand: self.demand.parse::<DemandSpec>()?,
            format: match self.format {
                None => default_format,
                Some(Format::Csv) => OutputFormat::Csv,
                Some(Format::Json) => OutputFormat::Json,
                Some(Format::Table) => OutputFormat::Table,
            },
        })
    }

    fn output(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn run(cli: Cli) -> coded_caching::Result<bool> {
    match cli.command {
        Command::Verify(common) => {
            let run = common.run_config(OutputFormat::Csv)?;
            let outcome = cmd_verify(&run)?;
            let mut out = common.output()?;
            write_reports(&mut out, &outcome.reports, run.format)?;
            out.flush()?;
            if let Some(failure) = &outcome.failure {
                eprintln!("verification failed: {failure}");
            }
            Ok(outcome.passed())
        }
        Command::Sweep {
            common,
            n_min,
            n_max,
        } => {
            let run = common.run_config(OutputFormat::Csv)?;
            let rows = cmd_sweep(
                &RunConfig {
                    trials: if common.trials == 10 {
                        1
                    } else {
                        common.trials
                    },
                    ..run.clone()
                },
                &SweepRange {
                    min_files: n_min,
                    max_files: n_max,
                    servers: common.l,
                },
            )?;
            let mut out = common.output()?;
            write_sweep(&mut out, &rows, run.format)?;
            out.flush()?;
            Ok(rows.iter().all(|r| r.decode_ok != Some(false)))
        }
        Command::Table(common) => {
            let run = common.run_config(OutputFormat::Table)?;
            let text = cmd_table(&run)?;
            let mut out = common.output()?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(true)
        }
        Command::Bounds(common) => {
            let run = common.run_config(OutputFormat::Table)?;
            let text = cmd_bounds(&run)?;
            let mut out = common.output()?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
