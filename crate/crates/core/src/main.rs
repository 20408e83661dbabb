use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ncgeom::report::{Format, Report};
use ncgeom::runner::{self, CHECKS};
use ncgeom::scenario::{builtin_names, Scenario, JET_ORDER_ENV};
use ncgeom::Error;

#[derive(Parser)]
#[command(name = "ncgeom", version, about = "Exact noncommutative Riemannian geometry runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Md,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Md => Format::Markdown,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a built-in scenario given as `builtin:NAME`.
    Run {
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "md")]
        format: OutFormat,
    },
    /// Check the sixteen trigonometric product identities.
    VerifyAppendix {
        #[arg(long, default_value_t = 8)]
        order: usize,
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "md")]
        format: OutFormat,
    },
    /// Run one of the two worked examples.
    Example {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        id: u8,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "md")]
        format: OutFormat,
    },
    /// List check identifiers and built-in scenarios.
    ListChecks,
}

fn emit(report: &Report, out: Option<PathBuf>, format: OutFormat) -> Result<ExitCode, Error> {
    let format = Format::from(format);
    match out {
        Some(path) => report.write(&path, format)?,
        None => println!("{}", report.render(format)),
    }
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { scenario, out, format } => {
            let s = Scenario::load(&scenario)?;
            emit(&runner::run(&s)?, out, format)
        }
        Command::VerifyAppendix { order, points, seed, out, format } => {
            emit(&runner::appendix_report(order, points, seed)?, out, format)
        }
        Command::Example { id, out, format } => {
            let s = Scenario::builtin(&format!("example-{id}"))?;
            emit(&runner::run(&s)?, out, format)
        }
        Command::ListChecks => {
            for (id, about) in CHECKS {
                println!("{id:<24}{about}");
            }
            println!("\nbuilt-in scenarios (run builtin:NAME):");
            for name in builtin_names() {
                println!("  {name}");
            }
            println!("\n{JET_ORDER_ENV} overrides the default jet order (truncation + 5).");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
