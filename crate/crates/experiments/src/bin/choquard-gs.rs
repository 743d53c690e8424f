use std::path::PathBuf;
use std::process::ExitCode;

use choquard_gs::{run, ExperimentConfig, Kind};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Solve,
    Verify,
    GammaSweep,
    VlSign,
    BoxSweep,
    FiberScan,
}

impl From<Command> for Kind {
    fn from(c: Command) -> Self {
        match c {
            Command::Solve => Kind::Solve,
            Command::Verify => Kind::Verify,
            Command::GammaSweep => Kind::GammaSweep,
            Command::VlSign => Kind::VlSign,
            Command::BoxSweep => Kind::BoxSweep,
            Command::FiberScan => Kind::FiberScan,
        }
    }
}

/// Ground states of the semirelativistic Choquard equation on a periodic box.
#[derive(Debug, Parser)]
#[command(name = "choquard-gs", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `out/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; CHOQUARD_GS_THREADS takes precedence.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let kind: Kind = cli.command.into();
    let cfg = match ExperimentConfig::load(&cli.config, Some(kind)).and_then(|c| c.with_overrides(cli.seed, cli.workers)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("choquard-gs: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out = cli.out.unwrap_or_else(|| PathBuf::from("out").join(kind.as_str()));
    match run(&cfg, Some(&out)) {
        Ok(report) => {
            for c in &report.checks {
                println!("{}", c.line());
            }
            println!(
                "{} {} in {:.2} s; report in {}",
                if report.all_passed() { "PASS" } else { "FAIL" },
                kind.as_str(),
                report.elapsed_secs,
                out.display()
            );
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("choquard-gs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
