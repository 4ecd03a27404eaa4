pub mod bench;
pub mod generate;
pub mod solve;
pub mod verify;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "minmax",
    about = "Benchmark harness for nonconvex-concave min-max solvers",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a benchmark instance file (plus a plain-text manifest).
    Generate(generate::GenerateArgs),
    /// Solve an instance and emit a CSV row and a certificate.
    Solve(solve::SolveArgs),
    /// Re-verify a certificate against its instance.
    Verify(verify::VerifyArgs),
    /// Run a benchmark table from a TOML config.
    Bench(bench::BenchArgs),
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Solve(args) => solve::run(args),
        Command::Verify(args) => verify::run(args),
        Command::Bench(args) => bench::run(args),
    }
}
