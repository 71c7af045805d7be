//! `branchop`: run scenario files through the branched oper pipeline.
//!
//! Exit codes: 0 every check passes, 1 a mathematical verdict is negative,
//! 2 the input is malformed, 3 the precision window ran out.

mod commands;
mod demo;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Cmd, Options, Outcome, MALFORMED};
use demo::Demo;

#[derive(Parser)]
#[command(name = "branchop", version, about = "Exact checks for branched opers and logarithmic connections at a point")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Print the machine-readable report.
    #[arg(long, global = true)]
    json: bool,

    /// Series precision N; coefficients of z^k are kept for k < N. Overrides
    /// the scenario and the default of 24.
    #[arg(long, global = true)]
    precision: Option<i64>,

    /// Require the determinant condition on logarithmic candidates.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    strict_det: Option<bool>,
}

#[derive(Args)]
struct Inputs {
    /// Scenario file; repeat to process several concurrently.
    #[arg(long, short, required = true)]
    input: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the branched oper conditions.
    VerifyOper(Inputs),
    /// Gauge oper data to its logarithmic connection.
    #[command(name = "oper2log")]
    Oper2Log(Inputs),
    /// Compute the obstruction scalars M_2, ..., M_r.
    Obstructions(Inputs),
    /// Run the Hecke modification chain.
    HeckeChain(Inputs),
    /// Recover oper data from a logarithmic candidate.
    #[command(name = "log2oper")]
    Log2Oper(Inputs),
    /// Send oper data to the logarithmic side and back.
    Roundtrip(Inputs),
    /// Compute flat sections and decide whether local monodromy is trivial.
    Monodromy(Inputs),
    /// Compute the jet map and its degeneracy.
    Phi(Inputs),
    /// Run a built-in worked example.
    Demo {
        #[arg(value_enum)]
        name: Demo,
        /// Print the scenario files instead of running them.
        #[arg(long)]
        print_scenario: bool,
    },
}

fn emit(out: &Outcome, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(&out.report).expect("serializable"));
    } else {
        print!("{}", report::human(&out.report));
    }
    if let Some(d) = &out.diagnostic {
        eprintln!("{d}");
    }
}

fn run_files(cmd: Cmd, inputs: &[PathBuf], opts: Options) -> Vec<Outcome> {
    std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|path| {
                s.spawn(move || {
                    let label = path.display().to_string();
                    match std::fs::read_to_string(path) {
                        Ok(src) => commands::run(cmd, &label, &src, opts),
                        Err(e) => commands::unreadable(cmd, &label, &e.to_string()),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options { precision: cli.precision, strict_det: cli.strict_det };
    let (cmd, inputs) = match cli.command {
        Command::Demo { name, print_scenario } => {
            if print_scenario {
                for src in name.sources() {
                    print!("{src}");
                }
                return ExitCode::SUCCESS;
            }
            let out = demo::run(name, cli.precision);
            emit(&out, cli.json);
            return ExitCode::from(out.code);
        }
        Command::VerifyOper(i) => (Cmd::VerifyOper, i.input),
        Command::Oper2Log(i) => (Cmd::Oper2Log, i.input),
        Command::Obstructions(i) => (Cmd::Obstructions, i.input),
        Command::HeckeChain(i) => (Cmd::HeckeChain, i.input),
        Command::Log2Oper(i) => (Cmd::Log2Oper, i.input),
        Command::Roundtrip(i) => (Cmd::Roundtrip, i.input),
        Command::Monodromy(i) => (Cmd::Monodromy, i.input),
        Command::Phi(i) => (Cmd::Phi, i.input),
    };
    let outs = run_files(cmd, &inputs, opts);
    if cli.json && outs.len() > 1 {
        let all: Vec<_> = outs.iter().map(|o| o.report.clone()).collect();
        println!("{}", serde_json::to_string_pretty(&all).expect("serializable"));
        outs.iter().filter_map(|o| o.diagnostic.as_ref()).for_each(|d| eprintln!("{d}"));
    } else {
        for (k, o) in outs.iter().enumerate() {
            if k > 0 && !cli.json {
                println!();
            }
            emit(o, cli.json);
        }
    }
    // Malformed input outranks a negative verdict; otherwise the worst code.
    let code = outs.iter().map(|o| o.code).max_by_key(|&c| (c == MALFORMED, c)).unwrap_or(0);
    ExitCode::from(code)
}
