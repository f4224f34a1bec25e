//! Batch experiment runner over the subentropy library: duality batteries,
//! AEP and Stein scans, dilution demos, algebra decomposition, and axiom
//! checks. Exit codes: 0 pass, 1 check failure, 2 configuration error.

mod config;
mod tasks;

use clap::{Parser, Subcommand};
use config::Experiment;

#[derive(Parser)]
#[command(
    name = "subentropy",
    about = "Subalgebra entropies: duality batteries, AEP/Stein scans, dilution demos",
    version
)]
struct Cli {
    #[command(subcommand)]
    task: Task,
}

#[derive(clap::Args, Debug, Clone)]
struct CommonArgs {
    /// JSON config file; flags below override its fields
    #[arg(long)]
    config: Option<String>,
    /// state preset: plus | ghz | random[:SEED] | @file.json
    #[arg(long)]
    state: Option<String>,
    /// algebra preset: diagonal:D | trivial:D | factor:MxN | full:D |
    /// swap-invariant | @file.json | generators:@file.json
    #[arg(long)]
    algebra: Option<String>,
    /// smoothing parameters
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Rényi orders (numbers or "inf")
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<String>>,
    /// largest tensor power
    #[arg(long)]
    nmax: Option<usize>,
    /// number of random states per battery
    #[arg(long)]
    states: Option<usize>,
    /// solver tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// master seed recorded in the output header
    #[arg(long)]
    seed: Option<u64>,
    /// output path (stdout when omitted)
    #[arg(long)]
    out: Option<String>,
    /// json | csv
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Task {
    /// Direct-vs-dilated duality battery over random states
    Duality(CommonArgs),
    /// Finite-n AEP scan of the smoothed divergences
    Aep(CommonArgs),
    /// Finite-n hypothesis-testing (Stein) scan
    Stein(CommonArgs),
    /// One-shot dilution bracket with channel verification
    Dilution(CommonArgs),
    /// Canonical decomposition and index cross-check of an algebra
    Decompose(CommonArgs),
    /// Free-state axiom checks on tensor powers
    Axioms(CommonArgs),
    /// List the state and algebra presets
    Presets,
}

fn main() {
    let cli = Cli::parse();
    let (name, args) = match cli.task {
        Task::Presets => {
            for (name, desc) in config::preset_catalogue() {
                println!("{name:24} {desc}");
            }
            std::process::exit(0);
        }
        Task::Duality(a) => ("duality", a),
        Task::Aep(a) => ("aep", a),
        Task::Stein(a) => ("stein", a),
        Task::Dilution(a) => ("dilution", a),
        Task::Decompose(a) => ("decompose", a),
        Task::Axioms(a) => ("axioms", a),
    };
    std::process::exit(run(name, args));
}

fn run(name: &str, args: CommonArgs) -> i32 {
    let file = match config::load_file_config(args.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let exp = match Experiment::resolve(
        name.to_string(),
        file,
        args.state,
        args.algebra,
        args.eps,
        args.alpha,
        args.nmax,
        args.states,
        args.tol,
        args.seed,
        args.out,
        args.format,
    ) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let algebra = match config::resolve_algebra(&exp.algebra, exp.seed) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let result = match name {
        "duality" => tasks::run_duality(&exp, &algebra),
        "aep" => tasks::run_aep(&exp, &algebra),
        "stein" => tasks::run_stein(&exp, &algebra),
        "dilution" => tasks::run_dilution(&exp, &algebra),
        "decompose" => tasks::run_decompose(&exp, &algebra),
        "axioms" => tasks::run_axioms(&exp, &algebra),
        _ => unreachable!(),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let text = report.render(exp.format);
    match &exp.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("cannot write {path}: {e}");
                return 2;
            }
        }
        None => println!("{text}"),
    }
    for check in &report.checks {
        eprintln!(
            "check {}: {} ({})",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.detail
        );
    }
    if report.all_pass() {
        0
    } else {
        1
    }
}
