use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lcu_core::optim::OptimizerConfig;
use lcu_core::report::{emit_table, parse_methods, run_pipeline, DecompositionCache, Format, Picture, RunConfig};
use lcu_core::Error;

/// LCU 1-norms of electronic Hamiltonians read from FCIDUMP files.
#[derive(Parser, Debug)]
#[command(name = "lcu", version)]
struct Args {
    /// FCIDUMP files, one table row each.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Comma-separated: de2, pauli, oo-pauli, ac, oo-ac, df, gcsa-f, gcsa-sr, or all.
    #[arg(long, default_value = "all")]
    methods: String,
    /// Subtract the optimal s1 Ne + s2 Ne^2 before decomposing.
    #[arg(long)]
    shift: bool,
    /// `schrodinger` or `interaction`.
    #[arg(long, default_value = "schrodinger")]
    picture: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    csa_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    df_tol: f64,
    /// Coefficients at or below this are not counted as unitaries.
    #[arg(long, default_value_t = 1e-6)]
    count_cutoff: f64,
    /// Random restarts per optimization.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// `json`, `text` or `markdown`.
    #[arg(long, default_value = "text")]
    format: String,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add extra diagnostic norms to the report.
    #[arg(long)]
    diagnostics: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownMethod(_) | Error::Contract(_) => 2,
        e if e.is_numerical() => 3,
        _ => 1,
    }
}

fn run(args: Args) -> Result<(), Error> {
    let picture: Picture = args.picture.parse()?;
    let format: Format = args.format.parse()?;
    if picture == Picture::Interaction && args.shift {
        return Err(Error::Contract("--shift does not apply to the interaction picture".into()));
    }
    let cfg = RunConfig {
        methods: parse_methods(&args.methods)?,
        shift: args.shift,
        picture,
        seed: args.seed,
        csa_tol: args.csa_tol,
        df_tol: args.df_tol,
        count_cutoff: args.count_cutoff,
        optimizer: OptimizerConfig { restarts: args.restarts, seed: args.seed, ..Default::default() },
        diagnostics: args.diagnostics,
    };
    if cfg.methods.is_empty() {
        return Err(Error::Contract("no methods selected".into()));
    }
    cfg.optimizer.validate()?;
    let cache = DecompositionCache::from_env();
    let reports = args.inputs.iter().map(|p| run_pipeline(p, &cfg, &cache)).collect::<Result<Vec<_>, _>>()?;
    let table = emit_table(&reports, format)?;
    match args.out {
        Some(path) => std::fs::write(path, table)?,
        None => print!("{table}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lcu: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
