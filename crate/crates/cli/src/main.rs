use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gpr_varimax::harness::{self, StudyConfig};
use gpr_varimax::io::{read_loadings_file, write_loadings_file};
use gpr_varimax::rng::{derive_seed, stream, tag};
use gpr_varimax::{
    kaiser_denormalize, kaiser_normalize, multi_start_rotate, pairwise_varimax, varimax_criterion, Error,
    GprParams, LoadingMatrix, PairwiseParams, RotationSolution, StartSpec,
};

#[derive(Parser)]
#[command(name = "gprv", version, about = "Varimax rotation and random-start simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rotate a loading matrix read from CSV.
    Rotate(RotateArgs),
    /// Run the simulation grid and write all reports.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        /// 1,000 replications and populations of 1,000·n cases.
        #[arg(long)]
        full_scale: bool,
    },
    /// Rebuild tables and figure data from a stored cell table.
    Report {
        #[arg(long)]
        input_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RotMethod {
    Gpr,
    Pairwise,
}

#[derive(Clone, Copy, ValueEnum)]
enum Starts {
    Identity,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(clap::Args)]
struct RotateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "gpr")]
    method: RotMethod,
    #[arg(long, value_enum, default_value = "identity")]
    starts: Starts,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, value_enum, default_value = "off")]
    kaiser: Switch,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

fn rotate(args: &RotateArgs) -> gpr_varimax::Result<String> {
    let a = read_loadings_file(&args.input)?;
    let (input, scales) = match args.kaiser {
        Switch::On => {
            let (an, h) = kaiser_normalize(&a)?;
            (an, Some(h))
        }
        Switch::Off => (a, None),
    };
    let sol: RotationSolution = match args.method {
        RotMethod::Pairwise => pairwise_varimax(&input, &PairwiseParams::default())?,
        RotMethod::Gpr => {
            let spec = match args.starts {
                Starts::Identity => StartSpec::identity(),
                Starts::Random => StartSpec::random(args.q),
            };
            let mut rng = stream(derive_seed(args.seed, &[tag("rotate")]));
            multi_start_rotate(&input, spec, &GprParams::default(), &mut rng)?.best
        }
    };
    let lambda: LoadingMatrix = match &scales {
        Some(h) => kaiser_denormalize(&sol.lambda, h)?,
        None => sol.lambda.clone(),
    };
    write_loadings_file(&lambda, &args.output)?;
    Ok(format!(
        "criterion={:.10} iterations={} converged={}",
        varimax_criterion(&lambda),
        sol.iterations,
        sol.converged
    ))
}

fn simulate(config: &Path, output_dir: &Path, full_scale: bool) -> gpr_varimax::Result<()> {
    let mut cfg = StudyConfig::from_file(config)?;
    if full_scale {
        cfg = cfg.with_full_scale();
    }
    std::fs::create_dir_all(output_dir)?;
    let cells = harness::run_study_with(&cfg, |key, block| {
        eprintln!("k={} n={} kaiser={}: {} cells", key.k, key.n, key.kaiser, block.len());
    })?;
    let (report, _) = harness::emit_reports(&cells, output_dir, true)?;
    print_tables(&report);
    Ok(())
}

fn report(input_dir: &Path) -> gpr_varimax::Result<()> {
    let cells = harness::read_cells(&input_dir.join(harness::CELLS_FILE))?;
    let (report, _) = harness::emit_reports(&cells, input_dir, false)?;
    print_tables(&report);
    Ok(())
}

fn print_tables(report: &harness::StationarityReport) {
    print!("{}", harness::report::class_text(report, "Stationarity", |r| Some(r.stationary)));
    print!("{}", harness::report::class_text(report, "Pairwise benchmark", |r| r.benchmark));
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.class().exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Rotate(args) => rotate(args).map(|line| println!("{line}")),
        Command::Simulate { config, output_dir, full_scale } => simulate(config, output_dir, *full_scale),
        Command::Report { input_dir } => report(input_dir),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
