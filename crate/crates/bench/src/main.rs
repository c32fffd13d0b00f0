use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsketch::solver::LsProblem;
use lsketch_bench::verify::{perf_check, run_ensembles, VerifyOptions};
use lsketch_bench::{
    gen_problem, load_matrix_csv, run_experiment_file, run_problem, BenchError, ExperimentReport, Format, Method,
    ProblemKind, ProblemSpec, Result, RunSettings,
};

#[derive(Parser)]
#[command(name = "lsketch", version, about = "Sketch-and-solve least squares experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem with one method over a range of seeds
    Solve(SolveArgs),
    /// Run a sweep described by a JSON config file
    Bench(BenchArgs),
    /// Print pass rates of the structural property ensembles
    Verify(VerifyArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "sampling")]
    method: Method,
    /// Rows of a generated problem
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Columns of a generated problem
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long, value_enum, default_value = "gaussian-incoherent")]
    kind: ProblemKind,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Read A from a CSV file instead of generating a problem
    #[arg(long, requires = "b")]
    a: Option<PathBuf>,
    /// Read b (one value per line) from a CSV file
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
    /// Skip one header line in the --a and --b files
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    /// Use the worst-case size formulas
    #[arg(long)]
    theory: bool,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "best-of", default_value_t = 1)]
    best_of: usize,
    /// Skip the structural condition checks
    #[arg(long)]
    no_diagnostics: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Sampled rows for the end-to-end solves
    #[arg(long)]
    r: Option<usize>,
    /// Projection rows for the end-to-end solves
    #[arg(long)]
    k: Option<usize>,
    /// Also time the sampling pipeline against a QR solve at n = 2^17, d = 30
    #[arg(long)]
    perf: bool,
}

fn write_report(report: &ExperimentReport, output: &OutputArgs) -> Result<()> {
    match &output.out {
        Some(path) => report.write(path, output.format),
        None => {
            print!("{}", report.emit(output.format)?);
            Ok(())
        }
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let (problem, spec) = match (&args.a, &args.b) {
        (Some(a), Some(b)) => {
            let a = load_matrix_csv(a, args.header)?;
            let b = load_matrix_csv(b, args.header)?;
            if b.cols() != 1 {
                return Err(BenchError::InvalidSpec(format!("b must have one column, found {}", b.cols())));
            }
            (LsProblem::new(a, b.into_vec())?, None)
        }
        _ => {
            let spec = ProblemSpec {
                kind: args.kind,
                n: args.n,
                d: args.d,
                kappa_target: args.kappa,
                gamma_target: args.gamma,
                seed: args.seed,
            };
            (gen_problem(&spec)?, Some(spec))
        }
    };
    let settings = RunSettings {
        seeds: args.seeds,
        seed: args.seed,
        epsilon: args.eps,
        r: args.r,
        k: args.k,
        q: args.q,
        theory: args.theory,
        best_of: args.best_of,
        diagnostics: !args.no_diagnostics,
    };
    let rows = run_problem(&problem, spec.as_ref(), &[args.method], &settings)?;
    write_report(&ExperimentReport { rows }, &args.output)
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let mut opts = VerifyOptions::new(args.n, args.d, args.seeds, args.seed);
    opts.epsilon = args.eps;
    if let Some(r) = args.r {
        opts.r = r;
    }
    if let Some(k) = args.k {
        opts.k = k;
    }
    let mut all_ok = true;
    for e in run_ensembles(&opts)? {
        println!(
            "{:<55} {:>4}/{:<4} {:>6.1}%  floor {:>5.1}%  {}",
            e.name,
            e.passes,
            e.total,
            100.0 * e.rate(),
            100.0 * e.floor,
            if e.ok() { "ok" } else { "BELOW FLOOR" }
        );
        all_ok &= e.ok();
    }
    if args.perf {
        let p = perf_check(1 << 17, 30, 5, args.seed)?;
        println!(
            "{:<55} sketch {:.3}s  exact {:.3}s  {}",
            "median wall time, n = 2^17, d = 30",
            p.sketch.as_secs_f64(),
            p.exact.as_secs_f64(),
            if p.ok() { "ok" } else { "SLOWER" }
        );
        all_ok &= p.ok();
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => solve(args).map(|_| true),
        Command::Bench(args) => run_experiment_file(&args.config).and_then(|r| write_report(&r, &args.output)).map(|_| true),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
