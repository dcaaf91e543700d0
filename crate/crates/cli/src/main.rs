use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hcurl_core::amr::{adaptive_solve, records_to_csv, AdaptiveConfig};
use hcurl_core::estimators::EstimatorKind;
use hcurl_core::report::{run_robustness_sweep, run_table_with, ProblemSpec, RunConfig};

/// Edge-element solver for curl(ε curl u) + κu = f with robust and classical error estimators.
#[derive(Parser)]
#[command(name = "hcurl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::enum_variant_names)]
enum Command {
    /// Convergence table on a sequence of uniformly refined meshes.
    RunTable(TableArgs),
    /// Effectivity of both estimators over a grid of interface contrasts and κ values.
    RunSweep(SweepArgs),
    /// Adaptive refinement driven by Dörfler marking.
    RunAdaptive(AdaptiveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    /// Constant coefficients.
    Smooth,
    /// ε jumps across x₁ = 1/2.
    Interface,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Robust,
    Classical,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "smooth")]
    problem: ProblemKind,
    /// ε for the smooth problem.
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// ε left of the interface.
    #[arg(long, default_value_t = 1.0)]
    eps1: f64,
    /// ε right of the interface.
    #[arg(long, default_value_t = 1.0)]
    eps2: f64,
}

impl ProblemArgs {
    fn spec(&self) -> ProblemSpec {
        match self.problem {
            ProblemKind::Smooth => ProblemSpec::Smooth { eps: self.eps, kappa: self.kappa },
            ProblemKind::Interface => ProblemSpec::Interface { eps1: self.eps1, eps2: self.eps2, kappa: self.kappa },
        }
    }
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Number of meshes, starting from the 32-element grid.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-level indicator CSV files.
    #[arg(long)]
    dump_indicators: Option<PathBuf>,
    /// Directory for per-level meshes.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    /// Print every digit instead of three significant ones (CSV only).
    #[arg(long)]
    full_precision: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    /// Contrasts ε₁/ε₂, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    kappas: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = 1e-4)]
    eps2: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct AdaptiveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Stop once the number of unknowns reaches this value.
    #[arg(long)]
    max_dofs: usize,
    #[arg(long, value_enum, default_value = "robust")]
    kind: Kind,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_table(args: &TableArgs) -> Result<()> {
    if args.levels == 0 {
        bail!("--levels must be at least 1");
    }
    for dir in [&args.dump_indicators, &args.dump_mesh].into_iter().flatten() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut io_error = None;
    let config = RunConfig::new(args.problem.spec(), args.levels);
    let table = run_table_with(&config, |view| {
        let mut write = |dir: &Option<PathBuf>, name: String, text: String| {
            if let (Some(dir), None) = (dir, &io_error) {
                let path = dir.join(name);
                if let Err(e) = fs::write(&path, text) {
                    io_error = Some(anyhow::Error::new(e).context(format!("writing {}", path.display())));
                }
            }
        };
        let level = view.level;
        write(&args.dump_indicators, format!("level{level}_robust.csv"), view.robust.to_csv());
        write(&args.dump_indicators, format!("level{level}_classical.csv"), view.classical.to_csv());
        write(&args.dump_mesh, format!("level{level}.mesh"), view.mesh.to_text());
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let text = match args.format {
        Format::Csv => table.to_csv(args.full_precision),
        Format::Markdown => table.to_markdown(),
    };
    emit(args.out.as_deref(), &text)?;
    if let Some(failure) = &table.failure {
        bail!("run stopped early: {failure}");
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let report = run_robustness_sweep(&args.ratios, &args.kappas, args.levels, args.eps2)?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Markdown => report.to_markdown(),
    };
    emit(args.out.as_deref(), &text)?;
    if let Some(entry) = report.entries.iter().find(|e| e.table.failure.is_some()) {
        bail!(
            "ratio {} kappa {} stopped early: {}",
            entry.ratio,
            entry.kappa,
            entry.table.failure.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn run_adaptive(args: &AdaptiveArgs) -> Result<()> {
    let problem = args.problem.spec().build()?;
    let kind = match args.kind {
        Kind::Robust => EstimatorKind::Robust,
        Kind::Classical => EstimatorKind::Classical,
    };
    let records = adaptive_solve(&problem, &AdaptiveConfig::new(kind, args.theta, args.max_dofs))?;
    emit(args.out.as_deref(), &records_to_csv(&records))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunTable(args) => run_table(args),
        Command::RunSweep(args) => run_sweep(args),
        Command::RunAdaptive(args) => run_adaptive(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
