//! Uniform-refinement convergence tables, coefficient sweeps and their
//! CSV/markdown forms.

use std::fmt::Write as _;

use crate::estimators::{residual_data, EstimatorKind, EstimatorOptions, IndicatorBreakdown};
use crate::fem::{energy_error, solve_problem, DiscreteSolution, ERROR_QUADRATURE_DEGREE};
use crate::mesh::{red_refine, Mesh};
use crate::problems::{interface_problem, smooth_problem, ManufacturedProblem};
use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

/// Cells per side of the initial mesh of every table (32 triangles).
pub const INITIAL_GRID: usize = 4;
/// Interface abscissa of the two-phase problems.
pub const INTERFACE_SPLIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    Smooth { eps: f64, kappa: f64 },
    /// `eps1` left of the interface, `eps2` right of it.
    Interface { eps1: f64, eps2: f64, kappa: f64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<ManufacturedProblem> {
        match *self {
            ProblemSpec::Smooth { eps, kappa } => smooth_problem(eps, kappa),
            ProblemSpec::Interface { eps1, eps2, kappa } => {
                interface_problem(eps1, eps2, kappa, INTERFACE_SPLIT, INITIAL_GRID)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Number of meshes, the first being the initial one.
    pub levels: usize,
    pub options: EstimatorOptions,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, levels: usize) -> Self {
        Self { problem, levels, options: EstimatorOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub elements: usize,
    pub error: f64,
    pub eta: f64,
    pub eta_tilde: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<TableRow>,
    /// Set when a level failed; `rows` then holds the completed levels.
    pub failure: Option<String>,
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = values.len();
    (n > 0).then(|| values.sum::<f64>() / n as f64)
}

impl ConvergenceTable {
    /// Arithmetic mean of `e/η` over the rows.
    pub fn eff_eta(&self) -> Option<f64> {
        mean(self.rows.iter().map(|r| r.error / r.eta))
    }

    /// Arithmetic mean of `e/η̃` over the rows.
    pub fn eff_eta_tilde(&self) -> Option<f64> {
        mean(self.rows.iter().map(|r| r.error / r.eta_tilde))
    }

    /// `elements,e,eta,eta_tilde` with three significant digits, or the
    /// shortest round-trip representation when `full_precision` is set, and
    /// an `eff` footer. A failed run ends with a `# failed:` comment.
    pub fn to_csv(&self, full_precision: bool) -> String {
        let fmt = |v: f64| if full_precision { format!("{v:e}") } else { format!("{v:.2e}") };
        let mut out = String::from("elements,e,eta,eta_tilde\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.elements, fmt(r.error), fmt(r.eta), fmt(r.eta_tilde)).unwrap();
        }
        if let (Some(a), Some(b)) = (self.eff_eta(), self.eff_eta_tilde()) {
            writeln!(out, "eff,,{},{}", fmt(a), fmt(b)).unwrap();
        }
        if let Some(f) = &self.failure {
            writeln!(out, "# failed: {}", f.replace('\n', " ")).unwrap();
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| elements | e | η | η̃ |\n|---:|---:|---:|---:|\n");
        for r in &self.rows {
            writeln!(out, "| {} | {:.2e} | {:.2e} | {:.2e} |", r.elements, r.error, r.eta, r.eta_tilde).unwrap();
        }
        if let (Some(a), Some(b)) = (self.eff_eta(), self.eff_eta_tilde()) {
            writeln!(out, "| eff | | {a:.2e} | {b:.2e} |").unwrap();
        }
        if let Some(f) = &self.failure {
            writeln!(out, "\nRun failed: {f}").unwrap();
        }
        out
    }

    /// Reads the data rows of [`ConvergenceTable::to_csv`] back. The footer is
    /// recomputed rather than read.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("elements,e,eta,eta_tilde") => {}
            other => return Err(Error::TableParse(format!("unexpected header {other:?}"))),
        }
        let mut table = ConvergenceTable::default();
        for line in lines {
            if let Some(msg) = line.strip_prefix("# failed: ") {
                table.failure = Some(msg.to_string());
                continue;
            }
            if line.is_empty() || line.starts_with("eff,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [n, e, eta, eta_tilde] = fields[..] else {
                return Err(Error::TableParse(format!("expected four fields in `{line}`")));
            };
            let num = |s: &str| s.parse::<f64>().map_err(|err| Error::TableParse(format!("`{s}`: {err}")));
            table.rows.push(TableRow {
                elements: n.parse().map_err(|err| Error::TableParse(format!("`{n}`: {err}")))?,
                error: num(e)?,
                eta: num(eta)?,
                eta_tilde: num(eta_tilde)?,
            });
        }
        Ok(table)
    }
}

/// One uniform level, handed to the observer of [`run_table_with`].
pub struct LevelView<'a> {
    pub level: usize,
    pub mesh: &'a Mesh,
    pub solution: &'a DiscreteSolution<'a>,
    pub robust: &'a IndicatorBreakdown,
    pub classical: &'a IndicatorBreakdown,
    pub row: &'a TableRow,
}

fn validate(config: &RunConfig) -> Result<ManufacturedProblem> {
    if config.levels == 0 {
        return Err(Error::InvalidArgument("at least one level is required".into()));
    }
    let problem = config.problem.build()?;
    problem.exact()?;
    Ok(problem)
}

pub fn run_table(config: &RunConfig) -> Result<ConvergenceTable> {
    run_table_with(config, |_| {})
}

/// Solves on `levels` red-refined meshes starting from the `4 × 4` grid.
/// Configuration errors are returned; failures during a level end the table
/// early with [`ConvergenceTable::failure`] set.
pub fn run_table_with(config: &RunConfig, mut observer: impl FnMut(&LevelView<'_>)) -> Result<ConvergenceTable> {
    let problem = validate(config)?;
    let mut table = ConvergenceTable::default();
    let mut mesh = problem.initial_mesh(INITIAL_GRID)?;
    for level in 0..config.levels {
        if level > 0 {
            mesh = match red_refine(&mesh) {
                Ok(m) => m,
                Err(e) => {
                    table.failure = Some(format!("level {level}: {e}"));
                    return Ok(table);
                }
            };
        }
        if let Err(e) = run_level(&problem, config, level, &mesh, &mut table, &mut observer) {
            table.failure = Some(format!("level {level}: {e}"));
            return Ok(table);
        }
    }
    Ok(table)
}

fn run_level(
    problem: &ManufacturedProblem,
    config: &RunConfig,
    level: usize,
    mesh: &Mesh,
    table: &mut ConvergenceTable,
    observer: &mut impl FnMut(&LevelView<'_>),
) -> Result<()> {
    let report = solve_problem(mesh, problem)?;
    let solution = &report.solution;
    let quad = QuadratureRule::triangle(ERROR_QUADRATURE_DEGREE)?;
    let error = energy_error(solution, problem.exact()?, &problem.coefficients, &quad)?;
    let data = residual_data(solution, problem, &config.options)?;
    let robust = data.breakdown(mesh, EstimatorKind::Robust);
    let classical = data.breakdown(mesh, EstimatorKind::Classical);
    let row = TableRow { elements: mesh.num_triangles(), error, eta: robust.global(), eta_tilde: classical.global() };
    observer(&LevelView { level, mesh, solution, robust: &robust, classical: &classical, row: &row });
    table.rows.push(row);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    /// `eps1 / eps2`.
    pub ratio: f64,
    pub kappa: f64,
    pub table: ConvergenceTable,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

fn spread(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for v in values {
        let v = v?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo.is_finite() && lo > 0.0).then(|| hi / lo)
}

impl SweepReport {
    /// `max / min` of `eff(η)` across the entries.
    pub fn eff_eta_spread(&self) -> Option<f64> {
        spread(self.entries.iter().map(|e| e.table.eff_eta()))
    }

    pub fn eff_eta_tilde_spread(&self) -> Option<f64> {
        spread(self.entries.iter().map(|e| e.table.eff_eta_tilde()))
    }

    /// `ratio,kappa,levels,eff_eta,eff_eta_tilde`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ratio,kappa,levels,eff_eta,eff_eta_tilde\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "NaN".into());
        for e in &self.entries {
            writeln!(
                out,
                "{:e},{:e},{},{},{}",
                e.ratio,
                e.kappa,
                e.table.rows.len(),
                opt(e.table.eff_eta()),
                opt(e.table.eff_eta_tilde())
            )
            .unwrap();
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| ε₁/ε₂ | κ | eff(η) | eff(η̃) |\n|---:|---:|---:|---:|\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "n/a".into());
        for e in &self.entries {
            writeln!(out, "| {:e} | {:e} | {} | {} |", e.ratio, e.kappa, opt(e.table.eff_eta()), opt(e.table.eff_eta_tilde()))
                .unwrap();
        }
        let spread = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into());
        writeln!(out, "\nmax/min eff(η) = {}, max/min eff(η̃) = {}", spread(self.eff_eta_spread()), spread(self.eff_eta_tilde_spread()))
            .unwrap();
        out
    }
}

/// Two-phase tables with `eps1 = ratio · eps2` for every `(ratio, kappa)`.
pub fn run_robustness_sweep(ratios: &[f64], kappas: &[f64], levels: usize, eps2: f64) -> Result<SweepReport> {
    let mut report = SweepReport::default();
    for &kappa in kappas {
        for &ratio in ratios {
            let spec = ProblemSpec::Interface { eps1: ratio * eps2, eps2, kappa };
            let table = run_table(&RunConfig::new(spec, levels))?;
            report.entries.push(SweepEntry { ratio, kappa, table });
        }
    }
    Ok(report)
}
