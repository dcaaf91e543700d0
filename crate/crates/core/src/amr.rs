//! Dörfler marking and the solve → estimate → mark → bisect loop.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::estimators::{indicator_with, EstimatorKind, EstimatorOptions, IndicatorBreakdown};
use crate::fem::{energy_error, solve_problem, DiscreteSolution, ERROR_QUADRATURE_DEGREE};
use crate::mesh::{bisect_refine, Mesh};
use crate::problems::ManufacturedProblem;
use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

/// Smallest set of elements whose squared indicators `indicators` sum to at
/// least `theta` times the total. Elements are taken greedily by decreasing
/// indicator, ties by smaller id. All-zero input marks nothing.
pub fn doerfler_mark(indicators: &[f64], theta: f64) -> Result<BTreeSet<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("marking fraction must lie in (0, 1], got {theta}")));
    }
    if let Some((t, v)) = indicators.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidArgument(format!("indicator of element {t} is {v}")));
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    if theta == 1.0 {
        return Ok(order.into_iter().filter(|&t| indicators[t] > 0.0).collect());
    }
    let total: f64 = order.iter().map(|&t| indicators[t]).sum();
    if total == 0.0 {
        return Ok(BTreeSet::new());
    }
    let target = theta * total;
    let mut marked = BTreeSet::new();
    let mut acc = 0.0;
    for t in order {
        if acc >= target {
            break;
        }
        acc += indicators[t];
        marked.insert(t);
    }
    Ok(marked)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub kind: EstimatorKind,
    pub theta: f64,
    /// Stop once the free dof count reaches this value.
    pub max_dofs: usize,
    /// Cells per side of the initial structured mesh.
    pub initial_grid: usize,
    pub options: EstimatorOptions,
}

impl AdaptiveConfig {
    pub fn new(kind: EstimatorKind, theta: f64, max_dofs: usize) -> Self {
        Self { kind, theta, max_dofs, initial_grid: 4, options: EstimatorOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRecord {
    pub iteration: usize,
    pub elements: usize,
    pub dofs: usize,
    pub eta: f64,
    pub error: Option<f64>,
    pub marked: usize,
}

/// Everything known about one iteration, handed to the observer.
pub struct AdaptiveStep<'a> {
    pub record: &'a AdaptiveRecord,
    pub mesh: &'a Mesh,
    pub solution: &'a DiscreteSolution<'a>,
    pub indicators: &'a IndicatorBreakdown,
    pub marked: &'a BTreeSet<usize>,
}

pub fn adaptive_solve(problem: &ManufacturedProblem, config: &AdaptiveConfig) -> Result<Vec<AdaptiveRecord>> {
    adaptive_solve_with(problem, config, |_| {})
}

pub fn adaptive_solve_with(
    problem: &ManufacturedProblem,
    config: &AdaptiveConfig,
    mut observer: impl FnMut(&AdaptiveStep<'_>),
) -> Result<Vec<AdaptiveRecord>> {
    if !(config.theta > 0.0 && config.theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("marking fraction must lie in (0, 1], got {}", config.theta)));
    }
    let quad = QuadratureRule::triangle(ERROR_QUADRATURE_DEGREE)?;
    let mut mesh = problem.initial_mesh(config.initial_grid)?;
    let mut records = Vec::new();
    loop {
        let report = solve_problem(&mesh, problem)?;
        let solution = &report.solution;
        let indicators = indicator_with(solution, problem, config.kind, &config.options)?;
        let error = match &problem.exact {
            Some(exact) => Some(energy_error(solution, exact, &problem.coefficients, &quad)?),
            None => None,
        };
        let dofs = solution.dofs().num_free();
        let done = dofs >= config.max_dofs;
        let marked = if done { BTreeSet::new() } else { doerfler_mark(&indicators.totals(), config.theta)? };
        let record = AdaptiveRecord {
            iteration: records.len(),
            elements: mesh.num_triangles(),
            dofs,
            eta: indicators.global(),
            error,
            marked: marked.len(),
        };
        observer(&AdaptiveStep { record: &record, mesh: &mesh, solution, indicators: &indicators, marked: &marked });
        records.push(record);
        if done || marked.is_empty() {
            return Ok(records);
        }
        let next = bisect_refine(&mesh, &marked)?;
        mesh = next;
    }
}

/// `iter,elements,dofs,eta,error,marked`; `error` is empty when unknown.
pub fn records_to_csv(records: &[AdaptiveRecord]) -> String {
    let mut out = String::from("iter,elements,dofs,eta,error,marked\n");
    for r in records {
        let error = r.error.map(|e| format!("{e:e}")).unwrap_or_default();
        writeln!(out, "{},{},{},{:e},{},{}", r.iteration, r.elements, r.dofs, r.eta, error, r.marked).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{interface_problem, smooth_problem};

    #[test]
    fn greedy_examples() {
        assert_eq!(doerfler_mark(&[4.0, 1.0, 1.0, 1.0, 1.0], 0.5).unwrap(), BTreeSet::from([0]));
        assert_eq!(doerfler_mark(&[1.0; 8], 0.5).unwrap(), BTreeSet::from([0, 1, 2, 3]));
        assert_eq!(doerfler_mark(&[0.0, 2.0, 0.0, 1e-300], 1.0).unwrap(), BTreeSet::from([1, 3]));
        assert!(doerfler_mark(&[0.0; 5], 0.5).unwrap().is_empty());
        assert!(doerfler_mark(&[], 0.5).unwrap().is_empty());
    }

    #[test]
    fn ties_prefer_smaller_ids() {
        assert_eq!(doerfler_mark(&[1.0, 3.0, 3.0, 3.0], 0.5).unwrap(), BTreeSet::from([1, 2]));
    }

    #[test]
    fn invalid_input_rejected() {
        for theta in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(doerfler_mark(&[1.0], theta).is_err());
        }
        assert!(doerfler_mark(&[1.0, -1.0], 0.5).is_err());
        assert!(doerfler_mark(&[1.0, f64::NAN], 0.5).is_err());
    }

    #[test]
    fn stops_after_one_refinement_when_budget_is_one_above_start() {
        let p = smooth_problem(1.0, 1.0).unwrap();
        let start = p.initial_mesh(4).unwrap().num_interior_edges();
        let records = adaptive_solve(&p, &AdaptiveConfig::new(EstimatorKind::Robust, 0.5, start + 1)).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].dofs, start);
        assert!(records[0].marked > 0);
        assert_eq!(records[1].marked, 0);
        assert!(records[1].dofs > start);
    }

    #[test]
    fn records_csv_layout() {
        let p = interface_problem(10.0, 1.0, 1.0, 0.5, 4).unwrap();
        let records = adaptive_solve(&p, &AdaptiveConfig::new(EstimatorKind::Classical, 0.5, 60)).unwrap();
        let csv = records_to_csv(&records);
        assert!(csv.starts_with("iter,elements,dofs,eta,error,marked\n0,32,40,"));
        assert_eq!(csv.lines().count(), records.len() + 1);
        for w in records.windows(2) {
            assert!(w[1].elements >= w[0].elements);
        }
    }
}
