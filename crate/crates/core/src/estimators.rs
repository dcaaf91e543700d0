//! Residual-type a posteriori error estimators.
//!
//! For the lowest-order space `div u_h = 0` and `curl*(ε curl u_h) = 0` on
//! every element, so the element residuals reduce to
//!
//! ```text
//! R1 = −div f,        R2 = f − κ u_h
//! ```
//!
//! and across an interior edge `S` with normal `n` pointing from `T⁺` to `T⁻`
//!
//! ```text
//! J1 = ((f − κ u_h)|T⁺ − (f − κ u_h)|T⁻) · n,   ‖J2‖² = (ε⁺ c⁺ − ε⁻ c⁻)² |S|
//! ```
//!
//! with `c± = curl u_h` on `T±`. Boundary edges carry no jump terms.
//!
//! Per element, with `h̄ = min(h/√ε, 1/√κ)`:
//!
//! | part | robust                    | classical        |
//! |------|---------------------------|------------------|
//! | r1   | `κ⁻¹ h_T² ‖R1‖²`          | same             |
//! | r2   | `h̄_T² ‖R2‖²`              | `ε_T⁻¹ h_T² ‖R2‖²` |
//! | j1   | `κ⁻¹ h_S ‖J1‖²`           | same             |
//! | j2   | `h̄_S ε_S^{-1/2} ‖J2‖²`    | `ε_S⁻¹ h_S ‖J2‖²` |
//!
//! where `ε_S` is the larger ε of the two neighbours of `S`.

use std::fmt::Write as _;

use crate::fem::{element_geometry, DiscreteSolution};
use crate::mesh::Mesh;
use crate::problems::{CoefficientField, ManufacturedProblem};
use crate::quadrature::{EdgeQuadrature, QuadratureRule};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Weights built on `min(h/√ε, 1/√κ)`.
    Robust,
    /// `ε⁻¹h²` and `ε⁻¹h` weights.
    Classical,
}

/// Element size `h_T` used in the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeshSizeRule {
    /// `|T|^{1/2}`.
    #[default]
    SqrtArea,
    /// Longest edge.
    Diameter,
}

/// How an interior edge term is attributed to its two neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeShare {
    /// Half to each, so the global sum counts every edge once.
    #[default]
    Split,
    /// The full term to each, so the global sum counts every edge twice.
    Full,
}

impl EdgeShare {
    fn factor(self) -> f64 {
        match self {
            EdgeShare::Split => 0.5,
            EdgeShare::Full => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub size_rule: MeshSizeRule,
    pub edge_share: EdgeShare,
    pub element_degree: usize,
    pub edge_points: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { size_rule: MeshSizeRule::SqrtArea, edge_share: EdgeShare::Split, element_degree: 6, edge_points: 4 }
    }
}

/// `min(h/√ε, 1/√κ)`.
pub fn weighted_size(h: f64, eps: f64, kappa: f64) -> f64 {
    (h / eps.sqrt()).min(1.0 / kappa.sqrt())
}

/// `‖J2‖²_S` for constant ε and curl on both sides: `(ε⁺c⁺ − ε⁻c⁻)² h_S`.
pub fn curl_jump_norm_sq(eps_plus: f64, curl_plus: f64, eps_minus: f64, curl_minus: f64, length: f64) -> f64 {
    let jump = eps_plus * curl_plus - eps_minus * curl_minus;
    jump * jump * length
}

/// Element and edge sizes with their coefficient weights. Boundary edges get
/// the ε of their single neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSizes {
    pub kappa: f64,
    pub element_h: Vec<f64>,
    pub element_eps: Vec<f64>,
    pub element_weighted: Vec<f64>,
    pub edge_h: Vec<f64>,
    pub edge_eps: Vec<f64>,
    pub edge_weighted: Vec<f64>,
}

pub fn weighted_sizes(mesh: &Mesh, coefficients: &CoefficientField, rule: MeshSizeRule) -> Result<WeightedSizes> {
    let kappa = coefficients.kappa();
    let element_eps =
        mesh.triangles().iter().map(|t| coefficients.eps(t.region)).collect::<Result<Vec<_>>>()?;
    let element_h: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| match rule {
            MeshSizeRule::SqrtArea => mesh.area(t).sqrt(),
            MeshSizeRule::Diameter => mesh.diameter(t),
        })
        .collect();
    let element_weighted = element_h.iter().zip(&element_eps).map(|(&h, &e)| weighted_size(h, e, kappa)).collect();
    let mut edge_h = Vec::with_capacity(mesh.num_edges());
    let mut edge_eps = Vec::with_capacity(mesh.num_edges());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [p, q] = mesh.edge_points(e);
        edge_h.push((q - p).norm());
        let minus = edge.minus.map_or(0.0, |m| element_eps[m]);
        edge_eps.push(element_eps[edge.plus].max(minus));
    }
    let edge_weighted = edge_h.iter().zip(&edge_eps).map(|(&h, &e)| weighted_size(h, e, kappa)).collect();
    Ok(WeightedSizes { kappa, element_h, element_eps, element_weighted, edge_h, edge_eps, edge_weighted })
}

/// `(‖R1‖_T, ‖R2‖_T)`.
pub fn element_residuals(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    t: usize,
    quad: &QuadratureRule,
) -> Result<(f64, f64)> {
    let mesh = solution.mesh();
    if t >= mesh.num_triangles() {
        return Err(Error::NoSuchTriangle(t));
    }
    let div_f = problem.div_source.as_ref().ok_or_else(|| Error::MissingDivergence(problem.name.clone()))?;
    let kappa = problem.coefficients.kappa();
    let geom = element_geometry(mesh, t)?;
    let (mut r1, mut r2) = (0.0, 0.0);
    for (bary, w) in quad.iter() {
        let x = geom.point(bary);
        let d = div_f(x);
        r1 += w * d * d;
        r2 += w * ((problem.source)(x) - solution.eval_bary(t, &geom, bary) * kappa).norm_squared();
    }
    Ok(((r1 * geom.area).sqrt(), (r2 * geom.area).sqrt()))
}

/// Barycentric coordinates on triangle `t` of the point at parameter `s`
/// along `edge` (from its low to its high vertex).
fn edge_bary(mesh: &Mesh, t: usize, edge: usize, s: f64) -> [f64; 3] {
    let [lo, hi] = mesh.edges()[edge].vertices;
    let verts = mesh.triangles()[t].vertices;
    let mut bary = [0.0; 3];
    for (k, &v) in verts.iter().enumerate() {
        if v == lo {
            bary[k] = 1.0 - s;
        } else if v == hi {
            bary[k] = s;
        }
    }
    bary
}

/// `(f − κ u_h)` traced from triangle `t` onto `edge` at the rule's points.
fn edge_trace(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    t: usize,
    edge: usize,
    rule: &EdgeQuadrature,
) -> Result<Vec<Vector>> {
    let mesh = solution.mesh();
    let geom = element_geometry(mesh, t)?;
    let kappa = problem.coefficients.kappa();
    Ok(rule
        .iter()
        .map(|(s, _)| {
            let bary = edge_bary(mesh, t, edge, s);
            (problem.source)(geom.point(&bary)) - solution.eval_bary(t, &geom, &bary) * kappa
        })
        .collect())
}

/// Pointwise `J1` at the rule's points of an interior edge.
fn normal_jump(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    edge: usize,
    rule: &EdgeQuadrature,
) -> Result<Vec<f64>> {
    let mesh = solution.mesh();
    let e = mesh.edges().get(edge).ok_or(Error::NoSuchEdge(edge))?;
    let minus = e.minus.ok_or(Error::BoundaryEdge(edge))?;
    let plus = edge_trace(solution, problem, e.plus, edge, rule)?;
    let minus = edge_trace(solution, problem, minus, edge, rule)?;
    Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m).dot(&e.normal)).collect())
}

/// `(‖J1‖_S, ‖J2‖_S)` on an interior edge.
pub fn edge_jumps(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    edge: usize,
    rule: &EdgeQuadrature,
) -> Result<(f64, f64)> {
    let mesh = solution.mesh();
    let j1 = normal_jump(solution, problem, edge, rule)?;
    let e = &mesh.edges()[edge];
    let minus = e.minus.ok_or(Error::BoundaryEdge(edge))?;
    let length = mesh.edge_geometry(edge)?.length;
    let j1_sq: f64 = rule.iter().zip(&j1).map(|((_, w), j)| w * j * j).sum::<f64>() * length;
    let eps = |t: usize| problem.coefficients.eps(mesh.triangles()[t].region);
    let j2_sq = curl_jump_norm_sq(eps(e.plus)?, solution.curl(e.plus)?, eps(minus)?, solution.curl(minus)?, length);
    Ok((j1_sq.sqrt(), j2_sq.sqrt()))
}

/// Squared residual norms of one discrete solution, shared by both estimator kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualData {
    pub sizes: WeightedSizes,
    pub edge_share: EdgeShare,
    /// Per element `‖R1‖²_T`.
    pub r1_sq: Vec<f64>,
    /// Per element `‖R2‖²_T`.
    pub r2_sq: Vec<f64>,
    /// Per edge `‖J1‖²_S`, zero on the boundary.
    pub j1_sq: Vec<f64>,
    /// Per edge `‖J2‖²_S`, zero on the boundary.
    pub j2_sq: Vec<f64>,
}

pub fn residual_data(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    options: &EstimatorOptions,
) -> Result<ResidualData> {
    let mesh = solution.mesh();
    let sizes = weighted_sizes(mesh, &problem.coefficients, options.size_rule)?;
    let quad = QuadratureRule::triangle(options.element_degree)?;
    let rule = EdgeQuadrature::gauss_legendre(options.edge_points)?;
    let mut r1_sq = Vec::with_capacity(mesh.num_triangles());
    let mut r2_sq = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let (r1, r2) = element_residuals(solution, problem, t, &quad)?;
        r1_sq.push(r1 * r1);
        r2_sq.push(r2 * r2);
    }
    let mut j1_sq = vec![0.0; mesh.num_edges()];
    let mut j2_sq = vec![0.0; mesh.num_edges()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.is_boundary() {
            continue;
        }
        let (j1, j2) = edge_jumps(solution, problem, e, &rule)?;
        j1_sq[e] = j1 * j1;
        j2_sq[e] = j2 * j2;
    }
    Ok(ResidualData { sizes, edge_share: options.edge_share, r1_sq, r2_sq, j1_sq, j2_sq })
}

/// Per-element squared indicator contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorBreakdown {
    pub kind: EstimatorKind,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
}

impl IndicatorBreakdown {
    pub fn len(&self) -> usize {
        self.r1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r1.is_empty()
    }

    /// Squared indicator of element `t`.
    pub fn total(&self, t: usize) -> f64 {
        self.r1[t] + self.r2[t] + self.j1[t] + self.j2[t]
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.len()).map(|t| self.total(t)).collect()
    }

    /// `(Σ_T η(T)²)^{1/2}`, summed in element order.
    pub fn global(&self) -> f64 {
        (0..self.len()).map(|t| self.total(t)).sum::<f64>().sqrt()
    }

    /// `element_id,r1,r2,j1,j2,total` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element_id,r1,r2,j1,j2,total\n");
        for t in 0..self.len() {
            writeln!(out, "{t},{:e},{:e},{:e},{:e},{:e}", self.r1[t], self.r2[t], self.j1[t], self.j2[t], self.total(t))
                .unwrap();
        }
        out
    }
}

impl ResidualData {
    pub fn breakdown(&self, mesh: &Mesh, kind: EstimatorKind) -> IndicatorBreakdown {
        let s = &self.sizes;
        let kappa = s.kappa;
        let n = self.r1_sq.len();
        let r1 = (0..n).map(|t| s.element_h[t] * s.element_h[t] / kappa * self.r1_sq[t]).collect();
        let r2 = (0..n)
            .map(|t| {
                let w = match kind {
                    EstimatorKind::Robust => s.element_weighted[t] * s.element_weighted[t],
                    EstimatorKind::Classical => s.element_h[t] * s.element_h[t] / s.element_eps[t],
                };
                w * self.r2_sq[t]
            })
            .collect();
        let mut j1 = vec![0.0; n];
        let mut j2 = vec![0.0; n];
        let share = self.edge_share.factor();
        for (e, edge) in mesh.edges().iter().enumerate() {
            let Some(minus) = edge.minus else { continue };
            let a = share * s.edge_h[e] / kappa * self.j1_sq[e];
            let w2 = match kind {
                EstimatorKind::Robust => s.edge_weighted[e] / s.edge_eps[e].sqrt(),
                EstimatorKind::Classical => s.edge_h[e] / s.edge_eps[e],
            };
            let b = share * w2 * self.j2_sq[e];
            for t in [edge.plus, minus] {
                j1[t] += a;
                j2[t] += b;
            }
        }
        IndicatorBreakdown { kind, r1, r2, j1, j2 }
    }
}

/// Indicator of `kind` with the default options.
pub fn indicator(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    kind: EstimatorKind,
) -> Result<IndicatorBreakdown> {
    indicator_with(solution, problem, kind, &EstimatorOptions::default())
}

pub fn indicator_with(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    kind: EstimatorKind,
    options: &EstimatorOptions,
) -> Result<IndicatorBreakdown> {
    Ok(residual_data(solution, problem, options)?.breakdown(solution.mesh(), kind))
}

/// Data oscillation against piecewise-constant projections.
///
/// `osc1 = ‖h (R1 − Q R1)‖ + ‖h_S^{1/2} (J1 − Q J1)‖` and
/// `osc2 = ‖h̄ (R2 − Q R2)‖ + ‖h̄_S^{1/2} (J2 − Q J2)‖`. The per-element and
/// per-edge vectors hold the squared contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillations {
    pub osc1: f64,
    pub osc2: f64,
    pub element_osc1: Vec<f64>,
    pub element_osc2: Vec<f64>,
    pub edge_osc1: Vec<f64>,
    pub edge_osc2: Vec<f64>,
}

pub fn oscillations(
    solution: &DiscreteSolution<'_>,
    problem: &ManufacturedProblem,
    options: &EstimatorOptions,
) -> Result<Oscillations> {
    let mesh = solution.mesh();
    let div_f = problem.div_source.as_ref().ok_or_else(|| Error::MissingDivergence(problem.name.clone()))?;
    let sizes = weighted_sizes(mesh, &problem.coefficients, options.size_rule)?;
    let quad = QuadratureRule::triangle(options.element_degree)?;
    let rule = EdgeQuadrature::gauss_legendre(options.edge_points)?;
    let kappa = problem.coefficients.kappa();

    let mut element_osc1 = Vec::with_capacity(mesh.num_triangles());
    let mut element_osc2 = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let geom = element_geometry(mesh, t)?;
        let mut r1 = Vec::with_capacity(quad.len());
        let mut r2 = Vec::with_capacity(quad.len());
        for (bary, _) in quad.iter() {
            let x = geom.point(bary);
            r1.push(-div_f(x));
            r2.push((problem.source)(x) - solution.eval_bary(t, &geom, bary) * kappa);
        }
        // Weights sum to one, so the weighted mean is the L² projection.
        let mean1: f64 = quad.iter().zip(&r1).map(|((_, w), v)| w * v).sum();
        let mean2: Vector = quad.iter().zip(&r2).map(|((_, w), v)| v * w).sum();
        let dev1: f64 = quad.iter().zip(&r1).map(|((_, w), v)| w * (v - mean1).powi(2)).sum::<f64>() * geom.area;
        let dev2: f64 =
            quad.iter().zip(&r2).map(|((_, w), v)| w * (v - mean2).norm_squared()).sum::<f64>() * geom.area;
        element_osc1.push(sizes.element_h[t].powi(2) * dev1);
        element_osc2.push(sizes.element_weighted[t].powi(2) * dev2);
    }

    let mut edge_osc1 = vec![0.0; mesh.num_edges()];
    // J2 is constant on every edge, so its projection error vanishes.
    let edge_osc2 = vec![0.0; mesh.num_edges()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.is_boundary() {
            continue;
        }
        let j1 = normal_jump(solution, problem, e, &rule)?;
        let mean: f64 = rule.iter().zip(&j1).map(|((_, w), j)| w * j).sum();
        let dev: f64 = rule.iter().zip(&j1).map(|((_, w), j)| w * (j - mean).powi(2)).sum::<f64>() * sizes.edge_h[e];
        edge_osc1[e] = sizes.edge_h[e] * dev;
    }

    let norm = |v: &[f64]| v.iter().sum::<f64>().sqrt();
    Ok(Oscillations {
        osc1: norm(&element_osc1) + norm(&edge_osc1),
        osc2: norm(&element_osc2) + norm(&edge_osc2),
        element_osc1,
        element_osc2,
        edge_osc1,
        edge_osc2,
    })
}
