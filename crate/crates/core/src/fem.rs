//! Galerkin discretization with lowest-order edge elements.
//!
//! Degrees of freedom are the tangential moments `∫_E u·t ds` with `t`
//! oriented from the lower to the higher vertex id. Boundary edges carry the
//! homogeneous condition `u ∧ n = 0` and are eliminated.

use std::fmt::Write as _;

use crate::element::{element_matrices, whitney_curls, whitney_eval, ElementGeometry};
use crate::linalg::{cg_solve, cholesky_solve, norm, CgSolution, CsrMatrix};
use crate::mesh::Mesh;
use crate::problems::{CoefficientField, ExactSolution, ManufacturedProblem};
use crate::quadrature::{EdgeQuadrature, QuadratureRule};
use crate::{Error, Point, Result, Vector};

/// Relative residual target of the linear solver.
pub const SOLVER_TOLERANCE: f64 = 1e-12;
/// Degree of the load-vector quadrature.
pub const LOAD_QUADRATURE_DEGREE: usize = 4;
/// Degree of the energy-error quadrature.
pub const ERROR_QUADRATURE_DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDof {
    /// `None` for a constrained boundary edge.
    pub dof: Option<usize>,
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    edge_dofs: Vec<Option<usize>>,
    element_dofs: Vec<[LocalDof; 3]>,
    free: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut free = 0;
        let edge_dofs = mesh
            .edges()
            .iter()
            .map(|e| {
                (!e.is_boundary()).then(|| {
                    free += 1;
                    free - 1
                })
            })
            .collect::<Vec<_>>();
        let element_dofs = (0..mesh.num_triangles())
            .map(|t| {
                let edges = mesh.triangle_edges(t);
                let signs = mesh.edge_signs(t);
                std::array::from_fn(|k| LocalDof { dof: edge_dofs[edges[k]], sign: signs[k] })
            })
            .collect();
        Self { edge_dofs, element_dofs, free }
    }

    pub fn num_free(&self) -> usize {
        self.free
    }

    pub fn edge_dof(&self, edge: usize) -> Option<usize> {
        self.edge_dofs[edge]
    }

    pub fn element_dofs(&self, t: usize) -> &[LocalDof; 3] {
        &self.element_dofs[t]
    }
}

pub fn element_geometry(mesh: &Mesh, t: usize) -> Result<ElementGeometry> {
    ElementGeometry::new(mesh.points(t))
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
}

/// Free-dof Galerkin matrix of `(ε curl ·, curl ·) + (κ ·, ·)` and load
/// vector `∫ f·φ_a` by `quad`.
pub fn assemble_system(
    mesh: &Mesh,
    coefficients: &CoefficientField,
    source: &dyn Fn(Point) -> Vector,
    quad: &QuadratureRule,
) -> Result<LinearSystem> {
    if quad.degree() < 4 {
        return Err(Error::InvalidArgument(format!("load quadrature degree {} < 4", quad.degree())));
    }
    coefficients.check_mesh(mesh)?;
    let dofs = DofMap::new(mesh);
    let n = dofs.num_free();
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    let mut rhs = vec![0.0; n];
    for t in 0..mesh.num_triangles() {
        let geom = element_geometry(mesh, t)?;
        let signs = mesh.edge_signs(t);
        let eps = coefficients.eps(mesh.triangles()[t].region)?;
        let (k, m) = element_matrices(&geom, &signs, eps, coefficients.kappa());
        let local = dofs.element_dofs(t);
        let mut load = [0.0; 3];
        for (bary, w) in quad.iter() {
            let f = source(geom.point(bary));
            let phi = whitney_eval(&geom, &signs, bary).values;
            for a in 0..3 {
                load[a] += w * geom.area * f.dot(&phi[a]);
            }
        }
        for a in 0..3 {
            let Some(ra) = local[a].dof else { continue };
            rhs[ra] += load[a];
            for b in 0..3 {
                if let Some(cb) = local[b].dof {
                    triplets.push((ra, cb, k[(a, b)] + m[(a, b)]));
                }
            }
        }
    }
    Ok(LinearSystem { matrix: CsrMatrix::from_triplets(n, n, &triplets)?, rhs, dofs })
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution<'m> {
    mesh: &'m Mesh,
    dofs: DofMap,
    coefficients: Vec<f64>,
}

impl<'m> DiscreteSolution<'m> {
    pub fn from_coefficients(mesh: &'m Mesh, coefficients: Vec<f64>) -> Result<Self> {
        let dofs = DofMap::new(mesh);
        if coefficients.len() != dofs.num_free() {
            return Err(Error::DimensionMismatch { expected: dofs.num_free(), actual: coefficients.len() });
        }
        Ok(Self { mesh, dofs, coefficients })
    }

    /// Interpolant whose free coefficients are the tangential moments of
    /// `field` (4-point Gauss per edge). Boundary moments are dropped.
    pub fn interpolate(mesh: &'m Mesh, field: &dyn Fn(Point) -> Vector) -> Result<Self> {
        let dofs = DofMap::new(mesh);
        let rule = EdgeQuadrature::gauss_legendre(4)?;
        let mut coefficients = vec![0.0; dofs.num_free()];
        for e in 0..mesh.num_edges() {
            let Some(d) = dofs.edge_dof(e) else { continue };
            let [p, q] = mesh.edge_points(e);
            coefficients[d] = rule.iter().map(|(s, w)| w * field(p + (q - p) * s).dot(&(q - p))).sum();
        }
        Ok(Self { mesh, dofs, coefficients })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Signed local coefficients of triangle `t` (zero on constrained edges).
    pub fn local_coefficients(&self, t: usize) -> [f64; 3] {
        self.dofs.element_dofs(t).map(|l| l.dof.map_or(0.0, |d| self.coefficients[d]))
    }

    pub fn edge_coefficient(&self, edge: usize) -> f64 {
        self.dofs.edge_dof(edge).map_or(0.0, |d| self.coefficients[d])
    }

    /// `u_h` at barycentric coordinates of triangle `t`.
    pub fn eval_bary(&self, t: usize, geom: &ElementGeometry, bary: &[f64; 3]) -> Vector {
        let w = whitney_eval(geom, &self.mesh.edge_signs(t), bary);
        let c = self.local_coefficients(t);
        w.values[0] * c[0] + w.values[1] * c[1] + w.values[2] * c[2]
    }

    /// `u_h(x)` on triangle `t`; `x` must lie in the closed triangle up to
    /// 1e-12 in barycentric coordinates.
    pub fn eval(&self, t: usize, x: Point) -> Result<Vector> {
        if t >= self.mesh.num_triangles() {
            return Err(Error::NoSuchTriangle(t));
        }
        let geom = element_geometry(self.mesh, t)?;
        let bary = geom.barycentric(&x);
        if bary.iter().any(|&l| l < -1e-12) {
            return Err(Error::PointOutsideTriangle { triangle: t, barycentric: bary });
        }
        Ok(self.eval_bary(t, &geom, &bary))
    }

    /// Constant scalar curl of `u_h` on triangle `t`.
    pub fn curl(&self, t: usize) -> Result<f64> {
        if t >= self.mesh.num_triangles() {
            return Err(Error::NoSuchTriangle(t));
        }
        let geom = element_geometry(self.mesh, t)?;
        let curls = whitney_curls(&geom, &self.mesh.edge_signs(t));
        let c = self.local_coefficients(t);
        Ok(curls[0] * c[0] + curls[1] * c[1] + curls[2] * c[2])
    }

    /// One `edge_id coefficient` line per edge, boundary edges included as zero.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in 0..self.mesh.num_edges() {
            writeln!(out, "{e} {}", self.edge_coefficient(e)).unwrap();
        }
        out
    }

    pub fn from_text(mesh: &'m Mesh, text: &str) -> Result<Self> {
        let dofs = DofMap::new(mesh);
        let mut coefficients = vec![0.0; dofs.num_free()];
        let mut seen = vec![false; mesh.num_edges()];
        for (ln, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |m: String| Error::MeshParse { line: ln + 1, message: m };
            let mut parts = line.split_whitespace();
            let (Some(e), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected `edge_id coefficient`".into()));
            };
            let e: usize = e.parse().map_err(|err| bad(format!("bad edge id: {err}")))?;
            let v: f64 = v.parse().map_err(|err| bad(format!("bad coefficient: {err}")))?;
            if e >= mesh.num_edges() {
                return Err(Error::NoSuchEdge(e));
            }
            seen[e] = true;
            match dofs.edge_dof(e) {
                Some(d) => coefficients[d] = v,
                None if v != 0.0 => return Err(bad(format!("boundary edge {e} must have zero coefficient"))),
                None => {}
            }
        }
        if let Some(e) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("edge {e} missing from solution file")));
        }
        Ok(Self { mesh, dofs, coefficients })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverUsed {
    ConjugateGradient,
    /// Sparse Cholesky, used when conjugate gradients stall.
    Cholesky,
}

#[derive(Debug, Clone)]
pub struct SolveReport<'m> {
    pub solution: DiscreteSolution<'m>,
    pub system: LinearSystem,
    pub solver: SolverUsed,
    /// Conjugate-gradient iterations, including those of a failed attempt.
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Assembles with the degree-4 load rule and runs Jacobi-preconditioned
/// conjugate gradients to [`SOLVER_TOLERANCE`] within `20 N` iterations.
/// When that fails (high coefficient contrast makes the system too
/// ill-conditioned) the system is factorized instead.
pub fn solve<'m>(mesh: &'m Mesh, coefficients: &CoefficientField, source: &dyn Fn(Point) -> Vector) -> Result<SolveReport<'m>> {
    let quad = QuadratureRule::triangle(LOAD_QUADRATURE_DEGREE)?;
    let system = assemble_system(mesh, coefficients, source, &quad)?;
    let n = system.dofs.num_free();
    let (x, solver, iterations, relative_residual) =
        match cg_solve(&system.matrix, &system.rhs, SOLVER_TOLERANCE, (20 * n).max(1)) {
            Ok(CgSolution { x, iterations, relative_residual }) => {
                (x, SolverUsed::ConjugateGradient, iterations, relative_residual)
            }
            Err(Error::NotConverged { iterations, .. }) => {
                let x = cholesky_solve(&system.matrix, &system.rhs)?;
                let ax = system.matrix.spmv(&x)?;
                let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, y)| b - y).collect();
                let relative = norm(&r) / norm(&system.rhs);
                (x, SolverUsed::Cholesky, iterations, relative)
            }
            Err(e) => return Err(e),
        };
    let solution = DiscreteSolution { mesh, dofs: system.dofs.clone(), coefficients: x };
    Ok(SolveReport { solution, system, solver, iterations, relative_residual })
}

pub fn solve_problem<'m>(mesh: &'m Mesh, problem: &ManufacturedProblem) -> Result<SolveReport<'m>> {
    solve(mesh, &problem.coefficients, &*problem.source)
}

/// `‖u − u_h‖_V = (Σ_T ∫_T ε (curl u − curl u_h)² + κ |u − u_h|²)^{1/2}`.
pub fn energy_error(
    solution: &DiscreteSolution<'_>,
    exact: &ExactSolution,
    coefficients: &CoefficientField,
    quad: &QuadratureRule,
) -> Result<f64> {
    let mesh = solution.mesh();
    let kappa = coefficients.kappa();
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        let geom = element_geometry(mesh, t)?;
        let eps = coefficients.eps(mesh.triangles()[t].region)?;
        let curl_h = solution.curl(t)?;
        let mut local = 0.0;
        for (bary, w) in quad.iter() {
            let x = geom.point(bary);
            let dc = (exact.curl_u)(x) - curl_h;
            let du = (exact.u)(x) - solution.eval_bary(t, &geom, bary);
            local += w * (eps * dc * dc + kappa * du.norm_squared());
        }
        sum += local * geom.area;
    }
    Ok(sum.sqrt())
}
