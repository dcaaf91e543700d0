//! Lowest-order Nédélec (Whitney) edge elements on triangles.
//!
//! The local basis function of edge `k` (opposite vertex `k`, running from
//! vertex `i = k+1` to `j = k+2`) is `λ_i ∇λ_j − λ_j ∇λ_i`. Its tangential
//! moment along its own edge is one and its scalar curl `∂₁v₂ − ∂₂v₁` is the
//! constant `2 ∇λ_i × ∇λ_j = 1/|T|` on a counterclockwise triangle.
//! Multiplying by the per-element edge sign gives the globally oriented basis.

use nalgebra::Matrix3;

use crate::{Error, Point, Result, Vector};

const LOCAL_EDGES: [(usize, usize); 3] = [(1, 2), (2, 0), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub points: [Point; 3],
    pub area: f64,
    pub grad_lambda: [Vector; 3],
}

impl ElementGeometry {
    pub fn new(points: [Point; 3]) -> Result<Self> {
        let e1 = points[1] - points[0];
        let e2 = points[2] - points[0];
        let det = e1.perp(&e2);
        let area = 0.5 * det;
        if area == 0.0 || !area.is_finite() {
            return Err(Error::DegenerateTriangle(area));
        }
        // ∇λ_k = rot(p_{k+2} − p_{k+1}) / (2|T|) with rot(a, b) = (b, −a).
        let grad = |k: usize| {
            let d = points[(k + 2) % 3] - points[(k + 1) % 3];
            Vector::new(-d.y, d.x) / det
        };
        let grad_lambda = [grad(0), grad(1), grad(2)];
        Ok(Self { points, area: area.abs(), grad_lambda })
    }

    pub fn point(&self, bary: &[f64; 3]) -> Point {
        Point::from(self.points[0].coords * bary[0] + self.points[1].coords * bary[1] + self.points[2].coords * bary[2])
    }

    pub fn barycentric(&self, x: &Point) -> [f64; 3] {
        let l1 = self.grad_lambda[1].dot(&(x - self.points[0]));
        let l2 = self.grad_lambda[2].dot(&(x - self.points[0]));
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Basis values and curls at one point, global-orientation signs applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitneyValues {
    pub values: [Vector; 3],
    pub curls: [f64; 3],
}

/// Constant scalar curls of the three signed basis functions.
pub fn whitney_curls(geom: &ElementGeometry, signs: &[f64; 3]) -> [f64; 3] {
    let g = &geom.grad_lambda;
    std::array::from_fn(|k| {
        let (i, j) = LOCAL_EDGES[k];
        signs[k] * 2.0 * g[i].perp(&g[j])
    })
}

pub fn whitney_eval(geom: &ElementGeometry, signs: &[f64; 3], bary: &[f64; 3]) -> WhitneyValues {
    let g = &geom.grad_lambda;
    let values = std::array::from_fn(|k| {
        let (i, j) = LOCAL_EDGES[k];
        (g[j] * bary[i] - g[i] * bary[j]) * signs[k]
    });
    WhitneyValues { values, curls: whitney_curls(geom, signs) }
}

/// `∫_T λ_p λ_q = |T| (1 + δ_pq) / 12`.
fn lambda_mass(area: f64, p: usize, q: usize) -> f64 {
    area * if p == q { 2.0 } else { 1.0 } / 12.0
}

/// Exact `(ε ∫ curl φ_a curl φ_b, κ ∫ φ_a · φ_b)` for the signed basis.
pub fn element_matrices(geom: &ElementGeometry, signs: &[f64; 3], eps: f64, kappa: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let curls = whitney_curls(geom, signs);
    let g = &geom.grad_lambda;
    let stiffness = Matrix3::from_fn(|a, b| eps * geom.area * (curls[a] * curls[b]));
    let mut mass = Matrix3::from_fn(|a, b| {
        let (i, j) = LOCAL_EDGES[a];
        let (k, l) = LOCAL_EDGES[b];
        let m = |p, q| lambda_mass(geom.area, p, q);
        let integral = m(i, k) * g[j].dot(&g[l]) - m(i, l) * g[j].dot(&g[k]) - m(j, k) * g[i].dot(&g[l])
            + m(j, l) * g[i].dot(&g[k]);
        kappa * (signs[a] * signs[b]) * integral
    });
    mass.fill_lower_triangle_with_upper_triangle();
    (stiffness, mass)
}
