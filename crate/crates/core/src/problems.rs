//! Coefficient fields and manufactured problems.
//!
//! Curl conventions: for a vector field `v`, `curl v = ∂₁v₂ − ∂₂v₁`; for a
//! scalar `w`, the adjoint is `curl* w = (∂₂w, −∂₁w)`. The strong form is
//! `curl*(ε curl u) + κ u = f` with `u ∧ n = 0` on the boundary of `[0,1]²`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::mesh::{build_structured_unit_square, Mesh, RegionTag};
use crate::{Error, Point, Result, Vector};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> Vector + Send + Sync>;
pub type RegionClassifier = Arc<dyn Fn(Point) -> RegionTag + Send + Sync>;

/// Piecewise-constant ε per region and a constant κ.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    eps: BTreeMap<RegionTag, f64>,
    kappa: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

impl CoefficientField {
    pub fn constant(eps: f64, kappa: f64) -> Result<Self> {
        check_positive("eps", eps)?;
        check_positive("kappa", kappa)?;
        Ok(Self { eps: BTreeMap::from([(RegionTag::OMEGA_1, eps), (RegionTag::OMEGA_2, eps)]), kappa })
    }

    /// `eps1` on `OMEGA_1`, `eps2` on `OMEGA_2`; requires `eps1 ≥ eps2`.
    pub fn two_phase(eps1: f64, eps2: f64, kappa: f64) -> Result<Self> {
        check_positive("eps1", eps1)?;
        check_positive("eps2", eps2)?;
        check_positive("kappa", kappa)?;
        if eps1 < eps2 {
            return Err(Error::InvalidArgument(format!("eps1 = {eps1} must not be smaller than eps2 = {eps2}")));
        }
        Ok(Self { eps: BTreeMap::from([(RegionTag::OMEGA_1, eps1), (RegionTag::OMEGA_2, eps2)]), kappa })
    }

    pub fn eps(&self, region: RegionTag) -> Result<f64> {
        self.eps.get(&region).copied().ok_or(Error::MissingRegion(region.0))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_constant(&self) -> bool {
        let mut values = self.eps.values();
        let first = values.next();
        values.all(|v| Some(v) == first)
    }

    /// Checks that every triangle's region has a coefficient.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        for t in mesh.triangles() {
            self.eps(t.region)?;
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct ExactSolution {
    pub u: VectorField,
    pub curl_u: ScalarField,
}

#[derive(Clone)]
pub struct ManufacturedProblem {
    pub name: String,
    pub coefficients: CoefficientField,
    pub source: VectorField,
    pub div_source: Option<ScalarField>,
    pub exact: Option<ExactSolution>,
    pub classifier: RegionClassifier,
}

impl fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("coefficients", &self.coefficients)
            .field("has_div_source", &self.div_source.is_some())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ManufacturedProblem {
    /// General constructor on `[0,1]²` with every triangle in `OMEGA_1`.
    pub fn new(
        name: impl Into<String>,
        coefficients: CoefficientField,
        source: VectorField,
        div_source: Option<ScalarField>,
        exact: Option<ExactSolution>,
    ) -> Self {
        Self {
            name: name.into(),
            coefficients,
            source,
            div_source,
            exact,
            classifier: Arc::new(|_| RegionTag::OMEGA_1),
        }
    }

    pub fn with_classifier(mut self, classifier: RegionClassifier) -> Self {
        self.classifier = classifier;
        self
    }

    pub fn region_of(&self, x: Point) -> RegionTag {
        (self.classifier)(x)
    }

    /// Structured `n × n` mesh of the unit square tagged by this problem's classifier.
    pub fn initial_mesh(&self, n: usize) -> Result<Mesh> {
        let mesh = build_structured_unit_square(n)?;
        Ok(mesh.tag_regions(|x| self.region_of(x)))
    }

    pub fn exact(&self) -> Result<&ExactSolution> {
        self.exact.as_ref().ok_or_else(|| Error::MissingExactSolution(self.name.clone()))
    }
}

fn curl_free_field() -> ExactSolution {
    ExactSolution {
        u: Arc::new(|x: Point| {
            let (s1, c1) = (PI * x.x).sin_cos();
            let (s2, c2) = (PI * x.y).sin_cos();
            Vector::new(c1 * s2, s1 * c2)
        }),
        curl_u: Arc::new(|_| 0.0),
    }
}

fn curl_free_problem(name: &str, coefficients: CoefficientField) -> ManufacturedProblem {
    let kappa = coefficients.kappa();
    let exact = curl_free_field();
    let u = exact.u.clone();
    ManufacturedProblem::new(
        name,
        coefficients,
        Arc::new(move |x| u(x) * kappa),
        Some(Arc::new(move |x: Point| -2.0 * kappa * PI * (PI * x.x).sin() * (PI * x.y).sin())),
        Some(exact),
    )
}

/// `u = (cos πx₁ sin πx₂, sin πx₁ cos πx₂)` on `[0,1]²` with constant ε, κ.
/// `u` is the gradient of `sin πx₁ sin πx₂ / π`, so `curl u = 0`, `f = κu` and
/// `div f = −2κπ sin πx₁ sin πx₂`.
pub fn smooth_problem(eps: f64, kappa: f64) -> Result<ManufacturedProblem> {
    Ok(curl_free_problem("smooth", CoefficientField::constant(eps, kappa)?))
}

/// The curl-free solution of [`smooth_problem`] with `ε = eps1` on
/// `x₁ < split` and `eps2` elsewhere. Since `curl u = 0` the source `κu` is
/// consistent for any ε jump; the discrete curl still jumps across the interface.
/// `split` must be a grid line of the `grid × grid` initial mesh.
pub fn interface_problem(eps1: f64, eps2: f64, kappa: f64, split: f64, grid: usize) -> Result<ManufacturedProblem> {
    let coefficients = CoefficientField::two_phase(eps1, eps2, kappa)?;
    let cells = split * grid as f64;
    if !(split > 0.0 && split < 1.0) || (cells - cells.round()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "interface x1 = {split} is not a grid line of the {grid}x{grid} mesh"
        )));
    }
    Ok(curl_free_problem("interface", coefficients).with_classifier(Arc::new(move |x: Point| {
        if x.x < split {
            RegionTag::OMEGA_1
        } else {
            RegionTag::OMEGA_2
        }
    })))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub interior_samples: usize,
    pub boundary_samples: usize,
    /// Worst `|f − ε curl* curl u − κ u| / (1 + |f|)`.
    pub max_residual: f64,
    pub max_tangential_trace: f64,
}

/// Finite-difference step for `curl* (curl u)`.
const FD_STEP: f64 = 1e-5;
const RESIDUAL_TOL: f64 = 1e-6;
const TRACE_TOL: f64 = 1e-12;

/// Van der Corput radical inverse, for deterministic sample points.
fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

/// Checks the strong form at interior sample points (away from region
/// boundaries by the finite-difference stencil) and the tangential trace at
/// boundary points.
pub fn verify_consistency(problem: &ManufacturedProblem, n_samples: usize) -> Result<ConsistencyReport> {
    let exact = problem.exact()?;
    let kappa = problem.coefficients.kappa();
    let h = FD_STEP;

    let mut interior_samples = 0;
    let mut max_residual = 0.0f64;
    let mut i = 1;
    while interior_samples < n_samples && i < 100 * n_samples.max(1) {
        let x = Point::new(radical_inverse(i, 2), radical_inverse(i, 3));
        i += 1;
        let region = problem.region_of(x);
        let stencil = [Vector::new(h, 0.0), Vector::new(-h, 0.0), Vector::new(0.0, h), Vector::new(0.0, -h)];
        if stencil.iter().any(|d| {
            let y = x + d;
            !(0.0..=1.0).contains(&y.x) || !(0.0..=1.0).contains(&y.y) || problem.region_of(y) != region
        }) {
            continue;
        }
        let eps = problem.coefficients.eps(region)?;
        let c = |y: Point| (exact.curl_u)(y);
        let d1 = (c(x + stencil[0]) - c(x + stencil[1])) / (2.0 * h);
        let d2 = (c(x + stencil[2]) - c(x + stencil[3])) / (2.0 * h);
        let curl_curl = Vector::new(d2, -d1);
        let f = (problem.source)(x);
        let r = (f - curl_curl * eps - (exact.u)(x) * kappa).norm() / (1.0 + f.norm());
        if r > RESIDUAL_TOL {
            return Err(Error::Inconsistent {
                name: problem.name.clone(),
                what: "strong-form residual",
                residual: r,
                x: x.x,
                y: x.y,
            });
        }
        max_residual = max_residual.max(r);
        interior_samples += 1;
    }

    let mut max_tangential_trace = 0.0f64;
    for k in 0..n_samples {
        let s = (k as f64 + 0.5) / n_samples as f64;
        let (x, t) = match k % 4 {
            0 => (Point::new(s, 0.0), Vector::new(1.0, 0.0)),
            1 => (Point::new(1.0, s), Vector::new(0.0, 1.0)),
            2 => (Point::new(s, 1.0), Vector::new(1.0, 0.0)),
            _ => (Point::new(0.0, s), Vector::new(0.0, 1.0)),
        };
        let trace = (exact.u)(x).dot(&t).abs();
        if trace > TRACE_TOL {
            return Err(Error::Inconsistent {
                name: problem.name.clone(),
                what: "tangential trace",
                residual: trace,
                x: x.x,
                y: x.y,
            });
        }
        max_tangential_trace = max_tangential_trace.max(trace);
    }

    Ok(ConsistencyReport { interior_samples, boundary_samples: n_samples, max_residual, max_tangential_trace })
}
