//! Conforming triangulations of polygonal domains.
//!
//! Triangles are stored counterclockwise. Local edge `k` of a triangle is the
//! edge opposite local vertex `k`, traversed from vertex `k+1` to vertex `k+2`
//! (indices mod 3). Global edges are oriented from the lower to the higher
//! vertex id; the per-element edge sign is `+1` where the two orientations agree.

mod io;
mod refine;

use std::collections::HashMap;

pub use refine::{bisect_refine, bisect_refine_with_depth, red_refine, DEFAULT_CLOSURE_DEPTH};

use crate::{Error, Point, Result, Vector};

/// Material region of a triangle. `OMEGA_1` carries the larger ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionTag(pub u8);

impl RegionTag {
    pub const OMEGA_1: RegionTag = RegionTag(1);
    pub const OMEGA_2: RegionTag = RegionTag(2);
}

impl std::fmt::Display for RegionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: RegionTag,
    /// Local index of the edge split by newest-vertex bisection.
    pub refinement_edge: u8,
    /// Triangle of the previous mesh this one was cut from.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// `[lo, hi]` with `lo < hi`.
    pub vertices: [usize; 2],
    /// `T⁺`: the incident triangle with the smaller id.
    pub plus: usize,
    /// `T⁻`, absent on the boundary.
    pub minus: Option<usize>,
    /// Unit normal pointing from `T⁺` into `T⁻` (outward on the boundary).
    pub normal: Vector,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub length: f64,
    pub normal: Vector,
    /// Unit tangent from the low-id to the high-id vertex.
    pub tangent: Vector,
    pub plus: usize,
    pub minus: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    edge_signs: Vec<[f64; 3]>,
}

pub(crate) fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1] - p[0]).perp(&(p[2] - p[0])))
}

/// Longest local edge, ties broken by the smallest opposite vertex id.
pub(crate) fn longest_edge(points: &[Point; 3], vertices: &[usize; 3]) -> u8 {
    let mut best = 0usize;
    let mut best_len = -1.0;
    for k in 0..3 {
        let len = (points[(k + 2) % 3] - points[(k + 1) % 3]).norm_squared();
        if len > best_len || (len == best_len && vertices[k] < vertices[best]) {
            best = k;
            best_len = len;
        }
    }
    best as u8
}

impl Mesh {
    /// Builds the edge topology and validates the input. Refinement edges and
    /// parents in `triangles` are kept as given.
    pub fn new(vertices: Vec<Point>, triangles: Vec<Triangle>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a == b || b == c || a == c {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            if let Some(&v) = tri.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references missing vertex {v}")));
            }
            if tri.refinement_edge > 2 {
                return Err(Error::InvalidMesh(format!("triangle {t} has refinement edge {}", tri.refinement_edge)));
            }
            let area = signed_area(&tri.vertices.map(|v| vertices[v]));
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t} is not counterclockwise (area {area:e})")));
            }
        }

        // (lo, hi) -> incident (triangle, local edge) in triangle order.
        let mut incidence: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri.vertices[(k + 1) % 3];
                let b = tri.vertices[(k + 2) % 3];
                incidence.entry((a.min(b), a.max(b))).or_default().push((t, k));
            }
        }
        let mut keys: Vec<(usize, usize)> = incidence.keys().copied().collect();
        keys.sort_unstable();

        let mut edges = Vec::with_capacity(keys.len());
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        let mut edge_signs = vec![[0.0; 3]; triangles.len()];
        for (id, key) in keys.iter().enumerate() {
            let inc = &incidence[key];
            if inc.len() > 2 {
                return Err(Error::InvalidMesh(format!("edge {key:?} is shared by {} triangles", inc.len())));
            }
            let mut signs = Vec::with_capacity(2);
            for &(t, k) in inc {
                let a = triangles[t].vertices[(k + 1) % 3];
                let sign = if a == key.0 { 1.0 } else { -1.0 };
                triangle_edges[t][k] = id;
                edge_signs[t][k] = sign;
                signs.push(sign);
            }
            if signs.len() == 2 && signs[0] == signs[1] {
                return Err(Error::InvalidMesh(format!(
                    "edge {key:?} is traversed in the same direction by both neighbours"
                )));
            }
            let plus = inc.iter().map(|&(t, _)| t).min().unwrap();
            let minus = inc.iter().map(|&(t, _)| t).find(|&t| t != plus);
            let (p, q) = (vertices[key.0], vertices[key.1]);
            let tangent = (q - p).normalize();
            let mut normal = Vector::new(tangent.y, -tangent.x);
            let centroid_plus = centroid_of(&triangles[plus].vertices.map(|v| vertices[v]));
            let midpoint = nalgebra::center(&p, &q);
            if normal.dot(&(midpoint - centroid_plus)) < 0.0 {
                normal = -normal;
            }
            edges.push(Edge { vertices: [key.0, key.1], plus, minus, normal });
        }

        Ok(Self { vertices, triangles, edges, triangle_edges, edge_signs })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    /// Global edge ids of the local edges of triangle `t`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// `+1` where the global edge orientation matches the counterclockwise traversal of `t`.
    pub fn edge_signs(&self, t: usize) -> [f64; 3] {
        self.edge_signs[t]
    }

    pub fn points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].vertices.map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.points(t))
    }

    pub fn centroid(&self, t: usize) -> Point {
        centroid_of(&self.points(t))
    }

    /// Longest edge length.
    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.points(t);
        (0..3).map(|k| (p[(k + 1) % 3] - p[k]).norm()).fold(0.0, f64::max)
    }

    pub fn edge_geometry(&self, e: usize) -> Result<EdgeGeometry> {
        let edge = self.edges.get(e).ok_or(Error::NoSuchEdge(e))?;
        let d = self.vertices[edge.vertices[1]] - self.vertices[edge.vertices[0]];
        let length = d.norm();
        Ok(EdgeGeometry { length, normal: edge.normal, tangent: d / length, plus: edge.plus, minus: edge.minus })
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        self.edges[e].vertices.map(|v| self.vertices[v])
    }

    /// Flags the triangles sharing at least one vertex with the interface
    /// between two regions.
    pub fn triangles_touching_interface(&self) -> Vec<bool> {
        let mut on_interface = vec![false; self.vertices.len()];
        for e in &self.edges {
            if e.minus.is_some_and(|m| self.triangles[m].region != self.triangles[e.plus].region) {
                on_interface[e.vertices[0]] = true;
                on_interface[e.vertices[1]] = true;
            }
        }
        self.triangles.iter().map(|t| t.vertices.iter().any(|&v| on_interface[v])).collect()
    }

    /// `V − E + F`; equals one for a conforming mesh of a simply connected domain.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Checks the structural invariants: counterclockwise triangles, at most two
    /// triangles per edge with opposite traversal, and no vertex in the interior
    /// of a boundary edge (a hanging node would show up there).
    pub fn check_conformity(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if self.area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t} is not counterclockwise")));
            }
        }
        for (id, e) in self.edges.iter().enumerate() {
            if let Some(m) = e.minus {
                let sp = self.sign_on(e.plus, id);
                let sm = self.sign_on(m, id);
                if sp * sm >= 0.0 {
                    return Err(Error::InvalidMesh(format!("edge {id} has equal signs on both sides")));
                }
            } else {
                let [p, q] = self.edge_points(id);
                let len = (q - p).norm();
                for (v, x) in self.vertices.iter().enumerate() {
                    if e.vertices.contains(&v) {
                        continue;
                    }
                    let s = (x - p).dot(&(q - p)) / (len * len);
                    let off = (x - p).perp(&(q - p)).abs() / len;
                    if s > 1e-12 && s < 1.0 - 1e-12 && off < 1e-12 * len {
                        return Err(Error::InvalidMesh(format!("hanging vertex {v} on edge {id}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn sign_on(&self, t: usize, e: usize) -> f64 {
        let k = self.triangle_edges[t].iter().position(|&x| x == e).expect("edge belongs to triangle");
        self.edge_signs[t][k]
    }

    /// Retags every triangle by evaluating `classifier` at its centroid.
    pub fn tag_regions(&self, classifier: impl Fn(Point) -> RegionTag) -> Mesh {
        let mut mesh = self.clone();
        for t in 0..mesh.triangles.len() {
            mesh.triangles[t].region = classifier(self.centroid(t));
        }
        mesh
    }

    pub fn region_count(&self, tag: RegionTag) -> usize {
        self.triangles.iter().filter(|t| t.region == tag).count()
    }
}

pub(crate) fn centroid_of(p: &[Point; 3]) -> Point {
    Point::from((p[0].coords + p[1].coords + p[2].coords) / 3.0)
}

/// `n × n` squares on `[0,1]²`, each cut by its lower-left to upper-right
/// diagonal. All triangles are tagged `OMEGA_1`.
pub fn build_structured_unit_square(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("subdivision count must be at least 1".into()));
    }
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(i as f64 * h, j as f64 * h));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * (n + 1) + i;
            let b = a + 1;
            let c = a + n + 2;
            let d = a + n + 1;
            for verts in [[a, b, c], [a, c, d]] {
                let pts = verts.map(|v| vertices[v]);
                triangles.push(Triangle {
                    vertices: verts,
                    region: RegionTag::OMEGA_1,
                    refinement_edge: longest_edge(&pts, &verts),
                    parent: None,
                });
            }
        }
    }
    Mesh::new(vertices, triangles)
}

pub fn tag_regions(mesh: &Mesh, classifier: impl Fn(Point) -> RegionTag) -> Mesh {
    mesh.tag_regions(classifier)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_n1() {
        let m = build_structured_unit_square(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_triangles()), (4, 5, 2));
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.num_interior_edges(), 1);
    }

    #[test]
    fn unit_square_n4_counts() {
        let m = build_structured_unit_square(4).unwrap();
        assert_eq!(m.num_triangles(), 32);
        assert_eq!(m.num_vertices(), 25);
        assert_eq!(m.num_edges(), 56);
        assert_eq!(m.num_interior_edges(), 40);
        assert_eq!(m.euler_characteristic(), 1);
        m.check_conformity().unwrap();
        // 20 horizontal, 20 vertical, 16 diagonal
        let (mut hor, mut ver, mut diag) = (0, 0, 0);
        for e in 0..m.num_edges() {
            let g = m.edge_geometry(e).unwrap();
            if g.tangent.y == 0.0 {
                hor += 1
            } else if g.tangent.x == 0.0 {
                ver += 1
            } else {
                diag += 1
            }
        }
        assert_eq!((hor, ver, diag), (20, 20, 16));
    }

    #[test]
    fn rejects_zero_subdivisions() {
        assert!(matches!(build_structured_unit_square(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn edge_lengths_on_n4() {
        let m = build_structured_unit_square(4).unwrap();
        for e in 0..m.num_edges() {
            let g = m.edge_geometry(e).unwrap();
            let expected = if g.tangent.x != 0.0 && g.tangent.y != 0.0 { 0.25 * 2f64.sqrt() } else { 0.25 };
            assert!((g.length - expected).abs() < 1e-15);
            assert!((g.normal.norm() - 1.0).abs() < 1e-15);
            assert!(g.normal.dot(&g.tangent).abs() < 1e-15);
        }
    }

    #[test]
    fn normal_points_from_plus_to_minus() {
        let m = build_structured_unit_square(4).unwrap();
        let target = [Point::new(0.0, 0.25), Point::new(0.25, 0.25)];
        let e = (0..m.num_edges()).find(|&e| m.edge_points(e) == target).unwrap();
        let g = m.edge_geometry(e).unwrap();
        // T⁺ is the upper-left triangle of cell (0,0), id 1, lying below the edge.
        assert_eq!(g.plus, 1);
        assert_eq!(g.minus, Some(8));
        assert_eq!(g.normal, Vector::new(0.0, 1.0));
        for e in 0..m.num_edges() {
            let g = m.edge_geometry(e).unwrap();
            let [p, q] = m.edge_points(e);
            let mid = nalgebra::center(&p, &q);
            assert!(g.normal.dot(&(mid - m.centroid(g.plus))) > 0.0);
            if let Some(minus) = g.minus {
                assert!(g.plus < minus);
                assert!(g.normal.dot(&(m.centroid(minus) - mid)) > 0.0);
            }
        }
    }

    #[test]
    fn interior_edges_have_opposite_signs() {
        let m = build_structured_unit_square(3).unwrap();
        for (id, e) in m.edges().iter().enumerate() {
            if let Some(minus) = e.minus {
                assert_eq!(m.sign_on(e.plus, id), -m.sign_on(minus, id));
            }
        }
    }

    #[test]
    fn structured_refinement_edge_is_the_diagonal() {
        let m = build_structured_unit_square(2).unwrap();
        for t in 0..m.num_triangles() {
            let k = m.triangles()[t].refinement_edge as usize;
            let g = m.edge_geometry(m.triangle_edges(t)[k]).unwrap();
            assert!((g.length - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn tagging_by_centroid() {
        let m = build_structured_unit_square(4).unwrap();
        let all = m.tag_regions(|_| RegionTag::OMEGA_1);
        assert_eq!(all.region_count(RegionTag::OMEGA_1), 32);
        let split = m.tag_regions(|p| if p.x < 0.5 { RegionTag::OMEGA_1 } else { RegionTag::OMEGA_2 });
        assert_eq!(split.region_count(RegionTag::OMEGA_1), 16);
        assert_eq!(split.region_count(RegionTag::OMEGA_2), 16);
        let refined = red_refine(&split).unwrap();
        assert_eq!(refined.region_count(RegionTag::OMEGA_1), 64);
        assert_eq!(refined.region_count(RegionTag::OMEGA_2), 64);
    }

    #[test]
    fn rejects_clockwise_and_nonmanifold_input() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let cw = Triangle { vertices: [0, 2, 1], region: RegionTag::OMEGA_1, refinement_edge: 0, parent: None };
        assert!(Mesh::new(v.clone(), vec![cw]).is_err());
        let same = Triangle { vertices: [0, 1, 2], region: RegionTag::OMEGA_1, refinement_edge: 0, parent: None };
        assert!(Mesh::new(v, vec![same.clone(), same]).is_err());
    }

    #[test]
    fn interface_touching() {
        let m = build_structured_unit_square(4)
            .unwrap()
            .tag_regions(|p| if p.x < 0.5 { RegionTag::OMEGA_1 } else { RegionTag::OMEGA_2 });
        let touching = m.triangles_touching_interface().iter().filter(|&&b| b).count();
        // The two columns of cells adjacent to x = 0.5.
        assert_eq!(touching, 16);
        let plain = build_structured_unit_square(4).unwrap();
        assert!(plain.triangles_touching_interface().iter().all(|&b| !b));
    }
}
