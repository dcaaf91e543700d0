//! Plain-text mesh format:
//!
//! ```text
//! V E F
//! x y            (V lines)
//! a b c region   (F lines)
//! ```
//!
//! Coordinates use the shortest round-trip decimal representation. Edges are
//! rebuilt on import and `E` is checked against the rebuilt count; refinement
//! edges are reset to the longest edge of each triangle.

use std::fmt::Write as _;

use super::{longest_edge, Mesh, RegionTag, Triangle};
use crate::{Error, Point, Result};

impl Mesh {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.num_vertices(), self.num_edges(), self.num_triangles()).unwrap();
        for p in self.vertices() {
            writeln!(out, "{} {}", p.x, p.y).unwrap();
        }
        for t in self.triangles() {
            let [a, b, c] = t.vertices;
            writeln!(out, "{a} {b} {c} {}", t.region).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| Error::MeshParse { line: line + 1, message };

        let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "missing header".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|e| parse_err(hl, format!("bad count `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        let [nv, ne, nf] = counts[..] else {
            return Err(parse_err(hl, "header must be `V E F`".into()));
        };

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, line) = lines.next().ok_or_else(|| parse_err(hl, "unexpected end of vertex block".into()))?;
            let xs: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|e| parse_err(ln, format!("bad coordinate `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            let [x, y] = xs[..] else {
                return Err(parse_err(ln, "vertex line must hold two coordinates".into()));
            };
            vertices.push(Point::new(x, y));
        }

        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (ln, line) = lines.next().ok_or_else(|| parse_err(hl, "unexpected end of triangle block".into()))?;
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse::<usize>().map_err(|e| parse_err(ln, format!("bad index `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            let [a, b, c, r] = ids[..] else {
                return Err(parse_err(ln, "triangle line must hold three vertices and a region".into()));
            };
            let region = u8::try_from(r).map_err(|_| parse_err(ln, format!("region {r} out of range")))?;
            if [a, b, c].iter().any(|&v| v >= nv) {
                return Err(parse_err(ln, "vertex index out of range".into()));
            }
            let verts = [a, b, c];
            let pts = verts.map(|v| vertices[v]);
            triangles.push(Triangle {
                vertices: verts,
                region: RegionTag(region),
                refinement_edge: longest_edge(&pts, &verts),
                parent: None,
            });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content".into()));
        }

        let mesh = Mesh::new(vertices, triangles)?;
        if mesh.num_edges() != ne {
            return Err(Error::InvalidMesh(format!("header declares {ne} edges, topology has {}", mesh.num_edges())));
        }
        Ok(mesh)
    }
}
