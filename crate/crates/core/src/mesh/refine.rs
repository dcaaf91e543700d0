use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{longest_edge, Mesh, Triangle};
use crate::{Error, Result};

/// Bound on the length of a refinement-edge propagation chain in the
/// bisection closure.
pub const DEFAULT_CLOSURE_DEPTH: usize = 1000;

/// Splits every triangle into four by connecting its edge midpoints.
pub fn red_refine(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices().to_vec();
    vertices.extend((0..mesh.num_edges()).map(|e| {
        let [p, q] = mesh.edge_points(e);
        nalgebra::center(&p, &q)
    }));

    let mut triangles = Vec::with_capacity(4 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = tri.vertices;
        // Midpoints of local edges 0 (b-c), 1 (c-a), 2 (a-b).
        let [m_bc, m_ca, m_ab] = mesh.triangle_edges(t).map(|e| nv + e);
        for verts in [[a, m_ab, m_ca], [m_ab, b, m_bc], [m_ca, m_bc, c], [m_ab, m_bc, m_ca]] {
            let pts = verts.map(|v| vertices[v]);
            triangles.push(Triangle {
                vertices: verts,
                region: tri.region,
                refinement_edge: longest_edge(&pts, &verts),
                parent: Some(t),
            });
        }
    }
    Mesh::new(vertices, triangles)
}

/// Newest-vertex bisection of `marked` with conforming closure.
pub fn bisect_refine(mesh: &Mesh, marked: &BTreeSet<usize>) -> Result<Mesh> {
    bisect_refine_with_depth(mesh, marked, DEFAULT_CLOSURE_DEPTH)
}

/// As [`bisect_refine`], failing with [`Error::ClosureDepthExceeded`] when a
/// chain of forced refinement edges grows longer than `max_depth`.
pub fn bisect_refine_with_depth(mesh: &Mesh, marked: &BTreeSet<usize>, max_depth: usize) -> Result<Mesh> {
    if let Some(&t) = marked.iter().find(|&&t| t >= mesh.num_triangles()) {
        return Err(Error::NoSuchTriangle(t));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }

    let refinement_edge = |t: usize| mesh.triangle_edges(t)[mesh.triangles()[t].refinement_edge as usize];

    // Closure: any triangle with a marked edge must also have its refinement edge marked.
    let mut edge_marked = vec![false; mesh.num_edges()];
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for &t in marked {
        let e = refinement_edge(t);
        if !edge_marked[e] {
            edge_marked[e] = true;
            queue.push_back((e, 0));
        }
    }
    while let Some((e, depth)) = queue.pop_front() {
        let edge = &mesh.edges()[e];
        for t in std::iter::once(edge.plus).chain(edge.minus) {
            let r = refinement_edge(t);
            if !edge_marked[r] {
                if depth + 1 > max_depth {
                    return Err(Error::ClosureDepthExceeded(max_depth));
                }
                edge_marked[r] = true;
                queue.push_back((r, depth + 1));
            }
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, _) in edge_marked.iter().enumerate().filter(|(_, &m)| m) {
        let [p, q] = mesh.edge_points(e);
        midpoint.insert((mesh.edges()[e].vertices[0], mesh.edges()[e].vertices[1]), vertices.len());
        vertices.push(nalgebra::center(&p, &q));
    }

    let mut triangles = Vec::with_capacity(mesh.num_triangles() + 2 * midpoint.len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !edge_marked[refinement_edge(t)] {
            triangles.push(Triangle { parent: Some(t), ..tri.clone() });
            continue;
        }
        // Rotate so the refinement edge is opposite local vertex 0.
        let k = tri.refinement_edge as usize;
        let v = [tri.vertices[k], tri.vertices[(k + 1) % 3], tri.vertices[(k + 2) % 3]];
        bisect_recursive(v, tri, t, &midpoint, &mut triangles);
    }
    Mesh::new(vertices, triangles)
}

/// `v = [apex, b, c]` counterclockwise with refinement edge `b-c`. Children
/// get the new vertex as apex, so their refinement edges are the parent's
/// other two edges.
fn bisect_recursive(
    v: [usize; 3],
    parent: &Triangle,
    parent_id: usize,
    midpoint: &HashMap<(usize, usize), usize>,
    out: &mut Vec<Triangle>,
) {
    let [apex, b, c] = v;
    match midpoint.get(&(b.min(c), b.max(c))) {
        Some(&m) => {
            bisect_recursive([m, apex, b], parent, parent_id, midpoint, out);
            bisect_recursive([m, c, apex], parent, parent_id, midpoint, out);
        }
        None => out.push(Triangle { vertices: v, region: parent.region, refinement_edge: 0, parent: Some(parent_id) }),
    }
}
