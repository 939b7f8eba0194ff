//! Indexed triangle meshes, face adjacency and hinge flattening.
//!
//! Faces are vertex-index triples `(i, j, k)`. Local edge `e` of a face runs
//! from corner `e` to corner `(e + 1) % 3`, so the edges are ordered
//! `e_ij, e_jk, e_ki`. Planar meshes store `z = 0` and must be
//! counterclockwise; surface meshes carry arbitrary 3D positions.

mod hinge;
pub mod obj;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::moebius::Complex;

pub use hinge::{hinge_flatten, HingeNeighbor, HingePatch};
pub use obj::{load_mesh, parse_obj, read_obj, write_obj, ObjData};

/// Relative area threshold (times bounding-box diagonal squared) below which a face is degenerate.
pub const DEGENERATE_AREA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Planar,
    Surface,
}

/// The face on the other side of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Boundary,
    /// Neighboring face and the local index of the shared edge inside it.
    Face { face: usize, edge: usize },
}

impl Neighbor {
    pub fn face(&self) -> Option<usize> {
        match *self {
            Neighbor::Face { face, .. } => Some(face),
            Neighbor::Boundary => None,
        }
    }
}

/// Per-face neighbors across `e_ij, e_jk, e_ki`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceAdjacency {
    neighbors: Vec<[Neighbor; 3]>,
}

impl FaceAdjacency {
    pub fn neighbors(&self, face: usize) -> &[Neighbor; 3] {
        &self.neighbors[face]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Each interior edge once, as `(t, edge in t, u, edge in u)` with `t < u`.
    pub fn interior_edges(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(t, ns)| {
            ns.iter().enumerate().filter_map(move |(e, n)| match *n {
                Neighbor::Face { face, edge } if t < face => Some((t, e, face, edge)),
                _ => None,
            })
        })
    }
}

/// Matches faces across shared edges.
pub fn build_adjacency(faces: &[[usize; 3]]) -> Result<FaceAdjacency> {
    let mut by_edge: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::with_capacity(faces.len() * 2);
    for (t, f) in faces.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push((t, e));
        }
    }
    let mut neighbors = vec![[Neighbor::Boundary; 3]; faces.len()];
    for (&(a, b), incident) in &by_edge {
        match incident.as_slice() {
            [_] => {}
            [(t, et), (u, eu)] => {
                if t == u {
                    return Err(Error::NonManifold(a, b));
                }
                neighbors[*t][*et] = Neighbor::Face { face: *u, edge: *eu };
                neighbors[*u][*eu] = Neighbor::Face { face: *t, edge: *et };
            }
            _ => return Err(Error::NonManifold(a, b)),
        }
    }
    Ok(FaceAdjacency { neighbors })
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    dimension: Dimension,
    adjacency: FaceAdjacency,
}

impl TriMesh {
    /// Planar mesh from complex vertex positions; faces must be counterclockwise.
    pub fn planar(points: Vec<Complex>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let positions = points.iter().map(|z| [z.re, z.im, 0.0]).collect();
        Self::build(positions, faces, Dimension::Planar)
    }

    pub fn surface(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(positions, faces, Dimension::Surface)
    }

    /// Planar when every `z` coordinate is exactly zero, surface otherwise.
    pub fn from_positions(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let dimension = if positions.iter().all(|p| p[2] == 0.0) {
            Dimension::Planar
        } else {
            Dimension::Surface
        };
        Self::build(positions, faces, dimension)
    }

    fn build(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>, dimension: Dimension) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Invalid("mesh has no faces".into()));
        }
        if let Some(p) = positions.iter().find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Invalid(format!("non-finite vertex position {p:?}")));
        }
        for (t, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= positions.len()) {
                return Err(Error::Invalid(format!("face {t} references a missing vertex: {f:?}")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[2] == f[0] {
                return Err(Error::DegenerateFace { face: t, area: 0.0 });
            }
        }
        let adjacency = build_adjacency(&faces)?;
        let mesh = Self {
            positions,
            faces,
            dimension,
            adjacency,
        };
        let diag = mesh.bbox_diagonal();
        let min_area = DEGENERATE_AREA_EPS * diag * diag;
        for t in 0..mesh.faces.len() {
            match dimension {
                Dimension::Planar => {
                    let area = mesh.signed_area(t);
                    if area.abs() <= min_area {
                        return Err(Error::DegenerateFace { face: t, area });
                    }
                    if area < 0.0 {
                        return Err(Error::FlippedFace { face: t, area });
                    }
                }
                Dimension::Surface => {
                    let area = mesh.face_area(t);
                    if area <= min_area {
                        return Err(Error::DegenerateFace { face: t, area });
                    }
                }
            }
        }
        Ok(mesh)
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn is_planar(&self) -> bool {
        self.dimension == Dimension::Planar
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, t: usize) -> [usize; 3] {
        self.faces[t]
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> [f64; 3] {
        self.positions[v]
    }

    pub fn adjacency(&self) -> &FaceAdjacency {
        &self.adjacency
    }

    /// Vertex `v` as a complex number (drops `z`).
    pub fn point(&self, v: usize) -> Complex {
        let p = self.positions[v];
        Complex::new(p[0], p[1])
    }

    pub fn face_points(&self, t: usize) -> [Complex; 3] {
        self.faces[t].map(|v| self.point(v))
    }

    pub fn face_positions(&self, t: usize) -> [[f64; 3]; 3] {
        self.faces[t].map(|v| self.positions[v])
    }

    /// Planar coordinates of the face: the vertex coordinates for planar
    /// meshes, otherwise the canonical isometric layout of the face alone.
    pub fn face_local_coords(&self, t: usize) -> [Complex; 3] {
        match self.dimension {
            Dimension::Planar => self.face_points(t),
            Dimension::Surface => hinge::layout_triangle(self.face_positions(t)),
        }
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.face_points(t);
        0.5 * cross(b - a, c - a)
    }

    pub fn face_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.face_positions(t);
        0.5 * norm3(cross3(sub3(b, a), sub3(c, a)))
    }

    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.positions {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bbox();
        norm3(sub3(hi, lo))
    }

    /// Faces incident to each vertex, with the corner index inside the face.
    pub fn vertex_faces(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.positions.len()];
        for (t, f) in self.faces.iter().enumerate() {
            for (corner, &v) in f.iter().enumerate() {
                out[v].push((t, corner));
            }
        }
        out
    }

    /// Barycentric coordinates of a 3D point with respect to face `t`,
    /// after orthogonal projection onto the face plane.
    pub fn barycentric3(&self, t: usize, x: [f64; 3]) -> [f64; 3] {
        let [a, b, c] = self.face_positions(t);
        let e1 = sub3(b, a);
        let e2 = sub3(c, a);
        let p = sub3(x, a);
        let (g11, g12, g22) = (dot3(e1, e1), dot3(e1, e2), dot3(e2, e2));
        let (r1, r2) = (dot3(p, e1), dot3(p, e2));
        let det = g11 * g22 - g12 * g12;
        let beta = (g22 * r1 - g12 * r2) / det;
        let gamma = (g11 * r2 - g12 * r1) / det;
        [1.0 - beta - gamma, beta, gamma]
    }

    /// Point of face `t` with the given barycentric coordinates.
    pub fn point3_at(&self, t: usize, bary: [f64; 3]) -> [f64; 3] {
        let [a, b, c] = self.face_positions(t);
        std::array::from_fn(|k| bary[0] * a[k] + bary[1] * b[k] + bary[2] * c[k])
    }
}

/// Barycentric coordinates of `z` in the planar triangle `corners`.
pub fn barycentric2(z: Complex, corners: &[Complex; 3]) -> [f64; 3] {
    let [a, b, c] = *corners;
    let area = cross(b - a, c - a);
    let wa = cross(b - z, c - z) / area;
    let wb = cross(c - z, a - z) / area;
    [wa, wb, 1.0 - wa - wb]
}

pub fn interpolate2(corners: &[Complex; 3], bary: [f64; 3]) -> Complex {
    corners[0] * bary[0] + corners[1] * bary[1] + corners[2] * bary[2]
}

/// `Im(conj(a)·b)`, the 2D cross product.
pub fn cross(a: Complex, b: Complex) -> f64 {
    a.re * b.im - a.im * b.re
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3(sub3(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn square() -> TriMesh {
        TriMesh::planar(
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn two_triangles_share_one_edge() {
        let m = square();
        let n0 = m.adjacency().neighbors(0);
        let n1 = m.adjacency().neighbors(1);
        // face 0 = (0,1,2): edge ki = (2,0) is shared with face 1's edge ij = (0,2)
        assert_eq!(n0, &[Neighbor::Boundary, Neighbor::Boundary, Neighbor::Face { face: 1, edge: 0 }]);
        assert_eq!(n1, &[Neighbor::Face { face: 0, edge: 2 }, Neighbor::Boundary, Neighbor::Boundary]);
        assert_eq!(m.adjacency().interior_edges().count(), 1);
    }

    #[test]
    fn single_triangle_is_all_boundary() {
        let m = TriMesh::planar(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)], vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.adjacency().neighbors(0), &[Neighbor::Boundary; 3]);
    }

    #[test]
    fn tetrahedron_adjacency_matches_brute_force() {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let faces = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        let m = TriMesh::surface(pos, faces.clone()).unwrap();
        for t in 0..4 {
            for e in 0..3 {
                let (a, b) = (faces[t][e], faces[t][(e + 1) % 3]);
                // brute force: any other face containing both a and b
                let expected: Vec<usize> = (0..4)
                    .filter(|&u| u != t && faces[u].contains(&a) && faces[u].contains(&b))
                    .collect();
                assert_eq!(expected.len(), 1);
                match m.adjacency().neighbors(t)[e] {
                    Neighbor::Face { face, edge } => {
                        assert_eq!(face, expected[0]);
                        assert_eq!(m.adjacency().neighbors(face)[edge], Neighbor::Face { face: t, edge: e });
                    }
                    Neighbor::Boundary => panic!("closed surface has no boundary"),
                }
            }
        }
    }

    #[test]
    fn three_faces_on_one_edge_is_non_manifold() {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let r = TriMesh::surface(pos, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]);
        assert!(matches!(r, Err(Error::NonManifold(0, 1))));
    }

    #[test]
    fn rejects_flipped_and_degenerate_faces() {
        let r = TriMesh::planar(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)], vec![[0, 1, 2]]);
        assert!(matches!(r, Err(Error::FlippedFace { face: 0, .. })));
        let r = TriMesh::planar(vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], vec![[0, 1, 2]]);
        assert!(matches!(r, Err(Error::DegenerateFace { face: 0, .. })));
    }

    #[test]
    fn barycentric_roundtrip() {
        let corners = [c(0.2, -0.1), c(1.3, 0.4), c(0.1, 1.7)];
        let b = [0.2, 0.5, 0.3];
        let z = interpolate2(&corners, b);
        let back = barycentric2(z, &corners);
        for k in 0..3 {
            assert!((back[k] - b[k]).abs() < 1e-14);
        }
        let m = TriMesh::surface(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 2.0, 0.5]], vec![[0, 1, 2]]).unwrap();
        let x = m.point3_at(0, b);
        let back = m.barycentric3(0, x);
        for k in 0..3 {
            assert!((back[k] - b[k]).abs() < 1e-14);
        }
    }
}
