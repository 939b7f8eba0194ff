//! Isometric unfolding of a face and its edge neighbors into the plane.

use super::{cross3, dist3, norm3, sub3, Neighbor, TriMesh};
use crate::error::{Error, Result};
use crate::moebius::Complex;

/// Neighbor across one edge of a hinge, unfolded into the face's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeNeighbor {
    pub face: usize,
    /// Vertex of the neighbor opposite the shared edge.
    pub apex_vertex: usize,
    pub apex: Complex,
}

/// A face laid out in the plane together with its (up to) three neighbors.
///
/// The face has `corners[0] = 0`, `corners[1]` on the positive real axis and
/// `corners[2]` in the upper half-plane. `neighbors[e]` lies across local
/// edge `e` on the side opposite the face.
#[derive(Debug, Clone, PartialEq)]
pub struct HingePatch {
    pub face: usize,
    pub vertices: [usize; 3],
    pub corners: [Complex; 3],
    pub neighbors: [Option<HingeNeighbor>; 3],
}

impl HingePatch {
    /// The three planar points of the neighbor across `edge`, ordered
    /// (edge start, edge end, apex).
    pub fn neighbor_triangle(&self, edge: usize) -> Option<([Complex; 3], [usize; 3])> {
        self.neighbors[edge].map(|n| {
            let (a, b) = (edge, (edge + 1) % 3);
            (
                [self.corners[a], self.corners[b], n.apex],
                [self.vertices[a], self.vertices[b], n.apex_vertex],
            )
        })
    }
}

/// Canonical layout: `p0` at the origin, `p1` on the positive real axis,
/// `p2` above it.
pub(crate) fn layout_triangle(p: [[f64; 3]; 3]) -> [Complex; 3] {
    let l01 = dist3(p[0], p[1]);
    let l02 = dist3(p[0], p[2]);
    let l12 = dist3(p[1], p[2]);
    let twice_area = norm3(cross3(sub3(p[1], p[0]), sub3(p[2], p[0])));
    let along = (l02 * l02 - l12 * l12 + l01 * l01) / (2.0 * l01);
    let height = twice_area / l01;
    [Complex::new(0.0, 0.0), Complex::new(l01, 0.0), Complex::new(along, height)]
}

/// Places the apex of a triangle over segment `a → b` on its right side,
/// given the apex distances and the triangle's area.
fn unfold_apex(a: Complex, b: Complex, dist_a: f64, dist_b: f64, area: f64) -> Complex {
    let len = (b - a).norm();
    let dir = (b - a) / len;
    let along = (dist_a * dist_a - dist_b * dist_b + len * len) / (2.0 * len);
    let height = 2.0 * area / len;
    a + dir * along - dir * Complex::new(0.0, height)
}

/// Flattens face `t` and its edge neighbors isometrically.
pub fn hinge_flatten(mesh: &TriMesh, t: usize) -> Result<HingePatch> {
    if t >= mesh.num_faces() {
        return Err(Error::Invalid(format!("face {t} out of range")));
    }
    let vertices = mesh.face(t);
    let pos = mesh.face_positions(t);
    let area = mesh.face_area(t);
    if !(area > 0.0) {
        return Err(Error::DegenerateFace { face: t, area });
    }
    let corners = layout_triangle(pos);
    let mut neighbors = [None; 3];
    for (e, n) in mesh.adjacency().neighbors(t).iter().enumerate() {
        let Neighbor::Face { face: u, edge: eu } = *n else {
            continue;
        };
        let apex_vertex = mesh.face(u)[(eu + 2) % 3];
        let (va, vb) = (vertices[e], vertices[(e + 1) % 3]);
        let x = mesh.position(apex_vertex);
        let area_u = mesh.face_area(u);
        if !(area_u > 0.0) {
            return Err(Error::DegenerateFace { face: u, area: area_u });
        }
        let apex = unfold_apex(
            corners[e],
            corners[(e + 1) % 3],
            dist3(x, mesh.position(va)),
            dist3(x, mesh.position(vb)),
            area_u,
        );
        neighbors[e] = Some(HingeNeighbor {
            face: u,
            apex_vertex,
            apex,
        });
    }
    Ok(HingePatch {
        face: t,
        vertices,
        corners,
        neighbors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::cross;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn assert_isometric(mesh: &TriMesh, patch: &HingePatch) {
        let check = |pts: [Complex; 3], vs: [usize; 3]| {
            for k in 0..3 {
                let (a, b) = (k, (k + 1) % 3);
                let flat = (pts[a] - pts[b]).norm();
                let orig = dist3(mesh.position(vs[a]), mesh.position(vs[b]));
                assert!((flat - orig).abs() < 1e-10, "{flat} vs {orig}");
            }
        };
        check(patch.corners, patch.vertices);
        for e in 0..3 {
            if let Some((pts, vs)) = patch.neighbor_triangle(e) {
                check(pts, vs);
            }
        }
        let [a, b, cc] = patch.corners;
        assert!(cross(b - a, cc - a) > 0.0);
    }

    #[test]
    fn planar_patch_is_congruent() {
        let pts = vec![c(0.3, 0.1), c(1.4, 0.3), c(0.8, 1.2), c(1.5, -0.7), c(1.7, 1.3), c(-0.2, 1.0)];
        let faces = vec![[0, 1, 2], [1, 0, 3], [2, 1, 4], [0, 2, 5]];
        let mesh = TriMesh::planar(pts.clone(), faces).unwrap();
        let patch = hinge_flatten(&mesh, 0).unwrap();
        assert_isometric(&mesh, &patch);
        // every pairwise distance among the six points is preserved
        let mut flat = [None; 6];
        for k in 0..3 {
            flat[patch.vertices[k]] = Some(patch.corners[k]);
        }
        for n in patch.neighbors.iter().flatten() {
            flat[n.apex_vertex] = Some(n.apex);
        }
        for i in 0..6 {
            for j in 0..6 {
                let d = (flat[i].unwrap() - flat[j].unwrap()).norm();
                assert!((d - (pts[i] - pts[j]).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn right_triangle_with_coplanar_neighbor() {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        let mesh = TriMesh::surface(pos, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        let patch = hinge_flatten(&mesh, 0).unwrap();
        assert_isometric(&mesh, &patch);
        let n = patch.neighbors[1].unwrap();
        assert_eq!(n.apex_vertex, 3);
        assert!((n.apex - c(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn ninety_degree_hinge_matches_two_circle_intersection() {
        // face 0 in the xy-plane, face 1 folded up into the xz-plane along x.
        let pos = vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.5, 1.0, 0.0], [1.2, 0.0, 0.8]];
        let mesh = TriMesh::surface(pos.clone(), vec![[0, 1, 2], [1, 0, 3]]).unwrap();
        let patch = hinge_flatten(&mesh, 0).unwrap();
        assert_isometric(&mesh, &patch);
        // independent construction: intersect circles around (0,0) and (2,0)
        let r0 = dist3(pos[3], pos[0]);
        let r1 = dist3(pos[3], pos[1]);
        let x = (r0 * r0 - r1 * r1 + 4.0) / 4.0;
        let y = -(r0 * r0 - x * x).sqrt();
        let apex = patch.neighbors[0].unwrap().apex;
        assert!((apex - c(x, y)).norm() < 1e-12, "{apex}");
        // unfolding a 90° fold keeps the apex at its in-plane offset
        assert!((apex - c(1.2, -0.8)).norm() < 1e-12);
    }

    #[test]
    fn boundary_edges_have_no_neighbor() {
        let mesh = TriMesh::surface(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let patch = hinge_flatten(&mesh, 0).unwrap();
        assert!(patch.neighbors.iter().all(Option::is_none));
    }
}
