use crate::error::Result;
use crate::mesh::{interpolate2, TriMesh};
use crate::moebius::Complex;

/// A continuous map defined face by face on a triangle mesh.
///
/// Points are addressed by face and barycentric coordinates so the same
/// interface serves planar meshes and surfaces. Analysis code pairs the
/// images with [`TriMesh::face_local_coords`] for source geometry.
pub trait Interpolator: Sync {
    fn name(&self) -> &str;

    fn mesh(&self) -> &TriMesh;

    /// Image of the point with barycentric coordinates `bary` in `face`.
    fn evaluate_barycentric(&self, face: usize, bary: [f64; 3]) -> Result<Complex>;

    /// Image of a planar point of `face` (planar meshes only).
    fn evaluate_point(&self, face: usize, z: Complex) -> Result<Complex> {
        let corners = self.mesh().face_points(face);
        self.evaluate_barycentric(face, crate::mesh::barycentric2(z, &corners))
    }
}

/// Source point of a face in its local planar frame.
pub fn local_point(mesh: &TriMesh, face: usize, bary: [f64; 3]) -> Complex {
    interpolate2(&mesh.face_local_coords(face), bary)
}
