//! Blended piecewise Möbius interpolation.
//!
//! Inside a face `t` the interpolated transformation is
//!
//! ```text
//! O(z) = exp(½ · Σ_e γ_e(z) Λ_e) · M_t
//! ```
//!
//! where `Λ_e` is the log of the ratio between the neighbor across edge `e`
//! and `t` (zero on boundary edges) and `γ_e` are the edge barycentric
//! coordinates, which equal one on the interior of their edge. On a shared
//! edge both faces produce the same transformation up to sign, and at a
//! vertex every ratio fixes the vertex image, so the map is continuous and
//! interpolates the discrete map.
//!
//! Surfaces are handled per face: the face and its neighbors are unfolded
//! isometrically and the planar construction is applied in that frame.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interpolator::Interpolator;
use crate::mesh::{cross, hinge_flatten, interpolate2, TriMesh};
use crate::moebius::{exp_traceless, log_ratio, Complex, LogMoebius, MoebiusError, MoebiusMatrix};
use crate::pcm::{build_pcm, fit_face_moebius, DiscreteMap, PcmMap};

/// Vertex snap radius relative to the bounding-box diagonal.
pub const VERTEX_SNAP_REL: f64 = 1e-12;

/// Normalized edge weights `(γ_ij, γ_jk, γ_ki)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBarycentric(pub [f64; 3]);

impl EdgeBarycentric {
    pub fn ij(&self) -> f64 {
        self.0[0]
    }
    pub fn jk(&self) -> f64 {
        self.0[1]
    }
    pub fn ki(&self) -> f64 {
        self.0[2]
    }
}

/// Distance from `z` to the line through `a` and `b`.
fn line_distance(z: Complex, a: Complex, b: Complex) -> f64 {
    cross(b - a, z - a).abs() / (b - a).norm()
}

/// Edge barycentric coordinates from distances to the three edge lines:
/// `γ_ij = r_jk·r_ki / s` and cyclic, with `s` the sum of the three products.
pub fn edge_barycentric(z: Complex, corners: &[Complex; 3], vertex_eps: f64) -> Result<EdgeBarycentric> {
    let [zi, zj, zk] = *corners;
    if corners.iter().any(|&v| (z - v).norm() < vertex_eps) {
        return Err(Error::VertexProximity { point: z });
    }
    let scale = (zj - zi).norm_sqr().max((zk - zi).norm_sqr());
    let twice_area = cross(zj - zi, zk - zi);
    if !(twice_area.abs() > 1e-12 * scale) {
        return Err(Error::Degenerate(format!("triangle {corners:?} has no area")));
    }
    let r_ij = line_distance(z, zi, zj);
    let r_jk = line_distance(z, zj, zk);
    let r_ki = line_distance(z, zk, zi);
    let (p_ij, p_jk, p_ki) = (r_jk * r_ki, r_ij * r_ki, r_ij * r_jk);
    let s = p_ij + p_jk + p_ki;
    if !(s > 0.0) {
        return Err(Error::VertexProximity { point: z });
    }
    Ok(EdgeBarycentric([p_ij / s, p_jk / s, p_ki / s]))
}

/// Everything needed to evaluate one face.
#[derive(Debug, Clone)]
pub struct FaceBlendData {
    pub face: usize,
    pub vertices: [usize; 3],
    pub matrix: MoebiusMatrix,
    /// `Λ_ut, Λ_vt, Λ_wt` for edges `ij, jk, ki`; zero on the boundary.
    pub logs: [LogMoebius; 3],
    /// Source corners in the frame the face is evaluated in.
    pub corners: [Complex; 3],
}

/// `γ_ij Λ_ut + γ_jk Λ_vt + γ_ki Λ_wt`.
pub fn blend_log_ratio(data: &FaceBlendData, gamma: &EdgeBarycentric) -> LogMoebius {
    LogMoebius::blend(&[
        (gamma.0[0], data.logs[0]),
        (gamma.0[1], data.logs[1]),
        (gamma.0[2], data.logs[2]),
    ])
}

#[derive(Debug, Clone)]
pub struct BpmInterpolator {
    mesh: TriMesh,
    faces: Vec<FaceBlendData>,
    targets: Option<Vec<Complex>>,
    vertex_eps: f64,
}

impl BpmInterpolator {
    /// Precomputes per-face matrices and log ratios. Planar meshes share one
    /// log per interior edge; surfaces fit each face in its own hinge frame.
    pub fn build(mesh: &TriMesh, map: &DiscreteMap) -> Result<Self> {
        map.check_len(mesh)?;
        let faces = if mesh.is_planar() {
            let pcm = build_pcm(mesh, map)?;
            planar_blend_data(mesh, &pcm)?
        } else {
            curved_blend_data(mesh, map)?
        };
        Ok(Self {
            mesh: mesh.clone(),
            faces,
            targets: Some(map.targets().to_vec()),
            vertex_eps: VERTEX_SNAP_REL * mesh.bbox_diagonal(),
        })
    }

    /// Builds from explicit per-face matrices on a planar mesh. Vertex
    /// snapping then returns `M_t(z_v)` for the face being evaluated.
    pub fn from_pcm(mesh: &TriMesh, pcm: &PcmMap) -> Result<Self> {
        if !mesh.is_planar() {
            return Err(Error::Invalid("from_pcm needs a planar mesh".into()));
        }
        Ok(Self {
            mesh: mesh.clone(),
            faces: planar_blend_data(mesh, pcm)?,
            targets: None,
            vertex_eps: VERTEX_SNAP_REL * mesh.bbox_diagonal(),
        })
    }

    pub fn face_data(&self, t: usize) -> &FaceBlendData {
        &self.faces[t]
    }

    pub fn vertex_eps(&self) -> f64 {
        self.vertex_eps
    }

    /// The blended transformation `O(z)` at a non-vertex point of face `t`,
    /// given in the face's evaluation frame.
    pub fn blended_matrix(&self, t: usize, z: Complex) -> Result<MoebiusMatrix> {
        let data = self.faces.get(t).ok_or_else(|| Error::Invalid(format!("face {t} out of range")))?;
        let gamma = edge_barycentric(z, &data.corners, self.vertex_eps)?;
        let half = blend_log_ratio(data, &gamma).scale(0.5);
        let sqrt_ratio = exp_traceless(&half).map_err(|source| Error::Evaluation { face: t, point: z, source })?;
        Ok(sqrt_ratio * data.matrix)
    }

    /// Image of `z` in face `t` (frame coordinates: planar coordinates for
    /// planar meshes, the hinge frame for surfaces).
    pub fn evaluate(&self, t: usize, z: Complex) -> Result<Complex> {
        let data = self.faces.get(t).ok_or_else(|| Error::Invalid(format!("face {t} out of range")))?;
        for k in 0..3 {
            if (z - data.corners[k]).norm() < self.vertex_eps {
                return self.vertex_value(data, k);
            }
        }
        let m = self.blended_matrix(t, z)?;
        m.apply(z).map_err(|source| Error::Evaluation { face: t, point: z, source })
    }

    /// Image of the surface point `x` of face `t`.
    pub fn evaluate_curved(&self, t: usize, x: [f64; 3]) -> Result<Complex> {
        let data = self.faces.get(t).ok_or_else(|| Error::Invalid(format!("face {t} out of range")))?;
        let bary = self.mesh.barycentric3(t, x);
        self.evaluate(t, interpolate2(&data.corners, bary))
    }

    fn vertex_value(&self, data: &FaceBlendData, corner: usize) -> Result<Complex> {
        match &self.targets {
            Some(w) => Ok(w[data.vertices[corner]]),
            None => data.matrix.apply(data.corners[corner]).map_err(|source| Error::Evaluation {
                face: data.face,
                point: data.corners[corner],
                source,
            }),
        }
    }
}

impl Interpolator for BpmInterpolator {
    fn name(&self) -> &str {
        "bpm"
    }

    fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    fn evaluate_barycentric(&self, face: usize, bary: [f64; 3]) -> Result<Complex> {
        let data = self.faces.get(face).ok_or_else(|| Error::Invalid(format!("face {face} out of range")))?;
        self.evaluate(face, interpolate2(&data.corners, bary))
    }

    fn evaluate_point(&self, face: usize, z: Complex) -> Result<Complex> {
        if !self.mesh.is_planar() {
            return Err(Error::Invalid("planar points need a planar mesh; use evaluate_curved".into()));
        }
        self.evaluate(face, z)
    }
}

fn collect_face_results<T: Send>(results: Vec<(usize, Result<T, MoebiusError>)>) -> Result<Vec<T>> {
    let mut failures = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for (t, r) in results {
        match r {
            Ok(v) => out.push(v),
            Err(e) => failures.push((t, e)),
        }
    }
    match failures.len() {
        0 => Ok(out),
        1 => Err(Error::Face {
            face: failures[0].0,
            source: failures[0].1,
        }),
        _ => Err(Error::Faces(failures)),
    }
}

fn planar_blend_data(mesh: &TriMesh, pcm: &PcmMap) -> Result<Vec<FaceBlendData>> {
    let edges: Vec<_> = mesh.adjacency().interior_edges().collect();
    let logs = edges
        .par_iter()
        .map(|&(t, _, u, _)| {
            // δ_ut = M_u M_t⁻¹; the reverse ratio is its inverse, with the negated log
            let ratio = *pcm.matrix(u) * pcm.matrix(t).inverse();
            (t, log_ratio(&ratio))
        })
        .collect::<Vec<_>>();
    let logs = collect_face_results(logs)?;

    let mut faces: Vec<FaceBlendData> = (0..mesh.num_faces())
        .map(|t| FaceBlendData {
            face: t,
            vertices: mesh.face(t),
            matrix: *pcm.matrix(t),
            logs: [LogMoebius::zero(); 3],
            corners: mesh.face_points(t),
        })
        .collect();
    for (&(t, et, u, eu), log_ut) in edges.iter().zip(logs) {
        faces[t].logs[et] = log_ut;
        faces[u].logs[eu] = -log_ut;
    }
    Ok(faces)
}

fn curved_blend_data(mesh: &TriMesh, map: &DiscreteMap) -> Result<Vec<FaceBlendData>> {
    let patches = (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| hinge_flatten(mesh, t))
        .collect::<Result<Vec<_>>>()?;
    let results = patches
        .par_iter()
        .map(|patch| {
            let t = patch.face;
            let fit = || -> Result<FaceBlendData, MoebiusError> {
                let targets = patch.vertices.map(|v| map.get(v));
                let m_t = fit_face_moebius(patch.corners, targets)?;
                let m_t_inv = m_t.inverse();
                let mut logs = [LogMoebius::zero(); 3];
                for (e, log) in logs.iter_mut().enumerate() {
                    if let Some((pts, vs)) = patch.neighbor_triangle(e) {
                        let m_u = fit_face_moebius(pts, vs.map(|v| map.get(v)))?;
                        *log = log_ratio(&(m_u * m_t_inv))?;
                    }
                }
                Ok(FaceBlendData {
                    face: t,
                    vertices: patch.vertices,
                    matrix: m_t,
                    logs,
                    corners: patch.corners,
                })
            };
            (t, fit())
        })
        .collect::<Vec<_>>();
    collect_face_results(results)
}
