//! Piecewise-compatible Möbius maps.
//!
//! Each face of a planar mesh carries the unique Möbius transformation that
//! sends its three source vertices to their targets. Neighboring faces agree
//! on the images of their shared vertices, but not along the shared edge.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{cross, TriMesh};
use crate::moebius::{Complex, Mat2, MoebiusError, MoebiusMatrix};

/// Coincidence tolerance, relative to the largest pairwise distance.
const COINCIDENT_EPS: f64 = 1e-14;

/// Target position of every mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMap {
    targets: Vec<Complex>,
}

impl DiscreteMap {
    pub fn new(targets: Vec<Complex>) -> Result<Self> {
        if let Some((v, w)) = targets.iter().enumerate().find(|(_, w)| !(w.re.is_finite() && w.im.is_finite())) {
            return Err(Error::Invalid(format!("target of vertex {v} is not finite: {w}")));
        }
        Ok(Self { targets })
    }

    /// Maps every planar vertex through `f`.
    pub fn from_fn(mesh: &TriMesh, f: impl Fn(Complex) -> Complex) -> Result<Self> {
        Self::new((0..mesh.num_vertices()).map(|v| f(mesh.point(v))).collect())
    }

    pub fn identity(mesh: &TriMesh) -> Self {
        Self {
            targets: (0..mesh.num_vertices()).map(|v| mesh.point(v)).collect(),
        }
    }

    /// Applies a global Möbius transformation to every target.
    pub fn compose_left(&self, m: &MoebiusMatrix) -> Result<Self> {
        let targets = self.targets.iter().map(|&w| m.apply(w)).collect::<Result<Vec<_>, _>>()?;
        Self::new(targets)
    }

    pub fn targets(&self) -> &[Complex] {
        &self.targets
    }

    pub fn get(&self, v: usize) -> Complex {
        self.targets[v]
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn face_targets(&self, mesh: &TriMesh, t: usize) -> [Complex; 3] {
        mesh.face(t).map(|v| self.targets[v])
    }

    pub(crate) fn check_len(&self, mesh: &TriMesh) -> Result<()> {
        if self.targets.len() != mesh.num_vertices() {
            return Err(Error::Invalid(format!(
                "map has {} targets but the mesh has {} vertices",
                self.targets.len(),
                mesh.num_vertices()
            )));
        }
        Ok(())
    }
}

/// Per-face Möbius matrices and corner variables `X_{t,i} = 1/(c_t z_i + d_t)`.
#[derive(Debug, Clone)]
pub struct PcmMap {
    matrices: Vec<MoebiusMatrix>,
    corners: Vec<[Complex; 3]>,
}

impl PcmMap {
    /// Wraps arbitrary per-face matrices; corner variables use the mesh's
    /// planar vertex coordinates.
    pub fn from_matrices(mesh: &TriMesh, matrices: Vec<MoebiusMatrix>) -> Result<Self> {
        if matrices.len() != mesh.num_faces() {
            return Err(Error::Invalid(format!(
                "{} matrices for {} faces",
                matrices.len(),
                mesh.num_faces()
            )));
        }
        let corners = matrices
            .iter()
            .enumerate()
            .map(|(t, m)| corner_variables(m, &mesh.face_points(t)))
            .collect();
        Ok(Self { matrices, corners })
    }

    pub fn matrices(&self) -> &[MoebiusMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, t: usize) -> &MoebiusMatrix {
        &self.matrices[t]
    }

    pub fn corner_variables(&self, t: usize) -> &[Complex; 3] {
        &self.corners[t]
    }

    /// `{M_g · M_t}`.
    pub fn compose_left(&self, mesh: &TriMesh, g: &MoebiusMatrix) -> Result<Self> {
        Self::from_matrices(mesh, self.matrices.iter().map(|m| *g * *m).collect())
    }

    /// `{M_t · M_g}`.
    pub fn compose_right(&self, mesh: &TriMesh, g: &MoebiusMatrix) -> Result<Self> {
        Self::from_matrices(mesh, self.matrices.iter().map(|m| *m * *g).collect())
    }
}

fn corner_variables(m: &MoebiusMatrix, z: &[Complex; 3]) -> [Complex; 3] {
    z.map(|zi| (m.c() * zi + m.d()).inv())
}

/// The Möbius transformation taking `z[n]` to `w[n]`, built as `B⁻¹·A`
/// where `A` and `B` send the source and target triples to `(0, 1, ∞)`.
pub fn fit_face_moebius(z: [Complex; 3], w: [Complex; 3]) -> Result<MoebiusMatrix, MoebiusError> {
    check_distinct(&z)?;
    check_distinct(&w)?;
    let a = to_zero_one_infinity(&z);
    let b = to_zero_one_infinity(&w);
    MoebiusMatrix::normalize(b.adjugate() * a)
}

fn check_distinct(p: &[Complex; 3]) -> Result<(), MoebiusError> {
    let d = [(p[0] - p[1]).norm(), (p[1] - p[2]).norm(), (p[2] - p[0]).norm()];
    let scale = d.iter().cloned().fold(0.0, f64::max).max(p.iter().map(|z| z.norm()).fold(0.0, f64::max));
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > COINCIDENT_EPS * scale) {
        return Err(MoebiusError::Degenerate { det_abs: min });
    }
    Ok(())
}

/// Cross-ratio map `z ↦ ((z − z1)(z2 − z3)) / ((z − z3)(z2 − z1))`.
fn to_zero_one_infinity(p: &[Complex; 3]) -> Mat2 {
    let [z1, z2, z3] = *p;
    Mat2::new(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))
}

/// Fits every face of a planar mesh.
pub fn build_pcm(mesh: &TriMesh, map: &DiscreteMap) -> Result<PcmMap> {
    map.check_len(mesh)?;
    if !mesh.is_planar() {
        return Err(Error::Invalid("build_pcm needs a planar mesh; use hinge flattening for surfaces".into()));
    }
    let matrices = (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| fit_face_moebius(mesh.face_points(t), map.face_targets(mesh, t)).map_err(Error::at_face(t)))
        .collect::<Result<Vec<_>>>()?;
    PcmMap::from_matrices(mesh, matrices)
}

/// Largest relative corner mismatch `|M_t(z_v) − w_v| / scale` over all
/// faces and corners. Zero for an exact PCM map.
pub fn compatibility_residual(mesh: &TriMesh, map: &DiscreteMap, pcm: &PcmMap) -> Result<f64> {
    let scale = map
        .targets()
        .iter()
        .map(|w| w.norm())
        .fold(1.0f64, f64::max);
    let mut worst = 0.0f64;
    for t in 0..mesh.num_faces() {
        for (z, w) in mesh.face_points(t).into_iter().zip(map.face_targets(mesh, t)) {
            let image = pcm.matrix(t).apply(z).map_err(Error::at_face(t))?;
            worst = worst.max((image - w).norm() / scale);
        }
    }
    Ok(worst)
}

/// Per-vertex `max_t |X_{t,i}| / min_t |X_{t,i}| − 1` over incident faces.
/// Zero exactly when the map is a discrete conformal equivalence at `i`.
pub fn cetm_deviation(mesh: &TriMesh, pcm: &PcmMap) -> Vec<f64> {
    mesh.vertex_faces()
        .iter()
        .map(|incident| {
            let (lo, hi) = incident.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(t, k)| {
                let x = pcm.corner_variables(t)[k].norm();
                (lo.min(x), hi.max(x))
            });
            if incident.is_empty() {
                0.0
            } else {
                hi / lo - 1.0
            }
        })
        .collect()
}

/// Conformal factor `u_i = 2 ln |X_{·,i}|`, averaged over incident faces.
pub fn conformal_factors(mesh: &TriMesh, pcm: &PcmMap) -> Vec<f64> {
    mesh.vertex_faces()
        .iter()
        .map(|incident| {
            if incident.is_empty() {
                return 0.0;
            }
            let sum: f64 = incident.iter().map(|&(t, k)| 2.0 * pcm.corner_variables(t)[k].norm().ln()).sum();
            sum / incident.len() as f64
        })
        .collect()
}

/// Quasi-conformal distortion `σ_max / σ_min` of the real-linear map taking
/// the source triangle `z` to the target triangle `w`.
///
/// Writing the map as `ζ ↦ aζ + b·conj(ζ)`, the singular values are
/// `|a| ± |b|`. Flipped or collapsed targets (`|a| ≤ |b|`) give `+∞`.
pub fn face_qc_error(z: [Complex; 3], w: [Complex; 3]) -> Result<f64> {
    let (e1, e2) = (z[1] - z[0], z[2] - z[0]);
    let (f1, f2) = (w[1] - w[0], w[2] - w[0]);
    let twice_area = cross(e1, e2);
    let scale = e1.norm_sqr().max(e2.norm_sqr());
    if !(twice_area.abs() > 1e-12 * scale) {
        return Err(Error::Degenerate(format!("zero-area source triangle {z:?}")));
    }
    // e1·conj(e2) − conj(e1)·e2 = −2i·cross(e1, e2)
    let den = Complex::new(0.0, -2.0 * twice_area);
    let a = (f1 * e2.conj() - f2 * e1.conj()) / den;
    let b = (e1 * f2 - e2 * f1) / den;
    let (na, nb) = (a.norm(), b.norm());
    // a source given clockwise reverses the meaning of both coefficients
    let (conformal, anti) = if twice_area > 0.0 { (na, nb) } else { (nb, na) };
    if conformal <= anti {
        return Ok(f64::INFINITY);
    }
    Ok((conformal + anti) / (conformal - anti))
}
