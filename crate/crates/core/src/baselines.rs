//! Reference interpolators: piecewise linear and per-triangle projective.

use crate::error::{Error, Result};
use crate::interpolator::Interpolator;
use crate::mesh::{dist3, TriMesh};
use crate::moebius::Complex;
use crate::pcm::DiscreteMap;

/// The affine map of each face onto its target triangle.
#[derive(Debug, Clone)]
pub struct PlInterpolator {
    mesh: TriMesh,
    targets: Vec<Complex>,
}

impl PlInterpolator {
    pub fn new(mesh: &TriMesh, map: &DiscreteMap) -> Result<Self> {
        map.check_len(mesh)?;
        Ok(Self {
            mesh: mesh.clone(),
            targets: map.targets().to_vec(),
        })
    }

    pub fn pl_evaluate(&self, t: usize, z: Complex) -> Result<Complex> {
        self.evaluate_point(t, z)
    }
}

impl Interpolator for PlInterpolator {
    fn name(&self) -> &str {
        "pl"
    }

    fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    fn evaluate_barycentric(&self, face: usize, bary: [f64; 3]) -> Result<Complex> {
        let f = self.mesh.faces().get(face).ok_or_else(|| Error::Invalid(format!("face {face} out of range")))?;
        Ok(self.targets[f[0]] * bary[0] + self.targets[f[1]] * bary[1] + self.targets[f[2]] * bary[2])
    }
}

/// Per-corner scale factors `e^{u_i}` of one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveFaceData {
    pub scale: [f64; 3],
}

fn check_triangle(l: [f64; 3], strict: bool, what: &str) -> Result<()> {
    if l.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Degenerate(format!("{what} edge lengths {l:?} must be positive")));
    }
    for k in 0..3 {
        let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
        let slack = b + c - a;
        let ok = if strict { slack > 1e-12 * (a + b + c) } else { slack >= -1e-12 * (a + b + c) };
        if !ok {
            return Err(Error::Degenerate(format!("{what} edge lengths {l:?} violate the triangle inequality")));
        }
    }
    Ok(())
}

/// Solves `ℓ'_e = e^{(u_a + u_b)/2} ℓ_e` on the three edges of one triangle.
///
/// Lengths are ordered `(ij, jk, ki)`; the result is `(e^{u_i}, e^{u_j}, e^{u_k})`.
pub fn projective_scale_factors(source: [f64; 3], target: [f64; 3]) -> Result<[f64; 3]> {
    check_triangle(source, true, "source")?;
    check_triangle(target, false, "target")?;
    // per-edge log ratio λ_e = ln(ℓ'_e / ℓ_e), then u_i = λ_ij + λ_ki − λ_jk
    let [ij, jk, ki] = [0, 1, 2].map(|e| (target[e] / source[e]).ln());
    Ok([(ij + ki - jk).exp(), (jk + ij - ki).exp(), (ki + jk - ij).exp()])
}

/// Circumcircle-preserving projective interpolation.
///
/// A point with barycentric coordinates `α` maps to
/// `Σ α_k w_k / s_k  /  Σ α_k / s_k` where `s_k = e^{u_k}` are the face's own
/// scale factors. The factors are solved per face, so neighboring faces only
/// agree along a shared edge when the map is discrete conformal there.
#[derive(Debug, Clone)]
pub struct ProjectiveInterpolator {
    mesh: TriMesh,
    targets: Vec<Complex>,
    faces: Vec<ProjectiveFaceData>,
}

impl ProjectiveInterpolator {
    pub fn new(mesh: &TriMesh, map: &DiscreteMap) -> Result<Self> {
        map.check_len(mesh)?;
        let faces = (0..mesh.num_faces())
            .map(|t| {
                let f = mesh.face(t);
                let edge = |a: usize, b: usize| {
                    (
                        dist3(mesh.position(f[a]), mesh.position(f[b])),
                        (map.get(f[a]) - map.get(f[b])).norm(),
                    )
                };
                let (s_ij, d_ij) = edge(0, 1);
                let (s_jk, d_jk) = edge(1, 2);
                let (s_ki, d_ki) = edge(2, 0);
                projective_scale_factors([s_ij, s_jk, s_ki], [d_ij, d_jk, d_ki])
                    .map(|scale| ProjectiveFaceData { scale })
                    .map_err(|e| Error::Degenerate(format!("face {t}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mesh: mesh.clone(),
            targets: map.targets().to_vec(),
            faces,
        })
    }

    pub fn face_data(&self, t: usize) -> &ProjectiveFaceData {
        &self.faces[t]
    }

    pub fn projective_evaluate(&self, t: usize, z: Complex) -> Result<Complex> {
        self.evaluate_point(t, z)
    }
}

impl Interpolator for ProjectiveInterpolator {
    fn name(&self) -> &str {
        "proj"
    }

    fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    fn evaluate_barycentric(&self, face: usize, bary: [f64; 3]) -> Result<Complex> {
        let f = self.mesh.faces().get(face).ok_or_else(|| Error::Invalid(format!("face {face} out of range")))?;
        let s = self.faces[face].scale;
        let mut num = Complex::new(0.0, 0.0);
        let mut den = 0.0;
        for k in 0..3 {
            let weight = bary[k] / s[k];
            num += self.targets[f[k]] * weight;
            den += weight;
        }
        Ok(num / den)
    }
}
