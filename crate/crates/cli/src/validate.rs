//! Property battery run by `bpm validate`.

use std::fmt;

use bpm_core::analysis::{continuity_probe, map_scale};
use bpm_core::corpus::{random_face_samples, random_moebius, random_moebius_around};
use bpm_core::mesh::interpolate2;
use bpm_core::moebius::Complex;
use bpm_core::pcm::build_pcm;
use bpm_core::{BpmInterpolator, DiscreteMap, Interpolator, TriMesh};
use rand_chacha::ChaCha8Rng;

pub const IDENTITY_TOL: f64 = 1e-12;
pub const MOEBIUS_TOL: f64 = 1e-9;
pub const EQUIVARIANCE_TOL: f64 = 1e-8;
pub const CONTINUITY_TOL: f64 = 1e-9;
pub const VERTEX_TOL: f64 = 1e-12;
pub const DET_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.threshold
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<26} {:.3e} (limit {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold
        )
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

/// Runs every check that applies to the input. Distances are relative to the
/// bounding-box diagonal of the relevant image.
pub fn run(mesh: &TriMesh, map: &DiscreteMap, samples: usize, rng: &mut ChaCha8Rng) -> bpm_core::Result<Vec<Check>> {
    let mut checks = Vec::new();
    let bpm = BpmInterpolator::build(mesh, map)?;
    let scale = map_scale(map);
    let pts = random_face_samples(mesh, samples, rng);

    if mesh.is_planar() {
        let diag = mesh.bbox_diagonal();
        let id = BpmInterpolator::build(mesh, &DiscreteMap::identity(mesh))?;
        let err = pts
            .iter()
            .map(|&(t, b)| Ok((id.evaluate_barycentric(t, b)? - interpolate2(&mesh.face_points(t), b)).norm()))
            .collect::<bpm_core::Result<Vec<_>>>()?;
        checks.push(Check {
            name: "identity reproduction",
            value: max_of(err.into_iter()) / diag,
            threshold: IDENTITY_TOL,
        });

        let g = random_moebius(mesh, 1.0, rng);
        let moved = DiscreteMap::from_fn(mesh, |z| g.apply(z).expect("pole is off the mesh"))?;
        let gm = BpmInterpolator::build(mesh, &moved)?;
        let err = pts
            .iter()
            .map(|&(t, b)| {
                let z = interpolate2(&mesh.face_points(t), b);
                Ok((gm.evaluate_barycentric(t, b)? - g.apply(z)?).norm())
            })
            .collect::<bpm_core::Result<Vec<_>>>()?;
        checks.push(Check {
            name: "moebius reproduction",
            value: max_of(err.into_iter()) / map_scale(&moved),
            threshold: MOEBIUS_TOL,
        });

        let pcm = build_pcm(mesh, map)?;
        let g = random_moebius_around(Complex::new(0.0, 0.0), 1.0, 0.5, rng);
        let base = BpmInterpolator::from_pcm(mesh, &pcm)?;
        let left = BpmInterpolator::from_pcm(mesh, &pcm.compose_left(mesh, &g)?)?;
        let right = BpmInterpolator::from_pcm(mesh, &pcm.compose_right(mesh, &g)?)?;
        let (mut l_err, mut r_err) = (0.0f64, 0.0f64);
        for &(t, b) in &pts {
            let z = interpolate2(&mesh.face_points(t), b);
            let o = base.blended_matrix(t, z)?;
            l_err = l_err.max(left.blended_matrix(t, z)?.distance_up_to_sign(&(g * o)));
            r_err = r_err.max(right.blended_matrix(t, z)?.distance_up_to_sign(&(o * g)));
        }
        checks.push(Check {
            name: "left equivariance",
            value: l_err,
            threshold: EQUIVARIANCE_TOL,
        });
        checks.push(Check {
            name: "right equivariance",
            value: r_err,
            threshold: EQUIVARIANCE_TOL,
        });
    }

    // post-composition with a Möbius map of the target commutes with interpolation
    let targets = map.targets();
    let center = targets.iter().sum::<Complex>() / targets.len() as f64;
    let g = random_moebius_around(center, scale, 1.0, rng);
    let moved = map.compose_left(&g)?;
    let gm = BpmInterpolator::build(mesh, &moved)?;
    let err = pts
        .iter()
        .map(|&(t, b)| Ok((gm.evaluate_barycentric(t, b)? - g.apply(bpm.evaluate_barycentric(t, b)?)?).norm()))
        .collect::<bpm_core::Result<Vec<_>>>()?;
    checks.push(Check {
        name: "target moebius commutes",
        value: max_of(err.into_iter()) / map_scale(&moved),
        threshold: MOEBIUS_TOL,
    });

    let mut vertex_err = 0.0f64;
    for t in 0..mesh.num_faces() {
        for (k, &v) in mesh.face(t).iter().enumerate() {
            let mut b = [0.0; 3];
            b[k] = 1.0;
            vertex_err = vertex_err.max((bpm.evaluate_barycentric(t, b)? - map.get(v)).norm());
        }
    }
    checks.push(Check {
        name: "vertex interpolation",
        value: vertex_err / scale,
        threshold: VERTEX_TOL,
    });

    checks.push(Check {
        name: if mesh.is_planar() { "edge continuity" } else { "curved consistency" },
        value: continuity_probe(&bpm, 20)?.max_gap / scale,
        threshold: CONTINUITY_TOL,
    });

    let det_err = pts
        .iter()
        .map(|&(t, b)| {
            let z = interpolate2(&bpm.face_data(t).corners, b);
            Ok((bpm.blended_matrix(t, z)?.det() - 1.0).norm())
        })
        .collect::<bpm_core::Result<Vec<_>>>()?;
    checks.push(Check {
        name: "unit determinant",
        value: max_of(det_err.into_iter()),
        threshold: DET_TOL,
    });
    Ok(checks)
}
