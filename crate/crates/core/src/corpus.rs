//! Seeded synthetic test inputs: meshes, analytic maps and exact discrete
//! conformal examples.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::moebius::{Complex, MoebiusMatrix};
use crate::pcm::DiscreteMap;

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A named source mesh with a discrete map.
#[derive(Debug, Clone)]
pub struct Example {
    pub name: String,
    pub mesh: TriMesh,
    pub map: DiscreteMap,
    /// The map is discrete conformal, exactly or up to sampling error.
    pub conformal: bool,
}

fn grid_faces(nx: usize, ny: usize) -> Vec<[usize; 3]> {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            // alternate diagonals so no direction is preferred
            if (i + j) % 2 == 0 {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            } else {
                faces.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
                faces.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
    faces
}

/// Regular `nx × ny` grid of squares split in two, over `[origin, origin + size]`.
pub fn grid(nx: usize, ny: usize, origin: Complex, size: Complex) -> Result<TriMesh> {
    let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            pts.push(origin + c(size.re * i as f64 / nx as f64, size.im * j as f64 / ny as f64));
        }
    }
    TriMesh::planar(pts, grid_faces(nx, ny))
}

/// Grid with interior vertices displaced by up to `amount` cell widths.
pub fn jittered_grid(n: usize, origin: Complex, size: Complex, amount: f64, seed: u64) -> Result<TriMesh> {
    let mut r = rng(seed);
    let (hx, hy) = (size.re / n as f64, size.im / n as f64);
    let mut pts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let mut p = origin + c(hx * i as f64, hy * j as f64);
            if i > 0 && i < n && j > 0 && j < n {
                p += c(hx * amount * r.gen_range(-1.0..1.0), hy * amount * r.gen_range(-1.0..1.0));
            }
            pts.push(p);
        }
    }
    TriMesh::planar(pts, grid_faces(n, n))
}

/// Grid whose spacing grows geometrically along x.
pub fn graded_grid(n: usize, origin: Complex, size: Complex, ratio: f64) -> Result<TriMesh> {
    let xs: Vec<f64> = if (ratio - 1.0).abs() < 1e-12 {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    } else {
        (0..=n).map(|i| (ratio.powi(i as i32) - 1.0) / (ratio.powi(n as i32) - 1.0)).collect()
    };
    let mut pts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for &x in &xs {
            pts.push(origin + c(size.re * x, size.im * j as f64 / n as f64));
        }
    }
    TriMesh::planar(pts, grid_faces(n, n))
}

/// Planar annulus `r0 ≤ |z| ≤ r1`, so the domain has a hole around 0.
pub fn annulus(rings: usize, sectors: usize, r0: f64, r1: f64) -> Result<TriMesh> {
    let mut pts = Vec::with_capacity((rings + 1) * sectors);
    for j in 0..=rings {
        let r = r0 + (r1 - r0) * j as f64 / rings as f64;
        // stagger alternate rings by half a sector for better shaped triangles
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..sectors {
            pts.push(Complex::from_polar(r, 2.0 * PI * (i as f64 + shift) / sectors as f64));
        }
    }
    let idx = |i: usize, j: usize| j * sectors + i % sectors;
    let mut faces = Vec::with_capacity(2 * rings * sectors);
    for j in 0..rings {
        for i in 0..sectors {
            if j % 2 == 0 {
                faces.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
                faces.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            } else {
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            }
        }
    }
    // the loops above wind clockwise
    let faces = faces.into_iter().map(|[a, b, cc]| [a, cc, b]).collect();
    TriMesh::planar(pts, faces)
}

/// Unit-sphere cap around the north pole up to polar angle `max_polar`, with
/// UVs from stereographic projection (a conformal map).
pub fn sphere_cap(rings: usize, sectors: usize, max_polar: f64) -> Result<(TriMesh, DiscreteMap)> {
    let mut pos = vec![[0.0, 0.0, 1.0]];
    for j in 1..=rings {
        let theta = max_polar * j as f64 / rings as f64;
        for i in 0..sectors {
            let phi = 2.0 * PI * i as f64 / sectors as f64;
            pos.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    let idx = |i: usize, j: usize| 1 + (j - 1) * sectors + i % sectors;
    let mut faces = Vec::new();
    for i in 0..sectors {
        faces.push([0, idx(i, 1), idx(i + 1, 1)]);
    }
    for j in 1..rings {
        for i in 0..sectors {
            faces.push([idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)]);
        }
    }
    let uv = pos.iter().map(|p| c(p[0], p[1]) / (1.0 + p[2])).collect();
    Ok((TriMesh::surface(pos, faces)?, DiscreteMap::new(uv)?))
}

/// Open cylinder patch of radius `radius` over angle `arc`, unrolled
/// isometrically.
pub fn cylinder(around: usize, along: usize, radius: f64, arc: f64, height: f64) -> Result<(TriMesh, DiscreteMap)> {
    let mut pos = Vec::new();
    let mut uv = Vec::new();
    for j in 0..=along {
        let y = height * j as f64 / along as f64;
        for i in 0..=around {
            let phi = arc * i as f64 / around as f64;
            pos.push([radius * phi.cos(), y, radius * phi.sin()]);
            uv.push(c(radius * phi, y));
        }
    }
    Ok((TriMesh::surface(pos, grid_faces(around, along))?, DiscreteMap::new(uv)?))
}

/// Smooth random height field over the unit square; UVs are the `(x, y)`
/// projection, which is not conformal where the surface is steep.
pub fn heightfield(n: usize, amplitude: f64, seed: u64) -> Result<(TriMesh, DiscreteMap)> {
    let mut r = rng(seed);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| (r.gen_range(0.1..0.9), r.gen_range(0.1..0.9), r.gen_range(0.15..0.3), r.gen_range(-1.0..1.0)))
        .collect();
    let mut pos = Vec::new();
    let mut uv = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            let h: f64 = bumps
                .iter()
                .map(|&(bx, by, w, a)| a * (-((x - bx).powi(2) + (y - by).powi(2)) / (w * w)).exp())
                .sum();
            pos.push([x, y, amplitude * h]);
            uv.push(c(x, y));
        }
    }
    Ok((TriMesh::surface(pos, grid_faces(n, n))?, DiscreteMap::new(uv)?))
}

/// Random normalized Möbius matrix whose pole lies at least `clearance`
/// bounding-box diagonals away from the mesh.
pub fn random_moebius(mesh: &TriMesh, clearance: f64, rng: &mut impl Rng) -> MoebiusMatrix {
    let (lo, hi) = mesh.bbox();
    let center = c(0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]));
    random_moebius_around(center, mesh.bbox_diagonal(), clearance, rng)
}

/// Random normalized Möbius matrix with its pole at least
/// `clearance + ½` diagonals from `center`.
pub fn random_moebius_around(center: Complex, diag: f64, clearance: f64, rng: &mut impl Rng) -> MoebiusMatrix {
    loop {
        let pole = center + Complex::from_polar(diag * (clearance + 0.5 + rng.gen_range(0.0..1.0)), rng.gen_range(0.0..2.0 * PI));
        let cc = Complex::from_polar(rng.gen_range(0.5..2.0) / diag, rng.gen_range(0.0..2.0 * PI));
        let a = Complex::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
        let b = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * diag;
        if let Ok(m) = MoebiusMatrix::from_entries(a, b, cc, -cc * pole) {
            if (a * (-cc * pole) - b * cc).norm() > 1e-3 {
                return m;
            }
        }
    }
}

/// `n` uniformly distributed interior points as `(face, barycentric)`,
/// faces picked in proportion to area.
pub fn random_face_samples(mesh: &TriMesh, n: usize, rng: &mut impl Rng) -> Vec<(usize, [f64; 3])> {
    let mut cumulative = Vec::with_capacity(mesh.num_faces());
    let mut total = 0.0;
    for t in 0..mesh.num_faces() {
        total += mesh.face_area(t);
        cumulative.push(total);
    }
    (0..n)
        .map(|_| {
            let pick = rng.gen_range(0.0..total);
            let t = cumulative.partition_point(|&a| a <= pick).min(mesh.num_faces() - 1);
            // keep away from the vertices so no sample snaps
            let (mut r1, mut r2): (f64, f64) = (rng.gen_range(1e-6..1.0), rng.gen_range(1e-6..1.0 - 1e-6));
            r1 = r1.sqrt();
            r2 *= r1;
            (t, [1.0 - r1, r1 - r2, r2])
        })
        .collect()
}

/// Strongly non-conformal smooth map: a radius-dependent twist followed by an
/// anisotropic stretch.
pub fn twist_stretch(z: Complex, center: Complex) -> Complex {
    let d = z - center;
    let twisted = d * Complex::from_polar(1.0, 0.8 * d.norm());
    center + c(1.5 * twisted.re, 0.8 * twisted.im + 0.15 * twisted.re * twisted.re)
}

/// Places each face from per-edge target lengths `ℓ'_ij = e^{(u_i+u_j)/2} ℓ_ij`
/// by unfolding across edges in breadth-first order. Only consistent on
/// meshes without interior vertices, where any `u` is realizable.
pub fn layout_conformal(mesh: &TriMesh, u: &[f64]) -> Result<DiscreteMap> {
    if !mesh.is_planar() {
        return Err(Error::Invalid("layout_conformal needs a planar source".into()));
    }
    let len = |a: usize, b: usize| (mesh.point(a) - mesh.point(b)).norm() * (0.5 * (u[a] + u[b])).exp();
    let mut w: Vec<Option<Complex>> = vec![None; mesh.num_vertices()];
    let mut placed = vec![false; mesh.num_faces()];
    let mut queue = std::collections::VecDeque::new();
    for seed in 0..mesh.num_faces() {
        if placed[seed] {
            continue;
        }
        let [i, j, _] = mesh.face(seed);
        if w[i].is_none() && w[j].is_none() {
            w[i] = Some(mesh.point(i));
            w[j] = Some(mesh.point(i) + (mesh.point(j) - mesh.point(i)) / (mesh.point(j) - mesh.point(i)).norm() * len(i, j));
        }
        queue.push_back(seed);
        placed[seed] = true;
        while let Some(t) = queue.pop_front() {
            let f = mesh.face(t);
            let known: Vec<usize> = (0..3).filter(|&k| w[f[k]].is_some()).collect();
            if known.len() < 3 {
                // rotate so the two known corners come first in CCW order
                let k = (0..3)
                    .find(|&k| w[f[k]].is_some() && w[f[(k + 1) % 3]].is_some())
                    .ok_or_else(|| Error::Invalid(format!("face {t} reached with fewer than two placed corners")))?;
                let (a, b, cv) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                let (pa, pb) = (w[a].unwrap(), w[b].unwrap());
                let (l_ab, l_bc, l_ca) = ((pb - pa).norm(), len(b, cv), len(cv, a));
                let cos = (l_ab * l_ab + l_ca * l_ca - l_bc * l_bc) / (2.0 * l_ab * l_ca);
                if !(cos.abs() < 1.0) {
                    return Err(Error::Degenerate(format!("face {t}: scaled lengths violate the triangle inequality")));
                }
                w[cv] = Some(pa + (pb - pa) / l_ab * Complex::from_polar(l_ca, cos.acos()));
            }
            for n in mesh.adjacency().neighbors(t) {
                if let Some(u) = n.face() {
                    if !placed[u] {
                        placed[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
    }
    DiscreteMap::new(w.into_iter().map(|p| p.expect("every vertex lies on a face")).collect())
}

/// Triangle strip with all vertices on the boundary.
pub fn strip(n: usize, width: f64, height: f64) -> Result<TriMesh> {
    grid(n, 1, c(0.0, 0.0), c(width, height))
}

/// Exact discrete conformal map on a strip from random vertex scale factors.
pub fn conformal_strip(n: usize, spread: f64, seed: u64) -> Result<(TriMesh, DiscreteMap)> {
    let mesh = strip(n, n as f64 * 0.5, 0.5)?;
    let mut r = rng(seed);
    let u: Vec<f64> = (0..mesh.num_vertices()).map(|_| r.gen_range(-spread..spread)).collect();
    let map = layout_conformal(&mesh, &u)?;
    Ok((mesh, map))
}

/// Two triangles sharing an edge, mapped by an exact discrete conformal map.
pub fn conformal_pair(seed: u64) -> Result<(TriMesh, DiscreteMap)> {
    let mesh = two_triangles()?;
    let mut r = rng(seed);
    let u: Vec<f64> = (0..4).map(|_| r.gen_range(-0.4..0.4)).collect();
    let map = layout_conformal(&mesh, &u)?;
    Ok((mesh, map))
}

fn two_triangles() -> Result<TriMesh> {
    TriMesh::planar(
        vec![c(0.0, 0.0), c(1.0, 0.0), c(1.1, 0.9), c(0.1, 1.0)],
        vec![[0, 1, 2], [0, 2, 3]],
    )
}

/// Two triangles whose map scales the edges inconsistently with any vertex
/// scale factors.
pub fn non_conformal_pair() -> Result<(TriMesh, DiscreteMap)> {
    let mesh = two_triangles()?;
    let map = DiscreteMap::new(vec![c(0.0, 0.0), c(1.6, 0.1), c(1.4, 0.8), c(0.2, 1.1)])?;
    Ok((mesh, map))
}

/// A central triangle `t = (0, 1, 2)` with its three edge neighbors, whose
/// apexes are vertices 3, 4, 5 (across edges 01, 12, 20).
pub fn hinge_star() -> Result<TriMesh> {
    let z = [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.8)];
    let reflect = |p: Complex, a: Complex, b: Complex| {
        let d = (b - a) / (b - a).norm();
        a + d * ((p - a) / d).conj()
    };
    let pts = vec![z[0], z[1], z[2], reflect(z[2], z[0], z[1]), reflect(z[0], z[1], z[2]), reflect(z[1], z[2], z[0])];
    TriMesh::planar(pts, vec![[0, 1, 2], [1, 0, 3], [2, 1, 4], [0, 2, 5]])
}

/// Identity on [`hinge_star`] except for the apex across edge `20`, which
/// is moved by the Möbius map fixing vertices 0 and 2 with multiplier
/// `e^{-extremity}`. The three other faces stay put, and the log ratio across
/// that edge grows linearly with `extremity`.
pub fn extreme_hinge(extremity: f64) -> Result<(TriMesh, DiscreteMap)> {
    let mesh = hinge_star()?;
    let mut w: Vec<Complex> = mesh.positions().iter().map(|p| c(p[0], p[1])).collect();
    let (z0, z2) = (w[0], w[2]);
    // in ζ = (z − z0)/(z − z2) the map is ζ ↦ kζ
    let zeta = (-extremity).exp() * (w[5] - z0) / (w[5] - z2);
    w[5] = (z0 - zeta * z2) / (1.0 - zeta);
    Ok((mesh, DiscreteMap::new(w)?))
}

/// The shipped test inputs, all between 10 and 5000 faces.
pub fn corpus(seed: u64) -> Result<Vec<Example>> {
    let mut r = rng(seed);
    let mut out = Vec::new();

    let g = grid(12, 12, c(-1.0, -1.0), c(2.0, 2.0))?;
    let m = random_moebius(&g, 1.0, &mut r);
    out.push(Example {
        name: "grid-moebius".into(),
        map: DiscreteMap::from_fn(&g, |z| m.apply(z).expect("pole is off the mesh"))?,
        mesh: g,
        conformal: true,
    });

    let a = annulus(6, 32, 0.5, 1.5)?;
    out.push(Example {
        name: "annulus-square".into(),
        map: DiscreteMap::from_fn(&a, |z| z * z)?,
        mesh: a,
        conformal: true,
    });

    let j = jittered_grid(16, c(0.0, 0.0), c(1.0, 1.0), 0.3, r.gen())?;
    out.push(Example {
        name: "jittered-exp".into(),
        map: DiscreteMap::from_fn(&j, |z| (z * c(1.5, 0.5)).exp())?,
        mesh: j,
        conformal: true,
    });

    let gr = graded_grid(14, c(0.0, 0.0), c(1.0, 1.0), 1.15)?;
    out.push(Example {
        name: "graded-twist".into(),
        map: DiscreteMap::from_fn(&gr, |z| twist_stretch(z, c(0.5, 0.5)))?,
        mesh: gr,
        conformal: false,
    });

    let (s, sm) = conformal_strip(10, 0.3, r.gen())?;
    out.push(Example {
        name: "strip-cetm".into(),
        mesh: s,
        map: sm,
        conformal: true,
    });

    let (cap, cm) = sphere_cap(8, 24, 1.2)?;
    out.push(Example {
        name: "sphere-cap".into(),
        mesh: cap,
        map: cm,
        conformal: true,
    });

    let (cyl, ym) = cylinder(16, 8, 1.0, 0.75 * 2.0 * PI, 2.0)?;
    out.push(Example {
        name: "cylinder".into(),
        mesh: cyl,
        map: ym,
        conformal: true,
    });

    let (hf, hm) = heightfield(14, 0.3, r.gen())?;
    out.push(Example {
        name: "heightfield".into(),
        mesh: hf,
        map: hm,
        conformal: false,
    });

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcm::{build_pcm, cetm_deviation};

    #[test]
    fn corpus_sizes_are_in_range() {
        for ex in corpus(7).unwrap() {
            let n = ex.mesh.num_faces();
            assert!((10..=5000).contains(&n), "{} has {n} faces", ex.name);
            assert_eq!(ex.map.len(), ex.mesh.num_vertices());
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = corpus(3).unwrap();
        let b = corpus(3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.map.targets(), y.map.targets());
        }
    }

    #[test]
    fn layout_reproduces_scaled_lengths() {
        let (mesh, map) = conformal_strip(6, 0.3, 11).unwrap();
        let pcm = build_pcm(&mesh, &map).unwrap();
        // exact discrete conformality: |X_{t,i}| agrees across faces
        assert!(cetm_deviation(&mesh, &pcm).iter().all(|&d| d < 1e-12));
        for t in 0..mesh.num_faces() {
            let w = map.face_targets(&mesh, t);
            assert!(crate::mesh::cross(w[1] - w[0], w[2] - w[0]) > 0.0);
        }
    }

    #[test]
    fn non_conformal_pair_is_not_cetm() {
        let (mesh, map) = non_conformal_pair().unwrap();
        let pcm = build_pcm(&mesh, &map).unwrap();
        assert!(cetm_deviation(&mesh, &pcm).iter().any(|&d| d > 1e-3));
    }

    #[test]
    fn stereographic_uvs_are_nearly_conformal() {
        let (mesh, map) = sphere_cap(6, 16, 1.0).unwrap();
        for t in 0..mesh.num_faces() {
            let q = crate::pcm::face_qc_error(mesh.face_local_coords(t), map.face_targets(&mesh, t)).unwrap();
            assert!(q < 1.2, "face {t}: {q}");
        }
    }
}
