//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the kernel beyond plain data access.
#![allow(dead_code)]

use bpm_core::mesh::Neighbor;
use bpm_core::moebius::Complex;
use bpm_core::{DiscreteMap, TriMesh};

pub type M = [[Complex; 2]; 2];

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

pub fn mul(a: &M, b: &M) -> M {
    let mut r = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn add(a: &M, b: &M) -> M {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn scale(a: &M, s: Complex) -> M {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn det(a: &M) -> Complex {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inv(a: &M) -> M {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn ident() -> M {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn frob(a: &M) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn sub(a: &M, b: &M) -> M {
    add(a, &scale(b, c(-1.0, 0.0)))
}

/// Frobenius distance between `a` and `±b`, whichever is smaller.
pub fn dist_up_to_sign(a: &M, b: &M) -> f64 {
    frob(&sub(a, b)).min(frob(&add(a, b)))
}

pub fn normalize(a: &M) -> M {
    scale(a, det(a).sqrt().inv())
}

pub fn apply(a: &M, z: Complex) -> Complex {
    (a[0][0] * z + a[0][1]) / (a[1][0] * z + a[1][1])
}

/// Solves the 3×3 complex system by Cramer's rule.
fn solve3(a: [[Complex; 3]; 3], b: [Complex; 3]) -> [Complex; 3] {
    let d3 = |m: [[Complex; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = d3(a);
    let mut x = [c(0.0, 0.0); 3];
    for k in 0..3 {
        let mut m = a;
        for r in 0..3 {
            m[r][k] = b[r];
        }
        x[k] = d3(m) / d;
    }
    x
}

/// Normalized Möbius matrix through three pairs, from the linear system
/// `a·z + b − c·z·w = w·d` with `d = 1`.
pub fn fit(z: [Complex; 3], w: [Complex; 3]) -> M {
    let one = c(1.0, 0.0);
    let a = [0, 1, 2].map(|i| [z[i], one, -z[i] * w[i]]);
    let [p, q, r] = solve3(a, w);
    normalize(&[[p, q], [r, one]])
}

/// Principal log of `±d` by eigendecomposition, with the sign chosen by
/// comparing both Frobenius distances to the identity directly.
pub fn log_eig(d: &M) -> M {
    let s = if frob(&sub(d, &ident())) <= frob(&add(d, &ident())) { 1.0 } else { -1.0 };
    let d = scale(d, c(s, 0.0));
    let tau = d[0][0] + d[1][1];
    let root = (tau * tau / 4.0 - 1.0).sqrt();
    let (l1, l2) = (tau / 2.0 + root, tau / 2.0 - root);
    let vec = |l: Complex| {
        if d[0][1].norm() > d[1][0].norm() {
            [d[0][1], l - d[0][0]]
        } else {
            [l - d[1][1], d[1][0]]
        }
    };
    let (v1, v2) = (vec(l1), vec(l2));
    let v = [[v1[0], v2[0]], [v1[1], v2[1]]];
    let diag = [[l1.ln(), c(0.0, 0.0)], [c(0.0, 0.0), l2.ln()]];
    mul(&mul(&v, &diag), &inv(&v))
}

/// Matrix exponential by scaling and squaring a truncated Taylor series.
pub fn exp_series(a: &M) -> M {
    let mut k = 0;
    while frob(a) / f64::from(1u32 << k) > 0.25 {
        k += 1;
    }
    let x = scale(a, c(1.0 / f64::from(1u32 << k), 0.0));
    let mut term = ident();
    let mut sum = ident();
    for n in 1..24 {
        term = scale(&mul(&term, &x), c(1.0 / n as f64, 0.0));
        sum = add(&sum, &term);
    }
    for _ in 0..k {
        sum = mul(&sum, &sum);
    }
    sum
}

fn line_dist(z: Complex, a: Complex, b: Complex) -> f64 {
    let (u, v) = (b - a, z - a);
    (u.re * v.im - u.im * v.re).abs() / u.norm()
}

/// Blended transformation of a planar mesh, rebuilt from scratch.
pub fn blended(mesh: &TriMesh, targets: &[Complex], t: usize, z: Complex) -> M {
    let face_fit = |f: usize| {
        let v = mesh.face(f);
        fit(v.map(|i| mesh.point(i)), v.map(|i| targets[i]))
    };
    blended_with(mesh, &face_fit, t, z)
}

/// Same as [`blended`] for arbitrary per-face matrices.
pub fn blended_with(mesh: &TriMesh, face_matrix: &dyn Fn(usize) -> M, t: usize, z: Complex) -> M {
    let [zi, zj, zk] = mesh.face_points(t);
    let (r_ij, r_jk, r_ki) = (line_dist(z, zi, zj), line_dist(z, zj, zk), line_dist(z, zk, zi));
    let p = [r_jk * r_ki, r_ij * r_ki, r_ij * r_jk];
    let s: f64 = p.iter().sum();
    let mt = face_matrix(t);
    let mut sum = [[c(0.0, 0.0); 2]; 2];
    for (e, n) in mesh.adjacency().neighbors(t).iter().enumerate() {
        if let Neighbor::Face { face, .. } = *n {
            let ratio = mul(&face_matrix(face), &inv(&mt));
            sum = add(&sum, &scale(&log_eig(&ratio), c(0.5 * p[e] / s, 0.0)));
        }
    }
    mul(&exp_series(&sum), &mt)
}

pub fn evaluate(mesh: &TriMesh, map: &DiscreteMap, t: usize, z: Complex) -> Complex {
    apply(&blended(mesh, map.targets(), t, z), z)
}

pub fn to_m(m: &bpm_core::moebius::MoebiusMatrix) -> M {
    [[m.a(), m.b()], [m.c(), m.d()]]
}
