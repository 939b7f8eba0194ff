//! Distortion and continuity measurements for interpolators.
//!
//! Quasi-conformal error is sampled by splitting every source face 1:4
//! `levels` times (a regular barycentric grid with `2^levels` segments per
//! edge) and evaluating the interpolator at the grid vertices. The error of
//! each small triangle is the singular-value ratio of the linear map onto
//! its image.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interpolator::{local_point, Interpolator};
use crate::mesh::{cross, TriMesh};
use crate::moebius::Complex;
use crate::pcm::{face_qc_error, DiscreteMap};

pub const DEFAULT_LEVELS: u32 = 4;

/// Lower edges of the QC histogram bins; the last bin is open and holds `∞`.
pub const DEFAULT_HISTOGRAM_EDGES: [f64; 11] = [1.0, 1.001, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0];

/// Regular barycentric grid of a face split 1:4 `levels` times.
#[derive(Debug, Clone)]
pub struct SubdivisionGrid {
    pub segments: usize,
    pub points: Vec<[f64; 3]>,
    /// Counterclockwise index triples into `points`.
    pub triangles: Vec<[usize; 3]>,
}

impl SubdivisionGrid {
    pub fn new(levels: u32) -> Self {
        let n = 1usize << levels;
        Self::with_segments(n)
    }

    pub fn with_segments(n: usize) -> Self {
        assert!(n >= 1);
        // point (a, b) has barycentric coordinates (1 − a/n − b/n, a/n, b/n),
        // stored row by row in b
        let mut points = Vec::with_capacity((n + 1) * (n + 2) / 2);
        let mut offsets = Vec::with_capacity(n + 1);
        for b in 0..=n {
            offsets.push(points.len());
            for a in 0..=(n - b) {
                points.push([(n - a - b) as f64 / n as f64, a as f64 / n as f64, b as f64 / n as f64]);
            }
        }
        let at = |a: usize, b: usize| offsets[b] + a;
        let mut triangles = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..(n - b) {
                triangles.push([at(a, b), at(a + 1, b), at(a, b + 1)]);
                if a + b + 2 <= n {
                    triangles.push([at(a + 1, b), at(a + 1, b + 1), at(a, b + 1)]);
                }
            }
        }
        Self {
            segments: n,
            points,
            triangles,
        }
    }
}

/// Histogram over QC values.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(edges: &[f64], values: impl IntoIterator<Item = f64>) -> Self {
        let mut counts = vec![0; edges.len()];
        for v in values {
            let bin = edges.iter().rposition(|&e| v >= e).unwrap_or(0);
            counts[bin] += 1;
        }
        Self {
            edges: edges.to_vec(),
            counts,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Sampled quasi-conformal distortion of one interpolator.
#[derive(Debug, Clone)]
pub struct QcReport {
    pub interpolator: String,
    pub levels: u32,
    /// QC of every refined triangle, grouped by input face; `∞` marks flips.
    pub values: Vec<Vec<f64>>,
    pub face_max: Vec<f64>,
    /// Mean over the finite samples of each face.
    pub face_mean: Vec<f64>,
    pub histogram: Histogram,
    pub flipped: usize,
}

impl QcReport {
    pub fn sample_count(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn max(&self) -> f64 {
        self.face_max.iter().cloned().fold(1.0, f64::max)
    }

    /// Mean over all finite samples.
    pub fn mean(&self) -> f64 {
        let (sum, n) = self
            .values
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
        if n == 0 {
            f64::INFINITY
        } else {
            sum / n as f64
        }
    }
}

/// Images of the grid points of every face, evaluated inside the parent face.
pub fn sample_grid(interp: &dyn Interpolator, grid: &SubdivisionGrid) -> Result<Vec<Vec<Complex>>> {
    (0..interp.mesh().num_faces())
        .into_par_iter()
        .map(|t| grid.points.iter().map(|&b| interp.evaluate_barycentric(t, b)).collect())
        .collect()
}

pub fn qc_map(interp: &dyn Interpolator, levels: u32) -> Result<QcReport> {
    qc_map_with_edges(interp, levels, &DEFAULT_HISTOGRAM_EDGES)
}

pub fn qc_map_with_edges(interp: &dyn Interpolator, levels: u32, edges: &[f64]) -> Result<QcReport> {
    if levels < 1 {
        return Err(Error::Invalid("qc_map needs at least one subdivision level".into()));
    }
    let mesh = interp.mesh();
    let grid = SubdivisionGrid::new(levels);
    let images = sample_grid(interp, &grid)?;
    let values = images
        .par_iter()
        .enumerate()
        .map(|(t, img)| {
            let src: Vec<Complex> = grid.points.iter().map(|&b| local_point(mesh, t, b)).collect();
            grid.triangles
                .iter()
                .map(|tri| face_qc_error(tri.map(|k| src[k]), tri.map(|k| img[k])))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let face_max = values.iter().map(|v| v.iter().cloned().fold(1.0, f64::max)).collect();
    let face_mean = values
        .iter()
        .map(|v| {
            let finite: Vec<f64> = v.iter().cloned().filter(|x| x.is_finite()).collect();
            if finite.is_empty() {
                f64::INFINITY
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            }
        })
        .collect();
    let flipped = values.iter().flatten().filter(|v| !v.is_finite()).count();
    let histogram = Histogram::new(edges, values.iter().flatten().cloned());
    Ok(QcReport {
        interpolator: interp.name().to_string(),
        levels,
        values,
        face_max,
        face_mean,
        histogram,
        flipped,
    })
}

/// QC of the discrete map itself: the affine map of each face.
pub fn discrete_qc(mesh: &TriMesh, map: &DiscreteMap) -> Result<Vec<f64>> {
    (0..mesh.num_faces())
        .map(|t| face_qc_error(mesh.face_local_coords(t), map.face_targets(mesh, t)))
        .collect()
}

/// A face whose sampled QC exceeds the QC of the discrete map on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcViolation {
    pub face: usize,
    pub sampled: f64,
    pub discrete: f64,
}

/// Faces with `sampled max > discrete + tol`. Reported, not enforced.
pub fn bounded_qc_violations(report: &QcReport, discrete: &[f64], tol: f64) -> Vec<QcViolation> {
    report
        .face_max
        .iter()
        .zip(discrete)
        .enumerate()
        .filter(|(_, (&s, &d))| !(s <= d + tol))
        .map(|(face, (&sampled, &discrete))| QcViolation {
            face,
            sampled,
            discrete,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGap {
    pub faces: (usize, usize),
    pub vertices: (usize, usize),
    pub max_gap: f64,
    pub samples: usize,
}

/// Two-sided evaluation gaps along interior edges.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub interpolator: String,
    pub edges: Vec<EdgeGap>,
    pub max_gap: f64,
}

/// Evaluates each interior edge from both adjacent faces at
/// `samples_per_edge` uniform interior points.
pub fn continuity_probe(interp: &dyn Interpolator, samples_per_edge: usize) -> Result<ContinuityReport> {
    let mesh = interp.mesh();
    let edges: Vec<_> = mesh.adjacency().interior_edges().collect();
    let gaps = edges
        .par_iter()
        .map(|&(t, et, u, eu)| {
            let ft = mesh.face(t);
            let (va, vb) = (ft[et], ft[(et + 1) % 3]);
            let fu = mesh.face(u);
            // in u the edge runs vb → va
            debug_assert_eq!((fu[eu], fu[(eu + 1) % 3]), (vb, va));
            let mut max_gap = 0.0f64;
            for k in 0..samples_per_edge {
                let s = (k as f64 + 0.5) / samples_per_edge as f64;
                let mut bt = [0.0; 3];
                bt[et] = 1.0 - s;
                bt[(et + 1) % 3] = s;
                let mut bu = [0.0; 3];
                bu[(eu + 1) % 3] = 1.0 - s;
                bu[eu] = s;
                let wt = interp.evaluate_barycentric(t, bt)?;
                let wu = interp.evaluate_barycentric(u, bu)?;
                max_gap = max_gap.max((wt - wu).norm());
            }
            Ok(EdgeGap {
                faces: (t, u),
                vertices: (va, vb),
                max_gap,
                samples: samples_per_edge,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_gap = gaps.iter().map(|g| g.max_gap).fold(0.0, f64::max);
    Ok(ContinuityReport {
        interpolator: interp.name().to_string(),
        edges: gaps,
        max_gap,
    })
}

/// Faces where a finite-difference Jacobian of the map is non-positive at
/// some sample of a `density × density` grid of cell centroids.
pub fn injectivity_probe(interp: &dyn Interpolator, density: usize) -> Vec<usize> {
    let n = density.max(1);
    let mut samples = Vec::new();
    for b in 0..n {
        for a in 0..(n - b) {
            samples.push([(a as f64 + 1.0 / 3.0) / n as f64, (b as f64 + 1.0 / 3.0) / n as f64]);
            if a + b + 2 <= n {
                samples.push([(a as f64 + 2.0 / 3.0) / n as f64, (b as f64 + 2.0 / 3.0) / n as f64]);
            }
        }
    }
    let h = 1e-4 / n as f64;
    let mesh = interp.mesh();
    (0..mesh.num_faces())
        .into_par_iter()
        .filter(|&t| {
            let eval = |s: f64, r: f64| interp.evaluate_barycentric(t, [1.0 - s - r, s, r]);
            samples.iter().any(|&[s, r]| {
                let jac = || -> Result<f64> {
                    let ds = (eval(s + h, r)? - eval(s - h, r)?) / (2.0 * h);
                    let dr = (eval(s, r + h)? - eval(s, r - h)?) / (2.0 * h);
                    Ok(cross(ds, dr))
                };
                !matches!(jac(), Ok(j) if j > 0.0)
            })
        })
        .collect()
}

/// One interpolator's line in a comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub qc: QcReport,
    pub continuity: ContinuityReport,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub levels: u32,
    pub scale: f64,
    pub discrete: Vec<f64>,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare(
    interpolators: &[&dyn Interpolator],
    map: &DiscreteMap,
    levels: u32,
    samples_per_edge: usize,
) -> Result<Comparison> {
    let Some(first) = interpolators.first() else {
        return Err(Error::Invalid("nothing to compare".into()));
    };
    let mesh = first.mesh();
    let discrete = discrete_qc(mesh, map)?;
    let rows = interpolators
        .iter()
        .map(|i| {
            Ok(ComparisonRow {
                qc: qc_map(*i, levels)?,
                continuity: continuity_probe(*i, samples_per_edge)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        levels,
        scale: map_scale(map),
        discrete,
        rows,
    })
}

/// Bounding-box diagonal of the target positions.
pub fn map_scale(map: &DiscreteMap) -> f64 {
    let (mut lo, mut hi) = (Complex::new(f64::INFINITY, f64::INFINITY), Complex::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for w in map.targets() {
        lo = Complex::new(lo.re.min(w.re), lo.im.min(w.im));
        hi = Complex::new(hi.re.max(w.re), hi.im.max(w.im));
    }
    (hi - lo).norm()
}

pub const SUMMARY_CSV_HEADER: &str = "interpolator,max_qc,mean_qc,flipped_samples,samples,max_edge_gap,max_edge_gap_rel,bounded_qc_violations";
pub const FACE_CSV_HEADER: &str = "interpolator,face,max_qc,mean_qc,discrete_qc";

impl Comparison {
    fn discrete_max(&self) -> f64 {
        self.discrete.iter().cloned().fold(1.0, f64::max)
    }

    fn discrete_mean(&self) -> f64 {
        let finite: Vec<f64> = self.discrete.iter().cloned().filter(|x| x.is_finite()).collect();
        finite.iter().sum::<f64>() / finite.len().max(1) as f64
    }

    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.qc.interpolator == name)
    }

    /// One line per interpolator plus a `discrete` line for the input map.
    pub fn summary_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{SUMMARY_CSV_HEADER}");
        let _ = writeln!(
            out,
            "discrete,{},{},{},{},0,0,0",
            self.discrete_max(),
            self.discrete_mean(),
            self.discrete.iter().filter(|x| !x.is_finite()).count(),
            self.discrete.len()
        );
        for r in &self.rows {
            let violations = bounded_qc_violations(&r.qc, &self.discrete, 1e-6).len();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:e},{:e},{}",
                r.qc.interpolator,
                r.qc.max(),
                r.qc.mean(),
                r.qc.flipped,
                r.qc.sample_count(),
                r.continuity.max_gap,
                r.continuity.max_gap / self.scale,
                violations
            );
        }
        out
    }

    pub fn faces_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FACE_CSV_HEADER}");
        for r in &self.rows {
            for (t, (&mx, &mean)) in r.qc.face_max.iter().zip(&r.qc.face_mean).enumerate() {
                let _ = writeln!(out, "{},{},{},{},{}", r.qc.interpolator, t, mx, mean, self.discrete[t]);
            }
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "QC sampled with {} subdivision levels; edge gaps relative to target diagonal {:.4}", self.levels, self.scale);
        let _ = writeln!(out, "{:<10} {:>12} {:>12} {:>8} {:>12} {:>10}", "method", "max QC", "mean QC", "flipped", "edge gap", "QC>input");
        let _ = writeln!(
            out,
            "{:<10} {:>12.6} {:>12.6} {:>8} {:>12} {:>10}",
            "discrete",
            self.discrete_max(),
            self.discrete_mean(),
            self.discrete.iter().filter(|x| !x.is_finite()).count(),
            "-",
            "-"
        );
        for r in &self.rows {
            let violations = bounded_qc_violations(&r.qc, &self.discrete, 1e-6).len();
            let _ = writeln!(
                out,
                "{:<10} {:>12.6} {:>12.6} {:>8} {:>12.3e} {:>10}",
                r.qc.interpolator,
                r.qc.max(),
                r.qc.mean(),
                r.qc.flipped,
                r.continuity.max_gap / self.scale,
                violations
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{PlInterpolator, ProjectiveInterpolator};
    use crate::bpm::BpmInterpolator;
    use crate::moebius::MoebiusMatrix;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn grid_mesh(n: usize) -> TriMesh {
        let mut pts = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                pts.push(c(1.0 + i as f64 / n as f64, j as f64 / n as f64 - 0.5));
            }
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut faces = Vec::new();
        for j in 0..n {
            for i in 0..n {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        TriMesh::planar(pts, faces).unwrap()
    }

    #[test]
    fn grid_has_expected_counts_and_orientation() {
        for levels in 1..5 {
            let g = SubdivisionGrid::new(levels);
            let n = 1usize << levels;
            assert_eq!(g.points.len(), (n + 1) * (n + 2) / 2);
            assert_eq!(g.triangles.len(), n * n);
            let tri = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
            let total: f64 = g
                .triangles
                .iter()
                .map(|t| {
                    let p = t.map(|k| crate::mesh::interpolate2(&tri, g.points[k]));
                    let a = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
                    assert!(a > 0.0);
                    a
                })
                .sum();
            assert!((total - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn finer_levels_keep_coarse_samples() {
        let mesh = grid_mesh(2);
        let map = DiscreteMap::from_fn(&mesh, |z| z * z).unwrap();
        let bpm = BpmInterpolator::build(&mesh, &map).unwrap();
        let g2 = SubdivisionGrid::new(2);
        let g3 = SubdivisionGrid::new(3);
        let s2 = sample_grid(&bpm, &g2).unwrap();
        let s3 = sample_grid(&bpm, &g3).unwrap();
        for t in 0..mesh.num_faces() {
            for (k, b) in g2.points.iter().enumerate() {
                let k3 = g3.points.iter().position(|p| p == b).expect("coarse point is in the fine grid");
                assert_eq!(s2[t][k], s3[t][k3]);
            }
        }
    }

    #[test]
    fn identity_gives_unit_qc_everywhere() {
        let mesh = grid_mesh(2);
        let map = DiscreteMap::identity(&mesh);
        for interp in [
            &BpmInterpolator::build(&mesh, &map).unwrap() as &dyn Interpolator,
            &PlInterpolator::new(&mesh, &map).unwrap(),
            &ProjectiveInterpolator::new(&mesh, &map).unwrap(),
        ] {
            let r = qc_map(interp, 2).unwrap();
            assert!(r.values.iter().flatten().all(|&q| (q - 1.0).abs() < 1e-12), "{}", interp.name());
            assert_eq!(r.histogram.total(), r.sample_count());
            assert_eq!(continuity_probe(interp, 5).unwrap().max_gap, 0.0);
        }
    }

    #[test]
    fn stretch_gives_qc_two_under_pl() {
        let mesh = grid_mesh(2);
        let map = DiscreteMap::from_fn(&mesh, |z| c(2.0 * z.re, z.im)).unwrap();
        let r = qc_map(&PlInterpolator::new(&mesh, &map).unwrap(), 2).unwrap();
        assert!(r.values.iter().flatten().all(|&q| (q - 2.0).abs() < 1e-9));
    }

    #[test]
    fn similarity_is_conformal_under_bpm() {
        let mesh = grid_mesh(3);
        let map = DiscreteMap::from_fn(&mesh, |z| z * c(0.6, -1.1) + c(2.0, 0.5)).unwrap();
        let r = qc_map(&BpmInterpolator::build(&mesh, &map).unwrap(), 4).unwrap();
        assert!((r.max() - 1.0).abs() < 1e-9, "{}", r.max());
    }

    #[test]
    fn global_moebius_qc_shrinks_with_refinement() {
        let mesh = grid_mesh(3);
        let g = MoebiusMatrix::from_entries(c(1.0, 0.2), c(0.0, 0.3), c(0.25, 0.1), c(1.0, 0.0)).unwrap();
        let map = DiscreteMap::from_fn(&mesh, |z| g.apply(z).unwrap()).unwrap();
        let bpm = BpmInterpolator::build(&mesh, &map).unwrap();
        // linear maps between refined triangles only see the Möbius map to O(h)
        let excess: Vec<f64> = (2..=4).map(|l| qc_map(&bpm, l).unwrap().max() - 1.0).collect();
        for w in excess.windows(2) {
            assert!(w[1] < 0.6 * w[0], "{excess:?}");
        }
        let discrete = discrete_qc(&mesh, &map).unwrap();
        assert!(bounded_qc_violations(&qc_map(&bpm, 4).unwrap(), &discrete, 1e-6).is_empty());
        assert!(injectivity_probe(&bpm, 4).is_empty());
    }

    #[test]
    fn histogram_puts_infinity_in_last_bin() {
        let h = Histogram::new(&DEFAULT_HISTOGRAM_EDGES, [1.0, 1.0005, 2.5, f64::INFINITY, 12.0]);
        assert_eq!(h.total(), 5);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[DEFAULT_HISTOGRAM_EDGES.len() - 1], 2);
    }

    #[test]
    fn identity_probe_finds_nothing() {
        let mesh = grid_mesh(2);
        let bpm = BpmInterpolator::build(&mesh, &DiscreteMap::identity(&mesh)).unwrap();
        assert!(injectivity_probe(&bpm, 6).is_empty());
    }
}
