//! Texture pullback and push-forward rasterization, and refined OBJ export.
//!
//! World space is mapped to texture space through a [`Viewport`], the square
//! that covers a bounding box. Pixel centers sit at `(i + ½, j + ½)` with row
//! 0 at the top.

use std::collections::HashMap;
use std::path::Path;

use image::{ImageBuffer, Rgba};
use rayon::prelude::*;

use crate::analysis::SubdivisionGrid;
use crate::error::{Error, Result};
use crate::interpolator::Interpolator;
use crate::mesh::{barycentric2, cross, interpolate2, write_obj};
use crate::moebius::Complex;

pub type Rgba8 = [u8; 4];

pub const ERROR_COLOR: Rgba8 = [255, 0, 255, 255];
pub const TRANSPARENT: Rgba8 = [0, 0, 0, 0];

/// Inside test slack for barycentric coordinates.
const INSIDE_EPS: f64 = 1e-12;
/// Texel coordinates are snapped to this grid before filtering so that
/// rounding noise far below a texel never changes a color.
const TEXEL_QUANTUM: f64 = 1.0 / 65536.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AddressMode {
    #[default]
    Clamp,
    Repeat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    width: usize,
    height: usize,
    pixels: Vec<Rgba8>,
    pub mode: AddressMode,
}

impl Texture {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgba8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Invalid(format!("texture {width}×{height} with {} pixels", pixels.len())));
        }
        Ok(Self {
            width,
            height,
            pixels,
            mode: AddressMode::Clamp,
        })
    }

    /// `checks × checks` board of the two colors, `size` pixels square.
    pub fn checkerboard(size: usize, checks: usize, a: Rgba8, b: Rgba8) -> Result<Self> {
        let checks = checks.max(1);
        let pixels = (0..size * size)
            .map(|k| {
                let (x, y) = (k % size, k / size);
                if (x * checks / size + y * checks / size).is_multiple_of(2) {
                    a
                } else {
                    b
                }
            })
            .collect();
        Self::new(size, size, pixels)
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?.to_rgba8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.pixels().map(|p| p.0).collect())
    }

    pub fn with_mode(mut self, mode: AddressMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn texel(&self, x: i64, y: i64) -> Rgba8 {
        let (x, y) = match self.mode {
            AddressMode::Clamp => (x.clamp(0, self.width as i64 - 1), y.clamp(0, self.height as i64 - 1)),
            AddressMode::Repeat => (x.rem_euclid(self.width as i64), y.rem_euclid(self.height as i64)),
        };
        self.pixels[y as usize * self.width + x as usize]
    }

    /// Bilinear lookup at `uv ∈ [0, 1]²`, with `v` pointing up.
    pub fn sample(&self, uv: Complex) -> Rgba8 {
        let quantize = |x: f64| (x / TEXEL_QUANTUM).round() * TEXEL_QUANTUM;
        let x = quantize(uv.re * self.width as f64 - 0.5);
        let y = quantize((1.0 - uv.im) * self.height as f64 - 0.5);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let mut out = [0u8; 4];
        let (t00, t10, t01, t11) = (
            self.texel(x0, y0),
            self.texel(x0 + 1, y0),
            self.texel(x0, y0 + 1),
            self.texel(x0 + 1, y0 + 1),
        );
        for ch in 0..4 {
            let top = t00[ch] as f64 * (1.0 - fx) + t10[ch] as f64 * fx;
            let bottom = t01[ch] as f64 * (1.0 - fx) + t11[ch] as f64 * fx;
            out[ch] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Framebuffer {
    width: usize,
    height: usize,
    pixels: Vec<Rgba8>,
    background: Rgba8,
}

impl Framebuffer {
    pub fn new(width: usize, height: usize, background: Rgba8) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid(format!("framebuffer {width}×{height}")));
        }
        Ok(Self {
            width,
            height,
            pixels: vec![background; width * height],
            background,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn background(&self) -> Rgba8 {
        self.background
    }

    pub fn pixels(&self) -> &[Rgba8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgba8 {
        self.pixels[y * self.width + x]
    }

    pub fn to_image(&self) -> ImageBuffer<Rgba<u8>, Vec<u8>> {
        let raw = self.pixels.iter().flatten().copied().collect();
        ImageBuffer::from_raw(self.width as u32, self.height as u32, raw).expect("buffer size matches")
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_image().save_with_format(path.as_ref(), image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Square world-space window `[min, min + size]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub min: Complex,
    pub size: f64,
}

impl Viewport {
    /// Smallest square centered on the bounding box of `points`, grown by
    /// `margin` of its side.
    pub fn around(points: impl IntoIterator<Item = Complex>, margin: f64) -> Result<Self> {
        let mut lo = Complex::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in points {
            lo = Complex::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let size = (hi.re - lo.re).max(hi.im - lo.im) * (1.0 + 2.0 * margin);
        if !(size > 0.0) || !size.is_finite() {
            return Err(Error::Degenerate("viewport has no extent".into()));
        }
        Ok(Self {
            min: 0.5 * (lo + hi) - Complex::new(0.5 * size, 0.5 * size),
            size,
        })
    }

    /// Texture coordinates of a world point.
    pub fn to_uv(&self, w: Complex) -> Complex {
        (w - self.min) / self.size
    }

    /// World position of the center of pixel `(x, y)` in a `res × res` raster.
    pub fn pixel_center(&self, res: usize, x: usize, y: usize) -> Complex {
        let h = self.size / res as f64;
        self.min + Complex::new((x as f64 + 0.5) * h, self.size - (y as f64 + 0.5) * h)
    }

    /// Continuous pixel coordinates of a world point.
    pub fn to_pixel(&self, res: usize, w: Complex) -> (f64, f64) {
        let s = res as f64 / self.size;
        ((w.re - self.min.re) * s, (self.min.im + self.size - w.im) * s)
    }
}

pub const DEFAULT_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderStats {
    pub covered: usize,
    pub errors: usize,
}

/// Pixel indices whose centers lie in the triangle `p` of a `res × res` raster.
fn raster_triangle(view: &Viewport, res: usize, p: [Complex; 3], mut visit: impl FnMut(usize, usize, [f64; 3])) {
    let px = p.map(|w| view.to_pixel(res, w));
    let (xmin, xmax) = px.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q.0), b.max(q.0)));
    let (ymin, ymax) = px.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q.1), b.max(q.1)));
    if !(xmin.is_finite() && xmax.is_finite() && ymin.is_finite() && ymax.is_finite()) {
        return;
    }
    if cross(p[1] - p[0], p[2] - p[0]) == 0.0 {
        return;
    }
    let x0 = (xmin - 0.5).ceil().max(0.0) as usize;
    let y0 = (ymin - 0.5).ceil().max(0.0) as usize;
    let x1 = ((xmax - 0.5).floor()).min(res as f64 - 1.0);
    let y1 = ((ymax - 0.5).floor()).min(res as f64 - 1.0);
    if x1 < 0.0 || y1 < 0.0 {
        return;
    }
    for y in y0..=y1 as usize {
        for x in x0..=x1 as usize {
            let b = barycentric2(view.pixel_center(res, x, y), &p);
            if b.iter().all(|&v| v >= -INSIDE_EPS) {
                visit(x, y, b);
            }
        }
    }
}

/// Writes per-face pixel lists in face order; the first face to claim a
/// pixel keeps it.
fn compose(res: usize, background: Rgba8, layers: Vec<Vec<(usize, Option<Rgba8>)>>) -> Result<(Framebuffer, RenderStats)> {
    let mut fb = Framebuffer::new(res, res, background)?;
    let mut taken = vec![false; res * res];
    let mut stats = RenderStats::default();
    for layer in layers {
        for (k, color) in layer {
            if taken[k] {
                continue;
            }
            taken[k] = true;
            stats.covered += 1;
            fb.pixels[k] = color.unwrap_or_else(|| {
                stats.errors += 1;
                ERROR_COLOR
            });
        }
    }
    Ok((fb, stats))
}

/// Colors each pixel of the source domain with the texture at its image.
///
/// The raster covers `source_view` and the texture spans `texture_view` in
/// target space.
pub fn pullback(
    interp: &dyn Interpolator,
    texture: &Texture,
    source_view: &Viewport,
    texture_view: &Viewport,
    resolution: usize,
) -> Result<(Framebuffer, RenderStats)> {
    let mesh = interp.mesh();
    if !mesh.is_planar() {
        return Err(Error::Invalid("pullback needs a planar source; export refined UVs for surfaces".into()));
    }
    let layers = (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| {
            let mut out = Vec::new();
            raster_triangle(source_view, resolution, mesh.face_points(t), |x, y, b| {
                let color = interp.evaluate_barycentric(t, b).ok().map(|w| texture.sample(texture_view.to_uv(w)));
                out.push((y * resolution + x, color));
            });
            out
        })
        .collect();
    compose(resolution, TRANSPARENT, layers)
}

/// Per-face grid resolution for push-forward: `supersample` micro-triangles
/// per pixel of the face's largest target edge.
fn splat_segments(corners: [Complex; 3], px_per_unit: f64, supersample: usize) -> usize {
    let longest = (0..3).map(|k| (corners[(k + 1) % 3] - corners[k]).norm()).fold(0.0, f64::max);
    ((longest * px_per_unit).ceil().max(1.0) as usize * supersample.max(1)).min(4096)
}

/// Source points and their images on the push-forward grid of every face.
fn splat_samples(interp: &dyn Interpolator, view_px_per_unit: f64, supersample: usize) -> Vec<(SubdivisionGrid, Vec<Option<Complex>>)> {
    let mesh = interp.mesh();
    (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| {
            let corners: [Complex; 3] = std::array::from_fn(|k| interp.evaluate_barycentric(t, unit(k)).unwrap_or(Complex::new(0.0, 0.0)));
            let grid = SubdivisionGrid::with_segments(splat_segments(corners, view_px_per_unit, supersample));
            let images = grid.points.iter().map(|&b| interp.evaluate_barycentric(t, b).ok()).collect();
            (grid, images)
        })
        .collect()
}

fn unit(k: usize) -> [f64; 3] {
    let mut b = [0.0; 3];
    b[k] = 1.0;
    b
}

/// Transports a source-space texture to the target by rasterizing the images
/// of a fine subdivision of every face, so straight source edges render as
/// curves.
///
/// `texture_view` places the texture over the source; the raster covers
/// `target_view`. Face grids are sized so that each micro-triangle spans
/// about `1/supersample` pixel before distortion.
pub fn pushforward(
    interp: &dyn Interpolator,
    texture: &Texture,
    texture_view: &Viewport,
    target_view: &Viewport,
    resolution: usize,
    supersample: usize,
) -> Result<(Framebuffer, RenderStats)> {
    let mesh = interp.mesh();
    if !mesh.is_planar() {
        return Err(Error::Invalid("pushforward needs a planar source".into()));
    }
    let px_per_unit = resolution as f64 / target_view.size;
    let samples = splat_samples(interp, px_per_unit, supersample);
    let layers = samples
        .par_iter()
        .enumerate()
        .map(|(t, (grid, images))| {
            let corners = mesh.face_points(t);
            let mut out = Vec::new();
            for tri in &grid.triangles {
                let src = tri.map(|k| interpolate2(&corners, grid.points[k]));
                let Some(img) = tri.iter().map(|&k| images[k]).collect::<Option<Vec<_>>>() else {
                    // an unevaluable corner paints the source-space footprint in the error color
                    raster_triangle(target_view, resolution, src, |x, y, _| out.push((y * resolution + x, None)));
                    continue;
                };
                let img = [img[0], img[1], img[2]];
                raster_triangle(target_view, resolution, img, |x, y, b| {
                    let p = interpolate2(&src, b);
                    out.push((y * resolution + x, Some(texture.sample(texture_view.to_uv(p)))));
                });
            }
            out
        })
        .collect();
    compose(resolution, TRANSPARENT, layers)
}

/// Images of the vertices and a light sampling of every face, for framing
/// target-space renders.
pub fn image_points(interp: &dyn Interpolator, levels: u32) -> Vec<Complex> {
    let grid = SubdivisionGrid::new(levels);
    (0..interp.mesh().num_faces())
        .into_par_iter()
        .flat_map_iter(|t| grid.points.iter().filter_map(move |&b| interp.evaluate_barycentric(t, b).ok()).collect::<Vec<_>>())
        .collect()
}

/// Refined surface with one UV per vertex.
#[derive(Debug, Clone)]
pub struct RefinedMesh {
    pub positions: Vec<[f64; 3]>,
    pub uvs: Vec<Complex>,
    pub faces: Vec<[usize; 3]>,
    /// Largest disagreement between the two sides of an original edge.
    pub max_edge_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum RefinedKey {
    Vertex(usize),
    /// Edge `(lo, hi)` at `k` segments from `lo`.
    Edge(usize, usize, usize),
    Interior(usize, usize),
}

/// Splits every face 1:4 `levels` times and evaluates the interpolator at
/// each refined vertex. Vertices on original edges are shared between the
/// two adjacent faces, so the output has no UV seams.
pub fn refine_with_uvs(interp: &dyn Interpolator, levels: u32) -> Result<RefinedMesh> {
    let mesh = interp.mesh();
    let grid = SubdivisionGrid::new(levels);
    let n = grid.segments;
    let images = crate::analysis::sample_grid(interp, &grid)?;

    // original vertices keep their indices; their UVs are filled on first visit
    let mut index: HashMap<RefinedKey, usize> = (0..mesh.num_vertices()).map(|v| (RefinedKey::Vertex(v), v)).collect();
    let mut seen = vec![false; mesh.num_vertices()];
    let mut out = RefinedMesh {
        positions: mesh.positions().to_vec(),
        uvs: vec![Complex::new(0.0, 0.0); mesh.num_vertices()],
        faces: Vec::new(),
        max_edge_gap: 0.0,
    };
    for (t, face_images) in images.iter().enumerate() {
        let f = mesh.face(t);
        let ids: Vec<usize> = grid
            .points
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let w = b.map(|x| (x * n as f64).round() as usize);
                let key = match (0..3).filter(|&c| w[c] > 0).collect::<Vec<_>>()[..] {
                    [c] => RefinedKey::Vertex(f[c]),
                    [p, q] => {
                        let (lo, hi, k_hi) = if f[p] < f[q] { (f[p], f[q], w[q]) } else { (f[q], f[p], w[p]) };
                        RefinedKey::Edge(lo, hi, k_hi)
                    }
                    _ => RefinedKey::Interior(t, k),
                };
                let uv = face_images[k];
                if let RefinedKey::Vertex(v) = key {
                    if !seen[v] {
                        seen[v] = true;
                        out.uvs[v] = uv;
                        return v;
                    }
                }
                *index
                    .entry(key)
                    .and_modify(|&mut id| out.max_edge_gap = out.max_edge_gap.max((out.uvs[id] - uv).norm()))
                    .or_insert_with(|| {
                        out.positions.push(mesh.point3_at(t, *b));
                        out.uvs.push(uv);
                        out.uvs.len() - 1
                    })
            })
            .collect();
        out.faces.extend(grid.triangles.iter().map(|tri| tri.map(|k| ids[k])));
    }
    Ok(out)
}

impl RefinedMesh {
    pub fn write_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        write_obj(path, &self.positions, Some(&self.uvs), &self.faces)
    }
}
