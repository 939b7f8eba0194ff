//! `bpm`: interpolate, compare and validate discrete maps between triangle
//! meshes and the plane.

mod input;
mod validate;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use bpm_core::analysis::{self, compare, FACE_CSV_HEADER, SUMMARY_CSV_HEADER};
use bpm_core::corpus;
use bpm_core::mesh::write_obj;
use bpm_core::moebius::MoebiusError;
use bpm_core::render::{self, Texture, Viewport, DEFAULT_MARGIN};
use bpm_core::{Interpolator, TriMesh};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use input::Method;

const COMPARE_HELP: &str = "\
Summary CSV columns:
  interpolator,max_qc,mean_qc,flipped_samples,samples,max_edge_gap,max_edge_gap_rel,bounded_qc_violations
  The first row, `discrete`, describes the input map itself (affine per face).
  max_edge_gap_rel divides by the target bounding-box diagonal. bounded_qc_violations
  counts faces whose sampled max QC exceeds the discrete QC by more than 1e-6.
  Flipped samples have QC `inf` and are excluded from means.

Per-face CSV columns (--faces-csv):
  interpolator,face,max_qc,mean_qc,discrete_qc";

#[derive(Parser, Debug)]
#[command(name = "bpm", version, about = "Blended piecewise Möbius interpolation of mesh-to-plane maps")]
#[command(after_help = "Exit codes: 0 success, 1 parse or validation error, 2 numerical failure, 3 property check failed.\n\
BPM_THREADS caps the number of worker threads.")]
struct Cli {
    /// Seed for randomized probes.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Source mesh (OBJ). Planar when every z is 0.
    #[arg(long)]
    src: PathBuf,
    /// Planar target mesh with the same faces. Without it the source's
    /// texture coordinates are the map.
    #[arg(long)]
    dst: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an interpolator at query points or on a refined mesh.
    Interpolate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "bpm")]
        method: Method,
        /// CSV of `face_id,x,y[,z]` rows; output appends `u,v`.
        #[arg(long)]
        query: Option<PathBuf>,
        /// Subdivision levels for refined OBJ output.
        #[arg(long, value_parser = clap::value_parser!(u32).range(0..=8))]
        refine: Option<u32>,
        /// Output file: CSV for queries (stdout if omitted), OBJ for --refine.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare bpm, pl and proj on one input.
    #[command(after_help = COMPARE_HELP)]
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = analysis::DEFAULT_LEVELS, value_parser = clap::value_parser!(u32).range(1..=8))]
        levels: u32,
        /// Samples per interior edge for the continuity probe.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Summary CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        faces_csv: Option<PathBuf>,
        /// Write pullback renders of every method here.
        #[arg(long)]
        render_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 512)]
        resolution: usize,
        /// PNG texture; a checkerboard by default.
        #[arg(long)]
        texture: Option<PathBuf>,
    },
    /// Check the interpolation properties on an input; exit 3 on failure.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        /// Random interior samples per check.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Render a texture through the map.
    Render {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "bpm")]
        method: Method,
        #[arg(long, value_enum, default_value = "pullback")]
        mode: RenderMode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 512)]
        resolution: usize,
        #[arg(long, default_value_t = 4)]
        supersample: usize,
        #[arg(long)]
        texture: Option<PathBuf>,
    },
    /// Write the synthetic test inputs as OBJ files.
    Corpus {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RenderMode {
    Pullback,
    Pushforward,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn is_degenerate(e: &MoebiusError) -> bool {
    matches!(e, MoebiusError::Degenerate { .. })
}

impl From<bpm_core::Error> for Failure {
    fn from(e: bpm_core::Error) -> Self {
        use bpm_core::Error as E;
        // a degenerate fit means the input map collapses a face
        let code = match &e {
            E::Face { source, .. } if is_degenerate(source) => 1,
            E::Faces(all) if all.iter().all(|(_, s)| is_degenerate(s)) => 1,
            E::Moebius(s) if is_degenerate(s) => 1,
            e if e.is_numerical() => 2,
            _ => 1,
        };
        Self { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self::usage(error)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; everything else is a usage error
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = std::env::var("BPM_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Interpolate {
            input,
            method,
            query,
            refine,
            out,
        } => cmd_interpolate(&input, method, query.as_deref(), refine, out.as_deref()),
        Command::Compare {
            input,
            levels,
            samples,
            out,
            faces_csv,
            render_dir,
            resolution,
            texture,
        } => cmd_compare(&input, levels, samples, out.as_deref(), faces_csv.as_deref(), render_dir.as_deref(), resolution, texture.as_deref()),
        Command::Validate { input, samples } => cmd_validate(&input, samples, cli.seed),
        Command::Render {
            input,
            method,
            mode,
            out,
            resolution,
            supersample,
            texture,
        } => cmd_render(&input, method, mode, &out, resolution, supersample, texture.as_deref()),
        Command::Corpus { out_dir } => cmd_corpus(&out_dir, cli.seed),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_interpolate(input: &InputArgs, method: Method, query: Option<&Path>, refine: Option<u32>, out: Option<&Path>) -> Result<u8, Failure> {
    let (mesh, map) = input::load_input(&input.src, input.dst.as_deref())?;
    let interp = input::build(method, &mesh, &map)?;
    if let Some(q) = query {
        let file = File::open(q).with_context(|| format!("opening {}", q.display()))?;
        let queries = input::read_queries(file).with_context(|| format!("reading {}", q.display()))?;
        let images = queries.iter().map(|q| input::evaluate_query(interp.as_ref(), q)).collect::<Result<Vec<_>, _>>()?;
        input::write_results(output(out)?, &queries, &images)?;
        return Ok(0);
    }
    let Some(out) = out else {
        return Err(Failure::usage(anyhow::anyhow!("refined output needs --out")));
    };
    let refined = render::refine_with_uvs(interp.as_ref(), refine.unwrap_or(3))?;
    if refined.max_edge_gap > 1e-9 * analysis::map_scale(&map) {
        log::warn!("edge UVs disagree by up to {:.3e} between neighboring faces", refined.max_edge_gap);
    }
    refined.write_obj(out)?;
    log::info!("wrote {} vertices, {} faces to {}", refined.positions.len(), refined.faces.len(), out.display());
    Ok(0)
}

fn load_texture(path: Option<&Path>) -> Result<Texture, Failure> {
    Ok(match path {
        Some(p) => Texture::load_png(p)?,
        None => Texture::checkerboard(512, 16, [240, 240, 240, 255], [40, 60, 160, 255])?,
    })
}

fn source_view(mesh: &TriMesh) -> bpm_core::Result<Viewport> {
    Viewport::around((0..mesh.num_vertices()).map(|v| mesh.point(v)), DEFAULT_MARGIN)
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    input: &InputArgs,
    levels: u32,
    samples: usize,
    out: Option<&Path>,
    faces_csv: Option<&Path>,
    render_dir: Option<&Path>,
    resolution: usize,
    texture: Option<&Path>,
) -> Result<u8, Failure> {
    let (mesh, map) = input::load_input(&input.src, input.dst.as_deref())?;
    let interps = Method::ALL.iter().map(|&m| input::build(m, &mesh, &map)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&dyn Interpolator> = interps.iter().map(|b| b.as_ref()).collect();
    let table = compare(&refs, &map, levels, samples)?;
    eprint!("{}", table.summary_text());
    for row in &table.rows {
        let v = analysis::bounded_qc_violations(&row.qc, &table.discrete, 1e-6);
        if !v.is_empty() && row.qc.interpolator == "bpm" {
            log::warn!("bpm exceeds the discrete QC on {} faces (first: face {})", v.len(), v[0].face);
        }
    }
    let mut w = output(out)?;
    write!(w, "{}", table.summary_csv())?;
    w.flush()?;
    debug_assert!(table.summary_csv().starts_with(SUMMARY_CSV_HEADER));
    if let Some(p) = faces_csv {
        fs::write(p, table.faces_csv()).with_context(|| format!("writing {}", p.display()))?;
        debug_assert!(table.faces_csv().starts_with(FACE_CSV_HEADER));
    }
    if let Some(dir) = render_dir {
        if !mesh.is_planar() {
            log::warn!("renders need a planar source; skipping");
            return Ok(0);
        }
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let tex = load_texture(texture)?;
        let src = source_view(&mesh)?;
        let dst = Viewport::around(map.targets().iter().copied(), 0.0)?;
        for interp in &refs {
            let (fb, stats) = render::pullback(*interp, &tex, &src, &dst, resolution)?;
            if stats.errors > 0 {
                log::warn!("{}: {} pixels failed to evaluate", interp.name(), stats.errors);
            }
            fb.save_png(dir.join(format!("pullback_{}.png", interp.name())))?;
        }
        let (fb, _) = pushforward_view(refs[0], &mesh, &tex, resolution, 4)?;
        fb.save_png(dir.join(format!("pushforward_{}.png", refs[0].name())))?;
    }
    Ok(0)
}

fn cmd_validate(input: &InputArgs, samples: usize, seed: u64) -> Result<u8, Failure> {
    println!("seed: {seed}");
    let (mesh, map) = input::load_input(&input.src, input.dst.as_deref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = validate::run(&mesh, &map, samples, &mut rng)?;
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(0)
    } else {
        eprintln!("violated: {}", failed.join(", "));
        Ok(3)
    }
}

fn cmd_render(
    input: &InputArgs,
    method: Method,
    mode: RenderMode,
    out: &Path,
    resolution: usize,
    supersample: usize,
    texture: Option<&Path>,
) -> Result<u8, Failure> {
    let (mesh, map) = input::load_input(&input.src, input.dst.as_deref())?;
    if !mesh.is_planar() {
        return Err(Failure::usage(anyhow::anyhow!(
            "rendering needs a planar source; use `interpolate --refine` to export UVs for surfaces"
        )));
    }
    let interp = input::build(method, &mesh, &map)?;
    let tex = load_texture(texture)?;
    let (fb, stats) = match mode {
        RenderMode::Pullback => {
            let dst = Viewport::around(map.targets().iter().copied(), 0.0)?;
            render::pullback(interp.as_ref(), &tex, &source_view(&mesh)?, &dst, resolution)?
        }
        RenderMode::Pushforward => pushforward_view(interp.as_ref(), &mesh, &tex, resolution, supersample)?,
    };
    if stats.errors > 0 {
        log::warn!("{} pixels failed to evaluate", stats.errors);
    }
    fb.save_png(out)?;
    Ok(0)
}

/// Texture spread over the source bounding box, drawn around the image.
fn pushforward_view(
    interp: &dyn Interpolator,
    mesh: &TriMesh,
    tex: &Texture,
    resolution: usize,
    supersample: usize,
) -> bpm_core::Result<(render::Framebuffer, render::RenderStats)> {
    let src = Viewport::around((0..mesh.num_vertices()).map(|v| mesh.point(v)), 0.0)?;
    let dst = Viewport::around(render::image_points(interp, 3), DEFAULT_MARGIN)?;
    render::pushforward(interp, tex, &src, &dst, resolution, supersample)
}

fn cmd_corpus(dir: &Path, seed: u64) -> Result<u8, Failure> {
    println!("seed: {seed}");
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for ex in corpus::corpus(seed)? {
        let faces = ex.mesh.faces();
        if ex.mesh.is_planar() {
            let target: Vec<[f64; 3]> = ex.map.targets().iter().map(|w| [w.re, w.im, 0.0]).collect();
            write_obj(dir.join(format!("{}_src.obj", ex.name)), ex.mesh.positions(), None, faces)?;
            write_obj(dir.join(format!("{}_dst.obj", ex.name)), &target, None, faces)?;
        } else {
            write_obj(dir.join(format!("{}.obj", ex.name)), ex.mesh.positions(), Some(ex.map.targets()), faces)?;
        }
        println!("{:<16} {:>5} faces", ex.name, ex.mesh.num_faces());
    }
    Ok(0)
}
