use std::path::PathBuf;

use thiserror::Error;

use crate::moebius::{Complex, MoebiusError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("face {face}: {source}")]
    Face {
        face: usize,
        #[source]
        source: MoebiusError,
    },
    #[error("face {face} at {point}: {source}")]
    Evaluation {
        face: usize,
        point: Complex,
        #[source]
        source: MoebiusError,
    },
    #[error("{} faces failed; first: face {}: {}", .0.len(), .0[0].0, .0[0].1)]
    Faces(Vec<(usize, MoebiusError)>),
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("non-manifold edge ({0}, {1}): shared by more than two faces")]
    NonManifold(usize, usize),
    #[error("vertex {vertex} is referenced with texture coordinates {first} and {second}; the map is not vertex-based")]
    Seam {
        vertex: usize,
        first: usize,
        second: usize,
    },
    #[error("face {face} is degenerate (area {area:.3e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("face {face} is flipped (signed area {area:.3e})")]
    FlippedFace { face: usize, area: f64 },
    #[error("point {point} lies within ε of a triangle vertex; use the vertex value")]
    VertexProximity { point: Complex },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    /// True for failures caused by the numbers rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Face { .. }
                | Error::Faces(_)
                | Error::Evaluation { .. }
                | Error::Moebius(_)
                | Error::VertexProximity { .. }
        )
    }

    pub(crate) fn at_face(face: usize) -> impl FnOnce(MoebiusError) -> Error {
        move |source| Error::Face { face, source }
    }
}
