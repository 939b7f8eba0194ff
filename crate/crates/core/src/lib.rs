//! Blended piecewise Möbius (BPM) interpolation.
//!
//! Lifts a discrete vertex-to-vertex map between a triangle mesh (planar or
//! embedded in 3D) and the plane to a continuous map through the vertex
//! targets. The lifted map commutes with global Möbius transformations.
//! Piecewise-linear and projective interpolators are provided for
//! comparison, along with distortion analysis and texture rendering.
//!
//! ```
//! use bpm_core::{BpmInterpolator, DiscreteMap, Interpolator, TriMesh};
//! use bpm_core::moebius::Complex;
//!
//! let mesh = TriMesh::planar(
//!     vec![Complex::new(1.0, 0.0), Complex::new(2.0, 0.0), Complex::new(2.0, 1.0), Complex::new(1.0, 1.0)],
//!     vec![[0, 1, 2], [0, 2, 3]],
//! )?;
//! let map = DiscreteMap::from_fn(&mesh, |z| z * z)?;
//! let bpm = BpmInterpolator::build(&mesh, &map)?;
//! let w = bpm.evaluate_barycentric(0, [1.0 / 3.0; 3])?;
//! assert!(w.norm() > 0.0);
//! # Ok::<(), bpm_core::Error>(())
//! ```

// `!(x > 0.0)` style guards are there so NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod bpm;
pub mod corpus;
mod error;
mod interpolator;
pub mod mesh;
pub mod moebius;
pub mod pcm;
pub mod render;

pub use baselines::{PlInterpolator, ProjectiveInterpolator};
pub use bpm::BpmInterpolator;
pub use error::{Error, Result};
pub use interpolator::{local_point, Interpolator};
pub use mesh::{Dimension, TriMesh};
pub use pcm::{DiscreteMap, PcmMap};
