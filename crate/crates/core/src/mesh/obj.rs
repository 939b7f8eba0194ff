//! Minimal Wavefront OBJ reader and writer.
//!
//! Recognized statements are `v`, `vt` and `f`. Polygonal faces are fan
//! triangulated. Every other statement is skipped with a warning.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::TriMesh;
use crate::error::{Error, Result};
use crate::moebius::Complex;
use crate::pcm::DiscreteMap;

/// Raw OBJ contents, indices zero-based.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjData {
    pub positions: Vec<[f64; 3]>,
    pub uvs: Vec<Complex>,
    /// Vertex indices per triangle.
    pub faces: Vec<[usize; 3]>,
    /// Texture-coordinate indices per triangle, when every face has them.
    pub face_uvs: Option<Vec<[usize; 3]>>,
}

impl ObjData {
    /// Per-vertex UVs. Fails with [`Error::Seam`] when a vertex is used with
    /// two different texture indices.
    pub fn vertex_uvs(&self) -> Result<Option<Vec<Complex>>> {
        let Some(face_uvs) = &self.face_uvs else {
            return Ok(None);
        };
        let mut assigned: Vec<Option<usize>> = vec![None; self.positions.len()];
        for (f, tf) in self.faces.iter().zip(face_uvs) {
            for k in 0..3 {
                match assigned[f[k]] {
                    None => assigned[f[k]] = Some(tf[k]),
                    Some(prev) if prev != tf[k] => {
                        return Err(Error::Seam {
                            vertex: f[k],
                            first: prev,
                            second: tf[k],
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        // vertices no face references get the origin; they never enter the map
        Ok(Some(
            assigned
                .into_iter()
                .map(|vt| vt.map_or(Complex::new(0.0, 0.0), |i| self.uvs[i]))
                .collect(),
        ))
    }
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<ObjData> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(&text, path)
}

pub fn parse_obj(text: &str, path: &Path) -> Result<ObjData> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut data = ObjData::default();
    let mut face_uvs: Vec<[usize; 3]> = Vec::new();
    let mut faces_with_uv = 0usize;
    let mut faces_without_uv = 0usize;
    let mut ignored = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        match keyword {
            "v" => {
                let coords = parse_floats(tokens, lineno, &err)?;
                if coords.len() < 2 {
                    return Err(err(lineno, format!("vertex needs at least 2 coordinates, got {}", coords.len())));
                }
                data.positions.push([coords[0], coords[1], coords.get(2).copied().unwrap_or(0.0)]);
            }
            "vt" => {
                let coords = parse_floats(tokens, lineno, &err)?;
                if coords.len() < 2 {
                    return Err(err(lineno, "texture coordinate needs u and v".into()));
                }
                data.uvs.push(Complex::new(coords[0], coords[1]));
            }
            "f" => {
                let mut verts = Vec::new();
                let mut tex = Vec::new();
                for tok in tokens {
                    let mut parts = tok.split('/');
                    let v = parts.next().unwrap_or("");
                    verts.push(resolve_index(v, data.positions.len(), lineno, &err)?);
                    match parts.next() {
                        Some(vt) if !vt.is_empty() => tex.push(resolve_index(vt, data.uvs.len(), lineno, &err)?),
                        _ => {}
                    }
                }
                if verts.len() < 3 {
                    return Err(err(lineno, format!("face needs at least 3 vertices, got {}", verts.len())));
                }
                let has_uv = !tex.is_empty();
                if has_uv && tex.len() != verts.len() {
                    return Err(err(lineno, "face mixes corners with and without texture indices".into()));
                }
                for k in 1..verts.len() - 1 {
                    data.faces.push([verts[0], verts[k], verts[k + 1]]);
                    if has_uv {
                        face_uvs.push([tex[0], tex[k], tex[k + 1]]);
                        faces_with_uv += 1;
                    } else {
                        faces_without_uv += 1;
                    }
                }
            }
            other => {
                ignored.insert(other.to_string());
            }
        }
    }
    for kw in ignored {
        log::warn!("{}: ignoring unsupported OBJ statement `{kw}`", path.display());
    }
    if faces_with_uv > 0 && faces_without_uv > 0 {
        return Err(err(0, "some faces carry texture indices and some do not".into()));
    }
    if faces_with_uv > 0 {
        data.face_uvs = Some(face_uvs);
    }
    Ok(data)
}

fn parse_floats<'a>(
    tokens: impl Iterator<Item = &'a str>,
    lineno: usize,
    err: &impl Fn(usize, String) -> Error,
) -> Result<Vec<f64>> {
    tokens
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(lineno, format!("invalid number `{t}`")))
        })
        .collect()
}

/// One-based (or negative, relative) OBJ index to zero-based.
fn resolve_index(tok: &str, count: usize, lineno: usize, err: &impl Fn(usize, String) -> Error) -> Result<usize> {
    let i: i64 = tok.parse().map_err(|_| err(lineno, format!("invalid index `{tok}`")))?;
    let resolved = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || resolved < 0 || resolved >= count as i64 {
        return Err(err(lineno, format!("index {i} out of range (have {count})")));
    }
    Ok(resolved as usize)
}

/// Loads a mesh and, when every face carries texture indices, the discrete
/// map given by the per-vertex UVs.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<(TriMesh, Option<DiscreteMap>)> {
    let data = read_obj(path)?;
    let uvs = data.vertex_uvs()?;
    let mesh = TriMesh::from_positions(data.positions, data.faces)?;
    let map = uvs.map(DiscreteMap::new).transpose()?;
    Ok((mesh, map))
}

/// Writes `v` lines (and `vt` lines with matching indices when `uvs` is given).
pub fn write_obj(path: impl AsRef<Path>, positions: &[[f64; 3]], uvs: Option<&[Complex]>, faces: &[[usize; 3]]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, obj_string(positions, uvs, faces)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn obj_string(positions: &[[f64; 3]], uvs: Option<&[Complex]>, faces: &[[usize; 3]]) -> String {
    let mut out = String::new();
    for p in positions {
        let _ = writeln!(out, "v {:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
    }
    if let Some(uvs) = uvs {
        for w in uvs {
            let _ = writeln!(out, "vt {:.17e} {:.17e}", w.re, w.im);
        }
    }
    for f in faces {
        if uvs.is_some() {
            let _ = writeln!(out, "f {0}/{0} {1}/{1} {2}/{2}", f[0] + 1, f[1] + 1, f[2] + 1);
        } else {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ObjData> {
        parse_obj(text, Path::new("test.obj"))
    }

    #[test]
    fn single_triangle_with_uvs() {
        let d = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n").unwrap();
        let uvs = d.vertex_uvs().unwrap().unwrap();
        assert_eq!(uvs, vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]);
        let mesh = TriMesh::from_positions(d.positions, d.faces).unwrap();
        assert_eq!(mesh.num_faces(), 1);
        assert!(mesh.is_planar());
    }

    #[test]
    fn no_uvs_means_no_map() {
        let d = parse("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(d.vertex_uvs().unwrap(), None);
    }

    #[test]
    fn seam_is_rejected() {
        let d = parse(
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 1 1\nvt 5 5\n\
             f 1/1 2/2 3/3\nf 2/5 4/4 3/3\n",
        )
        .unwrap();
        assert!(matches!(
            d.vertex_uvs(),
            Err(Error::Seam {
                vertex: 1,
                first: 1,
                second: 4
            })
        ));
    }

    #[test]
    fn quads_are_fanned_and_other_statements_skipped() {
        let d = parse("o thing\nv 0 0\nv 1 0\nv 1 1\nv 0 1\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n").unwrap();
        assert_eq!(d.faces, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(d.face_uvs.is_none());
    }

    #[test]
    fn negative_indices_resolve() {
        let d = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(d.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn malformed_input_reports_line() {
        let e = parse("v 0 0 0\nv 1 x 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse("v 0 0 0\nf 1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn written_obj_parses_back() {
        let pos = vec![[0.0, 0.0, 0.1], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let uvs = vec![Complex::new(0.1, 0.2), Complex::new(0.9, 0.1), Complex::new(0.3, 0.8)];
        let text = obj_string(&pos, Some(&uvs), &[[0, 1, 2]]);
        let d = parse(&text).unwrap();
        assert_eq!(d.positions, pos);
        assert_eq!(d.vertex_uvs().unwrap().unwrap(), uvs);
    }
}
