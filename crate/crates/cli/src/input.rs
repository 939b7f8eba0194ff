use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use bpm_core::mesh::load_mesh;
use bpm_core::moebius::Complex;
use bpm_core::{BpmInterpolator, DiscreteMap, Interpolator, PlInterpolator, ProjectiveInterpolator, TriMesh};
use clap::ValueEnum;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bpm,
    Pl,
    Proj,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bpm, Method::Pl, Method::Proj];
}

/// Source mesh plus discrete map from either a second OBJ with the same
/// faces or the source's own texture coordinates.
pub fn load_input(src: &Path, dst: Option<&Path>) -> Result<(TriMesh, DiscreteMap), Failure> {
    let (mesh, uvs) = load_mesh(src)?;
    let map = match dst {
        Some(dst) => {
            let (target, _) = load_mesh(dst)?;
            if target.faces() != mesh.faces() || target.num_vertices() != mesh.num_vertices() {
                return Err(Failure::usage(anyhow::anyhow!(
                    "{} and {} do not share connectivity",
                    src.display(),
                    dst.display()
                )));
            }
            if !target.is_planar() {
                return Err(Failure::usage(anyhow::anyhow!("target mesh {} is not planar (z ≠ 0)", dst.display())));
            }
            DiscreteMap::new((0..target.num_vertices()).map(|v| target.point(v)).collect())?
        }
        None => uvs.ok_or_else(|| {
            Failure::usage(anyhow::anyhow!(
                "{} has no texture coordinates; pass --dst with a target mesh",
                src.display()
            ))
        })?,
    };
    log::info!(
        "{} vertices, {} faces, {}",
        mesh.num_vertices(),
        mesh.num_faces(),
        if mesh.is_planar() { "planar" } else { "surface" }
    );
    Ok((mesh, map))
}

pub fn build(method: Method, mesh: &TriMesh, map: &DiscreteMap) -> bpm_core::Result<Box<dyn Interpolator>> {
    Ok(match method {
        Method::Bpm => Box::new(BpmInterpolator::build(mesh, map)?),
        Method::Pl => Box::new(PlInterpolator::new(mesh, map)?),
        Method::Proj => Box::new(ProjectiveInterpolator::new(mesh, map)?),
    })
}

/// A query row: face id and a source point.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub face: usize,
    pub coords: Vec<f64>,
}

/// Reads `face_id,x,y[,z]` rows; a leading header row is skipped.
pub fn read_queries(reader: impl Read) -> anyhow::Result<Vec<Query>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if row == 0 && record.get(0).is_some_and(|f| f.parse::<usize>().is_err()) {
            continue;
        }
        if !(3..=4).contains(&record.len()) {
            bail!("line {line}: expected face_id,x,y[,z], got {} fields", record.len());
        }
        let face = record[0].parse().with_context(|| format!("line {line}: bad face id {:?}", &record[0]))?;
        let coords = record
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().with_context(|| format!("line {line}: bad coordinate {f:?}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        out.push(Query { face, coords });
    }
    Ok(out)
}

/// Image of a query point. Surface queries need all three coordinates.
pub fn evaluate_query(interp: &dyn Interpolator, q: &Query) -> Result<Complex, Failure> {
    let mesh = interp.mesh();
    if q.face >= mesh.num_faces() {
        return Err(Failure::usage(anyhow::anyhow!("face {} out of range ({} faces)", q.face, mesh.num_faces())));
    }
    if mesh.is_planar() {
        if q.coords.len() == 3 && q.coords[2] != 0.0 {
            return Err(Failure::usage(anyhow::anyhow!("planar mesh queried with z = {}", q.coords[2])));
        }
        Ok(interp.evaluate_point(q.face, Complex::new(q.coords[0], q.coords[1]))?)
    } else {
        let [x, y, z] = q.coords[..] else {
            return Err(Failure::usage(anyhow::anyhow!("surface queries need face_id,x,y,z")));
        };
        let bary = mesh.barycentric3(q.face, [x, y, z]);
        Ok(interp.evaluate_barycentric(q.face, bary)?)
    }
}

pub fn write_results(out: impl Write, queries: &[Query], images: &[Complex]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let three = queries.iter().any(|q| q.coords.len() == 3);
    if three {
        w.write_record(["face_id", "x", "y", "z", "u", "v"])?;
    } else {
        w.write_record(["face_id", "x", "y", "u", "v"])?;
    }
    for (q, img) in queries.iter().zip(images) {
        let mut row = vec![q.face.to_string()];
        row.extend(q.coords.iter().map(|c| format!("{c:.17e}")));
        if three && q.coords.len() == 2 {
            row.push("0".into());
        }
        row.push(format!("{:.17e}", img.re));
        row.push(format!("{:.17e}", img.im));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_parsing() {
        let q = read_queries("face_id,x,y\n0, 0.25, 0.5\n# note\n3,1,2,0\n".as_bytes()).unwrap();
        assert_eq!(
            q,
            vec![
                Query {
                    face: 0,
                    coords: vec![0.25, 0.5]
                },
                Query {
                    face: 3,
                    coords: vec![1.0, 2.0, 0.0]
                }
            ]
        );
        assert!(read_queries("0,1\n".as_bytes()).is_err());
        assert!(read_queries("0,1,x\n".as_bytes()).is_err());
    }
}
