use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpm"))
        .args(args)
        .env("BPM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_grid(path: &Path, f: impl Fn(f64, f64) -> (f64, f64)) {
    let n = 4;
    let mut s = String::new();
    for j in 0..=n {
        for i in 0..=n {
            let (u, v) = f(i as f64 / n as f64, j as f64 / n as f64);
            s += &format!("v {u} {v} 0\n");
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i + 1;
    for j in 0..n {
        for i in 0..n {
            s += &format!("f {} {} {}\n", id(i, j), id(i + 1, j), id(i + 1, j + 1));
            s += &format!("f {} {} {}\n", id(i, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    fs::write(path, s).unwrap();
}

fn parse_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn identity_query_returns_input() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("src.obj");
    write_grid(&src, |x, y| (x, y));
    let q = dir.path().join("q.csv");
    fs::write(&q, "face_id,x,y\n0,0.1,0.05\n5,0.4,0.3\n31,0.9,0.95\n").unwrap();
    for method in ["bpm", "pl", "proj"] {
        let out = dir.path().join(format!("{method}.csv"));
        let o = bpm(&[
            "interpolate",
            "--src",
            src.to_str().unwrap(),
            "--dst",
            src.to_str().unwrap(),
            "--method",
            method,
            "--query",
            q.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("face_id,x,y,u,v"));
        let rows = parse_rows(&text);
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert!((r[1] - r[3]).abs() < 1e-12 && (r[2] - r[4]).abs() < 1e-12, "{method}: {r:?}");
        }
    }
}

#[test]
fn query_on_similarity_matches_map() {
    let dir = TempDir::new().unwrap();
    let (src, dst) = (dir.path().join("a.obj"), dir.path().join("b.obj"));
    write_grid(&src, |x, y| (x, y));
    // z -> (1 + 2i) z + 3
    write_grid(&dst, |x, y| (x - 2.0 * y + 3.0, 2.0 * x + y));
    let q = dir.path().join("q.csv");
    fs::write(&q, "3,0.3,0.1\n17,0.6,0.55\n").unwrap();
    let o = bpm(&["interpolate", "--src", src.to_str().unwrap(), "--dst", dst.to_str().unwrap(), "--query", q.to_str().unwrap()]);
    assert!(o.status.success());
    for r in parse_rows(&stdout(&o)) {
        let (x, y) = (r[1], r[2]);
        assert!((r[3] - (x - 2.0 * y + 3.0)).abs() < 1e-12);
        assert!((r[4] - (2.0 * x + y)).abs() < 1e-12);
    }
}

#[test]
fn refined_surface_export_has_no_seams() {
    let dir = TempDir::new().unwrap();
    let o = bpm(&["corpus", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("seed: 1"));
    let out = dir.path().join("cap_refined.obj");
    let o = bpm(&["interpolate", "--src", dir.path().join("sphere-cap.obj").to_str().unwrap(), "--refine", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let (mut v, mut vt) = (0i64, 0i64);
    let mut faces = Vec::new();
    for line in text.lines() {
        match line.split_whitespace().next() {
            Some("v") => v += 1,
            Some("vt") => vt += 1,
            Some("f") => {
                let mut face = Vec::new();
                // every corner uses the same index for position and uv
                for corner in line.split_whitespace().skip(1) {
                    let mut it = corner.split('/');
                    let (a, b) = (it.next(), it.next());
                    assert_eq!(a, b);
                    face.push(a.unwrap().parse::<usize>().unwrap());
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    assert_eq!(v, vt);
    assert_eq!(faces.len(), 360 * 16);
    let mut edges = HashSet::new();
    for f in &faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    // a disk without seams
    assert_eq!(v - edges.len() as i64 + faces.len() as i64, 1);
}

#[test]
fn collapsed_target_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let (src, dst) = (dir.path().join("a.obj"), dir.path().join("b.obj"));
    write_grid(&src, |x, y| (x, y));
    // vertex (0.25, 0) lands on the origin and collapses the faces between them
    write_grid(&dst, |x, y| if (x, y) == (0.25, 0.0) { (0.0, 0.0) } else { (x, y) });
    let o = bpm(&["validate", "--src", src.to_str().unwrap(), "--dst", dst.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bpm(&["interpolate", "--src", "does-not-exist.obj", "--refine", "1", "--out", "x.obj"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bpm(&["compare", "--src", src.to_str().unwrap(), "--dst", src.to_str().unwrap(), "--levels", "9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_passes_on_identity_and_conformal_corpus() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("a.obj");
    write_grid(&src, |x, y| (x, y));
    let o = bpm(&["validate", "--src", src.to_str().unwrap(), "--dst", src.to_str().unwrap(), "--samples", "200", "--seed", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("seed: 7"));
    assert!(!stdout(&o).contains("FAIL"));

    let o = bpm(&["corpus", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_owned();
    let o = bpm(&["validate", "--src", &p("strip-cetm_src.obj"), "--dst", &p("strip-cetm_dst.obj"), "--samples", "200"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn compare_on_identity_reports_unit_qc() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("a.obj");
    write_grid(&src, |x, y| (x, y));
    let faces = dir.path().join("faces.csv");
    let o = bpm(&[
        "compare",
        "--src",
        src.to_str().unwrap(),
        "--dst",
        src.to_str().unwrap(),
        "--levels",
        "2",
        "--faces-csv",
        faces.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("interpolator,max_qc,mean_qc"));
    let names: Vec<_> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().to_owned()).collect();
    assert_eq!(names, ["discrete", "bpm", "pl", "proj"]);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let max: f64 = f[1].parse().unwrap();
        assert!((max - 1.0).abs() < 1e-9, "{line}");
    }
    assert_eq!(fs::read_to_string(&faces).unwrap().lines().count(), 1 + 3 * 32);
}

#[test]
fn render_writes_png() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("a.obj");
    write_grid(&src, |x, y| (x, y));
    for mode in ["pullback", "pushforward"] {
        let out = dir.path().join(format!("{mode}.png"));
        let o = bpm(&["render", "--src", src.to_str().unwrap(), "--dst", src.to_str().unwrap(), "--mode", mode, "--resolution", "32", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(fs::read(&out).unwrap().starts_with(b"\x89PNG"));
    }
}
