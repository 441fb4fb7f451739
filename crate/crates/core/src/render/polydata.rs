//! Legacy ASCII polydata export of streamline centerlines, with the point
//! data needed for downstream tube rendering, plus a reader for round-trip
//! verification.

use std::fmt::Write as _;
use std::path::Path;

use crate::integrator::Hyperstreamline;
use crate::render::io::atomic_write;
use crate::render::Scene;
use crate::{Error, Result};

pub fn polydata_to_string(scene: &Scene) -> String {
    let lines: Vec<&Hyperstreamline> = scene
        .streamlines
        .iter()
        .filter(|l| l.samples.len() >= 2)
        .collect();
    let total: usize = lines.iter().map(|l| l.samples.len()).sum();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("nematic hyperstreamlines\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET POLYDATA\n");
    let _ = writeln!(out, "POINTS {total} double");
    for l in &lines {
        for s in &l.samples {
            let _ = writeln!(out, "{:.16e} {:.16e} 0.0", s.position[0], s.position[1]);
        }
    }
    let size: usize = lines.iter().map(|l| l.samples.len() + 1).sum();
    let _ = writeln!(out, "LINES {} {}", lines.len(), size);
    let mut base = 0;
    for l in &lines {
        let n = l.samples.len();
        let _ = write!(out, "{n}");
        for k in 0..n {
            let _ = write!(out, " {}", base + k);
        }
        out.push('\n');
        base += n;
    }
    let _ = writeln!(out, "POINT_DATA {total}");
    out.push_str("SCALARS lambda_n double 1\n");
    out.push_str("LOOKUP_TABLE default\n");
    for l in &lines {
        for s in &l.samples {
            let _ = writeln!(out, "{:.16e}", s.lam_n);
        }
    }
    out.push_str("VECTORS cross_axis double\n");
    for l in &lines {
        for s in &l.samples {
            let _ = writeln!(out, "{:.16e} {:.16e} 0.0", s.cross_axis[0], s.cross_axis[1]);
        }
    }
    out
}

pub fn write_polydata(scene: &Scene, path: &Path) -> Result<()> {
    atomic_write(path, &polydata_to_string(scene))
}

/// Parsed polydata content (reader counterpart of the writer above).
#[derive(Debug, Default)]
pub struct PolyData {
    pub points: Vec<[f64; 3]>,
    pub lines: Vec<Vec<usize>>,
    pub lambda_n: Vec<f64>,
    pub cross_axis: Vec<[f64; 3]>,
}

pub fn polydata_from_string(text: &str) -> Result<PolyData> {
    let err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.into(),
    };
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) != Some("# vtk DataFile Version 3.0") {
        return Err(err(1, "missing vtk header"));
    }
    if lines.get(2).map(|l| l.trim()) != Some("ASCII") {
        return Err(err(3, "expected ASCII"));
    }
    if lines.get(3).map(|l| l.trim()) != Some("DATASET POLYDATA") {
        return Err(err(4, "expected DATASET POLYDATA"));
    }
    let mut pd = PolyData::default();
    let mut k = 4;
    let parse_triplet = |ln: usize, s: &str| -> Result<[f64; 3]> {
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln + 1, "bad number"))?;
        if v.len() != 3 {
            return Err(err(ln + 1, "expected 3 components"));
        }
        Ok([v[0], v[1], v[2]])
    };
    while k < lines.len() {
        let line = lines[k].trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("POINTS") => {
                let n: usize = words
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(k + 1, "bad POINTS count"))?;
                for i in 0..n {
                    pd.points.push(parse_triplet(k + 1 + i, lines[k + 1 + i])?);
                }
                k += n + 1;
            }
            Some("LINES") => {
                let n: usize = words
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(k + 1, "bad LINES count"))?;
                for i in 0..n {
                    let row: Vec<usize> = lines[k + 1 + i]
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err(k + 2 + i, "bad index"))?;
                    let (&count, idx) = row
                        .split_first()
                        .ok_or_else(|| err(k + 2 + i, "empty line record"))?;
                    if idx.len() != count {
                        return Err(err(k + 2 + i, "line record length mismatch"));
                    }
                    pd.lines.push(idx.to_vec());
                }
                k += n + 1;
            }
            Some("POINT_DATA") => {
                k += 1;
            }
            Some("SCALARS") => {
                // LOOKUP_TABLE line, then one value per point
                let n = pd.points.len();
                for i in 0..n {
                    pd.lambda_n.push(
                        lines[k + 2 + i]
                            .trim()
                            .parse()
                            .map_err(|_| err(k + 3 + i, "bad scalar"))?,
                    );
                }
                k += n + 2;
            }
            Some("VECTORS") => {
                let n = pd.points.len();
                for i in 0..n {
                    pd.cross_axis.push(parse_triplet(k + 1 + i, lines[k + 1 + i])?);
                }
                k += n + 1;
            }
            Some(_) | None => {
                k += 1;
            }
        }
    }
    Ok(pd)
}

pub fn read_polydata(path: &Path) -> Result<PolyData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    polydata_from_string(&text)
}
