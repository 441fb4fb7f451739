//! Text formats: the .qtf tensor-field file and the template/seed JSON.
//! All writes are atomic (temp file in the destination directory, then
//! rename) and byte-deterministic.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::field::{GridSpec, TensorField};
use crate::seeding::{DirectionConstraint, SeedPoint};
use crate::tensor::AlignmentTensor;
use crate::topology::{
    CurveKind, DefectSite, TemplateCurve, TemplateGraph, TemplateParams, TopologicalTemplate,
};
use crate::{Error, Result};

const QTF_MAGIC: &str = "nemvis-qtf 1";

/// Write a string to `path` atomically.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serialize a field to the .qtf text format: a keyworded header followed by
/// one row per node (x fastest), 5 tensor components plus a mask bit.
/// Decimals carry 17 significant digits so doubles round-trip exactly.
pub fn field_to_string(field: &TensorField) -> Result<String> {
    let g = field.grid;
    let mut out = String::new();
    writeln!(out, "{QTF_MAGIC}").unwrap();
    writeln!(out, "grid {} {}", g.nx, g.ny).unwrap();
    writeln!(out, "spacing {:.16e} {:.16e}", g.dx, g.dy).unwrap();
    writeln!(out, "origin {:.16e} {:.16e}", g.ox, g.oy).unwrap();
    let has_mask = !field.has_full_mask();
    writeln!(out, "mask {}", has_mask as u8).unwrap();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let q = field.tensor_at(i, j);
            if !q.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "non-finite tensor at node ({i}, {j})"
                )));
            }
            write!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                q.qxx, q.qxy, q.qxz, q.qyy, q.qyz
            )
            .unwrap();
            if has_mask {
                write!(out, " {}", field.mask_at(i, j) as u8).unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn write_field(field: &TensorField, path: &Path) -> Result<()> {
    atomic_write(path, &field_to_string(field)?)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parse a .qtf document. Line numbers in errors are 1-based.
pub fn field_from_string(text: &str) -> Result<TensorField> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(k, l)| (k + 1, l))
            .ok_or_else(|| parse_err(text.lines().count() + 1, format!("missing {what}")))
    };
    let (ln, magic) = next("header")?;
    if magic.trim() != QTF_MAGIC {
        return Err(parse_err(ln, format!("bad magic, expected '{QTF_MAGIC}'")));
    }
    let (ln, grid_line) = next("grid line")?;
    let (nx, ny) = {
        let mut it = grid_line.split_whitespace();
        if it.next() != Some("grid") {
            return Err(parse_err(ln, "expected 'grid nx ny'"));
        }
        let nx: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad nx"))?;
        let ny: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad ny"))?;
        (nx, ny)
    };
    let parse_pair = |ln: usize, line: &str, key: &str| -> Result<(f64, f64)> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(parse_err(ln, format!("expected '{key} a b'")));
        }
        let a: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, format!("bad {key} value")))?;
        let b: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, format!("bad {key} value")))?;
        Ok((a, b))
    };
    let (ln_sp, sp_line) = next("spacing line")?;
    let (dx, dy) = parse_pair(ln_sp, sp_line, "spacing")?;
    let (ln_or, or_line) = next("origin line")?;
    let (ox, oy) = parse_pair(ln_or, or_line, "origin")?;
    let (ln_mask, mask_line) = next("mask line")?;
    let has_mask = match mask_line.trim() {
        "mask 0" => false,
        "mask 1" => true,
        _ => return Err(parse_err(ln_mask, "expected 'mask 0' or 'mask 1'")),
    };
    let grid = GridSpec {
        nx,
        ny,
        dx,
        dy,
        ox,
        oy,
    };
    grid.validate()
        .map_err(|e| parse_err(ln_sp, format!("invalid grid: {e}")))?;

    let want = 5 + if has_mask { 1 } else { 0 };
    let mut tensors = Vec::with_capacity(nx * ny);
    let mut mask = Vec::with_capacity(nx * ny);
    for row in 0..nx * ny {
        let (ln, line) = next(&format!("data row {} of {}", row + 1, nx * ny))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != want {
            return Err(parse_err(
                ln,
                format!("expected {want} fields, found {}", tokens.len()),
            ));
        }
        let mut vals = [0.0f64; 5];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = tokens[k]
                .parse()
                .map_err(|_| parse_err(ln, format!("bad number '{}'", tokens[k])))?;
            if !v.is_finite() {
                return Err(parse_err(ln, "non-finite value"));
            }
        }
        tensors.push(AlignmentTensor::new(
            vals[0], vals[1], vals[2], vals[3], vals[4],
        ));
        mask.push(if has_mask {
            match tokens[5] {
                "0" => false,
                "1" => true,
                t => return Err(parse_err(ln, format!("bad mask bit '{t}'"))),
            }
        } else {
            true
        });
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(ln + 1, format!("trailing data '{}'", extra.trim())));
    }
    TensorField::new(grid, tensors, mask)
}

pub fn read_field(path: &Path) -> Result<TensorField> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    field_from_string(&text)
}

// Template + seeds JSON document.

#[derive(Serialize, Deserialize)]
struct VertexJson {
    x: f64,
    y: f64,
    peak_cp: f64,
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    kind: CurveKind,
    closed: bool,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct SeedJson {
    x: f64,
    y: f64,
    curve: usize,
    s: f64,
    constraint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct TemplateJson {
    vertices: Vec<VertexJson>,
    edges: Vec<[usize; 2]>,
    curves: Vec<CurveJson>,
    params: TemplateParams,
    seeds: Vec<SeedJson>,
}

pub fn template_to_string(template: &TopologicalTemplate, seeds: &[SeedPoint]) -> String {
    let doc = TemplateJson {
        vertices: template
            .graph
            .vertices
            .iter()
            .map(|v| VertexJson {
                x: v.position[0],
                y: v.position[1],
                peak_cp: v.peak_cp,
            })
            .collect(),
        edges: template.graph.edges.iter().map(|&(i, j)| [i, j]).collect(),
        curves: template
            .curves
            .iter()
            .map(|c| CurveJson {
                kind: c.kind,
                closed: c.closed,
                points: c.points.clone(),
            })
            .collect(),
        params: template.params,
        seeds: seeds
            .iter()
            .map(|s| SeedJson {
                x: s.position[0],
                y: s.position[1],
                curve: s.curve_id,
                s: s.s,
                constraint: match s.constraint {
                    DirectionConstraint::Both => "both".into(),
                    DirectionConstraint::Outward { .. } => "outward".into(),
                },
                center: match s.constraint {
                    DirectionConstraint::Both => None,
                    DirectionConstraint::Outward { center } => Some(center),
                },
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("template serialization");
    text.push('\n');
    text
}

pub fn write_template(
    template: &TopologicalTemplate,
    seeds: &[SeedPoint],
    path: &Path,
) -> Result<()> {
    atomic_write(path, &template_to_string(template, seeds))
}

pub fn template_from_string(text: &str) -> Result<(TopologicalTemplate, Vec<SeedPoint>)> {
    let doc: TemplateJson = serde_json::from_str(text)?;
    let vertices: Vec<DefectSite> = doc
        .vertices
        .iter()
        .map(|v| DefectSite {
            position: [v.x, v.y],
            peak_cp: v.peak_cp,
            cluster_cells: 0,
        })
        .collect();
    for e in &doc.edges {
        if e[0] >= vertices.len() || e[1] >= vertices.len() {
            return Err(Error::InvalidParams(format!(
                "edge [{}, {}] references a missing vertex",
                e[0], e[1]
            )));
        }
    }
    let curves: Vec<TemplateCurve> = doc
        .curves
        .into_iter()
        .map(|c| {
            // owner vertex is not serialized; recover it for circles from
            // the nearest vertex to the curve centroid
            let owner = if c.kind == CurveKind::VertexCircle && !c.points.is_empty() {
                let n = c.points.len() as f64;
                let cx = c.points.iter().map(|p| p[0]).sum::<f64>() / n;
                let cy = c.points.iter().map(|p| p[1]).sum::<f64>() / n;
                vertices
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        let da = (a.position[0] - cx).powi(2) + (a.position[1] - cy).powi(2);
                        let db = (b.position[0] - cx).powi(2) + (b.position[1] - cy).powi(2);
                        da.partial_cmp(&db).unwrap()
                    })
                    .map(|(i, _)| i)
            } else {
                None
            };
            TemplateCurve {
                kind: c.kind,
                points: c.points,
                closed: c.closed,
                owner_vertex: owner,
            }
        })
        .collect();
    let seeds: Vec<SeedPoint> = doc
        .seeds
        .into_iter()
        .map(|s| {
            let constraint = match (s.constraint.as_str(), s.center) {
                ("both", _) => Ok(DirectionConstraint::Both),
                ("outward", Some(center)) => Ok(DirectionConstraint::Outward { center }),
                ("outward", None) => Err(Error::InvalidParams(
                    "outward seed without center".into(),
                )),
                (other, _) => Err(Error::InvalidParams(format!(
                    "unknown constraint '{other}'"
                ))),
            }?;
            Ok(SeedPoint {
                position: [s.x, s.y],
                curve_id: s.curve,
                s: s.s,
                constraint,
            })
        })
        .collect::<Result<_>>()?;
    Ok((
        TopologicalTemplate {
            graph: TemplateGraph {
                vertices,
                edges: doc.edges.iter().map(|e| (e[0], e[1])).collect(),
                warnings: Vec::new(),
            },
            curves,
            params: doc.params,
        },
        seeds,
    ))
}

pub fn read_template(path: &Path) -> Result<(TopologicalTemplate, Vec<SeedPoint>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    template_from_string(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::circle_mask;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_field(seed: u64) -> TensorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::unit_square(64);
        let mask_fn = circle_mask([0.5, 0.5], 0.45);
        let mut tensors = Vec::with_capacity(grid.nx * grid.ny);
        let mut mask = Vec::with_capacity(grid.nx * grid.ny);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                tensors.push(AlignmentTensor::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                ));
                mask.push(mask_fn(grid.node_pos(i, j)));
            }
        }
        TensorField::new(grid, tensors, mask).unwrap()
    }

    #[test]
    fn qtf_round_trip_is_exact() {
        let f = random_field(5);
        let text = field_to_string(&f).unwrap();
        let g = field_from_string(&text).unwrap();
        assert_eq!(f.grid.nx, g.grid.nx);
        assert!(f.grid.dx == g.grid.dx && f.grid.oy == g.grid.oy);
        for j in 0..f.grid.ny {
            for i in 0..f.grid.nx {
                let a = f.tensor_at(i, j);
                let b = g.tensor_at(i, j);
                assert!(a.qxx == b.qxx && a.qxy == b.qxy && a.qxz == b.qxz);
                assert!(a.qyy == b.qyy && a.qyz == b.qyz);
                assert_eq!(f.mask_at(i, j), g.mask_at(i, j));
            }
        }
        // and the re-serialization is byte-identical
        assert_eq!(text, field_to_string(&g).unwrap());
    }

    #[test]
    fn truncated_file_names_missing_row() {
        let f = random_field(6);
        let text = field_to_string(&f).unwrap();
        let cut: String = text.lines().take(100).collect::<Vec<_>>().join("\n");
        match field_from_string(&cut) {
            Err(Error::Parse { msg, .. }) => {
                assert!(msg.contains("data row 96"), "msg: {msg}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_headers_rejected() {
        assert!(matches!(
            field_from_string("not-a-qtf\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad_dx = format!(
            "{QTF_MAGIC}\ngrid 2 2\nspacing -1.0 1.0\norigin 0 0\nmask 0\n"
        );
        assert!(matches!(
            field_from_string(&bad_dx),
            Err(Error::Parse { line: 3, .. })
        ));
        let nonfinite = format!(
            "{QTF_MAGIC}\ngrid 2 2\nspacing 1.0 1.0\norigin 0 0\nmask 0\n0 0 0 0 0\nnan 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n"
        );
        assert!(matches!(
            field_from_string(&nonfinite),
            Err(Error::Parse { line: 7, .. })
        ));
    }

    #[test]
    fn template_json_round_trip() {
        use crate::topology::{build_graph, build_template};
        let f = TensorField::uniform(
            GridSpec::unit_square(64),
            AlignmentTensor::uniaxial_in_plane(0.6, 0.3),
        )
        .unwrap();
        let site = |x: f64, y: f64| DefectSite {
            position: [x, y],
            peak_cp: 0.9,
            cluster_cells: 7,
        };
        let graph = build_graph(&[site(0.3, 0.5), site(0.7, 0.5)]);
        let template = build_template(&f, &graph, 0.05).unwrap();
        let seeds = vec![
            SeedPoint {
                position: [0.3, 0.55],
                curve_id: 0,
                s: 0.1,
                constraint: DirectionConstraint::Outward { center: [0.3, 0.5] },
            },
            SeedPoint {
                position: [0.5, 0.5],
                curve_id: 2,
                s: 0.05,
                constraint: DirectionConstraint::Both,
            },
        ];
        let text = template_to_string(&template, &seeds);
        let (t2, s2) = template_from_string(&text).unwrap();
        assert_eq!(t2.graph.vertices.len(), 2);
        assert_eq!(t2.graph.edges, vec![(0, 1)]);
        assert_eq!(t2.curves.len(), template.curves.len());
        for (a, b) in template.curves.iter().zip(&t2.curves) {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.closed, b.closed);
            assert_eq!(a.points, b.points);
            assert_eq!(a.owner_vertex, b.owner_vertex);
        }
        assert_eq!(s2.len(), 2);
        assert_eq!(s2[0].constraint, seeds[0].constraint);
        assert_eq!(s2[1].constraint, DirectionConstraint::Both);
        // deterministic serialization
        assert_eq!(text, template_to_string(&t2, &s2));
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.qtf");
        let f = random_field(9);
        write_field(&f, &path).unwrap();
        let g = read_field(&path).unwrap();
        assert_eq!(f.grid.nx, g.grid.nx);
        assert!(!path.with_extension("tmp-write").exists());
    }
}
