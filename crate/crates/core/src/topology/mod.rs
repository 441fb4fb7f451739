//! Topological template construction: defect detection, the Delaunay
//! nearest-neighbor graph, and the curve set used for seeding (defect
//! circles plus trimmed graph edges, or the domain boundary when the field
//! is defect-free).

pub mod contour;
pub mod delaunay;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::TensorField;
use crate::tensor::{eigendecompose, to_modified, westin};
use crate::{Error, Result};

/// Isotropy threshold: near-isotropic (melted) cells also count as
/// degenerate, since a defect core may melt rather than turn biaxial.
pub const CS_DEGENERATE_THRESHOLD: f64 = 0.9;

/// Default biaxiality threshold for defect detection, calibrated so the
/// ansatz and relaxed test fields yield one cluster per core with no
/// spurious clusters. Cores of analytic ansatz fields carry a weaker
/// biaxial signature than relaxed ones (interpolation between uniaxial
/// nodes caps the sampled c_p), which pushes the calibrated value well
/// below 1.
pub const DEFAULT_CP_THRESHOLD: f64 = 0.3;

/// Detection evaluates the Westin metrics on a lattice this many times finer
/// than the grid: interpolation across an under-resolved core mixes
/// misaligned tensors into a strongly degenerate one, which makes detection
/// robust at coarse resolutions.
const DETECT_SUPERSAMPLE: usize = 3;

/// A detected degenerate region, reduced to a weighted centroid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectSite {
    pub position: [f64; 2],
    pub peak_cp: f64,
    pub cluster_cells: usize,
}

/// Undirected nearest-neighbor graph over defect sites.
#[derive(Clone, Debug, Default)]
pub struct TemplateGraph {
    pub vertices: Vec<DefectSite>,
    pub edges: Vec<(usize, usize)>,
    /// Notes about merged duplicate positions.
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    EdgeSegment,
    VertexCircle,
    Boundary,
}

/// One seeding curve of the template.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TemplateCurve {
    pub kind: CurveKind,
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owner_vertex: Option<usize>,
}

/// Parameters echoed into the template for downstream stages.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct TemplateParams {
    pub vertex_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

/// The full topological template: graph plus seeding curves.
#[derive(Clone, Debug)]
pub struct TopologicalTemplate {
    pub graph: TemplateGraph,
    pub curves: Vec<TemplateCurve>,
    pub params: TemplateParams,
}

/// Detect degenerate regions: connected components (8-neighborhood) of
/// supersampled lattice cells with c_p >= threshold (or c_s >= 0.9), each
/// reduced to its c_p-weighted centroid. Sites closer than two grid cells
/// are merged. Result is sorted by (y, x).
pub fn detect_defects(field: &TensorField, cp_threshold: f64) -> Result<Vec<DefectSite>> {
    if !(cp_threshold > 0.0 && cp_threshold < 1.0) {
        return Err(Error::InvalidParams(
            "cp threshold must be in (0, 1)".into(),
        ));
    }
    let g = field.grid;
    let k = DETECT_SUPERSAMPLE;
    let snx = (g.nx - 1) * k + 1;
    let sny = (g.ny - 1) * k + 1;
    let sdx = g.dx / k as f64;
    let sdy = g.dy / k as f64;

    // degeneracy score per sub-node; NaN marks out-of-domain
    let scores: Vec<(f32, f32)> = (0..sny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let field = &field;
            (0..snx).map(move |i| {
                let p = [g.ox + i as f64 * sdx, g.oy + j as f64 * sdy];
                let Some(q) = field.sample(p) else {
                    return (f32::NAN, f32::NAN);
                };
                match eigendecompose(&to_modified(&q)) {
                    Ok(e) => {
                        let w = westin(&e);
                        (w.c_p as f32, w.c_s as f32)
                    }
                    Err(_) => (f32::NAN, f32::NAN),
                }
            })
        })
        .collect();

    let flagged = |idx: usize| -> bool {
        let (cp, cs) = scores[idx];
        cp.is_finite() && (cp as f64 >= cp_threshold || cs as f64 >= CS_DEGENERATE_THRESHOLD)
    };

    // connected components via BFS over the 8-neighborhood
    let mut comp = vec![usize::MAX; snx * sny];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..snx * sny {
        if comp[start] != usize::MAX || !flagged(start) {
            continue;
        }
        let id = clusters.len();
        let mut cells = vec![start];
        comp[start] = id;
        let mut head = 0;
        while head < cells.len() {
            let c = cells[head];
            head += 1;
            let (ci, cj) = (c % snx, c / snx);
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = ci as i64 + di;
                    let nj = cj as i64 + dj;
                    if ni < 0 || nj < 0 || ni >= snx as i64 || nj >= sny as i64 {
                        continue;
                    }
                    let n = nj as usize * snx + ni as usize;
                    if comp[n] == usize::MAX && flagged(n) {
                        comp[n] = id;
                        cells.push(n);
                    }
                }
            }
        }
        clusters.push(cells);
    }

    // reduce each cluster to a weighted centroid
    let mut sites: Vec<DefectSite> = clusters
        .iter()
        .map(|cells| {
            let mut wsum = 0.0;
            let mut cx = 0.0;
            let mut cy = 0.0;
            let mut peak = 0.0f64;
            for &c in cells {
                let (ci, cj) = (c % snx, c / snx);
                let (cp, cs) = scores[c];
                let cp = cp as f64;
                let cs = cs as f64;
                peak = peak.max(cp);
                let w = cp.max(0.0) + if cs >= CS_DEGENERATE_THRESHOLD { cs } else { 0.0 };
                let w = w.max(1e-9);
                wsum += w;
                cx += w * (g.ox + ci as f64 * sdx);
                cy += w * (g.oy + cj as f64 * sdy);
            }
            DefectSite {
                position: [cx / wsum, cy / wsum],
                peak_cp: peak,
                cluster_cells: cells.len(),
            }
        })
        .collect();

    // merge sites closer than two grid cells
    let merge_dist = 2.0 * g.dx.max(g.dy);
    loop {
        let mut merged = false;
        'outer: for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                let d = ((sites[i].position[0] - sites[j].position[0]).powi(2)
                    + (sites[i].position[1] - sites[j].position[1]).powi(2))
                .sqrt();
                if d < merge_dist {
                    let (a, b) = (sites[i].clone(), sites[j].clone());
                    let wa = a.cluster_cells as f64;
                    let wb = b.cluster_cells as f64;
                    sites[i] = DefectSite {
                        position: [
                            (a.position[0] * wa + b.position[0] * wb) / (wa + wb),
                            (a.position[1] * wa + b.position[1] * wb) / (wa + wb),
                        ],
                        peak_cp: a.peak_cp.max(b.peak_cp),
                        cluster_cells: a.cluster_cells + b.cluster_cells,
                    };
                    sites.remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }

    sites.sort_by(|a, b| {
        (a.position[1], a.position[0])
            .partial_cmp(&(b.position[1], b.position[0]))
            .unwrap()
    });
    Ok(sites)
}

/// Build the nearest-neighbor graph over defect sites via Delaunay
/// triangulation. Duplicate positions (within 1e-12) are merged with a
/// warning record.
pub fn build_graph(defects: &[DefectSite]) -> TemplateGraph {
    let mut vertices: Vec<DefectSite> = Vec::new();
    let mut warnings = Vec::new();
    for d in defects {
        if let Some(existing) = vertices.iter().position(|v| {
            ((v.position[0] - d.position[0]).powi(2) + (v.position[1] - d.position[1]).powi(2))
                .sqrt()
                < 1e-12
        }) {
            warnings.push(format!(
                "duplicate defect at ({}, {}) merged into vertex {existing}",
                d.position[0], d.position[1]
            ));
            continue;
        }
        vertices.push(d.clone());
    }
    let positions: Vec<[f64; 2]> = vertices.iter().map(|v| v.position).collect();
    let edges = delaunay::delaunay_edges(&positions);
    TemplateGraph {
        vertices,
        edges,
        warnings,
    }
}

/// Extract boundary curves from the domain mask.
pub fn extract_boundary(field: &TensorField) -> Vec<TemplateCurve> {
    contour::mask_contours(field)
        .into_iter()
        .map(|c| TemplateCurve {
            kind: CurveKind::Boundary,
            points: c.points,
            closed: true,
            owner_vertex: None,
        })
        .collect()
}

/// Assemble the template: one circle per graph vertex plus each graph edge
/// trimmed to the endpoint circles, or the boundary contour when the graph
/// is empty. Curves are clipped against the mask and against every vertex
/// circle; edges fully inside the circles are dropped.
pub fn build_template(
    field: &TensorField,
    graph: &TemplateGraph,
    vertex_radius: f64,
) -> Result<TopologicalTemplate> {
    if !(vertex_radius > 0.0) {
        return Err(Error::InvalidParams("vertex radius must be positive".into()));
    }
    let g = field.grid;
    let params = TemplateParams {
        vertex_radius,
        ls: None,
        ratio: None,
    };
    let mut curves = Vec::new();

    if graph.vertices.is_empty() {
        let boundary = extract_boundary(field);
        if boundary.is_empty() {
            return Err(Error::EmptyTemplate);
        }
        curves.extend(boundary);
        return Ok(TopologicalTemplate {
            graph: graph.clone(),
            curves,
            params,
        });
    }

    let h = g.dx.min(g.dy);
    let circles: Vec<([f64; 2], f64)> = graph
        .vertices
        .iter()
        .map(|v| (v.position, vertex_radius))
        .collect();

    // vertex circles
    for (vi, v) in graph.vertices.iter().enumerate() {
        let segs = ((2.0 * std::f64::consts::PI * vertex_radius) / (h / 2.0)).ceil() as usize;
        let segs = segs.max(64);
        let pts: Vec<[f64; 2]> = (0..segs)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / segs as f64;
                [
                    v.position[0] + vertex_radius * t.cos(),
                    v.position[1] + vertex_radius * t.sin(),
                ]
            })
            .collect();
        // clip against the mask and against overlapping third-party circles:
        // keep the longest admissible run
        let ok: Vec<bool> = pts
            .iter()
            .map(|p| {
                field.sample(*p).is_some()
                    && circles.iter().enumerate().all(|(ci, (c, r))| {
                        ci == vi
                            || ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
                                >= r - 1e-9
                    })
            })
            .collect();
        if ok.iter().all(|&b| b) {
            curves.push(TemplateCurve {
                kind: CurveKind::VertexCircle,
                points: pts,
                closed: true,
                owner_vertex: Some(vi),
            });
        } else if let Some(run) = longest_run(&pts, &ok) {
            curves.push(TemplateCurve {
                kind: CurveKind::VertexCircle,
                points: run,
                closed: false,
                owner_vertex: Some(vi),
            });
        }
    }

    // trimmed edges
    for &(i, j) in &graph.edges {
        let a = graph.vertices[i].position;
        let b = graph.vertices[j].position;
        let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        if len <= 2.0 * vertex_radius + 1e-12 {
            continue; // fully inside the endpoint circles
        }
        let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let start = [a[0] + u[0] * vertex_radius, a[1] + u[1] * vertex_radius];
        let trimmed = len - 2.0 * vertex_radius;
        let n = ((trimmed / (h / 2.0)).ceil() as usize).max(3);
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|k| {
                let t = trimmed * k as f64 / n as f64;
                [start[0] + u[0] * t, start[1] + u[1] * t]
            })
            .collect();
        // clip against the mask and against third-party vertex circles
        let ok: Vec<bool> = pts
            .iter()
            .map(|p| {
                field.sample(*p).is_some()
                    && circles.iter().enumerate().all(|(ci, (c, r))| {
                        ci == i
                            || ci == j
                            || ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
                                >= r - 1e-9
                    })
            })
            .collect();
        for run in all_runs(&pts, &ok) {
            if run.len() >= 2 {
                curves.push(TemplateCurve {
                    kind: CurveKind::EdgeSegment,
                    points: run,
                    closed: false,
                    owner_vertex: None,
                });
            }
        }
    }

    Ok(TopologicalTemplate {
        graph: graph.clone(),
        curves,
        params,
    })
}

fn longest_run(pts: &[[f64; 2]], ok: &[bool]) -> Option<Vec<[f64; 2]>> {
    all_runs(pts, ok).into_iter().max_by_key(|r| r.len())
}

fn all_runs(pts: &[[f64; 2]], ok: &[bool]) -> Vec<Vec<[f64; 2]>> {
    let mut runs = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for (p, &good) in pts.iter().zip(ok) {
        if good {
            cur.push(*p);
        } else if !cur.is_empty() {
            runs.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{circle_mask, GridSpec, TensorField};
    use crate::field_gen::{ansatz_field, relax, Anchoring, DefectSpec, MaterialParams};
    use crate::tensor::AlignmentTensor;

    fn two_defect_relaxed(n: usize, ln: f64) -> (TensorField, [DefectSpec; 2]) {
        let p = MaterialParams::nematic_with_ln(ln);
        // phase pi/4 per defect makes the far field tangential, matching
        // the anchoring; a mismatched phase grows a biaxial boundary layer
        let defects = [
            DefectSpec {
                center: [0.35, 0.5],
                charge: 0.5,
                phase: std::f64::consts::FRAC_PI_4,
            },
            DefectSpec {
                center: [0.65, 0.5],
                charge: 0.5,
                phase: std::f64::consts::FRAC_PI_4,
            },
        ];
        let f = ansatz_field(
            GridSpec::unit_square(n),
            circle_mask([0.5, 0.5], 0.5),
            &defects,
            &p,
        )
        .unwrap();
        let (relaxed, _) = relax(
            &f,
            &p,
            &Anchoring::Tangential {
                center: [0.5, 0.5],
            },
            200,
            None,
        )
        .unwrap();
        (relaxed, defects)
    }

    #[test]
    fn uniform_field_has_no_defects() {
        let f = TensorField::uniform(
            GridSpec::unit_square(64),
            AlignmentTensor::uniaxial(0.6, [1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(detect_defects(&f, DEFAULT_CP_THRESHOLD).unwrap().is_empty());
    }

    #[test]
    fn detects_single_ansatz_defect() {
        let p = MaterialParams::nematic_with_ln(0.02);
        let f = ansatz_field(
            GridSpec::unit_square(128),
            |_| true,
            &[DefectSpec {
                center: [0.5, 0.5],
                charge: 0.5,
                phase: 0.0,
            }],
            &p,
        )
        .unwrap();
        let sites = detect_defects(&f, DEFAULT_CP_THRESHOLD).unwrap();
        assert_eq!(sites.len(), 1, "sites: {sites:?}");
        let d = ((sites[0].position[0] - 0.5).powi(2) + (sites[0].position[1] - 0.5).powi(2))
            .sqrt();
        assert!(d <= 2.0 * f.grid.dx, "site too far from core: {d}");
    }

    #[test]
    fn detects_two_relaxed_defects() {
        let (f, defects) = two_defect_relaxed(192, 0.02);
        let sites = detect_defects(&f, DEFAULT_CP_THRESHOLD).unwrap();
        assert_eq!(sites.len(), 2, "sites: {sites:?}");
        for spec in &defects {
            let best = sites
                .iter()
                .map(|s| {
                    ((s.position[0] - spec.center[0]).powi(2)
                        + (s.position[1] - spec.center[1]).powi(2))
                    .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 2.0 * f.grid.dx, "no site near {spec:?}: {best}");
        }
    }

    #[test]
    fn graph_trivial_cases() {
        assert!(build_graph(&[]).edges.is_empty());
        let site = |x: f64, y: f64| DefectSite {
            position: [x, y],
            peak_cp: 0.9,
            cluster_cells: 4,
        };
        let g1 = build_graph(&[site(0.2, 0.2)]);
        assert_eq!(g1.vertices.len(), 1);
        assert!(g1.edges.is_empty());
        let g2 = build_graph(&[site(0.2, 0.2), site(0.8, 0.7)]);
        assert_eq!(g2.edges, vec![(0, 1)]);
    }

    #[test]
    fn graph_merges_duplicates() {
        let site = |x: f64, y: f64| DefectSite {
            position: [x, y],
            peak_cp: 0.9,
            cluster_cells: 4,
        };
        let g = build_graph(&[site(0.2, 0.2), site(0.2, 0.2), site(0.8, 0.7)]);
        assert_eq!(g.vertices.len(), 2);
        assert_eq!(g.warnings.len(), 1);
    }

    #[test]
    fn template_boundary_fallback() {
        let f = TensorField::from_fn(
            GridSpec::unit_square(128),
            circle_mask([0.5, 0.5], 0.5),
            |_| AlignmentTensor::uniaxial(0.6, [1.0, 0.0, 0.0]),
        )
        .unwrap();
        let graph = build_graph(&[]);
        let t = build_template(&f, &graph, 0.05).unwrap();
        assert_eq!(t.curves.len(), 1);
        assert_eq!(t.curves[0].kind, CurveKind::Boundary);
        assert!(t.curves[0].closed);
    }

    #[test]
    fn template_two_circles_one_segment() {
        let site = |x: f64, y: f64| DefectSite {
            position: [x, y],
            peak_cp: 0.9,
            cluster_cells: 4,
        };
        let f = TensorField::from_fn(
            GridSpec::unit_square(128),
            circle_mask([0.5, 0.5], 0.5),
            |_| AlignmentTensor::uniaxial(0.6, [1.0, 0.0, 0.0]),
        )
        .unwrap();
        let graph = build_graph(&[site(0.35, 0.5), site(0.65, 0.5)]);
        let t = build_template(&f, &graph, 0.05).unwrap();
        let circles = t
            .curves
            .iter()
            .filter(|c| c.kind == CurveKind::VertexCircle)
            .count();
        let segments = t
            .curves
            .iter()
            .filter(|c| c.kind == CurveKind::EdgeSegment)
            .count();
        let boundaries = t
            .curves
            .iter()
            .filter(|c| c.kind == CurveKind::Boundary)
            .count();
        assert_eq!((circles, segments, boundaries), (2, 1, 0));
        // trimmed segment endpoints on the bounding circles
        let seg = t
            .curves
            .iter()
            .find(|c| c.kind == CurveKind::EdgeSegment)
            .unwrap();
        let d0 = ((seg.points[0][0] - 0.35).powi(2) + (seg.points[0][1] - 0.5).powi(2)).sqrt();
        let dn = {
            let p = seg.points.last().unwrap();
            ((p[0] - 0.65).powi(2) + (p[1] - 0.5).powi(2)).sqrt()
        };
        assert!((d0 - 0.05).abs() < 1e-9, "segment start off circle: {d0}");
        assert!((dn - 0.05).abs() < 1e-9, "segment end off circle: {dn}");
    }

    #[test]
    fn template_drops_overlapping_edge() {
        let site = |x: f64, y: f64| DefectSite {
            position: [x, y],
            peak_cp: 0.9,
            cluster_cells: 4,
        };
        let f = TensorField::uniform(
            GridSpec::unit_square(128),
            AlignmentTensor::uniaxial(0.6, [1.0, 0.0, 0.0]),
        )
        .unwrap();
        let graph = build_graph(&[site(0.45, 0.5), site(0.55, 0.5)]);
        let t = build_template(&f, &graph, 0.06).unwrap();
        assert_eq!(
            t.curves
                .iter()
                .filter(|c| c.kind == CurveKind::EdgeSegment)
                .count(),
            0
        );
        assert_eq!(
            t.curves
                .iter()
                .filter(|c| c.kind == CurveKind::VertexCircle)
                .count(),
            2
        );
    }

    #[test]
    fn curves_avoid_foreign_circles() {
        // three nearly-collinear defects: the long edge between the outer
        // pair must not cut through the middle vertex's circle
        let site = |x: f64, y: f64| DefectSite {
            position: [x, y],
            peak_cp: 0.9,
            cluster_cells: 4,
        };
        let f = TensorField::uniform(
            GridSpec::unit_square(128),
            AlignmentTensor::uniaxial(0.6, [1.0, 0.0, 0.0]),
        )
        .unwrap();
        let graph = build_graph(&[site(0.2, 0.5), site(0.5, 0.502), site(0.8, 0.5)]);
        let t = build_template(&f, &graph, 0.05).unwrap();
        for c in &t.curves {
            for p in &c.points {
                for (vi, v) in graph.vertices.iter().enumerate() {
                    if c.owner_vertex == Some(vi) {
                        continue;
                    }
                    let d = ((p[0] - v.position[0]).powi(2) + (p[1] - v.position[1]).powi(2))
                        .sqrt();
                    assert!(
                        d >= 0.05 - 1e-9,
                        "curve point {p:?} inside circle of vertex {vi}"
                    );
                }
            }
        }
    }
}
