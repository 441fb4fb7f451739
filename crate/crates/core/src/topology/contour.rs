//! Marching-squares extraction of the domain-mask contour at the 0.5 level,
//! with the result inset so every contour point is strictly sampleable.

use crate::field::TensorField;

/// A closed mask contour. Outer boundaries are counterclockwise, hole
/// boundaries clockwise.
#[derive(Clone, Debug)]
pub struct MaskContour {
    pub points: Vec<[f64; 2]>,
    pub is_hole: bool,
}

/// Identifier of a grid edge carrying a contour crossing. `horizontal` edges
/// run from node (i, j) to (i+1, j); vertical from (i, j) to (i, j+1).
/// Indices are offset by one to accommodate the virtual out-of-domain ring.
type EdgeKey = (i64, i64, bool);

/// Extract all closed contours of the mask. The grid is padded with a
/// virtual outside ring so domains touching the grid border still close.
pub fn mask_contours(field: &TensorField) -> Vec<MaskContour> {
    let g = field.grid;
    let inside = |i: i64, j: i64| -> bool {
        if i < 0 || j < 0 || i >= g.nx as i64 || j >= g.ny as i64 {
            false
        } else {
            field.mask_at(i as usize, j as usize)
        }
    };
    // midpoint of a crossing edge, in world coordinates
    let edge_point = |key: EdgeKey| -> [f64; 2] {
        let (i, j, horizontal) = key;
        if horizontal {
            [g.ox + (i as f64 + 0.5) * g.dx, g.oy + j as f64 * g.dy]
        } else {
            [g.ox + i as f64 * g.dx, g.oy + (j as f64 + 0.5) * g.dy]
        }
    };

    // Per cell (lower-left node at (i, j), i/j from -1), connect crossing
    // edges. Cases follow the corner bitmask bl | br<<1 | tr<<2 | tl<<3.
    // Each connection is stored as an undirected link between edge keys.
    let mut links: std::collections::HashMap<EdgeKey, Vec<EdgeKey>> =
        std::collections::HashMap::new();
    let mut connect = |a: EdgeKey, b: EdgeKey| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };
    for j in -1..g.ny as i64 {
        for i in -1..g.nx as i64 {
            let bl = inside(i, j) as usize;
            let br = inside(i + 1, j) as usize;
            let tr = inside(i + 1, j + 1) as usize;
            let tl = inside(i, j + 1) as usize;
            let case = bl | br << 1 | tr << 2 | tl << 3;
            let bottom: EdgeKey = (i, j, true);
            let top: EdgeKey = (i, j + 1, true);
            let left: EdgeKey = (i, j, false);
            let right: EdgeKey = (i + 1, j, false);
            match case {
                0 | 15 => {}
                1 | 14 => connect(left, bottom),
                2 | 13 => connect(bottom, right),
                4 | 11 => connect(right, top),
                8 | 7 => connect(top, left),
                3 | 12 => connect(left, right),
                6 | 9 => connect(bottom, top),
                5 => {
                    // ambiguous saddle: split consistently
                    connect(left, bottom);
                    connect(right, top);
                }
                10 => {
                    connect(bottom, right);
                    connect(top, left);
                }
                _ => unreachable!(),
            }
        }
    }

    // stitch links into closed loops
    let mut visited: std::collections::HashSet<EdgeKey> = std::collections::HashSet::new();
    let mut keys: Vec<EdgeKey> = links.keys().copied().collect();
    keys.sort_unstable_by_key(|a| (a.1, a.0, a.2));
    let mut loops: Vec<Vec<EdgeKey>> = Vec::new();
    for start in keys {
        if visited.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start);
        let mut prev = start;
        let mut cur = start;
        loop {
            let nbrs = &links[&cur];
            let next = nbrs
                .iter()
                .copied()
                .find(|&k| k != prev && !visited.contains(&k))
                .or_else(|| {
                    // closing the loop back to the start
                    nbrs.iter().copied().find(|&k| k == start && chain.len() > 2)
                });
            match next {
                Some(k) if k == start => break,
                Some(k) => {
                    visited.insert(k);
                    chain.push(k);
                    prev = cur;
                    cur = k;
                }
                None => break, // defensive: open chain from a corrupt mask
            }
        }
        if chain.len() >= 3 {
            loops.push(chain);
        }
    }

    let raw: Vec<Vec<[f64; 2]>> = loops
        .iter()
        .map(|chain| {
            let mut pts: Vec<[f64; 2]> = chain.iter().map(|&k| edge_point(k)).collect();
            orient_ccw(&mut pts);
            pts
        })
        .collect();

    let mut out = Vec::new();
    for (li, chain) in raw.iter().enumerate() {
        let mut pts = chain.clone();
        // a loop nested inside an odd number of other loops bounds a hole
        let is_hole = raw
            .iter()
            .enumerate()
            .filter(|&(lj, other)| lj != li && point_in_polygon(pts[0], other))
            .count()
            % 2
            == 1;
        if is_hole {
            pts.reverse();
        }
        // loops along the virtual outside ring lie half a cell beyond the
        // grid; pull them onto the bounding box before the mask-driven inset
        let [xmin, ymin, xmax, ymax] = g.bbox();
        for p in pts.iter_mut() {
            p[0] = p[0].clamp(xmin, xmax);
            p[1] = p[1].clamp(ymin, ymax);
        }
        inset_into_domain(field, &mut pts);
        smooth_closed(&mut pts, 2);
        project_inside(field, &mut pts);
        out.push(MaskContour {
            points: pts,
            is_hole,
        });
    }
    // deterministic order: outer boundaries first, then by first point (y, x)
    out.sort_by(|a, b| {
        (a.is_hole, a.points[0][1], a.points[0][0])
            .partial_cmp(&(b.is_hole, b.points[0][1], b.points[0][0]))
            .unwrap()
    });
    out
}

fn signed_area(pts: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for k in 0..pts.len() {
        let a = pts[k];
        let b = pts[(k + 1) % pts.len()];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

fn orient_ccw(pts: &mut [[f64; 2]]) {
    if signed_area(pts) < 0.0 {
        pts.reverse();
    }
}

/// Even-odd ray-casting point-in-polygon test.
fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Move each point a fraction of a cell along the local inward direction
/// (ascending mask fraction), clamped to the grid bounding box.
fn inset_into_domain(field: &TensorField, pts: &mut [[f64; 2]]) {
    let g = field.grid;
    let h = 0.35 * g.dx.min(g.dy);
    let [xmin, ymin, xmax, ymax] = g.bbox();
    for p in pts.iter_mut() {
        let grad = mask_gradient(field, *p);
        let n = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
        if n > 1e-12 {
            p[0] += grad[0] / n * h;
            p[1] += grad[1] / n * h;
        }
        p[0] = p[0].clamp(xmin, xmax);
        p[1] = p[1].clamp(ymin, ymax);
    }
}

/// Central-difference gradient of the bilinear mask indicator.
fn mask_gradient(field: &TensorField, p: [f64; 2]) -> [f64; 2] {
    let g = field.grid;
    let hx = 0.25 * g.dx;
    let hy = 0.25 * g.dy;
    [
        (field.mask_fraction([p[0] + hx, p[1]]) - field.mask_fraction([p[0] - hx, p[1]])) / hx,
        (field.mask_fraction([p[0], p[1] + hy]) - field.mask_fraction([p[0], p[1] - hy])) / hy,
    ]
}

/// Light Laplacian smoothing of a closed polyline.
fn smooth_closed(pts: &mut [[f64; 2]], passes: usize) {
    let n = pts.len();
    if n < 4 {
        return;
    }
    for _ in 0..passes {
        let prev = pts.to_vec();
        for k in 0..n {
            let a = prev[(k + n - 1) % n];
            let b = prev[k];
            let c = prev[(k + 1) % n];
            pts[k] = [
                0.5 * b[0] + 0.25 * (a[0] + c[0]),
                0.5 * b[1] + 0.25 * (a[1] + c[1]),
            ];
        }
    }
}

/// Push any point that is not strictly sampleable along the mask gradient
/// until it is (bounded number of steps).
fn project_inside(field: &TensorField, pts: &mut [[f64; 2]]) {
    let g = field.grid;
    let step = 0.15 * g.dx.min(g.dy);
    let [xmin, ymin, xmax, ymax] = g.bbox();
    for p in pts.iter_mut() {
        for _ in 0..40 {
            if field.mask_fraction(*p) >= 0.55 && field.sample(*p).is_some() {
                break;
            }
            let grad = mask_gradient(field, *p);
            let n = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
            if n < 1e-12 {
                break;
            }
            p[0] = (p[0] + grad[0] / n * step).clamp(xmin, xmax);
            p[1] = (p[1] + grad[1] / n * step).clamp(ymin, ymax);
        }
    }
}
