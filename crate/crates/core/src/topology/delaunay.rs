//! Delaunay edge construction by incremental (Bowyer-Watson) insertion.
//! Point sets here are small (defect counts), so robustness matters more
//! than asymptotics; cocircular ties are broken with a scaled epsilon.

/// Edges of a Delaunay triangulation of the given points, as sorted index
/// pairs in lexicographic order. Collinear inputs degenerate to a
/// nearest-neighbor chain.
pub fn delaunay_edges(points: &[[f64; 2]]) -> Vec<(usize, usize)> {
    let n = points.len();
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => {
            if let Some(chain) = collinear_chain(points) {
                chain
            } else {
                bowyer_watson(points)
            }
        }
    }
}

fn scale_of(points: &[[f64; 2]]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    ((hi[0] - lo[0]).max(hi[1] - lo[1])).max(1e-300)
}

/// If all points are collinear (within a scaled tolerance), chain them in
/// order of projection onto the dominant direction.
fn collinear_chain(points: &[[f64; 2]]) -> Option<Vec<(usize, usize)>> {
    let scale = scale_of(points);
    // direction from the two most distant of the first few points
    let (mut ia, mut ib, mut best) = (0, 1, -1.0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = dist2(points[i], points[j]);
            if d > best {
                best = d;
                ia = i;
                ib = j;
            }
        }
    }
    let a = points[ia];
    let b = points[ib];
    let ux = b[0] - a[0];
    let uy = b[1] - a[1];
    for p in points {
        let cross = (p[0] - a[0]) * uy - (p[1] - a[1]) * ux;
        if cross.abs() > 1e-12 * scale * scale {
            return None;
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let ti = (points[i][0] - a[0]) * ux + (points[i][1] - a[1]) * uy;
        let tj = (points[j][0] - a[0]) * ux + (points[j][1] - a[1]) * uy;
        ti.partial_cmp(&tj).unwrap()
    });
    let mut edges: Vec<(usize, usize)> = order
        .windows(2)
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
        .collect();
    edges.sort_unstable();
    Some(edges)
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Is p strictly inside the circumcircle of the (counterclockwise) triangle
/// abc? Cocircular points (within the scaled epsilon) count as outside, so
/// either diagonal of a cocircular quad is accepted.
fn in_circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2], eps: f64) -> bool {
    let ax = a[0] - p[0];
    let ay = a[1] - p[1];
    let bx = b[0] - p[0];
    let by = b[1] - p[1];
    let cx = c[0] - p[0];
    let cy = c[1] - p[1];
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    det > eps
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn bowyer_watson(points: &[[f64; 2]]) -> Vec<(usize, usize)> {
    let scale = scale_of(points);
    let eps = 1e-12 * scale.powi(4);
    let mut cx = 0.0;
    let mut cy = 0.0;
    for p in points {
        cx += p[0];
        cy += p[1];
    }
    cx /= points.len() as f64;
    cy /= points.len() as f64;
    let r = 64.0 * scale;
    // super-triangle vertices appended after the real points
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    let s0 = pts.len();
    pts.push([cx - 2.0 * r, cy - r]);
    pts.push([cx + 2.0 * r, cy - r]);
    pts.push([cx, cy + 2.0 * r]);

    let mut tris: Vec<[usize; 3]> = vec![[s0, s0 + 1, s0 + 2]];
    for p_idx in 0..s0 {
        let p = pts[p_idx];
        let mut bad = Vec::new();
        for (t_idx, t) in tris.iter().enumerate() {
            let (a, b, c) = ccw(&pts, *t);
            if in_circumcircle(a, b, c, p, eps) {
                bad.push(t_idx);
            }
        }
        // boundary polygon = edges of bad triangles appearing exactly once
        let mut edge_count: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for &t_idx in &bad {
            let t = tris[t_idx];
            for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edge_count.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        for &t_idx in bad.iter().rev() {
            tris.swap_remove(t_idx);
        }
        let mut boundary: Vec<(usize, usize)> = edge_count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(e, _)| e)
            .collect();
        boundary.sort_unstable();
        for (u, v) in boundary {
            if u != p_idx && v != p_idx {
                tris.push([u, v, p_idx]);
            }
        }
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for t in &tris {
        if t.iter().any(|&v| v >= s0) {
            continue;
        }
        for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn ccw(pts: &[[f64; 2]], t: [usize; 3]) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
    if orient(a, b, c) >= 0.0 {
        (a, b, c)
    } else {
        (a, c, b)
    }
}

/// Brute-force Delaunay edge oracle: an edge (i, j) is accepted when some
/// third point k forms a triangle whose circumcircle contains no other point
/// strictly inside, or when n < 3. Used by tests as the independent check.
pub fn delaunay_edges_bruteforce(points: &[[f64; 2]]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 3 {
        return delaunay_edges(points);
    }
    if let Some(chain) = collinear_chain(points) {
        return chain;
    }
    let scale = scale_of(points);
    let eps = 1e-12 * scale.powi(4);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut ok = false;
            for k in 0..n {
                if k == i || k == j || orient(points[i], points[j], points[k]).abs() == 0.0 {
                    continue;
                }
                let (a, b, c) = ccw(points, [i, j, k]);
                let empty = (0..n)
                    .filter(|&m| m != i && m != j && m != k)
                    .all(|m| !in_circumcircle(a, b, c, points[m], eps));
                if empty {
                    ok = true;
                    break;
                }
            }
            if ok {
                edges.push((i, j));
            }
        }
    }
    edges
}
