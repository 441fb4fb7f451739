//! Seed-point distribution along template curves. Each curve is spline
//! parameterized by arc length; the local alignment weights the arc length
//! (transverse alignment counts fully, tangential alignment not at all), and
//! seeds are placed at equal weighted gaps.

mod spline;

use serde::{Deserialize, Serialize};

use crate::field::TensorField;
use crate::tensor::{eigendecompose, to_modified, westin};
use crate::topology::{CurveKind, TemplateCurve, TopologicalTemplate};
use crate::{Error, Result};
use spline::Spline1;

/// Degeneracy threshold below which the alignment direction is meaningless
/// and the weight defaults to 1 (maximally seeded).
pub const WEIGHT_CL_FLOOR: f64 = 0.05;

/// Minimum in-plane eigenvector norm; below this the projection to the plane
/// is unreliable and the weight defaults to 1.
pub const WEIGHT_INPLANE_FLOOR: f64 = 0.1;

/// Tolerance absorbed into the floor of the open-curve seed-count rule so a
/// weighted length that is an exact multiple of the spacing (up to
/// quadrature error) rounds to the intended count.
const ALPHA_EPS: f64 = 1e-9;

/// Resolution of the cumulative weighted-arclength table used for seed
/// placement.
const CUMULATIVE_TABLE_MIN: usize = 1024;

/// Spline parameterization of a template curve by arc length.
pub struct ParamCurve {
    sx: Spline1,
    sy: Spline1,
    /// cumulative arc length at each knot
    knot_s: Vec<f64>,
    /// knot parameter values (chord length)
    knot_u: Vec<f64>,
    total: f64,
    closed: bool,
}

/// How a hyperstreamline may leave a seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DirectionConstraint {
    Both,
    /// Trace only away from the given center (vertex-circle seeds).
    Outward { center: [f64; 2] },
}

/// A seed with its location on the owning curve.
#[derive(Clone, Debug)]
pub struct SeedPoint {
    pub position: [f64; 2],
    pub curve_id: usize,
    pub s: f64,
    pub constraint: DirectionConstraint,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SeedingParams {
    /// target hyperstreamline spacing l_s
    pub ls: f64,
    pub vertex_radius: f64,
    /// vertex/edge seed ratio: edge and boundary curves are seeded at
    /// ratio * ls, circles at ls
    pub ratio: f64,
}

impl SeedingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ls > 0.0 && self.ls.is_finite()) {
            return Err(Error::InvalidParams("ls must be positive".into()));
        }
        if !(self.vertex_radius > 0.0 && self.vertex_radius.is_finite()) {
            return Err(Error::InvalidParams("vertex radius must be positive".into()));
        }
        if !(self.ratio >= 1.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidParams("ratio must be >= 1".into()));
        }
        Ok(())
    }
}

/// Build the arc-length parameterization of a curve. Consecutive duplicate
/// points are dropped; open curves need >= 2 distinct points, closed >= 4.
pub fn parameterize(curve: &TemplateCurve) -> Result<ParamCurve> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        if pts
            .last()
            .is_none_or(|q: &[f64; 2]| dist(*q, *p) > 1e-12)
        {
            pts.push(*p);
        }
    }
    if curve.closed {
        // drop an explicitly repeated closing point; the spline re-adds it
        if pts.len() >= 2 && dist(pts[0], *pts.last().unwrap()) <= 1e-12 {
            pts.pop();
        }
        if pts.len() < 4 {
            return Err(Error::DegenerateCurve);
        }
        pts.push(pts[0]);
    } else if pts.len() < 2 {
        return Err(Error::DegenerateCurve);
    }

    // chord-length knots
    let mut u = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    u.push(0.0);
    for w in pts.windows(2) {
        acc += dist(w[0], w[1]);
        u.push(acc);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    let (sx, sy) = if curve.closed {
        (
            Spline1::periodic(u.clone(), xs),
            Spline1::periodic(u.clone(), ys),
        )
    } else {
        (Spline1::natural(u.clone(), xs), Spline1::natural(u.clone(), ys))
    };

    // arc length at knots by adaptive Gauss quadrature of the speed
    let speed = |t: f64| -> f64 {
        let dx = sx.deriv(t);
        let dy = sy.deriv(t);
        (dx * dx + dy * dy).sqrt()
    };
    let mut knot_s = Vec::with_capacity(u.len());
    knot_s.push(0.0);
    let mut total = 0.0;
    for w in u.windows(2) {
        total += adaptive_gauss(&speed, w[0], w[1], 1e-6);
        knot_s.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateCurve);
    }
    Ok(ParamCurve {
        sx,
        sy,
        knot_s,
        knot_u: u,
        total,
        closed: curve.closed,
    })
}

impl ParamCurve {
    pub fn total_length(&self) -> f64 {
        self.total
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn wrap(&self, s: f64) -> f64 {
        if self.closed {
            s.rem_euclid(self.total)
        } else {
            s.clamp(0.0, self.total)
        }
    }

    /// Spline parameter u for arc length s (Newton on the within-segment
    /// arc-length integral, seeded by local linear interpolation).
    fn u_of_s(&self, s: f64) -> f64 {
        let s = self.wrap(s);
        let k = match self.knot_s.partition_point(|&v| v <= s) {
            0 => 0,
            p => (p - 1).min(self.knot_s.len() - 2),
        };
        let ds = s - self.knot_s[k];
        let (u0, u1) = (self.knot_u[k], self.knot_u[k + 1]);
        let seg = self.knot_s[k + 1] - self.knot_s[k];
        let speed = |t: f64| -> f64 {
            let dx = self.sx.deriv(t);
            let dy = self.sy.deriv(t);
            (dx * dx + dy * dy).sqrt()
        };
        let mut u = u0 + (u1 - u0) * (ds / seg.max(1e-300)).clamp(0.0, 1.0);
        for _ in 0..12 {
            let f = gauss15(&speed, u0, u) - ds;
            let d = speed(u).max(1e-12);
            let step = f / d;
            u = (u - step).clamp(u0, u1);
            if step.abs() < 1e-13 * (u1 - u0).max(1e-300) {
                break;
            }
        }
        u
    }

    pub fn position(&self, s: f64) -> [f64; 2] {
        let u = self.u_of_s(s);
        [self.sx.eval(u), self.sy.eval(u)]
    }

    /// Unit tangent at arc length s.
    pub fn tangent(&self, s: f64) -> [f64; 2] {
        let u = self.u_of_s(s);
        let dx = self.sx.deriv(u);
        let dy = self.sy.deriv(u);
        let n = (dx * dx + dy * dy).sqrt().max(1e-300);
        [dx / n, dy / n]
    }
}

/// Seeding weight at arc length s: one minus the alignment between the curve
/// tangent and the in-plane major eigenvector. Degenerate or unsampleable
/// points weigh 1 (maximally seeded).
pub fn weight(pc: &ParamCurve, field: &TensorField, s: f64) -> f64 {
    let p = pc.position(s);
    let Some(q) = field.sample(p) else {
        return 1.0;
    };
    let Ok(e) = eigendecompose(&to_modified(&q)) else {
        return 1.0;
    };
    if westin(&e).c_l < WEIGHT_CL_FLOOR {
        return 1.0;
    }
    let nx = e.vec_n[0];
    let ny = e.vec_n[1];
    let norm = (nx * nx + ny * ny).sqrt();
    if norm < WEIGHT_INPLANE_FLOOR {
        return 1.0;
    }
    let t = pc.tangent(s);
    let dot = (t[0] * nx + t[1] * ny) / norm;
    (1.0 - dot.abs()).clamp(0.0, 1.0)
}

/// Weighted (renormalized) curve length S' = integral of the weight over
/// arc length, by adaptive Simpson quadrature.
pub fn renormalized_length(pc: &ParamCurve, field: &TensorField) -> f64 {
    let f = |s: f64| weight(pc, field, s);
    adaptive_simpson(&f, 0.0, pc.total_length(), 1e-4).max(0.0)
}

/// Place seeds along a curve at equal weighted gaps.
///
/// Open curves get `floor(S'/spacing) + 1` seeds with the residual split
/// evenly before the first and after the last seed; a single seed sits at
/// the weighted midpoint (geometric midpoint when S' = 0). Closed curves get
/// `round(S'/spacing)` seeds (at least one) anchored at s = 0.
pub fn place_seeds(pc: &ParamCurve, field: &TensorField, spacing: f64) -> Result<Vec<SeedPoint>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParams("seed spacing must be positive".into()));
    }
    let total = pc.total_length();
    // dense cumulative weighted arc length (piecewise linear in s)
    let n = CUMULATIVE_TABLE_MIN.max((4.0 * total / spacing).ceil() as usize);
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut prev_w = weight(pc, field, 0.0);
    let h = total / n as f64;
    let mut acc = 0.0;
    for k in 1..=n {
        let w = weight(pc, field, k as f64 * h);
        acc += 0.5 * (prev_w + w) * h;
        cum.push(acc);
        prev_w = w;
    }
    let s_prime = acc;

    let targets: Vec<f64> = if pc.is_closed() {
        let alpha = ((s_prime / spacing).round() as usize).max(1);
        let gap = s_prime / alpha as f64;
        (0..alpha).map(|k| k as f64 * gap).collect()
    } else {
        let alpha = ((s_prime / spacing + ALPHA_EPS).floor() as usize) + 1;
        if alpha == 1 {
            if s_prime <= 0.0 {
                // no transverse alignment anywhere: geometric midpoint
                return Ok(vec![seed_at(pc, total / 2.0)]);
            }
            vec![s_prime / 2.0]
        } else {
            let margin = (s_prime - (alpha - 1) as f64 * spacing) / 2.0;
            (0..alpha).map(|k| margin + k as f64 * spacing).collect()
        }
    };

    let tol = 1e-7 * total;
    Ok(targets
        .iter()
        .map(|&wt| seed_at(pc, invert_cumulative(&cum, h, wt, tol)))
        .collect())
}

fn seed_at(pc: &ParamCurve, s: f64) -> SeedPoint {
    SeedPoint {
        position: pc.position(s),
        curve_id: 0,
        s,
        constraint: DirectionConstraint::Both,
    }
}

/// Bisection on the piecewise-linear cumulative table for the arc length
/// whose weighted position equals `target`.
fn invert_cumulative(cum: &[f64], h: f64, target: f64, tol: f64) -> f64 {
    let n = cum.len() - 1;
    let total_s = n as f64 * h;
    let target = target.clamp(0.0, cum[n]);
    let eval = |s: f64| -> f64 {
        let f = (s / h).clamp(0.0, n as f64);
        let k = (f.floor() as usize).min(n - 1);
        let t = f - k as f64;
        cum[k] * (1.0 - t) + cum[k + 1] * t
    };
    let (mut lo, mut hi) = (0.0, total_s);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Seed every curve of a template: vertex circles at spacing l_s with
/// outward-only tracing, edge segments and boundary curves at ratio * l_s
/// tracing both ways. Curve order (and so seed order) is deterministic.
pub fn seed_template(
    template: &TopologicalTemplate,
    field: &TensorField,
    params: &SeedingParams,
) -> Result<Vec<SeedPoint>> {
    params.validate()?;
    let mut seeds = Vec::new();
    for (cid, curve) in template.curves.iter().enumerate() {
        let pc = parameterize(curve)?;
        let (spacing, constraint) = match curve.kind {
            CurveKind::VertexCircle => {
                let center = curve
                    .owner_vertex
                    .map(|v| template.graph.vertices[v].position)
                    .ok_or_else(|| {
                        Error::InvalidParams("vertex circle without owner vertex".into())
                    })?;
                (params.ls, DirectionConstraint::Outward { center })
            }
            CurveKind::EdgeSegment | CurveKind::Boundary => {
                (params.ratio * params.ls, DirectionConstraint::Both)
            }
        };
        for mut seed in place_seeds(&pc, field, spacing)? {
            seed.curve_id = cid;
            seed.constraint = constraint;
            seeds.push(seed);
        }
    }
    Ok(seeds)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// 15-point Gauss-Legendre quadrature on [a, b].
fn gauss15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 8] = [
        0.0,
        0.2011940939974345,
        0.3941513470775634,
        0.5709721726085388,
        0.724_417_731_360_17,
        0.8482065834104272,
        0.937_273_392_400_706,
        0.9879925180204854,
    ];
    const W: [f64; 8] = [
        0.2025782419255613,
        0.1984314853271116,
        0.1861610000155622,
        0.1662692058169939,
        0.1395706779261543,
        0.1071592204671719,
        0.0703660474881081,
        0.0307532419961173,
    ];
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let mut sum = W[0] * f(c);
    for k in 1..8 {
        sum += W[k] * (f(c - hw * X[k]) + f(c + hw * X[k]));
    }
    sum * hw
}

/// Adaptive Gauss quadrature by interval halving until the refinement stops
/// changing the panel value.
fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn recur(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss15(f, a, m);
        let right = gauss15(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= tol {
            left + right
        } else {
            recur(f, a, m, left, tol / 2.0, depth - 1)
                + recur(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    let whole = gauss15(f, a, b);
    recur(f, a, b, whole, rel_tol * whole.abs().max(1e-300), 20)
}

/// Adaptive Simpson quadrature with relative tolerance.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recur(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recur(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recur(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    // seed the recursion from a moderately fine uniform split so narrow
    // features away from panel midpoints are not missed
    let n = 64;
    let h = (b - a) / n as f64;
    let mut sum = 0.0;
    for k in 0..n {
        let x0 = a + k as f64 * h;
        let x1 = x0 + h;
        let fa = f(x0);
        let fm = f(0.5 * (x0 + x1));
        let fb = f(x1);
        let whole = simpson(fa, fm, fb, x0, x1);
        sum += recur(
            f,
            x0,
            x1,
            fa,
            fm,
            fb,
            whole,
            rel_tol * whole.abs().max(1e-12) / n as f64,
            16,
        );
    }
    sum
}
